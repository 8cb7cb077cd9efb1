//! Newey–West (Bartlett kernel) heteroskedasticity and autocorrelation
//! consistent covariance for least-squares coefficients.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::spd_inverse;

/// Truncation lag `floor(4·(T/100)^{2/9})`.
pub fn newey_west_lags(t: usize) -> usize {
    (4.0 * (t as f64 / 100.0).powf(2.0 / 9.0)).floor() as usize
}

/// Sandwich covariance `(X'X)^{-1} Ŝ (X'X)^{-1}` with
/// `Ŝ = Σ_{|l|≤L} (1 − |l|/(L+1)) Σ_t x_t u_t u_{t−l} x_{t−l}'`.
pub fn newey_west_cov(x: &DMatrix<f64>, u: &DVector<f64>, lags: usize) -> Result<DMatrix<f64>> {
    let (t, p) = x.shape();
    if u.len() != t {
        return Err(Error::Shape(format!("{t} design rows vs {} residuals", u.len())));
    }
    for j in 0..p {
        if x.column(j).iter().all(|&v| v == 0.0) {
            return Err(Error::Degenerate(format!("regressor {j} is identically zero")));
        }
    }
    let xtx_inv = spd_inverse(&(x.transpose() * x))
        .ok_or_else(|| Error::Degenerate("singular X'X".into()))?;
    // scores g_t = x_t u_t as rows
    let mut g = x.clone();
    for (i, mut row) in g.row_iter_mut().enumerate() {
        row *= u[i];
    }
    let mut s = g.transpose() * &g;
    for l in 1..=lags.min(t.saturating_sub(1)) {
        let w = 1.0 - l as f64 / (lags as f64 + 1.0);
        let lead = g.rows(l, t - l);
        let lag = g.rows(0, t - l);
        let gamma = lead.transpose() * lag;
        s += (&gamma + gamma.transpose()) * w;
    }
    Ok(&xtx_inv * s * &xtx_inv)
}

/// HAC standard errors for every coefficient of a multi-equation fit with a
/// shared design: p×m, one column per equation.
pub fn hac_se(x: &DMatrix<f64>, residuals: &DMatrix<f64>, lags: usize) -> Result<DMatrix<f64>> {
    let (p, m) = (x.ncols(), residuals.ncols());
    let mut out = DMatrix::zeros(p, m);
    for eq in 0..m {
        let cov = newey_west_cov(x, &residuals.column(eq).into_owned(), lags)?;
        for j in 0..p {
            out[(j, eq)] = cov[(j, j)].max(0.0).sqrt();
        }
    }
    Ok(out)
}

/// Classical `σ̂²(X'X)^{-1}` standard errors with `σ̂² = SSR/(T − dof)`.
pub fn classical_se(x: &DMatrix<f64>, u: &DVector<f64>, dof: usize) -> Result<DVector<f64>> {
    let t = x.nrows();
    let xtx_inv = spd_inverse(&(x.transpose() * x))
        .ok_or_else(|| Error::Degenerate("singular X'X".into()))?;
    let s2 = u.norm_squared() / (t - dof) as f64;
    Ok(DVector::from_fn(x.ncols(), |j, _| (s2 * xtx_inv[(j, j)]).sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::least_squares;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn truncation_rule() {
        assert_eq!(newey_west_lags(100), 4);
        assert_eq!(newey_west_lags(600), 5);
        assert_eq!(newey_west_lags(50), 3);
    }

    #[test]
    fn lag_zero_intercept_only_equals_classical_ml_se() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let t = 200;
        let y: Vec<f64> = (0..t).map(|_| StandardNormal.sample(&mut rng)).collect();
        let mean = y.iter().sum::<f64>() / t as f64;
        let u = DVector::from_iterator(t, y.iter().map(|v| v - mean));
        let x = DMatrix::from_element(t, 1, 1.0);
        let hac = newey_west_cov(&x, &u, 0).unwrap()[(0, 0)].sqrt();
        // dof 0 gives the ML variance estimate
        let classical = classical_se(&x, &u, 0).unwrap()[0];
        assert!((hac - classical).abs() < 1e-10 * classical);
    }

    #[test]
    fn lag_zero_close_to_classical_under_iid_errors() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let t = 5000;
        let x = DMatrix::from_fn(t, 2, |_, j| if j == 0 { 1.0 } else { StandardNormal.sample(&mut rng) });
        let e: Vec<f64> = (0..t).map(|_| StandardNormal.sample(&mut rng)).collect();
        let y = DMatrix::from_fn(t, 1, |i, _| 1.0 + 0.5 * x[(i, 1)] + e[i]);
        let fit = least_squares(&x, &y, &[]).unwrap();
        let u = fit.residuals.column(0).into_owned();
        let hac = hac_se(&x, &fit.residuals, 0).unwrap();
        let cls = classical_se(&x, &u, 2).unwrap();
        for j in 0..2 {
            assert!((hac[(j, 0)] / cls[j] - 1.0).abs() < 0.05);
        }
    }

    #[test]
    fn scaling_data_scales_se_consistently() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let t = 300;
        let z: Vec<f64> = (0..t).map(|_| StandardNormal.sample(&mut rng)).collect();
        let e: Vec<f64> = (0..t).map(|_| StandardNormal.sample(&mut rng)).collect();
        let build = |c: f64| {
            let x = DMatrix::from_fn(t, 2, |i, j| if j == 0 { 1.0 } else { c * z[i] });
            let y = DMatrix::from_fn(t, 1, |i, _| c * (0.3 + 0.7 * z[i] + e[i]));
            let fit = least_squares(&x, &y, &[]).unwrap();
            hac_se(&x, &fit.residuals, 5).unwrap()
        };
        let a = build(1.0);
        let b = build(2.0);
        // slope s.e. unchanged, intercept s.e. doubles
        assert!((b[(1, 0)] - a[(1, 0)]).abs() < 1e-12 * a[(1, 0)].max(1.0));
        assert!((b[(0, 0)] - 2.0 * a[(0, 0)]).abs() < 1e-12);
    }

    #[test]
    fn zero_regressor_is_degenerate() {
        let x = DMatrix::from_fn(10, 2, |i, j| if j == 0 { 1.0 } else { 0.0 * i as f64 });
        let u = DVector::from_element(10, 0.1);
        assert!(matches!(newey_west_cov(&x, &u, 1), Err(Error::Degenerate(_))));
    }
}
