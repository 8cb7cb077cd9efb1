//! Hansen's joint Lc test of parameter constancy (coefficients and error
//! variance) against martingale parameter variation.

use nalgebra::{DMatrix, DVector};
use statrs::distribution::{ContinuousCDF, Gamma};

use crate::error::{Error, Result};

/// Asymptotic critical values of the joint Lc statistic for 1..=20
/// parameters at the 10%, 5% and 1% levels.
const LC_TABLE: [[f64; 3]; 20] = [
    [0.353, 0.470, 0.748],
    [0.610, 0.749, 1.07],
    [0.846, 1.01, 1.35],
    [1.07, 1.24, 1.60],
    [1.28, 1.47, 1.88],
    [1.49, 1.68, 2.12],
    [1.69, 1.90, 2.35],
    [1.89, 2.11, 2.59],
    [2.10, 2.32, 2.82],
    [2.29, 2.54, 3.05],
    [2.49, 2.75, 3.27],
    [2.69, 2.96, 3.51],
    [2.89, 3.15, 3.69],
    [3.08, 3.34, 3.90],
    [3.26, 3.54, 4.07],
    [3.46, 3.75, 4.30],
    [3.64, 3.95, 4.51],
    [3.83, 4.14, 4.73],
    [4.03, 4.33, 4.92],
    [4.22, 4.52, 5.12],
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LcLevel {
    Ten,
    Five,
    One,
}

impl LcLevel {
    fn column(self) -> usize {
        match self {
            LcLevel::Ten => 0,
            LcLevel::Five => 1,
            LcLevel::One => 2,
        }
    }

    fn upper_tail(self) -> f64 {
        match self {
            LcLevel::Ten => 0.10,
            LcLevel::Five => 0.05,
            LcLevel::One => 0.01,
        }
    }
}

/// Critical value for `params` jointly tested parameters. Beyond the table
/// the limit law `Σ_j ∫ B_j²` (Brownian bridges) is approximated by a gamma
/// distribution with mean `m/6` and variance `m/45`.
pub fn lc_critical_value(params: usize, level: LcLevel) -> f64 {
    assert!(params >= 1, "at least one parameter");
    if let Some(row) = LC_TABLE.get(params - 1) {
        return row[level.column()];
    }
    let m = params as f64;
    let shape = 1.25 * m;
    let rate = 7.5;
    let g = Gamma::new(shape, rate).expect("valid gamma parameters");
    g.inverse_cdf(1.0 - level.upper_tail())
}

/// Lc for one equation: scores `f_t = (x_t ε_t, ε_t² − σ̂²)`, partial sums
/// `S_t`, `Lc = tr(V^{-1} Σ S_t S_t') / T` with `V = Σ f_t f_t'`.
pub fn hansen_lc_equation(x: &DMatrix<f64>, e: &DVector<f64>) -> Result<f64> {
    let (t, p) = x.shape();
    if e.len() != t {
        return Err(Error::Shape(format!("{t} design rows vs {} residuals", e.len())));
    }
    let sigma2 = e.norm_squared() / t as f64;
    let dim = p + 1;
    let mut f = DMatrix::zeros(t, dim);
    for i in 0..t {
        for j in 0..p {
            f[(i, j)] = x[(i, j)] * e[i];
        }
        f[(i, p)] = e[i] * e[i] - sigma2;
    }
    let v = f.transpose() * &f;
    let chol = v
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Conditioning("score covariance V is not positive definite".into()))?;
    let diag = chol.l().diagonal();
    let (dmin, dmax) = diag
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), d| (lo.min(*d), hi.max(*d)));
    if dmin <= 0.0 || (dmin / dmax).powi(2) < 1e-14 {
        return Err(Error::Conditioning(format!(
            "score covariance V is near-singular (diagonal ratio {:.2e})",
            (dmin / dmax).powi(2)
        )));
    }
    let mut cum = DVector::zeros(dim);
    let mut sst = DMatrix::zeros(dim, dim);
    for i in 0..t {
        cum += f.row(i).transpose();
        sst.ger(1.0, &cum, &cum, 1.0);
    }
    let solved = chol.solve(&sst);
    Ok(solved.trace() / t as f64)
}

/// Joint Lc summed over equations sharing the design `x`.
pub fn hansen_lc(x: &DMatrix<f64>, residuals: &DMatrix<f64>) -> Result<f64> {
    (0..residuals.ncols())
        .map(|j| hansen_lc_equation(x, &residuals.column(j).into_owned()))
        .sum()
}
