//! Small dense linear-algebra helpers shared by the estimators.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative tolerance on the diagonal of R below which a design column is
/// treated as a linear combination of the columns before it.
const RANK_TOL: f64 = 1e-10;

/// Multi-response least-squares fit with a shared design.
#[derive(Debug, Clone)]
pub struct LeastSquares {
    /// p×m coefficients, one column per response.
    pub coef: DMatrix<f64>,
    /// T×m residuals.
    pub residuals: DMatrix<f64>,
    /// (X'X)^{-1}, p×p.
    pub xtx_inv: DMatrix<f64>,
}

/// Solve `y ≈ x·coef` by Householder QR. `names` labels the design columns
/// for collinearity diagnostics.
pub fn least_squares(x: &DMatrix<f64>, y: &DMatrix<f64>, names: &[String]) -> Result<LeastSquares> {
    let (t, p) = x.shape();
    if y.nrows() != t {
        return Err(Error::Shape(format!(
            "design has {t} rows but response has {}",
            y.nrows()
        )));
    }
    if t < p {
        return Err(Error::InsufficientData(format!(
            "{t} observations for {p} regressors"
        )));
    }
    let offending = dependent_columns(x);
    if !offending.is_empty() {
        let labels: Vec<String> = offending
            .iter()
            .map(|&j| names.get(j).cloned().unwrap_or_else(|| format!("column {j}")))
            .collect();
        return Err(Error::Collinearity(format!(
            "linearly dependent regressors: {}",
            labels.join(", ")
        )));
    }
    let qr = x.clone().qr();
    let r = qr.r();
    let qty = qr.q().transpose() * y;
    let coef = r
        .solve_upper_triangular(&qty)
        .ok_or_else(|| Error::Collinearity("singular R factor".into()))?;
    let r_inv = r
        .solve_upper_triangular(&DMatrix::identity(p, p))
        .ok_or_else(|| Error::Collinearity("singular R factor".into()))?;
    let xtx_inv = &r_inv * r_inv.transpose();
    let residuals = y - x * &coef;
    Ok(LeastSquares {
        coef,
        residuals,
        xtx_inv,
    })
}

/// Indices of design columns that are (numerically) spanned by earlier columns.
pub fn dependent_columns(x: &DMatrix<f64>) -> Vec<usize> {
    let (_, p) = x.shape();
    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(p);
    let mut out = Vec::new();
    for j in 0..p {
        let col = x.column(j).into_owned();
        let norm = col.norm();
        if norm == 0.0 {
            out.push(j);
            continue;
        }
        let mut v = col.clone();
        // two passes of classical Gram-Schmidt
        for _ in 0..2 {
            for q in &basis {
                let c = q.dot(&v);
                v.axpy(-c, q, 1.0);
            }
        }
        let rn = v.norm();
        if rn <= RANK_TOL.sqrt() * norm {
            out.push(j);
        } else {
            basis.push(v / rn);
        }
    }
    out
}

/// Eigen-decomposition of the symmetric-definite pencil `a v = λ b v` via
/// the Cholesky reduction `L^{-1} a L^{-T}`. Eigenvalues are returned in
/// descending order with eigenvectors normalised so that `V' b V = I`.
pub fn symmetric_generalized_eigen(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = a.nrows();
    let chol = b
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Collinearity("matrix is not positive definite".into()))?;
    let l = chol.l();
    let l_inv = l
        .solve_lower_triangular(&DMatrix::identity(n, n))
        .ok_or_else(|| Error::Collinearity("singular Cholesky factor".into()))?;
    let m = &l_inv * a * l_inv.transpose();
    let m = (&m + m.transpose()) * 0.5;
    let eig = m.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    let vectors = l_inv.transpose() * vectors;
    Ok((values, vectors))
}

/// Inverse of a symmetric positive-definite matrix.
pub fn spd_inverse(a: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    a.clone().cholesky().map(|c| c.inverse())
}

/// Largest eigenvalue of a symmetric matrix.
pub fn max_symmetric_eigenvalue(a: &DMatrix<f64>) -> f64 {
    a.clone()
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Empirical quantile with linear interpolation between order statistics
/// (the "type 7" definition). `sorted` must be ascending and non-empty.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn least_squares_recovers_exact_coefficients() {
        let x = DMatrix::from_fn(20, 2, |i, j| if j == 0 { 1.0 } else { i as f64 });
        let y = DMatrix::from_fn(20, 1, |i, _| 3.0 - 0.5 * i as f64);
        let fit = least_squares(&x, &y, &[]).unwrap();
        assert!((fit.coef[(0, 0)] - 3.0).abs() < 1e-12);
        assert!((fit.coef[(1, 0)] + 0.5).abs() < 1e-12);
        assert!(fit.residuals.norm() < 1e-10);
    }

    #[test]
    fn collinear_design_names_the_column() {
        let x = DMatrix::from_fn(10, 3, |i, j| match j {
            0 => 1.0,
            1 => i as f64,
            _ => 2.0 * i as f64 + 1.0,
        });
        let y = DMatrix::from_element(10, 1, 1.0);
        let names = vec!["const".into(), "trend".into(), "dup".into()];
        match least_squares(&x, &y, &names) {
            Err(Error::Collinearity(msg)) => assert!(msg.contains("dup"), "{msg}"),
            other => panic!("expected collinearity error, got {other:?}"),
        }
    }

    #[test]
    fn generalized_eigen_normalisation() {
        let b = DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]);
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.2, 0.2, 0.5]);
        let (vals, vecs) = symmetric_generalized_eigen(&a, &b).unwrap();
        assert!(vals[0] >= vals[1]);
        let gram = vecs.transpose() * &b * &vecs;
        assert!((gram - DMatrix::identity(2, 2)).norm() < 1e-12);
        for (i, lam) in vals.iter().enumerate() {
            let v = vecs.column(i);
            let resid = &a * v - (&b * v) * *lam;
            assert!(resid.norm() < 1e-12);
        }
    }

    #[test]
    fn quantile_interpolates() {
        let v = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(quantile_sorted(&v, 0.0), 1.0);
        assert_eq!(quantile_sorted(&v, 1.0), 5.0);
        assert!((quantile_sorted(&v, 0.5) - 3.0).abs() < 1e-15);
        assert!((quantile_sorted(&v, 0.1) - 1.4).abs() < 1e-12);
    }
}
