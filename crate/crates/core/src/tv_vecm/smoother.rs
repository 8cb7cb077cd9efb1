//! Penalised least squares for regressions with random-walk coefficients.
//!
//! For a shared design `x_t` (p-vector) and responses `y_t` (m-vector), find
//! the coefficient path `θ_1..θ_N` (each p×m) minimising
//!
//! ```text
//! Σ_t ‖y_t − θ_t' x_t‖² + λ Σ_{t≥2} ‖θ_t − θ_{t−1}‖²
//! ```
//!
//! θ_1 is not anchored (diffuse start). The normal equations are block
//! tridiagonal with p×p blocks; every response column shares the same
//! matrix, so one factorisation serves all equations.

use nalgebra::{Cholesky, DMatrix, Dyn};

use crate::error::{Error, Result};

/// Solution of the penalised path problem.
#[derive(Debug, Clone)]
pub struct PathSolution {
    /// θ_t for every period, p×m.
    pub theta: Vec<DMatrix<f64>>,
    /// `log det A` of the p·N × p·N normal matrix.
    pub log_det_normal: f64,
}

fn check_inputs(x: &DMatrix<f64>, y: &DMatrix<f64>, lambda: f64) -> Result<()> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::Parameter(format!(
            "smoothing ratio must be positive and finite, got {lambda}"
        )));
    }
    if x.nrows() != y.nrows() {
        return Err(Error::Shape(format!(
            "{} design rows vs {} response rows",
            x.nrows(),
            y.nrows()
        )));
    }
    if x.nrows() == 0 {
        return Err(Error::InsufficientData("empty sample".into()));
    }
    Ok(())
}

fn chol(m: DMatrix<f64>, what: &str) -> Result<Cholesky<f64, Dyn>> {
    m.cholesky()
        .ok_or_else(|| Error::Collinearity(format!("{what} is not positive definite")))
}

fn log_det(c: &Cholesky<f64, Dyn>) -> f64 {
    2.0 * c.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>()
}

/// Forward elimination in information form followed by back substitution.
///
/// Forward: `J_t = λ(J_{t−1} + λI)^{-1} J_{t−1} + x_t x_t'`,
/// `h_t = λ(J_{t−1} + λI)^{-1} h_{t−1} + x_t y_t'`.
/// Backward: `θ_N = J_N^{-1} h_N`, `θ_t = (J_t + λI)^{-1}(h_t + λ θ_{t+1})`.
pub fn solve_path(x: &DMatrix<f64>, y: &DMatrix<f64>, lambda: f64) -> Result<PathSolution> {
    check_inputs(x, y, lambda)?;
    let (n, p) = x.shape();
    let m = y.ncols();
    let eye = DMatrix::<f64>::identity(p, p);
    let mut pivots: Vec<Cholesky<f64, Dyn>> = Vec::with_capacity(n);
    let mut hs: Vec<DMatrix<f64>> = Vec::with_capacity(n);
    let mut j = DMatrix::<f64>::zeros(p, p);
    let mut h = DMatrix::<f64>::zeros(p, m);
    let mut log_det_normal = 0.0;
    for t in 0..n {
        if t > 0 {
            let c = pivots.last().expect("previous pivot");
            let jp = c.solve(&j) * lambda;
            j = (&jp + jp.transpose()) * 0.5;
            h = c.solve(&h) * lambda;
        }
        let xt = x.row(t).transpose();
        j.ger(1.0, &xt, &xt, 1.0);
        h.ger(1.0, &xt, &y.row(t).transpose(), 1.0);
        if t + 1 < n {
            let c = chol(&j + &eye * lambda, "forward pivot")?;
            log_det_normal += log_det(&c);
            pivots.push(c);
        } else {
            let c = chol(j.clone(), "terminal information matrix (regressors are collinear over the sample)")?;
            log_det_normal += log_det(&c);
            pivots.push(c);
        }
        hs.push(h.clone());
    }
    let mut theta = vec![DMatrix::zeros(p, m); n];
    theta[n - 1] = pivots[n - 1].solve(&hs[n - 1]);
    for t in (0..n - 1).rev() {
        let rhs = &hs[t] + &theta[t + 1] * lambda;
        theta[t] = pivots[t].solve(&rhs);
    }
    Ok(PathSolution {
        theta,
        log_det_normal,
    })
}

/// Symmetric positive-definite band matrix in lower band storage:
/// `band[(d, j)]` holds `A[j + d, j]` for `d` in `0..=kd`.
#[derive(Debug, Clone)]
pub struct BandMatrix {
    pub n: usize,
    pub kd: usize,
    band: DMatrix<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, kd: usize) -> Self {
        BandMatrix {
            n,
            kd,
            band: DMatrix::zeros(kd + 1, n),
        }
    }

    /// Adds `v` to `A[i, j]` (and its mirror); `|i − j| ≤ kd` required.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let (hi, lo) = if i >= j { (i, j) } else { (j, i) };
        debug_assert!(hi - lo <= self.kd);
        self.band[(hi - lo, lo)] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (hi, lo) = if i >= j { (i, j) } else { (j, i) };
        if hi - lo > self.kd {
            0.0
        } else {
            self.band[(hi - lo, lo)]
        }
    }

    /// In-place banded Cholesky `A = L L'`; returns `log det A`.
    pub fn factor(&mut self) -> Result<f64> {
        let (n, kd) = (self.n, self.kd);
        let mut log_det = 0.0;
        for j in 0..n {
            let mut d = self.band[(0, j)];
            let k0 = j.saturating_sub(kd);
            for k in k0..j {
                let l = self.band[(j - k, k)];
                d -= l * l;
            }
            if !(d > 0.0) {
                return Err(Error::Collinearity(format!(
                    "band matrix not positive definite at pivot {j}"
                )));
            }
            let djj = d.sqrt();
            self.band[(0, j)] = djj;
            log_det += 2.0 * djj.ln();
            for i in j + 1..=(j + kd).min(n - 1) {
                let mut s = self.band[(i - j, j)];
                let k0 = i.saturating_sub(kd);
                for k in k0..j {
                    s -= self.band[(i - k, k)] * self.band[(j - k, k)];
                }
                self.band[(i - j, j)] = s / djj;
            }
        }
        Ok(log_det)
    }

    /// Solves with the factor produced by [`BandMatrix::factor`].
    pub fn solve_factored(&self, rhs: &mut DMatrix<f64>) {
        let (n, kd) = (self.n, self.kd);
        for c in 0..rhs.ncols() {
            for i in 0..n {
                let mut s = rhs[(i, c)];
                for k in i.saturating_sub(kd)..i {
                    s -= self.band[(i - k, k)] * rhs[(k, c)];
                }
                rhs[(i, c)] = s / self.band[(0, i)];
            }
            for i in (0..n).rev() {
                let mut s = rhs[(i, c)];
                for k in i + 1..=(i + kd).min(n - 1) {
                    s -= self.band[(k - i, i)] * rhs[(k, c)];
                }
                rhs[(i, c)] = s / self.band[(0, i)];
            }
        }
    }
}

/// Assembles the full block-tridiagonal normal equations and solves them by
/// banded Cholesky. Independent of [`solve_path`]; used to cross-check it.
pub fn solve_path_banded(x: &DMatrix<f64>, y: &DMatrix<f64>, lambda: f64) -> Result<PathSolution> {
    check_inputs(x, y, lambda)?;
    let (n, p) = x.shape();
    let m = y.ncols();
    let dim = n * p;
    let mut a = BandMatrix::zeros(dim, 2 * p - 1);
    let mut rhs = DMatrix::zeros(dim, m);
    for t in 0..n {
        let base = t * p;
        let touching = (t > 0) as usize + (t + 1 < n) as usize;
        for i in 0..p {
            for j in 0..=i {
                a.add(base + i, base + j, x[(t, i)] * x[(t, j)]);
            }
            a.add(base + i, base + i, lambda * touching as f64);
            if t > 0 {
                a.add(base + i, base - p + i, -lambda);
            }
            for c in 0..m {
                rhs[(base + i, c)] = x[(t, i)] * y[(t, c)];
            }
        }
    }
    let log_det_normal = a.factor()?;
    a.solve_factored(&mut rhs);
    let theta = (0..n)
        .map(|t| rhs.rows(t * p, p).into_owned())
        .collect();
    Ok(PathSolution {
        theta,
        log_det_normal,
    })
}

/// `Σ_t ‖θ_t − θ_{t−1}‖²`.
pub fn path_roughness(theta: &[DMatrix<f64>]) -> f64 {
    theta
        .windows(2)
        .map(|w| (&w[1] - &w[0]).norm_squared())
        .sum()
}
