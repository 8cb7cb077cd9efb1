//! Johansen reduced-rank analysis with the constant restricted to the
//! cointegration space.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::design::VecmDesign;
use crate::error::{Error, Result};
use crate::linalg::{least_squares, spd_inverse, symmetric_generalized_eigen};
use crate::series::LogPanel;

/// Osterwald-Lenum critical values for the restricted-constant case,
/// indexed by the number of common trends `n − r` (1..=4).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JohansenCriticalValues {
    pub max_eigen_5: f64,
    pub max_eigen_1: f64,
    pub trace_5: f64,
    pub trace_1: f64,
}

const RESTRICTED_CONSTANT_CV: [JohansenCriticalValues; 4] = [
    JohansenCriticalValues { max_eigen_5: 9.24, max_eigen_1: 12.97, trace_5: 9.24, trace_1: 12.97 },
    JohansenCriticalValues { max_eigen_5: 15.67, max_eigen_1: 20.20, trace_5: 19.96, trace_1: 24.60 },
    JohansenCriticalValues { max_eigen_5: 22.00, max_eigen_1: 26.81, trace_5: 34.91, trace_1: 41.07 },
    JohansenCriticalValues { max_eigen_5: 28.14, max_eigen_1: 33.24, trace_5: 53.12, trace_1: 60.16 },
];

/// Critical values for `common_trends = n − r`.
pub fn critical_values(common_trends: usize) -> Option<JohansenCriticalValues> {
    common_trends
        .checked_sub(1)
        .and_then(|i| RESTRICTED_CONSTANT_CV.get(i))
        .copied()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Significance {
    One,
    Five,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RankTest {
    Trace,
    MaxEigen,
}

#[derive(Debug, Clone)]
pub struct CointegrationResult {
    /// λ_1 ≥ … ≥ λ_n.
    pub eigenvalues: Vec<f64>,
    /// Per null rank r = 0..n−1.
    pub trace_stats: Vec<f64>,
    pub maxeig_stats: Vec<f64>,
    pub critical_values: Vec<Option<JohansenCriticalValues>>,
    /// All n eigenvectors, (n+1)×n, constant row first, `V' S_kk V = I`.
    pub eigenvectors: DMatrix<f64>,
    /// `S_0k`, n×(n+1).
    pub s0k: DMatrix<f64>,
    /// β for the selected rank, (n+1)×r.
    pub beta: DMatrix<f64>,
    /// α for the selected rank, n×r.
    pub alpha: DMatrix<f64>,
    pub selected_rank: usize,
    pub nobs: usize,
    pub k: usize,
}

impl CointegrationResult {
    /// Leading `r` cointegrating vectors.
    pub fn beta_for_rank(&self, r: usize) -> DMatrix<f64> {
        self.eigenvectors.columns(0, r).into_owned()
    }

    /// Loadings matching [`Self::beta_for_rank`].
    pub fn alpha_for_rank(&self, r: usize) -> DMatrix<f64> {
        &self.s0k * self.beta_for_rank(r)
    }

    /// Smallest null rank not rejected, or n if every null is rejected.
    /// `None` when critical values are not tabulated for this dimension.
    pub fn select_rank(&self, test: RankTest, level: Significance) -> Option<usize> {
        let n = self.eigenvalues.len();
        for r in 0..n {
            let cv = self.critical_values[r]?;
            let (stat, crit) = match (test, level) {
                (RankTest::Trace, Significance::One) => (self.trace_stats[r], cv.trace_1),
                (RankTest::Trace, Significance::Five) => (self.trace_stats[r], cv.trace_5),
                (RankTest::MaxEigen, Significance::One) => (self.maxeig_stats[r], cv.max_eigen_1),
                (RankTest::MaxEigen, Significance::Five) => (self.maxeig_stats[r], cv.max_eigen_5),
            };
            if stat <= crit {
                return Some(r);
            }
        }
        Some(n)
    }
}

/// Johansen test with `k` lagged differences. Rank is chosen by the sequential
/// trace test at 1%.
pub fn johansen(levels: &LogPanel, k: usize) -> Result<CointegrationResult> {
    johansen_with(levels, k, RankTest::Trace, Significance::One)
}

pub fn johansen_with(
    levels: &LogPanel,
    k: usize,
    test: RankTest,
    level: Significance,
) -> Result<CointegrationResult> {
    let design = VecmDesign::new(levels, k)?;
    johansen_design(&design, test, level)
}

pub fn johansen_design(
    design: &VecmDesign,
    test: RankTest,
    level: Significance,
) -> Result<CointegrationResult> {
    let n = design.n();
    let t = design.nobs();
    if t < 10 * n {
        return Err(Error::InsufficientData(format!(
            "effective sample {t} is below 10·n = {} for k = {}",
            10 * n,
            design.k
        )));
    }
    let labels = design.difference_labels();
    let r0 = least_squares(&design.z1, &design.z0, &labels)?.residuals;
    let rk = least_squares(&design.z1, &design.zk, &labels)?.residuals;
    let tf = t as f64;
    let s00 = r0.transpose() * &r0 / tf;
    let s0k = r0.transpose() * &rk / tf;
    let skk = rk.transpose() * &rk / tf;
    let s00_inv = spd_inverse(&s00)
        .ok_or_else(|| Error::Collinearity("S_00 is singular: differences are collinear".into()))?;
    let a = s0k.transpose() * &s00_inv * &s0k;
    let (values, mut vectors) = symmetric_generalized_eigen(&a, &skk).map_err(|_| {
        Error::Collinearity("S_kk is singular: levels (with constant) are collinear".into())
    })?;
    for j in 0..vectors.ncols() {
        normalize_sign(&mut vectors, j);
    }
    let eigenvalues: Vec<f64> = values[..n].iter().map(|v| v.clamp(0.0, 1.0 - 1e-15)).collect();
    let logs: Vec<f64> = eigenvalues.iter().map(|l| -tf * (1.0 - l).ln()).collect();
    let maxeig_stats = logs.clone();
    let trace_stats: Vec<f64> = (0..n).map(|r| logs[r..].iter().sum()).collect();
    let critical_values = (0..n).map(|r| critical_values(n - r)).collect();
    let eigenvectors = vectors.columns(0, n).into_owned();

    let mut result = CointegrationResult {
        eigenvalues,
        trace_stats,
        maxeig_stats,
        critical_values,
        eigenvectors,
        s0k,
        beta: DMatrix::zeros(n + 1, 0),
        alpha: DMatrix::zeros(n, 0),
        selected_rank: 0,
        nobs: t,
        k: design.k,
    };
    let rank = result.select_rank(test, level).ok_or_else(|| {
        Error::Unsupported(format!(
            "critical values are tabulated for up to 4 series, got {n}"
        ))
    })?;
    result.selected_rank = rank;
    result.beta = result.beta_for_rank(rank);
    result.alpha = result.alpha_for_rank(rank);
    Ok(result)
}

/// Makes the largest-magnitude non-constant entry of column `j` positive.
fn normalize_sign(v: &mut DMatrix<f64>, j: usize) {
    let col = v.column(j);
    let pivot = (1..col.len())
        .max_by(|&a, &b| col[a].abs().total_cmp(&col[b].abs()))
        .unwrap_or(0);
    if col[pivot] < 0.0 {
        v.column_mut(j).neg_mut();
    }
}

/// Error-correction terms `β'(1, X_{t−k})` for one row of the level block.
pub fn longrun_score(levels_with_const: &[f64], beta: &DMatrix<f64>) -> Result<DVector<f64>> {
    if levels_with_const.len() != beta.nrows() {
        return Err(Error::Shape(format!(
            "row has {} entries, beta has {} rows",
            levels_with_const.len(),
            beta.nrows()
        )));
    }
    let z = DVector::from_column_slice(levels_with_const);
    Ok(beta.transpose() * z)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn embedded_one_percent_values() {
        let me: Vec<f64> = (0..4).map(|r| critical_values(4 - r).unwrap().max_eigen_1).collect();
        let tr: Vec<f64> = (0..4).map(|r| critical_values(4 - r).unwrap().trace_1).collect();
        assert_eq!(me, vec![33.24, 26.81, 20.20, 12.97]);
        assert_eq!(tr, vec![60.16, 41.07, 24.60, 12.97]);
        assert!(critical_values(0).is_none());
        assert!(critical_values(5).is_none());
    }

    #[test]
    fn longrun_score_selectors() {
        let row = [1.0, 2.5, -3.0];
        let zero = DMatrix::zeros(3, 2);
        assert_eq!(longrun_score(&row, &zero).unwrap(), DVector::zeros(2));
        let mut e = DMatrix::zeros(3, 1);
        e[(1, 0)] = 1.0;
        assert_eq!(longrun_score(&row, &e).unwrap()[0], 2.5);
        assert!(matches!(
            longrun_score(&row[..2], &e),
            Err(Error::Shape(_))
        ));
    }
}
