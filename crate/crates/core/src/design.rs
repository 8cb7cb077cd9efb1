//! Data matrices of the error-correction regression
//!
//! ```text
//! ΔX_t = Γ_1 ΔX_{t−1} + … + Γ_k ΔX_{t−k} + Π (1, X_{t−k})' + ε_t
//! ```
//!
//! `k` is the number of lagged differences. Row `i` of every matrix refers
//! to level index `s = k + 1 + i`, so the effective sample has `T − k − 1`
//! rows.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::series::{LogPanel, Month};

#[derive(Debug, Clone)]
pub struct VecmDesign {
    pub k: usize,
    pub names: Vec<String>,
    /// Month of the first effective observation.
    pub first_month: Month,
    /// ΔX_t, N×n.
    pub z0: DMatrix<f64>,
    /// (ΔX_{t−1}, …, ΔX_{t−k}), N×nk.
    pub z1: DMatrix<f64>,
    /// (1, X_{t−k}), N×(n+1).
    pub zk: DMatrix<f64>,
}

impl VecmDesign {
    pub fn new(levels: &LogPanel, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::Parameter("lag order k must be at least 1".into()));
        }
        let t = levels.len();
        let n = levels.n_series();
        if t < k + 2 {
            return Err(Error::InsufficientData(format!(
                "{t} observations cannot support {k} lagged differences"
            )));
        }
        let x = &levels.values;
        let rows = t - k - 1;
        let d = |s: usize, j: usize| x[(s, j)] - x[(s - 1, j)];
        let z0 = DMatrix::from_fn(rows, n, |i, j| d(k + 1 + i, j));
        let z1 = DMatrix::from_fn(rows, n * k, |i, c| {
            let lag = c / n + 1;
            d(k + 1 + i - lag, c % n)
        });
        let zk = DMatrix::from_fn(rows, n + 1, |i, c| {
            if c == 0 {
                1.0
            } else {
                x[(1 + i, c - 1)]
            }
        });
        Ok(VecmDesign {
            k,
            names: levels.names.clone(),
            first_month: levels.start.plus(k as i64 + 1),
            z0,
            z1,
            zk,
        })
    }

    pub fn nobs(&self) -> usize {
        self.z0.nrows()
    }

    pub fn n(&self) -> usize {
        self.z0.ncols()
    }

    pub fn month(&self, row: usize) -> Month {
        self.first_month.plus(row as i64)
    }

    /// Labels for the lagged-difference block, lag-major.
    pub fn difference_labels(&self) -> Vec<String> {
        (1..=self.k)
            .flat_map(|lag| self.names.iter().map(move |n| format!("d{n}(t-{lag})")))
            .collect()
    }

    /// Labels for the level block: constant first.
    pub fn level_labels(&self) -> Vec<String> {
        std::iter::once("const".to_string())
            .chain(self.names.iter().map(|n| format!("{n}(t-{})", self.k)))
            .collect()
    }

    /// Error-correction scores `Z_k β`, N×r.
    pub fn ec_terms(&self, beta: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if beta.nrows() != self.zk.ncols() {
            return Err(Error::Shape(format!(
                "beta has {} rows, level block has {} columns",
                beta.nrows(),
                self.zk.ncols()
            )));
        }
        Ok(&self.zk * beta)
    }
}
