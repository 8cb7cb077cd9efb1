use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{fit_tv_vecm_design, integration_speed, Bands, IntegrationSpeedPath, TvVecmFit};
use crate::design::VecmDesign;
use crate::error::{Error, Result};
use crate::linalg::quantile_sorted;
use crate::series::LogPanel;

#[derive(Debug, Clone, Copy)]
pub struct BootstrapConfig {
    pub reps: usize,
    pub coverage: f64,
    pub seed: u64,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        BootstrapConfig {
            reps: 1000,
            coverage: 0.9,
            seed: 42,
        }
    }
}

impl BootstrapConfig {
    pub fn validate(&self) -> Result<()> {
        if self.reps < 100 {
            return Err(Error::Parameter(format!(
                "bootstrap needs at least 100 replications, got {}",
                self.reps
            )));
        }
        if !(self.coverage > 0.0 && self.coverage < 1.0) {
            return Err(Error::Parameter(format!(
                "coverage must lie in (0, 1), got {}",
                self.coverage
            )));
        }
        Ok(())
    }
}

/// Runs the fitted time-varying system forward from the observed first
/// `k + 1` levels, feeding the supplied shocks.
fn regenerate(levels: &LogPanel, fit: &TvVecmFit, shocks: &DMatrix<f64>, rep: usize) -> Result<LogPanel> {
    let k = fit.k;
    let (t_len, n) = (levels.len(), levels.n_series());
    let mut x = levels.values.clone();
    let mut dx = DMatrix::zeros(t_len, n);
    for s in 1..=k {
        for j in 0..n {
            dx[(s, j)] = x[(s, j)] - x[(s - 1, j)];
        }
    }
    let mut lagged = DVector::zeros(n * k);
    let mut level_row = DVector::zeros(n + 1);
    for (i, (gamma, alpha)) in fit.gamma_path.iter().zip(&fit.alpha_path).enumerate() {
        let s = k + 1 + i;
        for lag in 1..=k {
            for j in 0..n {
                lagged[(lag - 1) * n + j] = dx[(s - lag, j)];
            }
        }
        level_row[0] = 1.0;
        for j in 0..n {
            level_row[j + 1] = x[(s - k, j)];
        }
        let ec = fit.beta.transpose() * &level_row;
        let step = gamma * &lagged + alpha * ec + shocks.row(i).transpose();
        for j in 0..n {
            dx[(s, j)] = step[j];
            x[(s, j)] = x[(s - 1, j)] + step[j];
            if !(x[(s, j)].abs() <= 1e6) {
                return Err(Error::Instability {
                    message: format!("regenerated level exploded at row {s}"),
                    replication: Some(rep),
                });
            }
        }
    }
    LogPanel::new(levels.names.clone(), levels.start, x)
}

fn replicate(
    levels: &LogPanel,
    fit: &TvVecmFit,
    centred: &DMatrix<f64>,
    cfg: &BootstrapConfig,
    rep: usize,
) -> Result<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(rep as u64 + 1);
    let n_obs = centred.nrows();
    let mut shocks = DMatrix::zeros(n_obs, centred.ncols());
    for i in 0..n_obs {
        let pick = rng.random_range(0..n_obs);
        shocks.row_mut(i).copy_from(&centred.row(pick));
    }
    let panel = regenerate(levels, fit, &shocks, rep)?;
    let design = VecmDesign::new(&panel, fit.k)?;
    let refit = fit_tv_vecm_design(&design, &fit.beta, fit.smoothing_ratio).map_err(|e| match e {
        Error::Collinearity(m) => Error::Instability {
            message: format!("replication refit failed: {m}"),
            replication: Some(rep),
        },
        other => other,
    })?;
    Ok(integration_speed(&refit)?.zeta)
}

/// ζ_t with pointwise percentile bands from a residual bootstrap. Each
/// replication draws from its own ChaCha stream, so results do not depend on
/// thread scheduling.
pub fn bootstrap_bands(
    levels: &LogPanel,
    k: usize,
    beta: &DMatrix<f64>,
    smoothing_ratio: f64,
    cfg: &BootstrapConfig,
) -> Result<IntegrationSpeedPath> {
    cfg.validate()?;
    let design = VecmDesign::new(levels, k)?;
    let fit = fit_tv_vecm_design(&design, beta, smoothing_ratio)?;
    let mut path = integration_speed(&fit)?;
    let mut centred = fit.residual_path.clone();
    for mut col in centred.column_iter_mut() {
        let mean = col.mean();
        col.add_scalar_mut(-mean);
    }
    let draws = (0..cfg.reps)
        .into_par_iter()
        .map(|rep| replicate(levels, &fit, &centred, cfg, rep))
        .collect::<Result<Vec<_>>>()?;
    let n_obs = path.zeta.len();
    let (lo_p, hi_p) = ((1.0 - cfg.coverage) / 2.0, (1.0 + cfg.coverage) / 2.0);
    let mut lower = Vec::with_capacity(n_obs);
    let mut upper = Vec::with_capacity(n_obs);
    let mut column = vec![0.0; cfg.reps];
    for t in 0..n_obs {
        for (c, d) in column.iter_mut().zip(&draws) {
            *c = d[t];
        }
        column.sort_by(f64::total_cmp);
        lower.push(quantile_sorted(&column, lo_p));
        upper.push(quantile_sorted(&column, hi_p));
    }
    path.bands = Some(Bands {
        coverage: cfg.coverage,
        lower,
        upper,
        replications: cfg.reps,
    });
    Ok(path)
}
