//! Error-correction model whose short-run matrices Γ_t and loadings α_t
//! follow random walks while the cointegrating matrix β stays fixed.

mod bootstrap;
pub mod smoother;

use nalgebra::DMatrix;

pub use bootstrap::{bootstrap_bands, BootstrapConfig};

use crate::design::VecmDesign;
use crate::error::{Error, Result};
use crate::series::{LogPanel, Month};
use crate::vecm::hstack;

/// Default ratio of observation-noise to parameter-innovation variance.
pub const DEFAULT_SMOOTHING_RATIO: f64 = 1.0;

#[derive(Debug, Clone)]
pub struct TvVecmFit {
    pub k: usize,
    pub names: Vec<String>,
    pub first_month: Month,
    /// Γ_t, each n×nk (lag-major blocks).
    pub gamma_path: Vec<DMatrix<f64>>,
    /// α_t, each n×r.
    pub alpha_path: Vec<DMatrix<f64>>,
    pub beta: DMatrix<f64>,
    /// ε_t, N×n.
    pub residual_path: DMatrix<f64>,
    pub smoothing_ratio: f64,
    /// `log det` of the normal matrix, kept for likelihood profiling.
    pub log_det_normal: f64,
}

impl TvVecmFit {
    pub fn nobs(&self) -> usize {
        self.alpha_path.len()
    }

    pub fn month(&self, row: usize) -> Month {
        self.first_month.plus(row as i64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bands {
    pub coverage: f64,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub replications: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntegrationSpeedPath {
    pub first_month: Month,
    pub zeta: Vec<f64>,
    pub bands: Option<Bands>,
    /// ζ_t − ζ_{t−1}; one shorter than `zeta`.
    pub acceleration: Vec<f64>,
}

impl IntegrationSpeedPath {
    fn from_zeta(first_month: Month, zeta: Vec<f64>) -> Self {
        let acceleration = zeta.windows(2).map(|w| w[1] - w[0]).collect();
        IntegrationSpeedPath {
            first_month,
            zeta,
            bands: None,
            acceleration,
        }
    }
}

/// Largest singular value: `sqrt(max eig(α α'))`.
pub fn largest_singular_value(alpha: &DMatrix<f64>) -> f64 {
    if alpha.is_empty() {
        return 0.0;
    }
    let g = alpha * alpha.transpose();
    let top = g
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    top.max(0.0).sqrt()
}

/// Regressors `(ΔX_{t−1..t−k}, β'(1, X_{t−k}))`, N×(nk + r).
pub(crate) fn tv_regressors(design: &VecmDesign, beta: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let ec = design.ec_terms(beta)?;
    Ok(hstack(&design.z1, &ec))
}

pub fn fit_tv_vecm(
    levels: &LogPanel,
    k: usize,
    beta: &DMatrix<f64>,
    smoothing_ratio: f64,
) -> Result<TvVecmFit> {
    let design = VecmDesign::new(levels, k)?;
    fit_tv_vecm_design(&design, beta, smoothing_ratio)
}

pub fn fit_tv_vecm_design(
    design: &VecmDesign,
    beta: &DMatrix<f64>,
    smoothing_ratio: f64,
) -> Result<TvVecmFit> {
    if !(smoothing_ratio > 0.0) || !smoothing_ratio.is_finite() {
        return Err(Error::Parameter(format!(
            "smoothing ratio must be positive and finite, got {smoothing_ratio}"
        )));
    }
    if beta.ncols() == 0 {
        return Err(Error::Parameter(
            "time-varying VECM needs at least one cointegrating vector".into(),
        ));
    }
    let n_obs = design.nobs();
    if n_obs < 30 {
        return Err(Error::InsufficientData(format!(
            "time-varying VECM needs at least 30 effective observations, got {n_obs}"
        )));
    }
    let x = tv_regressors(design, beta)?;
    if x.iter().any(|v| !v.is_finite()) || design.z0.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain {
            location: "design".into(),
            message: "non-finite value in regressors or responses".into(),
        });
    }
    let sol = smoother::solve_path(&x, &design.z0, smoothing_ratio)?;
    let nk = design.z1.ncols();
    let r = beta.ncols();
    let mut residual_path = design.z0.clone();
    let mut gamma_path = Vec::with_capacity(n_obs);
    let mut alpha_path = Vec::with_capacity(n_obs);
    for (t, theta) in sol.theta.iter().enumerate() {
        let fitted = x.row(t) * theta;
        let mut row = residual_path.row_mut(t);
        row -= fitted;
        gamma_path.push(theta.rows(0, nk).transpose());
        alpha_path.push(theta.rows(nk, r).transpose());
    }
    Ok(TvVecmFit {
        k: design.k,
        names: design.names.clone(),
        first_month: design.first_month,
        gamma_path,
        alpha_path,
        beta: beta.clone(),
        residual_path,
        smoothing_ratio,
        log_det_normal: sol.log_det_normal,
    })
}

pub fn integration_speed(fit: &TvVecmFit) -> Result<IntegrationSpeedPath> {
    let mut zeta = Vec::with_capacity(fit.nobs());
    for (t, a) in fit.alpha_path.iter().enumerate() {
        if a.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain {
                location: fit.month(t).to_string(),
                message: "non-finite loading estimate".into(),
            });
        }
        zeta.push(largest_singular_value(a));
    }
    Ok(IntegrationSpeedPath::from_zeta(fit.first_month, zeta))
}

/// Concentrated Gaussian log likelihood of the random-walk-coefficient model
/// at smoothing ratio λ, with a diffuse initial state and one error variance
/// per equation (additive constants dropped).
pub fn profile_log_likelihood(design: &VecmDesign, beta: &DMatrix<f64>, lambda: f64) -> Result<f64> {
    let x = tv_regressors(design, beta)?;
    let sol = smoother::solve_path(&x, &design.z0, lambda)?;
    let (n_obs, p) = x.shape();
    let m = design.z0.ncols();
    let eff = (n_obs - p) as f64;
    let mut ll = 0.0;
    for eq in 0..m {
        let mut q = 0.0;
        for t in 0..n_obs {
            let fit: f64 = (0..p).map(|j| x[(t, j)] * sol.theta[t][(j, eq)]).sum();
            q += (design.z0[(t, eq)] - fit).powi(2);
        }
        for w in sol.theta.windows(2) {
            q += lambda * (0..p).map(|j| (w[1][(j, eq)] - w[0][(j, eq)]).powi(2)).sum::<f64>();
        }
        ll -= 0.5 * eff * (q / eff).ln();
    }
    // |λD'D|_+ = λ^{p(N−1)}·N^p
    let log_pdet = p as f64 * ((n_obs - 1) as f64 * lambda.ln() + (n_obs as f64).ln());
    ll -= 0.5 * m as f64 * (sol.log_det_normal - log_pdet);
    Ok(ll)
}

#[derive(Debug, Clone)]
pub struct LambdaProfile {
    pub grid: Vec<f64>,
    pub log_likelihood: Vec<f64>,
    pub best: f64,
}

/// Log-spaced grid `10^lo ..= 10^hi` with `points` entries.
pub fn log_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    assert!(points >= 2);
    (0..points)
        .map(|i| 10f64.powf(lo + (hi - lo) * i as f64 / (points - 1) as f64))
        .collect()
}

pub fn profile_smoothing_ratio(
    levels: &LogPanel,
    k: usize,
    beta: &DMatrix<f64>,
    grid: &[f64],
) -> Result<LambdaProfile> {
    if grid.is_empty() {
        return Err(Error::Parameter("empty smoothing-ratio grid".into()));
    }
    let design = VecmDesign::new(levels, k)?;
    let log_likelihood = grid
        .iter()
        .map(|&l| profile_log_likelihood(&design, beta, l))
        .collect::<Result<Vec<_>>>()?;
    let best_idx = log_likelihood
        .iter()
        .enumerate()
        .fold(0, |b, (i, v)| if *v > log_likelihood[b] { i } else { b });
    Ok(LambdaProfile {
        grid: grid.to_vec(),
        best: grid[best_idx],
        log_likelihood,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{generate, Scenario};

    #[test]
    fn singular_value_trivial_cases() {
        assert_eq!(largest_singular_value(&DMatrix::zeros(4, 3)), 0.0);
        let a = DMatrix::from_column_slice(4, 1, &[3.0, 4.0, 0.0, 0.0]);
        assert!((largest_singular_value(&a) - 5.0).abs() < 1e-12);
    }

    #[test]
    fn fit_shapes_and_residual_identity() {
        let sim = generate(&Scenario::paper_like(3)).unwrap();
        let beta = Scenario::paper_like(3).beta;
        let fit = fit_tv_vecm(&sim.levels, 1, &beta, 1.0).unwrap();
        let n_obs = sim.levels.len() - 2;
        assert_eq!(fit.nobs(), n_obs);
        assert_eq!(fit.gamma_path[0].shape(), (4, 4));
        assert_eq!(fit.alpha_path[0].shape(), (4, 3));
        assert_eq!(fit.residual_path.shape(), (n_obs, 4));
        let speed = integration_speed(&fit).unwrap();
        assert_eq!(speed.acceleration.len(), n_obs - 1);
        assert!(speed.zeta.iter().all(|z| *z >= 0.0));
    }

    #[test]
    fn rejects_bad_smoothing_ratio_and_short_samples() {
        let sim = generate(&Scenario::paper_like(1)).unwrap();
        let beta = Scenario::paper_like(1).beta;
        assert!(matches!(
            fit_tv_vecm(&sim.levels, 1, &beta, 0.0),
            Err(Error::Parameter(_))
        ));
        let short = LogPanel::new(
            sim.levels.names.clone(),
            sim.levels.start,
            sim.levels.values.rows(0, 25).into_owned(),
        )
        .unwrap();
        assert!(matches!(
            fit_tv_vecm(&short, 1, &beta, 1.0),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn grid_is_log_spaced() {
        let g = log_grid(-2.0, 2.0, 5);
        assert!((g[0] - 0.01).abs() < 1e-15 && (g[4] - 100.0).abs() < 1e-9);
        assert!((g[2] - 1.0).abs() < 1e-12);
    }
}
