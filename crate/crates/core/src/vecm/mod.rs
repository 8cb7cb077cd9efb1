//! Time-invariant VECM estimation, equation by equation.

mod bivariate;
mod hac;
mod hansen;

pub use bivariate::{fit_vecm_bivariate, BivariateVecm};
pub use hac::{classical_se, hac_se, newey_west_cov, newey_west_lags};
pub use hansen::{hansen_lc, hansen_lc_equation, lc_critical_value, LcLevel};

use nalgebra::DMatrix;

use crate::design::VecmDesign;
use crate::error::{Error, Result};
use crate::linalg::least_squares;
use crate::series::LogPanel;

/// Time-invariant VECM fit.
///
/// Coefficient rows follow the regressor layout: the lagged-difference block
/// (lag-major), then either the level block `(const, X_{t−k})` or the `r`
/// error-correction terms when β was supplied.
#[derive(Debug, Clone)]
pub struct VecmFit {
    pub k: usize,
    pub names: Vec<String>,
    pub regressor_labels: Vec<String>,
    /// p×n.
    pub coefficients: DMatrix<f64>,
    /// p×n, Newey–West.
    pub hac_se: DMatrix<f64>,
    pub hac_lags: usize,
    /// n×nk.
    pub gamma: DMatrix<f64>,
    /// n×(n+1), constant column first.
    pub pi: DMatrix<f64>,
    pub alpha: DMatrix<f64>,
    pub beta: DMatrix<f64>,
    /// True when β was supplied and Π = αβ' is reduced-rank.
    pub restricted: bool,
    /// N×n.
    pub residuals: DMatrix<f64>,
    pub r2_adj: Vec<f64>,
    /// Joint Lc summed over equations.
    pub lc_stat: f64,
    /// Number of parameters entering `lc_stat`.
    pub lc_params: usize,
    pub log_det_sigma: f64,
    pub bic: f64,
    /// N×p design.
    pub regressors: DMatrix<f64>,
    /// N×n responses ΔX_t.
    pub response: DMatrix<f64>,
}

impl VecmFit {
    pub fn nobs(&self) -> usize {
        self.residuals.nrows()
    }

    pub fn fitted(&self) -> DMatrix<f64> {
        &self.response - &self.residuals
    }

    /// Coefficient / HAC s.e. ratios.
    pub fn t_stats(&self) -> DMatrix<f64> {
        self.coefficients.component_div(&self.hac_se)
    }

    /// 5% asymptotic critical value for `lc_stat`.
    pub fn lc_critical_5pct(&self) -> f64 {
        lc_critical_value(self.lc_params, LcLevel::Five)
    }
}

/// Fits the VECM with `k` lagged differences. With `beta = None` the level
/// block `(1, X_{t−k})` enters unrestricted; otherwise the regressors are the
/// error-correction terms `Z_k β`.
pub fn fit_vecm(levels: &LogPanel, k: usize, beta: Option<&DMatrix<f64>>) -> Result<VecmFit> {
    let design = VecmDesign::new(levels, k)?;
    fit_vecm_design(&design, beta, None)
}

/// As [`fit_vecm`] on a prepared design; `hac_lags = None` uses
/// [`newey_west_lags`].
pub fn fit_vecm_design(
    design: &VecmDesign,
    beta: Option<&DMatrix<f64>>,
    hac_lags: Option<usize>,
) -> Result<VecmFit> {
    let n = design.n();
    let nk = design.z1.ncols();
    let (level_block, level_labels) = match beta {
        None => (design.zk.clone(), design.level_labels()),
        Some(b) => {
            let ec = design.ec_terms(b)?;
            let labels = (1..=b.ncols()).map(|i| format!("ec{i}")).collect();
            (ec, labels)
        }
    };
    let x = hstack(&design.z1, &level_block);
    let mut labels = design.difference_labels();
    labels.extend(level_labels);
    let fit = least_squares(&x, &design.z0, &labels)?;
    let t = x.nrows();
    let p = x.ncols();

    let gamma = fit.coef.rows(0, nk).transpose();
    let level_coef = fit.coef.rows(nk, p - nk).transpose();
    let (pi, alpha, beta_out, restricted) = match beta {
        None => (level_coef.clone(), level_coef, DMatrix::identity(n + 1, n + 1), false),
        Some(b) => (&level_coef * b.transpose(), level_coef, b.clone(), true),
    };

    let lags = hac_lags.unwrap_or_else(|| newey_west_lags(t));
    let hac = hac_se(&x, &fit.residuals, lags)?;
    let r2_adj = adjusted_r2(&design.z0, &fit.residuals, p);
    let lc_stat = hansen_lc(&x, &fit.residuals)?;

    let sigma = fit.residuals.transpose() * &fit.residuals / t as f64;
    let log_det_sigma = sigma
        .clone()
        .cholesky()
        .map(|c| 2.0 * c.l().diagonal().iter().map(|d| d.ln()).sum::<f64>())
        .ok_or_else(|| Error::Collinearity("residual covariance is singular".into()))?;
    let n_params = (n * p) as f64;
    let bic = log_det_sigma + n_params * (t as f64).ln() / t as f64;

    Ok(VecmFit {
        k: design.k,
        names: design.names.clone(),
        regressor_labels: labels,
        coefficients: fit.coef,
        hac_se: hac,
        hac_lags: lags,
        gamma,
        pi,
        alpha,
        beta: beta_out,
        restricted,
        residuals: fit.residuals,
        r2_adj,
        lc_stat,
        lc_params: n * (p + 1),
        log_det_sigma,
        bic,
        regressors: x,
        response: design.z0.clone(),
    })
}

pub(crate) fn hstack(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(a.nrows(), a.ncols() + b.ncols());
    out.columns_mut(0, a.ncols()).copy_from(a);
    out.columns_mut(a.ncols(), b.ncols()).copy_from(b);
    out
}

/// Centred adjusted R² per equation.
fn adjusted_r2(y: &DMatrix<f64>, resid: &DMatrix<f64>, p: usize) -> Vec<f64> {
    let t = y.nrows() as f64;
    (0..y.ncols())
        .map(|j| {
            let col = y.column(j);
            let mean = col.mean();
            let sst: f64 = col.iter().map(|v| (v - mean).powi(2)).sum();
            let ssr = resid.column(j).norm_squared();
            1.0 - (ssr / (t - p as f64)) / (sst / (t - 1.0))
        })
        .collect()
}

/// Lag order (number of lagged differences) in `1..=max_k` minimising the
/// BIC of the unrestricted system on the common sample of `max_k`.
#[derive(Debug, Clone)]
pub struct LagSelection {
    pub k: usize,
    /// BIC for k = 1..=max_k.
    pub bic: Vec<f64>,
}

pub fn select_lag_bic(levels: &LogPanel, max_k: usize) -> Result<LagSelection> {
    if max_k == 0 {
        return Err(Error::Parameter("max_k must be at least 1".into()));
    }
    let common = VecmDesign::new(levels, max_k)?.nobs();
    let mut bic = Vec::with_capacity(max_k);
    for k in 1..=max_k {
        let full = VecmDesign::new(levels, k)?;
        let skip = full.nobs() - common;
        let trimmed = VecmDesign {
            k,
            names: full.names.clone(),
            first_month: full.month(skip),
            z0: full.z0.rows(skip, common).into_owned(),
            z1: full.z1.rows(skip, common).into_owned(),
            zk: full.zk.rows(skip, common).into_owned(),
        };
        bic.push(system_bic(&trimmed)?);
    }
    let k = bic
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i + 1)
        .unwrap_or(1);
    Ok(LagSelection { k, bic })
}

fn system_bic(design: &VecmDesign) -> Result<f64> {
    let x = hstack(&design.z1, &design.zk);
    let fit = least_squares(&x, &design.z0, &[])?;
    let t = x.nrows() as f64;
    let sigma = fit.residuals.transpose() * &fit.residuals / t;
    let log_det = sigma
        .cholesky()
        .map(|c| 2.0 * c.l().diagonal().iter().map(|d| d.ln()).sum::<f64>())
        .ok_or_else(|| Error::Collinearity("residual covariance is singular".into()))?;
    let params = (design.n() * x.ncols()) as f64;
    Ok(log_det + params * t.ln() / t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::Month;
    use crate::synth::{generate, Scenario};

    fn fixture() -> LogPanel {
        generate(&Scenario::paper_like(21)).unwrap().levels
    }

    #[test]
    fn residuals_orthogonal_to_regressors() {
        let levels = fixture();
        for beta in [None, Some(Scenario::paper_like(0).beta)] {
            let fit = fit_vecm(&levels, 2, beta.as_ref()).unwrap();
            let g = fit.regressors.transpose() * &fit.residuals;
            let scale = fit.regressors.norm() * fit.residuals.norm();
            assert!(g.amax() <= 1e-8 * scale.max(1.0), "{}", g.amax());
        }
    }

    #[test]
    fn unrestricted_fit_has_zero_mean_residuals_and_pi_decomposes() {
        let fit = fit_vecm(&fixture(), 1, None).unwrap();
        for j in 0..4 {
            assert!(fit.residuals.column(j).mean().abs() <= 1e-10);
        }
        assert!((&fit.pi - &fit.alpha * fit.beta.transpose()).amax() <= 1e-10);
        assert!(fit.hac_se.iter().all(|&s| s > 0.0));
        assert_eq!(fit.gamma.shape(), (4, 4));
        assert_eq!(fit.pi.shape(), (4, 5));
        assert_eq!(fit.regressor_labels[4], "const");
    }

    #[test]
    fn restricted_fit_layout() {
        let beta = Scenario::paper_like(0).beta;
        let fit = fit_vecm(&fixture(), 1, Some(&beta)).unwrap();
        assert_eq!(fit.alpha.shape(), (4, 3));
        assert!((&fit.pi - &fit.alpha * beta.transpose()).amax() <= 1e-12);
        assert_eq!(fit.coefficients.nrows(), 7);
        assert_eq!(fit.lc_params, 4 * 8);
    }

    #[test]
    fn adjusted_r2_matches_textbook_formula() {
        let fit = fit_vecm(&fixture(), 1, None).unwrap();
        let t = fit.nobs() as f64;
        let p = fit.regressors.ncols() as f64;
        for j in 0..4 {
            let y: Vec<f64> = fit.response.column(j).iter().copied().collect();
            let yhat: Vec<f64> = fit.fitted().column(j).iter().copied().collect();
            let ybar = y.iter().sum::<f64>() / t;
            let mut ss_res = 0.0;
            let mut ss_tot = 0.0;
            for i in 0..y.len() {
                ss_res += (y[i] - yhat[i]) * (y[i] - yhat[i]);
                ss_tot += (y[i] - ybar) * (y[i] - ybar);
            }
            let r2 = 1.0 - ss_res / ss_tot;
            let adj = 1.0 - (1.0 - r2) * (t - 1.0) / (t - p);
            assert!((adj - fit.r2_adj[j]).abs() < 1e-12);
        }
    }

    #[test]
    fn full_rank_johansen_beta_reproduces_unrestricted_fit() {
        let levels = fixture();
        let unrestricted = fit_vecm(&levels, 1, None).unwrap();
        let coint = crate::cointegration::johansen(&levels, 1).unwrap();
        let beta = coint.beta_for_rank(4);
        let restricted = fit_vecm(&levels, 1, Some(&beta)).unwrap();
        let diff = (unrestricted.fitted() - restricted.fitted()).amax();
        assert!(diff < 1e-8, "{diff}");
    }

    #[test]
    fn lc_invariant_to_rescaling_one_series() {
        let levels = fixture();
        let a = fit_vecm(&levels, 1, None).unwrap().lc_stat;
        let mut scaled = levels.clone();
        scaled.values.column_mut(2).scale_mut(3.5);
        let b = fit_vecm(&scaled, 1, None).unwrap().lc_stat;
        assert!((a - b).abs() < 1e-8 * a.max(1.0), "{a} vs {b}");
    }

    #[test]
    fn collinear_levels_are_reported() {
        let mut levels = fixture();
        let c0 = levels.values.column(0).into_owned();
        levels.values.set_column(1, &(c0 * 2.0));
        match fit_vecm(&levels, 1, None) {
            Err(Error::Collinearity(msg)) => assert!(msg.contains("F_T"), "{msg}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn bic_is_deterministic_and_prefers_small_k_on_white_noise() {
        let sim = generate(&Scenario::random_walks(3, 400, 5)).unwrap();
        let a = select_lag_bic(&sim.levels, 4).unwrap();
        let b = select_lag_bic(&sim.levels, 4).unwrap();
        assert_eq!(a.bic, b.bic);
        assert_eq!(a.k, 1);
        assert_eq!(a.bic.len(), 4);
    }

    #[test]
    fn lag_order_zero_rejected() {
        let l = LogPanel::new(vec!["a".into()], Month::new(1900, 1).unwrap(), DMatrix::zeros(20, 1)).unwrap();
        assert!(matches!(fit_vecm(&l, 0, None), Err(Error::Parameter(_))));
        assert!(matches!(select_lag_bic(&l, 0), Err(Error::Parameter(_))));
    }
}
