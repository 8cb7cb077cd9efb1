//! ADF-GLS (Elliott–Rothenberg–Stock) unit-root test with Ng–Perron modified
//! information criteria for the augmentation order.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::least_squares;

/// Deterministic terms removed by GLS detrending.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Detrend {
    Constant,
    Trend,
}

impl Detrend {
    /// Local-to-unity non-centrality used in the quasi-difference.
    pub fn cbar(self) -> f64 {
        match self {
            Detrend::Constant => -7.0,
            Detrend::Trend => -13.5,
        }
    }

    pub fn critical_values(self) -> CriticalValues {
        match self {
            Detrend::Constant => CriticalValues {
                one: -2.58,
                five: -1.95,
                ten: -1.62,
            },
            Detrend::Trend => CriticalValues {
                one: -3.42,
                five: -2.89,
                ten: -2.57,
            },
        }
    }
}

impl std::str::FromStr for Detrend {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "constant" | "c" | "const" => Ok(Detrend::Constant),
            "trend" | "ct" => Ok(Detrend::Trend),
            _ => Err(format!("unknown detrend case {s:?} (expected constant|trend)")),
        }
    }
}

/// Modified information criterion for the augmentation order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LagCriterion {
    Maic,
    Mbic,
}

impl std::str::FromStr for LagCriterion {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "maic" => Ok(LagCriterion::Maic),
            "mbic" => Ok(LagCriterion::Mbic),
            _ => Err(format!("unknown criterion {s:?} (expected maic|mbic)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CriticalValues {
    pub one: f64,
    pub five: f64,
    pub ten: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdfGlsResult {
    /// t-ratio on the lagged level.
    pub statistic: f64,
    pub lags: usize,
    /// Sum of autoregressive coefficients of the detrended series.
    pub phi_hat: f64,
    pub detrend: Detrend,
    pub critical_values: CriticalValues,
    pub reject_1pct: bool,
    /// Observations in the final regression.
    pub nobs: usize,
}

/// Schwert's bound `floor(12·(T/100)^{1/4})`.
pub fn default_max_lags(t: usize) -> usize {
    (12.0 * (t as f64 / 100.0).powf(0.25)).floor() as usize
}

/// GLS-detrended series: quasi-difference with `1 + c̄/T`, regress on the
/// quasi-differenced deterministic terms, subtract the fitted trend.
pub fn gls_detrend(y: &[f64], detrend: Detrend) -> Result<Vec<f64>> {
    let t = y.len();
    if t < 3 {
        return Err(Error::InsufficientData(format!("{t} observations")));
    }
    let a = 1.0 + detrend.cbar() / t as f64;
    let k = match detrend {
        Detrend::Constant => 1,
        Detrend::Trend => 2,
    };
    let z = |i: usize, j: usize| if j == 0 { 1.0 } else { (i + 1) as f64 };
    let yq = DMatrix::from_fn(t, 1, |i, _| if i == 0 { y[0] } else { y[i] - a * y[i - 1] });
    let zq = DMatrix::from_fn(t, k, |i, j| {
        if i == 0 {
            z(0, j)
        } else {
            z(i, j) - a * z(i - 1, j)
        }
    });
    let fit = least_squares(&zq, &yq, &[])?;
    Ok((0..t)
        .map(|i| y[i] - (0..k).map(|j| z(i, j) * fit.coef[(j, 0)]).sum::<f64>())
        .collect())
}

/// Residuals from an OLS regression on the deterministic terms.
fn ols_detrend(y: &[f64], detrend: Detrend) -> Result<Vec<f64>> {
    let t = y.len();
    let k = match detrend {
        Detrend::Constant => 1,
        Detrend::Trend => 2,
    };
    let z = DMatrix::from_fn(t, k, |i, j| if j == 0 { 1.0 } else { (i + 1) as f64 });
    let fit = least_squares(&z, &DMatrix::from_column_slice(t, 1, y), &[])?;
    Ok(fit.residuals.column(0).iter().copied().collect())
}

struct AdfRegression {
    b0: f64,
    se_b0: f64,
    ssr: f64,
    nobs: usize,
    sum_ylag2: f64,
}

/// Δy_t on y_{t−1} and p lagged differences, for t in `first..len`.
fn adf_regression(yd: &[f64], p: usize, first: usize) -> Result<AdfRegression> {
    let nobs = yd.len() - first;
    let cols = p + 1;
    let x = DMatrix::from_fn(nobs, cols, |r, c| {
        let t = first + r;
        if c == 0 {
            yd[t - 1]
        } else {
            yd[t - c] - yd[t - c - 1]
        }
    });
    let y = DMatrix::from_fn(nobs, 1, |r, _| {
        let t = first + r;
        yd[t] - yd[t - 1]
    });
    let fit = least_squares(&x, &y, &[]).map_err(|e| match e {
        Error::Collinearity(m) => Error::Degenerate(m),
        other => other,
    })?;
    let ssr = fit.residuals.norm_squared();
    let dof = nobs.saturating_sub(cols).max(1) as f64;
    let s2 = ssr / dof;
    let b0 = fit.coef[(0, 0)];
    let se_b0 = (s2 * fit.xtx_inv[(0, 0)]).sqrt();
    let sum_ylag2 = x.column(0).norm_squared();
    Ok(AdfRegression {
        b0,
        se_b0,
        ssr,
        nobs,
        sum_ylag2,
    })
}

/// ADF-GLS test. `max_lags = None` uses [`default_max_lags`].
pub fn adf_gls(
    series: &[f64],
    detrend: Detrend,
    criterion: LagCriterion,
    max_lags: Option<usize>,
) -> Result<AdfGlsResult> {
    let t = series.len();
    let kmax = max_lags.unwrap_or_else(|| default_max_lags(t));
    if t < 25 + kmax {
        return Err(Error::InsufficientData(format!(
            "ADF-GLS with max_lags {kmax} needs at least {} observations, got {t}",
            25 + kmax
        )));
    }
    if let Some(v) = series.iter().find(|v| !v.is_finite()) {
        return Err(Error::Domain {
            location: "ADF-GLS input".into(),
            message: format!("non-finite value {v}"),
        });
    }
    let first = series[0];
    let spread = series.iter().map(|v| (v - first).abs()).fold(0.0, f64::max);
    if spread <= f64::EPSILON * first.abs().max(1.0) {
        return Err(Error::Degenerate("series is constant".into()));
    }
    let yd = gls_detrend(series, detrend)?;
    // lag order is chosen on OLS-detrended data (Perron–Qu), the test itself
    // runs on the GLS-detrended series
    let yo = ols_detrend(series, detrend)?;

    // Selection on the common sample t = kmax+1 .. T−1.
    let mut best = (f64::INFINITY, 0usize);
    for p in 0..=kmax {
        let reg = adf_regression(&yo, p, kmax + 1)?;
        let n = reg.nobs as f64;
        let sigma2 = reg.ssr / n;
        if sigma2 <= 0.0 {
            return Err(Error::Degenerate("zero residual variance".into()));
        }
        let tau = reg.b0 * reg.b0 * reg.sum_ylag2 / sigma2;
        let penalty = match criterion {
            LagCriterion::Maic => 2.0,
            LagCriterion::Mbic => n.ln(),
        };
        let mic = sigma2.ln() + penalty * (tau + p as f64) / n;
        if mic < best.0 {
            best = (mic, p);
        }
    }
    let lags = best.1;
    let reg = adf_regression(&yd, lags, lags + 1)?;
    if !(reg.se_b0 > 0.0) {
        return Err(Error::Degenerate("zero standard error on lagged level".into()));
    }
    let statistic = reg.b0 / reg.se_b0;
    let critical_values = detrend.critical_values();
    Ok(AdfGlsResult {
        statistic,
        lags,
        phi_hat: 1.0 + reg.b0,
        detrend,
        critical_values,
        reject_1pct: statistic < critical_values.one,
        nobs: reg.nobs,
    })
}
