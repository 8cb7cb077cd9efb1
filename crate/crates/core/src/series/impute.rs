//! Missing-value imputation with a local-level plus dummy-seasonal
//! structural model.
//!
//! Per column:
//!
//! ```text
//! y_t     = μ_t + γ_t + ε_t,                  ε_t ~ N(0, σ²)
//! μ_{t+1} = μ_t + η_t,                        η_t ~ N(0, q_level·σ²)
//! γ_{t+1} = −(γ_t + … + γ_{t−s+2}) + ω_t,     ω_t ~ N(0, q_season·σ²)
//! ```
//!
//! σ² is concentrated out of the likelihood; the two ratios are fitted on the
//! log scale by Nelder–Mead. The state is initialised with a large-variance
//! prior and the first `s` observed prediction errors are excluded from the
//! likelihood. Imputed values are fixed-interval smoothed signals `μ_t + γ_t`.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::PricePanel;
use crate::error::{Error, Result};
use crate::optim::NelderMead;

const DIFFUSE_KAPPA: f64 = 1e6;
const LOG_RATIO_BOUNDS: (f64, f64) = (-18.0, 8.0);

/// Fitted structural model for one column.
#[derive(Debug, Clone)]
pub struct StructuralFit {
    pub period: usize,
    /// Level-innovation variance relative to observation noise.
    pub q_level: f64,
    /// Seasonal-innovation variance relative to observation noise.
    pub q_season: f64,
    /// Observation-noise variance in the column's original units.
    pub sigma2: f64,
    /// Smoothed signal at every time point, original units.
    pub smoothed: Vec<f64>,
}

struct Model {
    m: usize,
    transition: DMatrix<f64>,
    q_diag: DVector<f64>,
}

impl Model {
    fn new(period: usize, q_level: f64, q_season: f64) -> Self {
        let m = period.max(1);
        let mut transition = DMatrix::zeros(m, m);
        transition[(0, 0)] = 1.0;
        if m > 1 {
            for j in 1..m {
                transition[(1, j)] = -1.0;
            }
            for i in 2..m {
                transition[(i, i - 1)] = 1.0;
            }
        }
        let mut q_diag = DVector::zeros(m);
        q_diag[0] = q_level;
        if m > 1 {
            q_diag[1] = q_season;
        }
        Model {
            m,
            transition,
            q_diag,
        }
    }

    /// Observation loads on the level and the current seasonal.
    fn z_dot(&self, a: &DVector<f64>) -> f64 {
        if self.m > 1 {
            a[0] + a[1]
        } else {
            a[0]
        }
    }

    fn z_col(&self, p: &DMatrix<f64>) -> DVector<f64> {
        if self.m > 1 {
            p.column(0) + p.column(1)
        } else {
            p.column(0).into_owned()
        }
    }
}

struct FilterOutput {
    a_pred: Vec<DVector<f64>>,
    p_pred: Vec<DMatrix<f64>>,
    v: Vec<f64>,
    f: Vec<f64>,
    k: Vec<DVector<f64>>,
    loglik_sum_logf: f64,
    loglik_sum_v2f: f64,
    n_used: usize,
}

fn kalman_filter(model: &Model, y: &[Option<f64>]) -> FilterOutput {
    let m = model.m;
    let t_len = y.len();
    let mut a = DVector::zeros(m);
    let mut p = DMatrix::identity(m, m) * DIFFUSE_KAPPA;
    let tt = &model.transition;
    let mut out = FilterOutput {
        a_pred: Vec::with_capacity(t_len),
        p_pred: Vec::with_capacity(t_len),
        v: vec![0.0; t_len],
        f: vec![0.0; t_len],
        k: Vec::with_capacity(t_len),
        loglik_sum_logf: 0.0,
        loglik_sum_v2f: 0.0,
        n_used: 0,
    };
    let mut seen = 0usize;
    for (t, obs) in y.iter().enumerate() {
        out.a_pred.push(a.clone());
        out.p_pred.push(p.clone());
        match obs {
            Some(yt) => {
                let pz = model.z_col(&p);
                let f = model.z_dot(&pz) + 1.0;
                let v = yt - model.z_dot(&a);
                let k = (tt * &pz) / f;
                seen += 1;
                if seen > m {
                    out.loglik_sum_logf += f.ln();
                    out.loglik_sum_v2f += v * v / f;
                    out.n_used += 1;
                }
                out.v[t] = v;
                out.f[t] = f;
                a = tt * &a + &k * v;
                // P_{t+1} = T P T' − K F K' + Q
                let mut pn = tt * &p * tt.transpose() - &k * k.transpose() * f;
                for i in 0..m {
                    pn[(i, i)] += model.q_diag[i];
                }
                p = (&pn + pn.transpose()) * 0.5;
                out.k.push(k);
            }
            None => {
                a = tt * &a;
                let mut pn = tt * &p * tt.transpose();
                for i in 0..m {
                    pn[(i, i)] += model.q_diag[i];
                }
                p = pn;
                out.k.push(DVector::zeros(m));
            }
        }
    }
    out
}

fn concentrated_neg_loglik(model: &Model, y: &[Option<f64>]) -> f64 {
    let out = kalman_filter(model, y);
    if out.n_used == 0 {
        return f64::INFINITY;
    }
    let n = out.n_used as f64;
    let sigma2 = (out.loglik_sum_v2f / n).max(1e-300);
    0.5 * (n * sigma2.ln() + out.loglik_sum_logf)
}

/// Smoothed signal via the backward state-smoothing recursion
/// `r_{t−1} = Z'v_t/F_t + L_t' r_t`, `â_t = a_t + P_t r_{t−1}`.
fn smooth_signal(model: &Model, y: &[Option<f64>]) -> Vec<f64> {
    let out = kalman_filter(model, y);
    let m = model.m;
    let tt = &model.transition;
    let mut r = DVector::zeros(m);
    let mut signal = vec![0.0; y.len()];
    for t in (0..y.len()).rev() {
        let r_prev = match y[t] {
            Some(_) => {
                // L_t = T − K_t Z, so L_t' r = T' r − Z' (K_t' r)
                let kr = out.k[t].dot(&r);
                let mut rp = tt.transpose() * &r;
                let zf = out.v[t] / out.f[t] - kr;
                rp[0] += zf;
                if m > 1 {
                    rp[1] += zf;
                }
                rp
            }
            None => tt.transpose() * &r,
        };
        let a_hat = &out.a_pred[t] + &out.p_pred[t] * &r_prev;
        signal[t] = model.z_dot(&a_hat);
        r = r_prev;
    }
    signal
}

/// Fits the structural model to one column (`None` = missing) and returns
/// the smoothed signal.
pub fn impute_column(y: &[Option<f64>], period: usize) -> Result<StructuralFit> {
    if period == 0 {
        return Err(Error::Parameter("seasonal period must be at least 1".into()));
    }
    let observed: Vec<f64> = y.iter().flatten().copied().collect();
    if let Some(bad) = observed.iter().find(|v| !v.is_finite()) {
        return Err(Error::Domain {
            location: "imputation input".into(),
            message: format!("non-finite observation {bad}"),
        });
    }
    let need = 3 * period;
    if observed.len() < need.max(3) {
        return Err(Error::InsufficientData(format!(
            "{} observed values, imputation with period {period} needs {}",
            observed.len(),
            need.max(3)
        )));
    }
    let mean = observed.iter().sum::<f64>() / observed.len() as f64;
    let var = observed.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / observed.len() as f64;
    let scale = if var > 0.0 { var.sqrt() } else { 1.0 };
    let z: Vec<Option<f64>> = y.iter().map(|o| o.map(|v| (v - mean) / scale)).collect();

    let seasonal = period > 1;
    let clamp = |x: f64| x.clamp(LOG_RATIO_BOUNDS.0, LOG_RATIO_BOUNDS.1);
    let objective = |theta: &[f64]| {
        let ql = clamp(theta[0]).exp();
        let qs = if seasonal { clamp(theta[1]).exp() } else { 0.0 };
        concentrated_neg_loglik(&Model::new(period, ql, qs), &z)
    };
    let nm = NelderMead {
        max_iter: 400,
        f_tol: 1e-9,
        x_tol: 1e-6,
        step: 1.5,
    };
    let starts: Vec<Vec<f64>> = if seasonal {
        vec![vec![-2.0, -5.0], vec![-6.0, -9.0], vec![1.0, -3.0]]
    } else {
        vec![vec![-2.0], vec![-6.0], vec![1.0]]
    };
    let best = starts
        .iter()
        .map(|s| nm.minimize(objective, s))
        .min_by(|a, b| a.value.total_cmp(&b.value))
        .expect("at least one start");
    let q_level = clamp(best.x[0]).exp();
    let q_season = if seasonal { clamp(best.x[1]).exp() } else { 0.0 };
    let model = Model::new(period, q_level, q_season);
    let filtered = kalman_filter(&model, &z);
    let sigma2_std = filtered.loglik_sum_v2f / filtered.n_used.max(1) as f64;
    let smoothed = smooth_signal(&model, &z)
        .into_iter()
        .map(|s| mean + scale * s)
        .collect();
    Ok(StructuralFit {
        period,
        q_level,
        q_season,
        sigma2: sigma2_std * scale * scale,
        smoothed,
    })
}

/// Fills every masked entry with the smoothed signal of its column's
/// structural model. Observed entries are returned unchanged.
pub fn impute(panel: &PricePanel, period: usize) -> Result<PricePanel> {
    if period == 0 {
        return Err(Error::Parameter("seasonal period must be at least 1".into()));
    }
    if panel.is_complete() {
        return Ok(panel.clone());
    }
    let n = panel.n_series();
    let t = panel.len();
    let filled: Vec<Result<Option<Vec<f64>>>> = (0..n)
        .into_par_iter()
        .map(|j| {
            let col: Vec<Option<f64>> = (0..t)
                .map(|i| panel.mask()[(i, j)].then(|| panel.values()[(i, j)]))
                .collect();
            if col.iter().all(Option::is_some) {
                return Ok(None);
            }
            impute_column(&col, period)
                .map(|fit| Some(fit.smoothed))
                .map_err(|e| match e {
                    Error::InsufficientData(msg) => {
                        Error::InsufficientData(format!("column {:?}: {msg}", panel.names()[j]))
                    }
                    other => other,
                })
        })
        .collect();
    let mut values = panel.values().clone();
    for (j, res) in filled.into_iter().enumerate() {
        if let Some(smoothed) = res? {
            for i in 0..t {
                if !panel.mask()[(i, j)] {
                    let v = smoothed[i];
                    if v <= 0.0 || !v.is_finite() {
                        return Err(Error::Domain {
                            location: format!("{} {}", panel.start().plus(i as i64), panel.names()[j]),
                            message: format!("imputed level {v} is not a positive price"),
                        });
                    }
                    values[(i, j)] = v;
                }
            }
        }
    }
    PricePanel::complete(panel.names().to_vec(), panel.start(), values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::Month;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    #[test]
    fn complete_panel_is_returned_unchanged() {
        let p = PricePanel::complete(
            vec!["a".into()],
            Month::new(1900, 1).unwrap(),
            DMatrix::from_fn(40, 1, |i, _| 10.0 + (i as f64).sin()),
        )
        .unwrap();
        assert_eq!(impute(&p, 12).unwrap(), p);
    }

    #[test]
    fn sine_gap_is_interpolated() {
        let truth: Vec<f64> = (0..120)
            .map(|t| 10.0 + (2.0 * std::f64::consts::PI * t as f64 / 12.0).sin())
            .collect();
        let mut y: Vec<Option<f64>> = truth.iter().copied().map(Some).collect();
        y[57] = None;
        let fit = impute_column(&y, 12).unwrap();
        assert!(
            (fit.smoothed[57] - truth[57]).abs() < 1e-2,
            "imputed {} vs {}",
            fit.smoothed[57],
            truth[57]
        );
    }

    #[test]
    fn observed_entries_are_untouched() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let noise = Normal::new(0.0, 0.2).unwrap();
        let values = DMatrix::from_fn(96, 2, |i, j| 20.0 + j as f64 + (i as f64 * 0.5).cos() + noise.sample(&mut rng));
        let mut mask = DMatrix::from_element(96, 2, true);
        mask[(10, 0)] = false;
        mask[(50, 1)] = false;
        let p = PricePanel::new(vec!["a".into(), "b".into()], Month::new(1900, 1).unwrap(), values.clone(), mask).unwrap();
        let q = impute(&p, 12).unwrap();
        assert!(q.is_complete());
        for i in 0..96 {
            for j in 0..2 {
                if p.mask()[(i, j)] {
                    assert_eq!(q.values()[(i, j)], values[(i, j)]);
                }
            }
        }
    }

    #[test]
    fn too_few_observations() {
        let y: Vec<Option<f64>> = (0..30).map(|i| (i % 2 == 0).then_some(1.0 + i as f64)).collect();
        assert!(matches!(impute_column(&y, 12), Err(Error::InsufficientData(_))));
        assert!(matches!(impute_column(&y, 0), Err(Error::Parameter(_))));
    }

    #[test]
    fn local_level_only_period_one() {
        let y: Vec<Option<f64>> = (0..50)
            .map(|i| if i == 20 { None } else { Some(5.0 + 0.1 * i as f64) })
            .collect();
        let fit = impute_column(&y, 1).unwrap();
        assert!((fit.smoothed[20] - 7.0).abs() < 0.05, "{}", fit.smoothed[20]);
    }
}
