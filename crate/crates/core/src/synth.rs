//! Ground-truth generator: cointegrated systems with a fixed β and scheduled
//! paths for the loadings α_t and short-run matrices Γ_t.
//!
//! ```text
//! ΔX_t = Σ_{i=1..k} Γ_{i,t} ΔX_{t−i} + α_t β'(1, X_{t−k})' + ε_t,   ε_t ~ N(0, Σ)
//! ```

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::series::{LogPanel, Month, PricePanel};
use crate::tv_vecm::largest_singular_value;

pub const DEFAULT_BURN_IN: usize = 200;

/// Tolerance for classifying a companion root as a unit root.
const UNIT_ROOT_TOL: f64 = 1e-6;

/// A matrix-valued schedule over the emitted sample `0..T`.
#[derive(Debug, Clone, PartialEq)]
pub enum MatrixPath {
    Constant(DMatrix<f64>),
    /// Linear interpolation from `start` (t = 0) to `end` (t = T−1).
    Ramp { start: DMatrix<f64>, end: DMatrix<f64> },
    /// `before` for t < `at`, `after` from `at` on.
    Step {
        before: DMatrix<f64>,
        after: DMatrix<f64>,
        at: usize,
    },
    /// One matrix per emitted period.
    Sequence(Vec<DMatrix<f64>>),
}

impl MatrixPath {
    pub fn at(&self, t: usize, len: usize) -> DMatrix<f64> {
        match self {
            MatrixPath::Constant(m) => m.clone(),
            MatrixPath::Ramp { start, end } => {
                let w = if len > 1 { t as f64 / (len - 1) as f64 } else { 0.0 };
                start * (1.0 - w) + end * w
            }
            MatrixPath::Step { before, after, at } => {
                if t < *at {
                    before.clone()
                } else {
                    after.clone()
                }
            }
            MatrixPath::Sequence(seq) => seq[t.min(seq.len() - 1)].clone(),
        }
    }

    fn shape(&self) -> (usize, usize) {
        match self {
            MatrixPath::Constant(m) => m.shape(),
            MatrixPath::Ramp { start, .. } => start.shape(),
            MatrixPath::Step { before, .. } => before.shape(),
            MatrixPath::Sequence(seq) => seq.first().map(|m| m.shape()).unwrap_or((0, 0)),
        }
    }

    fn shapes_agree(&self) -> bool {
        let s = self.shape();
        match self {
            MatrixPath::Constant(_) => true,
            MatrixPath::Ramp { end, .. } => end.shape() == s,
            MatrixPath::Step { after, .. } => after.shape() == s,
            MatrixPath::Sequence(seq) => !seq.is_empty() && seq.iter().all(|m| m.shape() == s),
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, MatrixPath::Constant(_))
    }
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub names: Vec<String>,
    pub n: usize,
    pub r: usize,
    /// Emitted sample length (levels).
    pub t: usize,
    /// (n+1)×r, constant row first.
    pub beta: DMatrix<f64>,
    /// n×r per period.
    pub alpha_path: MatrixPath,
    /// n×(n·k) per period: Γ_1 … Γ_k side by side.
    pub gamma_path: MatrixPath,
    pub noise_cov: DMatrix<f64>,
    pub seed: u64,
    pub burn_in: usize,
    pub start: Month,
}

/// Output of [`generate`].
#[derive(Debug, Clone)]
pub struct Simulated {
    pub levels: LogPanel,
    /// True ζ_t at every emitted period.
    pub zeta: Vec<f64>,
    /// True α_t at every emitted period.
    pub alpha: Vec<DMatrix<f64>>,
}

impl Simulated {
    /// True ζ aligned with the rows of a design built with `k` lagged
    /// differences.
    pub fn zeta_for_design(&self, k: usize) -> &[f64] {
        &self.zeta[k + 1..]
    }

    /// Simulated log levels mapped back to prices.
    pub fn prices(&self) -> Result<PricePanel> {
        PricePanel::complete(
            self.levels.names.clone(),
            self.levels.start,
            self.levels.values.map(f64::exp),
        )
    }
}

/// Unit variances with a common correlation `rho`, scaled to s.d. `sd`.
pub fn equicorrelated_cov(n: usize, sd: f64, rho: f64) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |i, j| if i == j { sd * sd } else { rho * sd * sd })
}

fn default_names(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("x{i}")).collect()
}

impl Scenario {
    /// Lag order implied by the Γ path.
    pub fn k(&self) -> usize {
        let (_, cols) = self.gamma_path.shape();
        (cols / self.n.max(1)).max(1)
    }

    /// `n` independent driftless random walks (α ≡ 0, Γ ≡ 0), unit noise with
    /// 0.3 cross-correlation.
    pub fn random_walks(n: usize, t: usize, seed: u64) -> Self {
        Scenario {
            names: default_names(n),
            n,
            r: 0,
            t,
            beta: DMatrix::zeros(n + 1, 0),
            alpha_path: MatrixPath::Constant(DMatrix::zeros(n, 0)),
            gamma_path: MatrixPath::Constant(DMatrix::zeros(n, n)),
            noise_cov: equicorrelated_cov(n, 1.0, 0.3),
            seed,
            burn_in: DEFAULT_BURN_IN,
            start: Month { year: 1881, month: 4 },
        }
    }

    /// Four log prices (two spot/futures pairs in two cities) tied by three
    /// long-run relations, one lagged difference, T = 620 monthly
    /// observations and returns of roughly 5% monthly s.d.
    pub fn paper_like(seed: u64) -> Self {
        let beta = paper_like_beta();
        Scenario {
            names: vec!["S_T".into(), "F_T".into(), "S_O".into(), "F_O".into()],
            n: 4,
            r: 3,
            t: 620,
            beta,
            alpha_path: MatrixPath::Constant(paper_like_alpha()),
            gamma_path: MatrixPath::Constant(paper_like_gamma()),
            noise_cov: equicorrelated_cov(4, 0.05, 0.3),
            seed,
            burn_in: DEFAULT_BURN_IN,
            start: Month { year: 1881, month: 4 },
        }
    }

    /// [`Scenario::paper_like`] with loading entry `(row, col)` ramping
    /// linearly from `from` to `to` over the sample.
    pub fn paper_like_ramp(seed: u64, row: usize, col: usize, from: f64, to: f64) -> Self {
        let mut s = Scenario::paper_like(seed);
        let mut start = paper_like_alpha();
        let mut end = start.clone();
        start[(row, col)] = from;
        end[(row, col)] = to;
        s.alpha_path = MatrixPath::Ramp { start, end };
        s
    }

    /// Two series with one cointegrating relation `x1 − x2 + c`, one lagged
    /// difference, annual-length samples.
    pub fn bivariate(t: usize, seed: u64) -> Self {
        let beta = DMatrix::from_column_slice(3, 1, &[0.5, 1.0, -1.0]);
        let alpha = DMatrix::from_column_slice(2, 1, &[-0.45, 0.2]);
        let gamma = DMatrix::from_row_slice(2, 2, &[0.2, 0.0, 0.0, 0.1]);
        Scenario {
            names: vec!["y1".into(), "y2".into()],
            n: 2,
            r: 1,
            t,
            beta,
            alpha_path: MatrixPath::Constant(alpha),
            gamma_path: MatrixPath::Constant(gamma),
            noise_cov: equicorrelated_cov(2, 0.1, 0.3),
            seed,
            burn_in: DEFAULT_BURN_IN,
            start: Month { year: 1883, month: 1 },
        }
    }

    /// Checks shapes, positive definiteness of the noise covariance, and
    /// companion stability at every period.
    pub fn validate(&self) -> Result<()> {
        let n = self.n;
        if n == 0 || self.r > n {
            return Err(Error::Parameter(format!("invalid dimensions n = {n}, r = {}", self.r)));
        }
        if self.names.len() != n {
            return Err(Error::Shape(format!("{} names for {n} series", self.names.len())));
        }
        if self.beta.shape() != (n + 1, self.r) {
            return Err(Error::Shape(format!("beta must be {}×{}", n + 1, self.r)));
        }
        if !self.alpha_path.shapes_agree() || self.alpha_path.shape() != (n, self.r) {
            return Err(Error::Shape(format!("alpha path must be {n}×{}", self.r)));
        }
        let (gr, gc) = self.gamma_path.shape();
        if !self.gamma_path.shapes_agree() || gr != n || gc == 0 || gc % n != 0 {
            return Err(Error::Shape(format!("gamma path must be {n}×(n·k) with k ≥ 1")));
        }
        if let MatrixPath::Sequence(seq) = &self.alpha_path {
            if seq.len() < self.t {
                return Err(Error::Shape("alpha sequence shorter than the sample".into()));
            }
        }
        if let MatrixPath::Sequence(seq) = &self.gamma_path {
            if seq.len() < self.t {
                return Err(Error::Shape("gamma sequence shorter than the sample".into()));
            }
        }
        let sym = (&self.noise_cov - self.noise_cov.transpose()).norm();
        if self.noise_cov.shape() != (n, n) || sym > 1e-12 || self.noise_cov.clone().cholesky().is_none() {
            return Err(Error::Parameter("noise covariance must be symmetric positive definite".into()));
        }
        if self.t < self.k() + 3 {
            return Err(Error::Parameter(format!("sample length {} is too short", self.t)));
        }
        let mut last: Option<(DMatrix<f64>, DMatrix<f64>)> = None;
        for t in 0..self.t {
            let a = self.alpha_path.at(t, self.t);
            let g = self.gamma_path.at(t, self.t);
            if let Some((la, lg)) = &last {
                if *la == a && *lg == g {
                    continue;
                }
            }
            self.check_companion(&a, &g)
                .map_err(|message| Error::Instability {
                    message: format!("period {t}: {message}"),
                    replication: None,
                })?;
            last = Some((a, g));
        }
        Ok(())
    }

    fn check_companion(&self, alpha: &DMatrix<f64>, gamma: &DMatrix<f64>) -> std::result::Result<(), String> {
        let moduli = companion_moduli(alpha, gamma, &self.beta);
        let unit = self.n - self.r;
        for (i, m) in moduli.iter().enumerate() {
            if i < unit {
                if (m - 1.0).abs() > UNIT_ROOT_TOL {
                    return Err(format!(
                        "expected {unit} unit roots, root {i} has modulus {m:.6}"
                    ));
                }
            } else if *m >= 1.0 - UNIT_ROOT_TOL {
                return Err(format!("stationary part has a root of modulus {m:.6}"));
            }
        }
        Ok(())
    }

    /// Moduli of the level-VAR companion roots at period `t`, descending.
    pub fn companion_moduli_at(&self, t: usize) -> Vec<f64> {
        companion_moduli(
            &self.alpha_path.at(t, self.t),
            &self.gamma_path.at(t, self.t),
            &self.beta,
        )
    }
}

fn paper_like_beta() -> DMatrix<f64> {
    // rows: const, S_T, F_T, S_O, F_O
    DMatrix::from_row_slice(
        5,
        3,
        &[
            -0.02, 0.01, 0.02, //
            1.0, 1.0, 0.0, //
            -1.0, 0.0, 0.0, //
            0.0, -1.0, 1.0, //
            0.0, 0.0, -1.0,
        ],
    )
}

fn paper_like_alpha() -> DMatrix<f64> {
    DMatrix::from_row_slice(
        4,
        3,
        &[
            -0.15, -0.10, 0.00, //
            0.10, 0.00, 0.00, //
            0.00, 0.15, -0.10, //
            0.00, 0.00, 0.15,
        ],
    )
}

fn paper_like_gamma() -> DMatrix<f64> {
    DMatrix::from_row_slice(
        4,
        4,
        &[
            0.20, 0.05, 0.00, 0.00, //
            0.00, 0.15, 0.00, 0.00, //
            0.10, 0.00, 0.05, 0.00, //
            0.00, 0.00, 0.05, 0.20,
        ],
    )
}

/// Companion matrix of the level VAR implied by the error-correction form
/// with `k` lagged differences and the level term at lag `k`.
pub fn companion_matrix(alpha: &DMatrix<f64>, gamma: &DMatrix<f64>, beta: &DMatrix<f64>) -> DMatrix<f64> {
    let n = alpha.nrows();
    let k = gamma.ncols() / n;
    let p = k + 1;
    let pi = alpha * beta.rows(1, n).transpose();
    // X_t = Σ_{j=1..p} A_j X_{t−j} + const
    let mut a: Vec<DMatrix<f64>> = vec![DMatrix::zeros(n, n); p];
    a[0] += DMatrix::identity(n, n);
    for i in 0..k {
        let g = gamma.columns(i * n, n);
        a[i] += g;
        a[i + 1] -= g;
    }
    a[k - 1] += &pi;
    let dim = n * p;
    let mut c = DMatrix::zeros(dim, dim);
    for (j, aj) in a.iter().enumerate() {
        c.view_mut((0, j * n), (n, n)).copy_from(aj);
    }
    for i in 1..p {
        c.view_mut((i * n, (i - 1) * n), (n, n))
            .copy_from(&DMatrix::identity(n, n));
    }
    c
}

fn companion_moduli(alpha: &DMatrix<f64>, gamma: &DMatrix<f64>, beta: &DMatrix<f64>) -> Vec<f64> {
    let c = companion_matrix(alpha, gamma, beta);
    let mut m: Vec<f64> = c.complex_eigenvalues().iter().map(|z| z.norm()).collect();
    m.sort_by(|a, b| b.total_cmp(a));
    m
}

/// Simulates the scenario. Deterministic in `seed`.
pub fn generate(s: &Scenario) -> Result<Simulated> {
    s.validate()?;
    let n = s.n;
    let k = s.k();
    let total = s.burn_in + s.t;
    let chol = s
        .noise_cov
        .clone()
        .cholesky()
        .expect("validated positive definite")
        .l();
    let mut rng = ChaCha8Rng::seed_from_u64(s.seed);

    // start on the long-run manifold: minimum-norm X with β'(1, X) = 0
    let mut x0 = DVector::zeros(n);
    if s.r > 0 {
        let bx = s.beta.rows(1, n).transpose();
        let rhs = -s.beta.row(0).transpose();
        let bbt = &bx * bx.transpose();
        if let Some(sol) = bbt.clone().cholesky().map(|c| c.solve(&rhs)) {
            x0 = bx.transpose() * sol;
        }
    }
    let history = k + 1;
    let mut levels: Vec<DVector<f64>> = vec![x0.clone(); history];
    let mut diffs: Vec<DVector<f64>> = vec![DVector::zeros(n); history];
    let mut out = DMatrix::zeros(s.t, n);
    let mut zeta = Vec::with_capacity(s.t);
    let mut alphas = Vec::with_capacity(s.t);

    for step in 0..total {
        let emit = step.checked_sub(s.burn_in);
        let period = emit.unwrap_or(0);
        let alpha = s.alpha_path.at(period, s.t);
        let gamma = s.gamma_path.at(period, s.t);
        let z: DVector<f64> = DVector::from_fn(n, |_, _| StandardNormal.sample(&mut rng));
        let eps = &chol * z;
        let len = levels.len();
        let mut dx = eps;
        for i in 1..=k {
            dx += gamma.columns((i - 1) * n, n) * &diffs[len - i];
        }
        if s.r > 0 {
            let lvl = &levels[len - k];
            let mut zrow = DVector::zeros(n + 1);
            zrow[0] = 1.0;
            zrow.rows_mut(1, n).copy_from(lvl);
            dx += &alpha * (s.beta.transpose() * zrow);
        }
        let x = &levels[len - 1] + &dx;
        if x.iter().any(|v| !v.is_finite() || v.abs() > 1e6) {
            return Err(Error::Instability {
                message: format!("simulated level exploded at step {step}"),
                replication: None,
            });
        }
        levels.push(x.clone());
        diffs.push(dx);
        if levels.len() > 4 * history {
            levels.drain(..levels.len() - history);
            diffs.drain(..diffs.len() - history);
        }
        if let Some(e) = emit {
            out.set_row(e, &x.transpose());
            zeta.push(largest_singular_value(&alpha));
            alphas.push(alpha);
        }
    }
    let levels = LogPanel::new(s.names.clone(), s.start, out)?;
    Ok(Simulated {
        levels,
        zeta,
        alpha: alphas,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_is_bit_identical() {
        let a = generate(&Scenario::paper_like(7)).unwrap();
        let b = generate(&Scenario::paper_like(7)).unwrap();
        assert_eq!(a.levels.values, b.levels.values);
        let c = generate(&Scenario::paper_like(8)).unwrap();
        assert_ne!(a.levels.values, c.levels.values);
    }

    #[test]
    fn constant_alpha_gives_constant_zeta() {
        let sim = generate(&Scenario::paper_like(1)).unwrap();
        assert_eq!(sim.zeta.len(), 620);
        assert!(sim.zeta.iter().all(|&z| z == sim.zeta[0]));
        assert!(sim.zeta[0] > 0.0);
    }

    #[test]
    fn unit_roots_match_common_trends() {
        let s = Scenario::paper_like(1);
        let m = s.companion_moduli_at(0);
        assert_eq!(m.len(), 8);
        assert!((m[0] - 1.0).abs() < 1e-9);
        assert!(m[1] < 0.99, "{m:?}");

        let rw = Scenario::random_walks(3, 100, 0);
        let m = rw.companion_moduli_at(0);
        assert!(m.iter().take(3).all(|v| (v - 1.0).abs() < 1e-9));
    }

    #[test]
    fn explosive_loading_is_rejected() {
        let mut s = Scenario::paper_like(1);
        let mut a = paper_like_alpha();
        a[(0, 0)] = 1.5;
        s.alpha_path = MatrixPath::Step {
            before: paper_like_alpha(),
            after: a,
            at: 300,
        };
        match s.validate() {
            Err(Error::Instability { message, .. }) => assert!(message.contains("period 300"), "{message}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn equilibrium_errors_do_not_grow() {
        let s = Scenario {
            t: 4000,
            ..Scenario::paper_like(3)
        };
        let sim = generate(&s).unwrap();
        let x = &sim.levels.values;
        let ec = |rows: std::ops::Range<usize>| {
            let m: Vec<f64> = rows
                .map(|i| {
                    let mut z = vec![1.0];
                    z.extend(x.row(i).iter());
                    let v = DVector::from_vec(z);
                    (s.beta.transpose() * v)[0]
                })
                .collect();
            let mean = m.iter().sum::<f64>() / m.len() as f64;
            m.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / m.len() as f64
        };
        let early = ec(0..1000);
        let late = ec(3000..4000);
        assert!(late < 3.0 * early && early < 3.0 * late, "{early} vs {late}");
    }

    #[test]
    fn bad_noise_cov_rejected() {
        let mut s = Scenario::random_walks(2, 50, 0);
        s.noise_cov = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(s.validate(), Err(Error::Parameter(_))));
    }
}
