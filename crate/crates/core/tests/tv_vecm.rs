use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use tvecm::design::VecmDesign;
use tvecm::series::LogPanel;
use tvecm::synth::{generate, Scenario};
use tvecm::tv_vecm::smoother::{path_roughness, solve_path, solve_path_banded};
use tvecm::tv_vecm::{
    bootstrap_bands, fit_tv_vecm, integration_speed, largest_singular_value, BootstrapConfig,
};
use tvecm::vecm::fit_vecm;

fn random_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

/// Power iteration on `A A'` from a fixed start; returns sqrt of the
/// dominant eigenvalue.
fn power_iteration_sv(a: &DMatrix<f64>) -> f64 {
    let g = a * a.transpose();
    let mut v = nalgebra::DVector::from_element(g.nrows(), 1.0).normalize();
    let mut est = 0.0;
    for _ in 0..5000 {
        let w = &g * &v;
        let norm = w.norm();
        if norm == 0.0 {
            return 0.0;
        }
        let next = w / norm;
        let rq = next.dot(&(&g * &next));
        if (rq - est).abs() <= 1e-15 * rq.abs() {
            est = rq;
            break;
        }
        est = rq;
        v = next;
    }
    est.max(0.0).sqrt()
}

#[test]
fn singular_value_agrees_with_svd_and_power_iteration() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..200 {
        let a = random_matrix(4, 3, &mut rng);
        let z = largest_singular_value(&a);
        let svd = a.clone().svd(false, false).singular_values.max();
        assert!((z - svd).abs() < 1e-10, "{z} vs {svd}");
        assert!((z - power_iteration_sv(&a)).abs() < 1e-10);
    }
}

#[test]
fn zeta_is_invariant_to_equation_permutation() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let a = random_matrix(4, 3, &mut rng);
    let perm = [2usize, 0, 3, 1];
    let b = DMatrix::from_fn(4, 3, |i, j| a[(perm[i], j)]);
    assert!((largest_singular_value(&a) - largest_singular_value(&b)).abs() < 1e-10);
}

fn paper_like_sample(seed: u64) -> (LogPanel, DMatrix<f64>) {
    let sc = Scenario::paper_like(seed);
    let sim = generate(&sc).unwrap();
    (sim.levels, sc.beta)
}

#[test]
fn fit_is_invariant_to_orthogonal_rotation_of_beta() {
    let (levels, beta) = paper_like_sample(21);
    let a = fit_tv_vecm(&levels, 1, &beta, 1.0).unwrap();
    let (c, s) = (0.6f64, 0.8f64);
    let q = DMatrix::from_row_slice(3, 3, &[c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0]);
    let b = fit_tv_vecm(&levels, 1, &(&beta * &q), 1.0).unwrap();
    assert!((&a.residual_path - &b.residual_path).amax() < 1e-8);
    let za = integration_speed(&a).unwrap().zeta;
    let zb = integration_speed(&b).unwrap().zeta;
    for (x, y) in za.iter().zip(&zb) {
        assert!((x - y).abs() < 1e-8);
    }
    for (aa, ab) in a.alpha_path.iter().zip(&b.alpha_path) {
        assert!((aa * &q - ab).amax() < 1e-8);
    }
}

#[test]
fn permuting_equations_leaves_zeta_unchanged() {
    let (levels, beta) = paper_like_sample(22);
    let perm = [3usize, 1, 0, 2];
    let values = DMatrix::from_fn(levels.len(), 4, |i, j| levels.values[(i, perm[j])]);
    let names = perm.iter().map(|&j| levels.names[j].clone()).collect();
    let permuted = LogPanel::new(names, levels.start, values).unwrap();
    let beta_p = DMatrix::from_fn(5, 3, |i, j| if i == 0 { beta[(0, j)] } else { beta[(perm[i - 1] + 1, j)] });
    let za = integration_speed(&fit_tv_vecm(&levels, 1, &beta, 1.0).unwrap()).unwrap().zeta;
    let zb = integration_speed(&fit_tv_vecm(&permuted, 1, &beta_p, 1.0).unwrap()).unwrap().zeta;
    for (x, y) in za.iter().zip(&zb) {
        assert!((x - y).abs() < 1e-10);
    }
}

#[test]
fn very_large_smoothing_ratio_reproduces_time_invariant_fit() {
    let (levels, beta) = paper_like_sample(23);
    let tv = fit_tv_vecm(&levels, 1, &beta, 1e12).unwrap();
    let fixed = fit_vecm(&levels, 1, Some(&beta)).unwrap();
    for a in &tv.alpha_path {
        assert!((a - &fixed.alpha).amax() < 1e-6);
    }
    for g in &tv.gamma_path {
        assert!((g - &fixed.gamma).amax() < 1e-6);
    }
}

#[test]
fn banded_and_recursive_solvers_agree_on_model_design() {
    let (levels, beta) = paper_like_sample(24);
    let design = VecmDesign::new(&levels, 1).unwrap();
    let x = {
        let ec = design.ec_terms(&beta).unwrap();
        let mut out = DMatrix::zeros(design.nobs(), design.z1.ncols() + 3);
        out.columns_mut(0, 4).copy_from(&design.z1);
        out.columns_mut(4, 3).copy_from(&ec);
        out
    };
    for lambda in [1.0, 100.0] {
        let a = solve_path(&x, &design.z0, lambda).unwrap();
        let b = solve_path_banded(&x, &design.z0, lambda).unwrap();
        let scale = b.theta.iter().map(|t| t.amax()).fold(1.0, f64::max);
        for (ta, tb) in a.theta.iter().zip(&b.theta) {
            assert!((ta - tb).amax() < 1e-8 * scale);
        }
    }
}

#[test]
fn path_roughness_falls_as_smoothing_rises() {
    let (levels, beta) = paper_like_sample(25);
    let design = VecmDesign::new(&levels, 1).unwrap();
    let ec = design.ec_terms(&beta).unwrap();
    let mut x = DMatrix::zeros(design.nobs(), 7);
    x.columns_mut(0, 4).copy_from(&design.z1);
    x.columns_mut(4, 3).copy_from(&ec);
    let rough: Vec<f64> = [0.5, 5.0, 50.0, 500.0]
        .iter()
        .map(|&l| path_roughness(&solve_path(&x, &design.z0, l).unwrap().theta))
        .collect();
    for w in rough.windows(2) {
        assert!(w[0] >= w[1]);
    }
}

#[test]
fn bootstrap_is_seed_deterministic_and_bands_nest() {
    let (levels, beta) = paper_like_sample(26);
    let cfg = BootstrapConfig { reps: 100, coverage: 0.5, seed: 9 };
    let a = bootstrap_bands(&levels, 1, &beta, 100.0, &cfg).unwrap();
    let b = bootstrap_bands(&levels, 1, &beta, 100.0, &cfg).unwrap();
    assert_eq!(a, b);
    let wide = bootstrap_bands(&levels, 1, &beta, 100.0, &BootstrapConfig { coverage: 0.95, ..cfg }).unwrap();
    let (na, nw) = (a.bands.clone().unwrap(), wide.bands.unwrap());
    for t in 0..na.lower.len() {
        assert!(nw.lower[t] <= na.lower[t] && na.upper[t] <= nw.upper[t]);
        assert!(na.lower[t] <= na.upper[t]);
    }
    let other = bootstrap_bands(&levels, 1, &beta, 100.0, &BootstrapConfig { seed: 10, ..cfg }).unwrap();
    assert_ne!(other.bands, a.bands);
}

#[test]
fn bootstrap_rejects_too_few_replications() {
    let (levels, beta) = paper_like_sample(27);
    let cfg = BootstrapConfig { reps: 10, coverage: 0.9, seed: 1 };
    assert!(matches!(
        bootstrap_bands(&levels, 1, &beta, 1.0, &cfg),
        Err(tvecm::Error::Parameter(_))
    ));
}

#[test]
fn constant_truth_is_recovered_under_strong_smoothing() {
    let sc = Scenario::paper_like(28);
    let sim = generate(&sc).unwrap();
    let fit = fit_tv_vecm(&sim.levels, 1, &sc.beta, 1e4).unwrap();
    let zeta = integration_speed(&fit).unwrap().zeta;
    let truth = sim.zeta[0];
    let rmse = (zeta.iter().map(|z| (z - truth).powi(2)).sum::<f64>() / zeta.len() as f64).sqrt();
    assert!(rmse < 0.25 * truth, "rmse {rmse} truth {truth}");
}
