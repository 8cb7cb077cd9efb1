use std::path::Path;

use tvecm::pipeline::{run_pipeline, run_robustness, PipelineConfig, RankPolicy, Stage};
use tvecm::series::write_csv;
use tvecm::synth::{generate, Scenario};

fn write_paper_like(dir: &Path, seed: u64) -> std::path::PathBuf {
    let sim = generate(&Scenario::paper_like(seed)).unwrap();
    let path = dir.join("prices.csv");
    write_csv(&sim.prices().unwrap(), &path).unwrap();
    path
}

fn quick_config(input: &Path, out: &Path) -> PipelineConfig {
    let mut cfg = PipelineConfig::new(input, out);
    cfg.bootstrap_reps = 100;
    cfg.lags = tvecm::pipeline::LagPolicy::Auto(4);
    cfg
}

#[test]
fn paper_like_run_writes_every_artifact_and_finds_three_relations() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_paper_like(dir.path(), 3);
    let out = dir.path().join("out");
    let report = run_pipeline(&quick_config(&input, &out)).unwrap();
    assert_eq!(report.rank, 3);
    assert_eq!(report.lags, 1);
    for name in ["table1.csv", "table2.csv", "table3.csv", "zeta.csv", "zeta_annual.csv", "zeta.svg", "manifest.json"] {
        assert!(out.join(name).is_file(), "{name} missing");
    }
    let table2 = std::fs::read_to_string(out.join("table2.csv")).unwrap();
    let decisions: Vec<&str> = table2.lines().skip(1).map(|l| l.rsplit(',').next().unwrap()).collect();
    assert_eq!(decisions, ["reject", "reject", "reject", "accept"]);
    let zeta = std::fs::read_to_string(out.join("zeta.csv")).unwrap();
    assert!(zeta.starts_with("date,zeta,lo,hi,accel\n"));
    assert_eq!(zeta.lines().count(), 1 + 620 - 2);
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 42);
    assert_eq!(manifest["results"]["rank"], 3);
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_paper_like(dir.path(), 4);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    run_pipeline(&quick_config(&input, &a)).unwrap();
    let mut cfg = quick_config(&input, &b);
    cfg.output_dir = b.clone();
    run_pipeline(&cfg).unwrap();
    for name in ["table1.csv", "table2.csv", "table3.csv", "zeta.csv", "zeta.svg"] {
        assert_eq!(std::fs::read(a.join(name)).unwrap(), std::fs::read(b.join(name)).unwrap(), "{name}");
    }
}

#[test]
fn zero_bootstrap_reps_fail_before_any_output() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_paper_like(dir.path(), 5);
    let out = dir.path().join("out");
    let mut cfg = quick_config(&input, &out);
    cfg.bootstrap_reps = 0;
    let err = run_pipeline(&cfg).unwrap_err();
    assert_eq!(err.stage, Stage::Config);
    assert!(!out.exists());
}

#[test]
fn stationary_levels_stop_at_unit_root_stage_and_clean_up() {
    let dir = tempfile::tempdir().unwrap();
    let mut text = String::from("date,a,b\n");
    let mut state = 1u64;
    let mut noise = || {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5
    };
    let (mut a, mut b) = (0.0f64, 0.0f64);
    for i in 0..300 {
        a = 0.2 * a + noise();
        b = 0.1 * b + noise();
        let m = tvecm::series::Month::new(1900, 1).unwrap().plus(i);
        text.push_str(&format!("{m},{},{}\n", (1.0 + 0.2 * a).exp(), (2.0 + 0.2 * b).exp()));
    }
    let input = dir.path().join("p.csv");
    std::fs::write(&input, text).unwrap();
    let out = dir.path().join("out");
    let err = run_pipeline(&quick_config(&input, &out)).unwrap_err();
    assert_eq!(err.stage, Stage::UnitRoot);
    assert!(err.to_string().contains("unit-root stage failed"));
    assert!(!out.join("table1.csv").exists());
}

#[test]
fn fixed_rank_above_dimension_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_paper_like(dir.path(), 6);
    let mut cfg = quick_config(&input, &dir.path().join("out"));
    cfg.rank = RankPolicy::Fixed(5);
    assert_eq!(run_pipeline(&cfg).unwrap_err().stage, Stage::Cointegration);
}

fn write_annual(path: &Path, first: i32, values: &[f64]) {
    let mut s = String::from("year,value\n");
    for (i, v) in values.iter().enumerate() {
        s.push_str(&format!("{},{}\n", first + i as i32, v));
    }
    std::fs::write(path, s).unwrap();
}

#[test]
fn robustness_table_has_both_panels() {
    let dir = tempfile::tempdir().unwrap();
    let sim = generate(&Scenario::bivariate(50, 2)).unwrap();
    let a: Vec<f64> = sim.levels.column(0).iter().map(|v| v.exp()).collect();
    let b: Vec<f64> = sim.levels.column(1).iter().map(|v| v.exp()).collect();
    write_annual(&dir.path().join("z.csv"), 1883, &a);
    write_annual(&dir.path().join("t.csv"), 1883, &b);
    let out = dir.path().join("table5.csv");
    run_robustness(dir.path().join("z.csv"), dir.path().join("t.csv"), &out).unwrap();
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.lines().any(|l| l.starts_with("cointegration,none,stat,")));
    assert!(text.lines().any(|l| l.starts_with("vecm,level:const,coef,")));
    assert!(text.contains("vecm,nobs,value,48,48"));
}

#[test]
fn robustness_rejects_mismatched_spans() {
    let dir = tempfile::tempdir().unwrap();
    write_annual(&dir.path().join("z.csv"), 1883, &[1.0; 30]);
    write_annual(&dir.path().join("t.csv"), 1884, &[1.0; 30]);
    let err = run_robustness(dir.path().join("z.csv"), dir.path().join("t.csv"), dir.path().join("o.csv")).unwrap_err();
    assert!(matches!(err.source, tvecm::Error::Alignment(_)));
}
