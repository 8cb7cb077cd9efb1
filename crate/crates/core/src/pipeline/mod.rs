//! End-to-end runs: raw prices to tables, the ζ_t series and its plot.

mod config;
mod plot;
mod tables;

use std::fmt;
use std::path::{Path, PathBuf};

use serde::Serialize;

pub use config::{LagPolicy, PipelineConfig, RankPolicy, SmoothingPolicy};
pub use plot::zeta_svg;
pub use tables::{
    cointegration_table, descriptive_table, robustness_table, vecm_table, Table, UnitRootScreen,
};

use crate::cointegration::{johansen_design, RankTest, Significance};
use crate::design::VecmDesign;
use crate::error::Error;
use crate::series::{annualize, difference, impute, ingest_csv, read_annual_csv, to_logs, CsvSchema};
use crate::tv_vecm::{
    bootstrap_bands, log_grid, profile_smoothing_ratio, IntegrationSpeedPath,
};
use crate::vecm::{fit_vecm_bivariate, fit_vecm_design, select_lag_bic};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Config,
    Ingest,
    Impute,
    Transform,
    UnitRoot,
    LagSelection,
    Cointegration,
    Vecm,
    TvVecm,
    Bootstrap,
    Output,
    Robustness,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Config => "config",
            Stage::Ingest => "ingest",
            Stage::Impute => "impute",
            Stage::Transform => "transform",
            Stage::UnitRoot => "unit-root",
            Stage::LagSelection => "lag-selection",
            Stage::Cointegration => "cointegration",
            Stage::Vecm => "vecm",
            Stage::TvVecm => "tv-vecm",
            Stage::Bootstrap => "bootstrap",
            Stage::Output => "output",
            Stage::Robustness => "robustness",
        }
    }

    /// Process exit status reported by the command-line tool.
    pub fn exit_code(self) -> i32 {
        match self {
            Stage::Config => 2,
            Stage::Ingest => 3,
            Stage::Impute => 4,
            Stage::Transform => 5,
            Stage::UnitRoot => 6,
            Stage::LagSelection => 7,
            Stage::Cointegration => 8,
            Stage::Vecm => 9,
            Stage::TvVecm => 10,
            Stage::Bootstrap => 11,
            Stage::Output => 12,
            Stage::Robustness => 13,
        }
    }
}

#[derive(Debug)]
pub struct PipelineError {
    pub stage: Stage,
    pub source: Error,
}

impl PipelineError {
    pub fn hint(&self) -> &'static str {
        match (&self.stage, &self.source) {
            (Stage::Config, _) => "check the config keys and that the input file exists",
            (Stage::Ingest, Error::Parse { .. }) => "fix the offending row or cell in the input csv",
            (Stage::Ingest, Error::Ordering { .. }) => "sort the input by date and remove duplicate months",
            (Stage::Ingest, Error::Domain { .. }) => "prices must be strictly positive",
            (Stage::Ingest, _) => "check the input path and column names",
            (Stage::Impute, _) => "supply a longer sample or reduce gaps in the affected series",
            (Stage::UnitRoot, _) => "the levels look stationary; this model needs I(1) series",
            (Stage::LagSelection, _) => "set `lags` to a fixed order or lower `max_lags`",
            (Stage::Cointegration, Error::InsufficientData(_)) => "no cointegration found; fix `rank` only if theory demands it",
            (Stage::Cointegration, _) => "check for duplicated or collinear series",
            (Stage::Vecm, _) => "drop collinear series or lower the lag order",
            (Stage::TvVecm, _) => "try a larger smoothing_ratio",
            (Stage::Bootstrap, Error::Instability { .. }) => "the fitted system is close to explosive; raise smoothing_ratio",
            (Stage::Bootstrap, _) => "bootstrap_reps must be at least 100 and coverage inside (0, 1)",
            (Stage::Output, _) => "check that the output directory is writable",
            (Stage::Transform, _) => "the panel must be complete and positive after imputation",
            (Stage::Robustness, Error::Alignment(_)) => "both annual files must cover the same years",
            (Stage::Robustness, _) => "both annual series need at least 20 positive observations",
        }
    }
}

impl fmt::Display for PipelineError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} stage failed: {} (hint: {})", self.stage.name(), self.source, self.hint())
    }
}

impl std::error::Error for PipelineError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.source)
    }
}

trait AtStage<T> {
    fn at(self, stage: Stage) -> Result<T, PipelineError>;
}

impl<T> AtStage<T> for crate::error::Result<T> {
    fn at(self, stage: Stage) -> Result<T, PipelineError> {
        self.map_err(|source| PipelineError { stage, source })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PipelineReport {
    pub nobs: usize,
    pub lags: usize,
    pub rank: usize,
    pub smoothing_ratio: f64,
    pub lc_stat: f64,
    pub lc_cv_5pct: f64,
    pub imputed_cells: usize,
    pub outputs: Vec<String>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    seed: u64,
    config: &'a PipelineConfig,
    results: &'a PipelineReport,
}

/// `date,zeta,lo,hi,accel`; bands empty when absent, acceleration empty on
/// the first row.
pub fn zeta_table(path: &IntegrationSpeedPath) -> Table {
    let rows = (0..path.zeta.len())
        .map(|i| {
            let (lo, hi) = path.bands.as_ref().map_or((String::new(), String::new()), |b| {
                (b.lower[i].to_string(), b.upper[i].to_string())
            });
            let accel = if i == 0 { String::new() } else { path.acceleration[i - 1].to_string() };
            vec![
                path.first_month.plus(i as i64).to_string(),
                path.zeta[i].to_string(),
                lo,
                hi,
                accel,
            ]
        })
        .collect();
    Table {
        header: ["date", "zeta", "lo", "hi", "accel"].map(String::from).to_vec(),
        rows,
    }
}

/// Calendar-year means of ζ_t as `year,zeta`.
pub fn annual_zeta_table(path: &IntegrationSpeedPath) -> crate::error::Result<Table> {
    let annual = annualize(path.first_month, &path.zeta)?;
    Ok(Table {
        header: vec!["year".into(), "zeta".into()],
        rows: annual
            .years()
            .zip(&annual.values)
            .map(|(y, v)| vec![y.to_string(), v.to_string()])
            .collect(),
    })
}

struct Outputs {
    dir: PathBuf,
    written: Vec<PathBuf>,
}

impl Outputs {
    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), PipelineError> {
        let path = self.dir.join(name);
        std::fs::write(&path, bytes).map_err(|e| PipelineError {
            stage: Stage::Output,
            source: Error::io(&path, e),
        })?;
        self.written.push(path);
        Ok(())
    }

    fn table(&mut self, name: &str, t: &Table) -> Result<(), PipelineError> {
        let bytes = t.to_csv().at(Stage::Output)?;
        self.write(name, &bytes)
    }

    fn discard(&self) {
        for p in &self.written {
            let _ = std::fs::remove_file(p);
        }
    }
}

/// Runs every stage and writes `table1.csv`, `table2.csv`, `table3.csv`,
/// `zeta.csv`, `zeta_annual.csv`, `zeta.svg` and `manifest.json` into the
/// output directory. Files from a failed run are removed.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<PipelineReport, PipelineError> {
    cfg.validate().at(Stage::Config)?;
    std::fs::create_dir_all(&cfg.output_dir).map_err(|e| PipelineError {
        stage: Stage::Output,
        source: Error::io(&cfg.output_dir, e),
    })?;
    let mut out = Outputs {
        dir: cfg.output_dir.clone(),
        written: Vec::new(),
    };
    let result = run_stages(cfg, &mut out);
    if result.is_err() {
        out.discard();
    }
    result
}

fn run_stages(cfg: &PipelineConfig, out: &mut Outputs) -> Result<PipelineReport, PipelineError> {
    let schema = CsvSchema {
        date_column: cfg.date_column.clone(),
        columns: cfg.columns.clone(),
    };
    let raw = ingest_csv(&cfg.input, &schema).at(Stage::Ingest)?;
    let imputed_cells = raw.n_missing();
    let prices = impute(&raw, cfg.impute_period).at(Stage::Impute)?;
    let logs = to_logs(&prices).at(Stage::Transform)?;
    let diffs = difference(&logs).at(Stage::Transform)?;

    let screen = UnitRootScreen::run(&logs, &diffs, cfg.detrend, cfg.criterion).at(Stage::UnitRoot)?;
    out.table("table1.csv", &descriptive_table(&logs, &diffs, &screen))?;
    if screen.contradicts_integration() {
        return Err(PipelineError {
            stage: Stage::UnitRoot,
            source: Error::Domain {
                location: "levels".into(),
                message: "every level series rejects a unit root at 1%".into(),
            },
        });
    }

    let k = match cfg.lags {
        LagPolicy::Fixed(k) => k,
        LagPolicy::Auto(max) => select_lag_bic(&logs, max).at(Stage::LagSelection)?.k,
    };
    let design = VecmDesign::new(&logs, k).at(Stage::Cointegration)?;
    let coint = johansen_design(&design, RankTest::Trace, Significance::One).at(Stage::Cointegration)?;
    out.table("table2.csv", &cointegration_table(&coint))?;
    let rank = match cfg.rank {
        RankPolicy::Fixed(r) if r > logs.n_series() => {
            return Err(PipelineError {
                stage: Stage::Cointegration,
                source: Error::Parameter(format!("rank {r} exceeds {} series", logs.n_series())),
            })
        }
        RankPolicy::Fixed(r) => r,
        RankPolicy::Auto => coint.selected_rank,
    };
    if rank == 0 {
        return Err(PipelineError {
            stage: Stage::Cointegration,
            source: Error::InsufficientData("trace test selects rank 0 at 1%".into()),
        });
    }
    let beta = coint.beta_for_rank(rank);

    let fit = fit_vecm_design(&design, None, None).at(Stage::Vecm)?;
    out.table("table3.csv", &vecm_table(&fit))?;

    let smoothing_ratio = match cfg.smoothing {
        SmoothingPolicy::Fixed(l) => l,
        SmoothingPolicy::MaxLikelihood => {
            profile_smoothing_ratio(&logs, k, &beta, &log_grid(-2.0, 6.0, 17))
                .at(Stage::TvVecm)?
                .best
        }
    };
    let path = bootstrap_bands(&logs, k, &beta, smoothing_ratio, &cfg.bootstrap()).map_err(|source| {
        let stage = match source {
            Error::Instability { .. } | Error::Parameter(_) => Stage::Bootstrap,
            _ => Stage::TvVecm,
        };
        PipelineError { stage, source }
    })?;
    out.table("zeta.csv", &zeta_table(&path))?;
    out.table("zeta_annual.csv", &annual_zeta_table(&path).at(Stage::Output)?)?;
    out.write("zeta.svg", zeta_svg(&path).as_bytes())?;

    let mut report = PipelineReport {
        nobs: logs.len(),
        lags: k,
        rank,
        smoothing_ratio,
        lc_stat: fit.lc_stat,
        lc_cv_5pct: fit.lc_critical_5pct(),
        imputed_cells,
        outputs: out
            .written
            .iter()
            .filter_map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
            .collect(),
    };
    report.outputs.push("manifest.json".into());
    let manifest = Manifest {
        tool: "tvecm",
        version: env!("CARGO_PKG_VERSION"),
        seed: cfg.seed,
        config: cfg,
        results: &report,
    };
    let mut json = serde_json::to_vec_pretty(&manifest).map_err(|e| PipelineError {
        stage: Stage::Output,
        source: Error::Unsupported(e.to_string()),
    })?;
    json.push(b'\n');
    out.write("manifest.json", &json)?;
    Ok(report)
}

/// Bivariate cointegration and VECM between annual ζ and an annual activity
/// series, both in logs; writes the two-panel table to `out_path`.
pub fn run_robustness(
    zeta_csv: impl AsRef<Path>,
    activity_csv: impl AsRef<Path>,
    out_path: impl AsRef<Path>,
) -> Result<Table, PipelineError> {
    let z = read_annual_csv(zeta_csv).at(Stage::Ingest)?;
    let a = read_annual_csv(activity_csv).at(Stage::Ingest)?;
    if z.first_year != a.first_year || z.values.len() != a.values.len() {
        return Err(PipelineError {
            stage: Stage::Robustness,
            source: Error::Alignment(format!(
                "spans differ: {}..={} vs {}..={}",
                z.first_year,
                z.first_year + z.values.len() as i32 - 1,
                a.first_year,
                a.first_year + a.values.len() as i32 - 1
            )),
        });
    }
    let log_of = |vals: &[f64], what: &str| -> Result<Vec<f64>, PipelineError> {
        vals.iter()
            .enumerate()
            .map(|(i, v)| {
                if *v > 0.0 {
                    Ok(v.ln())
                } else {
                    Err(PipelineError {
                        stage: Stage::Robustness,
                        source: Error::Domain {
                            location: format!("{what} year {}", z.first_year + i as i32),
                            message: format!("non-positive value {v}"),
                        },
                    })
                }
            })
            .collect()
    };
    let lz = log_of(&z.values, "zeta")?;
    let la = log_of(&a.values, "activity")?;
    let fit = fit_vecm_bivariate(["log_zeta", "log_activity"], z.first_year, &lz, &la).at(Stage::Robustness)?;
    let table = robustness_table(&fit);
    let out_path = out_path.as_ref();
    table.write_csv(out_path).at(Stage::Output)?;
    Ok(table)
}
