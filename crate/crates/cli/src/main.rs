use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};

use tvecm::cointegration::{johansen_design, RankTest, Significance};
use tvecm::design::VecmDesign;
use tvecm::pipeline::{
    cointegration_table, run_pipeline, run_robustness, vecm_table, zeta_svg, zeta_table, LagPolicy,
    PipelineConfig, PipelineError, RankPolicy, SmoothingPolicy, Stage, Table,
};
use tvecm::series::{difference, impute, ingest_csv, to_logs, write_csv, write_mask_csv, CsvSchema, LogPanel};
use tvecm::synth::{generate, Scenario};
use tvecm::tv_vecm::{bootstrap_bands, log_grid, profile_smoothing_ratio, BootstrapConfig};
use tvecm::unit_root::{adf_gls, Detrend, LagCriterion};
use tvecm::vecm::{fit_vecm_design, select_lag_bic};
use tvecm::Error;

const OUTPUT_ENV: &str = "TVECM_OUTPUT_DIR";

#[derive(Parser)]
#[command(name = "tvecm", version, about = "Time-varying VECM estimation and the speed-of-integration index")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Read a monthly price CSV, impute gaps and write the completed panel.
    Ingest(IngestArgs),
    /// ADF-GLS unit-root test on log prices.
    Unitroot(UnitrootArgs),
    /// Johansen cointegration test with a restricted constant.
    Coint(CointArgs),
    /// Time-invariant VECM with HAC standard errors and the Lc statistic.
    Vecm(VecmArgs),
    /// Time-varying VECM, the ζ_t index and bootstrap bands.
    Tvvecm(TvvecmArgs),
    /// Simulate a panel with known loadings.
    Synth(SynthArgs),
    /// Run every stage from a config file.
    Pipeline(PipelineArgs),
    /// Bivariate cointegration between annual ζ and an activity series.
    Robustness(RobustnessArgs),
}

#[derive(Args)]
struct PanelArgs {
    /// Monthly price CSV: a YYYY-MM date column then numeric columns.
    file: PathBuf,
    /// Date column name (default: first column).
    #[arg(long)]
    date_column: Option<String>,
    /// Comma-separated columns to keep.
    #[arg(long, value_delimiter = ',')]
    columns: Option<Vec<String>>,
    /// Seasonal period for imputation, in months.
    #[arg(long, default_value_t = 12)]
    period: usize,
}

impl PanelArgs {
    fn schema(&self) -> CsvSchema {
        CsvSchema {
            date_column: self.date_column.clone(),
            columns: self.columns.clone(),
        }
    }

    fn logs(&self) -> Result<LogPanel, PipelineError> {
        let raw = ingest_csv(&self.file, &self.schema()).map_err(at(Stage::Ingest))?;
        let prices = impute(&raw, self.period).map_err(at(Stage::Impute))?;
        to_logs(&prices).map_err(at(Stage::Transform))
    }
}

#[derive(Args)]
struct IngestArgs {
    #[command(flatten)]
    panel: PanelArgs,
    /// Completed panel.
    #[arg(long)]
    out: PathBuf,
    /// Sidecar mask: 1 observed, 0 imputed.
    #[arg(long)]
    mask: Option<PathBuf>,
}

#[derive(Args)]
struct UnitrootArgs {
    #[command(flatten)]
    panel: PanelArgs,
    /// Deterministic terms: constant or trend.
    #[arg(long, default_value = "trend")]
    case: Detrend,
    /// Lag criterion: maic or mbic.
    #[arg(long, default_value = "mbic")]
    criterion: LagCriterion,
    /// Test only this column.
    #[arg(long)]
    column: Option<String>,
    /// Upper bound for the augmentation order.
    #[arg(long)]
    max_lags: Option<usize>,
    /// Test first differences instead of levels.
    #[arg(long)]
    differences: bool,
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy)]
enum Lags {
    Auto,
    Fixed(usize),
}

impl FromStr for Lags {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(Lags::Auto);
        }
        match s.parse::<usize>() {
            Ok(0) => Err("lag order must be at least 1".into()),
            Ok(k) => Ok(Lags::Fixed(k)),
            Err(_) => Err(format!("expected `auto` or a positive integer, got {s:?}")),
        }
    }
}

#[derive(Args)]
struct LagArgs {
    /// Lagged differences: `auto` (BIC) or a positive integer.
    #[arg(long, default_value = "auto")]
    lags: Lags,
    /// Largest order searched by `--lags auto`.
    #[arg(long, default_value_t = 12)]
    max_lags: usize,
}

impl LagArgs {
    fn resolve(&self, logs: &LogPanel) -> Result<usize, PipelineError> {
        match self.lags {
            Lags::Fixed(k) => Ok(k),
            Lags::Auto => Ok(select_lag_bic(logs, self.max_lags).map_err(at(Stage::LagSelection))?.k),
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Level {
    #[value(name = "1")]
    One,
    #[value(name = "5")]
    Five,
}

#[derive(Args)]
struct CointArgs {
    #[command(flatten)]
    panel: PanelArgs,
    #[command(flatten)]
    lags: LagArgs,
    /// Significance level, in percent, for the rank decision.
    #[arg(long, value_enum, default_value = "1")]
    level: Level,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VecmArgs {
    #[command(flatten)]
    panel: PanelArgs,
    #[command(flatten)]
    lags: LagArgs,
    /// Newey–West truncation lag (default: floor(4 (N/100)^(2/9))).
    #[arg(long)]
    hac_lags: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy)]
enum Lambda {
    Fixed(f64),
    Ml,
}

impl FromStr for Lambda {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("ml") {
            return Ok(Lambda::Ml);
        }
        s.parse::<f64>()
            .map(Lambda::Fixed)
            .map_err(|_| format!("expected `ml` or a positive number, got {s:?}"))
    }
}

#[derive(Clone, Copy)]
enum Rank {
    Auto,
    Fixed(usize),
}

impl FromStr for Rank {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(Rank::Auto);
        }
        s.parse::<usize>()
            .map(Rank::Fixed)
            .map_err(|_| format!("expected `auto` or an integer, got {s:?}"))
    }
}

#[derive(Args)]
struct TvvecmArgs {
    #[command(flatten)]
    panel: PanelArgs,
    #[command(flatten)]
    lags: LagArgs,
    /// Cointegrating rank: `auto` (trace test at 1%) or an integer.
    #[arg(long, default_value = "auto")]
    rank: Rank,
    /// Smoothing ratio, or `ml` for the profile-likelihood maximiser.
    #[arg(long, default_value = "1.0")]
    lambda: Lambda,
    /// Bootstrap replications.
    #[arg(long, default_value_t = 1000)]
    bootstrap: usize,
    #[arg(long, default_value_t = 0.9)]
    coverage: f64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Directory for zeta.csv and zeta.svg.
    #[arg(long, env = OUTPUT_ENV)]
    out_dir: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScenarioKind {
    /// Four prices, three long-run relations, constant loadings.
    Paperlike,
    /// Paper-like with the first loading of the first equation ramping.
    Ramp,
    /// Independent random walks.
    RandomWalks,
    /// Two cointegrated series.
    Bivariate,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, value_enum, default_value = "paperlike")]
    scenario: ScenarioKind,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Sample length for the random-walks and bivariate scenarios.
    #[arg(long, default_value_t = 620)]
    t: usize,
    /// Simulated price panel.
    #[arg(long)]
    out: PathBuf,
    /// True ζ_t per month.
    #[arg(long)]
    truth: Option<PathBuf>,
}

#[derive(Args)]
struct PipelineArgs {
    /// Config file; flags below override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    input: Option<PathBuf>,
    /// Output directory; overrides the config file. Without either,
    /// TVECM_OUTPUT_DIR or ./tvecm-out is used.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    columns: Option<Vec<String>>,
    #[arg(long)]
    lags: Option<Lags>,
    #[arg(long)]
    rank: Option<Rank>,
    #[arg(long)]
    lambda: Option<Lambda>,
    #[arg(long)]
    bootstrap: Option<usize>,
    #[arg(long)]
    coverage: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct RobustnessArgs {
    /// Annual ζ CSV (`year,zeta`), as written by the pipeline.
    #[arg(long)]
    zeta: PathBuf,
    /// Annual activity CSV (`year,value`).
    #[arg(long)]
    activity: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

fn at(stage: Stage) -> impl Fn(Error) -> PipelineError {
    move |source| PipelineError { stage, source }
}

fn emit(table: &Table, out: Option<&Path>) -> Result<(), PipelineError> {
    match out {
        Some(p) => table.write_csv(p).map_err(at(Stage::Output)),
        None => {
            print!("{}", table.render());
            Ok(())
        }
    }
}

fn default_output_dir(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os(OUTPUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("tvecm-out"))
}

fn cmd_ingest(a: IngestArgs) -> Result<(), PipelineError> {
    let raw = ingest_csv(&a.panel.file, &a.panel.schema()).map_err(at(Stage::Ingest))?;
    let filled = impute(&raw, a.panel.period).map_err(at(Stage::Impute))?;
    write_csv(&filled, &a.out).map_err(at(Stage::Output))?;
    if let Some(m) = &a.mask {
        write_mask_csv(&filled, raw.mask(), m).map_err(at(Stage::Output))?;
    }
    eprintln!("{} rows, {} cells imputed", filled.len(), raw.n_missing());
    Ok(())
}

fn cmd_unitroot(a: UnitrootArgs) -> Result<(), PipelineError> {
    let logs = a.panel.logs()?;
    let diffs = difference(&logs).map_err(at(Stage::Transform))?;
    let idx: Vec<usize> = match &a.column {
        Some(c) => vec![logs.names.iter().position(|n| n == c).ok_or_else(|| PipelineError {
            stage: Stage::Ingest,
            source: Error::Parameter(format!("no column named {c:?}")),
        })?],
        None => (0..logs.n_series()).collect(),
    };
    let mut table = Table {
        header: ["series", "statistic", "lags", "phi_hat", "cv_1pct", "cv_5pct", "cv_10pct", "reject_1pct", "nobs"]
            .map(String::from)
            .to_vec(),
        rows: Vec::new(),
    };
    for j in idx {
        let (name, series) = if a.differences {
            (
                format!("d{}", logs.names[j]),
                diffs.values.column(j).iter().copied().collect::<Vec<_>>(),
            )
        } else {
            (logs.names[j].clone(), logs.column(j))
        };
        let r = adf_gls(&series, a.case, a.criterion, a.max_lags).map_err(at(Stage::UnitRoot))?;
        table.rows.push(vec![
            name,
            format!("{:.4}", r.statistic),
            r.lags.to_string(),
            format!("{:.4}", r.phi_hat),
            r.critical_values.one.to_string(),
            r.critical_values.five.to_string(),
            r.critical_values.ten.to_string(),
            r.reject_1pct.to_string(),
            r.nobs.to_string(),
        ]);
    }
    match &a.out {
        Some(p) => table.write_csv(p).map_err(at(Stage::Output)),
        None => {
            let csv = table.to_csv().map_err(at(Stage::Output))?;
            print!("{}", String::from_utf8_lossy(&csv));
            Ok(())
        }
    }
}

fn cmd_coint(a: CointArgs) -> Result<(), PipelineError> {
    let logs = a.panel.logs()?;
    let k = a.lags.resolve(&logs)?;
    let design = VecmDesign::new(&logs, k).map_err(at(Stage::Cointegration))?;
    let level = match a.level {
        Level::One => Significance::One,
        Level::Five => Significance::Five,
    };
    let c = johansen_design(&design, RankTest::Trace, level).map_err(at(Stage::Cointegration))?;
    emit(&cointegration_table(&c), a.out.as_deref())?;
    eprintln!("k = {k}, selected rank = {}", c.selected_rank);
    Ok(())
}

fn cmd_vecm(a: VecmArgs) -> Result<(), PipelineError> {
    let logs = a.panel.logs()?;
    let k = a.lags.resolve(&logs)?;
    let design = VecmDesign::new(&logs, k).map_err(at(Stage::Vecm))?;
    let fit = fit_vecm_design(&design, None, a.hac_lags).map_err(at(Stage::Vecm))?;
    emit(&vecm_table(&fit), a.out.as_deref())
}

fn cmd_tvvecm(a: TvvecmArgs) -> Result<(), PipelineError> {
    let cfg = BootstrapConfig {
        reps: a.bootstrap,
        coverage: a.coverage,
        seed: a.seed,
    };
    cfg.validate().map_err(at(Stage::Config))?;
    if let Lambda::Fixed(l) = a.lambda {
        if !(l > 0.0 && l.is_finite()) {
            return Err(at(Stage::Config)(Error::Parameter(format!(
                "lambda must be positive and finite, got {l}"
            ))));
        }
    }
    let logs = a.panel.logs()?;
    let k = a.lags.resolve(&logs)?;
    let design = VecmDesign::new(&logs, k).map_err(at(Stage::Cointegration))?;
    let c = johansen_design(&design, RankTest::Trace, Significance::One).map_err(at(Stage::Cointegration))?;
    let rank = match a.rank {
        Rank::Auto => c.selected_rank,
        Rank::Fixed(r) => r,
    };
    if rank == 0 || rank > logs.n_series() {
        return Err(at(Stage::Cointegration)(Error::Parameter(format!(
            "rank {rank} leaves no usable error-correction term"
        ))));
    }
    let beta = c.beta_for_rank(rank);
    let lambda = match a.lambda {
        Lambda::Fixed(l) => l,
        Lambda::Ml => {
            profile_smoothing_ratio(&logs, k, &beta, &log_grid(-2.0, 6.0, 17))
                .map_err(at(Stage::TvVecm))?
                .best
        }
    };
    let path = bootstrap_bands(&logs, k, &beta, lambda, &cfg).map_err(at(Stage::Bootstrap))?;
    let dir = default_output_dir(a.out_dir);
    std::fs::create_dir_all(&dir).map_err(|e| at(Stage::Output)(Error::io(&dir, e)))?;
    zeta_table(&path)
        .write_csv(dir.join("zeta.csv"))
        .map_err(at(Stage::Output))?;
    let svg = dir.join("zeta.svg");
    std::fs::write(&svg, zeta_svg(&path)).map_err(|e| at(Stage::Output)(Error::io(&svg, e)))?;
    eprintln!(
        "k = {k}, rank = {rank}, lambda = {lambda}; wrote {}",
        dir.display()
    );
    Ok(())
}

fn cmd_synth(a: SynthArgs) -> Result<(), PipelineError> {
    let sc = match a.scenario {
        ScenarioKind::Paperlike => Scenario::paper_like(a.seed),
        ScenarioKind::Ramp => Scenario::paper_like_ramp(a.seed, 0, 0, -0.05, -0.4),
        ScenarioKind::RandomWalks => Scenario::random_walks(4, a.t, a.seed),
        ScenarioKind::Bivariate => Scenario::bivariate(a.t, a.seed),
    };
    let sim = generate(&sc).map_err(at(Stage::Config))?;
    let prices = sim.prices().map_err(at(Stage::Transform))?;
    write_csv(&prices, &a.out).map_err(at(Stage::Output))?;
    if let Some(p) = &a.truth {
        let table = Table {
            header: vec!["date".into(), "zeta".into()],
            rows: sim
                .zeta
                .iter()
                .enumerate()
                .map(|(i, z)| vec![sim.levels.start.plus(i as i64).to_string(), z.to_string()])
                .collect(),
        };
        table.write_csv(p).map_err(at(Stage::Output))?;
    }
    Ok(())
}

fn cmd_pipeline(a: PipelineArgs) -> Result<(), PipelineError> {
    let mut cfg = match &a.config {
        Some(path) => {
            let fallback = default_output_dir(a.out_dir.clone());
            PipelineConfig::from_file(path, Some(&fallback)).map_err(at(Stage::Config))?
        }
        None => {
            let input = a.input.clone().ok_or_else(|| {
                at(Stage::Config)(Error::Parameter("give --config or --input".into()))
            })?;
            PipelineConfig::new(input, default_output_dir(a.out_dir.clone()))
        }
    };
    if let Some(p) = a.input {
        cfg.input = p;
    }
    if let Some(d) = a.out_dir {
        cfg.output_dir = d;
    }
    if a.columns.is_some() {
        cfg.columns = a.columns;
    }
    if let Some(l) = a.lags {
        cfg.lags = match l {
            Lags::Auto => match cfg.lags {
                LagPolicy::Auto(m) => LagPolicy::Auto(m),
                LagPolicy::Fixed(_) => LagPolicy::Auto(12),
            },
            Lags::Fixed(k) => LagPolicy::Fixed(k),
        };
    }
    if let Some(r) = a.rank {
        cfg.rank = match r {
            Rank::Auto => RankPolicy::Auto,
            Rank::Fixed(r) => RankPolicy::Fixed(r),
        };
    }
    if let Some(l) = a.lambda {
        cfg.smoothing = match l {
            Lambda::Fixed(v) => SmoothingPolicy::Fixed(v),
            Lambda::Ml => SmoothingPolicy::MaxLikelihood,
        };
    }
    if let Some(b) = a.bootstrap {
        cfg.bootstrap_reps = b;
    }
    if let Some(c) = a.coverage {
        cfg.coverage = c;
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    let report = run_pipeline(&cfg)?;
    eprintln!(
        "N = {}, k = {}, rank = {}, lambda = {}, Lc = {:.3} (5% cv {:.3}); wrote {} files to {}",
        report.nobs,
        report.lags,
        report.rank,
        report.smoothing_ratio,
        report.lc_stat,
        report.lc_cv_5pct,
        report.outputs.len(),
        cfg.output_dir.display()
    );
    Ok(())
}

fn cmd_robustness(a: RobustnessArgs) -> Result<(), PipelineError> {
    let table = run_robustness(&a.zeta, &a.activity, &a.out)?;
    print!("{}", table.render());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Ingest(a) => cmd_ingest(a),
        Command::Unitroot(a) => cmd_unitroot(a),
        Command::Coint(a) => cmd_coint(a),
        Command::Vecm(a) => cmd_vecm(a),
        Command::Tvvecm(a) => cmd_tvvecm(a),
        Command::Synth(a) => cmd_synth(a),
        Command::Pipeline(a) => cmd_pipeline(a),
        Command::Robustness(a) => cmd_robustness(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.stage.exit_code() as u8)
        }
    }
}
