//! Flat `key = value` run configuration.
//!
//! ```text
//! # comments start with '#'
//! input = prices.csv
//! columns = S_T, F_T, S_O, F_O
//! impute_period_months = 12
//! lags = auto
//! smoothing_ratio = 1.0
//! bootstrap_reps = 1000
//! ```
//!
//! Relative paths resolve against the directory holding the config file.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::tv_vecm::{BootstrapConfig, DEFAULT_SMOOTHING_RATIO};
use crate::unit_root::{Detrend, LagCriterion};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "policy", content = "value")]
pub enum LagPolicy {
    /// BIC over `1..=max`.
    Auto(usize),
    Fixed(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "policy", content = "value")]
pub enum RankPolicy {
    /// Sequential trace test at 1%.
    Auto,
    Fixed(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "policy", content = "value")]
pub enum SmoothingPolicy {
    Fixed(f64),
    /// Profile likelihood over a log-spaced grid.
    MaxLikelihood,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PipelineConfig {
    pub input: PathBuf,
    pub date_column: Option<String>,
    pub columns: Option<Vec<String>>,
    pub impute_period: usize,
    pub detrend: Detrend,
    pub criterion: LagCriterion,
    pub lags: LagPolicy,
    pub rank: RankPolicy,
    pub smoothing: SmoothingPolicy,
    pub bootstrap_reps: usize,
    pub coverage: f64,
    pub seed: u64,
    pub output_dir: PathBuf,
}

impl PipelineConfig {
    pub fn new(input: impl Into<PathBuf>, output_dir: impl Into<PathBuf>) -> Self {
        let boot = BootstrapConfig::default();
        PipelineConfig {
            input: input.into(),
            date_column: None,
            columns: None,
            impute_period: 12,
            detrend: Detrend::Trend,
            criterion: LagCriterion::Mbic,
            lags: LagPolicy::Auto(12),
            rank: RankPolicy::Auto,
            smoothing: SmoothingPolicy::Fixed(DEFAULT_SMOOTHING_RATIO),
            bootstrap_reps: boot.reps,
            coverage: boot.coverage,
            seed: boot.seed,
            output_dir: output_dir.into(),
        }
    }

    pub fn bootstrap(&self) -> BootstrapConfig {
        BootstrapConfig {
            reps: self.bootstrap_reps,
            coverage: self.coverage,
            seed: self.seed,
        }
    }

    /// Reads a config file; `output_dir` falls back to `default_output`
    /// when the file does not set it.
    pub fn from_file(path: impl AsRef<Path>, default_output: Option<&Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new(""));
        Self::parse(&text, base, default_output)
    }

    pub fn parse(text: &str, base: &Path, default_output: Option<&Path>) -> Result<Self> {
        let mut cfg = PipelineConfig::new(PathBuf::new(), PathBuf::new());
        let mut have_input = false;
        let mut have_output = false;
        let mut max_lags = 12usize;
        let mut fixed_lags = None;
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                row: no + 1,
                message: format!("expected `key = value`, got {line:?}"),
            })?;
            let (key, value) = (key.trim(), value.trim());
            let bad = |msg: String| Error::Parse { row: no + 1, message: format!("{key}: {msg}") };
            match key {
                "input" => {
                    cfg.input = base.join(value);
                    have_input = true;
                }
                "output_dir" => {
                    cfg.output_dir = base.join(value);
                    have_output = true;
                }
                "date_column" => cfg.date_column = Some(value.to_string()),
                "columns" => {
                    cfg.columns = Some(value.split(',').map(|s| s.trim().to_string()).collect())
                }
                "impute_period_months" => cfg.impute_period = parse_num(value).map_err(bad)?,
                "detrend" => cfg.detrend = value.parse().map_err(bad)?,
                "lag_criterion" => cfg.criterion = value.parse().map_err(bad)?,
                "lags" => {
                    fixed_lags = if value.eq_ignore_ascii_case("auto") {
                        None
                    } else {
                        Some(parse_num(value).map_err(bad)?)
                    }
                }
                "max_lags" => max_lags = parse_num(value).map_err(bad)?,
                "rank" => {
                    cfg.rank = if value.eq_ignore_ascii_case("auto") {
                        RankPolicy::Auto
                    } else {
                        RankPolicy::Fixed(parse_num(value).map_err(bad)?)
                    }
                }
                "smoothing_ratio" => {
                    cfg.smoothing = if value.eq_ignore_ascii_case("ml") {
                        SmoothingPolicy::MaxLikelihood
                    } else {
                        SmoothingPolicy::Fixed(parse_num(value).map_err(bad)?)
                    }
                }
                "bootstrap_reps" => cfg.bootstrap_reps = parse_num(value).map_err(bad)?,
                "coverage" => cfg.coverage = parse_num(value).map_err(bad)?,
                "seed" => cfg.seed = parse_num(value).map_err(bad)?,
                _ => return Err(bad("unknown key".into())),
            }
        }
        if !have_input {
            return Err(Error::Parameter("config does not set `input`".into()));
        }
        if !have_output {
            cfg.output_dir = default_output
                .map(Path::to_path_buf)
                .ok_or_else(|| Error::Parameter("config does not set `output_dir`".into()))?;
        }
        cfg.lags = match fixed_lags {
            Some(k) => LagPolicy::Fixed(k),
            None => LagPolicy::Auto(max_lags),
        };
        Ok(cfg)
    }

    /// Range and path checks; runs before any computation.
    pub fn validate(&self) -> Result<()> {
        if !self.input.is_file() {
            return Err(Error::Parameter(format!(
                "input {} is not a readable file",
                self.input.display()
            )));
        }
        if self.output_dir.exists() && !self.output_dir.is_dir() {
            return Err(Error::Parameter(format!(
                "output_dir {} exists and is not a directory",
                self.output_dir.display()
            )));
        }
        if self.impute_period == 0 {
            return Err(Error::Parameter("impute_period_months must be at least 1".into()));
        }
        match self.lags {
            LagPolicy::Auto(0) | LagPolicy::Fixed(0) => {
                return Err(Error::Parameter("lag orders start at 1".into()))
            }
            _ => {}
        }
        if let RankPolicy::Fixed(0) = self.rank {
            return Err(Error::Parameter(
                "rank 0 leaves no error-correction term to track".into(),
            ));
        }
        if let SmoothingPolicy::Fixed(l) = self.smoothing {
            if !(l > 0.0) || !l.is_finite() {
                return Err(Error::Parameter(format!(
                    "smoothing_ratio must be positive and finite, got {l}"
                )));
            }
        }
        self.bootstrap().validate()
    }
}

fn parse_num<T: std::str::FromStr>(value: &str) -> std::result::Result<T, String>
where
    T::Err: std::fmt::Display,
{
    value.parse::<T>().map_err(|e| format!("{value:?}: {e}"))
}
