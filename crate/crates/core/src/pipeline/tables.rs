use std::path::Path;

use crate::cointegration::CointegrationResult;
use crate::error::{Error, Result};
use crate::series::{DiffPanel, LogPanel};
use crate::unit_root::{adf_gls, AdfGlsResult, Detrend, LagCriterion};
use crate::vecm::{BivariateVecm, VecmFit};

/// A rectangular table of already formatted cells.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(header: Vec<String>) -> Self {
        Table { header, rows: Vec::new() }
    }

    fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.into_inner()
            .map_err(|e| Error::io("<memory>", std::io::Error::other(e.to_string())))
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv()?).map_err(|e| Error::io(path, e))
    }

    /// Space-aligned plain-text rendering.
    pub fn render(&self) -> String {
        let cols = self.header.len();
        let mut width = vec![0; cols];
        for r in std::iter::once(&self.header).chain(&self.rows) {
            for (w, c) in width.iter_mut().zip(r) {
                *w = (*w).max(c.chars().count());
            }
        }
        let mut out = String::new();
        for r in std::iter::once(&self.header).chain(&self.rows) {
            let line: Vec<String> = r
                .iter()
                .zip(&width)
                .map(|(c, w)| format!("{c:>w$}"))
                .collect();
            out.push_str(line.join("  ").trim_end());
            out.push('\n');
        }
        out
    }
}

fn num(v: f64) -> String {
    format!("{v:.4}")
}

fn moments(col: &[f64]) -> [f64; 4] {
    let n = col.len() as f64;
    let mean = col.iter().sum::<f64>() / n;
    let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let min = col.iter().copied().fold(f64::INFINITY, f64::min);
    let max = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    [mean, var.sqrt(), min, max]
}

/// Unit-root results behind the descriptive table.
#[derive(Debug, Clone)]
pub struct UnitRootScreen {
    pub levels: Vec<AdfGlsResult>,
    pub differences: Vec<AdfGlsResult>,
}

impl UnitRootScreen {
    pub fn run(logs: &LogPanel, diffs: &DiffPanel, detrend: Detrend, criterion: LagCriterion) -> Result<Self> {
        let levels = (0..logs.n_series())
            .map(|j| adf_gls(&logs.column(j), detrend, criterion, None))
            .collect::<Result<Vec<_>>>()?;
        let differences = (0..diffs.values.ncols())
            .map(|j| {
                let col: Vec<f64> = diffs.values.column(j).iter().copied().collect();
                adf_gls(&col, detrend, criterion, None)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(UnitRootScreen { levels, differences })
    }

    /// True when every level series rejects a unit root at 1%.
    pub fn contradicts_integration(&self) -> bool {
        !self.levels.is_empty() && self.levels.iter().all(|r| r.reject_1pct)
    }
}

/// Descriptive statistics and ADF-GLS results, levels then differences.
pub fn descriptive_table(logs: &LogPanel, diffs: &DiffPanel, screen: &UnitRootScreen) -> Table {
    let mut header = vec!["statistic".to_string()];
    header.extend(logs.names.iter().cloned());
    header.extend(diffs.names.iter().map(|n| format!("d{n}")));
    let mut t = Table::new(header);
    let level_m: Vec<[f64; 4]> = (0..logs.n_series()).map(|j| moments(&logs.column(j))).collect();
    let diff_m: Vec<[f64; 4]> = (0..diffs.values.ncols())
        .map(|j| moments(&diffs.values.column(j).iter().copied().collect::<Vec<_>>()))
        .collect();
    for (i, label) in ["mean", "sd", "min", "max"].iter().enumerate() {
        let mut row = vec![label.to_string()];
        row.extend(level_m.iter().chain(&diff_m).map(|m| num(m[i])));
        t.push(row);
    }
    let all: Vec<&AdfGlsResult> = screen.levels.iter().chain(&screen.differences).collect();
    let mut row = vec!["adf_gls".to_string()];
    row.extend(all.iter().map(|r| num(r.statistic)));
    t.push(row);
    let mut row = vec!["lags".to_string()];
    row.extend(all.iter().map(|r| r.lags.to_string()));
    t.push(row);
    let mut row = vec!["phi_hat".to_string()];
    row.extend(all.iter().map(|r| num(r.phi_hat)));
    t.push(row);
    let mut row = vec!["reject_1pct".to_string()];
    row.extend(all.iter().map(|r| r.reject_1pct.to_string()));
    t.push(row);
    let mut row = vec!["nobs".to_string()];
    row.extend(std::iter::repeat_n(logs.len().to_string(), logs.n_series()));
    row.extend(std::iter::repeat_n(diffs.len().to_string(), diffs.values.ncols()));
    t.push(row);
    t
}

fn hypothesis(r: usize) -> String {
    if r == 0 {
        "none".into()
    } else {
        format!("at_most_{r}")
    }
}

/// Johansen eigenvalues, statistics and 1% critical values per null rank.
pub fn cointegration_table(c: &CointegrationResult) -> Table {
    let mut t = Table::new(
        [
            "hypothesis",
            "eigenvalue",
            "max_eigen",
            "max_eigen_cv_1pct",
            "trace",
            "trace_cv_1pct",
            "trace_decision",
        ]
        .map(String::from)
        .to_vec(),
    );
    for r in 0..c.eigenvalues.len() {
        let cv = c.critical_values[r];
        let (mcv, tcv) = cv.map_or((String::new(), String::new()), |v| {
            (format!("{:.2}", v.max_eigen_1), format!("{:.2}", v.trace_1))
        });
        let decision = match cv {
            Some(v) if c.trace_stats[r] > v.trace_1 => "reject",
            Some(_) => "accept",
            None => "",
        };
        t.push(vec![
            hypothesis(r),
            num(c.eigenvalues[r]),
            format!("{:.2}", c.maxeig_stats[r]),
            mcv,
            format!("{:.2}", c.trace_stats[r]),
            tcv,
            decision.into(),
        ]);
    }
    t
}

fn coefficient_rows(t: &mut Table, fit: &VecmFit) {
    let nk = fit.gamma.ncols();
    for (i, label) in fit.regressor_labels.iter().enumerate() {
        let block = if i < nk { "difference" } else { "level" };
        let mut coef = vec![block.to_string(), label.clone(), "coef".into()];
        coef.extend(fit.coefficients.row(i).iter().map(|v| num(*v)));
        t.push(coef);
        let mut se = vec![block.to_string(), label.clone(), "hac_se".into()];
        se.extend(fit.hac_se.row(i).iter().map(|v| num(*v)));
        t.push(se);
    }
    let mut r2 = vec!["fit".into(), "adj_r2".into(), "value".into()];
    r2.extend(fit.r2_adj.iter().map(|v| num(*v)));
    t.push(r2);
}

fn equation_header(first: &str, fit: &VecmFit) -> Vec<String> {
    let mut header = vec![first.to_string(), "regressor".into(), "statistic".into()];
    header.extend(fit.names.iter().map(|n| format!("d{n}")));
    header
}

/// Time-invariant VECM coefficients with HAC standard errors, adjusted R²
/// and the joint Lc statistic.
pub fn vecm_table(fit: &VecmFit) -> Table {
    let mut t = Table::new(equation_header("block", fit));
    coefficient_rows(&mut t, fit);
    let n = fit.names.len();
    let mut lc = vec!["fit".into(), "lc_joint".into(), "value".into(), num(fit.lc_stat)];
    lc.extend(std::iter::repeat_n(String::new(), n - 1));
    t.push(lc);
    let mut cv = vec!["fit".into(), "lc_cv_5pct".into(), "value".into(), num(fit.lc_critical_5pct())];
    cv.extend(std::iter::repeat_n(String::new(), n - 1));
    t.push(cv);
    let mut nobs = vec!["fit".into(), "nobs".into(), "value".into()];
    nobs.extend(std::iter::repeat_n(fit.nobs().to_string(), n));
    t.push(nobs);
    t
}

/// Two panels: bivariate cointegration tests (1% critical values) on top,
/// VECM coefficients below.
pub fn robustness_table(b: &BivariateVecm) -> Table {
    let names = &b.fit.names;
    let mut t = Table::new(
        ["panel", "row", "statistic", "first", "second"].map(String::from).to_vec(),
    );
    let c = &b.cointegration;
    t.push(vec![
        "cointegration".into(),
        "hypothesis".into(),
        "columns".into(),
        "max_eigen".into(),
        "trace".into(),
    ]);
    for r in 0..c.eigenvalues.len() {
        let h = hypothesis(r);
        t.push(vec!["cointegration".into(), h.clone(), "eigenvalue".into(), num(c.eigenvalues[r]), String::new()]);
        t.push(vec![
            "cointegration".into(),
            h.clone(),
            "stat".into(),
            format!("{:.2}", c.maxeig_stats[r]),
            format!("{:.2}", c.trace_stats[r]),
        ]);
        if let Some(cv) = c.critical_values[r] {
            t.push(vec![
                "cointegration".into(),
                h,
                "cv_1pct".into(),
                format!("{:.2}", cv.max_eigen_1),
                format!("{:.2}", cv.trace_1),
            ]);
        }
    }
    t.push(vec![
        "cointegration".into(),
        "selected_rank".into(),
        "value".into(),
        c.selected_rank.to_string(),
        String::new(),
    ]);
    t.push(vec![
        "vecm".into(),
        "equation".into(),
        "columns".into(),
        format!("d{}", names[0]),
        format!("d{}", names[1]),
    ]);
    let mut inner = Table::new(equation_header("block", &b.fit));
    coefficient_rows(&mut inner, &b.fit);
    for row in inner.rows {
        let label = format!("{}:{}", row[0], row[1]);
        t.push(vec!["vecm".into(), label, row[2].clone(), row[3].clone(), row[4].clone()]);
    }
    let n = b.fit.nobs().to_string();
    t.push(vec!["vecm".into(), "nobs".into(), "value".into(), n.clone(), n]);
    t
}
