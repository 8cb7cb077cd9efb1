use std::fs::File;
use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;

use super::{AnnualSeries, Month, PricePanel};
use crate::error::{Error, Result};

/// Which columns of a CSV file hold the panel.
#[derive(Debug, Clone, Default)]
pub struct CsvSchema {
    /// Date column name; `None` means the first column.
    pub date_column: Option<String>,
    /// Numeric columns to keep, in order; `None` keeps every other column.
    pub columns: Option<Vec<String>>,
}

/// Reads a monthly panel. Dates are `YYYY-MM`; empty or non-numeric cells are
/// marked missing and calendar gaps become fully masked rows.
pub fn ingest_csv(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<PricePanel> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(file);
    let headers: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let date_idx = match &schema.date_column {
        None => 0,
        Some(name) => headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Parse {
                row: 1,
                message: format!("no date column named {name:?}"),
            })?,
    };
    let value_idx: Vec<usize> = match &schema.columns {
        None => (0..headers.len()).filter(|&i| i != date_idx).collect(),
        Some(cols) => cols
            .iter()
            .map(|c| {
                headers.iter().position(|h| h == c).ok_or_else(|| Error::Parse {
                    row: 1,
                    message: format!("no column named {c:?}"),
                })
            })
            .collect::<Result<_>>()?,
    };
    if value_idx.is_empty() {
        return Err(Error::Parse {
            row: 1,
            message: "header names no numeric columns".into(),
        });
    }
    let names: Vec<String> = value_idx.iter().map(|&i| headers[i].clone()).collect();

    let mut start: Option<Month> = None;
    let mut last: Option<Month> = None;
    let mut rows: Vec<Vec<Option<f64>>> = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        // header is row 1
        let row = k + 2;
        let rec = rec?;
        let raw_date = rec.get(date_idx).unwrap_or("");
        let date: Month = raw_date
            .parse()
            .map_err(|message| Error::Parse { row, message })?;
        if let Some(prev) = last {
            if date <= prev {
                return Err(Error::Ordering {
                    row,
                    message: format!("{date} does not follow {prev}"),
                });
            }
            for _ in prev.ordinal() + 1..date.ordinal() {
                rows.push(vec![None; value_idx.len()]);
            }
        } else {
            start = Some(date);
        }
        last = Some(date);
        let mut cells = Vec::with_capacity(value_idx.len());
        for (j, &ci) in value_idx.iter().enumerate() {
            let cell = rec.get(ci).unwrap_or("").trim();
            let parsed = cell.parse::<f64>().ok().filter(|v| !v.is_nan());
            if let Some(v) = parsed {
                if !v.is_finite() || v <= 0.0 {
                    return Err(Error::Domain {
                        location: format!("row {row}, column {:?}", names[j]),
                        message: format!("price must be finite and positive, got {cell:?}"),
                    });
                }
            }
            cells.push(parsed);
        }
        rows.push(cells);
    }
    let start = start.ok_or_else(|| Error::InsufficientData(format!("{} has no data rows", path.display())))?;
    let t = rows.len();
    let n = names.len();
    let values = DMatrix::from_fn(t, n, |i, j| rows[i][j].unwrap_or(f64::NAN));
    let mask = DMatrix::from_fn(t, n, |i, j| rows[i][j].is_some());
    PricePanel::new(names, start, values, mask)
}

/// Writes a panel in the ingest layout; missing cells are left empty.
pub fn write_csv(panel: &PricePanel, path: impl AsRef<Path>) -> Result<()> {
    write_grid(panel, path.as_ref(), |i, j| {
        if panel.mask()[(i, j)] {
            panel.values()[(i, j)].to_string()
        } else {
            String::new()
        }
    })
}

/// Writes the sidecar mask: 1 for observed, 0 for imputed or missing.
pub fn write_mask_csv(panel: &PricePanel, mask: &DMatrix<bool>, path: impl AsRef<Path>) -> Result<()> {
    if mask.shape() != panel.values().shape() {
        return Err(Error::Shape("mask does not match panel".into()));
    }
    write_grid(panel, path.as_ref(), |i, j| {
        if mask[(i, j)] { "1" } else { "0" }.to_string()
    })
}

fn write_grid(panel: &PricePanel, path: &Path, cell: impl Fn(usize, usize) -> String) -> Result<()> {
    let mut out = String::new();
    out.push_str("date");
    for name in panel.names() {
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    for i in 0..panel.len() {
        out.push_str(&panel.start().plus(i as i64).to_string());
        for j in 0..panel.n_series() {
            out.push(',');
            out.push_str(&cell(i, j));
        }
        out.push('\n');
    }
    let mut f = File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))
}

/// Reads an annual series: first column an integer year, second a value.
/// Years must be consecutive.
pub fn read_annual_csv(path: impl AsRef<Path>) -> Result<AnnualSeries> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let mut first_year = None;
    let mut values = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let row = k + 2;
        let rec = rec?;
        let year: i32 = rec
            .get(0)
            .unwrap_or("")
            .trim()
            .parse()
            .map_err(|_| Error::Parse {
                row,
                message: "year must be an integer".into(),
            })?;
        let v: f64 = rec
            .get(1)
            .unwrap_or("")
            .trim()
            .parse()
            .map_err(|_| Error::Parse {
                row,
                message: "value must be numeric".into(),
            })?;
        match first_year {
            None => first_year = Some(year),
            Some(y0) => {
                let expect = y0 + values.len() as i32;
                if year != expect {
                    return Err(Error::Ordering {
                        row,
                        message: format!("expected year {expect}, got {year}"),
                    });
                }
            }
        }
        values.push(v);
    }
    let first_year = first_year
        .ok_or_else(|| Error::InsufficientData(format!("{} has no data rows", path.display())))?;
    Ok(AnnualSeries { first_year, values })
}
