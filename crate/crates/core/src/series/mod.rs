//! Monthly price panels: ingestion, log/difference transforms, calendar-year
//! aggregation and missing-value imputation.

mod csv_io;
mod impute;
mod month;

pub use csv_io::{ingest_csv, read_annual_csv, write_csv, write_mask_csv, CsvSchema};
pub use impute::{impute, impute_column, StructuralFit};
pub use month::Month;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Multivariate monthly levels with a missing-value mask.
///
/// Missing entries hold `NaN` in `values` and `false` in `mask`.
#[derive(Debug, Clone, PartialEq)]
pub struct PricePanel {
    names: Vec<String>,
    start: Month,
    values: DMatrix<f64>,
    mask: DMatrix<bool>,
}

impl PricePanel {
    /// Builds a panel, checking shape agreement and strict positivity of every
    /// observed level.
    pub fn new(
        names: Vec<String>,
        start: Month,
        values: DMatrix<f64>,
        mask: DMatrix<bool>,
    ) -> Result<Self> {
        if values.shape() != mask.shape() {
            return Err(Error::Shape(format!(
                "values {:?} vs mask {:?}",
                values.shape(),
                mask.shape()
            )));
        }
        if names.len() != values.ncols() {
            return Err(Error::Shape(format!(
                "{} names for {} columns",
                names.len(),
                values.ncols()
            )));
        }
        let mut values = values;
        for j in 0..values.ncols() {
            for i in 0..values.nrows() {
                if mask[(i, j)] {
                    let v = values[(i, j)];
                    if !v.is_finite() || v <= 0.0 {
                        return Err(Error::Domain {
                            location: format!("{} {}", start.plus(i as i64), names[j]),
                            message: format!("price must be finite and positive, got {v}"),
                        });
                    }
                } else {
                    values[(i, j)] = f64::NAN;
                }
            }
        }
        Ok(PricePanel {
            names,
            start,
            values,
            mask,
        })
    }

    /// A panel with every entry observed.
    pub fn complete(names: Vec<String>, start: Month, values: DMatrix<f64>) -> Result<Self> {
        let mask = DMatrix::from_element(values.nrows(), values.ncols(), true);
        Self::new(names, start, values, mask)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn start(&self) -> Month {
        self.start
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn mask(&self) -> &DMatrix<bool> {
        &self.mask
    }

    pub fn len(&self) -> usize {
        self.values.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.values.nrows() == 0
    }

    pub fn n_series(&self) -> usize {
        self.values.ncols()
    }

    pub fn is_complete(&self) -> bool {
        self.mask.iter().all(|&m| m)
    }

    pub fn n_missing(&self) -> usize {
        self.mask.iter().filter(|&&m| !m).count()
    }

    /// Keeps only the named columns, in the given order.
    pub fn select(&self, columns: &[String]) -> Result<Self> {
        let idx = columns
            .iter()
            .map(|c| {
                self.names
                    .iter()
                    .position(|n| n == c)
                    .ok_or_else(|| Error::Shape(format!("no column named {c:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        let values = self.values.select_columns(&idx);
        let mask = self.mask.select_columns(&idx);
        Ok(PricePanel {
            names: columns.to_vec(),
            start: self.start,
            values,
            mask,
        })
    }
}

/// Natural-log levels, fully observed.
#[derive(Debug, Clone, PartialEq)]
pub struct LogPanel {
    pub names: Vec<String>,
    pub start: Month,
    /// T×n.
    pub values: DMatrix<f64>,
}

impl LogPanel {
    pub fn new(names: Vec<String>, start: Month, values: DMatrix<f64>) -> Result<Self> {
        if names.len() != values.ncols() {
            return Err(Error::Shape(format!(
                "{} names for {} columns",
                names.len(),
                values.ncols()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            let (i, j) = (pos % values.nrows(), pos / values.nrows());
            return Err(Error::Domain {
                location: format!("row {i}, column {j}"),
                message: "log level must be finite".into(),
            });
        }
        Ok(LogPanel {
            names,
            start,
            values,
        })
    }

    pub fn len(&self) -> usize {
        self.values.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.values.nrows() == 0
    }

    pub fn n_series(&self) -> usize {
        self.values.ncols()
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.values.column(j).iter().copied().collect()
    }

    /// Keeps columns by index, in the given order.
    pub fn select(&self, idx: &[usize]) -> LogPanel {
        LogPanel {
            names: idx.iter().map(|&j| self.names[j].clone()).collect(),
            start: self.start,
            values: self.values.select_columns(idx),
        }
    }

    /// Calendar-year means of every column.
    pub fn annualize(&self) -> Result<AnnualPanel> {
        let mut first_year = None;
        let mut columns = Vec::with_capacity(self.n_series());
        for j in 0..self.n_series() {
            let s = annualize(self.start, &self.column(j))?;
            first_year = Some(s.first_year);
            columns.push(s.values);
        }
        let first_year = first_year
            .ok_or_else(|| Error::InsufficientData("panel has no columns".into()))?;
        let years = columns[0].len();
        let values = DMatrix::from_fn(years, columns.len(), |i, j| columns[j][i]);
        Ok(AnnualPanel {
            names: self.names.clone(),
            first_year,
            values,
        })
    }
}

/// First differences of a [`LogPanel`].
#[derive(Debug, Clone, PartialEq)]
pub struct DiffPanel {
    pub names: Vec<String>,
    /// One month after the source panel's start.
    pub start: Month,
    /// (T−1)×n.
    pub values: DMatrix<f64>,
}

impl DiffPanel {
    pub fn len(&self) -> usize {
        self.values.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.values.nrows() == 0
    }
}

/// One value per complete calendar year.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnualSeries {
    pub first_year: i32,
    pub values: Vec<f64>,
}

impl AnnualSeries {
    pub fn years(&self) -> impl Iterator<Item = i32> + '_ {
        (0..self.values.len()).map(move |i| self.first_year + i as i32)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnnualPanel {
    pub names: Vec<String>,
    pub first_year: i32,
    pub values: DMatrix<f64>,
}

/// Element-wise natural log of a fully observed panel.
pub fn to_logs(panel: &PricePanel) -> Result<LogPanel> {
    if !panel.is_complete() {
        return Err(Error::IncompleteData(format!(
            "{} missing entries; impute before taking logs",
            panel.n_missing()
        )));
    }
    LogPanel::new(
        panel.names.clone(),
        panel.start,
        panel.values.map(f64::ln),
    )
}

/// Row t of the output is row t+1 minus row t of the input.
pub fn difference(logs: &LogPanel) -> Result<DiffPanel> {
    let t = logs.len();
    if t < 2 {
        return Err(Error::InsufficientData(format!(
            "differencing needs at least 2 observations, got {t}"
        )));
    }
    let v = &logs.values;
    let values = v.rows(1, t - 1) - v.rows(0, t - 1);
    Ok(DiffPanel {
        names: logs.names.clone(),
        start: logs.start.plus(1),
        values,
    })
}

/// Calendar-year arithmetic means of a monthly series; partial years at
/// either end are dropped.
pub fn annualize(start: Month, monthly: &[f64]) -> Result<AnnualSeries> {
    let skip = ((13 - start.month) % 12) as usize;
    let first_year = if skip == 0 { start.year } else { start.year + 1 };
    let body = monthly.get(skip..).unwrap_or(&[]);
    let values: Vec<f64> = body
        .chunks_exact(12)
        .map(|c| c.iter().sum::<f64>() / 12.0)
        .collect();
    if values.is_empty() {
        return Err(Error::InsufficientData(format!(
            "no complete calendar year in {} months starting {start}",
            monthly.len()
        )));
    }
    Ok(AnnualSeries { first_year, values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn m(y: i32, mo: u32) -> Month {
        Month::new(y, mo).unwrap()
    }

    #[test]
    fn logs_of_ones_and_e() {
        let p = PricePanel::complete(
            vec!["a".into(), "b".into()],
            m(1900, 1),
            DMatrix::from_row_slice(2, 2, &[1.0, std::f64::consts::E, 1.0, 1.0]),
        )
        .unwrap();
        let l = to_logs(&p).unwrap();
        assert_eq!(l.values[(0, 0)], 0.0);
        assert_eq!(l.values[(0, 1)], 1.0);
        assert_eq!(l.values[(1, 1)], 0.0);
    }

    #[test]
    fn logs_match_scalar_loop() {
        let vals: Vec<f64> = (0..30).map(|i| 0.5 + (i as f64 * 0.37).sin().abs() * 10.0).collect();
        let p = PricePanel::complete(
            vec!["a".into(), "b".into(), "c".into()],
            m(1900, 1),
            DMatrix::from_row_slice(10, 3, &vals),
        )
        .unwrap();
        let l = to_logs(&p).unwrap();
        for i in 0..10 {
            for j in 0..3 {
                assert_eq!(l.values[(i, j)], vals[i * 3 + j].ln());
            }
        }
    }

    #[test]
    fn logs_reject_missing() {
        let mut mask = DMatrix::from_element(3, 1, true);
        mask[(1, 0)] = false;
        let p = PricePanel::new(
            vec!["a".into()],
            m(1900, 1),
            DMatrix::from_element(3, 1, 2.0),
            mask,
        )
        .unwrap();
        assert!(matches!(to_logs(&p), Err(Error::IncompleteData(_))));
    }

    #[test]
    fn non_positive_price_is_domain_error() {
        let err = PricePanel::complete(
            vec!["S_T".into()],
            m(1900, 1),
            DMatrix::from_row_slice(2, 1, &[1.0, 0.0]),
        )
        .unwrap_err();
        match err {
            Error::Domain { location, .. } => assert!(location.contains("1900-02 S_T")),
            e => panic!("{e:?}"),
        }
    }

    #[test]
    fn difference_constant_and_ramp() {
        let names = vec!["a".into(), "b".into()];
        let c = LogPanel::new(names.clone(), m(1900, 1), DMatrix::from_element(5, 2, 3.0)).unwrap();
        let d = difference(&c).unwrap();
        assert_eq!(d.len(), 4);
        assert!(d.values.iter().all(|&v| v == 0.0));
        assert_eq!(d.start, m(1900, 2));

        let ramp = LogPanel::new(
            names,
            m(1900, 1),
            DMatrix::from_fn(6, 2, |i, _| 0.25 * i as f64),
        )
        .unwrap();
        let d = difference(&ramp).unwrap();
        assert!(d.values.iter().all(|&v| v == 0.25));
    }

    #[test]
    fn difference_row_count_matches_table_layout() {
        let l = LogPanel::new(vec!["a".into()], m(1881, 4), DMatrix::from_fn(620, 1, |i, _| i as f64)).unwrap();
        assert_eq!(difference(&l).unwrap().len(), 619);
    }

    #[test]
    fn difference_needs_two_rows() {
        let l = LogPanel::new(vec!["a".into()], m(1900, 1), DMatrix::from_element(1, 1, 0.0)).unwrap();
        assert!(matches!(difference(&l), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn annualize_examples() {
        let a = annualize(m(1900, 1), &[4.5; 24]).unwrap();
        assert_eq!(a.values, vec![4.5, 4.5]);
        assert_eq!(a.first_year, 1900);

        let v: Vec<f64> = (1..=12).map(f64::from).collect();
        assert_eq!(annualize(m(1900, 1), &v).unwrap().values, vec![6.5]);
    }

    #[test]
    fn annualize_drops_partial_years() {
        // Apr 1881 .. Nov 1932 holds 51 complete years (1882..=1931)
        let months = (1932 - 1881) * 12 + (11 - 4) + 1;
        let a = annualize(m(1881, 4), &vec![1.0; months]).unwrap();
        assert_eq!(a.first_year, 1882);
        assert_eq!(a.values.len(), 50);
        assert!(matches!(
            annualize(m(1900, 2), &[1.0; 12]),
            Err(Error::InsufficientData(_))
        ));
    }

    proptest! {
        #[test]
        fn cumulative_sum_of_differences_reconstructs_logs(
            raw in proptest::collection::vec(0.01f64..100.0, 6..60)
        ) {
            let t = raw.len() / 2;
            let p = PricePanel::complete(
                vec!["a".into(), "b".into()],
                m(1900, 1),
                DMatrix::from_row_slice(t, 2, &raw[..2 * t]),
            ).unwrap();
            let logs = to_logs(&p).unwrap();
            let d = difference(&logs).unwrap();
            for j in 0..2 {
                let mut acc = logs.values[(0, j)];
                for i in 1..t {
                    acc += d.values[(i - 1, j)];
                    prop_assert!((acc - logs.values[(i, j)]).abs() < 1e-12);
                }
            }
        }

        #[test]
        fn annualize_constant_is_constant(c in -50.0f64..50.0, years in 1usize..6, start_month in 1u32..=12) {
            let s = annualize(m(1900, start_month), &vec![c; years * 12 + 11]).unwrap();
            for v in s.values {
                prop_assert!((v - c).abs() <= 1e-12 * c.abs().max(1.0));
            }
        }
    }
}
