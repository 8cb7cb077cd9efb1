use nalgebra::DMatrix;

use super::{fit_vecm_design, VecmFit};
use crate::cointegration::{johansen_design, CointegrationResult, RankTest, Significance};
use crate::design::VecmDesign;
use crate::error::{Error, Result};
use crate::series::{LogPanel, Month};

/// Two-variable robustness VECM: cointegration pre-test plus a fit with an
/// unrestricted level block.
#[derive(Debug, Clone)]
pub struct BivariateVecm {
    pub cointegration: CointegrationResult,
    pub fit: VecmFit,
    pub first_year: i32,
}

/// Fits the bivariate VECM with one lagged difference and restricted
/// constant. Inputs are already in logs and cover the same years.
pub fn fit_vecm_bivariate(
    names: [&str; 2],
    first_year: i32,
    a: &[f64],
    b: &[f64],
) -> Result<BivariateVecm> {
    if a.len() != b.len() {
        return Err(Error::Alignment(format!(
            "series lengths differ: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    if a.len() < 20 {
        return Err(Error::InsufficientData(format!(
            "bivariate VECM needs at least 20 annual observations, got {}",
            a.len()
        )));
    }
    let values = DMatrix::from_fn(a.len(), 2, |i, j| if j == 0 { a[i] } else { b[i] });
    // annual data carried on a January-anchored monthly index
    let levels = LogPanel::new(
        names.iter().map(|s| s.to_string()).collect(),
        Month { year: first_year, month: 1 },
        values,
    )?;
    let design = VecmDesign::new(&levels, 1)?;
    let cointegration = johansen_design(&design, RankTest::Trace, Significance::One)?;
    let fit = fit_vecm_design(&design, None, None)?;
    Ok(BivariateVecm {
        cointegration,
        fit,
        first_year,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn misaligned_and_short_inputs() {
        assert!(matches!(
            fit_vecm_bivariate(["a", "b"], 1900, &[0.0; 30], &[0.0; 29]),
            Err(Error::Alignment(_))
        ));
        assert!(matches!(
            fit_vecm_bivariate(["a", "b"], 1900, &[0.0; 19], &[0.0; 19]),
            Err(Error::InsufficientData(_))
        ));
    }
}
