//! The six-row progressivity and redistribution panel over recipient
//! households.

use super::inequality::{gini, kakwani, reynolds_smolensky, KakwaniConvention};
use crate::error::SimError;

/// Per-household equivalized income concepts, computed on households with at
/// least one subsidy recipient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HouseholdIncomes {
    /// Market income with workers' earnings net of the subsidy (floored at 0).
    pub market_excl_cws: f64,
    /// Market income plus all benefits, including subsidy and out-of-work
    /// payments.
    pub gross_incl_benefits: f64,
    /// Adjusted disposable income.
    pub adjusted: f64,
    /// Adjusted disposable income minus the subsidy.
    pub adjusted_minus_cws: f64,
    /// Equivalized subsidy amount.
    pub cws: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GiniPanel {
    /// Rows (1)..(6) with their published labels.
    pub rows: Vec<(String, f64)>,
    pub kakwani_convention: KakwaniConvention,
}

impl GiniPanel {
    pub fn value(&self, idx: usize) -> f64 {
        self.rows[idx].1
    }
}

/// Rows: (1) Gini market income excl. subsidy; (2) Gini gross income;
/// (3) Gini adjusted disposable income; (4) Gini adjusted disposable income
/// without the subsidy; (5) redistribution RS = (4) - (3); (6) progressivity
/// K under the stated convention.
pub fn gini_panel(
    households: &[HouseholdIncomes],
    convention: KakwaniConvention,
) -> Result<GiniPanel, SimError> {
    if households.is_empty() {
        return Err(SimError::Indicator("no recipient households".into()));
    }
    let weights: Vec<f64> = households.iter().map(|h| h.weight).collect();
    let floor0 = |f: fn(&HouseholdIncomes) -> f64| -> Vec<f64> {
        households.iter().map(|h| f(h).max(0.0)).collect()
    };
    let market = floor0(|h| h.market_excl_cws);
    let gross = floor0(|h| h.gross_incl_benefits);
    let adjusted = floor0(|h| h.adjusted);
    let adjusted_no_cws = floor0(|h| h.adjusted_minus_cws);
    let cws: Vec<f64> = households.iter().map(|h| h.cws.max(0.0)).collect();

    let g1 = gini(&market, &weights)?;
    let g2 = gini(&gross, &weights)?;
    let g3 = gini(&adjusted, &weights)?;
    let g4 = gini(&adjusted_no_cws, &weights)?;
    let rs = reynolds_smolensky(&adjusted_no_cws, &adjusted, &weights)?;
    // a scheme paying nothing is neither progressive nor regressive
    let k_value = if cws.iter().all(|&v| v == 0.0) {
        0.0
    } else {
        kakwani(&cws, &adjusted_no_cws, &weights, convention)?.value
    };

    Ok(GiniPanel {
        rows: vec![
            ("(1) Gini in Market income (excl. CWS)".to_string(), g1),
            ("(2) Gini in Gross income ((1) + benefits, incl. CWS & PUP)".to_string(), g2),
            ("(3) Gini in Adjusted disposable income ((2) - taxes - work related costs)".to_string(), g3),
            ("(4) Gini in Adjusted disposable income without CWS ((3) - CWS)".to_string(), g4),
            ("(5) Benefit redistribution (RS) ((4) - (3))".to_string(), rs),
            (format!("(6) Benefit Regressivity (K) [{}]", convention.label()), k_value),
        ],
        kakwani_convention: convention,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::keyed_uniform;

    fn synth_households(n: u64, cws_scale: f64) -> Vec<HouseholdIncomes> {
        (0..n)
            .map(|i| {
                let market = 200.0 + 900.0 * keyed_uniform(21, i, 1);
                let cws = cws_scale * (50.0 + 150.0 * keyed_uniform(21, i, 2));
                let benefits = cws + 40.0;
                let taxes = 0.25 * market;
                let adjusted = market + benefits - taxes - 80.0;
                HouseholdIncomes {
                    market_excl_cws: market - cws,
                    gross_incl_benefits: market + benefits,
                    adjusted,
                    adjusted_minus_cws: adjusted - cws,
                    cws,
                    weight: 1.0,
                }
            })
            .collect()
    }

    #[test]
    fn row5_is_row4_minus_row3_to_machine_precision() {
        let hh = synth_households(500, 1.0);
        let p = gini_panel(&hh, KakwaniConvention::ConcentrationMinusGini).unwrap();
        assert!((p.value(4) - (p.value(3) - p.value(2))).abs() < 1e-12);
    }

    #[test]
    fn zero_cws_makes_rows_3_4_equal_and_rs_zero() {
        let hh = synth_households(300, 0.0);
        let p = gini_panel(&hh, KakwaniConvention::ConcentrationMinusGini).unwrap();
        assert!((p.value(2) - p.value(3)).abs() < 1e-12);
        assert!(p.value(4).abs() < 1e-12);
    }

    #[test]
    fn convention_is_labelled() {
        let hh = synth_households(50, 1.0);
        let p = gini_panel(&hh, KakwaniConvention::GiniMinusConcentration).unwrap();
        assert!(p.rows[5].0.contains("gini_minus_concentration"));
    }
}
