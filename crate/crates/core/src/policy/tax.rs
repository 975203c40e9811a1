//! Parameterised baseline tax-benefit system.
//!
//! A deliberately simplified stand-in for a full national model: banded income
//! tax net of credits, a flat social-insurance contribution above a threshold,
//! a universal child benefit, and a working-family payment withdrawn above a
//! child-count-specific threshold. All parameters ship as an editable default
//! configuration; none are asserted as ground truth.

use crate::error::SimError;
use serde::{Deserialize, Serialize};

/// One income-tax band: `rate` applies up to the weekly cutoff `up_to`
/// (open-ended when absent).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaxBand {
    pub rate: f64,
    pub up_to: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TaxBenefitParams {
    pub tax_bands: Vec<TaxBand>,
    /// Weekly tax credit deducted from banded tax, floored at zero.
    pub weekly_credit: f64,
    pub social_insurance_rate: f64,
    /// Gross weekly earnings above which social insurance applies.
    pub social_insurance_threshold: f64,
    /// Weekly child benefit per child.
    pub child_benefit_weekly: f64,
    /// Maximum weekly working-family payment by number of children (index 0
    /// is one child). Empty disables the payment.
    pub wfp_base_by_children: Vec<f64>,
    /// Weekly household employment-income threshold by number of children.
    pub wfp_threshold_by_children: Vec<f64>,
    /// Rate at which the payment is withdrawn above the threshold.
    pub wfp_withdrawal_rate: f64,
    /// Indexation factor applied to the monetary parameters when nowcasting
    /// to the target period.
    pub indexation: f64,
}

impl Default for TaxBenefitParams {
    fn default() -> Self {
        TaxBenefitParams {
            tax_bands: vec![
                TaxBand { rate: 0.20, up_to: Some(679.0) },
                TaxBand { rate: 0.40, up_to: None },
            ],
            weekly_credit: 63.46,
            social_insurance_rate: 0.04,
            social_insurance_threshold: 352.0,
            child_benefit_weekly: 32.31,
            wfp_base_by_children: vec![100.0, 120.0, 140.0, 160.0],
            wfp_threshold_by_children: vec![531.0, 632.0, 733.0, 834.0],
            wfp_withdrawal_rate: 0.6,
            indexation: 1.0,
        }
    }
}

impl TaxBenefitParams {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.tax_bands.is_empty() {
            return Err(SimError::Config("tax_bands must be non-empty".into()));
        }
        let mut prev = 0.0;
        for (i, b) in self.tax_bands.iter().enumerate() {
            if !(0.0..=1.0).contains(&b.rate) {
                return Err(SimError::Config(format!(
                    "tax band {i}: rate {} outside [0,1]",
                    b.rate
                )));
            }
            match b.up_to {
                Some(c) => {
                    if c <= prev {
                        return Err(SimError::Config(format!(
                            "tax band {i}: cutoffs must increase"
                        )));
                    }
                    prev = c;
                }
                None => {
                    if i + 1 != self.tax_bands.len() {
                        return Err(SimError::Config(
                            "only the last tax band may be open-ended".into(),
                        ));
                    }
                }
            }
        }
        if !(0.0..=1.0).contains(&self.social_insurance_rate)
            || !(0.0..=1.0).contains(&self.wfp_withdrawal_rate)
        {
            return Err(SimError::Config("rates must lie in [0,1]".into()));
        }
        Ok(())
    }

    /// Banded income tax net of credits, floored at zero.
    pub fn income_tax(&self, gross: f64) -> f64 {
        let mut tax = 0.0;
        let mut lower = 0.0;
        for b in &self.tax_bands {
            let upper = b.up_to.unwrap_or(f64::INFINITY);
            if gross > lower {
                tax += b.rate * (gross.min(upper) - lower);
            }
            lower = upper;
        }
        (tax - self.weekly_credit).max(0.0)
    }

    /// Social insurance: flat rate on gross earnings above the threshold.
    pub fn social_insurance(&self, gross: f64) -> f64 {
        if gross > self.social_insurance_threshold {
            self.social_insurance_rate * gross
        } else {
            0.0
        }
    }

    /// `(income tax, social insurance)` on weekly gross earnings.
    pub fn baseline_tax(&self, gross: f64) -> (f64, f64) {
        (self.income_tax(gross), self.social_insurance(gross))
    }

    /// Net weekly pay under this system.
    pub fn net_of(&self, gross: f64) -> f64 {
        let (it, si) = self.baseline_tax(gross);
        gross - it - si
    }

    pub fn child_benefit(&self, n_children: u32) -> f64 {
        self.child_benefit_weekly * n_children as f64
    }

    /// Working-family payment: the child-count base reduced at the withdrawal
    /// rate for employment income above the threshold, floored at zero.
    /// Requires at least one member in work and at least one child.
    pub fn working_family_payment(
        &self,
        household_employment_income: f64,
        n_children: u32,
        any_in_work: bool,
    ) -> f64 {
        if !any_in_work || n_children == 0 || self.wfp_base_by_children.is_empty() {
            return 0.0;
        }
        let idx = (n_children as usize - 1).min(self.wfp_base_by_children.len() - 1);
        let base = self.wfp_base_by_children[idx];
        let thr = self
            .wfp_threshold_by_children
            .get(idx)
            .copied()
            .unwrap_or(f64::INFINITY);
        let excess = (household_employment_income - thr).max(0.0);
        (base - self.wfp_withdrawal_rate * excess).max(0.0)
    }

    /// Household benefits: child benefit plus working-family payment.
    pub fn baseline_benefits(
        &self,
        household_employment_income: f64,
        n_children: u32,
        any_in_work: bool,
    ) -> f64 {
        self.child_benefit(n_children)
            + self.working_family_payment(household_employment_income, n_children, any_in_work)
    }

    /// Apply the indexation factor to all monetary parameters.
    pub fn indexed(&self) -> TaxBenefitParams {
        let t = self.indexation;
        let mut out = self.clone();
        for b in &mut out.tax_bands {
            if let Some(c) = &mut b.up_to {
                *c *= t;
            }
        }
        out.weekly_credit *= t;
        out.social_insurance_threshold *= t;
        out.child_benefit_weekly *= t;
        for v in &mut out.wfp_base_by_children {
            *v *= t;
        }
        for v in &mut out.wfp_threshold_by_children {
            *v *= t;
        }
        out.indexation = 1.0;
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gross_zero_tax() {
        let p = TaxBenefitParams::default();
        assert_eq!(p.baseline_tax(0.0), (0.0, 0.0));
    }

    #[test]
    fn configured_example() {
        let p = TaxBenefitParams::default();
        let (it, si) = p.baseline_tax(500.0);
        assert!((it - 36.54).abs() < 1e-9, "income tax {it}");
        assert!((si - 20.0).abs() < 1e-9, "social insurance {si}");
    }

    #[test]
    fn doubling_credit_weakly_decreases_tax() {
        let p = TaxBenefitParams::default();
        let doubled = TaxBenefitParams {
            weekly_credit: p.weekly_credit * 2.0,
            ..p.clone()
        };
        for g in (0..3000).map(|k| k as f64) {
            assert!(doubled.income_tax(g) <= p.income_tax(g));
        }
    }

    #[test]
    fn wfp_piecewise_linear_weakly_decreasing() {
        let p = TaxBenefitParams::default();
        let mut prev = f64::INFINITY;
        for g in (0..2000).map(|k| k as f64) {
            let w = p.working_family_payment(g, 2, true);
            assert!(w <= prev + 1e-12);
            assert!(w >= 0.0);
            prev = w;
        }
    }

    #[test]
    fn wfp_withdrawal_arithmetic() {
        let p = TaxBenefitParams::default();
        let idx = 1; // two children
        let thr = p.wfp_threshold_by_children[idx];
        let base = p.wfp_base_by_children[idx];
        let x = 50.0;
        let got = p.working_family_payment(thr + x, 2, true);
        assert!((got - (base - p.wfp_withdrawal_rate * x).max(0.0)).abs() < 1e-12);
    }

    #[test]
    fn no_children_no_wfp() {
        let p = TaxBenefitParams::default();
        assert_eq!(p.baseline_benefits(300.0, 0, true), 0.0);
    }
}
