//! Stylized budget-constraint curves for a single adult.

use super::schedule::{PupSchedule, WageSubsidySchedule};
use super::tax::TaxBenefitParams;
use crate::error::SimError;
use crate::money::Cents;

/// Per-point evaluation of subsidy, in-work net income and out-of-work net
/// income over a grid of previous gross earnings.
#[derive(Debug, Clone, PartialEq)]
pub struct BudgetConstraintCurve {
    pub design_id: String,
    /// Strictly increasing grid of previous gross weekly earnings.
    pub grid: Vec<f64>,
    pub subsidy: Vec<f64>,
    pub net_in_work: Vec<f64>,
    pub net_out_of_work: Vec<f64>,
}

/// Evaluate the budget constraint for a stylized single adult without
/// children: previous net pay is derived from the baseline system, gross pay
/// is maintained in work, and the out-of-work payment is an untaxed transfer.
pub fn budget_constraint(
    cws: &WageSubsidySchedule,
    pup: &PupSchedule,
    params: &TaxBenefitParams,
    grid: &[f64],
    employer_topup_share: f64,
) -> Result<BudgetConstraintCurve, SimError> {
    if grid.is_empty() {
        return Err(SimError::Config("budget-constraint grid is empty".into()));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(SimError::Config(
            "budget-constraint grid must be strictly increasing".into(),
        ));
    }
    let mut subsidy = Vec::with_capacity(grid.len());
    let mut net_in = Vec::with_capacity(grid.len());
    let mut net_out = Vec::with_capacity(grid.len());
    for &e in grid {
        let apnp = params.net_of(e);
        let pay = cws
            .payment(
                Cents::from_euros(e),
                Cents::from_euros(apnp),
                employer_topup_share,
            )
            .to_euros();
        let tax_base = if cws.taxable { e } else { e - pay };
        let (it, si) = params.baseline_tax(tax_base.max(0.0));
        subsidy.push(pay);
        net_in.push(e - it - si);
        net_out.push(pup.payment(Cents::from_euros(e)).to_euros());
    }
    Ok(BudgetConstraintCurve {
        design_id: cws.id.clone(),
        grid: grid.to_vec(),
        subsidy,
        net_in_work: net_in,
        net_out_of_work: net_out,
    })
}
