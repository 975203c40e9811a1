//! Household income evaluation under wage-subsidy and out-of-work designs.
//!
//! In-work incomes follow the employer top-up assumption: a subsidy
//! recipient's gross pay is fully maintained at its pre-crisis level, with
//! the subsidy tracked as a component of gross income. Moving a person out
//! of work replaces their market earnings with the unemployment payment and
//! recomputes taxes and benefits for the household.

use super::schedule::{PupSchedule, WageSubsidySchedule};
use super::tax::TaxBenefitParams;
use crate::error::SimError;
use crate::money::Cents;
use crate::population::{Household, LabourState, Person};

/// Weekly household income flows.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct IncomeComponents {
    /// Labour gross (top-ups plus subsidy) and non-labour sources.
    pub market_income: f64,
    /// Subsidy component of market income.
    pub cws: f64,
    /// Out-of-work payments received (transfer, outside market income).
    pub pup: f64,
    pub income_tax: f64,
    pub social_insurance: f64,
    /// Child benefit plus working-family payment.
    pub benefits: f64,
}

impl IncomeComponents {
    pub fn taxes(&self) -> f64 {
        self.income_tax + self.social_insurance
    }

    /// Household disposable income before the housing/capital/work-cost
    /// adjustments.
    pub fn disposable(&self) -> f64 {
        self.market_income + self.pup + self.benefits - self.taxes()
    }
}

/// Counterfactual switch: evaluate the household as observed, or with one
/// member moved onto the out-of-work payment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WorkState {
    AsObserved,
    MovedToPup { person_id: u64 },
}

/// Evaluate household income flows.
///
/// `members` must be the members of `household`. Subsidy recipients are
/// assessed on the schedule; a person named by `MovedToPup` has their labour
/// earnings replaced by the out-of-work payment based on previous earnings.
pub fn household_income(
    household: &Household,
    members: &[&Person],
    cws: &WageSubsidySchedule,
    pup: &PupSchedule,
    params: &TaxBenefitParams,
    employer_topup_share: f64,
    state: WorkState,
) -> IncomeComponents {
    let mut out = IncomeComponents::default();
    let mut employment_income = 0.0;
    let mut any_in_work = false;

    for p in members {
        let moved = matches!(state, WorkState::MovedToPup { person_id } if person_id == p.id);

        let sources: f64 = p
            .income_sources
            .iter()
            .filter(|s| s.present)
            .map(|s| s.level)
            .sum();
        out.market_income += sources;
        let mut tax_base = sources;

        if moved || (p.receives_pup && p.labour_state == LabourState::Unemployed) {
            let prev = Cents::from_euros(p.prev_gross_earnings);
            out.pup += pup.payment(prev).to_euros();
        } else if p.receives_cws && p.labour_state == LabourState::Employee {
            // gross maintained at the pre-crisis level by the employer top-up
            let gross = p.prev_gross_earnings;
            let payment = cws
                .payment(
                    Cents::from_euros(p.prev_gross_earnings),
                    Cents::from_euros(p.prev_net_earnings),
                    employer_topup_share,
                )
                .to_euros();
            out.market_income += gross;
            out.cws += payment;
            employment_income += gross;
            any_in_work = true;
            tax_base += if cws.taxable { gross } else { gross - payment };
        } else if p.in_work() {
            out.market_income += p.gross_earnings;
            employment_income += p.gross_earnings;
            any_in_work = true;
            tax_base += p.gross_earnings;
        }

        out.income_tax += params.income_tax(tax_base);
        // social insurance applies to labour earnings only
        let si_base = tax_base - sources;
        out.social_insurance += params.social_insurance(si_base.max(0.0));
    }

    out.benefits += params.baseline_benefits(employment_income, household.n_children, any_in_work);
    out
}

/// Household disposable income with `person` in work under the subsidy.
/// Errors when the person is not an employee receiving the subsidy.
pub fn net_income_in_work(
    person: &Person,
    household: &Household,
    members: &[&Person],
    cws: &WageSubsidySchedule,
    pup: &PupSchedule,
    params: &TaxBenefitParams,
    employer_topup_share: f64,
) -> Result<IncomeComponents, SimError> {
    if person.labour_state != LabourState::Employee || !person.receives_cws {
        return Err(SimError::Validation(format!(
            "person {} is not an employee in receipt of the wage subsidy",
            person.id
        )));
    }
    Ok(household_income(
        household,
        members,
        cws,
        pup,
        params,
        employer_topup_share,
        WorkState::AsObserved,
    ))
}

/// Household disposable income with `person` moved onto the out-of-work
/// payment; other members' incomes, taxes and benefits are recomputed.
pub fn net_income_out_of_work(
    person: &Person,
    household: &Household,
    members: &[&Person],
    cws: &WageSubsidySchedule,
    pup: &PupSchedule,
    params: &TaxBenefitParams,
    employer_topup_share: f64,
) -> IncomeComponents {
    household_income(
        household,
        members,
        cws,
        pup,
        params,
        employer_topup_share,
        WorkState::MovedToPup { person_id: person.id },
    )
}
