//! Adjusted disposable income: disposable income net of housing costs,
//! capital losses and work-related expenditures, equivalized by the square
//! root of household size.

use crate::alignment::IpfSolution;
use crate::error::SimError;
use crate::population::{Household, Person};

/// Divide household income by the square root of household size.
pub fn equivalize(household_income: f64, household_size: u32) -> Result<f64, SimError> {
    if household_size == 0 {
        return Err(SimError::Indicator("household size must be >= 1".into()));
    }
    Ok(household_income / (household_size as f64).sqrt())
}

/// Weekly commuting cost by number of commuting workers: a lookup for 0-3
/// workers, extrapolated linearly at the 3-worker marginal rate beyond.
/// Workers out of work carry no commuting cost.
pub fn commuting_cost_for_workers(workers: u32) -> f64 {
    const TABLE: [f64; 4] = [0.0, 9.17, 14.42, 23.82];
    match workers {
        0..=3 => TABLE[workers as usize],
        n => TABLE[3] + (n - 3) as f64 * (TABLE[3] - TABLE[2]),
    }
}

/// Commuting cost of a household: counts members currently in work with a
/// commute mode.
pub fn household_commuting_cost<'a>(members: impl Iterator<Item = &'a Person>) -> f64 {
    let workers = members
        .filter(|p| p.in_work() && p.commute_mode != crate::population::CommuteMode::None)
        .count() as u32;
    commuting_cost_for_workers(workers)
}

/// Average weekly childcare cost by (family type, equivalized-income decile),
/// approximated by iterative proportional fitting over family-type and decile
/// margins.
#[derive(Debug, Clone, PartialEq)]
pub struct ChildcareCostTable {
    pub family_types: Vec<String>,
    pub n_deciles: usize,
    /// Row-major `family_types.len() x n_deciles` average costs.
    pub cells: Vec<f64>,
}

impl ChildcareCostTable {
    pub fn from_ipf(family_types: Vec<String>, solution: &IpfSolution) -> Result<Self, SimError> {
        if solution.rows != family_types.len() {
            return Err(SimError::Config(format!(
                "childcare table has {} family types but the fit has {} rows",
                family_types.len(),
                solution.rows
            )));
        }
        Ok(ChildcareCostTable {
            family_types,
            n_deciles: solution.cols,
            cells: solution.matrix.clone(),
        })
    }

    /// Family-type label of a household: single/couple by adult count and a
    /// child-count band capped at 3.
    pub fn classify(household: &Household) -> String {
        let adults = if household.n_adults >= 2 { "couple" } else { "single" };
        let children = household.n_children.min(3);
        format!("{adults}-{children}ch")
    }

    /// Cell lookup; errors name the missing cell.
    pub fn cost(&self, family_type: &str, decile: usize) -> Result<f64, SimError> {
        let row = self
            .family_types
            .iter()
            .position(|t| t == family_type)
            .ok_or_else(|| {
                SimError::Config(format!("childcare table has no family type `{family_type}`"))
            })?;
        if decile >= self.n_deciles {
            return Err(SimError::Config(format!(
                "childcare table has no cell ({family_type}, decile {})",
                decile + 1
            )));
        }
        Ok(self.cells[row * self.n_deciles + decile])
    }

    /// Household childcare cost: zero without children or childcare use.
    pub fn household_cost(&self, household: &Household, decile: usize) -> Result<f64, SimError> {
        if household.n_children == 0 || !household.childcare_user {
            return Ok(0.0);
        }
        self.cost(&Self::classify(household), decile)
    }
}

/// Weekly capital loss: the holding's value times the index fall, spread over
/// `annualization_weeks`. Positive when the index falls; a rising index
/// yields a negative loss (a gain). Non-holders lose nothing.
pub fn capital_loss(
    capital_value: f64,
    index_change: f64,
    is_holder: bool,
    annualization_weeks: f64,
) -> f64 {
    if !is_holder || index_change == 0.0 {
        return 0.0;
    }
    -capital_value * index_change / annualization_weeks
}

/// The components of adjusted disposable income for one household.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AdjustedIncomeComponents {
    pub market_income: f64,
    pub taxes: f64,
    /// All transfers, including out-of-work payments.
    pub benefits: f64,
    pub housing_cost: f64,
    pub capital_loss: f64,
    /// Commuting plus childcare.
    pub work_costs: f64,
    pub household_size: u32,
}

impl AdjustedIncomeComponents {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.taxes < 0.0 || self.housing_cost < 0.0 || self.work_costs < 0.0 {
            return Err(SimError::Indicator(
                "taxes, housing cost and work costs must be non-negative".into(),
            ));
        }
        if self.household_size == 0 {
            return Err(SimError::Indicator("household size must be >= 1".into()));
        }
        Ok(())
    }

    /// The adjusted-income identity, before equivalization.
    pub fn adjusted_total(&self) -> f64 {
        self.market_income - self.taxes + self.benefits
            - self.housing_cost
            - self.capital_loss
            - self.work_costs
    }
}

/// Adjusted disposable income: the identity, equivalized at household level.
pub fn adjusted_disposable_income(c: &AdjustedIncomeComponents) -> Result<f64, SimError> {
    c.validate()?;
    equivalize(c.adjusted_total(), c.household_size)
}
