//! Household composition, housing costs and capital holdings.

use crate::error::SimError;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Household {
    pub id: u64,
    pub member_ids: Vec<u64>,
    pub n_adults: u32,
    pub n_children: u32,
    /// Weekly housing cost H.
    pub housing_cost: f64,
    /// Stock of capital holdings (not a weekly flow).
    pub capital_value: f64,
    pub childcare_user: bool,
    /// Mortgage/rent deferral granted: housing cost treated as zero.
    pub housing_deferred: bool,
    /// Survey weight; defaults to 1 (uniform weighting).
    pub weight: f64,
}

impl Household {
    pub fn size(&self) -> u32 {
        self.n_adults + self.n_children
    }

    pub fn effective_housing_cost(&self) -> f64 {
        if self.housing_deferred {
            0.0
        } else {
            self.housing_cost
        }
    }

    pub fn validate(&self, row: usize) -> Result<(), SimError> {
        if self.n_adults < 1 {
            return Err(SimError::Validation(format!(
                "row {row}: household {} has n_adults {} < 1",
                self.id, self.n_adults
            )));
        }
        if self.member_ids.is_empty() {
            return Err(SimError::Validation(format!(
                "row {row}: household {} has no members",
                self.id
            )));
        }
        if self.housing_cost < 0.0 || !self.housing_cost.is_finite() {
            return Err(SimError::Validation(format!(
                "row {row}: household {} housing_cost must be finite and >= 0",
                self.id
            )));
        }
        if self.weight <= 0.0 || !self.weight.is_finite() {
            return Err(SimError::Validation(format!(
                "row {row}: household {} weight must be finite and > 0",
                self.id
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn adultless_household_rejected() {
        let h = Household {
            id: 1,
            member_ids: vec![1],
            n_adults: 0,
            n_children: 1,
            housing_cost: 100.0,
            capital_value: 0.0,
            childcare_user: false,
            housing_deferred: false,
            weight: 1.0,
        };
        assert!(h.validate(0).is_err());
    }

    #[test]
    fn deferral_zeroes_housing() {
        let h = Household {
            id: 1,
            member_ids: vec![1],
            n_adults: 1,
            n_children: 0,
            housing_cost: 150.0,
            capital_value: 0.0,
            childcare_user: false,
            housing_deferred: true,
            weight: 1.0,
        };
        assert_eq!(h.effective_housing_cost(), 0.0);
    }
}
