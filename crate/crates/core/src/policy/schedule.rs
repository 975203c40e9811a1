//! Wage-subsidy and unemployment-payment schedules.

use super::band::{validate_bands, PaymentBand};
use crate::error::SimError;
use crate::money::Cents;
use serde::{Deserialize, Serialize};

/// Which earnings concept a wage-subsidy schedule is assessed on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AssessmentBasis {
    /// Average previous net weekly pay over the reference window.
    Apnp,
    /// Previous gross weekly pay.
    GrossPay,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WageSubsidySchedule {
    pub id: String,
    pub basis: AssessmentBasis,
    /// Date the design took effect, ISO format.
    pub effective: String,
    /// Whether the subsidy enters the in-year income tax base.
    #[serde(default)]
    pub taxable: bool,
    pub bands: Vec<PaymentBand>,
}

impl WageSubsidySchedule {
    pub fn validate(&self) -> Result<(), SimError> {
        validate_bands(&self.bands)
            .map_err(|e| SimError::Config(format!("schedule `{}`: {e}", self.id)))
    }

    fn basis_value(&self, prev_gross: Cents, apnp: Cents) -> Cents {
        match self.basis {
            AssessmentBasis::Apnp => apnp,
            AssessmentBasis::GrossPay => prev_gross,
        }
    }

    /// Weekly subsidy for the band containing the assessment-basis earnings;
    /// zero outside all bands. Never errors: schedule invariants are enforced
    /// at load time.
    pub fn payment(&self, prev_gross: Cents, apnp: Cents, employer_topup_share: f64) -> Cents {
        let basis = self.basis_value(prev_gross, apnp);
        self.bands
            .iter()
            .find(|b| b.contains(basis))
            .map(|b| b.evaluate(basis, employer_topup_share))
            .unwrap_or(Cents::ZERO)
    }

    /// Upper bound on any payment under this schedule.
    pub fn max_payment(&self) -> Cents {
        self.bands
            .iter()
            .map(|b| b.max_amount())
            .max()
            .unwrap_or(Cents::ZERO)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PupSchedule {
    pub id: String,
    /// Date the design took effect, ISO format.
    pub effective: String,
    pub bands: Vec<PaymentBand>,
}

impl PupSchedule {
    pub fn validate(&self) -> Result<(), SimError> {
        validate_bands(&self.bands)
            .map_err(|e| SimError::Config(format!("schedule `{}`: {e}", self.id)))
    }

    /// Flat amount for the band containing previous earnings.
    pub fn payment(&self, prev_earnings: Cents) -> Cents {
        self.bands
            .iter()
            .find(|b| b.contains(prev_earnings))
            .map(|b| b.evaluate(prev_earnings, 0.0))
            .unwrap_or(Cents::ZERO)
    }

    /// Copy of this schedule with every band amount raised by `delta` euros.
    /// Used for incentive-monotonicity scenario comparisons.
    pub fn with_amounts_raised(&self, delta: f64) -> PupSchedule {
        use super::band::BandRule;
        let mut out = self.clone();
        for b in &mut out.bands {
            if let BandRule::Flat { amount } = &mut b.rule {
                *amount += delta;
            }
        }
        out
    }
}
