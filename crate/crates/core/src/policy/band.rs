//! Banded transfer rules.
//!
//! A schedule is a list of disjoint, ordered bands over the assessment basis.
//! Bands are lower-inclusive and upper-exclusive; earnings outside all bands
//! pay zero. Amounts are evaluated in integer cents.

use crate::error::SimError;
use crate::money::Cents;
use serde::{Deserialize, Serialize};

/// One step of a tapered rule: the payment when the employer tops wages up
/// by at most `max_topup_share` of the assessment basis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaperStep {
    pub max_topup_share: f64,
    pub amount: f64,
}

/// Payment rule within a band. Euro amounts in the configuration are
/// converted to cents at load time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BandRule {
    /// Fixed weekly amount.
    Flat { amount: f64 },
    /// `rate` of the assessment basis, optionally capped.
    Proportional { rate: f64, cap: Option<f64> },
    /// Step function of the employer top-up share; above the last step the
    /// payment is zero.
    Tapered { steps: Vec<TaperStep> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PaymentBand {
    /// Inclusive lower bound, euros.
    pub lower: f64,
    /// Exclusive upper bound, euros; open-ended when absent.
    pub upper: Option<f64>,
    pub rule: BandRule,
}

impl PaymentBand {
    pub fn lower_cents(&self) -> Cents {
        Cents::from_euros(self.lower)
    }

    pub fn upper_cents(&self) -> Option<Cents> {
        self.upper.map(Cents::from_euros)
    }

    pub fn contains(&self, basis: Cents) -> bool {
        basis >= self.lower_cents()
            && self.upper_cents().is_none_or(|u| basis < u)
    }

    pub fn evaluate(&self, basis: Cents, employer_topup_share: f64) -> Cents {
        match &self.rule {
            BandRule::Flat { amount } => Cents::from_euros(*amount),
            BandRule::Proportional { rate, cap } => {
                let raw = basis.scale(*rate);
                match cap {
                    Some(c) => raw.min(Cents::from_euros(*c)),
                    None => raw,
                }
            }
            BandRule::Tapered { steps } => steps
                .iter()
                .find(|s| employer_topup_share <= s.max_topup_share)
                .map(|s| Cents::from_euros(s.amount))
                .unwrap_or(Cents::ZERO),
        }
    }

    pub fn validate(&self, idx: usize) -> Result<(), SimError> {
        if let Some(u) = self.upper {
            if self.lower >= u {
                return Err(SimError::Config(format!(
                    "band {idx}: lower {} must be below upper {u}",
                    self.lower
                )));
            }
        }
        if self.lower < 0.0 {
            return Err(SimError::Config(format!("band {idx}: negative lower bound")));
        }
        match &self.rule {
            BandRule::Flat { amount } => {
                if *amount < 0.0 {
                    return Err(SimError::Config(format!("band {idx}: negative flat amount")));
                }
            }
            BandRule::Proportional { rate, cap } => {
                if !(*rate > 0.0 && *rate <= 1.0) {
                    return Err(SimError::Config(format!(
                        "band {idx}: rate {rate} outside (0, 1]"
                    )));
                }
                if let Some(c) = cap {
                    if *c < 0.0 {
                        return Err(SimError::Config(format!("band {idx}: negative cap")));
                    }
                }
            }
            BandRule::Tapered { steps } => {
                if steps.is_empty() {
                    return Err(SimError::Config(format!("band {idx}: empty taper")));
                }
                let mut prev = f64::NEG_INFINITY;
                for s in steps {
                    if !(0.0..=1.0).contains(&s.max_topup_share) || s.max_topup_share <= prev {
                        return Err(SimError::Config(format!(
                            "band {idx}: taper thresholds must increase within [0, 1]"
                        )));
                    }
                    if s.amount < 0.0 {
                        return Err(SimError::Config(format!(
                            "band {idx}: negative taper amount"
                        )));
                    }
                    prev = s.max_topup_share;
                }
            }
        }
        Ok(())
    }

    /// Largest amount this band can pay, used for schedule-level bounds.
    pub fn max_amount(&self) -> Cents {
        match &self.rule {
            BandRule::Flat { amount } => Cents::from_euros(*amount),
            BandRule::Proportional { rate, cap } => match (cap, self.upper) {
                (Some(c), _) => Cents::from_euros(*c),
                (None, Some(u)) => Cents::from_euros(u * rate),
                (None, None) => Cents(i64::MAX),
            },
            BandRule::Tapered { steps } => steps
                .iter()
                .map(|s| Cents::from_euros(s.amount))
                .max()
                .unwrap_or(Cents::ZERO),
        }
    }
}

/// Check that bands are ordered and pairwise disjoint.
pub fn validate_bands(bands: &[PaymentBand]) -> Result<(), SimError> {
    if bands.is_empty() {
        return Err(SimError::Config("schedule has no bands".into()));
    }
    for (i, b) in bands.iter().enumerate() {
        b.validate(i)?;
    }
    for w in bands.windows(2) {
        let upper = w[0].upper.ok_or_else(|| {
            SimError::Config("only the last band may be open-ended".into())
        })?;
        if w[1].lower < upper {
            return Err(SimError::Config(format!(
                "bands overlap: [{}, {}) and [{}, ...)",
                w[0].lower, upper, w[1].lower
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn boundary_convention_lower_inclusive_upper_exclusive() {
        let b = PaymentBand {
            lower: 151.5,
            upper: Some(203.0),
            rule: BandRule::Flat { amount: 203.0 },
        };
        assert!(b.contains(Cents::from_euros(151.50)));
        assert!(b.contains(Cents::from_euros(202.99)));
        assert!(!b.contains(Cents::from_euros(203.00)));
        assert!(!b.contains(Cents::from_euros(151.49)));
    }

    #[test]
    fn proportional_cap_binds() {
        let b = PaymentBand {
            lower: 0.0,
            upper: Some(586.0),
            rule: BandRule::Proportional { rate: 0.7, cap: Some(410.0) },
        };
        assert_eq!(b.evaluate(Cents::from_euros(500.0), 0.0), Cents::from_euros(350.0));
        assert_eq!(b.evaluate(Cents::from_euros(585.99), 0.0), Cents::from_euros(410.0));
    }

    #[test]
    fn taper_steps_by_topup_share() {
        let b = PaymentBand {
            lower: 586.0,
            upper: Some(960.0),
            rule: BandRule::Tapered {
                steps: vec![
                    TaperStep { max_topup_share: 0.6, amount: 350.0 },
                    TaperStep { max_topup_share: 0.8, amount: 205.0 },
                ],
            },
        };
        let basis = Cents::from_euros(700.0);
        assert_eq!(b.evaluate(basis, 0.6), Cents::from_euros(350.0));
        assert_eq!(b.evaluate(basis, 0.8), Cents::from_euros(205.0));
        assert_eq!(b.evaluate(basis, 0.9), Cents::ZERO);
    }

    #[test]
    fn overlapping_bands_rejected() {
        let bands = vec![
            PaymentBand { lower: 0.0, upper: Some(300.0), rule: BandRule::Flat { amount: 100.0 } },
            PaymentBand { lower: 250.0, upper: None, rule: BandRule::Flat { amount: 50.0 } },
        ];
        assert!(validate_bands(&bands).is_err());
    }
}
