//! Currency amounts as integer cents.
//!
//! Payment schedules are specified to the cent; evaluating them in integer
//! cents keeps golden-file comparisons exact. Amounts cross into `f64` euros
//! only at the boundary with the statistical machinery.

use serde::{Deserialize, Serialize};
use std::fmt;

/// A non-negative weekly currency amount in integer cents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
#[derive(Serialize, Deserialize)]
#[serde(transparent)]
pub struct Cents(pub i64);

impl Cents {
    pub const ZERO: Cents = Cents(0);

    /// Convert euros to cents, rounding half away from zero.
    pub fn from_euros(e: f64) -> Cents {
        Cents((e * 100.0).round() as i64)
    }

    pub fn to_euros(self) -> f64 {
        self.0 as f64 / 100.0
    }

    pub fn min(self, other: Cents) -> Cents {
        Cents(self.0.min(other.0))
    }

    pub fn max(self, other: Cents) -> Cents {
        Cents(self.0.max(other.0))
    }

    pub fn saturating_sub(self, other: Cents) -> Cents {
        Cents((self.0 - other.0).max(0))
    }

    /// Multiply by a rate, rounding half away from zero to the nearest cent.
    pub fn scale(self, rate: f64) -> Cents {
        Cents((self.0 as f64 * rate).round() as i64)
    }
}

impl std::ops::Add for Cents {
    type Output = Cents;
    fn add(self, rhs: Cents) -> Cents {
        Cents(self.0 + rhs.0)
    }
}

impl std::ops::Sub for Cents {
    type Output = Cents;
    fn sub(self, rhs: Cents) -> Cents {
        Cents(self.0 - rhs.0)
    }
}

impl fmt::Display for Cents {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.0 < 0 { "-" } else { "" };
        let a = self.0.abs();
        write!(f, "{sign}{}.{:02}", a / 100, a % 100)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn euro_round_trip_to_the_cent() {
        assert_eq!(Cents::from_euros(202.99).0, 20299);
        assert_eq!(Cents::from_euros(203.00).0, 20300);
        assert_eq!(Cents::from_euros(151.50).0, 15150);
        assert_eq!(Cents::from_euros(0.01).0, 1);
    }

    #[test]
    fn scale_rounds_to_nearest_cent() {
        // 70% of 585.99 = 410.193 -> 410.19
        assert_eq!(Cents(58599).scale(0.7).0, 41019);
        // 85% of 400.00 = 340.00
        assert_eq!(Cents(40000).scale(0.85).0, 34000);
    }

    #[test]
    fn display_formats_euros() {
        assert_eq!(Cents(20300).to_string(), "203.00");
        assert_eq!(Cents(917).to_string(), "9.17");
    }
}
