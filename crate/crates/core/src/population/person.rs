//! Person-level attributes and per-source income vector.

use crate::error::SimError;
use serde::{Deserialize, Serialize};

macro_rules! categorical {
    ($(#[$meta:meta])* $name:ident { $($variant:ident = $code:literal),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
        #[serde(rename_all = "snake_case")]
        pub enum $name {
            $($variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn code(self) -> &'static str {
                match self {
                    $($name::$variant => $code),+
                }
            }

            pub fn parse(s: &str) -> Result<Self, SimError> {
                match s {
                    $($code => Ok($name::$variant),)+
                    other => Err(SimError::Schema(format!(
                        "unknown {} code `{other}`", stringify!($name)
                    ))),
                }
            }

            pub fn index(self) -> usize {
                Self::ALL.iter().position(|v| *v == self).unwrap()
            }

            pub fn from_index(i: usize) -> Self {
                Self::ALL[i % Self::ALL.len()]
            }
        }
    };
}

categorical!(Gender { Female = "female", Male = "male" });

categorical!(Education {
    Lower = "lower",
    Secondary = "secondary",
    Tertiary = "tertiary",
});

categorical!(Sector { Public = "public", Private = "private" });

categorical!(Contract { Permanent = "permanent", Temporary = "temporary" });

categorical!(
    /// Mutually exclusive labour-market state.
    LabourState {
        Employee = "employee",
        SelfEmployed = "self_employed",
        Unemployed = "unemployed",
        Retired = "retired",
        Inactive = "inactive",
    }
);

categorical!(CommuteMode {
    Car = "car",
    Public = "public",
    None = "none",
});

categorical!(
    /// Non-labour income sources carried per person.
    SourceKind {
        Capital = "capital",
        PrivatePension = "private_pension",
        Rent = "rent",
        Investment = "investment",
    }
);

/// Canonical order of the per-person income-source vector.
pub const SOURCE_KINDS: [SourceKind; 4] = [
    SourceKind::Capital,
    SourceKind::PrivatePension,
    SourceKind::Rent,
    SourceKind::Investment,
];

/// One (presence flag, level) pair of the income-source vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IncomeSource {
    pub kind: SourceKind,
    pub present: bool,
    /// Weekly level; must be 0 when `present` is false.
    pub level: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Person {
    pub id: u64,
    pub household_id: u64,
    pub age: u32,
    pub gender: Gender,
    pub education: Education,
    /// NACE-style industry code, 0-based.
    pub industry: u8,
    /// Occupation group code, 0-based.
    pub occupation: u8,
    pub sector: Sector,
    pub contract: Contract,
    pub labour_state: LabourState,
    /// Current gross earnings, per week.
    pub gross_earnings: f64,
    /// Pre-crisis gross earnings (January-February reference), per week.
    pub prev_gross_earnings: f64,
    /// Average previous net pay over the same reference window, per week.
    pub prev_net_earnings: f64,
    pub income_sources: Vec<IncomeSource>,
    pub commute_mode: CommuteMode,
    pub receives_cws: bool,
    pub receives_pup: bool,
    /// Whether the person's employer passes the turnover-decline test.
    /// Firm-level eligibility is an input, not simulated.
    pub employer_eligible: bool,
}

impl Person {
    /// Age band index used as a default covariate: <25, 25-34, ..., 65+.
    pub fn age_band(&self) -> usize {
        match self.age {
            0..=24 => 0,
            25..=34 => 1,
            35..=44 => 2,
            45..=54 => 3,
            55..=64 => 4,
            _ => 5,
        }
    }

    pub fn in_work(&self) -> bool {
        matches!(
            self.labour_state,
            LabourState::Employee | LabourState::SelfEmployed
        )
    }

    pub fn source(&self, kind: SourceKind) -> Option<&IncomeSource> {
        self.income_sources.iter().find(|s| s.kind == kind)
    }

    /// Check all person-level invariants; `row` names the offending record.
    pub fn validate(&self, row: usize) -> Result<(), SimError> {
        if !self.gross_earnings.is_finite() || self.gross_earnings < 0.0 {
            return Err(SimError::Validation(format!(
                "row {row}: gross_earnings must be finite and >= 0, got {}",
                self.gross_earnings
            )));
        }
        if !self.prev_gross_earnings.is_finite() || self.prev_gross_earnings < 0.0 {
            return Err(SimError::Validation(format!(
                "row {row}: prev_gross_earnings must be finite and >= 0, got {}",
                self.prev_gross_earnings
            )));
        }
        if self.prev_net_earnings > self.prev_gross_earnings {
            return Err(SimError::Validation(format!(
                "row {row}: prev_net_earnings {} exceeds prev_gross_earnings {}",
                self.prev_net_earnings, self.prev_gross_earnings
            )));
        }
        if self.receives_cws && self.labour_state != LabourState::Employee {
            return Err(SimError::Validation(format!(
                "row {row}: receives_cws requires labour_state employee, got {:?}",
                self.labour_state
            )));
        }
        if self.receives_pup && self.labour_state != LabourState::Unemployed {
            return Err(SimError::Validation(format!(
                "row {row}: receives_pup requires labour_state unemployed, got {:?}",
                self.labour_state
            )));
        }
        for s in &self.income_sources {
            if !s.present && s.level != 0.0 {
                return Err(SimError::Validation(format!(
                    "row {row}: income source {:?} absent but level {} != 0",
                    s.kind, s.level
                )));
            }
            if s.level < 0.0 || !s.level.is_finite() {
                return Err(SimError::Validation(format!(
                    "row {row}: income source {:?} level must be finite and >= 0",
                    s.kind
                )));
            }
        }
        Ok(())
    }

    /// Weekly market income: labour earnings plus present non-labour sources.
    pub fn market_income(&self) -> f64 {
        let labour = if self.in_work() { self.gross_earnings } else { 0.0 };
        labour
            + self
                .income_sources
                .iter()
                .filter(|s| s.present)
                .map(|s| s.level)
                .sum::<f64>()
    }
}
