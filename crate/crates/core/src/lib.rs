//! Microsimulation engine for banded wage-subsidy and out-of-work payment designs.
//!
//! The crate is organised around a three-step nowcasting pipeline:
//!
//! 1. **Labour market transformation**: an income-generation model (IGM) is
//!    estimated on a base population, re-simulated, and aligned to external
//!    control totals (in-work shares, employment cells, unemployment shares,
//!    benefit take-up counts).
//! 2. **Returns and price transformation**: income levels are re-simulated
//!    from the fitted level equations and recovered disturbances, indexed by
//!    industry/occupation growth factors, and capital losses are assigned via
//!    iterative proportional fitting over the age-income distribution.
//! 3. **Tax-benefit evaluation**: data-driven payment schedules (wage
//!    subsidies and unemployment payments), a parameterised tax-benefit
//!    system, and work-related cost adjustments produce adjusted disposable
//!    incomes.
//!
//! On top of the pipeline sit distributional indicators: compensation rates,
//! net and relative replacement rates, Gini/concentration/Kakwani and
//! Reynolds-Smolensky indices, and the decile/band panels the CLI emits.

pub mod adjusted;
pub mod alignment;
pub mod error;
pub mod igm;
pub mod indicators;
pub mod money;
pub mod policy;
pub mod population;
pub mod rng;
pub mod scenario;

pub use error::SimError;
pub use money::Cents;

/// Crate result alias.
pub type Result<T> = std::result::Result<T, SimError>;
