//! Payment schedules, the baseline tax-benefit system and income evaluation.

pub mod band;
mod budget;
mod income;
mod presets;
mod schedule;
mod tax;

pub use band::{BandRule, PaymentBand, TaperStep};
pub use budget::{budget_constraint, BudgetConstraintCurve};
pub use income::{
    household_income, net_income_in_work, net_income_out_of_work, IncomeComponents, WorkState,
};
pub use presets::{
    cws_preset, cws_presets, load_cws_schedule, load_pup_schedule, pup_preset, pup_presets,
};
pub use schedule::{AssessmentBasis, PupSchedule, WageSubsidySchedule};
pub use tax::{TaxBand, TaxBenefitParams};
