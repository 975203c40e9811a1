//! Distributional indicators: compensation rates, replacement rates and
//! inequality panels.

mod cr;
mod inequality;
mod replacement;
mod table4;

pub use cr::{
    compensation_rate, reference_worker_shares, uniform_grid, CrOptions, CrPanel,
    ELIGIBLE_RANGE_MAX, ELIGIBLE_RANGE_MIN, REFERENCE_SHARE_MEDIAN, REFERENCE_SHARE_SIGMA,
};
pub use inequality::{
    concentration_index, gini, kakwani, reynolds_smolensky, KakwaniConvention, KakwaniIndex,
};
pub use replacement::{
    decile_panel, net_replacement_rate, relative_replacement_rate, weighted_deciles, DecilePanel,
    RecipientRate, RrNetResult, RrRelBands, RrRelResult,
};
pub use table4::{gini_panel, GiniPanel, HouseholdIncomes};
