//! Scenario orchestration: the three-step nowcasting pipeline and output
//! bundle.

mod config;
mod outputs;
mod pipeline;

pub use config::{PopulationSource, ScenarioConfig, WaveConfig};
pub use outputs::{compare_runs, CompareReport, CompareRow, RunManifest};
pub use pipeline::{
    derive_control_totals, emit_budget_constraints, run_scenario, write_example_bundle,
    RunOutputs, WaveOutputs,
};
