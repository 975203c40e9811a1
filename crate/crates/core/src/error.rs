//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    /// Input file header does not match the documented schema.
    #[error("schema error: {0}")]
    Schema(String),

    /// A record violates a population invariant; message names the row.
    #[error("validation error: {0}")]
    Validation(String),

    /// Bad configuration (schedule bands, scenario config, distribution spec).
    #[error("configuration error: {0}")]
    Config(String),

    /// Estimation failure (non-convergence, separation, degenerate outcome).
    #[error("estimation error: {0}")]
    Estimation(String),

    /// Alignment or calibration failure (infeasible targets, non-convergence).
    #[error("alignment error: {0}")]
    Alignment(String),

    /// Indicator computation failure (degenerate inputs).
    #[error("indicator error: {0}")]
    Indicator(String),

    /// Pipeline stage failure, tagged with the stage name.
    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<SimError>,
    },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl SimError {
    /// Wrap an error with the pipeline stage it occurred in.
    pub fn in_stage(self, stage: &'static str) -> SimError {
        SimError::Stage {
            stage,
            source: Box::new(self),
        }
    }
}
