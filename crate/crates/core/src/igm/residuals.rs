//! Disturbance recovery and stochastic generation.

use super::level::LevelModelParams;
use crate::error::SimError;
use crate::rng::keyed_normal;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Per-equation disturbances: recovered from the estimation data where the
/// income is observed, drawn from a zero-mean normal with the model's
/// residual sd otherwise, keyed deterministically by `(seed, person id,
/// equation stream)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualStore {
    pub equation_stream: u64,
    pub seed: u64,
    pub residual_sd: f64,
    pub recovered: BTreeMap<u64, f64>,
}

impl ResidualStore {
    /// Disturbance for a person: recovered when observed, otherwise a
    /// deterministic stochastic draw.
    pub fn epsilon(&self, person_id: u64) -> f64 {
        match self.recovered.get(&person_id) {
            Some(&e) => e,
            None => self.residual_sd * keyed_normal(self.seed, person_id, self.equation_stream),
        }
    }

    pub fn is_observed(&self, person_id: u64) -> bool {
        self.recovered.contains_key(&person_id)
    }
}

/// Recover `eps = log(level) - x.theta` for every observed person.
///
/// `rows` are the design rows of the observed persons, aligned with `ids`
/// and `levels`.
pub fn recover_residuals(
    params: &LevelModelParams,
    rows: &[Vec<f64>],
    ids: &[u64],
    levels: &[f64],
    seed: u64,
    equation_stream: u64,
) -> Result<ResidualStore, SimError> {
    if rows.len() != ids.len() || rows.len() != levels.len() {
        return Err(SimError::Estimation("residual recovery length mismatch".into()));
    }
    let mut recovered = BTreeMap::new();
    for ((row, &id), &level) in rows.iter().zip(ids).zip(levels) {
        if level <= 0.0 {
            return Err(SimError::Estimation(format!(
                "person {id}: cannot recover a residual from level {level}"
            )));
        }
        let eps = level.ln() - params.linear_predictor(row);
        if !eps.is_finite() {
            return Err(SimError::Estimation(format!(
                "person {id}: recovered residual is not finite"
            )));
        }
        recovered.insert(id, eps);
    }
    Ok(ResidualStore {
        equation_stream,
        seed,
        residual_sd: params.residual_sd,
        recovered,
    })
}
