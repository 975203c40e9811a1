//! Named schedule presets shipped with the crate.
//!
//! The five wage-subsidy designs and five unemployment-payment designs load
//! from the JSON configuration files under `presets/`; no payment amounts are
//! hard-coded in evaluation logic.

use super::schedule::{PupSchedule, WageSubsidySchedule};
use crate::error::SimError;
use serde::Deserialize;

const CWS_PRESETS: &str = include_str!("../../presets/cws_schedules.json");
const PUP_PRESETS: &str = include_str!("../../presets/pup_schedules.json");

#[derive(Deserialize)]
struct CwsFile {
    schedules: Vec<WageSubsidySchedule>,
}

#[derive(Deserialize)]
struct PupFile {
    schedules: Vec<PupSchedule>,
}

/// All shipped wage-subsidy designs, in effective-date order.
pub fn cws_presets() -> Result<Vec<WageSubsidySchedule>, SimError> {
    let file: CwsFile = serde_json::from_str(CWS_PRESETS)?;
    for s in &file.schedules {
        s.validate()?;
    }
    Ok(file.schedules)
}

/// All shipped unemployment-payment designs, in effective-date order.
pub fn pup_presets() -> Result<Vec<PupSchedule>, SimError> {
    let file: PupFile = serde_json::from_str(PUP_PRESETS)?;
    for s in &file.schedules {
        s.validate()?;
    }
    Ok(file.schedules)
}

pub fn cws_preset(id: &str) -> Result<WageSubsidySchedule, SimError> {
    cws_presets()?
        .into_iter()
        .find(|s| s.id == id)
        .ok_or_else(|| SimError::Config(format!("unknown wage-subsidy preset `{id}`")))
}

pub fn pup_preset(id: &str) -> Result<PupSchedule, SimError> {
    pup_presets()?
        .into_iter()
        .find(|s| s.id == id)
        .ok_or_else(|| SimError::Config(format!("unknown unemployment-payment preset `{id}`")))
}

/// Load a wage-subsidy schedule from a JSON file on disk (inline schedules
/// in scenario configs).
pub fn load_cws_schedule(path: &std::path::Path) -> Result<WageSubsidySchedule, SimError> {
    let s: WageSubsidySchedule = serde_json::from_str(&std::fs::read_to_string(path)?)?;
    s.validate()?;
    Ok(s)
}

pub fn load_pup_schedule(path: &std::path::Path) -> Result<PupSchedule, SimError> {
    let s: PupSchedule = serde_json::from_str(&std::fs::read_to_string(path)?)?;
    s.validate()?;
    Ok(s)
}
