//! Scenario configuration.

use crate::error::SimError;
use crate::population::SyntheticSpec;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// Where the base population comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PopulationSource {
    File { path: PathBuf },
    Synthetic { spec: SyntheticSpec, n: usize, seed: u64 },
}

/// One calibration period: a control-totals file plus period-specific price
/// inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveConfig {
    pub label: String,
    pub control_totals: PathBuf,
    /// Fractional change in the capital index over the period (e.g. -0.10).
    #[serde(default)]
    pub capital_index_change: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub population: PopulationSource,
    /// Wage-subsidy design: a preset id or a path to an inline schedule file.
    pub cws_design: String,
    /// Unemployment-payment design: a preset id or a path to a schedule file.
    pub pup_design: String,
    /// Path to tax-benefit parameters; the built-in default when absent.
    #[serde(default)]
    pub tax_params: Option<PathBuf>,
    /// Calibration periods, in order. At least one.
    pub waves: Vec<WaveConfig>,
    /// Employer top-up share used by tapered subsidy bands.
    #[serde(default = "default_topup")]
    pub employer_topup_share: f64,
    /// Weeks used to annualize capital losses.
    #[serde(default = "default_weeks")]
    pub capital_annualization_weeks: f64,
    /// Take-up propensity among eligible employees before alignment.
    #[serde(default = "default_takeup")]
    pub cws_takeup_propensity: f64,
    /// Take-up propensity among the unemployed before alignment.
    #[serde(default = "default_pup_takeup")]
    pub pup_takeup_propensity: f64,
    /// Childcare calibration margins (family-type and decile totals); the
    /// built-in example margins when absent.
    #[serde(default)]
    pub childcare_margins: Option<PathBuf>,
    /// Sign convention of the progressivity index in the published panel.
    #[serde(default = "default_kakwani")]
    pub kakwani_convention: crate::indicators::KakwaniConvention,
    pub output_dir: PathBuf,
    pub master_seed: u64,
}

fn default_topup() -> f64 {
    0.6
}

fn default_weeks() -> f64 {
    52.0
}

fn default_takeup() -> f64 {
    0.5
}

fn default_pup_takeup() -> f64 {
    0.9
}

fn default_kakwani() -> crate::indicators::KakwaniConvention {
    crate::indicators::KakwaniConvention::ConcentrationMinusGini
}

impl ScenarioConfig {
    pub fn from_file(path: &Path) -> Result<Self, SimError> {
        let cfg: ScenarioConfig = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        Ok(cfg)
    }

    /// Validate file references and design ids without running anything.
    pub fn validate(&self) -> Result<(), SimError> {
        if self.waves.is_empty() {
            return Err(SimError::Config("scenario needs at least one wave".into()));
        }
        if let PopulationSource::File { path } = &self.population {
            if !path.exists() {
                return Err(SimError::Config(format!(
                    "population file {} does not exist",
                    path.display()
                )));
            }
        }
        if let PopulationSource::Synthetic { spec, n, .. } = &self.population {
            spec.validate()?;
            if *n < 1 {
                return Err(SimError::Config("synthetic population size must be >= 1".into()));
            }
        }
        for w in &self.waves {
            if !w.control_totals.exists() {
                return Err(SimError::Config(format!(
                    "control totals file {} does not exist",
                    w.control_totals.display()
                )));
            }
        }
        if let Some(p) = &self.tax_params {
            if !p.exists() {
                return Err(SimError::Config(format!(
                    "tax parameter file {} does not exist",
                    p.display()
                )));
            }
        }
        self.resolve_cws()?;
        self.resolve_pup()?;
        if !(0.0..=1.0).contains(&self.employer_topup_share) {
            return Err(SimError::Config("employer_topup_share must be in [0,1]".into()));
        }
        if !(0.0..=1.0).contains(&self.cws_takeup_propensity) {
            return Err(SimError::Config("cws_takeup_propensity must be in [0,1]".into()));
        }
        if self.capital_annualization_weeks <= 0.0 {
            return Err(SimError::Config("capital_annualization_weeks must be positive".into()));
        }
        Ok(())
    }

    pub fn resolve_cws(&self) -> Result<crate::policy::WageSubsidySchedule, SimError> {
        let as_path = Path::new(&self.cws_design);
        if as_path.extension().is_some() && as_path.exists() {
            crate::policy::load_cws_schedule(as_path)
        } else {
            crate::policy::cws_preset(&self.cws_design)
        }
    }

    pub fn resolve_pup(&self) -> Result<crate::policy::PupSchedule, SimError> {
        let as_path = Path::new(&self.pup_design);
        if as_path.extension().is_some() && as_path.exists() {
            crate::policy::load_pup_schedule(as_path)
        } else {
            crate::policy::pup_preset(&self.pup_design)
        }
    }

    pub fn resolve_tax(&self) -> Result<crate::policy::TaxBenefitParams, SimError> {
        let params = match &self.tax_params {
            Some(p) => serde_json::from_str(&std::fs::read_to_string(p)?)?,
            None => crate::policy::TaxBenefitParams::default(),
        };
        params.validate()?;
        Ok(params)
    }

    /// Canonical JSON used for hashing and the manifest.
    pub fn canonical_json(&self) -> Result<String, SimError> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::population::SyntheticSpec;

    fn base_config(dir: &Path) -> ScenarioConfig {
        ScenarioConfig {
            population: PopulationSource::Synthetic {
                spec: SyntheticSpec::default(),
                n: 100,
                seed: 1,
            },
            cws_design: "ECRS".into(),
            pup_design: "PUP_24Mar".into(),
            tax_params: None,
            waves: vec![],
            employer_topup_share: 0.6,
            capital_annualization_weeks: 52.0,
            cws_takeup_propensity: 0.5,
            pup_takeup_propensity: 0.9,
            childcare_margins: None,
            kakwani_convention: crate::indicators::KakwaniConvention::ConcentrationMinusGini,
            output_dir: dir.to_path_buf(),
            master_seed: 7,
        }
    }

    #[test]
    fn empty_waves_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = base_config(dir.path());
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn unknown_design_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = base_config(dir.path());
        cfg.cws_design = "NOPE".into();
        assert!(cfg.resolve_cws().is_err());
    }

    #[test]
    fn config_round_trips_through_json() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = base_config(dir.path());
        let json = cfg.canonical_json().unwrap();
        let back: ScenarioConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(cfg, back);
    }
}
