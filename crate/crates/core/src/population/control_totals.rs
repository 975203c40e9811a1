//! External calibration targets for the alignment stage.

use crate::error::SimError;
use crate::population::Gender;
use serde::{Deserialize, Serialize};

/// One cell of a share table. `key` is the covariate cross of the cell,
/// encoded positionally (e.g. `[age_band, gender]`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellShare {
    pub key: Vec<u32>,
    pub share: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TakeupCount {
    pub industry: u8,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthFactor {
    pub industry: u8,
    pub occupation: u8,
    pub factor: f64,
}

/// Calibration targets for one period: labour-market share tables, benefit
/// take-up counts and the earnings indexation factors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlTotals {
    pub period: String,
    /// Total persons in work in the target period.
    pub in_work_total: u64,
    /// Distribution of the in-work population over (age band, gender) cells.
    pub in_work_shares: Vec<CellShare>,
    /// Distribution of the employed over (industry, occupation, gender) cells.
    pub employment_shares: Vec<CellShare>,
    /// Total unemployed in the target period.
    pub unemployment_total: u64,
    /// Distribution of the unemployed over gender.
    pub unemployment_shares: Vec<CellShare>,
    pub cws_takeup: Vec<TakeupCount>,
    pub pup_takeup: Vec<TakeupCount>,
    /// Earnings growth by (industry, occupation); cells without a factor
    /// default to 1 with a warning at use.
    pub growth_factors: Vec<GrowthFactor>,
}

/// Shares within 1e-6 of 1 are renormalized; anything further off is an error.
const RENORM_TOL: f64 = 1e-6;
const SUM_TOL: f64 = 1e-9;

pub(crate) fn normalize_shares(name: &str, cells: &mut [CellShare]) -> Result<(), SimError> {
    if cells.is_empty() {
        return Err(SimError::Validation(format!(
            "share table `{name}` is empty"
        )));
    }
    for c in cells.iter() {
        if !(0.0..=1.0).contains(&c.share) {
            return Err(SimError::Validation(format!(
                "share table `{name}` cell {:?} has share {} outside [0,1]",
                c.key, c.share
            )));
        }
    }
    let sum: f64 = cells.iter().map(|c| c.share).sum();
    if (sum - 1.0).abs() > RENORM_TOL {
        return Err(SimError::Validation(format!(
            "share table `{name}` sums to {sum}, outside 1 ± {RENORM_TOL}"
        )));
    }
    if (sum - 1.0).abs() > SUM_TOL {
        for c in cells.iter_mut() {
            c.share /= sum;
        }
    }
    Ok(())
}

impl ControlTotals {
    /// Validate and renormalize all share tables.
    pub fn normalized(mut self) -> Result<Self, SimError> {
        normalize_shares("in_work_shares", &mut self.in_work_shares)?;
        normalize_shares("employment_shares", &mut self.employment_shares)?;
        normalize_shares("unemployment_shares", &mut self.unemployment_shares)?;
        for t in self.cws_takeup.iter().chain(self.pup_takeup.iter()) {
            // u64 counts are non-negative by construction; keep the check for
            // deserialized JSON configs that may hold floats upstream.
            let _ = t.count;
        }
        for g in &self.growth_factors {
            if g.factor <= 0.0 || !g.factor.is_finite() {
                return Err(SimError::Validation(format!(
                    "growth factor for industry {} occupation {} must be positive",
                    g.industry, g.occupation
                )));
            }
        }
        Ok(self)
    }

    pub fn growth_factor(&self, industry: u8, occupation: u8) -> Option<f64> {
        self.growth_factors
            .iter()
            .find(|g| g.industry == industry && g.occupation == occupation)
            .map(|g| g.factor)
    }

    /// Integer targets per in-work cell via largest remainder, so the cell
    /// counts sum exactly to `in_work_total`.
    pub fn in_work_cell_counts(&self) -> Vec<(Vec<u32>, u64)> {
        apportion(self.in_work_total, &self.in_work_shares)
    }

    pub fn employment_cell_counts(&self, employed_total: u64) -> Vec<(Vec<u32>, u64)> {
        apportion(employed_total, &self.employment_shares)
    }

    pub fn unemployment_cell_counts(&self) -> Vec<(Vec<u32>, u64)> {
        apportion(self.unemployment_total, &self.unemployment_shares)
    }

    pub fn unemployment_share(&self, gender: Gender) -> Option<f64> {
        self.unemployment_shares
            .iter()
            .find(|c| c.key == vec![gender.index() as u32])
            .map(|c| c.share)
    }
}

/// Largest-remainder apportionment of `total` across share cells.
pub fn apportion(total: u64, shares: &[CellShare]) -> Vec<(Vec<u32>, u64)> {
    let raw: Vec<f64> = shares.iter().map(|c| c.share * total as f64).collect();
    let mut counts: Vec<u64> = raw.iter().map(|r| r.floor() as u64).collect();
    let assigned: u64 = counts.iter().sum();
    let mut rem: Vec<(usize, f64)> = raw
        .iter()
        .enumerate()
        .map(|(i, r)| (i, r - r.floor()))
        .collect();
    rem.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    for k in 0..(total - assigned) as usize {
        counts[rem[k].0] += 1;
    }
    shares
        .iter()
        .zip(counts)
        .map(|(c, n)| (c.key.clone(), n))
        .collect()
}
