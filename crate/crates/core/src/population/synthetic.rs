//! Synthetic population generation.
//!
//! A stand-in for survey microdata: persons are adults with labour-market
//! attributes and a log-linear earnings process, grouped into households by
//! sampling a household size and then assigning members. Generation is a pure
//! function of `(spec, n, seed)`.

use super::{
    CommuteMode, Contract, Education, Gender, Household, IncomeSource, LabourState, Person,
    PopulationSnapshot, Sector, SOURCE_KINDS,
};
use crate::error::SimError;
use crate::policy::TaxBenefitParams;
use crate::rng::{keyed_normal, keyed_uniform, Stream};
use serde::{Deserialize, Serialize};

/// Distribution parameters for synthesis. All shares are probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticSpec {
    /// Probability of a household having 1, 2, ... adult members.
    pub household_adult_probs: Vec<f64>,
    /// Probability of 0, 1, 2, ... children per household.
    pub children_probs: Vec<f64>,
    pub female_share: f64,
    pub education_probs: Vec<f64>,
    pub industry_probs: Vec<f64>,
    pub occupation_probs: Vec<f64>,
    pub public_sector_share: f64,
    pub temporary_contract_share: f64,
    /// Share of adults in work.
    pub employment_rate: f64,
    /// Share of the in-work who are self-employed.
    pub self_employed_share: f64,
    /// Share of the not-in-work who are unemployed (rest retired/inactive by age).
    pub unemployed_share_of_nonwork: f64,
    /// Location of log weekly earnings (log euros).
    pub earnings_ln_location: f64,
    /// Dispersion of log weekly earnings; must be non-negative.
    pub earnings_ln_sigma: f64,
    /// Additive log-earnings effects by education level.
    pub earnings_education_effects: Vec<f64>,
    /// Additive log-earnings effects by age band.
    pub earnings_age_effects: Vec<f64>,
    /// Additive log-earnings effect for female workers.
    pub earnings_female_effect: f64,
    /// Presence probability of each non-labour source, in canonical order.
    pub source_presence_probs: Vec<f64>,
    /// Log-level location of each non-labour source, in canonical order.
    pub source_ln_locations: Vec<f64>,
    pub source_ln_sigma: f64,
    /// Weekly housing cost log-location and dispersion.
    pub housing_ln_location: f64,
    pub housing_ln_sigma: f64,
    /// Share of households holding capital, and the holding's log-value.
    pub capital_holder_share: f64,
    pub capital_ln_location: f64,
    pub capital_ln_sigma: f64,
    pub childcare_user_share: f64,
    pub commute_probs: Vec<f64>,
    pub employer_eligible_share: f64,
    /// Baseline system used to derive previous net pay from previous gross.
    pub tax: TaxBenefitParams,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            household_adult_probs: vec![0.32, 0.45, 0.15, 0.08],
            children_probs: vec![0.45, 0.22, 0.22, 0.11],
            female_share: 0.5,
            education_probs: vec![0.2, 0.45, 0.35],
            industry_probs: vec![0.22, 0.18, 0.2, 0.25, 0.15],
            occupation_probs: vec![0.15, 0.22, 0.28, 0.2, 0.15],
            public_sector_share: 0.22,
            temporary_contract_share: 0.12,
            employment_rate: 0.72,
            self_employed_share: 0.14,
            unemployed_share_of_nonwork: 0.2,
            // weekly earnings roughly lognormal around a median near 545
            earnings_ln_location: 6.12,
            earnings_ln_sigma: 0.42,
            earnings_education_effects: vec![-0.25, 0.0, 0.35],
            earnings_age_effects: vec![-0.35, -0.05, 0.08, 0.12, 0.08, 0.0],
            earnings_female_effect: -0.08,
            source_presence_probs: vec![0.12, 0.08, 0.05, 0.07],
            source_ln_locations: vec![3.0, 4.6, 4.4, 3.2],
            source_ln_sigma: 0.7,
            housing_ln_location: 5.0,
            housing_ln_sigma: 0.45,
            capital_holder_share: 0.3,
            capital_ln_location: 8.5,
            capital_ln_sigma: 1.0,
            childcare_user_share: 0.5,
            commute_probs: vec![0.58, 0.27, 0.15],
            employer_eligible_share: 0.8,
            tax: TaxBenefitParams::default(),
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.earnings_ln_sigma < 0.0 || !self.earnings_ln_sigma.is_finite() {
            return Err(SimError::Config(format!(
                "earnings_ln_sigma must be non-negative and finite, got {}",
                self.earnings_ln_sigma
            )));
        }
        if !self.earnings_ln_location.is_finite() {
            return Err(SimError::Config("earnings_ln_location must be finite".into()));
        }
        for (name, probs) in [
            ("household_adult_probs", &self.household_adult_probs),
            ("children_probs", &self.children_probs),
            ("education_probs", &self.education_probs),
            ("industry_probs", &self.industry_probs),
            ("occupation_probs", &self.occupation_probs),
            ("commute_probs", &self.commute_probs),
        ] {
            if probs.is_empty() || probs.iter().any(|p| *p < 0.0 || !p.is_finite()) {
                return Err(SimError::Config(format!("{name} must be non-empty and non-negative")));
            }
            let sum: f64 = probs.iter().sum();
            if (sum - 1.0).abs() > 1e-6 {
                return Err(SimError::Config(format!("{name} sums to {sum}, expected 1")));
            }
        }
        for (name, share) in [
            ("female_share", self.female_share),
            ("employment_rate", self.employment_rate),
            ("self_employed_share", self.self_employed_share),
            ("unemployed_share_of_nonwork", self.unemployed_share_of_nonwork),
            ("capital_holder_share", self.capital_holder_share),
            ("employer_eligible_share", self.employer_eligible_share),
        ] {
            if !(0.0..=1.0).contains(&share) {
                return Err(SimError::Config(format!("{name} must be in [0,1], got {share}")));
            }
        }
        Ok(())
    }
}

fn pick(probs: &[f64], u: f64) -> usize {
    let mut cum = 0.0;
    for (i, p) in probs.iter().enumerate() {
        cum += p;
        if u < cum {
            return i;
        }
    }
    probs.len() - 1
}

// synthesis draw streams, offset from Stream::Synthesis
mod attr {
    pub const HH_SIZE: u64 = 0;
    pub const CHILDREN: u64 = 1;
    pub const HOUSING: u64 = 2;
    pub const CAPITAL_HOLD: u64 = 3;
    pub const CAPITAL_VALUE: u64 = 4;
    pub const CHILDCARE: u64 = 5;
    pub const AGE: u64 = 8;
    pub const GENDER: u64 = 9;
    pub const EDUCATION: u64 = 10;
    pub const INDUSTRY: u64 = 11;
    pub const OCCUPATION: u64 = 12;
    pub const SECTOR: u64 = 13;
    pub const CONTRACT: u64 = 14;
    pub const IN_WORK: u64 = 15;
    pub const SELF_EMP: u64 = 16;
    pub const UNEMP: u64 = 17;
    pub const EARN_NOISE: u64 = 18;
    pub const COMMUTE: u64 = 19;
    pub const ELIGIBLE: u64 = 20;
    pub const SRC_PRESENT: u64 = 24; // + source index
    pub const SRC_LEVEL: u64 = 32;   // + source index
}

fn stream(offset: u64) -> u64 {
    Stream::Synthesis as u64 + offset
}

/// Generate `n` adults grouped into households. Identical `(spec, n, seed)`
/// produce identical snapshots.
pub fn generate_synthetic(
    spec: &SyntheticSpec,
    n: usize,
    seed: u64,
) -> Result<PopulationSnapshot, SimError> {
    spec.validate()?;
    if n < 1 {
        return Err(SimError::Config("population size must be >= 1".into()));
    }

    let mut persons = Vec::with_capacity(n);
    let mut households = Vec::new();
    let mut next_person: u64 = 1;
    let mut hh_id: u64 = 0;

    while persons.len() < n {
        hh_id += 1;
        let u_size = keyed_uniform(seed, hh_id, stream(attr::HH_SIZE));
        let mut adults = pick(&spec.household_adult_probs, u_size) + 1;
        adults = adults.min(n - persons.len());
        let n_children =
            pick(&spec.children_probs, keyed_uniform(seed, hh_id, stream(attr::CHILDREN))) as u32;

        let mut member_ids = Vec::with_capacity(adults);
        for _ in 0..adults {
            let pid = next_person;
            next_person += 1;
            member_ids.push(pid);
            persons.push(synth_person(spec, seed, pid, hh_id));
        }

        let housing = (spec.housing_ln_location
            + spec.housing_ln_sigma * keyed_normal(seed, hh_id, stream(attr::HOUSING)))
        .exp();
        let holds_capital =
            keyed_uniform(seed, hh_id, stream(attr::CAPITAL_HOLD)) < spec.capital_holder_share;
        let capital_value = if holds_capital {
            (spec.capital_ln_location
                + spec.capital_ln_sigma * keyed_normal(seed, hh_id, stream(attr::CAPITAL_VALUE)))
            .exp()
        } else {
            0.0
        };
        let childcare_user = n_children > 0
            && keyed_uniform(seed, hh_id, stream(attr::CHILDCARE)) < spec.childcare_user_share;

        households.push(Household {
            id: hh_id,
            n_adults: member_ids.len() as u32,
            member_ids,
            n_children,
            housing_cost: housing,
            capital_value,
            childcare_user,
            housing_deferred: false,
            weight: 1.0,
        });
    }

    PopulationSnapshot::new(persons, households)
}

fn synth_person(spec: &SyntheticSpec, seed: u64, pid: u64, hh_id: u64) -> Person {
    let age = 18 + (keyed_uniform(seed, pid, stream(attr::AGE)) * 62.0) as u32; // 18..=79
    let gender = if keyed_uniform(seed, pid, stream(attr::GENDER)) < spec.female_share {
        Gender::Female
    } else {
        Gender::Male
    };
    let education = Education::from_index(pick(
        &spec.education_probs,
        keyed_uniform(seed, pid, stream(attr::EDUCATION)),
    ));
    let industry = pick(
        &spec.industry_probs,
        keyed_uniform(seed, pid, stream(attr::INDUSTRY)),
    ) as u8;
    let occupation = pick(
        &spec.occupation_probs,
        keyed_uniform(seed, pid, stream(attr::OCCUPATION)),
    ) as u8;
    let sector = if keyed_uniform(seed, pid, stream(attr::SECTOR)) < spec.public_sector_share {
        Sector::Public
    } else {
        Sector::Private
    };
    let contract =
        if keyed_uniform(seed, pid, stream(attr::CONTRACT)) < spec.temporary_contract_share {
            Contract::Temporary
        } else {
            Contract::Permanent
        };

    let in_work = keyed_uniform(seed, pid, stream(attr::IN_WORK)) < spec.employment_rate;
    let labour_state = if in_work {
        if keyed_uniform(seed, pid, stream(attr::SELF_EMP)) < spec.self_employed_share {
            LabourState::SelfEmployed
        } else {
            LabourState::Employee
        }
    } else if keyed_uniform(seed, pid, stream(attr::UNEMP)) < spec.unemployed_share_of_nonwork {
        LabourState::Unemployed
    } else if age >= 65 {
        LabourState::Retired
    } else {
        LabourState::Inactive
    };

    // age band index consistent with Person::age_band
    let age_band = match age {
        0..=24 => 0,
        25..=34 => 1,
        35..=44 => 2,
        45..=54 => 3,
        55..=64 => 4,
        _ => 5,
    };
    let mut ln_e = spec.earnings_ln_location
        + spec
            .earnings_education_effects
            .get(education.index())
            .copied()
            .unwrap_or(0.0)
        + spec.earnings_age_effects.get(age_band).copied().unwrap_or(0.0)
        + spec.earnings_ln_sigma * keyed_normal(seed, pid, stream(attr::EARN_NOISE));
    if gender == Gender::Female {
        ln_e += spec.earnings_female_effect;
    }
    let prev_gross = ln_e.exp();
    let prev_net = spec.tax.net_of(prev_gross);

    let (gross, prev_gross, prev_net) = if matches!(
        labour_state,
        LabourState::Employee | LabourState::SelfEmployed
    ) {
        (prev_gross, prev_gross, prev_net)
    } else {
        // not in work now; keep the reference-period earnings history
        (0.0, prev_gross, prev_net)
    };

    let income_sources = SOURCE_KINDS
        .iter()
        .enumerate()
        .map(|(k, &kind)| {
            let present = keyed_uniform(seed, pid, stream(attr::SRC_PRESENT + k as u64))
                < spec.source_presence_probs.get(k).copied().unwrap_or(0.0);
            let level = if present {
                (spec.source_ln_locations.get(k).copied().unwrap_or(0.0)
                    + spec.source_ln_sigma
                        * keyed_normal(seed, pid, stream(attr::SRC_LEVEL + k as u64)))
                .exp()
            } else {
                0.0
            };
            IncomeSource { kind, present, level }
        })
        .collect();

    let commute_mode = if matches!(
        labour_state,
        LabourState::Employee | LabourState::SelfEmployed
    ) {
        CommuteMode::from_index(pick(
            &spec.commute_probs,
            keyed_uniform(seed, pid, stream(attr::COMMUTE)),
        ))
    } else {
        CommuteMode::None
    };

    Person {
        id: pid,
        household_id: hh_id,
        age,
        gender,
        education,
        industry,
        occupation,
        sector,
        contract,
        labour_state,
        gross_earnings: gross,
        prev_gross_earnings: prev_gross,
        prev_net_earnings: prev_net,
        income_sources,
        commute_mode,
        receives_cws: false,
        receives_pup: false,
        employer_eligible: keyed_uniform(seed, pid, stream(attr::ELIGIBLE))
            < spec.employer_eligible_share,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_inputs_identical_snapshots() {
        let spec = SyntheticSpec::default();
        let a = generate_synthetic(&spec, 1000, 7).unwrap();
        let b = generate_synthetic(&spec, 1000, 7).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn different_seed_differs() {
        let spec = SyntheticSpec::default();
        let a = generate_synthetic(&spec, 500, 7).unwrap();
        let b = generate_synthetic(&spec, 500, 8).unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn full_employment_spec_all_employees() {
        let spec = SyntheticSpec {
            employment_rate: 1.0,
            self_employed_share: 0.0,
            ..SyntheticSpec::default()
        };
        let snap = generate_synthetic(&spec, 400, 3).unwrap();
        assert!(snap
            .persons()
            .iter()
            .all(|p| p.labour_state == LabourState::Employee));
    }

    #[test]
    fn negative_sigma_rejected() {
        let spec = SyntheticSpec {
            earnings_ln_sigma: -0.5,
            ..SyntheticSpec::default()
        };
        assert!(generate_synthetic(&spec, 10, 1).is_err());
    }

    #[test]
    fn lognormal_sample_mean_near_analytic() {
        // all covariate effects off -> pure lognormal(mu, sigma)
        let mu = 6.2;
        let sigma = 0.5;
        let spec = SyntheticSpec {
            employment_rate: 1.0,
            self_employed_share: 0.0,
            earnings_ln_location: mu,
            earnings_ln_sigma: sigma,
            earnings_education_effects: vec![0.0; 3],
            earnings_age_effects: vec![0.0; 6],
            earnings_female_effect: 0.0,
            ..SyntheticSpec::default()
        };
        let snap = generate_synthetic(&spec, 100_000, 11).unwrap();
        let mean: f64 = snap
            .persons()
            .iter()
            .map(|p| p.prev_gross_earnings)
            .sum::<f64>()
            / snap.len() as f64;
        let analytic = (mu + sigma * sigma / 2.0).exp();
        assert!(
            (mean - analytic).abs() / analytic < 0.05,
            "sample mean {mean} vs analytic {analytic}"
        );
    }

    #[test]
    fn invariants_hold_for_default_spec() {
        let snap = generate_synthetic(&SyntheticSpec::default(), 2000, 42).unwrap();
        assert_eq!(snap.len(), 2000);
        for h in snap.households() {
            assert!(h.n_adults >= 1);
        }
    }
}
