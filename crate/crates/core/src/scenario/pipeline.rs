//! The three-step nowcasting pipeline.
//!
//! Step 1 re-simulates the labour market module and aligns it to the wave's
//! control totals. Step 2 re-simulates income levels, indexes earnings by
//! industry/occupation growth, and assigns capital losses via iterative
//! proportional fitting over the age-income distribution. Step 3 evaluates
//! the configured payment schedules and the baseline tax-benefit system and
//! produces the indicator tables.
//!
//! All three steps share the master seed: draws are common across waves, so
//! wave differences come only from targets, growth factors and price inputs.

use super::config::{PopulationSource, ScenarioConfig, WaveConfig};
use super::outputs::{write_outputs, RunManifest};
use crate::adjusted::{
    capital_loss, commuting_cost_for_workers, ChildcareCostTable,
};
use crate::alignment::{align_binary, align_multinomial, ipf, IpfProblem, MultinomialUnit, RankedUnit};
use crate::error::SimError;
use crate::igm::{
    fit_binary, fit_level, fit_multinomial, recover_residuals, simulate_level,
    simulate_multinomial_mixed, simulate_presence_mixed, BinaryModelParams, CovariateContext,
    CovariateSpec, FitOptions, FittedEquation, LevelModelParams, ModelStore,
    MultinomialModelParams, ResidualStore,
};
use crate::indicators::{
    compensation_rate, gini_panel, net_replacement_rate, reference_worker_shares,
    relative_replacement_rate, uniform_grid, weighted_deciles, CrOptions, CrPanel, GiniPanel,
    HouseholdIncomes, RecipientRate, RrNetResult, RrRelResult, ELIGIBLE_RANGE_MAX,
    ELIGIBLE_RANGE_MIN, REFERENCE_SHARE_MEDIAN, REFERENCE_SHARE_SIGMA,
};
use crate::money::Cents;
use crate::policy::{
    budget_constraint, cws_presets, household_income, BudgetConstraintCurve, PupSchedule,
    TaxBenefitParams, WageSubsidySchedule, WorkState,
};
use crate::population::{
    apportion, generate_synthetic, load_control_totals, load_population, CellShare, ColumnMap,
    ControlTotals, Gender, LabourState, Person, PopulationSnapshot, SourceKind, CommuteMode,
    SOURCE_KINDS,
};
use crate::rng::{keyed_uniform, Stream};
use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

const DEFAULT_CHILDCARE_MARGINS: &str = include_str!("../../presets/childcare_margins.csv");

/// Everything estimated from the base population.
pub(crate) struct FittedIgm {
    ctx: CovariateContext,
    demo_spec: CovariateSpec,
    work_spec: CovariateSpec,
    in_work: BinaryModelParams,
    self_employed: Option<BinaryModelParams>,
    industry: Option<MultinomialModelParams>,
    occupation: Option<MultinomialModelParams>,
    sector: Option<BinaryModelParams>,
    contract: Option<BinaryModelParams>,
    unemployed: Option<BinaryModelParams>,
    earnings: LevelModelParams,
    earnings_residuals: ResidualStore,
    sources: Vec<SourceEquations>,
}

pub(crate) struct SourceEquations {
    kind: SourceKind,
    presence: Option<BinaryModelParams>,
    level: Option<(LevelModelParams, ResidualStore)>,
}

impl FittedIgm {
    /// The fitted parameters in the serializable cross-run structure.
    pub(crate) fn to_store(&self) -> ModelStore {
        let mut store = ModelStore::default();
        let mut put = |name: &str, eq: FittedEquation| {
            store.equations.insert(name.to_string(), eq);
        };
        put("in_work", FittedEquation::Binary(self.in_work.clone()));
        if let Some(p) = &self.self_employed {
            put("self_employed", FittedEquation::Binary(p.clone()));
        }
        if let Some(p) = &self.industry {
            put("industry", FittedEquation::Multinomial(p.clone()));
        }
        if let Some(p) = &self.occupation {
            put("occupation", FittedEquation::Multinomial(p.clone()));
        }
        if let Some(p) = &self.sector {
            put("sector", FittedEquation::Binary(p.clone()));
        }
        if let Some(p) = &self.contract {
            put("contract", FittedEquation::Binary(p.clone()));
        }
        if let Some(p) = &self.unemployed {
            put("unemployed", FittedEquation::Binary(p.clone()));
        }
        put("earnings_level", FittedEquation::Level(self.earnings.clone()));
        for eq in &self.sources {
            if let Some(p) = &eq.presence {
                put(
                    &format!("source_{}_presence", eq.kind.code()),
                    FittedEquation::Binary(p.clone()),
                );
            }
            if let Some((p, _)) = &eq.level {
                put(
                    &format!("source_{}_level", eq.kind.code()),
                    FittedEquation::Level(p.clone()),
                );
            }
        }
        store
    }
}

/// Outputs of one calibration wave.
#[derive(Debug)]
pub struct WaveOutputs {
    pub label: String,
    pub rr_net: RrNetResult,
    pub rr_rel: RrRelResult,
    pub gini_panel: GiniPanel,
    /// Per-household extract: (household id, weight, disposable, adjusted
    /// equivalized, subsidy, out-of-work payment).
    pub microdata: Vec<(u64, f64, f64, f64, f64, f64)>,
    pub aligned_in_work: usize,
    pub aligned_unemployed: usize,
    pub cws_recipients: usize,
    pub pup_recipients: usize,
}

/// Outputs of a whole scenario run.
#[derive(Debug)]
pub struct RunOutputs {
    pub manifest: RunManifest,
    pub cr_panel: CrPanel,
    pub waves: Vec<WaveOutputs>,
    pub out_dir: PathBuf,
}

fn fit_opts() -> FitOptions {
    FitOptions { tol: 1e-6, max_iter: 200, ridge: 1e-8 }
}

fn try_binary(
    x: &nalgebra::DMatrix<f64>,
    names: &[String],
    y: &[f64],
) -> Result<Option<BinaryModelParams>, SimError> {
    match fit_binary(x, names, y, &fit_opts()) {
        Ok(p) => Ok(Some(p)),
        // degenerate outcomes in small or extreme populations: fall back to
        // keeping the simulated state driven by the observed data
        Err(SimError::Estimation(msg)) if msg.contains("constant outcome") => Ok(None),
        Err(e) => Err(e),
    }
}

pub(crate) fn fit_igm(snapshot: &PopulationSnapshot, seed: u64) -> Result<FittedIgm, SimError> {
    let persons = snapshot.persons();
    let n_industries = persons.iter().map(|p| p.industry as usize + 1).max().unwrap_or(1).max(2);
    let n_occupations = persons.iter().map(|p| p.occupation as usize + 1).max().unwrap_or(1).max(2);
    let ctx = CovariateContext { n_industries, n_occupations };
    let demo_spec = CovariateSpec::demographic();
    let work_spec = CovariateSpec::with_work_cells();
    let demo_names = demo_spec.names(&ctx);
    let work_names = work_spec.names(&ctx);

    // in-work equation over everyone
    let x_all = demo_spec.build(persons.iter(), &ctx);
    let y_inwork: Vec<f64> = persons.iter().map(|p| p.in_work() as u8 as f64).collect();
    let in_work = fit_binary(&x_all, &demo_names, &y_inwork, &fit_opts())?;

    // conditional equations over the in-work
    let workers: Vec<&Person> = persons.iter().filter(|p| p.in_work()).collect();
    if workers.is_empty() {
        return Err(SimError::Estimation("no in-work persons to estimate on".into()));
    }
    let x_work_demo = demo_spec.build(workers.iter().copied(), &ctx);
    let y_selfemp: Vec<f64> = workers
        .iter()
        .map(|p| (p.labour_state == LabourState::SelfEmployed) as u8 as f64)
        .collect();
    let self_employed = try_binary(&x_work_demo, &demo_names, &y_selfemp)?;

    let industry_labels: Vec<String> = (0..n_industries).map(|i| format!("industry_{i}")).collect();
    let y_ind: Vec<usize> = workers.iter().map(|p| p.industry as usize).collect();
    let industry = if y_ind.iter().collect::<BTreeSet<_>>().len() >= 2 {
        Some(fit_multinomial(&x_work_demo, &demo_names, &y_ind, n_industries, &industry_labels, &fit_opts())?)
    } else {
        None
    };

    let occupation_labels: Vec<String> =
        (0..n_occupations).map(|o| format!("occupation_{o}")).collect();
    let y_occ: Vec<usize> = workers.iter().map(|p| p.occupation as usize).collect();
    let occupation = if y_occ.iter().collect::<BTreeSet<_>>().len() >= 2 {
        Some(fit_multinomial(&x_work_demo, &demo_names, &y_occ, n_occupations, &occupation_labels, &fit_opts())?)
    } else {
        None
    };

    let y_public: Vec<f64> = workers
        .iter()
        .map(|p| (p.sector == crate::population::Sector::Public) as u8 as f64)
        .collect();
    let sector = try_binary(&x_work_demo, &demo_names, &y_public)?;
    let y_temp: Vec<f64> = workers
        .iter()
        .map(|p| (p.contract == crate::population::Contract::Temporary) as u8 as f64)
        .collect();
    let contract = try_binary(&x_work_demo, &demo_names, &y_temp)?;

    // unemployed-vs-other among the not-in-work
    let nonworkers: Vec<&Person> = persons.iter().filter(|p| !p.in_work()).collect();
    let unemployed = if nonworkers.is_empty() {
        None
    } else {
        let x_nw = demo_spec.build(nonworkers.iter().copied(), &ctx);
        let y_u: Vec<f64> = nonworkers
            .iter()
            .map(|p| (p.labour_state == LabourState::Unemployed) as u8 as f64)
            .collect();
        try_binary(&x_nw, &demo_names, &y_u)?
    };

    // log-earnings level over in-work persons with positive reference earnings
    let earners: Vec<&Person> = workers
        .iter()
        .copied()
        .filter(|p| p.prev_gross_earnings > 0.0)
        .collect();
    if earners.len() <= work_spec.width(&ctx) {
        return Err(SimError::Estimation("too few earners for the level equation".into()));
    }
    let x_earn = work_spec.build(earners.iter().copied(), &ctx);
    let y_earn: Vec<f64> = earners.iter().map(|p| p.prev_gross_earnings).collect();
    let earnings = fit_level(&x_earn, &work_names, &y_earn, &fit_opts())?;
    let earn_rows: Vec<Vec<f64>> = earners
        .iter()
        .map(|p| {
            let mut row = Vec::new();
            work_spec.fill_row(p, &ctx, &mut row);
            row
        })
        .collect();
    let earn_ids: Vec<u64> = earners.iter().map(|p| p.id).collect();
    let earnings_residuals = recover_residuals(
        &earnings,
        &earn_rows,
        &earn_ids,
        &y_earn,
        seed,
        Stream::EarningsLevel as u64,
    )?;

    // non-labour source equations
    let mut sources = Vec::new();
    for (k, &kind) in SOURCE_KINDS.iter().enumerate() {
        let y_pres: Vec<f64> = persons
            .iter()
            .map(|p| p.source(kind).is_some_and(|s| s.present) as u8 as f64)
            .collect();
        let presence = try_binary(&x_all, &demo_names, &y_pres)?;
        let holders: Vec<&Person> = persons
            .iter()
            .filter(|p| p.source(kind).is_some_and(|s| s.present && s.level > 0.0))
            .collect();
        let level = if presence.is_some() && holders.len() > demo_spec.width(&ctx) + 4 {
            let x_h = demo_spec.build(holders.iter().copied(), &ctx);
            let y_h: Vec<f64> = holders
                .iter()
                .map(|p| p.source(kind).unwrap().level)
                .collect();
            let params = fit_level(&x_h, &demo_names, &y_h, &fit_opts())?;
            let rows: Vec<Vec<f64>> = holders
                .iter()
                .map(|p| {
                    let mut row = Vec::new();
                    demo_spec.fill_row(p, &ctx, &mut row);
                    row
                })
                .collect();
            let ids: Vec<u64> = holders.iter().map(|p| p.id).collect();
            let store = recover_residuals(
                &params,
                &rows,
                &ids,
                &y_h,
                seed,
                Stream::SourceLevel as u64 + k as u64,
            )?;
            Some((params, store))
        } else {
            None
        };
        sources.push(SourceEquations { kind, presence, level });
    }

    Ok(FittedIgm {
        ctx,
        demo_spec,
        work_spec,
        in_work,
        self_employed,
        industry,
        occupation,
        sector,
        contract,
        unemployed,
        earnings,
        earnings_residuals,
        sources,
    })
}

/// Step 1: labour-market transformation with alignment.
pub(crate) fn stage1_labour_market(
    snapshot: &PopulationSnapshot,
    igm: &FittedIgm,
    totals: &ControlTotals,
    config: &ScenarioConfig,
) -> Result<Vec<Person>, SimError> {
    let persons = snapshot.persons();
    let seed = config.master_seed;
    let n = persons.len();

    let demo_rows: Vec<Vec<f64>> = persons
        .iter()
        .map(|p| {
            let mut row = Vec::new();
            igm.demo_spec.fill_row(p, &igm.ctx, &mut row);
            row
        })
        .collect();
    let ids: Vec<u64> = persons.iter().map(|p| p.id).collect();

    // (a) in-work presence, outcome-consistent on the estimation data
    let observed_inwork: Vec<Option<bool>> = persons.iter().map(|p| Some(p.in_work())).collect();
    let presence = simulate_presence_mixed(
        &igm.in_work,
        &demo_rows,
        &ids,
        &observed_inwork,
        seed,
        Stream::InWork as u64,
    );

    // (b) align to in-work counts per (age band, gender) cell
    let cell_counts: BTreeMap<Vec<u32>, u64> =
        totals.in_work_cell_counts().into_iter().collect();
    let mut cells: BTreeMap<Vec<u32>, Vec<usize>> = BTreeMap::new();
    for (i, p) in persons.iter().enumerate() {
        cells
            .entry(vec![p.age_band() as u32, p.gender.index() as u32])
            .or_default()
            .push(i);
    }
    let mut in_work = vec![false; n];
    for (key, members) in &cells {
        let target = *cell_counts.get(key).ok_or_else(|| {
            SimError::Alignment(format!(
                "control totals missing in-work share cell (age band {}, {})",
                key[0],
                Gender::ALL[key[1] as usize].code()
            ))
        })? as usize;
        let units: Vec<RankedUnit> = members
            .iter()
            .map(|&i| RankedUnit {
                id: ids[i],
                probability: presence[i].probability,
                draw: presence[i].draw,
            })
            .collect();
        if target > units.len() {
            return Err(SimError::Alignment(format!(
                "in-work target {target} exceeds cell population {} for cell {key:?}",
                units.len()
            )));
        }
        let selected = align_binary(&units, target)?;
        for (slot, &i) in members.iter().enumerate() {
            in_work[i] = selected[slot];
        }
    }

    // (c) employee vs self-employed among the in-work
    let worker_idx: Vec<usize> = (0..n).filter(|&i| in_work[i]).collect();
    let mut self_emp = vec![false; n];
    if let Some(params) = &igm.self_employed {
        let rows: Vec<Vec<f64>> = worker_idx.iter().map(|&i| demo_rows[i].clone()).collect();
        let wids: Vec<u64> = worker_idx.iter().map(|&i| ids[i]).collect();
        let observed: Vec<Option<bool>> = worker_idx
            .iter()
            .map(|&i| {
                persons[i]
                    .in_work()
                    .then(|| persons[i].labour_state == LabourState::SelfEmployed)
            })
            .collect();
        let draws = simulate_presence_mixed(
            params,
            &rows,
            &wids,
            &observed,
            seed,
            Stream::EmployeeVsSelfEmployed as u64,
        );
        for (slot, &i) in worker_idx.iter().enumerate() {
            self_emp[i] = draws[slot].flag;
        }
    }

    // (d) industry and occupation with employment-cell alignment
    let mut industry: Vec<u8> = persons.iter().map(|p| p.industry).collect();
    let mut occupation: Vec<u8> = persons.iter().map(|p| p.occupation).collect();
    if let Some(params) = &igm.industry {
        align_work_cells(
            persons,
            &demo_rows,
            &ids,
            &worker_idx,
            params,
            igm.occupation.as_ref(),
            totals,
            seed,
            &mut industry,
            &mut occupation,
        )?;
    }

    // (e) sector and contract, Monte Carlo only
    let mut sector: Vec<crate::population::Sector> = persons.iter().map(|p| p.sector).collect();
    if let Some(params) = &igm.sector {
        let rows: Vec<Vec<f64>> = worker_idx.iter().map(|&i| demo_rows[i].clone()).collect();
        let wids: Vec<u64> = worker_idx.iter().map(|&i| ids[i]).collect();
        let observed: Vec<Option<bool>> = worker_idx
            .iter()
            .map(|&i| {
                persons[i]
                    .in_work()
                    .then(|| persons[i].sector == crate::population::Sector::Public)
            })
            .collect();
        let draws =
            simulate_presence_mixed(params, &rows, &wids, &observed, seed, Stream::Sector as u64);
        for (slot, &i) in worker_idx.iter().enumerate() {
            sector[i] = if draws[slot].flag {
                crate::population::Sector::Public
            } else {
                crate::population::Sector::Private
            };
        }
    }
    let mut contract: Vec<crate::population::Contract> =
        persons.iter().map(|p| p.contract).collect();
    if let Some(params) = &igm.contract {
        let rows: Vec<Vec<f64>> = worker_idx.iter().map(|&i| demo_rows[i].clone()).collect();
        let wids: Vec<u64> = worker_idx.iter().map(|&i| ids[i]).collect();
        let observed: Vec<Option<bool>> = worker_idx
            .iter()
            .map(|&i| {
                persons[i]
                    .in_work()
                    .then(|| persons[i].contract == crate::population::Contract::Temporary)
            })
            .collect();
        let draws =
            simulate_presence_mixed(params, &rows, &wids, &observed, seed, Stream::Contract as u64);
        for (slot, &i) in worker_idx.iter().enumerate() {
            contract[i] = if draws[slot].flag {
                crate::population::Contract::Temporary
            } else {
                crate::population::Contract::Permanent
            };
        }
    }

    // (f) unemployed vs retired/inactive among the rest, aligned by gender
    let nonwork_idx: Vec<usize> = (0..n).filter(|&i| !in_work[i]).collect();
    let mut unemployed = vec![false; n];
    {
        let targets: BTreeMap<Vec<u32>, u64> =
            totals.unemployment_cell_counts().into_iter().collect();
        let mut by_gender: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
        for &i in &nonwork_idx {
            by_gender.entry(persons[i].gender.index() as u32).or_default().push(i);
        }
        for (g, members) in &by_gender {
            let target = *targets.get(&vec![*g]).unwrap_or(&0) as usize;
            if target > members.len() {
                return Err(SimError::Alignment(format!(
                    "unemployment target {target} exceeds the {} non-working {}",
                    members.len(),
                    Gender::ALL[*g as usize].code()
                )));
            }
            let units: Vec<RankedUnit> = members
                .iter()
                .map(|&i| {
                    let (p, u) = match &igm.unemployed {
                        Some(params) => {
                            let prob = params.probability(&demo_rows[i]);
                            let raw = keyed_uniform(seed, ids[i], Stream::Unemployed as u64);
                            let observed = !persons[i].in_work();
                            let u = if observed {
                                let was_unemp = persons[i].labour_state == LabourState::Unemployed;
                                if was_unemp { raw * prob } else { prob + raw * (1.0 - prob) }
                            } else {
                                raw
                            };
                            (prob, u)
                        }
                        None => (0.5, keyed_uniform(seed, ids[i], Stream::Unemployed as u64)),
                    };
                    RankedUnit { id: ids[i], probability: p, draw: u }
                })
                .collect();
            let selected = align_binary(&units, target)?;
            for (slot, &i) in members.iter().enumerate() {
                unemployed[i] = selected[slot];
            }
        }
    }

    // (g) benefit take-up: subsidy first (employees kept on payroll), then
    // the unemployment payment among the remaining non-employed
    let mut receives_cws = vec![false; n];
    {
        let targets: BTreeMap<u8, u64> =
            totals.cws_takeup.iter().map(|t| (t.industry, t.count)).collect();
        let mut by_ind: BTreeMap<u8, Vec<usize>> = BTreeMap::new();
        for &i in &worker_idx {
            if !self_emp[i] && persons[i].employer_eligible {
                by_ind.entry(industry[i]).or_default().push(i);
            }
        }
        for (ind, count) in &targets {
            let members = by_ind.get(ind).cloned().unwrap_or_default();
            let target = *count as usize;
            if target > members.len() {
                return Err(SimError::Alignment(format!(
                    "subsidy take-up target {target} exceeds the {} eligible employees in industry {ind}",
                    members.len()
                )));
            }
            let units: Vec<RankedUnit> = members
                .iter()
                .map(|&i| RankedUnit {
                    id: ids[i],
                    probability: config.cws_takeup_propensity,
                    draw: keyed_uniform(config.master_seed, ids[i], Stream::CwsTakeup as u64),
                })
                .collect();
            let selected = align_binary(&units, target)?;
            for (slot, &i) in members.iter().enumerate() {
                receives_cws[i] = selected[slot];
            }
        }
    }
    let mut receives_pup = vec![false; n];
    {
        let targets: BTreeMap<u8, u64> =
            totals.pup_takeup.iter().map(|t| (t.industry, t.count)).collect();
        let mut by_ind: BTreeMap<u8, Vec<usize>> = BTreeMap::new();
        for &i in &nonwork_idx {
            if unemployed[i] {
                // previous industry attachment
                by_ind.entry(persons[i].industry).or_default().push(i);
            }
        }
        for (ind, count) in &targets {
            let members = by_ind.get(ind).cloned().unwrap_or_default();
            let target = *count as usize;
            if target > members.len() {
                return Err(SimError::Alignment(format!(
                    "out-of-work take-up target {target} exceeds the {} unemployed in industry {ind}",
                    members.len()
                )));
            }
            let units: Vec<RankedUnit> = members
                .iter()
                .map(|&i| RankedUnit {
                    id: ids[i],
                    probability: config.pup_takeup_propensity,
                    draw: keyed_uniform(config.master_seed, ids[i], Stream::PupTakeup as u64),
                })
                .collect();
            let selected = align_binary(&units, target)?;
            for (slot, &i) in members.iter().enumerate() {
                receives_pup[i] = selected[slot];
            }
        }
    }

    // assemble the transformed persons
    let mut out = persons.to_vec();
    for (i, p) in out.iter_mut().enumerate() {
        if in_work[i] {
            p.labour_state = if self_emp[i] {
                LabourState::SelfEmployed
            } else {
                LabourState::Employee
            };
            p.industry = industry[i];
            p.occupation = occupation[i];
            p.sector = sector[i];
            p.contract = contract[i];
            if p.commute_mode == CommuteMode::None {
                p.commute_mode = CommuteMode::Car;
            }
        } else {
            p.labour_state = if unemployed[i] {
                LabourState::Unemployed
            } else if p.age >= 65 {
                LabourState::Retired
            } else {
                LabourState::Inactive
            };
            p.gross_earnings = 0.0;
        }
        p.receives_cws = in_work[i] && !self_emp[i] && receives_cws[i];
        p.receives_pup = !in_work[i] && unemployed[i] && receives_pup[i];
    }
    Ok(out)
}

/// Industry alignment per gender, then occupation alignment per
/// (gender, industry) cell. Targets are apportioned within each gender from
/// the control-total employment shares so they sum to the realized counts.
#[allow(clippy::too_many_arguments)]
fn align_work_cells(
    persons: &[Person],
    demo_rows: &[Vec<f64>],
    ids: &[u64],
    worker_idx: &[usize],
    industry_params: &MultinomialModelParams,
    occupation_params: Option<&MultinomialModelParams>,
    totals: &ControlTotals,
    seed: u64,
    industry: &mut [u8],
    occupation: &mut [u8],
) -> Result<(), SimError> {
    let n_ind = industry_params.n_outcomes();

    // simulate industries with outcome-consistent draws
    let rows: Vec<Vec<f64>> = worker_idx.iter().map(|&i| demo_rows[i].clone()).collect();
    let wids: Vec<u64> = worker_idx.iter().map(|&i| ids[i]).collect();
    let observed_ind: Vec<Option<usize>> = worker_idx
        .iter()
        .map(|&i| persons[i].in_work().then_some(persons[i].industry as usize))
        .collect();
    let ind_draws = simulate_multinomial_mixed(
        industry_params,
        &rows,
        &wids,
        &observed_ind,
        seed,
        Stream::Industry as u64,
    );

    let mut by_gender: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for (slot, &i) in worker_idx.iter().enumerate() {
        by_gender.entry(persons[i].gender.index() as u32).or_default().push(slot);
    }

    for (g, slots) in &by_gender {
        // shares for this gender, renormalized over its present cells
        let cells: Vec<&CellShare> = totals
            .employment_shares
            .iter()
            .filter(|c| c.key[2] == *g)
            .collect();
        if cells.is_empty() {
            return Err(SimError::Alignment(format!(
                "control totals have no employment shares for gender {}",
                Gender::ALL[*g as usize].code()
            )));
        }
        let gender_sum: f64 = cells.iter().map(|c| c.share).sum();
        // industry margins within this gender
        let mut ind_share = vec![0.0f64; n_ind];
        for c in &cells {
            let ind = c.key[0] as usize;
            if ind < n_ind {
                ind_share[ind] += c.share / gender_sum;
            }
        }
        let ind_cells: Vec<CellShare> = (0..n_ind)
            .map(|i| CellShare { key: vec![i as u32], share: ind_share[i] })
            .collect();
        let ind_targets: Vec<usize> = apportion(slots.len() as u64, &ind_cells)
            .into_iter()
            .map(|(_, c)| c as usize)
            .collect();

        let units: Vec<MultinomialUnit> = slots
            .iter()
            .map(|&s| MultinomialUnit {
                id: wids[s],
                probabilities: ind_draws[s].probabilities.clone(),
                draw: ind_draws[s].draw,
            })
            .collect();
        let assigned = align_multinomial(&units, &ind_targets)?;
        for (k, &s) in slots.iter().enumerate() {
            industry[worker_idx[s]] = assigned[k] as u8;
        }

        // occupation alignment within each (gender, industry) cell
        if let Some(occ_params) = occupation_params {
            let n_occ = occ_params.n_outcomes();
            let observed_occ: Vec<Option<usize>> = slots
                .iter()
                .map(|&s| {
                    let i = worker_idx[s];
                    persons[i].in_work().then_some(persons[i].occupation as usize)
                })
                .collect();
            let occ_rows: Vec<Vec<f64>> = slots.iter().map(|&s| rows[s].clone()).collect();
            let occ_ids: Vec<u64> = slots.iter().map(|&s| wids[s]).collect();
            let occ_draws = simulate_multinomial_mixed(
                occ_params,
                &occ_rows,
                &occ_ids,
                &observed_occ,
                seed,
                Stream::Occupation as u64,
            );
            let mut by_ind: BTreeMap<u8, Vec<usize>> = BTreeMap::new();
            for (k, &s) in slots.iter().enumerate() {
                by_ind.entry(industry[worker_idx[s]]).or_default().push(k);
            }
            for (ind, in_slots) in &by_ind {
                let mut occ_share = vec![0.0f64; n_occ];
                let mut cell_sum = 0.0;
                for c in &cells {
                    if c.key[0] == *ind as u32 && (c.key[1] as usize) < n_occ {
                        occ_share[c.key[1] as usize] += c.share;
                        cell_sum += c.share;
                    }
                }
                if cell_sum <= 0.0 {
                    // no occupation detail for this industry: keep simulation
                    for &k in in_slots {
                        occupation[worker_idx[slots[k]]] = occ_draws[k].outcome as u8;
                    }
                    continue;
                }
                for v in &mut occ_share {
                    *v /= cell_sum;
                }
                let occ_cells: Vec<CellShare> = (0..n_occ)
                    .map(|o| CellShare { key: vec![o as u32], share: occ_share[o] })
                    .collect();
                let occ_targets: Vec<usize> = apportion(in_slots.len() as u64, &occ_cells)
                    .into_iter()
                    .map(|(_, c)| c as usize)
                    .collect();
                let units: Vec<MultinomialUnit> = in_slots
                    .iter()
                    .map(|&k| MultinomialUnit {
                        id: occ_ids[k],
                        probabilities: occ_draws[k].probabilities.clone(),
                        draw: occ_draws[k].draw,
                    })
                    .collect();
                let assigned = align_multinomial(&units, &occ_targets)?;
                for (pos, &k) in in_slots.iter().enumerate() {
                    occupation[worker_idx[slots[k]]] = assigned[pos] as u8;
                }
            }
        }
    }
    Ok(())
}

/// Step 2: returns and price transformation.
pub(crate) fn stage2_returns(
    persons: &mut [Person],
    igm: &FittedIgm,
    totals: &ControlTotals,
) -> Result<(), SimError> {
    // earnings levels for the in-work, indexed by industry/occupation growth
    let worker_idx: Vec<usize> = (0..persons.len()).filter(|&i| persons[i].in_work()).collect();
    let rows: Vec<Vec<f64>> = worker_idx
        .iter()
        .map(|&i| {
            let mut row = Vec::new();
            igm.work_spec.fill_row(&persons[i], &igm.ctx, &mut row);
            row
        })
        .collect();
    let ids: Vec<u64> = worker_idx.iter().map(|&i| persons[i].id).collect();
    let present = vec![true; worker_idx.len()];
    let levels = simulate_level(&igm.earnings, &igm.earnings_residuals, &rows, &ids, &present);

    let mut warned: BTreeSet<(u8, u8)> = BTreeSet::new();
    for (slot, &i) in worker_idx.iter().enumerate() {
        let p = &mut persons[i];
        let factor = match totals.growth_factor(p.industry, p.occupation) {
            Some(f) => f,
            None => {
                if warned.insert((p.industry, p.occupation)) {
                    eprintln!(
                        "warning: no growth factor for industry {} occupation {}; defaulting to 1",
                        p.industry, p.occupation
                    );
                }
                1.0
            }
        };
        p.gross_earnings = levels[slot] * factor;
    }

    // non-labour sources: re-simulate presence and levels
    let all_rows: Vec<Vec<f64>> = persons
        .iter()
        .map(|p| {
            let mut row = Vec::new();
            igm.demo_spec.fill_row(p, &igm.ctx, &mut row);
            row
        })
        .collect();
    let all_ids: Vec<u64> = persons.iter().map(|p| p.id).collect();
    for (k, eq) in igm.sources.iter().enumerate() {
        let Some(presence_params) = &eq.presence else { continue };
        let observed: Vec<Option<bool>> = persons
            .iter()
            .map(|p| Some(p.source(eq.kind).is_some_and(|s| s.present)))
            .collect();
        let draws = simulate_presence_mixed(
            presence_params,
            &all_rows,
            &all_ids,
            &observed,
            igm.earnings_residuals.seed,
            Stream::SourcePresence as u64 + k as u64,
        );
        let levels: Option<Vec<f64>> = eq.level.as_ref().map(|(params, store)| {
            let flags: Vec<bool> = draws.iter().map(|d| d.flag).collect();
            simulate_level(params, store, &all_rows, &all_ids, &flags)
        });
        for (i, p) in persons.iter_mut().enumerate() {
            let src = p
                .income_sources
                .iter_mut()
                .find(|s| s.kind == eq.kind)
                .expect("canonical source vector");
            src.present = draws[i].flag;
            src.level = match (&levels, draws[i].flag) {
                (Some(ls), true) => ls[i],
                (None, true) => src.level, // no level equation: keep the base level
                (_, false) => 0.0,
            };
        }
    }
    Ok(())
}

/// Capital-holding probabilities over (age band, market-income decile) cells,
/// approximated by iterative proportional fitting of the holder margins.
pub(crate) struct CapitalHoldingTable {
    probs: BTreeMap<(usize, usize), f64>,
}

impl CapitalHoldingTable {
    pub fn probability(&self, age_band: usize, decile: usize) -> f64 {
        *self.probs.get(&(age_band, decile)).unwrap_or(&0.0)
    }
}

pub(crate) fn capital_holding_table(
    snapshot: &PopulationSnapshot,
) -> Result<CapitalHoldingTable, SimError> {
    const BANDS: usize = 6;
    const DECILES: usize = 10;
    let households = snapshot.households();
    if households.is_empty() {
        return Err(SimError::Alignment("no households for capital holding".into()));
    }
    // household cell: head's age band x equivalized-market-income decile
    let incomes: Vec<(usize, f64, bool)> = households
        .iter()
        .map(|h| {
            let head_band = snapshot
                .members(h)
                .next()
                .map(|p| p.age_band())
                .unwrap_or(0);
            let market: f64 = snapshot.members(h).map(|p| p.market_income()).sum();
            let eq = market / (h.size() as f64).sqrt();
            (head_band, eq, h.capital_value > 0.0)
        })
        .collect();
    let mut order: Vec<usize> = (0..incomes.len()).collect();
    order.sort_by(|&a, &b| incomes[a].1.total_cmp(&incomes[b].1).then(a.cmp(&b)));
    let mut cell_pop = vec![0.0f64; BANDS * DECILES];
    let mut cell_holders = vec![0.0f64; BANDS * DECILES];
    let mut deciles = vec![0usize; incomes.len()];
    for (rank, &i) in order.iter().enumerate() {
        deciles[i] = (rank * DECILES / incomes.len()).min(DECILES - 1);
    }
    for (i, (band, _, holder)) in incomes.iter().enumerate() {
        let cell = band * DECILES + deciles[i];
        cell_pop[cell] += 1.0;
        if *holder {
            cell_holders[cell] += 1.0;
        }
    }
    let row_margins: Vec<f64> = (0..BANDS)
        .map(|b| (0..DECILES).map(|d| cell_holders[b * DECILES + d]).sum())
        .collect();
    let col_margins: Vec<f64> = (0..DECILES)
        .map(|d| (0..BANDS).map(|b| cell_holders[b * DECILES + d]).sum())
        .collect();
    let total: f64 = row_margins.iter().sum();
    if total == 0.0 {
        // no holders anywhere
        return Ok(CapitalHoldingTable { probs: BTreeMap::new() });
    }
    // smoothed seed keeps zero-margin rows/columns fittable
    let seed: Vec<f64> = cell_pop
        .iter()
        .zip(row_margins.iter().flat_map(|&r| std::iter::repeat(r).take(DECILES)))
        .map(|(&pop, r)| if r > 0.0 { pop.max(0.25) } else { 0.0 })
        .collect();
    let seed: Vec<f64> = seed
        .iter()
        .enumerate()
        .map(|(idx, &v)| if col_margins[idx % DECILES] > 0.0 { v } else { 0.0 })
        .collect();
    let problem = IpfProblem {
        seed,
        rows: BANDS,
        cols: DECILES,
        row_margins,
        col_margins,
    };
    let solution = ipf(&problem, 1e-8, 1000)?;
    let mut probs = BTreeMap::new();
    for b in 0..BANDS {
        for d in 0..DECILES {
            let pop = cell_pop[b * DECILES + d];
            if pop > 0.0 {
                probs.insert((b, d), (solution.get(b, d) / pop).clamp(0.0, 1.0));
            }
        }
    }
    Ok(CapitalHoldingTable { probs })
}

/// Parse childcare margins (family-type totals and decile totals) and produce
/// the cost table via iterative proportional fitting.
pub(crate) fn childcare_table_from_margins(text: &str) -> Result<ChildcareCostTable, SimError> {
    let mut section = String::new();
    let mut family: Vec<(String, f64)> = Vec::new();
    let mut deciles: Vec<(usize, f64)> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if line.starts_with('[') && line.ends_with(']') {
            section = line[1..line.len() - 1].to_string();
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        match section.as_str() {
            "family_type_totals" => {
                if fields[0] == "family_type" {
                    continue;
                }
                if fields.len() != 2 {
                    return Err(SimError::Schema(format!(
                        "line {}: bad family-type total",
                        lineno + 1
                    )));
                }
                family.push((
                    fields[0].to_string(),
                    fields[1].parse().map_err(|_| {
                        SimError::Schema(format!("line {}: bad total", lineno + 1))
                    })?,
                ));
            }
            "decile_totals" => {
                if fields[0] == "decile" {
                    continue;
                }
                if fields.len() != 2 {
                    return Err(SimError::Schema(format!(
                        "line {}: bad decile total",
                        lineno + 1
                    )));
                }
                deciles.push((
                    fields[0].parse().map_err(|_| {
                        SimError::Schema(format!("line {}: bad decile", lineno + 1))
                    })?,
                    fields[1].parse().map_err(|_| {
                        SimError::Schema(format!("line {}: bad total", lineno + 1))
                    })?,
                ));
            }
            _ => {
                return Err(SimError::Schema(format!(
                    "line {}: unknown childcare margins section `{section}`",
                    lineno + 1
                )))
            }
        }
    }
    if family.is_empty() || deciles.is_empty() {
        return Err(SimError::Schema("childcare margins need both tables".into()));
    }
    deciles.sort_by_key(|(d, _)| *d);
    let problem = IpfProblem {
        seed: vec![1.0; family.len() * deciles.len()],
        rows: family.len(),
        cols: deciles.len(),
        row_margins: family.iter().map(|(_, t)| *t).collect(),
        col_margins: deciles.iter().map(|(_, t)| *t).collect(),
    };
    let solution = ipf(&problem, 1e-8, 1000)?;
    ChildcareCostTable::from_ipf(family.iter().map(|(n, _)| n.clone()).collect(), &solution)
}

/// Per-household evaluation results for one wave.
struct HouseholdEval {
    household_id: u64,
    weight: f64,
    disposable: f64,
    eq_adjusted: f64,
    cws_total: f64,
    pup_total: f64,
    table4: Option<HouseholdIncomes>,
    /// (person id, payment, weight) per subsidy recipient in the household.
    recipients: Vec<(u64, f64)>,
    /// (person id, out-of-work eq adjusted income) per recipient.
    counterfactuals: Vec<(u64, f64)>,
}

/// Step 3: tax-benefit evaluation and indicators for one wave.
#[allow(clippy::too_many_arguments)]
pub(crate) fn stage3_evaluate(
    snapshot: &PopulationSnapshot,
    cws: &WageSubsidySchedule,
    pup: &PupSchedule,
    params: &TaxBenefitParams,
    config: &ScenarioConfig,
    wave: &WaveConfig,
    holding: &CapitalHoldingTable,
    childcare: &ChildcareCostTable,
) -> Result<WaveOutputs, SimError> {
    let households = snapshot.households();
    let topup = config.employer_topup_share;

    // first pass: disposable incomes, for the childcare decile assignment
    let mut evals: Vec<HouseholdEval> = Vec::with_capacity(households.len());
    for h in households {
        let members: Vec<&Person> = snapshot.members(h).collect();
        let inc = household_income(h, &members, cws, pup, params, topup, WorkState::AsObserved);
        evals.push(HouseholdEval {
            household_id: h.id,
            weight: h.weight,
            disposable: inc.disposable(),
            eq_adjusted: 0.0,
            cws_total: inc.cws,
            pup_total: inc.pup,
            table4: None,
            recipients: Vec::new(),
            counterfactuals: Vec::new(),
        });
    }
    // weighted deciles of equivalized disposable income
    let keys: Vec<RecipientRate> = evals
        .iter()
        .zip(households)
        .map(|(e, h)| RecipientRate {
            person_id: h.id,
            rate: 0.0,
            income: e.disposable / (h.size() as f64).sqrt(),
            weight: h.weight,
        })
        .collect();
    let hh_deciles = weighted_deciles(&keys);

    // second pass: adjustments, counterfactuals, panel inputs
    for (idx, h) in households.iter().enumerate() {
        let members: Vec<&Person> = snapshot.members(h).collect();
        let inc = household_income(h, &members, cws, pup, params, topup, WorkState::AsObserved);

        let head_band = members.first().map(|p| p.age_band()).unwrap_or(0);
        let is_holder = h.capital_value > 0.0
            && keyed_uniform(config.master_seed, h.id, Stream::CapitalHolding as u64)
                < holding.probability(head_band, hh_deciles[idx]);
        let q = capital_loss(
            h.capital_value,
            wave.capital_index_change,
            is_holder,
            config.capital_annualization_weeks,
        );
        let commuting = crate::adjusted::household_commuting_cost(members.iter().copied());
        let childcare_cost = childcare.household_cost(h, hh_deciles[idx])?;
        let housing = h.effective_housing_cost();
        let size_sqrt = (h.size() as f64).sqrt();

        let adjusted = inc.disposable() - housing - q - commuting - childcare_cost;
        let eq_adjusted = adjusted / size_sqrt;

        let mut recipients = Vec::new();
        let mut counterfactuals = Vec::new();
        for p in &members {
            if !(p.receives_cws && p.labour_state == LabourState::Employee) {
                continue;
            }
            let payment = cws
                .payment(
                    Cents::from_euros(p.prev_gross_earnings),
                    Cents::from_euros(p.prev_net_earnings),
                    topup,
                )
                .to_euros();
            recipients.push((p.id, payment));

            let out = household_income(
                h,
                &members,
                cws,
                pup,
                params,
                topup,
                WorkState::MovedToPup { person_id: p.id },
            );
            // the mover no longer commutes; childcare and housing held fixed
            let workers_out = members
                .iter()
                .filter(|m| {
                    m.id != p.id && m.in_work() && m.commute_mode != CommuteMode::None
                })
                .count() as u32;
            let commuting_out = commuting_cost_for_workers(workers_out);
            let adjusted_out = out.disposable() - housing - q - commuting_out - childcare_cost;
            counterfactuals.push((p.id, adjusted_out / size_sqrt));
        }

        let table4 = if recipients.is_empty() {
            None
        } else {
            let cws_total = inc.cws;
            // market income with workers' earnings net of the subsidy
            let market_excl = (inc.market_income - cws_total).max(0.0);
            Some(HouseholdIncomes {
                market_excl_cws: market_excl / size_sqrt,
                gross_incl_benefits: (inc.market_income + inc.pup + inc.benefits) / size_sqrt,
                adjusted: eq_adjusted,
                adjusted_minus_cws: (adjusted - cws_total) / size_sqrt,
                cws: cws_total / size_sqrt,
                weight: h.weight,
            })
        };

        let e = &mut evals[idx];
        e.eq_adjusted = eq_adjusted;
        e.table4 = table4;
        e.recipients = recipients;
        e.counterfactuals = counterfactuals;
    }

    // indicators over recipients
    let rr_net = net_replacement_rate(evals.iter().flat_map(|e| {
        e.recipients
            .iter()
            .map(move |(pid, pay)| (*pid, *pay, e.eq_adjusted, e.weight))
    }))?;
    let rr_rel = relative_replacement_rate(evals.iter().flat_map(|e| {
        e.counterfactuals
            .iter()
            .map(move |(pid, out_income)| (*pid, *out_income, e.eq_adjusted, e.weight))
    }))?;
    let t4_inputs: Vec<HouseholdIncomes> =
        evals.iter().filter_map(|e| e.table4).collect();
    let panel = gini_panel(&t4_inputs, config.kakwani_convention)?;

    let persons = snapshot.persons();
    Ok(WaveOutputs {
        label: wave.label.clone(),
        rr_net,
        rr_rel,
        gini_panel: panel,
        microdata: evals
            .iter()
            .map(|e| {
                (
                    e.household_id,
                    e.weight,
                    e.disposable,
                    e.eq_adjusted,
                    e.cws_total,
                    e.pup_total,
                )
            })
            .collect(),
        aligned_in_work: persons.iter().filter(|p| p.in_work()).count(),
        aligned_unemployed: persons
            .iter()
            .filter(|p| p.labour_state == LabourState::Unemployed)
            .count(),
        cws_recipients: persons.iter().filter(|p| p.receives_cws).count(),
        pup_recipients: persons.iter().filter(|p| p.receives_pup).count(),
    })
}

fn load_base_population(config: &ScenarioConfig) -> Result<PopulationSnapshot, SimError> {
    match &config.population {
        PopulationSource::File { path } => load_population(path, &ColumnMap::default()),
        PopulationSource::Synthetic { spec, n, seed } => generate_synthetic(spec, *n, *seed),
    }
}

/// Run the full pipeline: estimate once, then per wave re-simulate, align,
/// index, evaluate and emit indicator tables. The output directory is
/// created atomically; nothing is left behind on failure.
pub fn run_scenario(config: &ScenarioConfig) -> Result<RunOutputs, SimError> {
    config.validate().map_err(|e| e.in_stage("validate"))?;
    let cws = config.resolve_cws().map_err(|e| e.in_stage("validate"))?;
    let pup = config.resolve_pup().map_err(|e| e.in_stage("validate"))?;
    let tax = config
        .resolve_tax()
        .map_err(|e| e.in_stage("validate"))?
        .indexed();

    let timing = std::env::var_os("WAGESIM_TIMING").is_some();
    let mut mark = std::time::Instant::now();
    let lap = |label: &str, mark: &mut std::time::Instant| {
        if timing {
            eprintln!("timing: {label}: {:?}", mark.elapsed());
        }
        *mark = std::time::Instant::now();
    };

    let base = load_base_population(config).map_err(|e| e.in_stage("population"))?;
    if base.is_empty() {
        return Err(SimError::Config("population is empty".into()).in_stage("population"));
    }
    lap("population", &mut mark);
    let igm = fit_igm(&base, config.master_seed).map_err(|e| e.in_stage("estimate"))?;
    lap("estimate", &mut mark);
    let childcare_text = match &config.childcare_margins {
        Some(p) => std::fs::read_to_string(p).map_err(SimError::from)?,
        None => DEFAULT_CHILDCARE_MARGINS.to_string(),
    };
    let childcare =
        childcare_table_from_margins(&childcare_text).map_err(|e| e.in_stage("returns"))?;

    // the stylized compensation-rate panel is schedule-level, shared by waves
    let grid = uniform_grid(ELIGIBLE_RANGE_MIN, ELIGIBLE_RANGE_MAX, 14_620);
    let shares = reference_worker_shares(&grid, REFERENCE_SHARE_MEDIAN, REFERENCE_SHARE_SIGMA);
    let cr_panel = compensation_rate(
        &cws,
        &tax,
        &grid,
        Some(&shares),
        &CrOptions { employer_topup_share: config.employer_topup_share, ..Default::default() },
    )
    .map_err(|e| e.in_stage("indicators"))?;

    let mut waves = Vec::new();
    for wave in &config.waves {
        let totals = load_control_totals(&wave.control_totals)
            .map_err(|e| e.in_stage("labour_market"))?;
        let mut persons = stage1_labour_market(&base, &igm, &totals, config)
            .map_err(|e| e.in_stage("labour_market"))?;
        lap("stage1", &mut mark);
        stage2_returns(&mut persons, &igm, &totals).map_err(|e| e.in_stage("returns"))?;
        lap("stage2", &mut mark);
        let snapshot = base
            .with_persons(persons)
            .map_err(|e| e.in_stage("returns"))?;
        let holding =
            capital_holding_table(&snapshot).map_err(|e| e.in_stage("returns"))?;
        lap("rebuild+holding", &mut mark);
        let outputs = stage3_evaluate(
            &snapshot, &cws, &pup, &tax, config, wave, &holding, &childcare,
        )
        .map_err(|e| e.in_stage("tax_benefit"))?;
        lap("stage3", &mut mark);
        waves.push(outputs);
    }

    let manifest = RunManifest::build(config, &cws.id, &pup.id)?;
    let out_dir = write_outputs(config, &manifest, &igm.to_store(), &cr_panel, &waves)?;
    Ok(RunOutputs { manifest, cr_panel, waves, out_dir })
}

/// Emit one budget-constraint curve file per shipped wage-subsidy design,
/// using the configured unemployment payment and tax parameters.
pub fn emit_budget_constraints(
    config: &ScenarioConfig,
    grid: &[f64],
) -> Result<Vec<(PathBuf, BudgetConstraintCurve)>, SimError> {
    let pup = config.resolve_pup()?;
    let tax = config.resolve_tax()?.indexed();
    std::fs::create_dir_all(&config.output_dir)?;
    let mut out = Vec::new();
    for cws in cws_presets()? {
        let curve = budget_constraint(&cws, &pup, &tax, grid, config.employer_topup_share)?;
        let path = config.output_dir.join(format!("budget_{}.csv", cws.id));
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(["earnings", "subsidy", "net_in_work", "net_out_of_work"])?;
        for i in 0..curve.grid.len() {
            w.write_record([
                format!("{:.2}", curve.grid[i]),
                format!("{:.2}", curve.subsidy[i]),
                format!("{:.2}", curve.net_in_work[i]),
                format!("{:.2}", curve.net_out_of_work[i]),
            ])?;
        }
        w.flush()?;
        out.push((path, curve));
    }
    Ok(out)
}

/// Build plausible control totals from a base snapshot by scaling its
/// realized structure: a labour-market shock for example files and tests.
pub fn derive_control_totals(
    snapshot: &PopulationSnapshot,
    period: &str,
    employment_scale: f64,
    unemployed_share_of_nonwork: f64,
    cws_share_of_employees: f64,
    pup_share_of_unemployed: f64,
    earnings_growth: f64,
) -> ControlTotals {
    let persons = snapshot.persons();
    let n = persons.len() as f64;
    let base_in_work: Vec<&Person> = persons.iter().filter(|p| p.in_work()).collect();
    let in_work_total = ((base_in_work.len() as f64) * employment_scale).floor() as u64;

    // joint (age band, gender) distribution of the in-work
    let mut cell_counts: BTreeMap<Vec<u32>, u64> = BTreeMap::new();
    for p in persons {
        cell_counts
            .entry(vec![p.age_band() as u32, p.gender.index() as u32])
            .or_insert(0);
    }
    for p in &base_in_work {
        *cell_counts
            .entry(vec![p.age_band() as u32, p.gender.index() as u32])
            .or_insert(0) += 1;
    }
    let in_work_shares: Vec<CellShare> = cell_counts
        .iter()
        .map(|(k, &c)| CellShare { key: k.clone(), share: c as f64 / base_in_work.len() as f64 })
        .collect();

    // joint (industry, occupation, gender) distribution of the in-work
    let mut emp_counts: BTreeMap<Vec<u32>, u64> = BTreeMap::new();
    for p in &base_in_work {
        *emp_counts
            .entry(vec![p.industry as u32, p.occupation as u32, p.gender.index() as u32])
            .or_insert(0) += 1;
    }
    let employment_shares: Vec<CellShare> = emp_counts
        .iter()
        .map(|(k, &c)| CellShare { key: k.clone(), share: c as f64 / base_in_work.len() as f64 })
        .collect();

    let nonwork_after = n as u64 - in_work_total;
    let unemployment_total =
        ((nonwork_after as f64) * unemployed_share_of_nonwork).floor() as u64;
    let female_share = persons
        .iter()
        .filter(|p| p.gender == Gender::Female)
        .count() as f64
        / n;
    let unemployment_shares = vec![
        CellShare { key: vec![Gender::Female.index() as u32], share: female_share },
        CellShare { key: vec![Gender::Male.index() as u32], share: 1.0 - female_share },
    ];

    // conservative take-up counts leave slack for eligibility and alignment
    let mut employees_by_ind: BTreeMap<u8, u64> = BTreeMap::new();
    for p in &base_in_work {
        if p.labour_state == LabourState::Employee {
            *employees_by_ind.entry(p.industry).or_insert(0) += 1;
        }
    }
    let cws_takeup = employees_by_ind
        .iter()
        .map(|(&ind, &c)| crate::population::TakeupCount {
            industry: ind,
            count: ((c as f64) * employment_scale * cws_share_of_employees * 0.7).floor() as u64,
        })
        .collect();
    let mut unemployed_by_ind: BTreeMap<u8, u64> = BTreeMap::new();
    for p in persons {
        unemployed_by_ind.entry(p.industry).or_insert(0);
    }
    let ind_count = unemployed_by_ind.len().max(1) as u64;
    let per_ind = (unemployment_total as f64 * pup_share_of_unemployed * 0.5
        / ind_count as f64)
        .floor() as u64;
    let pup_takeup = unemployed_by_ind
        .keys()
        .map(|&ind| crate::population::TakeupCount { industry: ind, count: per_ind })
        .collect();

    let growth_factors = emp_counts
        .keys()
        .map(|k| crate::population::GrowthFactor {
            industry: k[0] as u8,
            occupation: k[1] as u8,
            factor: earnings_growth,
        })
        .collect();

    ControlTotals {
        period: period.to_string(),
        in_work_total,
        in_work_shares,
        employment_shares,
        unemployment_total,
        unemployment_shares,
        cws_takeup,
        pup_takeup,
        growth_factors,
    }
    .normalized()
    .expect("derived totals are well-formed")
}


/// Write a ready-to-run example bundle: a scenario config, wave control
/// totals derived from the configured synthetic population, and a README
/// pointer. Returns the config path.
pub fn write_example_bundle(dir: &Path, n: usize, seed: u64) -> Result<PathBuf, SimError> {
    std::fs::create_dir_all(dir)?;
    let spec = crate::population::SyntheticSpec::default();
    let snapshot = generate_synthetic(&spec, n, seed)?;

    // three example waves with progressively deeper labour-market shocks;
    // synthetic-plausible values, not observed data
    let waves = [
        ("wave1_example", 0.82, 0.85, 0.5, 0.8, 1.00, -0.10),
        ("wave2_example", 0.86, 0.80, 0.45, 0.75, 1.01, -0.04),
        ("wave3_example", 0.88, 0.78, 0.4, 0.7, 1.02, 0.02),
    ];
    let mut wave_cfgs = Vec::new();
    for (label, scale, unemp, cwss, pups, growth, cap) in waves {
        let totals = derive_control_totals(&snapshot, label, scale, unemp, cwss, pups, growth);
        let path = dir.join(format!("{label}.csv"));
        crate::population::write_control_totals(&totals, &path)?;
        wave_cfgs.push(WaveConfig {
            label: label.to_string(),
            control_totals: path,
            capital_index_change: cap,
        });
    }

    let config = ScenarioConfig {
        population: PopulationSource::Synthetic { spec, n, seed },
        cws_design: "EWSS_Oct".into(),
        pup_design: "PUP_16Oct".into(),
        tax_params: None,
        waves: wave_cfgs,
        employer_topup_share: 0.6,
        capital_annualization_weeks: 52.0,
        cws_takeup_propensity: 0.5,
        pup_takeup_propensity: 0.9,
        childcare_margins: None,
        kakwani_convention: crate::indicators::KakwaniConvention::ConcentrationMinusGini,
        output_dir: dir.join("out"),
        master_seed: seed,
    };
    let path = dir.join("scenario.json");
    std::fs::write(&path, config.canonical_json()?)?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::population::SyntheticSpec;

    fn fixed_point_totals(snapshot: &PopulationSnapshot) -> ControlTotals {
        let persons = snapshot.persons();
        let in_work: Vec<&Person> = persons.iter().filter(|p| p.in_work()).collect();
        let mut in_work_cells: BTreeMap<Vec<u32>, u64> = BTreeMap::new();
        for p in persons {
            in_work_cells
                .entry(vec![p.age_band() as u32, p.gender.index() as u32])
                .or_insert(0);
        }
        for p in &in_work {
            *in_work_cells
                .entry(vec![p.age_band() as u32, p.gender.index() as u32])
                .or_insert(0) += 1;
        }
        let mut emp_cells: BTreeMap<Vec<u32>, u64> = BTreeMap::new();
        for p in &in_work {
            *emp_cells
                .entry(vec![p.industry as u32, p.occupation as u32, p.gender.index() as u32])
                .or_insert(0) += 1;
        }
        let mut unemp_by_gender = [0u64; 2];
        for p in persons {
            if p.labour_state == LabourState::Unemployed {
                unemp_by_gender[p.gender.index()] += 1;
            }
        }
        let unemployment_total = unemp_by_gender[0] + unemp_by_gender[1];
        ControlTotals {
            period: "fixed".into(),
            in_work_total: in_work.len() as u64,
            in_work_shares: in_work_cells
                .iter()
                .map(|(k, &c)| CellShare {
                    key: k.clone(),
                    share: c as f64 / in_work.len() as f64,
                })
                .collect(),
            employment_shares: emp_cells
                .iter()
                .map(|(k, &c)| CellShare {
                    key: k.clone(),
                    share: c as f64 / in_work.len() as f64,
                })
                .collect(),
            unemployment_total,
            unemployment_shares: Gender::ALL
                .iter()
                .map(|g| CellShare {
                    key: vec![g.index() as u32],
                    share: unemp_by_gender[g.index()] as f64 / unemployment_total.max(1) as f64,
                })
                .collect(),
            cws_takeup: vec![],
            pup_takeup: vec![],
            growth_factors: emp_cells
                .keys()
                .map(|k| crate::population::GrowthFactor {
                    industry: k[0] as u8,
                    occupation: k[1] as u8,
                    factor: 1.0,
                })
                .collect(),
        }
        .normalized()
        .unwrap()
    }

    /// Targets equal to the realized simulation leave every labour-market
    /// assignment unchanged (untied ranks).
    #[test]
    fn stage1_is_a_fixed_point_at_realized_totals() {
        let snapshot = generate_synthetic(&SyntheticSpec::default(), 2000, 17).unwrap();
        let igm = fit_igm(&snapshot, 17).unwrap();
        let totals = fixed_point_totals(&snapshot);
        let dir = tempfile::tempdir().unwrap();
        let config = ScenarioConfig {
            population: PopulationSource::Synthetic {
                spec: SyntheticSpec::default(),
                n: 2000,
                seed: 17,
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
            output_dir: dir.path().join("out"),
            master_seed: 17,
        };
        let simulated = stage1_labour_market(&snapshot, &igm, &totals, &config).unwrap();
        let mut changed_state = 0usize;
        let mut changed_cells = 0usize;
        for (base, sim) in snapshot.persons().iter().zip(&simulated) {
            if base.labour_state != sim.labour_state {
                changed_state += 1;
            }
            if base.in_work() && sim.in_work()
                && (base.industry != sim.industry || base.occupation != sim.occupation)
            {
                changed_cells += 1;
            }
        }
        assert_eq!(changed_state, 0, "labour states changed at the fixed point");
        assert_eq!(changed_cells, 0, "work cells changed at the fixed point");
    }
}
