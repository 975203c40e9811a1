//! End-to-end scenario behaviours: alignment fixed points, atomic outputs,
//! bundle comparison and budget-constraint emission.

use std::path::Path;
use wagesim_core::population::{generate_synthetic, write_control_totals, SyntheticSpec};
use wagesim_core::scenario::{
    compare_runs, derive_control_totals, emit_budget_constraints, run_scenario,
    write_example_bundle, PopulationSource, ScenarioConfig, WaveConfig,
};

fn scenario_config(dir: &Path, totals_path: &Path, out_name: &str) -> ScenarioConfig {
    ScenarioConfig {
        population: PopulationSource::Synthetic {
            spec: SyntheticSpec::default(),
            n: 3000,
            seed: 11,
        },
        cws_design: "EWSS_Oct".into(),
        pup_design: "PUP_16Oct".into(),
        tax_params: None,
        waves: vec![WaveConfig {
            label: "w1".into(),
            control_totals: totals_path.to_path_buf(),
            capital_index_change: -0.1,
        }],
        employer_topup_share: 0.6,
        capital_annualization_weeks: 52.0,
        cws_takeup_propensity: 0.5,
        pup_takeup_propensity: 0.9,
        childcare_margins: None,
        kakwani_convention: wagesim_core::indicators::KakwaniConvention::ConcentrationMinusGini,
        output_dir: dir.join(out_name),
        master_seed: 11,
    }
}

fn shocked_totals(dir: &Path, name: &str) -> std::path::PathBuf {
    let snap = generate_synthetic(&SyntheticSpec::default(), 3000, 11).unwrap();
    let totals = derive_control_totals(&snap, name, 0.85, 0.8, 0.45, 0.8, 1.01);
    let path = dir.join(format!("{name}.csv"));
    write_control_totals(&totals, &path).unwrap();
    path
}

/// Post-alignment counts equal the integer control-total targets exactly.
#[test]
fn aligned_counts_match_targets_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let snap = generate_synthetic(&SyntheticSpec::default(), 2500, 3).unwrap();
    let totals = derive_control_totals(&snap, "targets", 0.84, 0.8, 0.45, 0.8, 1.0);
    let totals_path = dir.path().join("targets.csv");
    write_control_totals(&totals, &totals_path).unwrap();

    let mut cfg = scenario_config(dir.path(), &totals_path, "out_counts");
    cfg.population =
        PopulationSource::Synthetic { spec: SyntheticSpec::default(), n: 2500, seed: 3 };
    cfg.master_seed = 3;
    let run = run_scenario(&cfg).unwrap();
    let wave = &run.waves[0];

    assert_eq!(wave.aligned_in_work, totals.in_work_total as usize);
    assert_eq!(wave.aligned_unemployed, totals.unemployment_total as usize);
    let cws_target: u64 = totals.cws_takeup.iter().map(|t| t.count).sum();
    let pup_target: u64 = totals.pup_takeup.iter().map(|t| t.count).sum();
    assert_eq!(wave.cws_recipients, cws_target as usize);
    assert_eq!(wave.pup_recipients, pup_target as usize);
}

#[test]
fn identical_config_and_seed_byte_identical_bundles() {
    let dir = tempfile::tempdir().unwrap();
    let totals = shocked_totals(dir.path(), "shock");
    let cfg = scenario_config(dir.path(), &totals, "out");

    run_scenario(&cfg).unwrap();
    let first = dir.path().join("first_run");
    std::fs::rename(dir.path().join("out"), &first).unwrap();
    run_scenario(&cfg).unwrap();
    let second = dir.path().join("out");

    let mut names: Vec<String> = std::fs::read_dir(&first)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    assert!(!names.is_empty());
    for name in names {
        let a = std::fs::read(first.join(&name)).unwrap();
        let b = std::fs::read(second.join(&name)).unwrap();
        assert_eq!(a, b, "bundle file {name} differs between identical runs");
    }
}

#[test]
fn failed_stage_leaves_no_partial_outputs() {
    let dir = tempfile::tempdir().unwrap();
    // totals demanding more subsidy recipients than can exist
    let snap = generate_synthetic(&SyntheticSpec::default(), 500, 7).unwrap();
    let mut totals = derive_control_totals(&snap, "bad", 0.9, 0.8, 0.4, 0.8, 1.0);
    for t in &mut totals.cws_takeup {
        t.count += 100_000;
    }
    let totals_path = dir.path().join("bad.csv");
    write_control_totals(&totals, &totals_path).unwrap();
    let mut cfg = scenario_config(dir.path(), &totals_path, "out_bad");
    cfg.population =
        PopulationSource::Synthetic { spec: SyntheticSpec::default(), n: 500, seed: 7 };

    let err = run_scenario(&cfg).unwrap_err();
    assert!(err.to_string().contains("labour_market"), "{err}");
    assert!(!cfg.output_dir.exists());
    assert!(!dir.path().join("out_bad.tmp").exists());
}

#[test]
fn compare_identical_bundles_all_deltas_zero() {
    let dir = tempfile::tempdir().unwrap();
    let totals = shocked_totals(dir.path(), "shock");
    let a = scenario_config(dir.path(), &totals, "bundle_a");
    let b = scenario_config(dir.path(), &totals, "bundle_b");
    run_scenario(&a).unwrap();
    run_scenario(&b).unwrap();
    let report = compare_runs(&a.output_dir, &b.output_dir).unwrap();
    assert!(!report.rows.is_empty());
    assert!(report.rows.iter().all(|r| r.delta == 0.0));
    assert!(report.sign_changes.is_empty());
}

#[test]
fn compare_rejects_mismatched_populations() {
    let dir = tempfile::tempdir().unwrap();
    let totals = shocked_totals(dir.path(), "shock");
    let a = scenario_config(dir.path(), &totals, "pop_a");
    let mut b = scenario_config(dir.path(), &totals, "pop_b");
    b.master_seed = 99;
    run_scenario(&a).unwrap();
    run_scenario(&b).unwrap();
    assert!(compare_runs(&a.output_dir, &b.output_dir).is_err());
}

#[test]
fn raising_every_pup_band_weakly_raises_high_rr_share() {
    let dir = tempfile::tempdir().unwrap();
    let totals = shocked_totals(dir.path(), "shock");
    let base = scenario_config(dir.path(), &totals, "base_pup");
    let run_base = run_scenario(&base).unwrap();

    // inline schedule with every band raised by 50
    let raised = wagesim_core::policy::pup_preset("PUP_16Oct")
        .unwrap()
        .with_amounts_raised(50.0);
    let raised_path = dir.path().join("pup_raised.json");
    std::fs::write(&raised_path, serde_json::to_string(&raised).unwrap()).unwrap();
    let mut cfg = scenario_config(dir.path(), &totals, "raised_pup");
    cfg.pup_design = raised_path.display().to_string();
    let run_raised = run_scenario(&cfg).unwrap();

    let share_base = run_base.waves[0].rr_rel.bands.band_100_plus;
    let share_raised = run_raised.waves[0].rr_rel.bands.band_100_plus;
    assert!(
        share_raised >= share_base - 1e-12,
        "raised {share_raised} vs base {share_base}"
    );
}

#[test]
fn budget_constraint_files_per_design() {
    let dir = tempfile::tempdir().unwrap();
    let totals = shocked_totals(dir.path(), "shock");
    let mut cfg = scenario_config(dir.path(), &totals, "curves_out");
    cfg.output_dir = dir.path().join("curves");
    let grid: Vec<f64> = (1..=300).map(|i| i as f64 * 5.0).collect();
    let files = emit_budget_constraints(&cfg, &grid).unwrap();
    assert_eq!(files.len(), 5);
    for (path, curve) in &files {
        assert!(path.exists());
        assert_eq!(curve.grid.len(), 300);
    }
    // the flat design pays a constant subsidy across the whole grid
    let ecrs = files.iter().find(|(_, c)| c.design_id == "ECRS").unwrap();
    assert!(ecrs.1.subsidy.iter().all(|&s| (s - 203.0).abs() < 1e-9));
}

/// Sweeping the five subsidy presets produces five compensation-rate panels,
/// one per design.
#[test]
fn preset_sweep_emits_one_cr_panel_per_design() {
    let dir = tempfile::tempdir().unwrap();
    let totals = shocked_totals(dir.path(), "shock");
    for id in ["ECRS", "trTWSS", "opTWSS", "EWSS_Sep", "EWSS_Oct"] {
        let mut cfg = scenario_config(dir.path(), &totals, &format!("sweep_{id}"));
        cfg.cws_design = id.into();
        let run = run_scenario(&cfg).unwrap();
        assert_eq!(run.cr_panel.design_id, id);
        let table1 = cfg.output_dir.join("table1_cr.csv");
        let text = std::fs::read_to_string(table1).unwrap();
        assert!(text.contains(&format!("design={id}")));
        // fitted parameters ship with the bundle for reuse across runs
        let eq_text =
            std::fs::read_to_string(cfg.output_dir.join("fitted_equations.json")).unwrap();
        let store = wagesim_core::igm::ModelStore::from_json(&eq_text).unwrap();
        assert!(store.equations.contains_key("in_work"));
        assert!(store.equations.contains_key("earnings_level"));
    }
}

#[test]
fn example_bundle_runs_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = write_example_bundle(dir.path(), 2000, 5).unwrap();
    let cfg = ScenarioConfig::from_file(&config_path).unwrap();
    cfg.validate().unwrap();
    let run = run_scenario(&cfg).unwrap();
    assert_eq!(run.waves.len(), 3);
    // multi-wave panels are emitted
    assert!(run.out_dir.join("table7_rr_shares.csv").exists());
    assert!(run.out_dir.join("table8_gini_waves.csv").exists());
    assert!(run.out_dir.join("manifest.json").exists());
}
