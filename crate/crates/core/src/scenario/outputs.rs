//! Output bundle: indicator CSVs, per-household microdata and the run
//! manifest. Failed runs leave nothing behind; outputs land atomically.

use super::config::{PopulationSource, ScenarioConfig};
use super::pipeline::WaveOutputs;
use crate::error::SimError;
use crate::indicators::{CrPanel, KakwaniConvention};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

/// Everything needed to re-run the scenario bit-identically: the resolved
/// configuration, its hash, input-file hashes and versions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config_hash: String,
    pub master_seed: u64,
    pub core_version: String,
    pub cws_design: String,
    pub pup_design: String,
    pub input_hashes: BTreeMap<String, String>,
    pub config: serde_json::Value,
}

fn sha256_hex(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(bytes);
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

impl RunManifest {
    pub fn build(
        config: &ScenarioConfig,
        cws_id: &str,
        pup_id: &str,
    ) -> Result<RunManifest, SimError> {
        let canonical = config.canonical_json()?;
        let mut input_hashes = BTreeMap::new();
        let mut hash_file = |path: &Path| -> Result<(), SimError> {
            let bytes = std::fs::read(path)?;
            input_hashes.insert(path.display().to_string(), sha256_hex(&bytes));
            Ok(())
        };
        if let PopulationSource::File { path } = &config.population {
            hash_file(path)?;
        }
        for w in &config.waves {
            hash_file(&w.control_totals)?;
        }
        if let Some(p) = &config.tax_params {
            hash_file(p)?;
        }
        if let Some(p) = &config.childcare_margins {
            hash_file(p)?;
        }
        Ok(RunManifest {
            config_hash: sha256_hex(canonical.as_bytes()),
            master_seed: config.master_seed,
            core_version: env!("CARGO_PKG_VERSION").to_string(),
            cws_design: cws_id.to_string(),
            pup_design: pup_id.to_string(),
            input_hashes,
            config: serde_json::from_str(&canonical)?,
        })
    }

    pub fn from_file(path: &Path) -> Result<RunManifest, SimError> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

struct IndicatorWriter {
    w: csv::Writer<std::fs::File>,
}

impl IndicatorWriter {
    fn create(path: &Path) -> Result<Self, SimError> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["indicator", "group", "value", "notes"])?;
        Ok(IndicatorWriter { w })
    }

    fn row(&mut self, indicator: &str, group: &str, value: f64, notes: &str) -> Result<(), SimError> {
        self.w
            .write_record([indicator, group, &format!("{value:.6}"), notes])?;
        Ok(())
    }

    fn finish(mut self) -> Result<(), SimError> {
        self.w.flush()?;
        Ok(())
    }
}

fn write_cr(path: &Path, panel: &CrPanel) -> Result<(), SimError> {
    let mut out = IndicatorWriter::create(path)?;
    let notes = format!("design={}; capped at 1", panel.design_id);
    for (d, cell) in panel.decile_means.iter().enumerate() {
        if let Some(v) = cell {
            out.row("compensation_rate", &format!("decile_{}", d + 1), *v, &notes)?;
        }
    }
    out.row("compensation_rate", "Bottom", panel.bottom, &notes)?;
    out.row("compensation_rate", "Median", panel.median, &notes)?;
    out.row("compensation_rate", "Top", panel.top, &notes)?;
    out.row(
        "compensation_rate",
        "Average",
        panel.average,
        &format!("{notes}; worker-share weighted"),
    )?;
    out.finish()
}

fn write_wave(dir: &Path, wave: &WaveOutputs, convention: KakwaniConvention) -> Result<(), SimError> {
    let label = &wave.label;

    let mut t2 = IndicatorWriter::create(&dir.join(format!("table2_rr_net_{label}.csv")))?;
    for (row, value) in &wave.rr_net.panel.rows {
        t2.row("rr_net", row, *value, "per equivalized adjusted income decile")?;
    }
    t2.row(
        "rr_net",
        "excluded_nonpositive",
        wave.rr_net.excluded_nonpositive as f64,
        "recipients excluded for non-positive income",
    )?;
    t2.finish()?;

    let mut t3 = IndicatorWriter::create(&dir.join(format!("table3_rr_rel_{label}.csv")))?;
    let b = &wave.rr_rel.bands;
    t3.row("rr_rel_share", "70-89", b.band_70_89, "share of recipients")?;
    t3.row("rr_rel_share", "90-99", b.band_90_99, "share of recipients")?;
    t3.row("rr_rel_share", "100+", b.band_100_plus, "share of recipients")?;
    t3.row("rr_rel_share", "Total", b.total_70_plus, "share with rate >= 0.7")?;
    t3.row("rr_rel_share", "below_70", b.below_70, "full-distribution remainder")?;
    t3.finish()?;

    let mut t4 = IndicatorWriter::create(&dir.join(format!("table4_gini_{label}.csv")))?;
    for (row, value) in &wave.gini_panel.rows {
        t4.row("gini_panel", row, *value, convention.label())?;
    }
    t4.finish()?;

    let mut md = csv::Writer::from_path(dir.join(format!("microdata_{label}.csv")))?;
    md.write_record([
        "household_id",
        "weight",
        "disposable",
        "eq_adjusted",
        "cws",
        "pup",
    ])?;
    for (id, w, disp, adj, cws, pup) in &wave.microdata {
        md.write_record([
            id.to_string(),
            format!("{w:.6}"),
            format!("{disp:.6}"),
            format!("{adj:.6}"),
            format!("{cws:.6}"),
            format!("{pup:.6}"),
        ])?;
    }
    md.flush()?;
    Ok(())
}

fn write_wave_panels(dir: &Path, waves: &[WaveOutputs]) -> Result<(), SimError> {
    // wave-by-wave share panel
    let mut t7 = IndicatorWriter::create(&dir.join("table7_rr_shares.csv"))?;
    for (i, w) in waves.iter().enumerate() {
        let wave_name = format!("wave_{} ({})", i + 1, w.label);
        t7.row("rr_rel_share", &format!("{wave_name}/rr_gt_1"), w.rr_rel.bands.band_100_plus, "")?;
        t7.row(
            "rr_rel_share",
            &format!("{wave_name}/rr_gt_0.7"),
            w.rr_rel.bands.total_70_plus,
            "",
        )?;
    }
    t7.finish()?;

    // wave-by-wave progressivity panel
    let mut t8 = IndicatorWriter::create(&dir.join("table8_gini_waves.csv"))?;
    for (i, w) in waves.iter().enumerate() {
        let wave_name = format!("wave_{} ({})", i + 1, w.label);
        for (row, value) in &w.gini_panel.rows {
            t8.row("gini_panel", &format!("{wave_name}/{row}"), *value, "")?;
        }
    }
    t8.finish()
}

/// Write the whole bundle into a temp directory and move it into place.
pub(crate) fn write_outputs(
    config: &ScenarioConfig,
    manifest: &RunManifest,
    equations: &crate::igm::ModelStore,
    cr_panel: &CrPanel,
    waves: &[WaveOutputs],
) -> Result<PathBuf, SimError> {
    let out_dir = &config.output_dir;
    if out_dir.exists() {
        return Err(SimError::Config(format!(
            "output directory {} already exists",
            out_dir.display()
        )));
    }
    let parent = out_dir.parent().unwrap_or_else(|| Path::new("."));
    std::fs::create_dir_all(parent)?;
    let tmp = parent.join(format!(
        "{}.tmp",
        out_dir.file_name().map(|s| s.to_string_lossy()).unwrap_or_default()
    ));
    if tmp.exists() {
        std::fs::remove_dir_all(&tmp)?;
    }
    std::fs::create_dir_all(&tmp)?;

    let result = (|| -> Result<(), SimError> {
        std::fs::write(
            tmp.join("manifest.json"),
            serde_json::to_string_pretty(manifest)?,
        )?;
        std::fs::write(tmp.join("fitted_equations.json"), equations.to_json()?)?;
        write_cr(&tmp.join("table1_cr.csv"), cr_panel)?;
        for wave in waves {
            write_wave(&tmp, wave, config.kakwani_convention)?;
        }
        if waves.len() > 1 {
            write_wave_panels(&tmp, waves)?;
        }
        Ok(())
    })();

    match result {
        Ok(()) => {
            std::fs::rename(&tmp, out_dir)?;
            Ok(out_dir.clone())
        }
        Err(e) => {
            let _ = std::fs::remove_dir_all(&tmp);
            Err(e)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareRow {
    pub file: String,
    pub indicator: String,
    pub group: String,
    pub value_a: f64,
    pub value_b: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CompareReport {
    pub rows: Vec<CompareRow>,
    /// Rows where the value changed sign between the runs (redistribution
    /// indices and band shares are the ones flagged).
    pub sign_changes: Vec<String>,
}

impl CompareReport {
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("file,indicator,group,value_a,value_b,delta\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},\"{}\",{:.6},{:.6},{:.6}\n",
                r.file, r.indicator, r.group, r.value_a, r.value_b, r.delta
            ));
        }
        out
    }
}

fn read_indicator_csv(path: &Path) -> Result<Vec<(String, String, f64)>, SimError> {
    let mut rdr = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let value: f64 = rec.get(2).unwrap_or("nan").parse().unwrap_or(f64::NAN);
        out.push((
            rec.get(0).unwrap_or("").to_string(),
            rec.get(1).unwrap_or("").to_string(),
            value,
        ));
    }
    Ok(out)
}

/// Compare two output bundles produced from the same population and seed.
pub fn compare_runs(bundle_a: &Path, bundle_b: &Path) -> Result<CompareReport, SimError> {
    let ma = RunManifest::from_file(&bundle_a.join("manifest.json"))?;
    let mb = RunManifest::from_file(&bundle_b.join("manifest.json"))?;
    if ma.master_seed != mb.master_seed
        || ma.config.get("population") != mb.config.get("population")
    {
        return Err(SimError::Config(
            "bundles do not share a population and master seed".into(),
        ));
    }

    let mut report = CompareReport::default();
    let mut names: Vec<String> = std::fs::read_dir(bundle_a)?
        .filter_map(|e| e.ok())
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .filter(|n| n.starts_with("table") && n.ends_with(".csv"))
        .collect();
    names.sort();
    for name in names {
        let pb = bundle_b.join(&name);
        if !pb.exists() {
            continue;
        }
        let rows_a = read_indicator_csv(&bundle_a.join(&name))?;
        let rows_b: BTreeMap<(String, String), f64> = read_indicator_csv(&pb)?
            .into_iter()
            .map(|(i, g, v)| ((i, g), v))
            .collect();
        for (indicator, group, va) in rows_a {
            let Some(&vb) = rows_b.get(&(indicator.clone(), group.clone())) else {
                continue;
            };
            let flaggable = group.contains("(5)")
                || indicator == "rr_rel_share"
                || group.contains("rr_gt");
            if flaggable && va != 0.0 && vb != 0.0 && va.signum() != vb.signum() {
                report
                    .sign_changes
                    .push(format!("{name}: {indicator} {group}: {va:.6} -> {vb:.6}"));
            }
            report.rows.push(CompareRow {
                file: name.clone(),
                indicator,
                group,
                value_a: va,
                value_b: vb,
                delta: vb - va,
            });
        }
    }
    Ok(report)
}
