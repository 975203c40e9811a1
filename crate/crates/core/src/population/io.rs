//! Population and control-totals file ingestion.
//!
//! The population file is a flat UTF-8 CSV holding one row per person with
//! the household attributes repeated on each member row (validated for
//! consistency). The control-totals file is a sectioned CSV with one table
//! per `[section]` header.

use super::control_totals::{CellShare, ControlTotals, GrowthFactor, TakeupCount};
use super::person::{
    CommuteMode, Contract, Education, Gender, IncomeSource, LabourState, Sector, SOURCE_KINDS,
};
use super::{Household, Person, PopulationSnapshot};
use crate::error::SimError;
use std::collections::HashMap;
use std::path::Path;

/// Canonical column order of the population CSV.
pub const POPULATION_COLUMNS: &[&str] = &[
    "person_id",
    "household_id",
    "age",
    "gender",
    "education",
    "industry",
    "occupation",
    "sector",
    "contract",
    "labour_state",
    "gross_earnings",
    "prev_gross_earnings",
    "prev_net_earnings",
    "commute_mode",
    "receives_cws",
    "receives_pup",
    "employer_eligible",
    "src_capital_present",
    "src_capital_level",
    "src_private_pension_present",
    "src_private_pension_level",
    "src_rent_present",
    "src_rent_level",
    "src_investment_present",
    "src_investment_level",
    "hh_n_adults",
    "hh_n_children",
    "hh_housing_cost",
    "hh_capital_value",
    "hh_childcare_user",
    "hh_housing_deferred",
    "hh_weight",
];

/// Optional renaming of canonical columns to the names used in a file.
#[derive(Debug, Clone, Default)]
pub struct ColumnMap(pub HashMap<String, String>);

impl ColumnMap {
    fn resolve<'a>(&'a self, canonical: &'a str) -> &'a str {
        self.0.get(canonical).map(String::as_str).unwrap_or(canonical)
    }
}

struct Row<'a> {
    headers: &'a HashMap<String, usize>,
    record: &'a csv::StringRecord,
    row: usize,
}

impl<'a> Row<'a> {
    fn raw(&self, col: &str) -> Result<&str, SimError> {
        let idx = self.headers.get(col).ok_or_else(|| {
            SimError::Schema(format!("missing column `{col}` in population file"))
        })?;
        self.record.get(*idx).ok_or_else(|| {
            SimError::Validation(format!("row {}: short record", self.row))
        })
    }

    fn f64(&self, col: &str) -> Result<f64, SimError> {
        self.raw(col)?.trim().parse().map_err(|_| {
            SimError::Validation(format!(
                "row {}: column `{col}` is not a number: `{}`",
                self.row,
                self.raw(col).unwrap_or("")
            ))
        })
    }

    fn u64(&self, col: &str) -> Result<u64, SimError> {
        self.raw(col)?.trim().parse().map_err(|_| {
            SimError::Validation(format!("row {}: column `{col}` is not an integer", self.row))
        })
    }

    fn bool(&self, col: &str) -> Result<bool, SimError> {
        match self.raw(col)?.trim() {
            "true" | "1" => Ok(true),
            "false" | "0" => Ok(false),
            other => Err(SimError::Validation(format!(
                "row {}: column `{col}` is not a boolean: `{other}`",
                self.row
            ))),
        }
    }
}

/// Load and validate a population file. Row numbers in error messages are
/// 1-based data rows (the header is row 0).
pub fn load_population(path: &Path, schema: &ColumnMap) -> Result<PopulationSnapshot, SimError> {
    let mut reader = csv::Reader::from_path(path)?;
    let header_record = reader.headers()?.clone();
    let headers: HashMap<String, usize> = header_record
        .iter()
        .enumerate()
        .map(|(i, h)| (h.trim().to_string(), i))
        .collect();
    for canonical in POPULATION_COLUMNS {
        let name = schema.resolve(canonical);
        if !headers.contains_key(name) {
            return Err(SimError::Schema(format!(
                "missing column `{name}` in population file header"
            )));
        }
    }

    let mut persons = Vec::new();
    let mut hh_rows: HashMap<u64, (Household, usize)> = HashMap::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let rownum = i + 1;
        let row = Row { headers: &headers, record: &record, row: rownum };
        let col = |c: &'static str| schema.resolve(c).to_string();

        let income_sources = SOURCE_KINDS
            .iter()
            .map(|&kind| {
                let stem = format!("src_{}", kind.code());
                let present = row.bool(schema.resolve(&format!("{stem}_present")))?;
                let level = row.f64(schema.resolve(&format!("{stem}_level")))?;
                Ok(IncomeSource { kind, present, level })
            })
            .collect::<Result<Vec<_>, SimError>>()?;

        let person = Person {
            id: row.u64(&col("person_id"))?,
            household_id: row.u64(&col("household_id"))?,
            age: row.u64(&col("age"))? as u32,
            gender: Gender::parse(row.raw(&col("gender"))?.trim())?,
            education: Education::parse(row.raw(&col("education"))?.trim())?,
            industry: row.u64(&col("industry"))? as u8,
            occupation: row.u64(&col("occupation"))? as u8,
            sector: Sector::parse(row.raw(&col("sector"))?.trim())?,
            contract: Contract::parse(row.raw(&col("contract"))?.trim())?,
            labour_state: LabourState::parse(row.raw(&col("labour_state"))?.trim())?,
            gross_earnings: row.f64(&col("gross_earnings"))?,
            prev_gross_earnings: row.f64(&col("prev_gross_earnings"))?,
            prev_net_earnings: row.f64(&col("prev_net_earnings"))?,
            income_sources,
            commute_mode: CommuteMode::parse(row.raw(&col("commute_mode"))?.trim())?,
            receives_cws: row.bool(&col("receives_cws"))?,
            receives_pup: row.bool(&col("receives_pup"))?,
            employer_eligible: row.bool(&col("employer_eligible"))?,
        };
        person.validate(rownum)?;

        let hh_id = person.household_id;
        let household = Household {
            id: hh_id,
            member_ids: vec![],
            n_adults: row.u64(&col("hh_n_adults"))? as u32,
            n_children: row.u64(&col("hh_n_children"))? as u32,
            housing_cost: row.f64(&col("hh_housing_cost"))?,
            capital_value: row.f64(&col("hh_capital_value"))?,
            childcare_user: row.bool(&col("hh_childcare_user"))?,
            housing_deferred: row.bool(&col("hh_housing_deferred"))?,
            weight: row.f64(&col("hh_weight"))?,
        };
        match hh_rows.get_mut(&hh_id) {
            None => {
                let mut h = household;
                h.member_ids.push(person.id);
                hh_rows.insert(hh_id, (h, rownum));
            }
            Some((existing, first_row)) => {
                let mut probe = household.clone();
                probe.member_ids = existing.member_ids.clone();
                if probe != *existing {
                    return Err(SimError::Validation(format!(
                        "row {rownum}: household {hh_id} attributes differ from row {first_row}"
                    )));
                }
                existing.member_ids.push(person.id);
            }
        }
        persons.push(person);
    }

    if persons.is_empty() {
        eprintln!(
            "warning: population file {} contains a header but no rows",
            path.display()
        );
    }

    let mut households: Vec<Household> = hh_rows.into_values().map(|(h, _)| h).collect();
    households.sort_by_key(|h| h.id);
    PopulationSnapshot::new(persons, households)
}

fn fmt_f64(v: f64) -> String {
    // shortest representation that round-trips keeps files diffable
    format!("{v}")
}

/// Write a snapshot in the canonical schema. `load_population` of the output
/// reproduces an equal snapshot.
pub fn write_population(snapshot: &PopulationSnapshot, path: &Path) -> Result<(), SimError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(POPULATION_COLUMNS)?;
    for p in snapshot.persons() {
        let h = snapshot.household_of(p);
        let mut rec: Vec<String> = vec![
            p.id.to_string(),
            p.household_id.to_string(),
            p.age.to_string(),
            p.gender.code().to_string(),
            p.education.code().to_string(),
            p.industry.to_string(),
            p.occupation.to_string(),
            p.sector.code().to_string(),
            p.contract.code().to_string(),
            p.labour_state.code().to_string(),
            fmt_f64(p.gross_earnings),
            fmt_f64(p.prev_gross_earnings),
            fmt_f64(p.prev_net_earnings),
            p.commute_mode.code().to_string(),
            p.receives_cws.to_string(),
            p.receives_pup.to_string(),
            p.employer_eligible.to_string(),
        ];
        for kind in SOURCE_KINDS {
            let s = p.source(kind).expect("canonical source vector");
            rec.push(s.present.to_string());
            rec.push(fmt_f64(s.level));
        }
        rec.extend([
            h.n_adults.to_string(),
            h.n_children.to_string(),
            fmt_f64(h.housing_cost),
            fmt_f64(h.capital_value),
            h.childcare_user.to_string(),
            h.housing_deferred.to_string(),
            fmt_f64(h.weight),
        ]);
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Write control totals in the sectioned CSV format `load_control_totals`
/// reads.
pub fn write_control_totals(totals: &ControlTotals, path: &Path) -> Result<(), SimError> {
    let mut out = String::new();
    out.push_str("[meta]\n");
    out.push_str(&format!("period,{}\n", totals.period));
    out.push_str(&format!("in_work_total,{}\n", totals.in_work_total));
    out.push_str(&format!("unemployment_total,{}\n", totals.unemployment_total));
    out.push_str("[in_work_shares]\nage_band,gender,share\n");
    for c in &totals.in_work_shares {
        let gender = Gender::ALL[c.key[1] as usize].code();
        out.push_str(&format!("{},{gender},{}\n", c.key[0], c.share));
    }
    out.push_str("[employment_shares]\nindustry,occupation,gender,share\n");
    for c in &totals.employment_shares {
        let gender = Gender::ALL[c.key[2] as usize].code();
        out.push_str(&format!("{},{},{gender},{}\n", c.key[0], c.key[1], c.share));
    }
    out.push_str("[unemployment_shares]\ngender,share\n");
    for c in &totals.unemployment_shares {
        let gender = Gender::ALL[c.key[0] as usize].code();
        out.push_str(&format!("{gender},{}\n", c.share));
    }
    out.push_str("[cws_takeup]\nindustry,count\n");
    for t in &totals.cws_takeup {
        out.push_str(&format!("{},{}\n", t.industry, t.count));
    }
    out.push_str("[pup_takeup]\nindustry,count\n");
    for t in &totals.pup_takeup {
        out.push_str(&format!("{},{}\n", t.industry, t.count));
    }
    out.push_str("[growth_factors]\nindustry,occupation,factor\n");
    for g in &totals.growth_factors {
        out.push_str(&format!("{},{},{}\n", g.industry, g.occupation, g.factor));
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Parse the sectioned control-totals CSV.
///
/// Sections: `[meta]` (period, in_work_total, unemployment_total),
/// `[in_work_shares]` (age_band,gender,share), `[employment_shares]`
/// (industry,occupation,gender,share), `[unemployment_shares]`
/// (gender,share), `[cws_takeup]` / `[pup_takeup]` (industry,count) and
/// `[growth_factors]` (industry,occupation,factor).
pub fn load_control_totals(path: &Path) -> Result<ControlTotals, SimError> {
    let text = std::fs::read_to_string(path)?;
    let mut section = String::new();
    let mut period = String::new();
    let mut in_work_total = 0u64;
    let mut unemployment_total = 0u64;
    let mut in_work_shares = Vec::new();
    let mut employment_shares = Vec::new();
    let mut unemployment_shares = Vec::new();
    let mut cws_takeup = Vec::new();
    let mut pup_takeup = Vec::new();
    let mut growth_factors = Vec::new();

    let parse_gender = |s: &str| -> Result<u32, SimError> {
        Ok(Gender::parse(s.trim())?.index() as u32)
    };

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
        let bad = |what: &str| {
            SimError::Schema(format!("line {}: bad {what} record `{line}`", lineno + 1))
        };
        let parse_f = |s: &str, what: &str| -> Result<f64, SimError> {
            s.parse().map_err(|_| bad(what))
        };
        let parse_u = |s: &str, what: &str| -> Result<u64, SimError> {
            s.parse().map_err(|_| bad(what))
        };
        match section.as_str() {
            "meta" => match fields.first().copied() {
                Some("period") => period = fields.get(1).unwrap_or(&"").to_string(),
                Some("in_work_total") => {
                    in_work_total = parse_u(fields.get(1).ok_or_else(|| bad("meta"))?, "meta")?
                }
                Some("unemployment_total") => {
                    unemployment_total =
                        parse_u(fields.get(1).ok_or_else(|| bad("meta"))?, "meta")?
                }
                _ => return Err(bad("meta")),
            },
            "in_work_shares" => {
                if fields[0] == "age_band" {
                    continue; // column header
                }
                if fields.len() != 3 {
                    return Err(bad("in_work_shares"));
                }
                in_work_shares.push(CellShare {
                    key: vec![
                        parse_u(fields[0], "in_work_shares")? as u32,
                        parse_gender(fields[1])?,
                    ],
                    share: parse_f(fields[2], "in_work_shares")?,
                });
            }
            "employment_shares" => {
                if fields[0] == "industry" {
                    continue;
                }
                if fields.len() != 4 {
                    return Err(bad("employment_shares"));
                }
                employment_shares.push(CellShare {
                    key: vec![
                        parse_u(fields[0], "employment_shares")? as u32,
                        parse_u(fields[1], "employment_shares")? as u32,
                        parse_gender(fields[2])?,
                    ],
                    share: parse_f(fields[3], "employment_shares")?,
                });
            }
            "unemployment_shares" => {
                if fields[0] == "gender" {
                    continue;
                }
                if fields.len() != 2 {
                    return Err(bad("unemployment_shares"));
                }
                unemployment_shares.push(CellShare {
                    key: vec![parse_gender(fields[0])?],
                    share: parse_f(fields[1], "unemployment_shares")?,
                });
            }
            "cws_takeup" | "pup_takeup" => {
                if fields[0] == "industry" {
                    continue;
                }
                if fields.len() != 2 {
                    return Err(bad(&section));
                }
                let t = TakeupCount {
                    industry: parse_u(fields[0], &section)? as u8,
                    count: parse_u(fields[1], &section)?,
                };
                if section == "cws_takeup" {
                    cws_takeup.push(t);
                } else {
                    pup_takeup.push(t);
                }
            }
            "growth_factors" => {
                if fields[0] == "industry" {
                    continue;
                }
                if fields.len() != 3 {
                    return Err(bad("growth_factors"));
                }
                growth_factors.push(GrowthFactor {
                    industry: parse_u(fields[0], "growth_factors")? as u8,
                    occupation: parse_u(fields[1], "growth_factors")? as u8,
                    factor: parse_f(fields[2], "growth_factors")?,
                });
            }
            "" => {
                return Err(SimError::Schema(format!(
                    "line {}: record before any [section] header",
                    lineno + 1
                )))
            }
            other => {
                return Err(SimError::Schema(format!("unknown section `[{other}]`")));
            }
        }
    }

    if in_work_shares.is_empty() {
        return Err(SimError::Schema(
            "control totals missing [in_work_shares] table".into(),
        ));
    }

    ControlTotals {
        period,
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
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::population::{generate_synthetic, SyntheticSpec};

    #[test]
    fn round_trip_preserves_snapshot() {
        let snap = generate_synthetic(&SyntheticSpec::default(), 300, 5).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("pop.csv");
        write_population(&snap, &path).unwrap();
        let loaded = load_population(&path, &ColumnMap::default()).unwrap();
        assert_eq!(snap, loaded);
    }

    #[test]
    fn missing_column_is_schema_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("pop.csv");
        std::fs::write(&path, "person_id,age\n1,30\n").unwrap();
        let err = load_population(&path, &ColumnMap::default()).unwrap_err();
        assert!(matches!(err, SimError::Schema(_)), "{err}");
    }

    #[test]
    fn bad_row_cites_its_row_number() {
        let snap = generate_synthetic(&SyntheticSpec::default(), 3, 5).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("pop.csv");
        write_population(&snap, &path).unwrap();
        // corrupt row 2: prev_net above prev_gross
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines: Vec<String> = text.lines().map(String::from).collect();
        let mut fields: Vec<String> = lines[2].split(',').map(String::from).collect();
        fields[11] = "100.0".into(); // prev_gross_earnings
        fields[12] = "900.0".into(); // prev_net_earnings
        lines[2] = fields.join(",");
        std::fs::write(&path, lines.join("\n")).unwrap();
        let err = load_population(&path, &ColumnMap::default()).unwrap_err();
        assert!(err.to_string().contains("row 2"), "{err}");
    }

    #[test]
    fn empty_file_with_header_is_empty_snapshot() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("pop.csv");
        std::fs::write(&path, format!("{}\n", POPULATION_COLUMNS.join(","))).unwrap();
        let snap = load_population(&path, &ColumnMap::default()).unwrap();
        assert!(snap.is_empty());
    }

    fn totals_text(unemp_f: f64, unemp_m: f64) -> String {
        format!(
            "[meta]\nperiod,May 2020\nin_work_total,100\nunemployment_total,40\n\
             [in_work_shares]\nage_band,gender,share\n0,female,0.25\n0,male,0.25\n1,female,0.25\n1,male,0.25\n\
             [employment_shares]\nindustry,occupation,gender,share\n0,0,female,0.5\n0,0,male,0.5\n\
             [unemployment_shares]\ngender,share\nfemale,{unemp_f}\nmale,{unemp_m}\n\
             [cws_takeup]\nindustry,count\n0,10\n\
             [pup_takeup]\nindustry,count\n0,5\n\
             [growth_factors]\nindustry,occupation,factor\n0,0,1.02\n"
        )
    }

    #[test]
    fn control_totals_parse_and_renormalize() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("totals.csv");
        std::fs::write(&path, totals_text(0.5, 0.5000003)).unwrap();
        let t = load_control_totals(&path).unwrap();
        assert_eq!(t.period, "May 2020");
        let sum: f64 = t.unemployment_shares.iter().map(|c| c.share).sum();
        assert!((sum - 1.0).abs() < 1e-12);
        assert_eq!(t.growth_factor(0, 0), Some(1.02));
        assert_eq!(t.growth_factor(3, 1), None);
    }

    #[test]
    fn control_totals_far_off_sum_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("totals.csv");
        std::fs::write(&path, totals_text(0.5, 0.3)).unwrap();
        assert!(load_control_totals(&path).is_err());
    }
}
