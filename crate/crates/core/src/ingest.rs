//! Dataset loading and screening.
//!
//! Datasets are UTF-8 CSV with a header (required `formula`, optional
//! `formation_energy`, other numeric columns become properties) or JSON lines
//! with the same field names. Rows that fail to parse are quarantined with
//! their line number and reason.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::composition::{format_formula, parse_formula, Composition, Element, MAX_COUNT};

pub const FORMULA_FIELD: &str = "formula";
pub const ENERGY_FIELD: &str = "formation_energy";

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("format error: {0}")]
    Format(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetRecord {
    /// Formula text as found in the file.
    pub formula: String,
    pub composition: Composition,
    pub formation_energy: Option<f64>,
    pub properties: BTreeMap<String, f64>,
    /// 1-based line in the source file (header is line 1 for CSV).
    pub line: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuarantinedRow {
    pub line: usize,
    pub formula: Option<String>,
    pub reason: String,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Dataset {
    pub records: Vec<DatasetRecord>,
    pub quarantine: Vec<QuarantinedRow>,
    pub has_energy_column: bool,
    pub property_names: Vec<String>,
}

impl Dataset {
    pub fn compositions(&self) -> Vec<Composition> {
        self.records.iter().map(|r| r.composition.clone()).collect()
    }
}

fn is_jsonl(path: &Path) -> bool {
    matches!(
        path.extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase)
            .as_deref(),
        Some("jsonl" | "ndjson")
    )
}

/// Loads a CSV or (by `.jsonl` / `.ndjson` extension) JSON-lines dataset.
pub fn load_dataset(path: impl AsRef<Path>) -> Result<Dataset, IngestError> {
    let path = path.as_ref();
    let file = File::open(path)?;
    if is_jsonl(path) {
        parse_jsonl(BufReader::new(file))
    } else {
        parse_csv(file)
    }
}

fn parse_number(text: &str) -> Option<f64> {
    text.trim().parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Parses CSV. Extra columns are kept as properties only if every non-empty
/// cell in them is numeric (among rows with a readable formula); text columns
/// are ignored.
pub fn parse_csv<R: Read>(reader: R) -> Result<Dataset, IngestError> {
    let mut rdr = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let formula_col = headers
        .iter()
        .position(|h| h == FORMULA_FIELD)
        .ok_or_else(|| IngestError::Format(format!("missing `{FORMULA_FIELD}` column")))?;
    let energy_col = headers.iter().position(|h| h == ENERGY_FIELD);
    let mut rows = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let line = row
            .as_ref()
            .ok()
            .and_then(|r| r.position())
            .map_or(i + 2, |p| p.line() as usize);
        rows.push((line, row));
    }
    let extra: Vec<usize> = (0..headers.len())
        .filter(|&c| c != formula_col && Some(c) != energy_col)
        .collect();
    // Rows that will be quarantined for a bad formula do not decide column types.
    let typed: Vec<&csv::StringRecord> = rows
        .iter()
        .filter_map(|(_, r)| r.as_ref().ok())
        .filter(|r| parse_formula(r.get(formula_col).unwrap_or("")).is_ok())
        .collect();
    let numeric: Vec<usize> = extra
        .into_iter()
        .filter(|&c| {
            typed
                .iter()
                .all(|r| r.get(c).is_none_or(|v| v.is_empty() || parse_number(v).is_some()))
        })
        .collect();

    let mut ds = Dataset {
        has_energy_column: energy_col.is_some(),
        property_names: numeric.iter().map(|&c| headers[c].to_string()).collect(),
        ..Dataset::default()
    };
    for (line, row) in rows {
        let row = match row {
            Ok(r) => r,
            Err(e) => {
                ds.quarantine.push(QuarantinedRow {
                    line,
                    formula: None,
                    reason: format!("unreadable row: {e}"),
                });
                continue;
            }
        };
        let formula = row.get(formula_col).unwrap_or("").to_string();
        let energy = match energy_col.and_then(|c| row.get(c)).filter(|v| !v.is_empty()) {
            None => None,
            Some(v) => match parse_number(v) {
                Some(x) => Some(x),
                None => {
                    ds.quarantine.push(QuarantinedRow {
                        line,
                        formula: Some(formula),
                        reason: format!("formation energy `{v}` is not a number"),
                    });
                    continue;
                }
            },
        };
        let properties = numeric
            .iter()
            .filter_map(|&c| row.get(c).and_then(parse_number).map(|v| (headers[c].to_string(), v)))
            .collect();
        push_record(&mut ds, line, formula, energy, properties);
    }
    Ok(ds)
}

fn push_record(ds: &mut Dataset, line: usize, formula: String, energy: Option<f64>, properties: BTreeMap<String, f64>) {
    match parse_formula(&formula) {
        Ok(composition) => ds.records.push(DatasetRecord {
            formula,
            composition,
            formation_energy: energy,
            properties,
            line,
        }),
        Err(e) => ds.quarantine.push(QuarantinedRow {
            line,
            formula: Some(formula),
            reason: e.to_string(),
        }),
    }
}

/// Parses JSON lines. Blank lines are skipped; numeric fields other than
/// `formula` and `formation_energy` become properties.
pub fn parse_jsonl<R: BufRead>(reader: R) -> Result<Dataset, IngestError> {
    let mut ds = Dataset::default();
    let mut names = BTreeSet::new();
    for (i, text) in reader.lines().enumerate() {
        let text = text?;
        let line = i + 1;
        if text.trim().is_empty() {
            continue;
        }
        let quarantine = |reason: String, formula: Option<String>| QuarantinedRow { line, formula, reason };
        let obj = match serde_json::from_str::<serde_json::Value>(&text) {
            Ok(serde_json::Value::Object(o)) => o,
            Ok(_) => {
                ds.quarantine.push(quarantine("line is not a JSON object".into(), None));
                continue;
            }
            Err(e) => {
                ds.quarantine.push(quarantine(format!("invalid JSON: {e}"), None));
                continue;
            }
        };
        let Some(formula) = obj.get(FORMULA_FIELD).and_then(|v| v.as_str()).map(str::to_string) else {
            ds.quarantine
                .push(quarantine(format!("missing string `{FORMULA_FIELD}`"), None));
            continue;
        };
        let energy = match obj.get(ENERGY_FIELD) {
            None => None,
            Some(v) => {
                ds.has_energy_column = true;
                match v {
                    serde_json::Value::Null => None,
                    v => match v.as_f64().filter(|x| x.is_finite()) {
                        Some(x) => Some(x),
                        None => {
                            ds.quarantine.push(quarantine(
                                format!("formation energy {v} is not a number"),
                                Some(formula),
                            ));
                            continue;
                        }
                    },
                }
            }
        };
        let properties: BTreeMap<String, f64> = obj
            .iter()
            .filter(|(k, _)| k.as_str() != FORMULA_FIELD && k.as_str() != ENERGY_FIELD)
            .filter_map(|(k, v)| v.as_f64().filter(|x| x.is_finite()).map(|x| (k.clone(), x)))
            .collect();
        names.extend(properties.keys().cloned());
        push_record(&mut ds, line, formula, energy, properties);
    }
    ds.property_names = names.into_iter().collect();
    Ok(ds)
}

/// Reads compositions from a dataset file (`.csv`, `.jsonl`) or from a plain
/// list with one formula per line. Unparseable lines are reported as errors.
pub fn load_compositions(path: impl AsRef<Path>) -> Result<Vec<Composition>, IngestError> {
    let path = path.as_ref();
    let ext = path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase);
    if ext.as_deref() == Some("csv") || is_jsonl(path) {
        let ds = load_dataset(path)?;
        if let Some(q) = ds.quarantine.first() {
            return Err(IngestError::Format(format!(
                "{}: line {}: {}",
                path.display(),
                q.line,
                q.reason
            )));
        }
        return Ok(ds.compositions());
    }
    read_formula_list(BufReader::new(File::open(path)?))
}

/// One formula per line; blank lines and `#` comments are skipped.
pub fn read_formula_list<R: BufRead>(reader: R) -> Result<Vec<Composition>, IngestError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        out.push(parse_formula(t).map_err(|e| IngestError::Format(format!("line {}: {e}", i + 1)))?);
    }
    Ok(out)
}

pub fn write_formula_list<W: Write>(items: &[Composition], mut out: W) -> std::io::Result<()> {
    for c in items {
        writeln!(out, "{}", format_formula(c))?;
    }
    out.flush()
}

/// Writes records as CSV with canonical formulas.
pub fn write_dataset_csv<W: Write>(records: &[DatasetRecord], out: W) -> Result<(), IngestError> {
    let names: BTreeSet<&String> = records.iter().flat_map(|r| r.properties.keys()).collect();
    let has_energy = records.iter().any(|r| r.formation_energy.is_some());
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec![FORMULA_FIELD.to_string()];
    if has_energy {
        header.push(ENERGY_FIELD.into());
    }
    header.extend(names.iter().map(|n| n.to_string()));
    w.write_record(&header)?;
    for r in records {
        let mut row = vec![format_formula(&r.composition)];
        if has_energy {
            row.push(r.formation_energy.map(|v| v.to_string()).unwrap_or_default());
        }
        row.extend(
            names
                .iter()
                .map(|n| r.properties.get(*n).map(|v| v.to_string()).unwrap_or_default()),
        );
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// How the formation-energy outlier rule applies.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode", content = "multiplier")]
pub enum SigmaRule {
    Off,
    /// Applied when at least one record has a formation energy.
    IfAvailable(f64),
    /// Applied always; a dataset without energies is a configuration error.
    Required(f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScreeningConfig {
    pub dedup: bool,
    pub min_arity: usize,
    pub max_per_element_count: u32,
    pub excluded_elements: BTreeSet<Element>,
    pub sigma: SigmaRule,
}

impl Default for ScreeningConfig {
    fn default() -> Self {
        ScreeningConfig {
            dedup: true,
            min_arity: 2,
            max_per_element_count: MAX_COUNT,
            excluded_elements: ["Kr", "He"].iter().map(|s| s.parse().expect("symbol")).collect(),
            sigma: SigmaRule::IfAvailable(5.0),
        }
    }
}

impl ScreeningConfig {
    /// Named presets: `default`, `strict` (sigma rule required), `no-sigma`.
    pub fn profile(name: &str) -> Option<Self> {
        let base = ScreeningConfig::default();
        match name {
            "default" => Some(base),
            "strict" => Some(ScreeningConfig {
                sigma: SigmaRule::Required(5.0),
                ..base
            }),
            "no-sigma" => Some(ScreeningConfig {
                sigma: SigmaRule::Off,
                ..base
            }),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<(), IngestError> {
        if self.max_per_element_count == 0 || self.max_per_element_count > MAX_COUNT {
            return Err(IngestError::Config(format!(
                "max_per_element_count must be in 1..={MAX_COUNT}"
            )));
        }
        match self.sigma {
            SigmaRule::IfAvailable(k) | SigmaRule::Required(k) if !(k > 0.0 && k.is_finite()) => {
                Err(IngestError::Config("sigma multiplier must be positive".into()))
            }
            _ => Ok(()),
        }
    }
}

/// Records removed by each rule; each record counts toward the first rule
/// that removes it.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RemovalCounts {
    pub duplicate: usize,
    pub low_arity: usize,
    pub count_cap: usize,
    pub excluded_element: usize,
    pub energy_outlier: usize,
}

impl RemovalCounts {
    pub fn total(&self) -> usize {
        self.duplicate + self.low_arity + self.count_cap + self.excluded_element + self.energy_outlier
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EnergyWindow {
    pub mean: f64,
    /// Population standard deviation.
    pub std_dev: f64,
    pub low: f64,
    pub high: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ScreeningOutcome {
    pub survivors: Vec<DatasetRecord>,
    pub removed: RemovalCounts,
    pub energy_window: Option<EnergyWindow>,
}

/// Applies, in order: dedup by canonical formula (lowest formation energy,
/// records with an energy beating those without, ties to the earliest),
/// arity floor, per-element count cap, element exclusions, and the
/// `mean ± k·σ` energy window computed on what is left. Records without an
/// energy pass the window.
pub fn screen_dataset(records: &[DatasetRecord], cfg: &ScreeningConfig) -> Result<ScreeningOutcome, IngestError> {
    cfg.validate()?;
    let any_energy = records.iter().any(|r| r.formation_energy.is_some());
    if matches!(cfg.sigma, SigmaRule::Required(_)) && !any_energy {
        return Err(IngestError::Config(
            "energy filter requested but no formation energies are present".into(),
        ));
    }
    let mut removed = RemovalCounts::default();

    let mut kept: Vec<usize> = if cfg.dedup {
        let mut best: HashMap<&Composition, usize> = HashMap::new();
        for (i, r) in records.iter().enumerate() {
            best.entry(&r.composition)
                .and_modify(|j| {
                    let better = match (r.formation_energy, records[*j].formation_energy) {
                        (Some(a), Some(b)) => a < b,
                        (Some(_), None) => true,
                        _ => false,
                    };
                    if better {
                        *j = i;
                    }
                })
                .or_insert(i);
        }
        let mut idx: Vec<usize> = best.into_values().collect();
        idx.sort_unstable();
        removed.duplicate = records.len() - idx.len();
        idx
    } else {
        (0..records.len()).collect()
    };

    let drop_if = |kept: &mut Vec<usize>, counter: &mut usize, reject: &dyn Fn(&DatasetRecord) -> bool| {
        let before = kept.len();
        kept.retain(|&i| !reject(&records[i]));
        *counter += before - kept.len();
    };
    drop_if(&mut kept, &mut removed.low_arity, &|r| {
        r.composition.arity() < cfg.min_arity
    });
    drop_if(&mut kept, &mut removed.count_cap, &|r| {
        r.composition.max_count() > cfg.max_per_element_count
    });
    drop_if(&mut kept, &mut removed.excluded_element, &|r| {
        r.composition.elements().any(|e| cfg.excluded_elements.contains(&e))
    });

    let mut energy_window = None;
    let k = match cfg.sigma {
        SigmaRule::Off => None,
        SigmaRule::IfAvailable(k) | SigmaRule::Required(k) => Some(k),
    };
    if let Some(k) = k {
        let energies: Vec<f64> = kept.iter().filter_map(|&i| records[i].formation_energy).collect();
        if !energies.is_empty() {
            let n = energies.len() as f64;
            let mean = energies.iter().sum::<f64>() / n;
            let std_dev = (energies.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / n).sqrt();
            let w = EnergyWindow {
                mean,
                std_dev,
                low: mean - k * std_dev,
                high: mean + k * std_dev,
            };
            drop_if(&mut kept, &mut removed.energy_outlier, &|r| {
                r.formation_energy.is_some_and(|e| e < w.low || e > w.high)
            });
            energy_window = Some(w);
        }
    }

    Ok(ScreeningOutcome {
        survivors: kept.into_iter().map(|i| records[i].clone()).collect(),
        removed,
        energy_window,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    Gt,
    Ge,
    Lt,
    Le,
    Eq,
}

impl Comparison {
    pub fn holds(self, value: f64, threshold: f64) -> bool {
        match self {
            Comparison::Gt => value > threshold,
            Comparison::Ge => value >= threshold,
            Comparison::Lt => value < threshold,
            Comparison::Le => value <= threshold,
            Comparison::Eq => value == threshold,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct PropertyFilter {
    pub kept: Vec<DatasetRecord>,
    /// Records without the property.
    pub missing: usize,
    pub rejected: usize,
}

/// Keeps records whose property `name` satisfies `cmp` against `threshold`.
/// `formation_energy` refers to the energy field.
pub fn filter_by_property(records: &[DatasetRecord], name: &str, cmp: Comparison, threshold: f64) -> PropertyFilter {
    let mut out = PropertyFilter::default();
    for r in records {
        let value = if name == ENERGY_FIELD {
            r.formation_energy
        } else {
            r.properties.get(name).copied()
        };
        match value {
            None => out.missing += 1,
            Some(v) if cmp.holds(v, threshold) => out.kept.push(r.clone()),
            Some(_) => out.rejected += 1,
        }
    }
    out
}

/// Seeded split into `(train, holdout)` with `round(fraction · n)` hold-out
/// items. Both parts keep input order.
pub fn split_holdout<T: Clone>(items: &[T], fraction: f64, seed: u64) -> Result<(Vec<T>, Vec<T>), IngestError> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(IngestError::Config(format!(
            "hold-out fraction {fraction} outside (0, 1)"
        )));
    }
    let n = items.len();
    let k = (fraction * n as f64).round() as usize;
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut hold = vec![false; n];
    for &i in &order[..k] {
        hold[i] = true;
    }
    let (mut train, mut holdout) = (Vec::with_capacity(n - k), Vec::with_capacity(k));
    for (i, item) in items.iter().enumerate() {
        if hold[i] {
            holdout.push(item.clone());
        } else {
            train.push(item.clone());
        }
    }
    Ok((train, holdout))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(f: &str, e: Option<f64>) -> DatasetRecord {
        DatasetRecord {
            formula: f.into(),
            composition: parse_formula(f).unwrap(),
            formation_energy: e,
            properties: BTreeMap::new(),
            line: 0,
        }
    }

    #[test]
    fn csv_loading() {
        let ds = parse_csv("formula,formation_energy\nNaCl,-3.1\nFe2O3,-2.5\n".as_bytes()).unwrap();
        assert_eq!(ds.records.len(), 2);
        assert_eq!(ds.records[1].formation_energy, Some(-2.5));
        assert_eq!(ds.records[1].line, 3);
        let ds = parse_csv("formula,formation_energy\nLiZn0.01Fe0.99PO4,-1\nNaCl,x\n".as_bytes()).unwrap();
        assert!(ds.records.is_empty());
        assert_eq!(ds.quarantine.len(), 2);
        assert_eq!(ds.quarantine[0].line, 2);
        assert!(
            ds.quarantine[0].reason.contains("fraction"),
            "{}",
            ds.quarantine[0].reason
        );
        let ds = parse_csv("formula,formation_energy\n".as_bytes()).unwrap();
        assert!(ds.records.is_empty() && ds.quarantine.is_empty());
        assert!(matches!(
            parse_csv("name,e\nNaCl,1\n".as_bytes()),
            Err(IngestError::Format(_))
        ));
        let ds = parse_csv("formula,band_gap,source\nNaCl,5.0,mp\nKCl,,icsd\n".as_bytes()).unwrap();
        assert_eq!(ds.property_names, vec!["band_gap"]);
        assert!(!ds.has_energy_column);
        assert_eq!(ds.records[0].properties["band_gap"], 5.0);
        assert!(ds.records[1].properties.is_empty());
    }

    #[test]
    fn quarantined_rows_do_not_decide_column_types() {
        let ds = parse_csv("formula,band_gap,note\nNaCl,5,rock salt\nbad!,n/a,x\n".as_bytes()).unwrap();
        assert_eq!(ds.property_names, vec!["band_gap".to_string()]);
        assert_eq!(ds.records[0].properties["band_gap"], 5.0);
        assert_eq!(ds.quarantine.len(), 1);
        assert_eq!(ds.quarantine[0].line, 3);
    }

    #[test]
    fn jsonl_loading() {
        let text = "{\"formula\":\"NaCl\",\"formation_energy\":-3.1,\"band_gap\":5}\n\n{\"formula\":\"Na0.5Cl\"}\nnot json\n{\"formula\":\"KCl\",\"formation_energy\":null}\n";
        let ds = parse_jsonl(text.as_bytes()).unwrap();
        assert_eq!(ds.records.len(), 2);
        assert!(ds.has_energy_column);
        assert_eq!(ds.quarantine.iter().map(|q| q.line).collect::<Vec<_>>(), vec![3, 4]);
        assert_eq!(ds.records[1].formation_energy, None);
        assert_eq!(ds.property_names, vec!["band_gap"]);
    }

    #[test]
    fn screening_examples() {
        let cfg = ScreeningConfig::default();
        let out = screen_dataset(&[rec("NaCl", Some(-3.1)), rec("NaCl", Some(-2.0))], &cfg).unwrap();
        assert_eq!(out.survivors.len(), 1);
        assert_eq!(out.survivors[0].formation_energy, Some(-3.1));
        let out = screen_dataset(&[rec("O2", Some(-1.0))], &cfg).unwrap();
        assert!(out.survivors.is_empty());
        assert_eq!(out.removed.low_arity, 1);
        let out = screen_dataset(&[rec("KrF2", Some(-0.5))], &cfg).unwrap();
        assert_eq!(out.removed.excluded_element, 1);
        let out = screen_dataset(&[rec("Fe9O", None), rec("FeO", None)], &cfg).unwrap();
        assert_eq!(out.removed.count_cap, 1);
        assert!(out.energy_window.is_none());
        let strict = ScreeningConfig::profile("strict").unwrap();
        assert!(matches!(
            screen_dataset(&[rec("FeO", None)], &strict),
            Err(IngestError::Config(_))
        ));
    }

    #[test]
    fn sigma_window_uses_population_std() {
        let mut recs: Vec<DatasetRecord> = (1..=8)
            .flat_map(|n| (1..=8).map(move |m| rec(&format!("Na{n}Cl{m}"), Some(-1.0 + 0.01 * (n * m) as f64))))
            .collect();
        recs.push(rec("K2O", Some(40.0)));
        recs.push(rec("KCl", None));
        let out = screen_dataset(&recs, &ScreeningConfig::default()).unwrap();
        assert_eq!(out.removed.energy_outlier, 1);
        assert!(out.survivors.iter().any(|r| r.formula == "KCl"));
        let w = out.energy_window.unwrap();
        let es: Vec<f64> = recs.iter().filter_map(|r| r.formation_energy).collect();
        let m = es.iter().sum::<f64>() / es.len() as f64;
        let var = es.iter().map(|e| (e - m) * (e - m)).sum::<f64>() / es.len() as f64;
        assert!((w.std_dev - var.sqrt()).abs() < 1e-12);
        assert_eq!(recs.len() - out.survivors.len(), out.removed.total());
    }

    #[test]
    fn property_filter_examples() {
        let mut a = rec("NaCl", None);
        a.properties.insert("band_gap".into(), 0.0);
        let mut b = rec("KCl", None);
        b.properties.insert("band_gap".into(), 1.2);
        let c = rec("LiCl", None);
        let f = filter_by_property(&[a.clone(), b.clone(), c], "band_gap", Comparison::Gt, 0.0);
        assert_eq!(f.kept, vec![b.clone()]);
        assert_eq!((f.missing, f.rejected), (1, 1));
        let f = filter_by_property(&[a.clone(), b.clone()], "band_gap", Comparison::Ge, 0.0);
        assert_eq!(f.kept.len(), 2);
    }

    #[test]
    fn holdout_split() {
        let items: Vec<u32> = (0..10).collect();
        let (t, h) = split_holdout(&items, 0.1, 5).unwrap();
        assert_eq!((t.len(), h.len()), (9, 1));
        assert_eq!(split_holdout(&items, 0.1, 5).unwrap(), (t.clone(), h.clone()));
        let mut all: Vec<u32> = t.iter().chain(&h).copied().collect();
        all.sort();
        assert_eq!(all, items);
        assert!(split_holdout(&items, 1.0, 0).is_err());
        assert!(split_holdout(&items, 0.0, 0).is_err());
    }

    #[test]
    fn dataset_csv_round_trip() {
        let ds = parse_csv("formula,formation_energy,band_gap\nNaCl,-3.1,5\nKCl,,\n".as_bytes()).unwrap();
        let mut buf = Vec::new();
        write_dataset_csv(&ds.records, &mut buf).unwrap();
        let back = parse_csv(buf.as_slice()).unwrap();
        assert_eq!(back.compositions(), ds.compositions());
        assert_eq!(back.records[0].properties, ds.records[0].properties);
        assert_eq!(back.records[1].formation_energy, None);
    }
}
