//! Evaluation of generated samples: validity percentages, uniqueness curves,
//! novelty and recovery against training / hold-out sets, cross-dataset
//! confirmation and enrichment.
//!
//! Set membership is always by canonical formula string.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::composition::{format_formula, Composition};
use crate::element_data::ElementTable;
use crate::validity::classify_batch;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("training and hold-out sets share {} formulas, e.g. {}", .0.len(), .0[0])]
    Overlap(Vec<String>),
    #[error("enrichment is undefined for baseline fraction {0}")]
    UndefinedEnrichment(f64),
    #[error("uniqueness step must be positive")]
    ZeroStep,
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Charge-neutral and electronegativity-balanced shares of a sample list.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidityStats {
    pub total: usize,
    pub charge_neutral: usize,
    pub electronegativity_balanced: usize,
    pub cn_percent: f64,
    pub en_percent: f64,
    /// Set when there were no samples; both percentages are then 0.
    pub empty: bool,
}

impl ValidityStats {
    /// Fully-valid fraction in `[0, 1]`.
    pub fn valid_fraction(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.electronegativity_balanced as f64 / self.total as f64
        }
    }
}

/// Validity over all samples and over distinct formulas.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ValiditySummary {
    pub raw: ValidityStats,
    pub deduplicated: ValidityStats,
}

pub fn validity_report(samples: &[Composition], table: &ElementTable) -> ValidityStats {
    validity_report_with(samples, table, 0)
}

/// [`validity_report`] with an explicit worker count (0 = default).
pub fn validity_report_with(samples: &[Composition], table: &ElementTable, workers: usize) -> ValidityStats {
    let verdicts = classify_batch(samples, table, workers);
    let total = verdicts.len();
    let cn = verdicts.iter().filter(|v| v.charge_neutral).count();
    let en = verdicts.iter().filter(|v| v.electronegativity_balanced).count();
    let pct = |k: usize| {
        if total == 0 {
            0.0
        } else {
            100.0 * k as f64 / total as f64
        }
    };
    ValidityStats {
        total,
        charge_neutral: cn,
        electronegativity_balanced: en,
        cn_percent: pct(cn),
        en_percent: pct(en),
        empty: total == 0,
    }
}

pub fn validity_summary(samples: &[Composition], table: &ElementTable, workers: usize) -> ValiditySummary {
    let distinct: Vec<Composition> = samples.iter().cloned().collect::<BTreeSet<_>>().into_iter().collect();
    ValiditySummary {
        raw: validity_report_with(samples, table, workers),
        deduplicated: validity_report_with(&distinct, table, workers),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub n: usize,
    pub fraction: f64,
}

/// Distinct-formula fraction among the first `n` samples, at every multiple
/// of `step` and at the final sample.
pub fn uniqueness_curve(samples: &[Composition], step: usize) -> Result<Vec<CurvePoint>, EvalError> {
    if step == 0 {
        return Err(EvalError::ZeroStep);
    }
    let mut seen = HashSet::new();
    let mut points = Vec::new();
    for (i, c) in samples.iter().enumerate() {
        seen.insert(format_formula(c));
        let n = i + 1;
        if n % step == 0 || n == samples.len() {
            points.push(CurvePoint {
                n,
                fraction: seen.len() as f64 / n as f64,
            });
        }
    }
    Ok(points)
}

/// Writes curve points as `n,fraction` CSV.
pub fn write_curve_csv<W: Write>(points: &[CurvePoint], out: W) -> Result<(), EvalError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["n", "fraction"])?;
    for p in points {
        w.write_record([p.n.to_string(), p.fraction.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ArityNovelty {
    pub arity: usize,
    pub unique_generated: usize,
    pub recovered_train: usize,
    pub recovered_holdout: usize,
    pub new: usize,
    pub train_size: usize,
    pub holdout_size: usize,
    pub train_recovery_percent: f64,
    pub holdout_recovery_percent: f64,
    /// Share of this arity's distinct generated formulas that are new.
    pub new_percent: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct NoveltyReport {
    pub unique_generated: usize,
    pub recovered_train: usize,
    pub recovered_holdout: usize,
    pub new_count: usize,
    pub train_size: usize,
    pub holdout_size: usize,
    pub train_recovery_percent: f64,
    pub holdout_recovery_percent: f64,
    /// New formulas in canonical order.
    pub new_samples: Vec<String>,
    pub per_arity: Vec<ArityNovelty>,
}

fn percent(k: usize, n: usize) -> f64 {
    if n == 0 {
        0.0
    } else {
        100.0 * k as f64 / n as f64
    }
}

fn formula_set(items: &[Composition]) -> BTreeMap<String, usize> {
    items.iter().map(|c| (format_formula(c), c.arity())).collect()
}

pub fn novelty_report(
    samples: &[Composition],
    train: &[Composition],
    holdout: &[Composition],
) -> Result<NoveltyReport, EvalError> {
    let gen = formula_set(samples);
    let train = formula_set(train);
    let holdout = formula_set(holdout);
    let overlap: Vec<String> = train.keys().filter(|f| holdout.contains_key(*f)).cloned().collect();
    if !overlap.is_empty() {
        return Err(EvalError::Overlap(overlap));
    }
    let in_train: Vec<&String> = gen.keys().filter(|f| train.contains_key(*f)).collect();
    let in_holdout: Vec<&String> = gen.keys().filter(|f| holdout.contains_key(*f)).collect();
    let new_samples: Vec<String> = gen
        .keys()
        .filter(|f| !train.contains_key(*f) && !holdout.contains_key(*f))
        .cloned()
        .collect();

    let per_arity = (2..=4)
        .map(|a| {
            let of = |m: &BTreeMap<String, usize>| m.values().filter(|&&x| x == a).count();
            let hits = |keys: &[&String]| keys.iter().filter(|f| gen[f.as_str()] == a).count();
            let unique_generated = of(&gen);
            let recovered_train = hits(&in_train);
            let recovered_holdout = hits(&in_holdout);
            let new = new_samples.iter().filter(|f| gen[f.as_str()] == a).count();
            let (train_size, holdout_size) = (of(&train), of(&holdout));
            ArityNovelty {
                arity: a,
                unique_generated,
                recovered_train,
                recovered_holdout,
                new,
                train_size,
                holdout_size,
                train_recovery_percent: percent(recovered_train, train_size),
                holdout_recovery_percent: percent(recovered_holdout, holdout_size),
                new_percent: percent(new, unique_generated),
            }
        })
        .collect();

    Ok(NoveltyReport {
        unique_generated: gen.len(),
        recovered_train: in_train.len(),
        recovered_holdout: in_holdout.len(),
        new_count: new_samples.len(),
        train_size: train.len(),
        holdout_size: holdout.len(),
        train_recovery_percent: percent(in_train.len(), train.len()),
        holdout_recovery_percent: percent(in_holdout.len(), holdout.len()),
        new_samples,
        per_arity,
    })
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CrossConfirmation {
    pub count: usize,
    pub matched: Vec<String>,
}

/// Formulas present in both `new_samples` and `external`, in canonical order.
pub fn cross_confirm(new_samples: &[Composition], external: &[Composition]) -> CrossConfirmation {
    let ext: BTreeSet<String> = external.iter().map(format_formula).collect();
    let matched: Vec<String> = new_samples
        .iter()
        .map(format_formula)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .filter(|f| ext.contains(f))
        .collect();
    CrossConfirmation {
        count: matched.len(),
        matched,
    }
}

/// Ratio of the generator's valid fraction to a baseline valid fraction.
pub fn enrichment_factor(gan_valid_fraction: f64, baseline_valid_fraction: f64) -> Result<f64, EvalError> {
    if !(baseline_valid_fraction > 0.0) || !baseline_valid_fraction.is_finite() {
        return Err(EvalError::UndefinedEnrichment(baseline_valid_fraction));
    }
    Ok(gan_valid_fraction / baseline_valid_fraction)
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub generated: ValiditySummary,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub training: Option<ValiditySummary>,
    pub uniqueness: Vec<CurvePoint>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub novelty: Option<NoveltyReport>,
    pub cross_confirmation: BTreeMap<String, CrossConfirmation>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub enrichment_factor: Option<f64>,
}

impl EvalReport {
    pub fn to_json(&self) -> Result<String, EvalError> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Everything [`evaluate`] can use; only `generated` is required.
pub struct EvalInputs<'a> {
    pub generated: &'a [Composition],
    pub training: Option<&'a [Composition]>,
    pub holdout: Option<&'a [Composition]>,
    pub external: Vec<(String, &'a [Composition])>,
    /// Baseline fully-valid fraction for the enrichment factor.
    pub baseline_valid_fraction: Option<f64>,
    pub step: usize,
    pub workers: usize,
}

/// Builds a full report. Novelty needs the training set; a missing hold-out
/// set counts as empty. Cross-confirmation uses the new samples when novelty
/// is available and all distinct generated formulas otherwise.
pub fn evaluate(inputs: &EvalInputs<'_>, table: &ElementTable) -> Result<EvalReport, EvalError> {
    let generated = validity_summary(inputs.generated, table, inputs.workers);
    let training = inputs.training.map(|t| validity_summary(t, table, inputs.workers));
    let uniqueness = uniqueness_curve(inputs.generated, inputs.step)?;
    let novelty = match inputs.training {
        Some(t) => Some(novelty_report(inputs.generated, t, inputs.holdout.unwrap_or(&[]))?),
        None => None,
    };
    let candidates: Vec<Composition> = match &novelty {
        Some(n) => n.new_samples.iter().filter_map(|f| f.parse().ok()).collect(),
        None => inputs.generated.to_vec(),
    };
    let cross_confirmation = inputs
        .external
        .iter()
        .map(|(name, ext)| (name.clone(), cross_confirm(&candidates, ext)))
        .collect();
    let enrichment_factor = match inputs.baseline_valid_fraction {
        Some(b) if !generated.raw.empty => Some(enrichment_factor(generated.raw.valid_fraction(), b)?),
        _ => None,
    };
    Ok(EvalReport {
        generated,
        training,
        uniqueness,
        novelty,
        cross_confirmation,
        enrichment_factor,
    })
}
