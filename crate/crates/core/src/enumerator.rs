//! Exhaustive enumeration of the composition space over a vocabulary.
//!
//! Element combinations are visited in lexicographic index order and, within a
//! combination, counts run odometer-style with the last element fastest. Work
//! is split into blocks keyed by the leading element pair; block results are
//! merged in block order so totals and ordered output do not depend on the
//! worker count.

use std::collections::BTreeSet;
use std::sync::atomic::{AtomicBool, Ordering};
use std::time::Instant;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::index;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::composition::{Composition, MAX_COUNT};
use crate::element_data::{ElementTable, ElementVocabulary};
use crate::parallel::with_workers;
use crate::validity::{classify_species, Species};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum FilterMode {
    #[default]
    None,
    ChargeNeutral,
    FullyValid,
}

#[derive(Clone, Debug)]
pub struct EnumSpec {
    pub vocabulary: ElementVocabulary,
    pub arities: BTreeSet<usize>,
    pub max_count: u32,
    pub filter: FilterMode,
}

impl EnumSpec {
    pub fn validate(&self) -> Result<(), EnumError> {
        if self.arities.is_empty() {
            return Err(EnumError::InvalidSpec("no arities requested".into()));
        }
        if let Some(&a) = self.arities.iter().find(|&&a| a < 2) {
            return Err(EnumError::InvalidSpec(format!("arity {a} is below 2")));
        }
        if !(1..=MAX_COUNT).contains(&self.max_count) {
            return Err(EnumError::InvalidSpec(format!(
                "max_count {} outside 1..={MAX_COUNT}",
                self.max_count
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArityStats {
    pub arity: usize,
    pub enumerated: u64,
    pub charge_neutral: u64,
    pub fully_valid: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SpaceStats {
    pub per_arity: Vec<ArityStats>,
    pub emitted: u64,
    pub elapsed_secs: f64,
}

impl SpaceStats {
    /// Compares counts only, ignoring elapsed time.
    pub fn same_totals(&self, other: &SpaceStats) -> bool {
        self.per_arity == other.per_arity && self.emitted == other.emitted
    }

    pub fn arity(&self, a: usize) -> Option<&ArityStats> {
        self.per_arity.iter().find(|s| s.arity == a)
    }

    pub fn enumerated(&self) -> u64 {
        self.per_arity.iter().map(|s| s.enumerated).sum()
    }

    pub fn charge_neutral(&self) -> u64 {
        self.per_arity.iter().map(|s| s.charge_neutral).sum()
    }

    pub fn fully_valid(&self) -> u64 {
        self.per_arity.iter().map(|s| s.fully_valid).sum()
    }

    /// Pooled fraction of enumerated compositions passing both checks.
    pub fn valid_fraction(&self) -> f64 {
        let n = self.enumerated();
        if n == 0 {
            0.0
        } else {
            self.fully_valid() as f64 / n as f64
        }
    }
}

#[derive(Debug, Error)]
pub enum EnumError {
    #[error("invalid enumeration spec: {0}")]
    InvalidSpec(String),
    #[error("element `{0}` is not present in the element table")]
    MissingElement(String),
    #[error("enumeration cancelled after {} compositions", partial.enumerated())]
    Cancelled { partial: SpaceStats },
}

/// Consumer that may be called from several worker threads at once.
pub trait CompositionSink: Sync {
    fn accept(&self, c: &Composition);
}

impl<F: Fn(&Composition) + Sync> CompositionSink for F {
    fn accept(&self, c: &Composition) {
        self(c)
    }
}

/// Sink that drops everything.
pub struct Discard;

impl CompositionSink for Discard {
    fn accept(&self, _: &Composition) {}
}

#[derive(Clone, Copy, Debug, Default)]
pub struct EnumOptions<'a> {
    /// Worker threads; 0 lets rayon decide.
    pub workers: usize,
    pub cancel: Option<&'a AtomicBool>,
}

/// `C(s, a) · max_count^a`.
pub fn closed_form_count(s: usize, arity: usize, max_count: u32) -> u128 {
    binomial(s as u128, arity as u128) * (max_count as u128).pow(arity as u32)
}

fn binomial(n: u128, k: u128) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) / (i + 1))
}

struct Prepared<'t> {
    states: Vec<&'t [i32]>,
    chi: Vec<Option<f64>>,
}

fn prepare<'t>(spec: &EnumSpec, table: &'t ElementTable) -> Result<Prepared<'t>, EnumError> {
    let mut states = Vec::with_capacity(spec.vocabulary.len());
    let mut chi = Vec::with_capacity(spec.vocabulary.len());
    for &e in spec.vocabulary.elements() {
        let rec = table
            .get(e)
            .ok_or_else(|| EnumError::MissingElement(e.symbol().to_string()))?;
        states.push(rec.oxidation_states.as_slice());
        chi.push(rec.electronegativity);
    }
    Ok(Prepared { states, chi })
}

#[derive(Clone, Copy, Debug)]
struct Block {
    arity: usize,
    lead: (usize, usize),
}

fn blocks(spec: &EnumSpec) -> Vec<Block> {
    let s = spec.vocabulary.len();
    let mut out = Vec::new();
    for &arity in &spec.arities {
        if arity > s {
            continue;
        }
        for i in 0..s {
            for j in i + 1..s {
                // Need arity - 2 further indices above j.
                if s - j > arity - 2 {
                    out.push(Block { arity, lead: (i, j) });
                }
            }
        }
    }
    out
}

#[derive(Default)]
struct BlockResult {
    arity: usize,
    enumerated: u64,
    charge_neutral: u64,
    fully_valid: u64,
    emitted: u64,
}

fn run_block(block: Block, spec: &EnumSpec, prep: &Prepared<'_>, emit: &mut dyn FnMut(Composition)) -> BlockResult {
    let s = spec.vocabulary.len();
    let a = block.arity;
    let m = spec.max_count as i64;
    let mut result = BlockResult {
        arity: a,
        ..BlockResult::default()
    };

    let mut idx: Vec<usize> = Vec::with_capacity(a);
    idx.push(block.lead.0);
    idx.push(block.lead.1);
    for k in 0..a - 2 {
        idx.push(block.lead.1 + 1 + k);
    }

    let mut species: Vec<Species<'_>> = Vec::with_capacity(a);
    loop {
        species.clear();
        for &i in &idx {
            species.push(Species {
                count: 1,
                states: prep.states[i],
                electronegativity: prep.chi[i],
            });
        }
        // Count odometer, last position fastest.
        'counts: loop {
            let v = classify_species(&species);
            result.enumerated += 1;
            result.charge_neutral += v.charge_neutral as u64;
            result.fully_valid += v.is_fully_valid() as u64;
            let keep = match spec.filter {
                FilterMode::None => true,
                FilterMode::ChargeNeutral => v.charge_neutral,
                FilterMode::FullyValid => v.is_fully_valid(),
            };
            if keep {
                result.emitted += 1;
                emit(Composition::from_pairs(
                    idx.iter()
                        .zip(&species)
                        .map(|(&i, sp)| (spec.vocabulary.element(i), sp.count as u32)),
                ));
            }
            let mut pos = a;
            loop {
                if pos == 0 {
                    break 'counts;
                }
                pos -= 1;
                if species[pos].count < m {
                    species[pos].count += 1;
                    continue 'counts;
                }
                species[pos].count = 1;
            }
        }
        // Advance the tail indices (positions 2..a) lexicographically within the block.
        if !next_tail(&mut idx, s) {
            break;
        }
    }
    result
}

/// Next lexicographic combination of `idx[2..]` above `idx[1]`.
fn next_tail(idx: &mut [usize], s: usize) -> bool {
    let a = idx.len();
    if a <= 2 {
        return false;
    }
    let mut pos = a;
    while pos > 2 {
        pos -= 1;
        let limit = s - (a - pos);
        if idx[pos] < limit {
            idx[pos] += 1;
            for k in pos + 1..a {
                idx[k] = idx[k - 1] + 1;
            }
            return true;
        }
    }
    false
}

fn merge(spec: &EnumSpec, results: impl IntoIterator<Item = BlockResult>, started: Instant) -> SpaceStats {
    let mut per_arity: Vec<ArityStats> = spec
        .arities
        .iter()
        .map(|&arity| ArityStats {
            arity,
            ..ArityStats::default()
        })
        .collect();
    let mut emitted = 0;
    for r in results {
        let slot = per_arity.iter_mut().find(|s| s.arity == r.arity).expect("known arity");
        slot.enumerated += r.enumerated;
        slot.charge_neutral += r.charge_neutral;
        slot.fully_valid += r.fully_valid;
        emitted += r.emitted;
    }
    SpaceStats {
        per_arity,
        emitted,
        elapsed_secs: started.elapsed().as_secs_f64(),
    }
}

/// Visits every composition of the spec exactly once, passing those that
/// survive the filter to a concurrent sink.
pub fn enumerate_compositions(
    spec: &EnumSpec,
    table: &ElementTable,
    opts: EnumOptions<'_>,
    sink: &dyn CompositionSink,
) -> Result<SpaceStats, EnumError> {
    spec.validate()?;
    let started = Instant::now();
    let prep = prepare(spec, table)?;
    let blocks = blocks(spec);
    let cancelled = |opts: &EnumOptions<'_>| opts.cancel.is_some_and(|c| c.load(Ordering::Relaxed));
    let results: Vec<Option<BlockResult>> = with_workers(opts.workers, || {
        blocks
            .par_iter()
            .map(|&b| {
                if cancelled(&opts) {
                    return None;
                }
                Some(run_block(b, spec, &prep, &mut |c| sink.accept(&c)))
            })
            .collect()
    });
    finish(spec, results, started)
}

/// Like [`enumerate_compositions`] but delivers to a single consumer in
/// enumeration order.
pub fn enumerate_ordered(
    spec: &EnumSpec,
    table: &ElementTable,
    opts: EnumOptions<'_>,
    mut sink: impl FnMut(&Composition),
) -> Result<SpaceStats, EnumError> {
    spec.validate()?;
    let started = Instant::now();
    let prep = prepare(spec, table)?;
    let blocks = blocks(spec);
    let mut results = Vec::with_capacity(blocks.len());
    const CHUNK: usize = 256;
    for chunk in blocks.chunks(CHUNK) {
        if opts.cancel.is_some_and(|c| c.load(Ordering::Relaxed)) {
            results.push(None);
            break;
        }
        let done: Vec<(BlockResult, Vec<Composition>)> = with_workers(opts.workers, || {
            chunk
                .par_iter()
                .map(|&b| {
                    let mut out = Vec::new();
                    let r = run_block(b, spec, &prep, &mut |c| out.push(c));
                    (r, out)
                })
                .collect()
        });
        for (r, out) in done {
            out.iter().for_each(&mut sink);
            results.push(Some(r));
        }
    }
    finish(spec, results, started)
}

fn finish(spec: &EnumSpec, results: Vec<Option<BlockResult>>, started: Instant) -> Result<SpaceStats, EnumError> {
    let complete = results.iter().all(Option::is_some);
    let stats = merge(spec, results.into_iter().flatten(), started);
    if complete {
        Ok(stats)
    } else {
        Err(EnumError::Cancelled { partial: stats })
    }
}

/// Totals of [`enumerate_compositions`] with a discarding sink.
pub fn space_statistics(spec: &EnumSpec, table: &ElementTable, opts: EnumOptions<'_>) -> Result<SpaceStats, EnumError> {
    enumerate_compositions(spec, table, opts, &Discard)
}

/// Draws `n` compositions uniformly from the unfiltered space described by
/// `spec`: arity is chosen with weight `C(s, a) · max_count^a`, then an
/// element subset and per-element counts uniformly.
pub fn sample_uniform<R: Rng + ?Sized>(spec: &EnumSpec, n: usize, rng: &mut R) -> Result<Vec<Composition>, EnumError> {
    spec.validate()?;
    let s = spec.vocabulary.len();
    let arities: Vec<usize> = spec.arities.iter().copied().filter(|&a| a <= s).collect();
    if arities.is_empty() {
        return Err(EnumError::InvalidSpec(format!(
            "no requested arity fits a vocabulary of {s}"
        )));
    }
    let weights: Vec<f64> = arities
        .iter()
        .map(|&a| closed_form_count(s, a, spec.max_count) as f64)
        .collect();
    let pick = WeightedIndex::new(&weights).map_err(|e| EnumError::InvalidSpec(e.to_string()))?;
    Ok((0..n)
        .map(|_| {
            let a = arities[pick.sample(rng)];
            let cols = index::sample(rng, s, a);
            Composition::from_pairs(
                cols.into_iter()
                    .map(|col| (spec.vocabulary.element(col), rng.random_range(1..=spec.max_count))),
            )
        })
        .collect())
}
