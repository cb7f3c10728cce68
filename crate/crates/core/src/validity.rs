//! Charge-neutrality and electronegativity-balance screening.
//!
//! One oxidation state is assigned per element species. A composition is
//! charge neutral when some assignment drawn from the element table sums to
//! zero charge, and electronegativity balanced when at least one neutral
//! assignment puts every cation strictly below every anion on the Pauling
//! scale.

use std::collections::BTreeMap;
use std::ops::ControlFlow;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::composition::{Composition, Element};
use crate::element_data::ElementTable;
use crate::parallel::with_workers;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ValidityError {
    #[error("element `{0}` is not present in the element table")]
    MissingElement(String),
}

/// One signed oxidation state per element species.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OxidationAssignment {
    pub states: BTreeMap<Element, i32>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidityVerdict {
    pub charge_neutral: bool,
    pub electronegativity_balanced: bool,
    /// Set when the composition referenced an element missing from the table.
    pub unknown_element: bool,
}

impl ValidityVerdict {
    pub fn is_fully_valid(&self) -> bool {
        self.charge_neutral && self.electronegativity_balanced
    }
}

/// Per-species view used by the search: count, allowed states, electronegativity.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Species<'a> {
    pub count: i64,
    pub states: &'a [i32],
    pub electronegativity: Option<f64>,
}

fn species<'t>(c: &Composition, table: &'t ElementTable) -> Result<Vec<Species<'t>>, ValidityError> {
    c.iter()
        .map(|(e, k)| {
            let rec = table
                .get(e)
                .ok_or_else(|| ValidityError::MissingElement(e.symbol().to_string()))?;
            Ok(Species {
                count: k as i64,
                states: &rec.oxidation_states,
                electronegativity: rec.electronegativity,
            })
        })
        .collect()
}

/// Depth-first search over state assignments with remaining-charge bounds.
///
/// `visit` receives the chosen state index per species for every neutral
/// assignment, in lexicographic order, and may stop the search early.
pub(crate) fn search_neutral<F>(sp: &[Species<'_>], visit: &mut F) -> ControlFlow<()>
where
    F: FnMut(&[usize]) -> ControlFlow<()>,
{
    if sp.is_empty() {
        return ControlFlow::Continue(());
    }
    // suffix_min[i], suffix_max[i]: charge range achievable by species i..
    let n = sp.len();
    let mut suffix_min = vec![0i64; n + 1];
    let mut suffix_max = vec![0i64; n + 1];
    for i in (0..n).rev() {
        let lo = sp[i].states.iter().map(|&s| s as i64 * sp[i].count).min().unwrap_or(0);
        let hi = sp[i].states.iter().map(|&s| s as i64 * sp[i].count).max().unwrap_or(0);
        suffix_min[i] = suffix_min[i + 1] + lo;
        suffix_max[i] = suffix_max[i + 1] + hi;
    }
    let mut chosen = vec![0usize; n];
    descend(sp, &suffix_min, &suffix_max, 0, 0, &mut chosen, visit)
}

fn descend<F>(
    sp: &[Species<'_>],
    suffix_min: &[i64],
    suffix_max: &[i64],
    depth: usize,
    partial: i64,
    chosen: &mut [usize],
    visit: &mut F,
) -> ControlFlow<()>
where
    F: FnMut(&[usize]) -> ControlFlow<()>,
{
    if depth == sp.len() {
        if partial == 0 {
            return visit(chosen);
        }
        return ControlFlow::Continue(());
    }
    if partial + suffix_min[depth] > 0 || partial + suffix_max[depth] < 0 {
        return ControlFlow::Continue(());
    }
    for (i, &s) in sp[depth].states.iter().enumerate() {
        chosen[depth] = i;
        descend(
            sp,
            suffix_min,
            suffix_max,
            depth + 1,
            partial + s as i64 * sp[depth].count,
            chosen,
            visit,
        )?;
    }
    ControlFlow::Continue(())
}

/// Strict cation-below-anion electronegativity test on chosen state indices.
pub(crate) fn balanced_choice(sp: &[Species<'_>], chosen: &[usize]) -> bool {
    let mut max_cation = f64::NEG_INFINITY;
    let mut min_anion = f64::INFINITY;
    for (s, &i) in sp.iter().zip(chosen) {
        let Some(chi) = s.electronegativity else {
            return false;
        };
        if s.states[i] > 0 {
            max_cation = max_cation.max(chi);
        } else {
            min_anion = min_anion.min(chi);
        }
    }
    max_cation < min_anion
}

/// Verdict over prepared species; empty input is neither neutral nor balanced.
pub(crate) fn classify_species(sp: &[Species<'_>]) -> ValidityVerdict {
    let mut verdict = ValidityVerdict::default();
    if sp.is_empty() {
        return verdict;
    }
    let _ = search_neutral(sp, &mut |chosen| {
        verdict.charge_neutral = true;
        if balanced_choice(sp, chosen) {
            verdict.electronegativity_balanced = true;
            ControlFlow::Break(())
        } else {
            ControlFlow::Continue(())
        }
    });
    verdict
}

/// All assignments with zero total charge, elements by atomic number and
/// states ascending.
pub fn neutral_assignments(c: &Composition, table: &ElementTable) -> Result<Vec<OxidationAssignment>, ValidityError> {
    let sp = species(c, table)?;
    let elements: Vec<Element> = c.elements().collect();
    let mut out = Vec::new();
    let _ = search_neutral(&sp, &mut |chosen| {
        let states = elements
            .iter()
            .zip(sp.iter().zip(chosen))
            .map(|(&e, (s, &i))| (e, s.states[i]))
            .collect();
        out.push(OxidationAssignment { states });
        ControlFlow::Continue(())
    });
    Ok(out)
}

/// True iff every positively charged element is strictly less electronegative
/// than every negatively charged one. Missing electronegativities fail.
pub fn assignment_en_balanced(a: &OxidationAssignment, c: &Composition, table: &ElementTable) -> bool {
    let mut max_cation = f64::NEG_INFINITY;
    let mut min_anion = f64::INFINITY;
    for e in c.elements() {
        let (Some(&state), Some(rec)) = (a.states.get(&e), table.get(e)) else {
            return false;
        };
        let Some(chi) = rec.electronegativity else {
            return false;
        };
        if state > 0 {
            max_cation = max_cation.max(chi);
        } else {
            min_anion = min_anion.min(chi);
        }
    }
    max_cation < min_anion
}

/// Never fails: unknown elements produce `{false, false}` with the diagnostic flag.
pub fn classify_validity(c: &Composition, table: &ElementTable) -> ValidityVerdict {
    match species(c, table) {
        Ok(sp) => classify_species(&sp),
        Err(_) => ValidityVerdict {
            unknown_element: true,
            ..ValidityVerdict::default()
        },
    }
}

/// Data-parallel classification; results are in input order for any worker count.
pub fn classify_batch(samples: &[Composition], table: &ElementTable, workers: usize) -> Vec<ValidityVerdict> {
    with_workers(workers, || {
        samples.par_iter().map(|c| classify_validity(c, table)).collect()
    })
}
