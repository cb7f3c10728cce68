//! Naive reference implementations used to check the optimized code paths.
#![allow(dead_code)]

use compgen_core::composition::{Composition, Element};
use compgen_core::element_data::{ElementTable, ElementVocabulary};

/// Elements used by the exhaustive equivalence checks.
pub const ORACLE_VOCAB: [&str; 10] = ["H", "Li", "C", "N", "O", "F", "Na", "S", "Cl", "Fe"];

pub fn oracle_vocab() -> ElementVocabulary {
    ElementVocabulary::from_symbols(&ORACLE_VOCAB).unwrap()
}

/// (charge_neutral, electronegativity_balanced) by walking the whole
/// product of per-element oxidation states.
pub fn brute_force_verdict(c: &Composition, table: &ElementTable) -> (bool, bool) {
    let mut parts = Vec::new();
    for (e, k) in c.iter() {
        match table.get(e) {
            Some(r) => parts.push((k as i64, r.oxidation_states.clone(), r.electronegativity)),
            None => return (false, false),
        }
    }
    if parts.is_empty() || parts.iter().any(|p| p.1.is_empty()) {
        return (false, false);
    }
    let total: usize = parts.iter().map(|p| p.1.len()).product();
    let (mut cn, mut en) = (false, false);
    for mut code in 0..total {
        let mut charge = 0i64;
        let mut chosen = Vec::with_capacity(parts.len());
        for (k, states, _) in &parts {
            let s = states[code % states.len()];
            code /= states.len();
            charge += k * s as i64;
            chosen.push(s);
        }
        if charge != 0 {
            continue;
        }
        cn = true;
        let mut max_cation = f64::NEG_INFINITY;
        let mut min_anion = f64::INFINITY;
        let mut missing = false;
        for ((_, _, chi), s) in parts.iter().zip(&chosen) {
            match chi {
                None => missing = true,
                Some(x) if *s > 0 => max_cation = max_cation.max(*x),
                Some(x) => min_anion = min_anion.min(*x),
            }
        }
        if !missing && max_cation < min_anion {
            en = true;
        }
    }
    (cn, en)
}

/// Every composition over `vocab` with arity in `arities` and counts in
/// `1..=max_count`, by plain recursion.
pub fn all_compositions(vocab: &ElementVocabulary, arities: &[usize], max_count: u32) -> Vec<Composition> {
    fn go(
        vocab: &ElementVocabulary,
        start: usize,
        left: usize,
        max_count: u32,
        acc: &mut Vec<(Element, u32)>,
        out: &mut Vec<Composition>,
    ) {
        if left == 0 {
            out.push(Composition::from_pairs(acc.iter().copied()));
            return;
        }
        for i in start..vocab.len() {
            for k in 1..=max_count {
                acc.push((vocab.element(i), k));
                go(vocab, i + 1, left - 1, max_count, acc, out);
                acc.pop();
            }
        }
    }
    let mut out = Vec::new();
    for &a in arities {
        go(vocab, 0, a, max_count, &mut Vec::new(), &mut out);
    }
    out
}
