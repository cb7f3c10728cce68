use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::element::Element;

/// Largest per-element atom count representable in the matrix encoding.
pub const MAX_COUNT: u32 = 8;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormulaError {
    #[error("empty formula")]
    Empty,
    #[error("fractional count `{token}` at offset {offset}: only integer stoichiometries are supported")]
    FractionalCount { token: String, offset: usize },
    #[error("unrecognised token `{token}` at offset {offset}")]
    UnknownToken { token: String, offset: usize },
    #[error("zero count at offset {offset}")]
    ZeroCount { offset: usize },
    #[error("unbalanced parentheses")]
    UnbalancedParens,
    #[error("count overflow at offset {offset}")]
    Overflow { offset: usize },
}

/// Element to atom-count mapping; the formula without structure.
///
/// Counts are always at least one. The matrix codec additionally requires
/// every count to be at most [`MAX_COUNT`]; see [`Composition::within_count_cap`].
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Composition {
    counts: BTreeMap<Element, u32>,
}

impl Composition {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a composition; zero counts are skipped and repeated elements sum.
    pub fn from_pairs<I: IntoIterator<Item = (Element, u32)>>(pairs: I) -> Self {
        let mut c = Composition::new();
        for (e, k) in pairs {
            c.add(e, k);
        }
        c
    }

    pub fn add(&mut self, element: Element, count: u32) {
        if count > 0 {
            *self.counts.entry(element).or_insert(0) += count;
        }
    }

    pub fn count(&self, element: Element) -> u32 {
        self.counts.get(&element).copied().unwrap_or(0)
    }

    /// Number of distinct elements.
    pub fn arity(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn total_atoms(&self) -> u64 {
        self.counts.values().map(|&k| k as u64).sum()
    }

    pub fn max_count(&self) -> u32 {
        self.counts.values().copied().max().unwrap_or(0)
    }

    pub fn within_count_cap(&self) -> bool {
        self.max_count() <= MAX_COUNT
    }

    /// Elements in ascending atomic number with their counts.
    pub fn iter(&self) -> impl Iterator<Item = (Element, u32)> + '_ {
        self.counts.iter().map(|(&e, &k)| (e, k))
    }

    pub fn elements(&self) -> impl Iterator<Item = Element> + '_ {
        self.counts.keys().copied()
    }

    pub fn contains(&self, element: Element) -> bool {
        self.counts.contains_key(&element)
    }
}

impl fmt::Display for Composition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_formula(self))
    }
}

impl FromStr for Composition {
    type Err = FormulaError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_formula(s)
    }
}

/// Canonical formula: ascending atomic number, counts always explicit ("O3Fe2").
pub fn format_formula(c: &Composition) -> String {
    let mut out = String::new();
    for (e, k) in c.iter() {
        out.push_str(e.symbol());
        out.push_str(&k.to_string());
    }
    out
}

/// Parses formulas such as `Fe2O3`, `LiFePO4` or `Ca(OH)2`.
///
/// Implicit counts are one, repeated element tokens sum, and any decimal count
/// is rejected as fractional.
pub fn parse_formula(text: &str) -> Result<Composition, FormulaError> {
    let text = text.trim();
    if text.is_empty() {
        return Err(FormulaError::Empty);
    }
    let bytes = text.as_bytes();
    let mut pos = 0;
    // Stack of open groups; the bottom entry is the whole formula.
    let mut stack: Vec<Vec<(Element, u32)>> = vec![Vec::new()];

    while pos < bytes.len() {
        let b = bytes[pos];
        match b {
            b' ' | b'\t' => pos += 1,
            b'(' | b'[' => {
                stack.push(Vec::new());
                pos += 1;
            }
            b')' | b']' => {
                pos += 1;
                let group = stack.pop().ok_or(FormulaError::UnbalancedParens)?;
                if stack.is_empty() {
                    return Err(FormulaError::UnbalancedParens);
                }
                let mult = read_count(text, &mut pos)?;
                let top = stack.last_mut().expect("non-empty stack");
                for (e, k) in group {
                    let total = k.checked_mul(mult).ok_or(FormulaError::Overflow { offset: pos })?;
                    top.push((e, total));
                }
            }
            b'A'..=b'Z' => {
                let start = pos;
                pos += 1;
                if pos < bytes.len() && bytes[pos].is_ascii_lowercase() {
                    pos += 1;
                }
                let token = &text[start..pos];
                let element = Element::from_symbol(token).ok_or_else(|| FormulaError::UnknownToken {
                    token: token.to_string(),
                    offset: start,
                })?;
                let k = read_count(text, &mut pos)?;
                stack.last_mut().expect("non-empty stack").push((element, k));
            }
            _ => {
                let ch = text[pos..].chars().next().unwrap_or('?');
                return Err(FormulaError::UnknownToken {
                    token: ch.to_string(),
                    offset: pos,
                });
            }
        }
    }
    if stack.len() != 1 {
        return Err(FormulaError::UnbalancedParens);
    }
    let mut c = Composition::new();
    for (e, k) in stack.pop().unwrap() {
        let current = c.count(e);
        current.checked_add(k).ok_or(FormulaError::Overflow { offset: pos })?;
        c.add(e, k);
    }
    if c.is_empty() {
        return Err(FormulaError::Empty);
    }
    Ok(c)
}

/// Reads an optional integer count at `pos`, defaulting to one.
fn read_count(text: &str, pos: &mut usize) -> Result<u32, FormulaError> {
    let bytes = text.as_bytes();
    let start = *pos;
    while *pos < bytes.len() && bytes[*pos].is_ascii_digit() {
        *pos += 1;
    }
    let digits_end = *pos;
    if *pos < bytes.len() && bytes[*pos] == b'.' {
        *pos += 1;
        while *pos < bytes.len() && bytes[*pos].is_ascii_digit() {
            *pos += 1;
        }
        return Err(FormulaError::FractionalCount {
            token: text[start..*pos].to_string(),
            offset: start,
        });
    }
    if digits_end == start {
        return Ok(1);
    }
    let k: u32 = text[start..digits_end]
        .parse()
        .map_err(|_| FormulaError::Overflow { offset: start })?;
    if k == 0 {
        return Err(FormulaError::ZeroCount { offset: start });
    }
    Ok(k)
}
