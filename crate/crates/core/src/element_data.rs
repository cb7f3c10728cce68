//! Per-element chemistry tables and ordered element vocabularies.
//!
//! The table file is plain text, one element per line:
//! `symbol,atomic_number,electronegativity,states` where `states` is a
//! semicolon-separated list of signed oxidation states and the
//! electronegativity (Pauling) may be left empty. Lines starting with `#`
//! are comments.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::composition::{Composition, Element};

const BUNDLED_TABLE: &str = include_str!("../data/elements.csv");

#[derive(Debug, Error)]
pub enum ElementDataError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: duplicate element `{symbol}`")]
    Duplicate { line: usize, symbol: String },
    #[error("line {line}: `{symbol}` has an invalid oxidation-state list: {message}")]
    Validation {
        line: usize,
        symbol: String,
        message: String,
    },
    #[error("element `{0}` is not present in the element table")]
    MissingElement(String),
    #[error("vocabulary must be strictly increasing in atomic number without duplicates (at `{0}`)")]
    Unordered(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ElementRecord {
    pub element: Element,
    /// Pauling electronegativity; `None` when not tabulated.
    pub electronegativity: Option<f64>,
    /// Allowed signed oxidation states, ascending, no zero, no duplicates.
    pub oxidation_states: Vec<i32>,
}

impl ElementRecord {
    pub fn symbol(&self) -> &'static str {
        self.element.symbol()
    }

    pub fn atomic_number(&self) -> u8 {
        self.element.atomic_number()
    }
}

/// Immutable element table keyed by element.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ElementTable {
    records: BTreeMap<Element, ElementRecord>,
}

impl ElementTable {
    /// The table shipped with the crate (Z = 1..94, noble gases without
    /// known oxidation states excluded).
    pub fn bundled() -> Self {
        Self::parse(BUNDLED_TABLE).expect("bundled element table is well formed")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ElementDataError> {
        let text = fs::read_to_string(path)?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ElementDataError> {
        let mut records = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let record = parse_row(trimmed, line)?;
            if records.contains_key(&record.element) {
                return Err(ElementDataError::Duplicate {
                    line,
                    symbol: record.symbol().to_string(),
                });
            }
            records.insert(record.element, record);
        }
        Ok(ElementTable { records })
    }

    pub fn get(&self, element: Element) -> Option<&ElementRecord> {
        self.records.get(&element)
    }

    pub fn get_symbol(&self, symbol: &str) -> Option<&ElementRecord> {
        Element::from_symbol(symbol).and_then(|e| self.get(e))
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Records in ascending atomic number.
    pub fn iter(&self) -> impl Iterator<Item = &ElementRecord> {
        self.records.values()
    }
}

fn parse_row(row: &str, line: usize) -> Result<ElementRecord, ElementDataError> {
    let parse_err = |message: String| ElementDataError::Parse { line, message };
    let fields: Vec<&str> = row.split(',').map(str::trim).collect();
    if fields.len() != 4 {
        return Err(parse_err(format!(
            "expected 4 comma-separated fields, found {}",
            fields.len()
        )));
    }
    let element =
        Element::from_symbol(fields[0]).ok_or_else(|| parse_err(format!("unknown element symbol `{}`", fields[0])))?;
    let z: u8 = fields[1]
        .parse()
        .map_err(|_| parse_err(format!("invalid atomic number `{}`", fields[1])))?;
    if z != element.atomic_number() {
        return Err(parse_err(format!(
            "atomic number {z} does not match `{}` (Z = {})",
            fields[0],
            element.atomic_number()
        )));
    }
    let electronegativity = if fields[2].is_empty() {
        None
    } else {
        let chi: f64 = fields[2]
            .parse()
            .map_err(|_| parse_err(format!("invalid electronegativity `{}`", fields[2])))?;
        if !(chi.is_finite() && chi > 0.0) {
            return Err(parse_err(format!("electronegativity must be positive, got {chi}")));
        }
        Some(chi)
    };
    let invalid = |message: &str| ElementDataError::Validation {
        line,
        symbol: fields[0].to_string(),
        message: message.to_string(),
    };
    if fields[3].is_empty() {
        return Err(invalid("empty oxidation-state list"));
    }
    let mut states = Vec::new();
    for tok in fields[3].split(';') {
        let tok = tok.trim().trim_start_matches('+');
        let s: i32 = tok
            .parse()
            .map_err(|_| parse_err(format!("invalid oxidation state `{tok}`")))?;
        if s == 0 {
            return Err(invalid("zero oxidation state"));
        }
        if states.contains(&s) {
            return Err(invalid("duplicate oxidation state"));
        }
        states.push(s);
    }
    states.sort_unstable();
    Ok(ElementRecord {
        element,
        electronegativity,
        oxidation_states: states,
    })
}

/// Ordered element list defining matrix columns.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "Vec<Element>", into = "Vec<Element>")]
pub struct ElementVocabulary {
    elements: Vec<Element>,
    #[serde(skip)]
    index: HashMap<Element, usize>,
}

impl PartialEq for ElementVocabulary {
    fn eq(&self, other: &Self) -> bool {
        self.elements == other.elements
    }
}

impl Eq for ElementVocabulary {}

impl ElementVocabulary {
    /// Fails unless `elements` is strictly increasing in atomic number.
    pub fn new(elements: Vec<Element>) -> Result<Self, ElementDataError> {
        for w in elements.windows(2) {
            if w[0] >= w[1] {
                return Err(ElementDataError::Unordered(w[1].symbol().to_string()));
            }
        }
        let index = elements.iter().enumerate().map(|(i, &e)| (e, i)).collect();
        Ok(ElementVocabulary { elements, index })
    }

    /// Sorts and deduplicates before building.
    pub fn from_unordered<I: IntoIterator<Item = Element>>(elements: I) -> Self {
        let mut v: Vec<Element> = elements.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        Self::new(v).expect("sorted and deduplicated")
    }

    pub fn from_symbols(symbols: &[&str]) -> Result<Self, ElementDataError> {
        let elements = symbols
            .iter()
            .map(|s| Element::from_symbol(s).ok_or_else(|| ElementDataError::MissingElement(s.to_string())))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(elements)
    }

    /// Number of columns `s`.
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// An empty vocabulary cannot back any matrix.
    pub fn is_usable(&self) -> bool {
        !self.elements.is_empty()
    }

    pub fn elements(&self) -> &[Element] {
        &self.elements
    }

    pub fn symbols(&self) -> Vec<&'static str> {
        self.elements.iter().map(|e| e.symbol()).collect()
    }

    pub fn index_of(&self, element: Element) -> Option<usize> {
        self.index.get(&element).copied()
    }

    pub fn element(&self, column: usize) -> Element {
        self.elements[column]
    }

    /// Stable identifier derived from the ordered symbol list.
    pub fn fingerprint(&self) -> u64 {
        let mut hasher = Sha256::new();
        for e in &self.elements {
            hasher.update(e.symbol().as_bytes());
            hasher.update(b",");
        }
        let digest = hasher.finalize();
        u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
    }
}

impl TryFrom<Vec<Element>> for ElementVocabulary {
    type Error = ElementDataError;
    fn try_from(v: Vec<Element>) -> Result<Self, Self::Error> {
        Self::new(v)
    }
}

impl From<ElementVocabulary> for Vec<Element> {
    fn from(v: ElementVocabulary) -> Self {
        v.elements
    }
}

/// Vocabulary of exactly the elements appearing in `compositions`, by atomic number.
pub fn vocabulary_from_dataset<'a, I>(
    compositions: I,
    table: &ElementTable,
) -> Result<ElementVocabulary, ElementDataError>
where
    I: IntoIterator<Item = &'a Composition>,
{
    let mut seen = std::collections::BTreeSet::new();
    for c in compositions {
        for e in c.elements() {
            if table.get(e).is_none() {
                return Err(ElementDataError::MissingElement(e.symbol().to_string()));
            }
            seen.insert(e);
        }
    }
    ElementVocabulary::new(seen.into_iter().collect())
}
