use thiserror::Error;

use super::formula::{Composition, MAX_COUNT};
use crate::element_data::ElementVocabulary;

/// Number of matrix rows `d`; row `k - 1` encodes an atom count of `k`.
pub const ROWS: usize = MAX_COUNT as usize;

pub const DEFAULT_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodecError {
    #[error("element `{0}` is not in the vocabulary")]
    MissingElement(String),
    #[error("element `{symbol}` has count {count}, outside 1..={max}", max = MAX_COUNT)]
    CountOutOfRange { symbol: String, count: u32 },
    #[error("matrix is bound to a different vocabulary or has {found} columns, expected {expected}")]
    VocabularyMismatch { expected: usize, found: usize },
    #[error("matrix needs {expected} values, got {found}")]
    Length { expected: usize, found: usize },
}

/// Binary `d × s` matrix with at most one set cell per column.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CompositionMatrix {
    cols: usize,
    cells: Vec<u8>,
    vocabulary: u64,
}

impl CompositionMatrix {
    pub fn zeros(vocabulary: &ElementVocabulary) -> Self {
        CompositionMatrix {
            cols: vocabulary.len(),
            cells: vec![0; ROWS * vocabulary.len()],
            vocabulary: vocabulary.fingerprint(),
        }
    }

    pub fn rows(&self) -> usize {
        ROWS
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.cells[row * self.cols + col]
    }

    /// Row-major cells.
    pub fn cells(&self) -> &[u8] {
        &self.cells
    }

    pub fn vocabulary_fingerprint(&self) -> u64 {
        self.vocabulary
    }

    pub fn column_sum(&self, col: usize) -> u8 {
        (0..ROWS).map(|r| self.get(r, col)).sum()
    }

    /// Row-major values as reals, the network input layout `1 × d × s`.
    pub fn to_values<T: From<u8>>(&self) -> Vec<T> {
        self.cells.iter().map(|&c| T::from(c)).collect()
    }

    pub fn to_activation(&self) -> ActivationMatrix {
        ActivationMatrix {
            cols: self.cols,
            cells: self.cells.iter().map(|&c| c as f64).collect(),
            vocabulary: self.vocabulary,
        }
    }
}

/// Real-valued relaxation of a [`CompositionMatrix`], cells in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ActivationMatrix {
    cols: usize,
    cells: Vec<f64>,
    vocabulary: u64,
}

impl ActivationMatrix {
    /// Wraps row-major values; values are clamped into `[0, 1]`.
    pub fn from_values<T: Into<f64> + Copy>(vocabulary: &ElementVocabulary, values: &[T]) -> Result<Self, CodecError> {
        let expected = ROWS * vocabulary.len();
        if values.len() != expected {
            return Err(CodecError::Length {
                expected,
                found: values.len(),
            });
        }
        Ok(ActivationMatrix {
            cols: vocabulary.len(),
            cells: values.iter().map(|&v| v.into().clamp(0.0, 1.0)).collect(),
            vocabulary: vocabulary.fingerprint(),
        })
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.cells[row * self.cols + col]
    }

    pub fn cells(&self) -> &[f64] {
        &self.cells
    }

    pub fn vocabulary_fingerprint(&self) -> u64 {
        self.vocabulary
    }
}

/// One-hot encodes each element's count at row `count - 1`; absent elements
/// leave their column zero.
pub fn encode_composition(c: &Composition, vocabulary: &ElementVocabulary) -> Result<CompositionMatrix, CodecError> {
    let mut m = CompositionMatrix::zeros(vocabulary);
    for (e, k) in c.iter() {
        let col = vocabulary
            .index_of(e)
            .ok_or_else(|| CodecError::MissingElement(e.symbol().to_string()))?;
        if !(1..=MAX_COUNT).contains(&k) {
            return Err(CodecError::CountOutOfRange {
                symbol: e.symbol().to_string(),
                count: k,
            });
        }
        m.cells[(k as usize - 1) * m.cols + col] = 1;
    }
    Ok(m)
}

/// Discretizes activations column by column.
///
/// The column's element is present with count `argmax + 1` when its maximum
/// activation reaches `threshold`; ties resolve to the lowest row.
pub fn decode_activation(
    m: &ActivationMatrix,
    vocabulary: &ElementVocabulary,
    threshold: f64,
) -> Result<Composition, CodecError> {
    if m.cols != vocabulary.len() || m.vocabulary != vocabulary.fingerprint() {
        return Err(CodecError::VocabularyMismatch {
            expected: vocabulary.len(),
            found: m.cols,
        });
    }
    let mut c = Composition::new();
    for col in 0..m.cols {
        let (best_row, best) = argmax_column(m, col);
        if best >= threshold {
            c.add(vocabulary.element(col), best_row as u32 + 1);
        }
    }
    Ok(c)
}

/// Same rule as [`decode_activation`] applied to a raw row-major slice.
pub fn decode_values<T: Into<f64> + Copy>(
    values: &[T],
    vocabulary: &ElementVocabulary,
    threshold: f64,
) -> Result<Composition, CodecError> {
    let m = ActivationMatrix::from_values(vocabulary, values)?;
    decode_activation(&m, vocabulary, threshold)
}

fn argmax_column(m: &ActivationMatrix, col: usize) -> (usize, f64) {
    let mut best_row = 0;
    let mut best = m.get(0, col);
    for row in 1..ROWS {
        let v = m.get(row, col);
        if v > best {
            best = v;
            best_row = row;
        }
    }
    (best_row, best)
}
