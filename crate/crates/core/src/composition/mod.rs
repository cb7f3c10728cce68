//! Composition values, formula strings and the `d × s` matrix codec.

mod element;
mod formula;
mod matrix;

pub use element::Element;
pub use formula::{format_formula, parse_formula, Composition, FormulaError, MAX_COUNT};
pub use matrix::{
    decode_activation, decode_values, encode_composition, ActivationMatrix, CodecError, CompositionMatrix,
    DEFAULT_THRESHOLD, ROWS,
};
