//! Generative modelling of inorganic material compositions.
//!
//! Compositions are encoded as `8 × s` one-hot count matrices over an element
//! vocabulary. On top of that codec the crate provides a Wasserstein GAN, a
//! dice-loss autoencoder used as a decodability screen, charge-neutrality and
//! electronegativity filters, an exhaustive enumeration baseline, dataset
//! screening, and the evaluation metrics (validity, uniqueness, novelty,
//! cross-dataset confirmation, enrichment).

// `!(x > 0.0)` style checks are used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

pub mod composition;
pub mod element_data;
pub mod enumerator;
pub mod eval;
pub mod ingest;
pub mod models;
pub mod nn;
mod parallel;
pub mod validity;

pub use parallel::with_workers;
