//! Saliency maps, influence functions and dataset-artifact analysis for small
//! differentiable text classifiers.
//!
//! The crate is organised bottom-up:
//!
//! - [`corpus`]: examples, tokenization, vocabularies, JSONL I/O and synthetic
//!   corpora (sentiment toy data, HANS-style NLI pairs, hypothesis negation).
//! - [`model`]: a strictly convex bag-of-words classifier and a small embedding
//!   MLP, with exact gradients, Hessians and Hessian-vector products.
//! - [`saliency`]: signed gradient-times-input token scores.
//! - [`influence`]: exact and LiSSA inverse-HVP solvers, influence scores,
//!   leave-one-out retraining and a content-addressed result cache.
//! - [`analysis`]: remove-and-retrain sanity checks, saliency/influence
//!   consistency experiments and quadratic influence-artifact fits.

pub mod analysis;
pub mod corpus;
mod error;
pub mod hashing;
pub mod influence;
pub mod model;
pub mod saliency;
pub mod stats;

pub use corpus::{Dataset, Example, ExampleKind, LabelScheme, Vocabulary};
pub use error::{Error, Result};
pub use influence::{InfluenceMethod, InfluenceResult, LissaConfig};
pub use model::{ArchSpec, Family, ModelParams, TrainConfig};
pub use saliency::SaliencyMap;
