//! Experiment harnesses: remove-and-retrain sanity checks, saliency and
//! influence consistency, and quadratic artifact coefficients.

mod artifact;
mod consistency;
mod features;
mod quadratic;
mod sanity;

pub use artifact::{artifact_scan, feature_values, scatter, summarize, ArtifactReport, TestFit};
pub use consistency::{
    consistency_removal_overlap, consistency_token_influence, overlap_at, top_fraction_means, Cell,
    CellRecord, ConsistencyReport1, ConsistencyReport2, Ranking, EXTREMES, OVERLAP_FRACTIONS,
    TOP_FRACTIONS,
};
pub use features::{lexical_overlap_rate, negation_feature, Feature, NEGATION_WORDS};
pub use quadratic::{quadratic_fit, FitKind, QuadFit, MAX_CONDITION};
pub use sanity::{
    removal_count, sanity_check, select_removal, RemovalType, SanityConfig, SanityRecord,
    SanityReport, SanityRow,
};
