use std::collections::BTreeSet;

use crate::corpus::{Dataset, Example};
use crate::error::{Error, Result};
use crate::model::{argmax, train, ModelParams, TrainConfig};

/// Retrains without `exclude` (same seed and vocabulary as `original`) and
/// returns, per test example, the change in probability of the original
/// prediction, in percentage points.
pub fn loo_retrain(
    original: &ModelParams,
    train_set: &Dataset,
    config: &TrainConfig,
    exclude: &BTreeSet<usize>,
    tests: &[Example],
) -> Result<Vec<f64>> {
    if let Some(&i) = exclude.iter().find(|&&i| i >= train_set.len()) {
        return Err(Error::invalid(format!("training index {i} out of range")));
    }
    let reduced = train_set.without(exclude);
    if let Some(c) = reduced.class_counts().iter().position(|&n| n == 0) {
        return Err(Error::ClassEliminated(c));
    }
    let retrained = train(&reduced, &original.arch, original.vocab.clone(), config)?;
    tests
        .iter()
        .map(|t| {
            let before = original.forward(t)?;
            let after = retrained.forward(t)?;
            let y = argmax(&before);
            Ok(100.0 * (after[y] - before[y]))
        })
        .collect()
}
