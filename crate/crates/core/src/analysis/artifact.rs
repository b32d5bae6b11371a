//! Quadratic influence-artifact coefficients per feature.

use serde::{Deserialize, Serialize};

use super::features::Feature;
use super::quadratic::{quadratic_fit, FitKind, QuadFit};
use crate::corpus::Dataset;
use crate::error::Result;
use crate::influence::InfluenceResult;
use crate::stats::{mean, std_err};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestFit {
    pub test_id: String,
    pub predicted_class: usize,
    pub fit: QuadFit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArtifactReport {
    pub feature_name: String,
    pub fits: Vec<TestFit>,
    /// Mean quadratic coefficient over fits that are not degenerate.
    pub mean_a: f64,
    pub std_err_a: f64,
    pub included: usize,
    /// Fits excluded because the feature is constant over the training set.
    pub degenerate: usize,
    /// Included fits that used the minimum-norm solution.
    pub min_norm: usize,
}

/// Feature values over the training set paired with one result's z-scores.
pub fn scatter(
    feature: &Feature,
    train: &Dataset,
    result: &InfluenceResult,
) -> Result<Vec<(f64, f64)>> {
    let xs = feature_values(feature, train)?;
    Ok(xs
        .into_iter()
        .zip(result.z_scores.iter().copied())
        .collect())
}

pub fn feature_values(feature: &Feature, train: &Dataset) -> Result<Vec<f64>> {
    train.iter().map(|e| feature.value(e)).collect()
}

/// Fits `z ≈ a x² + b x + c` of each result's z-scores against each feature
/// over the training set and averages `a` per feature.
pub fn artifact_scan(
    train: &Dataset,
    results: &[InfluenceResult],
    features: &[Feature],
) -> Result<Vec<ArtifactReport>> {
    features
        .iter()
        .map(|feature| {
            let xs = feature_values(feature, train)?;
            let fits = results
                .iter()
                .map(|r| {
                    Ok(TestFit {
                        test_id: r.test_example_id.clone(),
                        predicted_class: r.predicted_class,
                        fit: quadratic_fit(&xs, &r.z_scores)?,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(summarize(&feature.name(), fits))
        })
        .collect()
}

pub fn summarize(feature_name: &str, fits: Vec<TestFit>) -> ArtifactReport {
    let a: Vec<f64> = fits
        .iter()
        .filter(|f| f.fit.kind != FitKind::Degenerate)
        .map(|f| f.fit.a)
        .collect();
    ArtifactReport {
        feature_name: feature_name.to_string(),
        mean_a: mean(&a),
        std_err_a: std_err(&a),
        included: a.len(),
        degenerate: fits.len() - a.len(),
        min_norm: fits
            .iter()
            .filter(|f| f.fit.kind == FitKind::MinNorm)
            .count(),
        fits,
    }
}
