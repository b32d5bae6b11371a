//! Influence of training examples on a test prediction.
//!
//! `raw_i = ∇L_ŷ(test) · H⁻¹ · ∇L(z_i)` where `H` is the damped Hessian of the
//! training objective. A positive score means the training example supports
//! the prediction: removing it would lower the model's confidence.

mod cache;
mod exact;
mod lissa;
mod loo;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Dataset, Example};
use crate::error::{Error, Result};
use crate::hashing::ContentHasher;
use crate::model::{argmax, EncodedDataset, Family, ModelParams, DEFAULT_HESSIAN_CAP};
use crate::stats::{dot, z_normalize};

pub use cache::{cache_key, InfluenceCache};
pub use exact::{inverse_hvp_exact, FactoredHessian, RESIDUAL_TOL};
pub use lissa::{inverse_hvp_lissa, max_eigenvalue, HvpOracle, LissaConfig, LissaOutput};
pub use loo::loo_retrain;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactConfig {
    pub damping: f64,
    pub hessian_cap: usize,
}

impl Default for ExactConfig {
    fn default() -> Self {
        ExactConfig {
            damping: 0.0,
            hessian_cap: DEFAULT_HESSIAN_CAP,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum InfluenceMethod {
    Exact(ExactConfig),
    Lissa(LissaConfig),
}

impl InfluenceMethod {
    pub fn name(&self) -> &'static str {
        match self {
            InfluenceMethod::Exact(_) => "exact",
            InfluenceMethod::Lissa(_) => "lissa",
        }
    }

    pub fn damping(&self) -> f64 {
        match self {
            InfluenceMethod::Exact(c) => c.damping,
            InfluenceMethod::Lissa(c) => c.damping,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfluenceResult {
    pub test_example_id: String,
    pub predicted_class: usize,
    pub method: String,
    /// Indexed by canonical training index.
    pub raw_scores: Vec<f64>,
    pub z_scores: Vec<f64>,
    pub model_hash: String,
    pub config_digest: String,
    /// LiSSA convergence flag; `None` for the exact path.
    pub converged: Option<bool>,
}

impl InfluenceResult {
    /// Training indices by descending z-score; ties by index.
    pub fn ranked(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.z_scores.len()).collect();
        idx.sort_by(|&a, &b| {
            self.z_scores[b]
                .total_cmp(&self.z_scores[a])
                .then(a.cmp(&b))
        });
        idx
    }

    /// The `k` training indices with the largest z-scores.
    pub fn top(&self, k: usize) -> Vec<usize> {
        let mut r = self.ranked();
        r.truncate(k);
        r
    }

    /// The `k` training indices with the smallest z-scores, most negative
    /// first.
    pub fn bottom(&self, k: usize) -> Vec<usize> {
        let mut r = self.ranked();
        r.reverse();
        r.truncate(k);
        r
    }
}

/// Full-data curvature of a model's objective, as an [`HvpOracle`].
pub struct ModelCurvature<'a> {
    params: &'a ModelParams,
    data: &'a EncodedDataset,
}

impl<'a> ModelCurvature<'a> {
    pub fn new(params: &'a ModelParams, data: &'a EncodedDataset) -> Self {
        ModelCurvature { params, data }
    }
}

impl HvpOracle for ModelCurvature<'_> {
    fn dim(&self) -> usize {
        self.params.num_params()
    }

    fn num_examples(&self) -> usize {
        self.data.len()
    }

    fn batch_hvp(&self, batch: &[usize], v: &[f64], out: &mut [f64]) {
        self.params.hvp_encoded(self.data, batch, v, 0.0, out);
    }
}

enum Solver {
    Exact(FactoredHessian),
    Lissa(LissaConfig),
}

/// Computes influence results for many test examples against one trained
/// model, reusing the training encoding, the Hessian factorization and (for
/// `emb_mlp`) the per-example training gradients.
pub struct InfluenceEngine<'a> {
    params: &'a ModelParams,
    data: EncodedDataset,
    method: InfluenceMethod,
    solver: Solver,
    train_grads: Option<Vec<Vec<f64>>>,
    model_hash: String,
    train_hash: String,
}

impl<'a> InfluenceEngine<'a> {
    pub fn new(params: &'a ModelParams, train: &Dataset, method: InfluenceMethod) -> Result<Self> {
        if train.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let data = params.encode_dataset(train)?;
        let solver = match &method {
            InfluenceMethod::Exact(c) => {
                let h = params.hessian_encoded(&data, 0.0, c.hessian_cap)?;
                Solver::Exact(FactoredHessian::new(h, c.damping)?)
            }
            InfluenceMethod::Lissa(c) => Solver::Lissa(c.clone()),
        };
        let train_grads = (params.arch.family == Family::EmbMlp).then(|| {
            (0..data.len())
                .into_par_iter()
                .map(|i| params.grad_encoded(&data.items[i], data.label(i)))
                .collect()
        });
        Ok(InfluenceEngine {
            params,
            data,
            method,
            solver,
            train_grads,
            model_hash: params.content_hash(),
            train_hash: dataset_hash(train),
        })
    }

    pub fn method(&self) -> &InfluenceMethod {
        &self.method
    }

    pub fn model_hash(&self) -> &str {
        &self.model_hash
    }

    /// Digest of the method configuration, the training data and the test
    /// example.
    pub fn config_digest(&self, test: &Example) -> String {
        config_digest(&self.method, &self.train_hash, test)
    }

    /// `(H + damping I)⁻¹ v` and, for LiSSA, the convergence flag.
    pub fn inverse_hvp(&self, v: &[f64]) -> Result<(Vec<f64>, Option<bool>)> {
        match &self.solver {
            Solver::Exact(f) => Ok((f.solve(v)?, None)),
            Solver::Lissa(c) => {
                let oracle = ModelCurvature::new(self.params, &self.data);
                let out = inverse_hvp_lissa(&oracle, v, c)?;
                Ok((out.estimate, Some(out.converged)))
            }
        }
    }

    pub fn influence(&self, test: &Example) -> Result<InfluenceResult> {
        let x = self.params.encode(test)?;
        let predicted = argmax(&self.params.probs_encoded(&x));
        let g = self.params.grad_encoded(&x, predicted);
        let (s, converged) = self.inverse_hvp(&g)?;
        let raw = self.scores_for(&s);
        Ok(InfluenceResult {
            test_example_id: test.id.clone(),
            predicted_class: predicted,
            method: self.method.name().to_string(),
            z_scores: z_normalize(&raw),
            raw_scores: raw,
            model_hash: self.model_hash.clone(),
            config_digest: self.config_digest(test),
            converged,
        })
    }

    /// `s · ∇L(z_i)` for every training example.
    pub fn scores_for(&self, s: &[f64]) -> Vec<f64> {
        match &self.train_grads {
            Some(gs) => gs.par_iter().map(|g| dot(g, s)).collect(),
            None => (0..self.data.len())
                .into_par_iter()
                .map(|i| {
                    self.params
                        .grad_dot_encoded(&self.data.items[i], self.data.label(i), s)
                })
                .collect(),
        }
    }
}

/// Influence of every training example on the prediction for `test`.
pub fn influence_scores(
    params: &ModelParams,
    train: &Dataset,
    test: &Example,
    method: &InfluenceMethod,
) -> Result<InfluenceResult> {
    InfluenceEngine::new(params, train, method.clone())?.influence(test)
}

/// Digest of an influence method configuration, a training set (by
/// [`dataset_hash`]) and a test example. Together with the model hash it
/// identifies an [`InfluenceResult`] without computing it.
pub fn config_digest(method: &InfluenceMethod, train_hash: &str, test: &Example) -> String {
    let mut h = ContentHasher::new();
    h.str(&serde_json::to_string(method).unwrap_or_default());
    h.str(train_hash);
    h.str(&serde_json::to_string(test).unwrap_or_default());
    h.finish()
}

pub fn dataset_hash(d: &Dataset) -> String {
    let mut h = ContentHasher::new();
    h.str(&serde_json::to_string(d).unwrap_or_default());
    h.finish()
}
