use std::cell::OnceCell;

use anyhow::Result;
use clap::Args;
use influx_core::influence::{
    config_digest, dataset_hash, ExactConfig, InfluenceCache, InfluenceEngine,
};
use influx_core::{Dataset, Example, InfluenceMethod, InfluenceResult, LissaConfig, ModelParams};
use log::{debug, info};
use serde::Serialize;

use crate::GlobalOpts;

/// Influence estimator selection shared by `explain` and `experiment`.
#[derive(Args, Debug, Clone, Serialize)]
pub struct MethodArgs {
    /// Solve with the dense damped Hessian (default).
    #[arg(long, conflicts_with = "lissa")]
    pub exact: bool,
    /// Estimate the inverse Hessian-vector product with LiSSA.
    #[arg(long)]
    pub lissa: bool,
    /// Added to the Hessian diagonal [default: 0 exact, 3e-3 lissa].
    #[arg(long)]
    pub damping: Option<f64>,
    /// LiSSA recursion depth.
    #[arg(long, default_value_t = 2500)]
    pub lissa_depth: usize,
    /// LiSSA scale; must exceed the largest Hessian eigenvalue.
    #[arg(long, default_value_t = 1e4)]
    pub lissa_scale: f64,
    /// Training examples per LiSSA Hessian-vector product.
    #[arg(long, default_value_t = 8)]
    pub lissa_batch: usize,
    /// Independent LiSSA runs averaged.
    #[arg(long, default_value_t = 1)]
    pub lissa_repeats: usize,
}

impl MethodArgs {
    pub fn method(&self, seed: u64) -> InfluenceMethod {
        if self.lissa {
            let d = LissaConfig::default();
            InfluenceMethod::Lissa(LissaConfig {
                damping: self.damping.unwrap_or(d.damping),
                scale: self.lissa_scale,
                depth: self.lissa_depth,
                repeats: self.lissa_repeats,
                batch_size: self.lissa_batch,
                seed,
                ..d
            })
        } else {
            let d = ExactConfig::default();
            InfluenceMethod::Exact(ExactConfig {
                damping: self.damping.unwrap_or(d.damping),
                ..d
            })
        }
    }
}

/// Influence results backed by the on-disk cache. The engine, and with it
/// the Hessian factorisation, is only built on the first miss.
pub struct CachedInfluence<'a> {
    params: &'a ModelParams,
    train: &'a Dataset,
    method: InfluenceMethod,
    model_hash: String,
    train_hash: String,
    cache: InfluenceCache,
    engine: OnceCell<InfluenceEngine<'a>>,
}

impl<'a> CachedInfluence<'a> {
    pub fn new(
        global: &GlobalOpts,
        params: &'a ModelParams,
        train: &'a Dataset,
        method: InfluenceMethod,
    ) -> Result<Self> {
        Ok(CachedInfluence {
            params,
            train,
            method,
            model_hash: params.content_hash(),
            train_hash: dataset_hash(train),
            cache: InfluenceCache::new(global.cache_dir())?,
            engine: OnceCell::new(),
        })
    }

    pub fn engine(&self) -> Result<&InfluenceEngine<'a>> {
        if let Some(e) = self.engine.get() {
            return Ok(e);
        }
        debug!("building the {} influence engine", self.method.name());
        let e = InfluenceEngine::new(self.params, self.train, self.method.clone())?;
        Ok(self.engine.get_or_init(|| e))
    }

    pub fn get(&self, test: &Example) -> Result<InfluenceResult> {
        let digest = config_digest(&self.method, &self.train_hash, test);
        if let Some(hit) =
            self.cache
                .load(&self.model_hash, &test.id, self.method.name(), &digest)?
        {
            info!(
                "influence cache hit for `{}` ({})",
                test.id,
                hit.cache_key()
            );
            return Ok(hit);
        }
        let result = self.engine()?.influence(test)?;
        let key = self.cache.store(&result)?;
        debug!("cached influence for `{}` as {key}", test.id);
        Ok(result)
    }

    pub fn all(&self, tests: &[Example]) -> Result<Vec<InfluenceResult>> {
        tests.iter().map(|t| self.get(t)).collect()
    }
}
