//! Remove-and-retrain sanity check for influence rankings.

use std::collections::BTreeSet;
use std::sync::Arc;

use log::{info, warn};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Dataset, Example, Vocabulary};
use crate::error::{Error, Result};
use crate::influence::{loo_retrain, InfluenceEngine, InfluenceMethod, InfluenceResult};
use crate::model::{train, ArchSpec, TrainConfig};
use crate::stats::{mean, sample_std, std_err};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RemovalType {
    Positive,
    Negative,
    Least,
    Random,
}

impl RemovalType {
    pub const ALL: [RemovalType; 4] = [
        RemovalType::Positive,
        RemovalType::Negative,
        RemovalType::Least,
        RemovalType::Random,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RemovalType::Positive => "positive",
            RemovalType::Negative => "negative",
            RemovalType::Least => "least",
            RemovalType::Random => "random",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SanityConfig {
    pub fraction: f64,
    pub seeds: Vec<u64>,
}

impl Default for SanityConfig {
    fn default() -> Self {
        SanityConfig {
            fraction: 0.10,
            seeds: vec![0, 1, 2, 3, 4],
        }
    }
}

/// One retraining outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SanityRecord {
    pub seed: u64,
    pub test_id: String,
    pub removal: RemovalType,
    /// Change in confidence of the original prediction, percentage points.
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SanityRow {
    pub removal: RemovalType,
    /// Mean over every (seed, test example) pair.
    pub mean: f64,
    pub per_seed_means: Vec<f64>,
    /// Standard deviation of the per-seed means.
    pub std_dev: f64,
    /// Standard error of the per-seed means.
    pub std_err: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SanityReport {
    pub fraction: f64,
    pub removed_per_run: usize,
    pub seeds: Vec<u64>,
    pub rows: Vec<SanityRow>,
    pub records: Vec<SanityRecord>,
    /// Runs skipped because a removal would eliminate a class.
    pub skipped: usize,
}

impl SanityReport {
    pub fn row(&self, removal: RemovalType) -> Option<&SanityRow> {
        self.rows.iter().find(|r| r.removal == removal)
    }
}

/// Number of examples removed for `fraction` of `n`; at least one.
pub fn removal_count(n: usize, fraction: f64) -> Result<usize> {
    if !(fraction > 0.0 && fraction <= 0.5) {
        return Err(Error::invalid("removal fraction must be in (0, 0.5]"));
    }
    let k = (fraction * n as f64).round() as usize;
    if k == 0 {
        return Err(Error::invalid(format!(
            "fraction {fraction} of {n} training examples selects nothing; at least one is required"
        )));
    }
    Ok(k)
}

/// Training indices to remove for one test example.
pub fn select_removal(
    result: &InfluenceResult,
    removal: RemovalType,
    k: usize,
    rng: &mut ChaCha8Rng,
) -> BTreeSet<usize> {
    let z = &result.z_scores;
    match removal {
        RemovalType::Positive => result.top(k).into_iter().collect(),
        RemovalType::Negative => result.bottom(k).into_iter().collect(),
        RemovalType::Least => {
            let mut idx: Vec<usize> = (0..z.len()).collect();
            idx.sort_by(|&a, &b| z[a].abs().total_cmp(&z[b].abs()).then(a.cmp(&b)));
            idx.into_iter().take(k).collect()
        }
        RemovalType::Random => sample(rng, z.len(), k).into_iter().collect(),
    }
}

/// For every seed: trains, scores influence for each test example, removes
/// the selected fraction of training examples per removal type, retrains and
/// records the change in confidence.
pub fn sanity_check(
    train_set: &Dataset,
    arch: &ArchSpec,
    vocab: Arc<Vocabulary>,
    train_config: &TrainConfig,
    tests: &[Example],
    method: &InfluenceMethod,
    config: &SanityConfig,
) -> Result<SanityReport> {
    let k = removal_count(train_set.len(), config.fraction)?;
    let mut records = Vec::new();
    let mut skipped = 0;
    for &seed in &config.seeds {
        let cfg = train_config.clone().with_seed(seed);
        let model = train(train_set, arch, vocab.clone(), &cfg)?;
        let engine = InfluenceEngine::new(&model, train_set, method.clone())?;
        let results = tests
            .iter()
            .map(|t| engine.influence(t))
            .collect::<Result<Vec<_>>>()?;
        let mut jobs = Vec::new();
        for (ti, (test, res)) in tests.iter().zip(&results).enumerate() {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(ti as u64 + 1);
            for removal in RemovalType::ALL {
                jobs.push((test, removal, select_removal(res, removal, k, &mut rng)));
            }
        }
        let outcomes: Vec<Result<f64>> = jobs
            .par_iter()
            .map(|(test, _, exclude)| {
                loo_retrain(
                    &model,
                    train_set,
                    &cfg,
                    exclude,
                    std::slice::from_ref(*test),
                )
                .map(|d| d[0])
            })
            .collect();
        for ((test, removal, _), out) in jobs.iter().zip(outcomes) {
            match out {
                Ok(delta) => records.push(SanityRecord {
                    seed,
                    test_id: test.id.clone(),
                    removal: *removal,
                    delta,
                }),
                Err(Error::ClassEliminated(c)) => {
                    warn!(
                        "skipping {} removal for `{}`: class {c} eliminated",
                        removal.as_str(),
                        test.id
                    );
                    skipped += 1;
                }
                Err(e) => return Err(e),
            }
        }
        info!("sanity check: seed {seed} done");
    }
    let rows = RemovalType::ALL
        .iter()
        .map(|&removal| {
            let all: Vec<f64> = records
                .iter()
                .filter(|r| r.removal == removal)
                .map(|r| r.delta)
                .collect();
            let per_seed_means: Vec<f64> = config
                .seeds
                .iter()
                .map(|&s| {
                    let v: Vec<f64> = records
                        .iter()
                        .filter(|r| r.removal == removal && r.seed == s)
                        .map(|r| r.delta)
                        .collect();
                    mean(&v)
                })
                .filter(|m| m.is_finite())
                .collect();
            SanityRow {
                removal,
                mean: mean(&all),
                std_dev: sample_std(&per_seed_means),
                std_err: std_err(&per_seed_means),
                per_seed_means,
                count: all.len(),
            }
        })
        .collect();
    Ok(SanityReport {
        fraction: config.fraction,
        removed_per_run: k,
        seeds: config.seeds.clone(),
        rows,
        records,
        skipped,
    })
}
