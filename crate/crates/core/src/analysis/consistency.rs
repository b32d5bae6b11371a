//! Agreement between saliency maps and influence rankings.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::corpus::{Dataset, Example};
use crate::error::{Error, Result};
use crate::influence::{InfluenceEngine, InfluenceResult};
use crate::model::ModelParams;
use crate::saliency::{extreme_tokens, remove_token, saliency_map};
use crate::stats::{mean, std_err};

/// Fractions of the qualifying list averaged in the token-influence
/// experiment.
pub const TOP_FRACTIONS: [f64; 4] = [0.10, 0.20, 0.50, 1.00];
/// Fractions of the training set compared in the removal-overlap experiment.
pub const OVERLAP_FRACTIONS: [f64; 4] = [0.001, 0.002, 0.005, 0.01];
pub const EXTREMES: [&str; 3] = ["most_positive", "most_negative", "median"];

/// How "top influential" is ranked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ranking {
    /// Largest z first.
    #[default]
    Signed,
    /// Largest |z| first.
    Absolute,
}

impl Ranking {
    fn key(self, z: f64) -> f64 {
        match self {
            Ranking::Signed => z,
            Ranking::Absolute => z.abs(),
        }
    }

    /// Indices of `z` by descending key; ties by index.
    pub fn order(self, z: &[f64]) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..z.len()).collect();
        idx.sort_by(|&a, &b| self.key(z[b]).total_cmp(&self.key(z[a])).then(a.cmp(&b)));
        idx
    }
}

fn top_count(p: f64, n: usize) -> usize {
    ((p * n as f64).ceil() as usize).clamp(1, n.max(1))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub extreme: String,
    /// Fraction, e.g. 0.1 for the top 10%.
    pub granularity: f64,
    pub mean: f64,
    pub std_err: f64,
    /// Test examples contributing.
    pub count: usize,
}

/// Per-test value behind a [`Cell`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellRecord {
    pub test_id: String,
    pub extreme: String,
    pub token: String,
    pub granularity: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyReport1 {
    pub ranking: Ranking,
    pub cells: Vec<Cell>,
    pub records: Vec<CellRecord>,
    /// Per extreme, test examples whose token occurs in no qualifying
    /// training example.
    pub skipped: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyReport2 {
    pub ranking: Ranking,
    pub cells: Vec<Cell>,
    pub records: Vec<CellRecord>,
    /// Per extreme, test examples where the token could not be removed.
    pub skipped: BTreeMap<String, usize>,
}

fn aggregate(records: &[CellRecord], fractions: &[f64]) -> Vec<Cell> {
    let mut cells = Vec::new();
    for name in EXTREMES {
        for &p in fractions {
            let v: Vec<f64> = records
                .iter()
                .filter(|r| r.extreme == name && r.granularity == p)
                .map(|r| r.value)
                .collect();
            cells.push(Cell {
                extreme: name.to_string(),
                granularity: p,
                mean: mean(&v),
                std_err: std_err(&v),
                count: v.len(),
            });
        }
    }
    cells
}

/// Mean of the top fraction of `values` under `ranking`, for each fraction in
/// [`TOP_FRACTIONS`]. Averages the ranking key (z, or |z|).
pub fn top_fraction_means(values: &[f64], ranking: Ranking) -> Vec<f64> {
    let order = ranking.order(values);
    TOP_FRACTIONS
        .iter()
        .map(|&p| {
            let k = top_count(p, values.len());
            order[..k]
                .iter()
                .map(|&i| ranking.key(values[i]))
                .sum::<f64>()
                / k as f64
        })
        .collect()
}

/// For each test example and each saliency extreme, averages the influence of
/// the training examples that contain that token and carry the predicted
/// label, over the top 10/20/50/100% of them.
pub fn consistency_token_influence(
    params: &ModelParams,
    train: &Dataset,
    tests: &[Example],
    results: &[InfluenceResult],
    ranking: Ranking,
) -> Result<ConsistencyReport1> {
    if tests.len() != results.len() {
        return Err(Error::invalid(
            "one influence result per test example is required",
        ));
    }
    let mut records = Vec::new();
    let mut skipped: BTreeMap<String, usize> =
        EXTREMES.iter().map(|e| (e.to_string(), 0)).collect();
    for (test, res) in tests.iter().zip(results) {
        let map = saliency_map(params, test)?;
        let ext = extreme_tokens(&map)?;
        for (name, pos) in ext.named() {
            let token = map.token_at(pos).unwrap_or_default();
            let zs: Vec<f64> = train
                .iter()
                .enumerate()
                .filter(|(_, e)| e.label == res.predicted_class && e.contains_token(token))
                .map(|(i, _)| res.z_scores[i])
                .collect();
            if zs.is_empty() {
                *skipped.entry(name.to_string()).or_default() += 1;
                continue;
            }
            for (p, value) in TOP_FRACTIONS.iter().zip(top_fraction_means(&zs, ranking)) {
                records.push(CellRecord {
                    test_id: test.id.clone(),
                    extreme: name.to_string(),
                    token: token.to_string(),
                    granularity: *p,
                    value,
                });
            }
        }
    }
    Ok(ConsistencyReport1 {
        ranking,
        cells: aggregate(&records, &TOP_FRACTIONS),
        records,
        skipped,
    })
}

/// `|top_p(a) ∩ top_p(b)| / |top_p|` with `top_p` the `ceil(p n)` indices of
/// largest key.
pub fn overlap_at(a: &[f64], b: &[f64], p: f64, ranking: Ranking) -> f64 {
    let k = top_count(p, a.len());
    let ta: HashSet<usize> = ranking.order(a).into_iter().take(k).collect();
    let shared = ranking
        .order(b)
        .into_iter()
        .take(k)
        .filter(|i| ta.contains(i))
        .count();
    shared as f64 / k as f64
}

/// For each test example and saliency extreme, removes that token, recomputes
/// influence and measures how much of the top of the ranking survives.
pub fn consistency_removal_overlap(
    params: &ModelParams,
    tests: &[Example],
    results: &[InfluenceResult],
    engine: &InfluenceEngine<'_>,
    ranking: Ranking,
) -> Result<ConsistencyReport2> {
    if tests.len() != results.len() {
        return Err(Error::invalid(
            "one influence result per test example is required",
        ));
    }
    let mut records = Vec::new();
    let mut skipped: BTreeMap<String, usize> =
        EXTREMES.iter().map(|e| (e.to_string(), 0)).collect();
    for (test, res) in tests.iter().zip(results) {
        let map = saliency_map(params, test)?;
        let ext = extreme_tokens(&map)?;
        for (name, pos) in ext.named() {
            let modified = match remove_token(test, pos) {
                Ok(m) => m,
                Err(_) => {
                    *skipped.entry(name.to_string()).or_default() += 1;
                    continue;
                }
            };
            let after = engine.influence(&modified)?;
            for &p in &OVERLAP_FRACTIONS {
                records.push(CellRecord {
                    test_id: test.id.clone(),
                    extreme: name.to_string(),
                    token: map.token_at(pos).unwrap_or_default().to_string(),
                    granularity: p,
                    value: overlap_at(&res.z_scores, &after.z_scores, p, ranking),
                });
            }
        }
    }
    Ok(ConsistencyReport2 {
        ranking,
        cells: aggregate(&records, &OVERLAP_FRACTIONS),
        records,
        skipped,
    })
}
