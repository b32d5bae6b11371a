//! LiSSA: a truncated, stochastic Neumann series for `H⁻¹ v`.

use log::{debug, warn};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::{dot, norm};

/// Hessian-vector products of an empirical objective
/// `(1/n) Σ_i ∇²L_i + ridge I`, restricted to a batch of example indices.
pub trait HvpOracle: Sync {
    fn dim(&self) -> usize;

    fn num_examples(&self) -> usize;

    /// Writes `((1/|batch|) Σ_{i ∈ batch} ∇²L_i + ridge I) v` into `out`.
    /// Damping is not included.
    fn batch_hvp(&self, batch: &[usize], v: &[f64], out: &mut [f64]);
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LissaConfig {
    pub damping: f64,
    pub scale: f64,
    pub depth: usize,
    pub repeats: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub convergence_window: usize,
    /// Relative change of `‖r_j‖` over the window counted as converged.
    pub convergence_tol: f64,
    /// Power-iteration steps for the contractivity check.
    pub power_iters: usize,
}

impl Default for LissaConfig {
    fn default() -> Self {
        LissaConfig {
            damping: 3e-3,
            scale: 1e4,
            depth: 2500,
            repeats: 1,
            batch_size: 8,
            seed: 0,
            convergence_window: 50,
            convergence_tol: 1e-4,
            power_iters: 50,
        }
    }
}

impl LissaConfig {
    fn validate(&self) -> Result<()> {
        if !(self.damping >= 0.0) {
            return Err(Error::invalid("damping must be nonnegative"));
        }
        if !(self.scale > 0.0) {
            return Err(Error::invalid("scale must be positive"));
        }
        if self.depth == 0 || self.repeats == 0 || self.batch_size == 0 {
            return Err(Error::invalid(
                "depth, repeats and batch_size must be positive",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LissaOutput {
    pub estimate: Vec<f64>,
    /// Whether every repeat met the convergence criterion.
    pub converged: bool,
    /// Power-iteration estimate of the largest eigenvalue of the damped
    /// full-data operator.
    pub max_eigenvalue: f64,
}

/// Largest eigenvalue of the damped full-data operator by power iteration.
pub fn max_eigenvalue<O: HvpOracle + ?Sized>(
    oracle: &O,
    damping: f64,
    iters: usize,
    seed: u64,
) -> f64 {
    let dim = oracle.dim();
    let all: Vec<usize> = (0..oracle.num_examples()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(7);
    let mut x: Vec<f64> = (0..dim)
        .map(|_| rand::Rng::gen_range(&mut rng, -1.0..1.0))
        .collect();
    let n0 = norm(&x);
    x.iter_mut().for_each(|v| *v /= n0);
    let mut hx = vec![0.0; dim];
    let mut lambda = 0.0;
    for _ in 0..iters.max(1) {
        oracle.batch_hvp(&all, &x, &mut hx);
        for (h, xi) in hx.iter_mut().zip(&x) {
            *h += damping * xi;
        }
        lambda = dot(&x, &hx);
        let n = norm(&hx);
        if n == 0.0 {
            return 0.0;
        }
        for (xi, h) in x.iter_mut().zip(&hx) {
            *xi = h / n;
        }
    }
    lambda
}

/// Estimates `(H + damping I)⁻¹ v` with `repeats` independent recursions
/// `r_{j+1} = v + r_j - (H_batch + damping I) r_j / scale`, each returning
/// `r_depth / scale`, averaged.
pub fn inverse_hvp_lissa<O: HvpOracle + ?Sized>(
    oracle: &O,
    v: &[f64],
    config: &LissaConfig,
) -> Result<LissaOutput> {
    config.validate()?;
    let dim = oracle.dim();
    if v.len() != dim {
        return Err(Error::invalid(format!(
            "vector has length {} but the operator has dimension {dim}",
            v.len()
        )));
    }
    let n = oracle.num_examples();
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    let lmax = max_eigenvalue(oracle, config.damping, config.power_iters, config.seed);
    if !(lmax / config.scale < 1.0) {
        return Err(Error::NotContractive {
            max_eigenvalue: lmax,
            scale: config.scale,
        });
    }
    let full: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut total = vec![0.0; dim];
    let mut converged = true;
    let mut hr = vec![0.0; dim];
    let window = config.convergence_window.min(config.depth);
    for rep in 0..config.repeats {
        let mut r = v.to_vec();
        let mut norms = Vec::with_capacity(config.depth + 1);
        norms.push(norm(&r));
        for step in 0..config.depth {
            let batch: Vec<usize> = if config.batch_size >= n {
                full.clone()
            } else {
                let mut b = sample(&mut rng, n, config.batch_size).into_vec();
                b.sort_unstable();
                b
            };
            oracle.batch_hvp(&batch, &r, &mut hr);
            for ((ri, hi), vi) in r.iter_mut().zip(&hr).zip(v) {
                *ri = vi + *ri - (hi + config.damping * *ri) / config.scale;
            }
            let nr = norm(&r);
            if !nr.is_finite() {
                return Err(Error::NonFiniteRecursion { step });
            }
            norms.push(nr);
        }
        let last = norms[config.depth];
        let before = norms[config.depth - window];
        let change = if last == before {
            0.0
        } else {
            (last - before).abs() / before.max(f64::MIN_POSITIVE)
        };
        let ok = change <= config.convergence_tol;
        debug!(
            "LiSSA repeat {rep}: relative norm change {change:.3e} over the last {window} steps"
        );
        converged &= ok;
        for (t, ri) in total.iter_mut().zip(&r) {
            *t += ri;
        }
    }
    if !converged {
        warn!("LiSSA recursion did not meet its convergence tolerance; consider a larger depth");
    }
    let k = 1.0 / (config.scale * config.repeats as f64);
    Ok(LissaOutput {
        estimate: total.iter().map(|t| t * k).collect(),
        converged,
        max_eigenvalue: lmax,
    })
}
