use std::sync::Arc;

use log::{debug, warn};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{init_params, objective_and_grad, ArchSpec, Family, ModelParams};
use crate::corpus::{Dataset, Vocabulary};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub l2_lambda: f64,
    /// Epoch budget for mini-batch training (`emb_mlp`).
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub seed: u64,
    /// Objective change below which full-batch training may stop.
    pub convergence_tol: f64,
    /// Largest objective-gradient entry allowed at convergence.
    pub grad_tol: f64,
    /// Iteration cap for full-batch training.
    pub max_iters: usize,
}

impl TrainConfig {
    pub fn for_family(family: Family) -> Self {
        match family {
            Family::LinearBow => TrainConfig {
                l2_lambda: 1e-3,
                epochs: 50,
                learning_rate: 0.1,
                batch_size: 32,
                seed: 0,
                convergence_tol: 1e-7,
                grad_tol: 1e-9,
                max_iters: 200_000,
            },
            Family::EmbMlp => TrainConfig {
                l2_lambda: 1e-4,
                learning_rate: 0.01,
                ..Self::for_family(Family::LinearBow)
            },
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    fn validate(&self, family: Family) -> Result<()> {
        if !(self.l2_lambda >= 0.0) || !self.l2_lambda.is_finite() {
            return Err(Error::invalid(
                "l2_lambda must be a finite nonnegative number",
            ));
        }
        if family == Family::LinearBow && self.l2_lambda <= 0.0 {
            return Err(Error::invalid(
                "linear_bow needs l2_lambda > 0 to be strictly convex",
            ));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::invalid("learning_rate must be positive"));
        }
        if self.batch_size == 0 {
            return Err(Error::invalid("batch_size must be positive"));
        }
        Ok(())
    }
}

/// Minimises `(1/n) Σ loss + (λ/2)‖θ‖²` from [`init_params`].
///
/// `linear_bow` uses full-batch accelerated gradient descent until both the
/// objective change and the gradient are below tolerance. The step is capped
/// at `1 / L` where `L` bounds the objective's curvature. `emb_mlp` runs
/// mini-batch gradient descent for a fixed number of epochs.
pub fn train(
    dataset: &Dataset,
    arch: &ArchSpec,
    vocab: Arc<Vocabulary>,
    config: &TrainConfig,
) -> Result<ModelParams> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if dataset.num_classes() != arch.num_classes {
        return Err(Error::invalid(format!(
            "dataset has {} classes but the architecture has {}",
            dataset.num_classes(),
            arch.num_classes
        )));
    }
    config.validate(arch.family)?;
    let mut params = init_params(arch, vocab, config.seed)?;
    params.l2_lambda = config.l2_lambda;
    match arch.family {
        Family::LinearBow => train_full_batch(&mut params, dataset, config)?,
        Family::EmbMlp => train_minibatch(&mut params, dataset, config)?,
    }
    Ok(params)
}

fn train_full_batch(
    params: &mut ModelParams,
    dataset: &Dataset,
    config: &TrainConfig,
) -> Result<()> {
    let data = params.encode_dataset(dataset)?;
    let k = params.kernel();
    let l2 = config.l2_lambda;
    // softmax cross-entropy curvature is at most ‖x‖²/2 per example
    let curvature = 0.5
        * data
            .items
            .iter()
            .map(|x| 1.0 + x.counts.iter().map(|(_, c)| c * c).sum::<f64>())
            .sum::<f64>()
        / data.len() as f64
        + l2;
    let step = config.learning_rate.min(1.0 / curvature);
    let q = (l2 * step).sqrt();
    let beta = (1.0 - q) / (1.0 + q);

    let mut x = params.theta.clone();
    let mut y = x.clone();
    let mut prev = f64::INFINITY;
    for it in 0..config.max_iters {
        let (f, g) = objective_and_grad(k, &y, &data, l2);
        if !f.is_finite() {
            return Err(Error::Diverged { step: it });
        }
        let gmax = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if (prev - f).abs() <= config.convergence_tol && gmax <= config.grad_tol {
            debug!("full-batch training converged after {it} iterations (objective {f:.6e})");
            params.theta = y;
            return Ok(());
        }
        prev = f;
        let x_new: Vec<f64> = y.iter().zip(&g).map(|(yi, gi)| yi - step * gi).collect();
        // restart momentum when the gradient opposes the last move
        let opposed: f64 = g
            .iter()
            .zip(x_new.iter().zip(&x))
            .map(|(gi, (a, b))| gi * (a - b))
            .sum();
        if opposed > 0.0 {
            y.copy_from_slice(&x_new);
        } else {
            for ((yi, a), b) in y.iter_mut().zip(&x_new).zip(&x) {
                *yi = a + beta * (a - b);
            }
        }
        x = x_new;
    }
    warn!(
        "full-batch training stopped at the iteration cap ({}) before reaching tolerance",
        config.max_iters
    );
    params.theta = x;
    Ok(())
}

fn train_minibatch(
    params: &mut ModelParams,
    dataset: &Dataset,
    config: &TrainConfig,
) -> Result<()> {
    let data = params.encode_dataset(dataset)?;
    let k = params.kernel();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(1);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut g = vec![0.0; params.theta.len()];
    let mut step = 0;
    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(config.batch_size) {
            g.fill(0.0);
            let scale = 1.0 / batch.len() as f64;
            let mut loss = 0.0;
            for &i in batch {
                let x = &data.items[i];
                loss += k.accumulate_grad(&params.theta, x, x.label, scale, &mut g);
            }
            if !loss.is_finite() {
                return Err(Error::Diverged { step });
            }
            epoch_loss += loss;
            for (t, gi) in params.theta.iter_mut().zip(&g) {
                *t -= config.learning_rate * (gi + config.l2_lambda * *t);
            }
            step += 1;
        }
        debug!(
            "epoch {epoch}: mean loss {:.6}",
            epoch_loss / data.len() as f64
        );
    }
    if params.theta.iter().any(|t| !t.is_finite()) {
        return Err(Error::Diverged { step });
    }
    Ok(())
}
