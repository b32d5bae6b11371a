//! Differentiable classifiers: architecture, parameters, loss, gradients,
//! Hessians and Hessian-vector products.
//!
//! Two families share one flat parameter vector `theta`:
//!
//! - [`Family::LinearBow`]: multinomial logistic regression on token counts.
//!   Strictly convex once `l2_lambda > 0`.
//! - [`Family::EmbMlp`]: mean-pooled embeddings followed by a tanh hidden
//!   layer. Non-convex.
//!
//! The per-example loss is plain cross-entropy. The L2 term only enters the
//! dataset objective and its Hessian.

mod checkpoint;
mod dual;
mod encode;
mod linear;
mod mlp;
mod train;

use std::sync::Arc;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Dataset, Example, ExampleKind, Vocabulary};
use crate::error::{Error, Result};

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint};
pub(crate) use encode::Encoded;
pub use train::{train, TrainConfig};

use linear::LinearBow;
use mlp::EmbMlp;

/// Default cap on the parameter count for dense Hessians.
pub const DEFAULT_HESSIAN_CAP: usize = 5000;

/// Examples per work unit in parallel reductions. Partial sums are combined in
/// chunk order so results do not depend on the thread count.
pub(crate) const REDUCE_CHUNK: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    LinearBow,
    EmbMlp,
}

impl Family {
    pub fn as_str(self) -> &'static str {
        match self {
            Family::LinearBow => "linear_bow",
            Family::EmbMlp => "emb_mlp",
        }
    }
}

impl std::str::FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear_bow" => Ok(Family::LinearBow),
            "emb_mlp" => Ok(Family::EmbMlp),
            other => Err(Error::invalid(format!("unknown model family `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArchSpec {
    pub family: Family,
    pub vocab_size: usize,
    pub num_classes: usize,
    pub embed_dim: usize,
    pub hidden_dim: usize,
    pub pair_mode: bool,
}

impl ArchSpec {
    pub fn linear_bow(vocab_size: usize, num_classes: usize, pair_mode: bool) -> Self {
        ArchSpec {
            family: Family::LinearBow,
            vocab_size,
            num_classes,
            embed_dim: 16,
            hidden_dim: 32,
            pair_mode,
        }
    }

    pub fn emb_mlp(vocab_size: usize, num_classes: usize, pair_mode: bool) -> Self {
        ArchSpec {
            family: Family::EmbMlp,
            ..Self::linear_bow(vocab_size, num_classes, pair_mode)
        }
    }

    pub fn with_dims(mut self, embed_dim: usize, hidden_dim: usize) -> Self {
        self.embed_dim = embed_dim;
        self.hidden_dim = hidden_dim;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.vocab_size == 0 {
            return Err(Error::invalid("vocab_size must include the unknown id"));
        }
        if self.num_classes < 2 {
            return Err(Error::invalid("at least two classes are required"));
        }
        if self.family == Family::EmbMlp && (self.embed_dim == 0 || self.hidden_dim == 0) {
            return Err(Error::invalid("embed_dim and hidden_dim must be positive"));
        }
        Ok(())
    }

    pub fn num_params(&self) -> usize {
        self.kernel().num_params()
    }

    pub fn expected_kind(&self) -> ExampleKind {
        if self.pair_mode {
            ExampleKind::Pair
        } else {
            ExampleKind::Single
        }
    }

    pub fn layout(&self) -> ParamLayout {
        let c = self.num_classes;
        let segs: Vec<(&str, Vec<usize>)> = match self.family {
            Family::LinearBow => vec![("W", vec![self.vocab_size, c]), ("b", vec![c])],
            Family::EmbMlp => {
                let k = self.mlp();
                let (d, h) = (self.embed_dim, self.hidden_dim);
                vec![
                    ("embedding", vec![self.vocab_size, d]),
                    ("w1", vec![h, k.num_features()]),
                    ("b1", vec![h]),
                    ("w2", vec![c, h]),
                    ("b2", vec![c]),
                ]
            }
        };
        let mut offset = 0;
        let segments = segs
            .into_iter()
            .map(|(name, shape)| {
                let len = shape.iter().product();
                let seg = ParamSegment {
                    name: name.to_string(),
                    offset,
                    len,
                    shape,
                };
                offset += len;
                seg
            })
            .collect();
        ParamLayout { segments }
    }

    fn mlp(&self) -> EmbMlp {
        EmbMlp {
            vocab: self.vocab_size,
            classes: self.num_classes,
            embed: self.embed_dim,
            hidden: self.hidden_dim,
            pair: self.pair_mode,
        }
    }

    fn kernel(&self) -> Kernel {
        match self.family {
            Family::LinearBow => Kernel::Linear(LinearBow {
                vocab: self.vocab_size,
                classes: self.num_classes,
            }),
            Family::EmbMlp => Kernel::Mlp(self.mlp()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamSegment {
    pub name: String,
    pub offset: usize,
    pub len: usize,
    pub shape: Vec<usize>,
}

/// Named slices of `theta`, in storage order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamLayout {
    pub segments: Vec<ParamSegment>,
}

impl ParamLayout {
    pub fn total(&self) -> usize {
        self.segments.iter().map(|s| s.len).sum()
    }

    pub fn segment(&self, name: &str) -> Option<&ParamSegment> {
        self.segments.iter().find(|s| s.name == name)
    }
}

#[derive(Debug, Clone, Copy)]
enum Kernel {
    Linear(LinearBow),
    Mlp(EmbMlp),
}

impl Kernel {
    fn num_params(&self) -> usize {
        match self {
            Kernel::Linear(k) => k.num_params(),
            Kernel::Mlp(k) => k.num_params(),
        }
    }

    fn probs(&self, theta: &[f64], x: &Encoded) -> Vec<f64> {
        match self {
            Kernel::Linear(k) => k.probs(theta, x),
            Kernel::Mlp(k) => k.probs(theta, x),
        }
    }

    fn accumulate_grad(
        &self,
        theta: &[f64],
        x: &Encoded,
        target: usize,
        scale: f64,
        grad: &mut [f64],
    ) -> f64 {
        match self {
            Kernel::Linear(k) => k.accumulate_grad(theta, x, target, scale, grad),
            Kernel::Mlp(k) => k.accumulate_grad(theta, x, target, scale, grad),
        }
    }

    fn accumulate_hvp<'a>(
        &self,
        theta: &[f64],
        batch: impl Iterator<Item = (&'a Encoded, usize)>,
        v: &[f64],
        scale: f64,
        out: &mut [f64],
    ) {
        match self {
            Kernel::Linear(k) => {
                for (x, _) in batch {
                    k.accumulate_hvp(theta, x, v, scale, out);
                }
            }
            Kernel::Mlp(k) => k.accumulate_hvp_batch(theta, batch, v, scale, out),
        }
    }

    fn accumulate_hessian(
        &self,
        theta: &[f64],
        x: &Encoded,
        target: usize,
        scale: f64,
        h: &mut DMatrix<f64>,
    ) {
        match self {
            Kernel::Linear(k) => k.accumulate_hessian(theta, x, scale, h),
            Kernel::Mlp(k) => k.accumulate_hessian(theta, x, target, scale, h),
        }
    }

    fn position_grads(
        &self,
        theta: &[f64],
        x: &Encoded,
        target: usize,
    ) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        match self {
            Kernel::Linear(k) => k.position_grads(theta, x, target),
            Kernel::Mlp(k) => k.position_grads(theta, x, target),
        }
    }
}

/// Numerically stable softmax, in place.
pub(crate) fn softmax_in_place(z: &mut [f64]) {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for v in z.iter_mut() {
        *v = (*v - m).exp();
        total += *v;
    }
    for v in z.iter_mut() {
        *v /= total;
    }
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax(p: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in p.iter().enumerate() {
        if v > p[best] {
            best = i;
        }
    }
    best
}

/// Sums `f(i, acc)` over `0..n` in fixed-size chunks, in parallel, then adds
/// the chunk partials in order.
pub(crate) fn chunked_sum<F>(n: usize, dim: usize, f: F) -> Vec<f64>
where
    F: Fn(usize, &mut [f64]) + Sync,
{
    let chunks: Vec<usize> = (0..n).step_by(REDUCE_CHUNK).collect();
    let partials: Vec<Vec<f64>> = chunks
        .par_iter()
        .map(|&start| {
            let mut acc = vec![0.0; dim];
            for i in start..(start + REDUCE_CHUNK).min(n) {
                f(i, &mut acc);
            }
            acc
        })
        .collect();
    let mut total = vec![0.0; dim];
    for p in partials {
        for (t, v) in total.iter_mut().zip(p) {
            *t += v;
        }
    }
    total
}

/// All trainable parameters of a classifier.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub arch: ArchSpec,
    pub theta: Vec<f64>,
    pub layout: ParamLayout,
    pub vocab: Arc<Vocabulary>,
    /// Ridge weight of the objective the parameters were trained on.
    pub l2_lambda: f64,
}

/// A dataset encoded against a model's vocabulary, reused across gradient,
/// Hessian and HVP passes.
#[derive(Debug, Clone)]
pub struct EncodedDataset {
    pub(crate) items: Vec<Encoded>,
}

impl EncodedDataset {
    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn label(&self, i: usize) -> usize {
        self.items[i].label
    }
}

/// Initial parameters: zeros for `linear_bow`, uniform in `[-0.1, 0.1]` for
/// `emb_mlp` (the unknown-token embedding row stays zero).
pub fn init_params(arch: &ArchSpec, vocab: Arc<Vocabulary>, seed: u64) -> Result<ModelParams> {
    arch.validate()?;
    if vocab.size() != arch.vocab_size {
        return Err(Error::invalid(format!(
            "vocabulary has {} ids but the architecture expects {}",
            vocab.size(),
            arch.vocab_size
        )));
    }
    let n = arch.num_params();
    let theta = match arch.family {
        Family::LinearBow => vec![0.0; n],
        Family::EmbMlp => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut theta: Vec<f64> = (0..n).map(|_| rng.gen_range(-0.1..=0.1)).collect();
            theta[..arch.embed_dim].fill(0.0);
            theta
        }
    };
    Ok(ModelParams {
        layout: arch.layout(),
        arch: arch.clone(),
        theta,
        vocab,
        l2_lambda: 0.0,
    })
}

impl ModelParams {
    fn kernel(&self) -> Kernel {
        self.arch.kernel()
    }

    pub fn num_params(&self) -> usize {
        self.theta.len()
    }

    pub(crate) fn encode(&self, example: &Example) -> Result<Encoded> {
        if example.kind != self.arch.expected_kind() {
            return Err(Error::KindMismatch {
                expected: self.arch.expected_kind().as_str(),
            });
        }
        Ok(Encoded::new(example, &self.vocab))
    }

    pub fn encode_dataset(&self, dataset: &Dataset) -> Result<EncodedDataset> {
        let items = dataset
            .iter()
            .map(|e| self.encode(e))
            .collect::<Result<Vec<_>>>()?;
        Ok(EncodedDataset { items })
    }

    /// Class probabilities.
    pub fn forward(&self, example: &Example) -> Result<Vec<f64>> {
        Ok(self.kernel().probs(&self.theta, &self.encode(example)?))
    }

    pub(crate) fn probs_encoded(&self, x: &Encoded) -> Vec<f64> {
        self.kernel().probs(&self.theta, x)
    }

    /// Predicted class; ties go to the lowest index.
    pub fn predict(&self, example: &Example) -> Result<usize> {
        Ok(argmax(&self.forward(example)?))
    }

    /// Cross-entropy `-ln p(target)`, without the L2 term.
    pub fn loss(&self, example: &Example, target: usize) -> Result<f64> {
        self.check_class(target)?;
        let p = self.forward(example)?;
        Ok(-p[target].ln())
    }

    /// Loss against the model's own prediction.
    pub fn loss_wrt_prediction(&self, example: &Example) -> Result<f64> {
        let p = self.forward(example)?;
        Ok(-p[argmax(&p)].ln())
    }

    /// Gradient of [`ModelParams::loss`] with respect to `theta`.
    pub fn grad(&self, example: &Example, target: usize) -> Result<Vec<f64>> {
        self.check_class(target)?;
        Ok(self.grad_encoded(&self.encode(example)?, target))
    }

    /// `s · ∇L(x, target)`; avoids a dense gradient for `linear_bow`.
    pub(crate) fn grad_dot_encoded(&self, x: &Encoded, target: usize, s: &[f64]) -> f64 {
        match self.kernel() {
            Kernel::Linear(k) => k.grad_dot(&self.theta, x, target, s),
            Kernel::Mlp(_) => crate::stats::dot(&self.grad_encoded(x, target), s),
        }
    }

    pub(crate) fn grad_encoded(&self, x: &Encoded, target: usize) -> Vec<f64> {
        let mut g = vec![0.0; self.theta.len()];
        self.kernel()
            .accumulate_grad(&self.theta, x, target, 1.0, &mut g);
        g
    }

    /// Per-position gradients of the prediction loss with respect to the
    /// input vector used at that position, together with that vector.
    ///
    /// For `emb_mlp` the input is the token embedding; for `linear_bow` it is
    /// the one-element count coordinate of the token. Unknown tokens get zero
    /// vectors.
    pub fn grad_wrt_embedding(&self, example: &Example) -> Result<EmbeddingGrads> {
        let x = self.encode(example)?;
        let target = argmax(&self.probs_encoded(&x));
        let (grads, inputs) = self.kernel().position_grads(&self.theta, &x, target);
        Ok(EmbeddingGrads {
            predicted_class: target,
            grads,
            inputs,
        })
    }

    /// `(1/n) Σ loss + (λ/2)‖θ‖²`.
    pub fn objective(&self, data: &EncodedDataset) -> f64 {
        self.objective_and_grad(data).0
    }

    /// Objective and its gradient over an encoded dataset.
    pub fn objective_and_grad(&self, data: &EncodedDataset) -> (f64, Vec<f64>) {
        objective_and_grad(self.kernel(), &self.theta, data, self.l2_lambda)
    }

    /// Dense `(1/n) Σ ∇²L + (l2_lambda + damping) I`, using each example's
    /// own label.
    pub fn hessian(&self, dataset: &Dataset, damping: f64, cap: usize) -> Result<DMatrix<f64>> {
        let data = self.encode_dataset(dataset)?;
        self.hessian_encoded(&data, damping, cap)
    }

    pub fn hessian_encoded(
        &self,
        data: &EncodedDataset,
        damping: f64,
        cap: usize,
    ) -> Result<DMatrix<f64>> {
        let p = self.num_params();
        if p > cap {
            return Err(Error::HessianTooLarge { params: p, cap });
        }
        if data.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let k = self.kernel();
        let mut h = DMatrix::zeros(p, p);
        let scale = 1.0 / data.len() as f64;
        for x in &data.items {
            k.accumulate_hessian(&self.theta, x, x.label, scale, &mut h);
        }
        let sym = (&h + h.transpose()) * 0.5;
        let mut h = sym;
        for i in 0..p {
            h[(i, i)] += self.l2_lambda + damping;
        }
        Ok(h)
    }

    /// `((1/|batch|) Σ ∇²L_j + (l2_lambda + damping) I) v` without forming
    /// the Hessian.
    pub fn hvp(&self, batch: &[(Example, usize)], v: &[f64], damping: f64) -> Result<Vec<f64>> {
        let encoded = batch
            .iter()
            .map(|(e, t)| self.encode(e).map(|x| (x, *t)))
            .collect::<Result<Vec<_>>>()?;
        self.check_len(v)?;
        let mut out: Vec<f64> = v.iter().map(|vi| (self.l2_lambda + damping) * vi).collect();
        if !encoded.is_empty() {
            let scale = 1.0 / encoded.len() as f64;
            self.kernel().accumulate_hvp(
                &self.theta,
                encoded.iter().map(|(x, t)| (x, *t)),
                v,
                scale,
                &mut out,
            );
        }
        Ok(out)
    }

    /// HVP over a subset of an encoded dataset, each example with its own
    /// label. Adds into `out` after overwriting it with the ridge term.
    pub fn hvp_encoded(
        &self,
        data: &EncodedDataset,
        batch: &[usize],
        v: &[f64],
        damping: f64,
        out: &mut [f64],
    ) {
        for (o, vi) in out.iter_mut().zip(v) {
            *o = (self.l2_lambda + damping) * vi;
        }
        if batch.is_empty() {
            return;
        }
        let scale = 1.0 / batch.len() as f64;
        let k = self.kernel();
        match k {
            // the MLP pass is per example and dense, so parallelise over chunks
            Kernel::Mlp(_) if batch.len() > REDUCE_CHUNK => {
                let acc = chunked_sum(batch.len(), v.len(), |j, acc| {
                    let x = &data.items[batch[j]];
                    k.accumulate_hvp(&self.theta, std::iter::once((x, x.label)), v, scale, acc);
                });
                for (o, a) in out.iter_mut().zip(acc) {
                    *o += a;
                }
            }
            _ => {
                let items = batch.iter().map(|&i| (&data.items[i], data.items[i].label));
                k.accumulate_hvp(&self.theta, items, v, scale, out);
            }
        }
    }

    fn check_class(&self, target: usize) -> Result<()> {
        if target >= self.arch.num_classes {
            return Err(Error::invalid(format!(
                "class {target} out of range for {} classes",
                self.arch.num_classes
            )));
        }
        Ok(())
    }

    fn check_len(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.theta.len() {
            return Err(Error::invalid(format!(
                "vector has length {} but the model has {} parameters",
                v.len(),
                self.theta.len()
            )));
        }
        Ok(())
    }
}

fn objective_and_grad(k: Kernel, theta: &[f64], data: &EncodedDataset, l2: f64) -> (f64, Vec<f64>) {
    let n = data.len();
    let p = theta.len();
    let scale = 1.0 / n as f64;
    // the last slot carries the loss so one reduction gives both
    let mut acc = chunked_sum(n, p + 1, |i, acc| {
        let x = &data.items[i];
        let (g, l) = acc.split_at_mut(p);
        l[0] += scale * k.accumulate_grad(theta, x, x.label, scale, g);
    });
    let loss = acc.pop().unwrap_or(0.0);
    let mut sq = 0.0;
    for (g, t) in acc.iter_mut().zip(theta) {
        *g += l2 * t;
        sq += t * t;
    }
    (loss + 0.5 * l2 * sq, acc)
}

/// Output of [`ModelParams::grad_wrt_embedding`].
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingGrads {
    pub predicted_class: usize,
    /// One gradient per token position of the concatenated input.
    pub grads: Vec<Vec<f64>>,
    /// The input vector used at each position.
    pub inputs: Vec<Vec<f64>>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vocab(words: &[&str]) -> Arc<Vocabulary> {
        Arc::new(Vocabulary::from_tokens(words.iter().map(|w| w.to_string())))
    }

    fn single(tokens: &[&str]) -> Example {
        Example::single("x", tokens.iter().map(|t| t.to_string()).collect(), 0).unwrap()
    }

    #[test]
    fn linear_init_is_zero_with_expected_size() {
        let arch = ArchSpec::linear_bow(3, 2, false);
        let p = init_params(&arch, vocab(&["a", "b"]), 1).unwrap();
        assert_eq!(p.theta, vec![0.0; 8]);
        assert_eq!(p.layout.total(), 8);
    }

    #[test]
    fn uniform_prediction_has_ln2_loss() {
        let arch = ArchSpec::linear_bow(3, 2, false);
        let p = init_params(&arch, vocab(&["a", "b"]), 1).unwrap();
        let ex = single(&["a", "b", "zzz"]);
        assert_eq!(p.forward(&ex).unwrap(), vec![0.5, 0.5]);
        assert!((p.loss(&ex, 1).unwrap() - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn mlp_init_depends_on_seed_and_keeps_unknown_row_zero() {
        let arch = ArchSpec::emb_mlp(4, 2, true).with_dims(3, 5);
        let v = vocab(&["a", "b", "c"]);
        let a = init_params(&arch, v.clone(), 1).unwrap();
        let b = init_params(&arch, v.clone(), 1).unwrap();
        let c = init_params(&arch, v, 2).unwrap();
        assert_eq!(a.theta, b.theta);
        assert_ne!(a.theta, c.theta);
        assert!(a.theta[..3].iter().all(|&t| t == 0.0));
        assert!(a.theta.iter().all(|t| t.abs() <= 0.1));
        assert_eq!(a.layout.total(), a.theta.len());
    }

    #[test]
    fn kind_mismatch_is_reported() {
        let arch = ArchSpec::linear_bow(3, 2, true);
        let p = init_params(&arch, vocab(&["a", "b"]), 1).unwrap();
        assert!(matches!(
            p.forward(&single(&["a"])),
            Err(Error::KindMismatch { .. })
        ));
    }

    #[test]
    fn argmax_prefers_lowest_index_on_ties() {
        assert_eq!(argmax(&[0.5, 0.5]), 0);
        assert_eq!(argmax(&[0.2, 0.4, 0.4]), 1);
    }
}
