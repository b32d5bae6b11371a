//! Embedding + one-hidden-layer MLP classifier.
//!
//! Layout: embeddings (vocab x embed, row 0 is the unknown token and stays
//! zero), `w1` (hidden x features), `b1`, `w2` (classes x hidden), `b2`.
//! Single inputs use the mean of known-token embeddings as features; pairs use
//! `[p, h, p*h, |p-h|]` over the premise and hypothesis means.
//!
//! The gradient code is generic over [`Real`] so that the same reverse pass run
//! on dual numbers gives exact Hessian-vector products.

use nalgebra::DMatrix;

use super::dual::{sign, Dual, Real};
use super::encode::Encoded;

#[derive(Debug, Clone, Copy)]
pub(crate) struct EmbMlp {
    pub vocab: usize,
    pub classes: usize,
    pub embed: usize,
    pub hidden: usize,
    pub pair: bool,
}

pub(crate) struct Offsets {
    pub w1: usize,
    pub b1: usize,
    pub w2: usize,
    pub b2: usize,
    pub end: usize,
}

struct Forward<T> {
    pa: Vec<T>,
    pb: Vec<T>,
    na: usize,
    nb: usize,
    features: Vec<T>,
    hidden: Vec<T>,
    probs: Vec<T>,
    loss: T,
}

impl EmbMlp {
    pub fn num_features(&self) -> usize {
        if self.pair {
            4 * self.embed
        } else {
            self.embed
        }
    }

    pub fn offsets(&self) -> Offsets {
        let f = self.num_features();
        let w1 = self.vocab * self.embed;
        let b1 = w1 + self.hidden * f;
        let w2 = b1 + self.hidden;
        let b2 = w2 + self.classes * self.hidden;
        Offsets {
            w1,
            b1,
            w2,
            b2,
            end: b2 + self.classes,
        }
    }

    pub fn num_params(&self) -> usize {
        self.offsets().end
    }

    fn pool<T: Real>(&self, theta: &[T], ids: &[u32]) -> (Vec<T>, usize) {
        let d = self.embed;
        let mut acc = vec![T::zero(); d];
        let mut n = 0;
        for &id in ids.iter().filter(|&&id| id != 0) {
            n += 1;
            let row = &theta[id as usize * d..(id as usize + 1) * d];
            for j in 0..d {
                acc[j] += row[j];
            }
        }
        if n > 0 {
            let inv = 1.0 / n as f64;
            for a in &mut acc {
                *a = a.scale(inv);
            }
        }
        (acc, n)
    }

    fn forward<T: Real>(&self, theta: &[T], x: &Encoded, target: usize) -> Forward<T> {
        let o = self.offsets();
        let (pa, na) = self.pool(theta, &x.ids_a);
        let (pb, nb) = match &x.ids_b {
            Some(b) if self.pair => self.pool(theta, b),
            _ => (Vec::new(), 0),
        };
        let features: Vec<T> = if self.pair {
            let mut f = Vec::with_capacity(4 * self.embed);
            f.extend_from_slice(&pa);
            f.extend_from_slice(&pb);
            f.extend(pa.iter().zip(&pb).map(|(&a, &b)| a * b));
            f.extend(pa.iter().zip(&pb).map(|(&a, &b)| (a - b).abs()));
            f
        } else {
            pa.clone()
        };
        let nf = features.len();
        let hidden: Vec<T> = (0..self.hidden)
            .map(|h| {
                let row = &theta[o.w1 + h * nf..o.w1 + (h + 1) * nf];
                let mut acc = theta[o.b1 + h];
                for (w, f) in row.iter().zip(&features) {
                    acc += *w * *f;
                }
                acc.tanh()
            })
            .collect();
        let logits: Vec<T> = (0..self.classes)
            .map(|c| {
                let row = &theta[o.w2 + c * self.hidden..o.w2 + (c + 1) * self.hidden];
                let mut acc = theta[o.b2 + c];
                for (w, h) in row.iter().zip(&hidden) {
                    acc += *w * *h;
                }
                acc
            })
            .collect();
        let m = logits
            .iter()
            .map(|z| z.re())
            .fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<T> = logits.iter().map(|&z| (z - T::cst(m)).exp()).collect();
        let mut total = T::zero();
        for &e in &exps {
            total += e;
        }
        let probs: Vec<T> = exps.iter().map(|&e| e / total).collect();
        let loss = total.ln() + T::cst(m) - logits[target];
        Forward {
            pa,
            pb,
            na,
            nb,
            features,
            hidden,
            probs,
            loss,
        }
    }

    pub fn probs(&self, theta: &[f64], x: &Encoded) -> Vec<f64> {
        self.forward(theta, x, 0).probs
    }

    /// Gradient w.r.t. the pooled premise / hypothesis vectors.
    fn backward<T: Real>(
        &self,
        theta: &[T],
        fw: &Forward<T>,
        target: usize,
        scale: f64,
        grad: &mut [T],
    ) -> (Vec<T>, Vec<T>) {
        let o = self.offsets();
        let (d, nh, nf) = (self.embed, self.hidden, fw.features.len());
        let mut dz = fw.probs.clone();
        dz[target] = dz[target] - T::cst(1.0);
        let mut dhid = vec![T::zero(); nh];
        for c in 0..self.classes {
            let g = dz[c];
            grad[o.b2 + c] += g.scale(scale);
            for h in 0..nh {
                grad[o.w2 + c * nh + h] += (g * fw.hidden[h]).scale(scale);
                dhid[h] += theta[o.w2 + c * nh + h] * g;
            }
        }
        let mut df = vec![T::zero(); nf];
        for h in 0..nh {
            let t = fw.hidden[h];
            let dpre = dhid[h] * (T::cst(1.0) - t * t);
            grad[o.b1 + h] += dpre.scale(scale);
            let row = o.w1 + h * nf;
            for f in 0..nf {
                grad[row + f] += (dpre * fw.features[f]).scale(scale);
                df[f] += theta[row + f] * dpre;
            }
        }
        if !self.pair {
            return (df, Vec::new());
        }
        let mut dpa = vec![T::zero(); d];
        let mut dpb = vec![T::zero(); d];
        for j in 0..d {
            let s = T::cst(sign((fw.pa[j] - fw.pb[j]).re()));
            dpa[j] = df[j] + df[2 * d + j] * fw.pb[j] + df[3 * d + j] * s;
            dpb[j] = df[d + j] + df[2 * d + j] * fw.pa[j] - df[3 * d + j] * s;
        }
        (dpa, dpb)
    }

    fn scatter_embedding<T: Real>(
        &self,
        ids: &[u32],
        n: usize,
        dpool: &[T],
        scale: f64,
        grad: &mut [T],
    ) {
        if n == 0 {
            return;
        }
        let d = self.embed;
        let w = scale / n as f64;
        for &id in ids.iter().filter(|&&id| id != 0) {
            let row = id as usize * d;
            for j in 0..d {
                grad[row + j] += dpool[j].scale(w);
            }
        }
    }

    /// Adds `scale * ∇L(x, target)` into `grad`; returns the loss.
    pub fn accumulate_grad<T: Real>(
        &self,
        theta: &[T],
        x: &Encoded,
        target: usize,
        scale: f64,
        grad: &mut [T],
    ) -> T {
        let fw = self.forward(theta, x, target);
        let (dpa, dpb) = self.backward(theta, &fw, target, scale, grad);
        self.scatter_embedding(&x.ids_a, fw.na, &dpa, scale, grad);
        if let Some(b) = &x.ids_b {
            if self.pair {
                self.scatter_embedding(b, fw.nb, &dpb, scale, grad);
            }
        }
        fw.loss
    }

    /// Parameters the loss of `x` depends on: embedding rows of its known
    /// tokens and every dense weight.
    pub fn active_params(&self, x: &Encoded) -> Vec<usize> {
        let d = self.embed;
        let o = self.offsets();
        let mut out: Vec<usize> = x
            .counts
            .iter()
            .flat_map(|&(id, _)| (id as usize * d)..(id as usize + 1) * d)
            .collect();
        out.extend(o.w1..o.end);
        out
    }

    /// Adds `scale * ∇²L(x, target) v` for every example in `batch`.
    pub fn accumulate_hvp_batch<'a>(
        &self,
        theta: &[f64],
        batch: impl Iterator<Item = (&'a Encoded, usize)>,
        v: &[f64],
        scale: f64,
        out: &mut [f64],
    ) {
        let tdual: Vec<Dual> = theta
            .iter()
            .zip(v)
            .map(|(&t, &e)| Dual::new(t, e))
            .collect();
        let mut g = vec![Dual::default(); theta.len()];
        for (x, target) in batch {
            self.accumulate_grad(&tdual, x, target, scale, &mut g);
        }
        for (o, gi) in out.iter_mut().zip(&g) {
            *o += gi.eps;
        }
    }

    /// Adds `scale * ∇²L(x, target)` into `h`, one dual reverse pass per
    /// active parameter.
    pub fn accumulate_hessian(
        &self,
        theta: &[f64],
        x: &Encoded,
        target: usize,
        scale: f64,
        h: &mut DMatrix<f64>,
    ) {
        let active = self.active_params(x);
        let mut tdual: Vec<Dual> = theta.iter().map(|&t| Dual::new(t, 0.0)).collect();
        let mut g = vec![Dual::default(); theta.len()];
        for &k in &active {
            tdual[k].eps = 1.0;
            for &i in &active {
                g[i] = Dual::default();
            }
            self.accumulate_grad(&tdual, x, target, scale, &mut g);
            for &i in &active {
                h[(i, k)] += g[i].eps;
            }
            tdual[k].eps = 0.0;
        }
    }

    /// Per-position gradient w.r.t. the embedding used at that position, and
    /// that embedding. Unknown tokens have no embedding and get zeros.
    pub fn position_grads(
        &self,
        theta: &[f64],
        x: &Encoded,
        target: usize,
    ) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let d = self.embed;
        let fw = self.forward(theta, x, target);
        let mut sink = vec![0.0; theta.len()];
        let (dpa, dpb) = self.backward(theta, &fw, target, 1.0, &mut sink);
        let mut grads = Vec::with_capacity(x.num_positions());
        let mut inputs = Vec::with_capacity(x.num_positions());
        let mut push_side = |ids: &[u32], n: usize, dpool: &[f64]| {
            for &id in ids {
                if id == 0 || n == 0 {
                    grads.push(vec![0.0; d]);
                    inputs.push(vec![0.0; d]);
                } else {
                    grads.push(dpool.iter().map(|g| g / n as f64).collect());
                    inputs.push(theta[id as usize * d..(id as usize + 1) * d].to_vec());
                }
            }
        };
        push_side(&x.ids_a, fw.na, &dpa);
        if let Some(b) = &x.ids_b {
            if self.pair {
                push_side(b, fw.nb, &dpb);
            } else {
                push_side(b, 0, &dpb);
            }
        }
        (grads, inputs)
    }
}
