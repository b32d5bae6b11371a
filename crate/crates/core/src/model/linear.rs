//! Multinomial logistic regression over bag-of-words counts.
//!
//! Parameters: `W` (vocab x classes, row-major) followed by the bias `b`.
//! Logits are `counts · W + b`.

use nalgebra::DMatrix;

use super::encode::Encoded;
use super::softmax_in_place;

#[derive(Debug, Clone, Copy)]
pub(crate) struct LinearBow {
    pub vocab: usize,
    pub classes: usize,
}

impl LinearBow {
    pub fn num_params(&self) -> usize {
        self.vocab * self.classes + self.classes
    }

    fn bias(&self) -> usize {
        self.vocab * self.classes
    }

    pub fn logits(&self, theta: &[f64], x: &Encoded, z: &mut [f64]) {
        let c = self.classes;
        z.copy_from_slice(&theta[self.bias()..self.bias() + c]);
        for &(t, n) in &x.counts {
            let row = &theta[t as usize * c..(t as usize + 1) * c];
            for k in 0..c {
                z[k] += n * row[k];
            }
        }
    }

    pub fn probs(&self, theta: &[f64], x: &Encoded) -> Vec<f64> {
        let mut p = vec![0.0; self.classes];
        self.logits(theta, x, &mut p);
        softmax_in_place(&mut p);
        p
    }

    /// Adds `scale * ∇L(x, target)` into `grad`; returns the loss.
    pub fn accumulate_grad(
        &self,
        theta: &[f64],
        x: &Encoded,
        target: usize,
        scale: f64,
        grad: &mut [f64],
    ) -> f64 {
        let c = self.classes;
        let mut dz = self.probs(theta, x);
        let loss = -dz[target].ln();
        dz[target] -= 1.0;
        for &(t, n) in &x.counts {
            let row = &mut grad[t as usize * c..(t as usize + 1) * c];
            for k in 0..c {
                row[k] += scale * n * dz[k];
            }
        }
        let b = self.bias();
        for k in 0..c {
            grad[b + k] += scale * dz[k];
        }
        loss
    }

    /// `s · ∇L(x, target)` without materialising the gradient.
    pub fn grad_dot(&self, theta: &[f64], x: &Encoded, target: usize, s: &[f64]) -> f64 {
        let c = self.classes;
        let mut dz = self.probs(theta, x);
        dz[target] -= 1.0;
        let b = self.bias();
        let mut proj: Vec<f64> = s[b..b + c].to_vec();
        for &(t, n) in &x.counts {
            let row = &s[t as usize * c..(t as usize + 1) * c];
            for k in 0..c {
                proj[k] += n * row[k];
            }
        }
        proj.iter().zip(&dz).map(|(a, b)| a * b).sum()
    }

    /// Adds `scale * ∇²L(x) v` into `out`. The cross-entropy Hessian of a
    /// linear model does not depend on the target.
    pub fn accumulate_hvp(
        &self,
        theta: &[f64],
        x: &Encoded,
        v: &[f64],
        scale: f64,
        out: &mut [f64],
    ) {
        let c = self.classes;
        let p = self.probs(theta, x);
        let b = self.bias();
        // directional change of the logits
        let mut dz: Vec<f64> = v[b..b + c].to_vec();
        for &(t, n) in &x.counts {
            let row = &v[t as usize * c..(t as usize + 1) * c];
            for k in 0..c {
                dz[k] += n * row[k];
            }
        }
        let pd: f64 = p.iter().zip(&dz).map(|(a, b)| a * b).sum();
        let sdz: Vec<f64> = (0..c).map(|k| scale * p[k] * (dz[k] - pd)).collect();
        for &(t, n) in &x.counts {
            let row = &mut out[t as usize * c..(t as usize + 1) * c];
            for k in 0..c {
                row[k] += n * sdz[k];
            }
        }
        for k in 0..c {
            out[b + k] += sdz[k];
        }
    }

    /// Adds `scale * ∇²L(x)` into the dense matrix `h`.
    pub fn accumulate_hessian(&self, theta: &[f64], x: &Encoded, scale: f64, h: &mut DMatrix<f64>) {
        let c = self.classes;
        let p = self.probs(theta, x);
        let b = self.bias();
        // softmax Jacobian S = diag(p) - p pᵀ
        let s: Vec<f64> = (0..c * c)
            .map(|ij| {
                let (i, j) = (ij / c, ij % c);
                scale * (if i == j { p[i] } else { 0.0 } - p[i] * p[j])
            })
            .collect();
        let mut feats: Vec<(usize, f64)> =
            x.counts.iter().map(|&(t, n)| (t as usize * c, n)).collect();
        feats.push((b, 1.0));
        for &(ri, xi) in &feats {
            for &(rj, xj) in &feats {
                let w = xi * xj;
                for i in 0..c {
                    for j in 0..c {
                        h[(ri + i, rj + j)] += w * s[i * c + j];
                    }
                }
            }
        }
    }

    /// Per-position gradient of the loss w.r.t. that token's count coordinate,
    /// and the coordinate's value. Unknown tokens contribute nothing.
    pub fn position_grads(
        &self,
        theta: &[f64],
        x: &Encoded,
        target: usize,
    ) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let c = self.classes;
        let mut dz = self.probs(theta, x);
        dz[target] -= 1.0;
        let mut grads = Vec::with_capacity(x.num_positions());
        let mut inputs = Vec::with_capacity(x.num_positions());
        for id in x.positions() {
            if id == 0 {
                grads.push(vec![0.0]);
                inputs.push(vec![0.0]);
                continue;
            }
            let row = &theta[id as usize * c..(id as usize + 1) * c];
            grads.push(vec![row.iter().zip(&dz).map(|(w, d)| w * d).sum()]);
            inputs.push(vec![x.count_of(id)]);
        }
        (grads, inputs)
    }
}
