//! Dense symmetric positive-definite solves for `H⁻¹ v`.

use log::warn;
use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::corpus::Dataset;
use crate::error::{Error, Result};
use crate::model::{ModelParams, DEFAULT_HESSIAN_CAP};
use crate::stats::norm;

/// Relative residual the solver aims for.
pub const RESIDUAL_TOL: f64 = 1e-8;

/// Cholesky factor of a damped Hessian, kept for repeated solves.
#[derive(Debug, Clone)]
pub struct FactoredHessian {
    matrix: DMatrix<f64>,
    factor: Cholesky<f64, Dyn>,
}

impl FactoredHessian {
    /// Factors `h + damping I`.
    pub fn new(mut h: DMatrix<f64>, damping: f64) -> Result<Self> {
        for i in 0..h.nrows() {
            h[(i, i)] += damping;
        }
        let factor = Cholesky::new(h.clone()).ok_or(Error::NotPositiveDefinite { damping })?;
        Ok(FactoredHessian { matrix: h, factor })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// Solves with up to three steps of iterative refinement.
    pub fn solve(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.dim() {
            return Err(Error::invalid(format!(
                "vector has length {} but the Hessian has dimension {}",
                v.len(),
                self.dim()
            )));
        }
        let b = DVector::from_column_slice(v);
        let bn = norm(v);
        let mut x = self.factor.solve(&b);
        if bn == 0.0 {
            return Ok(vec![0.0; v.len()]);
        }
        let mut rel = f64::INFINITY;
        for _ in 0..3 {
            let r = &b - &self.matrix * &x;
            rel = r.norm() / bn;
            if rel <= RESIDUAL_TOL {
                break;
            }
            x += self.factor.solve(&r);
        }
        if rel > RESIDUAL_TOL {
            let r = &b - &self.matrix * &x;
            rel = r.norm() / bn;
        }
        if !rel.is_finite() {
            return Err(Error::NotPositiveDefinite { damping: 0.0 });
        }
        if rel > RESIDUAL_TOL {
            warn!("dense solve residual {rel:.3e} is above {RESIDUAL_TOL:e}");
        }
        Ok(x.as_slice().to_vec())
    }
}

/// Solves `(H + (l2_lambda + damping) I) x = v` with the dense objective
/// Hessian of `params` over `dataset`.
pub fn inverse_hvp_exact(
    params: &ModelParams,
    dataset: &Dataset,
    v: &[f64],
    damping: f64,
) -> Result<Vec<f64>> {
    let h = params.hessian(dataset, 0.0, DEFAULT_HESSIAN_CAP)?;
    FactoredHessian::new(h, damping)?.solve(v)
}
