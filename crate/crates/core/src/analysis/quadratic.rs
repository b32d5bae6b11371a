//! Least-squares quadratic fits of influence against an artifact feature.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Condition number of the design above which it is treated as singular.
pub const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitKind {
    /// Unique least-squares solution.
    Full,
    /// Numerically singular design (e.g. a binary feature, where `x² = x`);
    /// the minimum-norm least-squares solution is reported.
    MinNorm,
    /// Every `x` is equal; no slope or curvature is identifiable.
    Degenerate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadFit {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub r2: f64,
    pub kind: FitKind,
    pub condition: f64,
}

/// Fits `z ≈ a x² + b x + c`.
pub fn quadratic_fit(xs: &[f64], zs: &[f64]) -> Result<QuadFit> {
    if xs.len() != zs.len() {
        return Err(Error::invalid("xs and zs differ in length"));
    }
    if xs.len() < 3 {
        return Err(Error::invalid("a quadratic fit needs at least 3 points"));
    }
    if xs.iter().chain(zs).any(|v| !v.is_finite()) {
        return Err(Error::invalid("non-finite value in quadratic fit input"));
    }
    let n = xs.len();
    let zbar = zs.iter().sum::<f64>() / n as f64;
    let sst: f64 = zs.iter().map(|z| (z - zbar).powi(2)).sum();
    if xs.iter().all(|&x| x == xs[0]) {
        return Ok(QuadFit {
            a: f64::NAN,
            b: f64::NAN,
            c: zbar,
            r2: 0.0,
            kind: FitKind::Degenerate,
            condition: f64::INFINITY,
        });
    }
    let design = DMatrix::from_fn(n, 3, |i, j| match j {
        0 => xs[i] * xs[i],
        1 => xs[i],
        _ => 1.0,
    });
    let z = DVector::from_column_slice(zs);
    let svd = design.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let condition = if smin > 0.0 {
        smax / smin
    } else {
        f64::INFINITY
    };
    let (coef, kind) = if condition > MAX_CONDITION {
        let eps = smax * MAX_CONDITION.recip();
        let sol = svd
            .solve(&z, eps)
            .map_err(|e| Error::invalid(e.to_string()))?;
        (sol, FitKind::MinNorm)
    } else {
        let qr = design.clone().qr();
        let qtz = qr.q().transpose() * &z;
        let sol = qr
            .r()
            .solve_upper_triangular(&qtz)
            .ok_or_else(|| Error::invalid("singular triangular factor"))?;
        (sol, FitKind::Full)
    };
    let fitted = &design * &coef;
    let sse: f64 = fitted.iter().zip(zs).map(|(f, z)| (z - f).powi(2)).sum();
    let r2 = if sst == 0.0 { 1.0 } else { 1.0 - sse / sst };
    Ok(QuadFit {
        a: coef[0],
        b: coef[1],
        c: coef[2],
        r2,
        kind,
        condition,
    })
}
