//! Explicit failure of right uniform continuity of a projection on `(L², ∗)`.

use std::sync::Arc;

use serde::Serialize;

use crate::liegroup::{AlgebraElement, LieContext};
use crate::pathspace::{star, StepPath};
use crate::report::f17;
use crate::{Error, Result};

#[derive(Clone, Debug, Serialize)]
pub struct Witness {
    pub group: String,
    pub n: usize,
    #[serde(with = "f17")]
    pub eps: f64,
    #[serde(with = "f17")]
    pub radius: f64,
    /// Index of the basis element `Z` with `[Z, y] ≠ 0`.
    pub z_index: usize,
    #[serde(with = "f17")]
    pub f_norm: f64,
    #[serde(with = "f17")]
    pub growth: f64,
    #[serde(skip)]
    pub f: Option<StepPath>,
}

/// Builds `f = ε·Z` (constant, `Z` the first basis element not commuting with
/// `y`) and returns `‖P(f ∗ R·ȳ) − R·ȳ‖₂`, where `ȳ` is the constant path at
/// `y` and `P` the orthogonal projection onto its span.
pub fn sin_witness(ctx: Arc<LieContext>, y: &AlgebraElement, radius: f64, eps: f64, n: usize) -> Result<Witness> {
    if ctx.is_abelian() {
        return Err(Error::Argument(format!("{} is abelian: every element is central", ctx.family())));
    }
    if !(eps >= 0.0 && eps.is_finite()) || !radius.is_finite() {
        return Err(Error::Argument(format!("need finite ε ≥ 0 and R, got ε = {eps}, R = {radius}")));
    }
    if y.dim() != ctx.algebra_dim() {
        return Err(Error::Argument(format!("y has {} coordinates, expected {}", y.dim(), ctx.algebra_dim())));
    }
    let my = ctx.to_matrix(y);
    let scale = my.norm();
    let z_index = (0..ctx.algebra_dim())
        .find(|&i| {
            let b = &ctx.basis()[i];
            (b * &my - &my * b).norm() > 1e-12 * scale
        })
        .ok_or_else(|| Error::Argument("y is central".into()))?;
    let f = StepPath::constant(ctx.clone(), n, &ctx.basis_element(z_index).scale(eps));
    let ybar = StepPath::constant(ctx.clone(), n, y);
    let target = ybar.scale(radius);
    let growth = if f.is_zero() {
        0.0
    } else {
        let moved = star(&f, &target)?;
        let coef = moved.inner(&ybar)? / ybar.inner(&ybar)?;
        ybar.scale(coef).sub(&target)?.l2_norm()
    };
    Ok(Witness { group: ctx.family().to_string(), n, eps, radius, z_index, f_norm: f.l2_norm(), growth, f: Some(f) })
}
