//! Bounded test functionals on `L²((0,1), 𝔤)` and bounded functions on `G`.

use serde::{Deserialize, Serialize};

use crate::liegroup::GroupElement;
use crate::pathspace::{lcm, StepPath};
use crate::{Error, Result};

/// `F(f) = φ(⟨f, h⟩₂)` for a bounded Lipschitz profile `φ`.
#[derive(Clone, Debug, PartialEq)]
pub enum TestFunctional {
    /// `cos⟨f, h⟩₂`.
    Cosine { h: StepPath },
    /// `exp(−scale·⟨f, w⟩₂²)`.
    GaussWindow { w: StepPath, scale: f64 },
}

impl TestFunctional {
    pub fn cosine(h: StepPath) -> Self {
        TestFunctional::Cosine { h }
    }

    pub fn gauss_window(w: StepPath, scale: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::Argument(format!("window scale {scale} must be positive")));
        }
        Ok(TestFunctional::GaussWindow { w, scale })
    }

    fn direction(&self) -> &StepPath {
        match self {
            TestFunctional::Cosine { h } => h,
            TestFunctional::GaussWindow { w, .. } => w,
        }
    }

    pub fn bound(&self) -> f64 {
        1.0
    }

    /// Lipschitz constant with respect to the L² norm.
    pub fn lipschitz(&self) -> f64 {
        match self {
            TestFunctional::Cosine { h } => h.l2_norm(),
            TestFunctional::GaussWindow { w, scale } => (2.0 * scale / std::f64::consts::E).sqrt() * w.l2_norm(),
        }
    }

    fn profile(&self, x: f64) -> f64 {
        match self {
            TestFunctional::Cosine { .. } => x.cos(),
            TestFunctional::GaussWindow { scale, .. } => (-scale * x * x).exp(),
        }
    }

    pub fn eval(&self, f: &StepPath) -> Result<f64> {
        Ok(self.profile(f.inner(self.direction())?))
    }

    /// The functional restricted to `V_n`, evaluated on raw block coordinates.
    pub fn on_grid(&self, n: usize) -> Result<GridFunctional<'_>> {
        Ok(GridFunctional { functional: self, n, direction: project(self.direction(), n)? })
    }
}

/// Orthogonal projection of `h` onto `V_n`, as block coordinates.
fn project(h: &StepPath, n: usize) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::Argument("grid must have at least one block".into()));
    }
    let m = lcm(h.n(), n);
    let fine = h.refine(m / h.n());
    let per = m / n;
    if per == 1 {
        return Ok(fine.into_data());
    }
    let d = h.algebra_dim();
    let mut out = vec![0.0; n * d];
    for (c, block) in fine.data().chunks(d).enumerate() {
        let dst = &mut out[(c / per) * d..(c / per + 1) * d];
        dst.iter_mut().zip(block).for_each(|(o, v)| *o += v);
    }
    out.iter_mut().for_each(|v| *v /= per as f64);
    Ok(out)
}

/// A [`TestFunctional`] bound to a fixed grid of `n` blocks.
#[derive(Clone, Debug)]
pub struct GridFunctional<'a> {
    functional: &'a TestFunctional,
    n: usize,
    direction: Vec<f64>,
}

impl GridFunctional<'_> {
    pub fn n(&self) -> usize {
        self.n
    }

    /// `⟨x, h⟩₂` for block coordinates `x` on this grid.
    pub fn pairing(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.direction.len());
        x.iter().zip(&self.direction).map(|(a, b)| a * b).sum::<f64>() / self.n as f64
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.functional.profile(self.pairing(x))
    }
}

/// Bounded functions on the compact factor `G`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum GroupFunctional {
    /// The constant 1.
    #[default]
    One,
    /// `(1 + tr(x)/m)/2 ∈ [0, 1]` for `m×m` matrices.
    TraceWindow,
    /// `cos(scale·tr(x))`.
    TraceCos { scale: f64 },
}

impl GroupFunctional {
    pub fn eval(&self, x: &GroupElement) -> f64 {
        match self {
            GroupFunctional::One => 1.0,
            GroupFunctional::TraceWindow => (1.0 + x.trace() / x.matrix.nrows() as f64) / 2.0,
            GroupFunctional::TraceCos { scale } => (scale * x.trace()).cos(),
        }
    }

    pub fn bound(&self) -> f64 {
        1.0
    }
}
