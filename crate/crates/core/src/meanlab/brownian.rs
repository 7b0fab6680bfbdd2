//! Brownian paths on `G` and their asymptotic left invariance.

use std::sync::Arc;

use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::liegroup::{GroupElement, LieContext};
use crate::pathspace::{GroupPath, PathClass};
use crate::report::f17;
use crate::rng::{par_samples, stream_id, Rng};
use crate::stats::{ks_critical_two, ks_two_sample};
use crate::{Error, Result};

use super::{run_cell, Cell, DefectReport, McOptions};

const BROWNIAN: u64 = 5;
const KS_WALK: u64 = 6;
const KS_HAAR: u64 = 7;

/// Diffusion time `t` on `[0, 1]`, resolved by `K` steps.
#[derive(Clone, Debug)]
pub struct BrownianSpec {
    pub ctx: Arc<LieContext>,
    pub t: f64,
    pub steps: usize,
}

impl BrownianSpec {
    pub fn new(ctx: Arc<LieContext>, t: f64, steps: usize) -> Result<Self> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::Argument(format!("diffusion time {t} must be positive")));
        }
        if steps < 2 {
            return Err(Error::Argument(format!("need at least 2 steps, got {steps}")));
        }
        Ok(Self { ctx, t, steps })
    }
}

/// A based path with `g_{k+1} = exp(√(t/K)·ξ_k)·g_k`, `ξ_k` standard Gaussian in
/// algebra coordinates.
pub fn brownian_sample(spec: &BrownianSpec, rng: &mut Rng) -> GroupPath {
    let ctx = &spec.ctx;
    let d = ctx.algebra_dim();
    let sd = (spec.t / spec.steps as f64).sqrt();
    let mut nodes = Vec::with_capacity(spec.steps + 1);
    let mut x = ctx.identity();
    nodes.push(x.clone());
    let mut xi = vec![0.0; d];
    for _ in 0..spec.steps {
        for v in xi.iter_mut() {
            *v = sd * rng.sample::<f64, _>(StandardNormal);
        }
        x = ctx.repair(ctx.exp_coords(&xi).mul(&x));
        nodes.push(x.clone());
    }
    GroupPath::from_nodes_unchecked(ctx.clone(), nodes, PathClass::BasedPath)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ObservableKind {
    Constant {
        value: f64,
    },
    /// `tr(y)/m ∈ [−1, 1]`.
    TraceLinear,
    /// `cos(scale·tr(y))`.
    TraceCos {
        scale: f64,
    },
}

/// A bounded function of the path value at `time ∈ [0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Observable {
    pub kind: ObservableKind,
    pub time: f64,
}

impl Observable {
    pub fn at_end(kind: ObservableKind) -> Self {
        Self { kind, time: 1.0 }
    }

    fn apply(&self, y: &GroupElement) -> f64 {
        match self.kind {
            ObservableKind::Constant { value } => value,
            ObservableKind::TraceLinear => y.trace() / y.matrix.nrows() as f64,
            ObservableKind::TraceCos { scale } => (scale * y.trace()).cos(),
        }
    }
}

/// For each `t`, the mean of `obs(g⁻¹·x) − obs(x)` over Brownian paths `x`.
pub fn brownian_defect(
    g: &GroupPath,
    obs: &Observable,
    t_list: &[f64],
    steps: usize,
    opts: &McOptions,
) -> Result<Vec<DefectReport>> {
    let ctx = g.ctx().clone();
    let g_inv = g.eval(obs.time)?.inverse();
    t_list
        .iter()
        .map(|&t| {
            let spec = BrownianSpec::new(ctx.clone(), t, steps)?;
            let cell =
                Cell { experiment: "brownian", group: ctx.family().to_string(), n: steps, radius: t, schedule: None };
            let tag = stream_id(&[BROWNIAN, t.to_bits()]);
            let rep = run_cell(cell, tag, opts, |rng| {
                let x = brownian_sample(&spec, rng);
                match x.eval(obs.time) {
                    Ok(y) => obs.apply(&g_inv.mul(&y)) - obs.apply(&y),
                    Err(_) => f64::NAN,
                }
            })?;
            if rep.estimate.is_nan() {
                return Err(Error::Domain(format!("Brownian path too coarse to interpolate at t = {t}")));
            }
            Ok(rep)
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct KsReport {
    #[serde(with = "f17")]
    pub statistic: f64,
    #[serde(with = "f17")]
    pub critical: f64,
    #[serde(with = "f17")]
    pub alpha: f64,
    pub m: usize,
    pub pass: bool,
}

/// Two-sample KS test of `tr x(1)` for Brownian paths against `tr h` for
/// Haar elements `h`, `m` draws each.
pub fn haar_ks(spec: &BrownianSpec, m: usize, seed: u64, alpha: f64) -> Result<KsReport> {
    if m < 2 {
        return Err(Error::Argument("need at least two draws".into()));
    }
    let walk = par_samples(m, seed, stream_id(&[KS_WALK, spec.t.to_bits(), spec.steps as u64]), |rng| {
        let x = brownian_sample(spec, rng);
        x.node(spec.steps).trace()
    });
    let haar = par_samples(m, seed, stream_id(&[KS_HAAR]), |rng| spec.ctx.haar_sample(rng).trace());
    let statistic = ks_two_sample(&walk, &haar);
    let critical = ks_critical_two(m, m, alpha);
    Ok(KsReport { statistic, critical, alpha, m, pass: statistic < critical })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    #[test]
    fn vanishing_diffusion_stays_near_identity() {
        let ctx = Arc::new(LieContext::so3());
        let spec = BrownianSpec::new(ctx.clone(), 1e-8, 64).unwrap();
        let x = brownian_sample(&spec, &mut seeded(1));
        let max = x.nodes().iter().map(|g| g.dist(&ctx.identity())).fold(0.0, f64::max);
        assert!(max <= 1e-3);
        assert!(x.satisfies_based(0.0));
    }

    #[test]
    fn nodes_are_group_members() {
        for fam in ["so3", "so5", "su2"] {
            let ctx = Arc::new(LieContext::new(crate::liegroup::Family::parse(fam).unwrap()).unwrap());
            let spec = BrownianSpec::new(ctx.clone(), 4.0, 50).unwrap();
            let x = brownian_sample(&spec, &mut seeded(2));
            assert!(x.membership_defect() <= 10.0 * ctx.tol());
        }
    }

    #[test]
    fn trivial_cases_are_exact() {
        let ctx = Arc::new(LieContext::so3());
        let opts = McOptions::new(200, 3);
        let e = GroupPath::constant(ctx.clone(), ctx.identity(), 8).unwrap();
        let obs = Observable::at_end(ObservableKind::TraceLinear);
        for rep in brownian_defect(&e, &obs, &[1.0, 2.0], 16, &opts).unwrap() {
            assert_eq!(rep.estimate, 0.0);
        }
        let g = GroupPath::geodesic(ctx.clone(), &ctx.basis_element(0).scale(2.0), 8).unwrap();
        let c = Observable::at_end(ObservableKind::Constant { value: 0.3 });
        for rep in brownian_defect(&g, &c, &[1.0], 16, &opts).unwrap() {
            assert_eq!(rep.estimate, 0.0);
        }
    }

    #[test]
    fn rejects_bad_specs() {
        let ctx = Arc::new(LieContext::so3());
        assert!(BrownianSpec::new(ctx.clone(), 0.0, 10).is_err());
        assert!(BrownianSpec::new(ctx, 1.0, 1).is_err());
    }
}
