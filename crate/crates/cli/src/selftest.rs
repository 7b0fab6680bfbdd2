//! Numerical studies of the path group: the cocycle identity, the product
//! integral round trip, the group laws of `(L², ∗)`, and exactness of the
//! paired estimators on trivial actions.

use std::f64::consts::PI;
use std::sync::Arc;

use pathlab::ballmeasure::{shifted_ball_overlap_exact, RadiusSchedule};
use pathlab::liegroup::LieContext;
use pathlab::meanlab::{
    brownian_defect, rotation_defect, semidirect_defect, star_defect, translation_defect, GroupFunctional, McOptions,
    Observable, ObservableKind, RotationEstimator, TestFunctional,
};
use pathlab::pathspace::{cocycle_residual, develop, log_derivative, star, star_inverse, GroupPath, StepPath};
use pathlab::report::{f17, fmt_f64};
use pathlab::rng::{stream_id, substream};
use pathlab::stats::loglog_slope;
use pathlab::Result;
use rand::Rng as _;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Metric {
    pub name: String,
    #[serde(with = "f17")]
    pub value: f64,
    #[serde(with = "f17")]
    pub threshold: f64,
    /// `"<="`, `">="` or `"none"`.
    pub relation: &'static str,
    pub pass: bool,
}

impl Metric {
    fn at_most(name: &str, value: f64, threshold: f64) -> Self {
        Self { name: name.into(), value, threshold, relation: "<=", pass: value <= threshold }
    }

    fn at_least(name: &str, value: f64, threshold: f64) -> Self {
        Self { name: name.into(), value, threshold, relation: ">=", pass: value >= threshold }
    }

    /// A value reported without a gate.
    fn record(name: &str, value: f64) -> Self {
        Self { name: name.into(), value, threshold: f64::NAN, relation: "none", pass: true }
    }

    fn flag(name: &str, ok: bool) -> Self {
        Self { name: name.into(), value: if ok { 1.0 } else { 0.0 }, threshold: 1.0, relation: ">=", pass: ok }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckResult {
    pub check: String,
    pub metrics: Vec<Metric>,
    pub pass: bool,
}

impl CheckResult {
    fn new(check: &str, metrics: Vec<Metric>) -> Self {
        let pass = metrics.iter().all(|m| m.pass);
        Self { check: check.into(), metrics, pass }
    }
}

pub fn checks_csv(results: &[CheckResult]) -> String {
    let mut out = String::from("check,metric,value,threshold,relation,pass\n");
    for c in results {
        for m in &c.metrics {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                c.check,
                m.name,
                fmt_f64(m.value),
                fmt_f64(m.threshold),
                m.relation,
                m.pass
            ));
        }
    }
    out
}

const COCYCLE: u64 = 0x636f;
const ROUND_TRIP: u64 = 0x7274;
const GROUP_LAWS: u64 = 0x676c;

/// Residuals below this are treated as exact.
const ROUNDOFF: f64 = 1e-12;

/// Residual of `∂log(fg) = ∂log f + Ad_f ∂log g` for developed random `V_16`
/// pairs at `K = 2¹¹` and `2¹²`.
pub fn cocycle_study(ctx: &Arc<LieContext>, pairs: usize, seed: u64) -> Result<CheckResult> {
    let (coarse, fine) = (1 << 11, 1 << 12);
    let rows = (0..pairs)
        .into_par_iter()
        .map(|i| {
            let mut rng = substream(seed, stream_id(&[COCYCLE, i as u64]));
            let f = StepPath::random(ctx.clone(), 16, 1.0, &mut rng);
            let g = StepPath::random(ctx.clone(), 16, 1.0, &mut rng);
            let at = |k| cocycle_residual(&develop(&f, k)?, &develop(&g, k)?);
            Ok((at(coarse)?, at(fine)?))
        })
        .collect::<Result<Vec<(f64, f64)>>>()?;
    let worst = rows.iter().map(|r| r.1).fold(0.0, f64::max);
    let ratio = rows.iter().map(|r| r.0 / r.1).fold(f64::INFINITY, f64::min);
    Ok(CheckResult::new(
        "cocycle",
        vec![
            Metric::at_most("max_residual_k4096", worst, 1e-4),
            Metric::at_least("min_ratio_k2048_over_k4096", ratio, 1.8),
        ],
    ))
}

/// A smooth path sampled at the midpoints of `n` blocks: each coordinate is
/// `Σ_{j≤3} (a_j cos 2πjt + b_j sin 2πjt)/j` with standard Gaussian `a, b`.
fn smooth_path(ctx: &Arc<LieContext>, n: usize, rng: &mut pathlab::rng::Rng) -> Result<StepPath> {
    let d = ctx.algebra_dim();
    let coef: Vec<f64> = (0..d * 6).map(|_| rng.sample(StandardNormal)).collect();
    let mut data = Vec::with_capacity(n * d);
    for i in 0..n {
        let t = (i as f64 + 0.5) / n as f64;
        for c in 0..d {
            let mut v = 0.0;
            for j in 1..=3 {
                let w = 2.0 * PI * j as f64 * t;
                let k = c * 6 + (j - 1) * 2;
                v += (coef[k] * w.cos() + coef[k + 1] * w.sin()) / j as f64;
            }
            data.push(v);
        }
    }
    StepPath::new(ctx.clone(), n, data)
}

/// Slope of `log ‖∂log(develop(f, K)) − f‖₂` against `log K` for smooth `f`
/// on `2¹⁵` blocks and `K = 2⁶, …, 2¹²`.
pub fn round_trip_study(ctx: &Arc<LieContext>, paths: usize, seed: u64) -> Result<CheckResult> {
    let n = 1 << 15;
    let ks: Vec<usize> = (6..=12).map(|e| 1 << e).collect();
    let slopes = (0..paths)
        .into_par_iter()
        .map(|i| {
            let mut rng = substream(seed, stream_id(&[ROUND_TRIP, i as u64]));
            let f = smooth_path(ctx, n, &mut rng)?;
            let errs = ks
                .iter()
                .map(|&k| Ok(log_derivative(&develop(&f, k)?)?.sub(&f)?.l2_norm()))
                .collect::<Result<Vec<f64>>>()?;
            let xs: Vec<f64> = ks.iter().map(|&k| k as f64).collect();
            Ok(loglog_slope(&xs, &errs).map_or(f64::NAN, |fit| fit.slope))
        })
        .collect::<Result<Vec<f64>>>()?;
    let worst = slopes.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(CheckResult::new("round-trip", vec![Metric::at_most("max_loglog_slope", worst, -0.9)]))
}

/// Identity, inverse and associativity residuals of `∗` on fixed `V_16`
/// triples refined to `N ∈ {32, 64, 128, 256}`.
pub fn group_laws_study(ctx: &Arc<LieContext>, triples: usize, seed: u64) -> Result<CheckResult> {
    let grid = [32usize, 64, 128, 256];
    let inputs: Vec<[StepPath; 3]> = (0..triples)
        .map(|i| {
            let mut rng = substream(seed, stream_id(&[GROUP_LAWS, i as u64]));
            std::array::from_fn(|_| StepPath::random(ctx.clone(), 16, 1.0, &mut rng))
        })
        .collect();
    let mut table = Vec::new();
    for &n in &grid {
        let (mut ident, mut inv, mut assoc) = (0.0f64, 0.0f64, 0.0f64);
        for [a, b, c] in &inputs {
            let (a, b, c) = (a.refine_to(n)?, b.refine_to(n)?, c.refine_to(n)?);
            let zero = StepPath::zeros(ctx.clone(), n);
            ident = ident.max(star(&a, &zero)?.sub(&a)?.l2_norm()).max(star(&zero, &a)?.sub(&a)?.l2_norm());
            let ai = star_inverse(&a);
            inv = inv.max(star(&a, &ai)?.l2_norm()).max(star(&ai, &a)?.l2_norm());
            let lhs = star(&star(&a, &b)?, &c)?;
            let rhs = star(&a, &star(&b, &c)?)?;
            assoc = assoc.max(lhs.sub(&rhs)?.l2_norm());
        }
        table.push((ident, inv, assoc));
    }
    let last = table[table.len() - 1];
    // A pair of residuals both at roundoff level counts as converged.
    let decreasing = |sel: fn(&(f64, f64, f64)) -> f64| {
        table.windows(2).all(|w| sel(&w[1]) < sel(&w[0]) || sel(&w[0]).max(sel(&w[1])) <= ROUNDOFF)
    };
    let mut metrics = vec![
        Metric::at_most("identity_n256", last.0, 1e-3),
        Metric::at_most("inverse_n256", last.1, 1e-3),
        Metric::at_most("associativity_n256", last.2, 1e-3),
    ];
    for (&n, row) in grid.iter().zip(&table) {
        metrics.push(Metric::record(&format!("inverse_n{n}"), row.1));
        metrics.push(Metric::record(&format!("associativity_n{n}"), row.2));
    }
    metrics.push(Metric::flag("identity_decreasing", decreasing(|r| r.0)));
    metrics.push(Metric::flag("inverse_decreasing", decreasing(|r| r.1)));
    metrics.push(Metric::flag("associativity_decreasing", decreasing(|r| r.2)));
    Ok(CheckResult::new("group-laws", metrics))
}

/// Trivial actions give exactly zero defects; closed-form geometry values.
pub fn exactness_study(ctx: &Arc<LieContext>, seed: u64) -> Result<CheckResult> {
    let opts = McOptions::new(256, seed);
    let sched = RadiusSchedule::default();
    let mut rng = substream(seed, 0);
    let h = StepPath::random(ctx.clone(), 4, 1.0, &mut rng);
    let f = TestFunctional::cosine(h);
    let zero = StepPath::zeros(ctx.clone(), 1);
    let e = ctx.identity();
    let still = GroupPath::constant(ctx.clone(), e.clone(), 32)?;
    let geo = GroupPath::geodesic(ctx.clone(), &ctx.basis_element(0).scale(2.0), 32)?;
    let trace = Observable::at_end(ObservableKind::TraceLinear);
    let constant = Observable::at_end(ObservableKind::Constant { value: 0.5 });
    let values = [
        ("translation_zero", translation_defect(&zero, &f, 16, &sched, &opts)?.estimate),
        ("rotation_identity", rotation_defect(&still, &f, 16, &sched, RotationEstimator::StepControl, &opts)?.estimate),
        ("star_zero", star_defect(&zero, &f, 16, &sched, &opts)?.estimate),
        (
            "semidirect_trivial",
            semidirect_defect(&e, &zero, &GroupFunctional::TraceWindow, &f, 16, &sched, &opts)?.estimate,
        ),
        ("brownian_identity", brownian_defect(&still, &trace, &[1.0], 16, &opts)?[0].estimate),
        ("brownian_constant_observable", brownian_defect(&geo, &constant, &[1.0], 16, &opts)?[0].estimate),
    ];
    let mut metrics: Vec<Metric> = values.iter().map(|(name, v)| Metric::at_most(name, v.abs(), 0.0)).collect();
    let exact = shifted_ball_overlap_exact(3, 1.0)?;
    metrics.push(Metric::at_most("overlap_n3_s1_error", (exact - 0.6875).abs(), 1e-10));
    metrics.push(Metric::at_most("overlap_s0", shifted_ball_overlap_exact(7, 0.0)?, 0.0));
    metrics.push(Metric::at_least("overlap_s2", shifted_ball_overlap_exact(7, 2.0)?, 1.0));
    Ok(CheckResult::new("exactness", metrics))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smooth_paths_are_deterministic_and_smooth() {
        let ctx = Arc::new(LieContext::so3());
        let a = smooth_path(&ctx, 64, &mut substream(1, 2)).unwrap();
        let b = smooth_path(&ctx, 64, &mut substream(1, 2)).unwrap();
        assert_eq!(a, b);
        let jumps = a.data().chunks(3).zip(a.data().chunks(3).skip(1));
        let max_jump = jumps.map(|(p, q)| (p[0] - q[0]).abs()).fold(0.0, f64::max);
        assert!(max_jump < 1.0);
    }

    #[test]
    fn exactness_check_passes() {
        let ctx = Arc::new(LieContext::so3());
        let r = exactness_study(&ctx, 5).unwrap();
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn csv_has_one_row_per_metric() {
        let r = CheckResult::new("x", vec![Metric::at_most("a", 1.0, 2.0), Metric::at_least("b", 1.0, 2.0)]);
        assert!(!r.pass);
        assert_eq!(checks_csv(&[r]).lines().count(), 3);
    }
}
