//! Paired defect estimators for translations, rotations, the `∗` action and
//! the semidirect product.

use crate::ballmeasure::{BallSpec, RadiusSchedule};
use crate::liegroup::{GroupElement, Matrix};
use crate::pathspace::{log_derivative, midpoint_transport, step_approx, AdField, GroupPath, StepPath};
use crate::rng::{par_samples, stream_id};
use crate::{Error, Result};

use super::{run_cell, Cell, DefectReport, GroupFunctional, McOptions, TestFunctional};

const TRANSLATION: u64 = 1;
const ROTATION: u64 = 2;
const STAR: u64 = 3;
const SEMIDIRECT: u64 = 4;
const ENVELOPE: u64 = 8;

fn onto_grid(g: &StepPath, n: usize) -> Result<StepPath> {
    g.refine_to(n).map_err(|_| Error::Argument(format!("a path with {} blocks does not lie in V_{n}", g.n())))
}

fn ball(g: &StepPath, n: usize, schedule: &RadiusSchedule, opts: &McOptions) -> Result<BallSpec> {
    BallSpec::from_schedule(g.ctx().clone(), n, schedule, opts.law)
}

/// Repeats every `d`-block of `x` `per` times.
fn refine_slice(x: &[f64], d: usize, per: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(x.len() * per);
    for b in x.chunks(d) {
        for _ in 0..per {
            out.extend_from_slice(b);
        }
    }
    out
}

fn zip(a: &[f64], b: &[f64], sign: f64) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + sign * y).collect()
}

/// Mean of `F(g + f) − F(f)` over `f ~ ν_N`. Each draw also evaluates the
/// mirrored sample `−f`, which has the same law.
pub fn translation_defect(
    g: &StepPath,
    func: &TestFunctional,
    n: usize,
    schedule: &RadiusSchedule,
    opts: &McOptions,
) -> Result<DefectReport> {
    let spec = ball(g, n, schedule, opts)?;
    let gn = onto_grid(g, n)?;
    let gf = func.on_grid(n)?;
    let cell = Cell {
        experiment: "translation",
        group: g.ctx().family().to_string(),
        n,
        radius: spec.radius,
        schedule: Some(schedule),
    };
    let shift = gn.data();
    run_cell(cell, TRANSLATION, opts, |rng| {
        let mut f = vec![0.0; spec.dim()];
        spec.sample_into(rng, &mut f);
        let neg: Vec<f64> = f.iter().map(|v| -v).collect();
        let plus = gf.eval(&zip(shift, &f, 1.0)) - gf.eval(&f);
        let minus = gf.eval(&zip(shift, &f, -1.0)) - gf.eval(&neg);
        0.5 * (plus + minus)
    })
}

/// How [`rotation_defect`] estimates `E[F(Ad_r f)] − E[F(f)]`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RotationEstimator {
    /// Draws of `F(Ad_r f) − F(f)`.
    Direct,
    /// Draws of `F(Ad_r f) − F(Ad_ρ f)` with `ρ` the value of `r` at each
    /// block midpoint. `Ad_ρ` is a blockwise rotation, so it preserves `ν_N`
    /// and the control term has the same mean as `F(f)`.
    #[default]
    StepControl,
}

/// Mean of `F(ad_path(r, f)) − F(f)` over `f ~ ν_N`. The grid of `r` must be a
/// multiple of `N`; `Ad_r` is applied on that grid.
pub fn rotation_defect(
    r: &GroupPath,
    func: &TestFunctional,
    n: usize,
    schedule: &RadiusSchedule,
    estimator: RotationEstimator,
    opts: &McOptions,
) -> Result<DefectReport> {
    let kk = r.k();
    if n == 0 || kk % n != 0 {
        return Err(Error::Argument(format!("path grid {kk} is not a multiple of N = {n}")));
    }
    let ctx = r.ctx().clone();
    let spec = BallSpec::from_schedule(ctx.clone(), n, schedule, opts.law)?;
    let fine = AdField::at_midpoints(r)?;
    let coarse = match estimator {
        RotationEstimator::Direct => None,
        RotationEstimator::StepControl => {
            let mids = (0..n).map(|i| r.eval((i as f64 + 0.5) / n as f64)).collect::<Result<Vec<_>>>()?;
            Some(AdField::from_elements(&ctx, &mids))
        }
    };
    let fk = func.on_grid(kk)?;
    let d = ctx.algebra_dim();
    let per = kk / n;
    let cell = Cell {
        experiment: "rotation",
        group: ctx.family().to_string(),
        n,
        radius: spec.radius,
        schedule: Some(schedule),
    };
    run_cell(cell, ROTATION, opts, |rng| {
        let mut f = vec![0.0; spec.dim()];
        spec.sample_into(rng, &mut f);
        let refined = refine_slice(&f, d, per);
        let mut rotated = vec![0.0; kk * d];
        fine.apply_slice(&refined, &mut rotated);
        let base = match &coarse {
            None => fk.eval(&refined),
            Some(field) => {
                let mut c = vec![0.0; f.len()];
                field.apply_slice(&f, &mut c);
                fk.eval(&refine_slice(&c, d, per))
            }
        };
        fk.eval(&rotated) - base
    })
}

/// Mean of `F(g ∗ f) − F(f)` over `f ~ ν_N`, with `g ∗ f = g + Ad_{Π exp g} f`
/// evaluated as in [`crate::pathspace::star`]. Mirrored draws as in
/// [`translation_defect`].
pub fn star_defect(
    g: &StepPath,
    func: &TestFunctional,
    n: usize,
    schedule: &RadiusSchedule,
    opts: &McOptions,
) -> Result<DefectReport> {
    let spec = ball(g, n, schedule, opts)?;
    let gn = onto_grid(g, n)?;
    let field = AdField::from_elements(g.ctx(), &midpoint_transport(&gn));
    let gf = func.on_grid(n)?;
    let cell = Cell {
        experiment: "star",
        group: g.ctx().family().to_string(),
        n,
        radius: spec.radius,
        schedule: Some(schedule),
    };
    let shift = gn.data();
    run_cell(cell, STAR, opts, |rng| {
        let mut f = vec![0.0; spec.dim()];
        spec.sample_into(rng, &mut f);
        let mut af = vec![0.0; f.len()];
        field.apply_slice(&f, &mut af);
        let neg: Vec<f64> = f.iter().map(|v| -v).collect();
        let plus = gf.eval(&zip(shift, &af, 1.0)) - gf.eval(&f);
        let minus = gf.eval(&zip(shift, &af, -1.0)) - gf.eval(&neg);
        0.5 * (plus + minus)
    })
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct EnvelopeReport {
    pub n: usize,
    pub samples: usize,
    pub violations: usize,
    /// Largest observed `lhs / rhs`.
    #[serde(with = "crate::report::f17")]
    pub max_ratio: f64,
}

/// Checks `‖Ad_r f − Ad_ρ f‖₂ ≤ 2N^{−1/2}·‖∂log r‖₂·max_i N^{−1/2}‖f_i‖` on
/// `f ~ ν_N`, with `ρ = step_approx(r, N)`.
pub fn rotation_envelope(
    r: &GroupPath,
    n: usize,
    schedule: &RadiusSchedule,
    opts: &McOptions,
) -> Result<EnvelopeReport> {
    let kk = r.k();
    if n == 0 || kk % n != 0 {
        return Err(Error::Argument(format!("path grid {kk} is not a multiple of N = {n}")));
    }
    let ctx = r.ctx().clone();
    let spec = BallSpec::from_schedule(ctx.clone(), n, schedule, opts.law)?;
    let fine = AdField::at_midpoints(r)?;
    let stepped = AdField::at_midpoints(&step_approx(r, n)?)?;
    let energy = log_derivative(r)?.l2_norm();
    let d = ctx.algebra_dim();
    let per = kk / n;
    let sn = (n as f64).sqrt();
    let ratios = par_samples(opts.m, opts.seed, stream_id(&[ENVELOPE, n as u64]), |rng| {
        let mut f = vec![0.0; spec.dim()];
        spec.sample_into(rng, &mut f);
        let refined = refine_slice(&f, d, per);
        let (mut a, mut b) = (vec![0.0; refined.len()], vec![0.0; refined.len()]);
        fine.apply_slice(&refined, &mut a);
        stepped.apply_slice(&refined, &mut b);
        let diff = a.iter().zip(&b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / kk as f64;
        let max_block = f.chunks(d).map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt()).fold(0.0, f64::max);
        let rhs = 2.0 / sn * energy * max_block / sn;
        if rhs == 0.0 {
            if diff == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            diff.sqrt() / rhs
        }
    });
    Ok(EnvelopeReport {
        n,
        samples: opts.m,
        violations: ratios.iter().filter(|&&q| q > 1.0).count(),
        max_ratio: ratios.iter().copied().fold(0.0, f64::max),
    })
}

fn matvec(a: &Matrix, x: &[f64], out: &mut [f64]) {
    for (r, o) in out.iter_mut().enumerate() {
        *o = x.iter().enumerate().map(|(c, v)| a[(r, c)] * v).sum();
    }
}

/// Left translation by `(k, g)` in `G ⋉ L²` under the product measure
/// `Haar ⊗ ν_N`: mean of `F_K(k·x)·F(Ad_{x⁻¹}g ∗ f) − F_K(x)·F(f)`.
#[allow(clippy::too_many_arguments)]
pub fn semidirect_defect(
    k: &GroupElement,
    g: &StepPath,
    fk: &GroupFunctional,
    func: &TestFunctional,
    n: usize,
    schedule: &RadiusSchedule,
    opts: &McOptions,
) -> Result<DefectReport> {
    let ctx = g.ctx().clone();
    if ctx.group_defect(&k.matrix) > 10.0 * ctx.tol() {
        return Err(Error::Domain("k is not an element of the group".into()));
    }
    let spec = ball(g, n, schedule, opts)?;
    let gn = onto_grid(g, n)?;
    let d = ctx.algebra_dim();
    // Π exp(Ad_{x⁻¹} g) = x⁻¹·(Π exp g)·x, so block i of Ad_{x⁻¹}g ∗ f is
    // Ad_{x⁻¹}(g_i + A_i·Ad_x f_i) with A_i the transport of g itself.
    let transport: Vec<Matrix> = midpoint_transport(&gn).iter().map(|p| ctx.ad_matrix(p)).collect();
    let trivial_g = gn.is_zero();
    let gf = func.on_grid(n)?;
    let cell = Cell {
        experiment: "semidirect",
        group: ctx.family().to_string(),
        n,
        radius: spec.radius,
        schedule: Some(schedule),
    };
    run_cell(cell, SEMIDIRECT, opts, |rng| {
        let x = ctx.haar_sample(rng);
        let mut f = vec![0.0; spec.dim()];
        spec.sample_into(rng, &mut f);
        let kx = k.mul(&x);
        let (w_kx, w_x) = (fk.eval(&kx), fk.eval(&x));
        let ad_x = ctx.ad_matrix(&x);
        let ad_xi = ctx.ad_matrix(&x.inverse());
        let mut total = 0.0;
        for sign in [1.0, -1.0] {
            let fs: Vec<f64> = f.iter().map(|v| sign * v).collect();
            let moved = if trivial_g {
                fs.clone()
            } else {
                let mut out = vec![0.0; fs.len()];
                let (mut t1, mut t2) = (vec![0.0; d], vec![0.0; d]);
                for i in 0..n {
                    let blk = i * d..(i + 1) * d;
                    matvec(&ad_x, &fs[blk.clone()], &mut t1);
                    matvec(&transport[i], &t1, &mut t2);
                    t2.iter_mut().zip(&gn.data()[blk.clone()]).for_each(|(a, b)| *a += b);
                    matvec(&ad_xi, &t2, &mut out[blk]);
                }
                out
            };
            total += w_kx * gf.eval(&moved) - w_x * gf.eval(&fs);
        }
        0.5 * total
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::liegroup::LieContext;
    use crate::pathspace::star;
    use crate::rng::seeded;
    use std::sync::Arc;

    fn setup() -> (Arc<LieContext>, StepPath, TestFunctional) {
        let ctx = Arc::new(LieContext::so3());
        let mut rng = seeded(21);
        let g = StepPath::random(ctx.clone(), 4, 1.0, &mut rng);
        let h = StepPath::random(ctx.clone(), 8, 1.0, &mut rng);
        (ctx, g, TestFunctional::cosine(h))
    }

    #[test]
    fn identities_give_exact_zero() {
        let (ctx, _, f) = setup();
        let sched = RadiusSchedule::default();
        let opts = McOptions::new(300, 1);
        let zero = StepPath::zeros(ctx.clone(), 2);
        for rep in [
            translation_defect(&zero, &f, 16, &sched, &opts).unwrap(),
            star_defect(&zero, &f, 16, &sched, &opts).unwrap(),
            semidirect_defect(&ctx.identity(), &zero, &GroupFunctional::TraceWindow, &f, 16, &sched, &opts).unwrap(),
        ] {
            assert_eq!(rep.estimate, 0.0, "{}", rep.experiment);
            assert_eq!(rep.std_error, 0.0);
        }
        let r = GroupPath::constant(ctx.clone(), ctx.identity(), 32).unwrap();
        for est in [RotationEstimator::Direct, RotationEstimator::StepControl] {
            let rep = rotation_defect(&r, &f, 16, &sched, est, &opts).unwrap();
            assert_eq!(rep.estimate, 0.0);
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let (ctx, g, f) = setup();
        let sched = RadiusSchedule::default();
        assert!(translation_defect(&g, &f, 16, &sched, &McOptions::new(50, 1)).is_err());
        assert!(translation_defect(&g, &f, 6, &sched, &McOptions::new(200, 1)).is_err());
        let r = GroupPath::constant(ctx, LieContext::so3().identity(), 24).unwrap();
        assert!(rotation_defect(&r, &f, 16, &sched, RotationEstimator::Direct, &McOptions::new(200, 1)).is_err());
    }

    #[test]
    fn reports_are_reproducible_and_flag_schedule() {
        let (_, g, f) = setup();
        let opts = McOptions::new(500, 9);
        let a = translation_defect(&g, &f, 8, &RadiusSchedule::default(), &opts).unwrap();
        let b = translation_defect(&g, &f, 8, &RadiusSchedule::default(), &opts).unwrap();
        assert_eq!(a, b);
        assert!(a.warning.is_none());
        let c = translation_defect(&g, &f, 8, &RadiusSchedule::power_law(1.0, 0.4).unwrap(), &opts).unwrap();
        assert!(c.warning.is_some());
        assert_eq!(c.alpha, Some(0.4));
    }

    #[test]
    fn semidirect_fast_path_matches_star() {
        let (ctx, g, _) = setup();
        let n = 8;
        let gn = g.refine_to(n).unwrap();
        let mut rng = seeded(3);
        let transport: Vec<Matrix> = midpoint_transport(&gn).iter().map(|p| ctx.ad_matrix(p)).collect();
        for _ in 0..10 {
            let x = ctx.haar_sample(&mut rng);
            let f = StepPath::random(ctx.clone(), n, 5.0, &mut rng);
            let reference = star(&g.ad_const(&x.inverse()), &f).unwrap();
            let (ad_x, ad_xi) = (ctx.ad_matrix(&x), ctx.ad_matrix(&x.inverse()));
            let d = 3;
            let mut out = vec![0.0; n * d];
            for i in 0..n {
                let blk = i * d..(i + 1) * d;
                let (mut t1, mut t2) = (vec![0.0; d], vec![0.0; d]);
                matvec(&ad_x, &f.data()[blk.clone()], &mut t1);
                matvec(&transport[i], &t1, &mut t2);
                t2.iter_mut().zip(&gn.data()[blk.clone()]).for_each(|(a, b)| *a += b);
                matvec(&ad_xi, &t2, &mut out[blk]);
            }
            let fast = StepPath::new(ctx.clone(), n, out).unwrap();
            assert!(fast.sub(&reference).unwrap().l2_norm() < 1e-12);
        }
    }

    #[test]
    fn envelope_holds_for_geodesic() {
        let ctx = Arc::new(LieContext::so3());
        let r = GroupPath::geodesic(ctx.clone(), &ctx.basis_element(2).scale(std::f64::consts::PI), 64).unwrap();
        let rep = rotation_envelope(&r, 16, &RadiusSchedule::default(), &McOptions::new(200, 4)).unwrap();
        assert_eq!(rep.violations, 0);
        assert!(rep.max_ratio > 0.0 && rep.max_ratio <= 1.0);
        let e = GroupPath::constant(ctx.clone(), ctx.identity(), 64).unwrap();
        let rep = rotation_envelope(&e, 16, &RadiusSchedule::default(), &McOptions::new(200, 4)).unwrap();
        assert_eq!(rep.max_ratio, 0.0);
    }

    #[test]
    fn defects_respect_functional_bound() {
        let (ctx, g, f) = setup();
        let opts = McOptions::new(400, 2);
        let sched = RadiusSchedule::power_law(0.5, 0.75).unwrap();
        let big = g.scale(30.0);
        for rep in
            [translation_defect(&big, &f, 8, &sched, &opts).unwrap(), star_defect(&big, &f, 8, &sched, &opts).unwrap()]
        {
            assert!(rep.estimate.abs() <= 2.0 * f.bound());
        }
        let k = ctx.exp_alg(&ctx.basis_element(0).scale(1.3));
        let rep = semidirect_defect(&k, &big, &GroupFunctional::TraceWindow, &f, 8, &sched, &opts).unwrap();
        assert!(rep.estimate.abs() <= 2.0);
    }
}
