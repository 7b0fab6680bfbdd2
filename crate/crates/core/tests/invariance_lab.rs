use std::sync::Arc;

use pathlab::ballmeasure::{shifted_ball_overlap_exact, RadiusSchedule};
use pathlab::liegroup::LieContext;
use pathlab::meanlab::{
    brownian_sample, rotation_defect, semidirect_defect, star_defect, sweep, translation_defect, BrownianSpec,
    DefectKind, FitStatus, GroupFunctional, McOptions, RotationEstimator, TestFunctional,
};
use pathlab::pathspace::{develop, GroupPath, StepPath};
use pathlab::report::to_json;
use pathlab::rng::{par_samples, seeded, Rng};
use pathlab::stats::mean_se;

fn so3() -> Arc<LieContext> {
    Arc::new(LieContext::so3())
}

#[test]
fn brownian_mean_matches_heat_kernel_oracle() {
    // Each step is a rotation by a Gaussian vector with per-axis variance
    // a² = t/(2K); E[R] = (1 + 2(1 − a²)e^{−a²/2})/3 · I, and steps are independent.
    let ctx = so3();
    let (t, k) = (2.0, 32);
    let spec = BrownianSpec::new(ctx, t, k).unwrap();
    let xs = par_samples(20_000, 3, 1, |rng: &mut Rng| brownian_sample(&spec, rng).node(k).trace() / 3.0);
    let s = mean_se(&xs);
    let a2 = t / (2.0 * k as f64);
    let c = (1.0 + 2.0 * (1.0 - a2) * (-a2 / 2.0).exp()) / 3.0;
    let oracle = c.powi(k as i32);
    assert!((s.mean - oracle).abs() < 4.0 * s.std_error, "{} vs {oracle}", s.mean);
}

#[test]
fn translation_defect_is_bounded_by_overlap() {
    let ctx = so3();
    let mut rng = seeded(5);
    let g = StepPath::random(ctx.clone(), 4, 1.0, &mut rng);
    let f = TestFunctional::cosine(StepPath::random(ctx.clone(), 4, 1.0, &mut rng));
    let sched = RadiusSchedule::default();
    for n in [4, 16, 64] {
        let rep = translation_defect(&g, &f, n, &sched, &McOptions::new(4000, 2)).unwrap();
        let s = g.l2_norm() / rep.radius;
        let env = 2.0 * f.bound() * shifted_ball_overlap_exact(n * 3, s).unwrap();
        assert!(rep.estimate.abs() <= env + 3.0 * rep.std_error, "N={n}: {} > {env}", rep.estimate);
    }
}

#[test]
fn constant_rotation_is_statistically_invisible() {
    let ctx = so3();
    let r = GroupPath::constant(ctx.clone(), ctx.exp_alg(&ctx.basis_element(0).scale(1.7)), 64).unwrap();
    let f = TestFunctional::cosine(StepPath::random(ctx.clone(), 2, 1.0, &mut seeded(6)));
    for n in [16, 64] {
        let rep =
            rotation_defect(&r, &f, n, &RadiusSchedule::default(), RotationEstimator::Direct, &McOptions::new(4000, 3))
                .unwrap();
        assert!(!rep.significant(3.0), "N={n}: {} ± {}", rep.estimate, rep.std_error);
    }
}

#[test]
fn star_defect_decomposes_and_is_rotation_covariant() {
    let ctx = so3();
    let mut rng = seeded(7);
    let g = StepPath::random(ctx.clone(), 4, 1.0, &mut rng);
    let h = StepPath::random(ctx.clone(), 4, 1.0, &mut rng);
    let sched = RadiusSchedule::default();
    let opts = McOptions::new(8000, 4);
    let n = 16;
    let f = TestFunctional::cosine(h.clone());
    let star = star_defect(&g, &f, n, &sched, &opts).unwrap();
    let trans = translation_defect(&g, &f, n, &sched, &opts).unwrap();
    let rot = rotation_defect(&develop(&g, n).unwrap(), &f, n, &sched, RotationEstimator::Direct, &opts).unwrap();
    let se = (star.std_error.powi(2) + trans.std_error.powi(2) + rot.std_error.powi(2)).sqrt();
    assert!(star.estimate.abs() <= trans.estimate.abs() + rot.estimate.abs() + 3.0 * se);

    let r = ctx.exp_alg(&ctx.basis_element(2).scale(0.9));
    let rotated = TestFunctional::cosine(h.ad_const(&r));
    let other = star_defect(&g, &rotated, n, &sched, &McOptions::new(8000, 5)).unwrap();
    let se = (star.std_error.powi(2) + other.std_error.powi(2)).sqrt();
    assert!((star.estimate - other.estimate).abs() <= 3.0 * se);
}

#[test]
fn semidirect_with_trivial_path_reduces_to_haar_invariance() {
    let ctx = so3();
    let k = ctx.exp_alg(&ctx.basis_element(1).scale(2.2));
    let one = TestFunctional::cosine(StepPath::zeros(ctx.clone(), 1));
    for n in [16, 32] {
        let rep = semidirect_defect(
            &k,
            &StepPath::zeros(ctx.clone(), 1),
            &GroupFunctional::TraceWindow,
            &one,
            n,
            &RadiusSchedule::default(),
            &McOptions::new(8000, 8),
        )
        .unwrap();
        assert!(!rep.significant(3.0));
    }
}

#[test]
fn sweeps_are_deterministic_across_thread_counts() {
    let ctx = so3();
    let mut rng = seeded(9);
    let g = StepPath::random(ctx.clone(), 4, 1.0, &mut rng);
    let kind = DefectKind::Translation { g: g.clone(), func: TestFunctional::cosine(g) };
    let sched = RadiusSchedule::default();
    let opts = McOptions::new(3000, 10);
    let a = to_json(&sweep(&kind, &sched, &[16, 32, 64], &opts, 6000).unwrap()).unwrap();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let b = pool.install(|| to_json(&sweep(&kind, &sched, &[16, 32, 64], &opts, 6000).unwrap()).unwrap());
    assert_eq!(a, b);
}

#[test]
fn translation_sweep_has_negative_slope() {
    let ctx = so3();
    let g = StepPath::random(ctx, 4, 1.0, &mut seeded(12));
    let kind = DefectKind::Translation { g: g.clone(), func: TestFunctional::cosine(g) };
    let res =
        sweep(&kind, &RadiusSchedule::default(), &[16, 32, 64, 128, 256], &McOptions::new(20_000, 1), 40_000).unwrap();
    assert_eq!(res.status, FitStatus::Fitted);
    assert!(res.fit.unwrap().slope < 0.0);
    assert!(res.decreasing);
}
