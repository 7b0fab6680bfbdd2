use std::sync::Arc;

use pathlab::ballmeasure::{
    block_max_stat, block_max_threshold, levy_tail, sample_nu, shifted_ball_overlap_exact, shifted_ball_overlap_mc,
    BallSpec, Law, RadiusSchedule,
};
use pathlab::liegroup::LieContext;
use pathlab::rng::{par_samples, Rng};
use pathlab::stats::{ks_critical_one, ks_critical_two, ks_one_sample, ks_two_sample};
use statrs::function::beta::beta_reg;

fn so3() -> Arc<LieContext> {
    Arc::new(LieContext::so3())
}

#[test]
fn radial_law_matches_power_cdf() {
    let spec = BallSpec::new(so3(), 8, 2.0, Law::UniformBall).unwrap();
    assert_eq!(spec.dim(), 24);
    let norms = par_samples(10_000, 1, 1, |rng: &mut Rng| sample_nu(&spec, rng).l2_norm());
    let d = ks_one_sample(&norms, |r| (r / 2.0).clamp(0.0, 1.0).powi(24));
    assert!(d < ks_critical_one(10_000, 0.01), "KS {d}");
}

#[test]
fn coordinate_marginal_matches_ball_density() {
    let spec = BallSpec::new(so3(), 8, 2.0, Law::UniformBall).unwrap();
    let rc = spec.coordinate_radius();
    let n = spec.dim() as f64;
    let xs = par_samples(10_000, 2, 1, |rng: &mut Rng| sample_nu(&spec, rng).data()[5]);
    // Density ∝ (1 − u²)^{(n−1)/2} on u = t/rc, whose CDF is ½(1 + sgn u·I_{u²}(½, (n+1)/2)).
    let cdf = |t: f64| {
        let u = (t / rc).clamp(-1.0, 1.0);
        0.5 * (1.0 + u.signum() * beta_reg(0.5, (n + 1.0) / 2.0, u * u))
    };
    let d = ks_one_sample(&xs, cdf);
    assert!(d < ks_critical_one(10_000, 0.01), "KS {d}");
}

#[test]
fn blockwise_rotation_preserves_the_law() {
    let ctx = so3();
    let spec = BallSpec::new(ctx.clone(), 16, 8.0, Law::UniformBall).unwrap();
    let r = ctx.exp_alg(&ctx.basis_element(1).scale(2.0));
    let h = pathlab::pathspace::StepPath::random(ctx.clone(), 16, 1.0, &mut pathlab::rng::seeded(4));
    let a = par_samples(10_000, 3, 1, |rng: &mut Rng| sample_nu(&spec, rng).inner(&h).unwrap());
    let b = par_samples(10_000, 3, 2, |rng: &mut Rng| sample_nu(&spec, rng).ad_const(&r).inner(&h).unwrap());
    assert!(ks_two_sample(&a, &b) < ks_critical_two(10_000, 10_000, 0.01));
    let na = par_samples(10_000, 3, 3, |rng: &mut Rng| sample_nu(&spec, rng).l2_norm());
    let nb = par_samples(10_000, 3, 4, |rng: &mut Rng| sample_nu(&spec, rng).ad_const(&r).l2_norm());
    assert!(ks_two_sample(&na, &nb) < ks_critical_two(10_000, 10_000, 0.01));
}

#[test]
fn overlap_exact_and_mc_agree() {
    for &(n, s) in &[(3usize, 1.0), (10, 0.3), (50, 0.1), (200, 0.05), (6, 1.9)] {
        let exact = shifted_ball_overlap_exact(n, s).unwrap();
        let mc = shifted_ball_overlap_mc(n, s, 40_000, 17).unwrap();
        let tol = 4.0 * mc.std_error.max(1e-12);
        assert!((mc.estimate - exact).abs() < tol, "n={n} s={s}: {} vs {exact}", mc.estimate);
    }
}

#[test]
fn levy_tails_match_and_obey_bound() {
    for &n in &[24usize, 192] {
        for &eps in &[0.1, 0.2] {
            let t = levy_tail(n, eps, 20_000, 23).unwrap();
            assert!((t.empirical.estimate - t.exact).abs() < 4.0 * t.empirical.std_error);
            assert!(t.exact <= t.bound);
        }
    }
}

#[test]
fn block_maximum_concentrates() {
    let ctx = so3();
    let spec = BallSpec::from_schedule(ctx, 64, &RadiusSchedule::default(), Law::UniformBall).unwrap();
    let est = block_max_stat(&spec, 10_000, 29).unwrap();
    // Union bound: the squared norm of a d-block of a uniform point in the
    // D-ball over the squared radius is Beta(d/2, (D − d)/2 + 1).
    let (d, dim) = (3.0, spec.dim() as f64);
    let u = (block_max_threshold(&spec) / spec.coordinate_radius()).powi(2).min(1.0);
    let tail = 1.0 - beta_reg(d / 2.0, (dim - d) / 2.0 + 1.0, u);
    let lower = 1.0 - 64.0 * tail;
    assert!(lower > 0.99);
    assert!(est.estimate >= 0.99);
    assert!(est.estimate + 4.0 * est.std_error >= lower);
}
