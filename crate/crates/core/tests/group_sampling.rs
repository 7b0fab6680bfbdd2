use std::sync::Arc;

use pathlab::liegroup::{AlgebraElement, Family, LieContext};
use pathlab::rng::{par_samples, seeded, Rng};
use pathlab::stats::{ks_critical_two, ks_two_sample, mean_se};
use proptest::prelude::*;

fn contexts() -> Vec<LieContext> {
    ["so2", "so3", "so4", "so6", "su2"].iter().map(|f| LieContext::new(Family::parse(f).unwrap()).unwrap()).collect()
}

#[test]
fn haar_entries_have_zero_mean_and_variance_one_over_m() {
    for ctx in contexts().into_iter().filter(|c| c.matrix_size() > 2) {
        let m = ctx.matrix_size();
        let xs = par_samples(100_000, 11, 1, |rng: &mut Rng| ctx.haar_sample(rng).matrix[(0, 1)]);
        let s = mean_se(&xs);
        assert!(s.mean.abs() < 4.0 * s.std_error, "{}: mean {}", ctx.family(), s.mean);
        let sq: Vec<f64> = xs.iter().map(|v| v * v).collect();
        let v = mean_se(&sq);
        assert!((v.mean - 1.0 / m as f64).abs() < 4.0 * v.std_error, "{}: E x² = {}", ctx.family(), v.mean);
    }
}

#[test]
fn haar_is_left_invariant_in_trace_law() {
    for ctx in contexts() {
        let g = ctx.exp_alg(&ctx.random_algebra(&mut seeded(3), 1.1));
        let a = par_samples(10_000, 5, 1, |rng: &mut Rng| ctx.haar_sample(rng).trace());
        let b = par_samples(10_000, 5, 2, |rng: &mut Rng| g.mul(&ctx.haar_sample(rng)).trace());
        let d = ks_two_sample(&a, &b);
        assert!(d < ks_critical_two(10_000, 10_000, 0.01), "{}: KS {d}", ctx.family());
    }
}

#[test]
fn random_algebra_is_centred_with_requested_norm() {
    let ctx = LieContext::so3();
    let xs: Vec<AlgebraElement> = {
        let mut rng = seeded(8);
        (0..20_000).map(|_| ctx.random_algebra(&mut rng, 2.0)).collect()
    };
    for c in 0..3 {
        let s = mean_se(&xs.iter().map(|x| x.coords[c]).collect::<Vec<_>>());
        assert!(s.mean.abs() < 4.0 * s.std_error);
    }
    assert!(xs.iter().all(|x| (x.norm() - 2.0).abs() < 1e-12));
}

fn ctx_strategy() -> impl Strategy<Value = Arc<LieContext>> {
    prop_oneof![Just("so3"), Just("so4"), Just("so5"), Just("su2")]
        .prop_map(|f| Arc::new(LieContext::new(Family::parse(f).unwrap()).unwrap()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn exp_log_round_trip(ctx in ctx_strategy(), seed in any::<u64>(), scale in 0.01f64..1.3) {
        let x = ctx.random_algebra(&mut seeded(seed), scale);
        let g = ctx.exp_alg(&x);
        prop_assert!(ctx.is_group_member(&g));
        let back = ctx.log_group(&g).unwrap();
        prop_assert!(back.sub(&x).norm() < 1e-10);
    }

    #[test]
    fn ad_is_an_isometric_homomorphism(ctx in ctx_strategy(), seed in any::<u64>()) {
        let mut rng = seeded(seed);
        let g = ctx.haar_sample(&mut rng);
        let h = ctx.haar_sample(&mut rng);
        let x = ctx.random_algebra(&mut rng, 1.0);
        let y = ctx.random_algebra(&mut rng, 1.0);
        prop_assert!((ctx.ad(&g, &x).dot(&ctx.ad(&g, &y)) - x.dot(&y)).abs() < 1e-12);
        let lhs = ctx.ad(&g.mul(&h), &x);
        let rhs = ctx.ad(&g, &ctx.ad(&h, &x));
        prop_assert!(lhs.sub(&rhs).norm() < 1e-12);
    }

    #[test]
    fn haar_samples_are_members(ctx in ctx_strategy(), seed in any::<u64>()) {
        let g = ctx.haar_sample(&mut seeded(seed));
        prop_assert!(ctx.is_group_member(&g));
        prop_assert!(ctx.is_group_member(&g.mul(&g.inverse())));
    }
}
