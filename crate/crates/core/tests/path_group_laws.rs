use std::sync::Arc;

use pathlab::liegroup::{Family, LieContext};
use pathlab::pathspace::{cocycle_residual, develop, log_derivative, star, star_inverse, GroupPath, StepPath};
use pathlab::rng::seeded;
use proptest::prelude::*;

fn ctx_strategy() -> impl Strategy<Value = Arc<LieContext>> {
    prop_oneof![Just("so3"), Just("so4"), Just("su2")]
        .prop_map(|f| Arc::new(LieContext::new(Family::parse(f).unwrap()).unwrap()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn refinement_preserves_inner_products(ctx in ctx_strategy(), seed in any::<u64>(), k in 1usize..5) {
        let mut rng = seeded(seed);
        let a = StepPath::random(ctx.clone(), 3, 1.3, &mut rng);
        let b = StepPath::random(ctx.clone(), 6, 0.7, &mut rng);
        let lhs = a.inner(&b).unwrap();
        let rhs = a.refine(2 * k).inner(&b.refine(k)).unwrap();
        prop_assert!((lhs - rhs).abs() < 1e-13);
    }

    #[test]
    fn star_inverse_cancels_on_the_right(ctx in ctx_strategy(), seed in any::<u64>()) {
        let f = StepPath::random(ctx.clone(), 32, 1.0, &mut seeded(seed));
        let e = star(&f, &star_inverse(&f)).unwrap();
        prop_assert!(e.l2_norm() < 1e-12);
    }

    #[test]
    fn star_is_nearly_associative_on_fine_grids(ctx in ctx_strategy(), seed in any::<u64>()) {
        let mut rng = seeded(seed);
        let n = 256;
        let a = StepPath::random(ctx.clone(), 4, 1.0, &mut rng).refine(n / 4);
        let b = StepPath::random(ctx.clone(), 4, 1.0, &mut rng).refine(n / 4);
        let c = StepPath::random(ctx.clone(), 4, 1.0, &mut rng).refine(n / 4);
        let lhs = star(&star(&a, &b).unwrap(), &c).unwrap();
        let rhs = star(&a, &star(&b, &c).unwrap()).unwrap();
        prop_assert!(lhs.sub(&rhs).unwrap().l2_norm() < 1e-3);
    }

    #[test]
    fn develop_paths_satisfy_cocycle(ctx in ctx_strategy(), seed in any::<u64>()) {
        let mut rng = seeded(seed);
        let f = develop(&StepPath::random(ctx.clone(), 8, 1.0, &mut rng), 512).unwrap();
        let g = develop(&StepPath::random(ctx.clone(), 8, 1.0, &mut rng), 512).unwrap();
        prop_assert!(cocycle_residual(&f, &g).unwrap() < 1e-3);
    }

    #[test]
    fn json_round_trips_are_exact(ctx in ctx_strategy(), seed in any::<u64>()) {
        let f = StepPath::random(ctx.clone(), 5, 2.0, &mut seeded(seed));
        prop_assert_eq!(StepPath::from_json(&f.to_json()).unwrap(), f.clone());
        let g = develop(&f, 10).unwrap();
        let back = GroupPath::from_json(&g.to_json()).unwrap();
        prop_assert_eq!(back.nodes(), g.nodes());
        let again = log_derivative(&back).unwrap();
        prop_assert!(again.sub(&f).unwrap().l2_norm() < 1e-10);
    }
}
