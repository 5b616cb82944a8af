use std::sync::Arc;

use ncftap_core::ftap::{classical_oracle, payoff_subspace, Outcome, SolverOptions};
use ncftap_core::martingale::{integral_martingale_check, is_martingale, zero_integral_criterion};
use ncftap_core::models::{
    embed_classical, random_element_in, random_hermitian_in, random_market, random_martingale_market,
    random_state, random_strategy, ClassicalTree, TreeNode,
};
use ncftap_core::{check_nfl, AdaptedProcess, AlgebraElement, Filtration, MultiMatrixAlgebra, SimpleBiprocess, Subalgebra};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn dims_strategy() -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(1usize..=3, 1..=3)
}

fn market(seed: u64, dims: &[usize], periods: usize) -> (Arc<Filtration>, AdaptedProcess) {
    random_market(seed, dims, periods).unwrap()
}

fn n2(alg: &MultiMatrixAlgebra, x: &AlgebraElement) -> f64 {
    alg.lp_norm(x, 2.0).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn trace_is_cyclic_and_faithful(seed in any::<u64>(), dims in dims_strategy()) {
        let alg = MultiMatrixAlgebra::with_default_weights(dims).unwrap();
        let full = Subalgebra::full(&alg);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = random_element_in(&mut rng, &alg, &full);
        let y = random_element_in(&mut rng, &alg, &full);
        let xy = alg.trace(&(&x * &y)).unwrap();
        let yx = alg.trace(&(&y * &x)).unwrap();
        prop_assert!((xy - yx).norm() <= 1e-12 * (1.0 + xy.norm()));
        let xx = alg.trace(&(&x.adjoint() * &x)).unwrap();
        prop_assert!(xx.re > 0.0 && xx.im.abs() <= 1e-12 * xx.re);
    }

    #[test]
    fn holder_inequality(seed in any::<u64>(), dims in dims_strategy(), p in 1.1f64..6.0) {
        let alg = MultiMatrixAlgebra::with_default_weights(dims).unwrap();
        let full = Subalgebra::full(&alg);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = random_element_in(&mut rng, &alg, &full);
        let y = random_element_in(&mut rng, &alg, &full);
        let q = p / (p - 1.0);
        let lhs = alg.lp_norm(&(&x * &y), 1.0).unwrap();
        let rhs = alg.lp_norm(&x, p).unwrap() * alg.lp_norm(&y, q).unwrap();
        prop_assert!(lhs <= rhs * (1.0 + 1e-10));
        let t = alg.trace(&(&x * &y)).unwrap().norm();
        prop_assert!(t <= lhs * (1.0 + 1e-10) + 1e-14);
    }

    #[test]
    fn conditional_expectation_contracts_and_is_bimodular(seed in any::<u64>(), dims in dims_strategy(), periods in 1usize..=3) {
        let (f, _) = market(seed, &dims, periods);
        let alg = f.algebra();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
        let sub = f.level(rng.gen_range(0..f.len()));
        let x = random_element_in(&mut rng, alg, &Subalgebra::full(alg));
        let e = alg.conditional_expectation(&x, sub).unwrap();
        prop_assert!(n2(alg, &e) <= n2(alg, &x) + 1e-12);
        let a = random_element_in(&mut rng, alg, sub);
        let lhs = alg.conditional_expectation(&(&a * &x), sub).unwrap();
        prop_assert!(n2(alg, &(&lhs - &(&a * &e))) <= 1e-10 * (1.0 + n2(alg, &lhs)));
        // Positive elements stay positive.
        let pos = &x * &x.adjoint();
        let ep = alg.conditional_expectation(&pos, sub).unwrap();
        prop_assert!(alg.min_eigenvalue(&ep).unwrap() >= -1e-10 * (1.0 + n2(alg, &pos)));
    }

    #[test]
    fn integral_is_bilinear_and_decomposition_independent(seed in any::<u64>(), dims in dims_strategy(), periods in 1usize..=3) {
        let (f, x) = market(seed, &dims, periods);
        let alg = f.algebra();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 2);
        let mut draw = |k: usize| random_element_in(&mut rng, alg, f.level(k));
        let mut merged = Vec::new();
        let mut split = Vec::new();
        for k in 0..f.num_steps() {
            let (a1, a2, b) = (draw(k), draw(k), draw(k));
            merged.push(vec![(&a1 + &a2, b.clone())]);
            split.push(vec![(a1, b.clone()), (a2, b)]);
        }
        let h1 = SimpleBiprocess::new(f.clone(), merged).unwrap();
        let h2 = SimpleBiprocess::new(f.clone(), split).unwrap();
        let y1 = h1.integral(&x).unwrap();
        let y2 = h2.integral(&x).unwrap();
        prop_assert!(n2(alg, &(&y1 - &y2)) <= 1e-10 * (1.0 + n2(alg, &y1)));
        let c = ncftap_core::Complex64::new(0.7, -1.3);
        let sum = h1.sum(&h2.scaled(c)).unwrap().integral(&x).unwrap();
        let expect = &y1 + &y2.scale(c);
        prop_assert!(n2(alg, &(&sum - &expect)) <= 1e-10 * (1.0 + n2(alg, &sum)));
    }

    #[test]
    fn stopped_integrals_add_up(seed in any::<u64>(), dims in dims_strategy(), periods in 2usize..=3) {
        let (f, x) = market(seed, &dims, periods);
        let alg = f.algebra();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 3);
        let h = random_strategy(&mut rng, &f, 2);
        let t = f.times();
        let mid = t[rng.gen_range(0..t.len())];
        let whole = h.stopped_integral(0.0, t[t.len() - 1], &x).unwrap();
        let parts = &h.stopped_integral(0.0, mid, &x).unwrap() + &h.stopped_integral(mid, t[t.len() - 1], &x).unwrap();
        prop_assert!(n2(alg, &(&whole - &parts)) <= 1e-10 * (1.0 + n2(alg, &whole)));
        prop_assert!(h.stopped_integral(mid, mid, &x).unwrap().is_zero());
    }

    #[test]
    fn adjoint_identity_and_self_adjoint_payoffs(seed in any::<u64>(), dims in dims_strategy(), periods in 1usize..=3) {
        let (f, x) = market(seed, &dims, periods);
        let alg = f.algebra();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 4);
        let steps = (0..f.num_steps())
            .map(|k| vec![(random_element_in(&mut rng, alg, f.level(k)), random_element_in(&mut rng, alg, f.level(k)))])
            .collect();
        let h = SimpleBiprocess::new(f.clone(), steps).unwrap();
        let lhs = h.integral(&x).unwrap().adjoint();
        let rhs = h.adjoint().integral(&x).unwrap();
        prop_assert!(n2(alg, &(&lhs - &rhs)) <= 1e-10);
        let y = random_strategy(&mut rng, &f, 3).integral(&x).unwrap();
        prop_assert!(n2(alg, &(&y - &y.adjoint())) <= 1e-10);
    }

    #[test]
    fn martingale_test_is_sound_under_polarization(seed in any::<u64>(), dims in dims_strategy(), periods in 1usize..=3) {
        let (f, x, state) = random_martingale_market(seed, &dims, periods).unwrap();
        let alg = f.algebra();
        prop_assert!(is_martingale(&x, &state, 1e-8).unwrap().holds);
        // Every a in the current level, not only basis vectors, sees no drift.
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 5);
        for k in 0..f.num_steps() {
            let a = random_element_in(&mut rng, alg, f.level(k));
            let v = state.expectation(alg, &x.increment(k).sandwich(&a, &a.adjoint())).unwrap();
            prop_assert!(v.norm() <= 1e-9 * (1.0 + n2(alg, &a).powi(2)));
        }
    }

    #[test]
    fn martingale_and_zero_integral_agree(seed in any::<u64>(), dims in dims_strategy(), periods in 1usize..=3, planted in any::<bool>()) {
        let (x, state) = if planted {
            let (_, x, s) = random_martingale_market(seed, &dims, periods).unwrap();
            (x, s)
        } else {
            let (_, x) = market(seed, &dims, periods);
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 6);
            let s = random_state(&mut rng, x.algebra());
            (x, s)
        };
        let a = is_martingale(&x, &state, 1e-8).unwrap().holds;
        let b = zero_integral_criterion(&x, &state, 1e-8).unwrap().holds;
        prop_assert_eq!(a, b);
    }

    #[test]
    fn integrals_of_martingales_are_martingales(seed in any::<u64>(), dims in dims_strategy(), periods in 1usize..=3) {
        let (f, x, state) = random_martingale_market(seed, &dims, periods).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 7);
        let h = random_strategy(&mut rng, &f, 2);
        prop_assert!(integral_martingale_check(&h, &x, &state, 1e-8).unwrap().holds);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn verdict_is_scale_invariant(seed in any::<u64>(), dims in dims_strategy(), periods in 1usize..=2, c in prop_oneof![0.01f64..0.5, 2.0f64..50.0]) {
        let (f, x) = market(seed, &dims, periods);
        let opts = SolverOptions::default();
        let v = check_nfl(&x, &opts).unwrap();
        let scaled = AdaptedProcess::new(f.clone(), x.values().iter().map(|v| v.scale_real(c)).collect()).unwrap();
        let w = check_nfl(&scaled, &opts).unwrap();
        prop_assert_eq!(v.outcome, w.outcome);
        prop_assert!(w.report.passed);
        // The payoff subspace does not change, so neither does the margin.
        if let (Some(a), Some(b)) = (&v.ems, &w.ems) {
            prop_assert!((a.lambda - b.lambda).abs() <= 1e-6 * (1.0 + a.lambda.abs()), "{} vs {}", a.lambda, b.lambda);
        }
        if let (Some(a), Some(b)) = (&v.arbitrage, &w.arbitrage) {
            prop_assert!((a.mu - b.mu).abs() <= 1e-6);
        }
    }

    #[test]
    fn payoff_basis_reconstructs(seed in any::<u64>(), dims in dims_strategy(), periods in 1usize..=3) {
        let (_, x) = market(seed, &dims, periods);
        let k = payoff_subspace(&x).unwrap();
        let r = k.validate(&x, 1e-9).unwrap();
        prop_assert!(r.passed, "{:?}", r);
    }

    #[test]
    fn random_trees_match_the_classical_oracle(seed in any::<u64>(), periods in 1usize..=2, rate in 0.0f64..0.1) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        fn grow(rng: &mut ChaCha8Rng, price: f64, left: usize) -> TreeNode {
            if left == 0 {
                return TreeNode::leaf(price);
            }
            let branches = rng.gen_range(1..=3);
            let children = (0..branches)
                .map(|_| {
                    let p = price * rng.gen_range(0.85..1.25);
                    grow(rng, p, left - 1)
                })
                .collect();
            TreeNode { price, children }
        }
        let tree = ClassicalTree::new(grow(&mut rng, 1.0, periods), rate).unwrap();
        let oracle = classical_oracle(&tree).unwrap();
        let (_, x) = embed_classical(&tree).unwrap();
        let v = check_nfl(&x, &SolverOptions::default()).unwrap();
        prop_assert_ne!(v.outcome, Outcome::Undecided);
        prop_assert_eq!(v.outcome, oracle.outcome);
        prop_assert!(v.report.passed);
    }

    #[test]
    fn generated_markets_validate_and_repeat(seed in any::<u64>(), dims in dims_strategy(), periods in 1usize..=3) {
        let (f, x) = market(seed, &dims, periods);
        prop_assert!(f.validate(1e-8).passed);
        prop_assert!(x.validate(1e-8).passed);
        let (g, y) = market(seed, &dims, periods);
        prop_assert_eq!(&*f, &*g);
        prop_assert_eq!(x, y);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = random_hermitian_in(&mut rng, f.algebra(), f.level(f.len() - 1));
        prop_assert!(h.self_adjoint_defect() == 0.0);
    }
}
