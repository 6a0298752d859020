mod common;

use fwsvm::loss::{LossFamily, LossSpec};
use fwsvm::oracle::{bruteforce_maxdot, simplex_vertices};
use proptest::prelude::*;

use common::{random_spec, rng};

/// `(spec, s, t, y)` with `s`, `t` two score vectors for the same instance.
fn instance(max_m: usize) -> impl Strategy<Value = (LossSpec, Vec<f64>, Vec<f64>, usize)> {
    (2..=max_m, 0..LossFamily::ALL.len(), any::<u64>()).prop_flat_map(|(m, f, seed)| {
        let spec = random_spec(&mut rng(seed), LossFamily::ALL[f], m);
        (
            Just(spec),
            prop::collection::vec(-5.0..5.0f64, m),
            prop::collection::vec(-5.0..5.0f64, m),
            0..m,
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn margin_is_zero_at_the_label((spec, s, _t, y) in instance(10)) {
        let c = spec.margin_vector(&s, y).unwrap();
        prop_assert_eq!(c.c[y], 0.0);
    }

    #[test]
    fn loss_is_nonnegative((spec, s, _t, y) in instance(10)) {
        prop_assert!(spec.loss(&s, y).unwrap() >= 0.0);
    }

    #[test]
    fn translation_invariance((spec, s, _t, y) in instance(10), shift in -10.0..10.0f64) {
        let shifted: Vec<f64> = s.iter().map(|v| v + shift).collect();
        let a = spec.loss(&s, y).unwrap();
        let b = spec.loss(&shifted, y).unwrap();
        prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs()), "{} vs {}", a, b);
    }

    #[test]
    fn value_equals_dot_with_maximizer((spec, s, _t, y) in instance(10)) {
        let c = spec.margin_vector(&s, y).unwrap();
        let beta = spec.beta_argmax(&c).unwrap();
        let value = spec.loss(&s, y).unwrap();
        prop_assert!((beta.dot(&c.c) - value).abs() <= 1e-12);
        prop_assert!(beta.beta.iter().all(|&b| b >= 0.0));
        prop_assert!((beta.beta.iter().sum::<f64>() - beta.mass).abs() <= 1e-12);
    }

    #[test]
    fn subgradient_inequality((spec, s, t, y) in instance(10)) {
        let g = spec.subgradient(&s, y).unwrap();
        let linear: f64 = g.iter().zip(t.iter().zip(&s)).map(|(gj, (tj, sj))| gj * (tj - sj)).sum();
        let lhs = spec.loss(&t, y).unwrap();
        let rhs = spec.loss(&s, y).unwrap() + linear;
        prop_assert!(lhs >= rhs - 1e-9, "{} < {}", lhs, rhs);
    }

    #[test]
    fn midpoint_convexity((spec, s, t, y) in instance(10)) {
        let mid: Vec<f64> = s.iter().zip(&t).map(|(a, b)| 0.5 * (a + b)).collect();
        let lhs = spec.loss(&mid, y).unwrap();
        let rhs = 0.5 * (spec.loss(&s, y).unwrap() + spec.loss(&t, y).unwrap());
        prop_assert!(lhs <= rhs + 1e-12);
    }

    #[test]
    fn family_ordering(m in 2..=8usize, k_seed in any::<usize>(), s in prop::collection::vec(-5.0..5.0f64, 8), y_seed in any::<usize>()) {
        let k = 1 + k_seed % m;
        let y = y_seed % m;
        let s = &s[..m];
        let tk = LossSpec::top_k(m, k).unwrap().loss(s, y).unwrap();
        let uu = LossSpec::usunier(m, k).unwrap().loss(s, y).unwrap();
        let mh = LossSpec::max_hinge(m).unwrap().loss(s, y).unwrap();
        prop_assert!(tk <= uu + 1e-12 && uu <= mh + 1e-12, "{} {} {}", tk, uu, mh);
    }

    #[test]
    fn matches_vertex_enumeration(m in 2..=6usize, k_seed in any::<usize>(), f in 0..3usize, s in prop::collection::vec(-4.0..4.0f64, 6), y_seed in any::<usize>()) {
        let family = [LossFamily::MaxHinge, LossFamily::UnweightedTopK, LossFamily::UnweightedUsunier][f];
        let k = 1 + k_seed % m.min(3);
        let y = y_seed % m;
        let s = &s[..m];
        let spec = LossSpec::new(family, m, (family != LossFamily::MaxHinge).then_some(k), None).unwrap();
        let c = spec.margin_vector(s, y).unwrap();
        let (best, _) = bruteforce_maxdot(&simplex_vertices(family, m, k).unwrap(), &c.c).unwrap();
        prop_assert!((spec.loss(s, y).unwrap() - best).abs() <= 1e-12);
        let beta = spec.beta_argmax(&c).unwrap();
        prop_assert!((beta.dot(&c.c) - best).abs() <= 1e-12);
    }
}

#[test]
fn weighted_reductions() {
    let m = 6;
    let s = [0.3, -1.0, 2.5, 2.5, 0.0, 1.2];
    for y in 0..m {
        let mut e1 = vec![0.0; m];
        e1[0] = 1.0;
        let mh = LossSpec::max_hinge(m).unwrap().loss(&s, y).unwrap();
        assert_eq!(LossSpec::weighted_top_k(e1.clone()).unwrap().loss(&s, y).unwrap(), mh);
        assert_eq!(LossSpec::weighted_usunier(e1).unwrap().loss(&s, y).unwrap(), mh);
        for k in 1..m {
            let rho: Vec<f64> = (0..m).map(|j| if j < k { 1.0 / k as f64 } else { 0.0 }).collect();
            let a = LossSpec::weighted_top_k(rho.clone()).unwrap().loss(&s, y).unwrap();
            let b = LossSpec::top_k(m, k).unwrap().loss(&s, y).unwrap();
            assert!((a - b).abs() <= 1e-12);
            let a = LossSpec::weighted_usunier(rho).unwrap().loss(&s, y).unwrap();
            let b = LossSpec::usunier(m, k).unwrap().loss(&s, y).unwrap();
            assert!((a - b).abs() <= 1e-12);
        }
    }
}
