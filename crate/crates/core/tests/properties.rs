//! Property-based invariants of the premium, the dual objects and the
//! comonotone integral.

use orlicz_core::dual::{dual_search, relative_entropy, DualKind};
use orlicz_core::harness::builtin_panel;
use orlicz_core::premium::expected_loss;
use orlicz_core::prob::comonotone_integral;
use orlicz_core::{orlicz_premium, FiniteProbabilitySpace, MeasureChange, OrliczFunction, RandomVariable, DEFAULT_TOL};
use proptest::prelude::*;

fn phi_strategy() -> impl Strategy<Value = OrliczFunction> {
    let panel = builtin_panel();
    (0..panel.len()).prop_map(move |i| panel[i].clone())
}

fn weights(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.01f64..1.0, n).prop_map(|w| {
        let s: f64 = w.iter().sum();
        w.into_iter().map(|v| v / s).collect()
    })
}

/// A variable on 1–6 outcomes with values in `[0, 5]`.
fn variable() -> impl Strategy<Value = RandomVariable> {
    (1usize..=6).prop_flat_map(|n| (weights(n), prop::collection::vec(0.0f64..5.0, n))).prop_map(|(p, v)| {
        RandomVariable::new(FiniteProbabilitySpace::new(p).unwrap(), v).unwrap()
    })
}

/// Two variables on a common space.
fn variable_pair() -> impl Strategy<Value = (RandomVariable, RandomVariable)> {
    (1usize..=6)
        .prop_flat_map(|n| (weights(n), prop::collection::vec(0.0f64..5.0, n), prop::collection::vec(0.0f64..5.0, n)))
        .prop_map(|(p, a, b)| {
            let space = FiniteProbabilitySpace::new(p).unwrap();
            (RandomVariable::new(space.clone(), a).unwrap(), RandomVariable::new(space, b).unwrap())
        })
}

fn h(phi: &OrliczFunction, x: &RandomVariable) -> f64 {
    orlicz_premium(phi, x, DEFAULT_TOL).unwrap().value
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn positive_homogeneity(phi in phi_strategy(), x in variable(), c in 0.1f64..10.0) {
        let scaled = h(&phi, &x.scale(c).unwrap());
        prop_assert!(close(scaled, c * h(&phi, &x), 1e-8), "{phi}: H(cX) = {scaled}");
    }

    #[test]
    fn monotonicity(phi in phi_strategy(), (x, y) in variable_pair()) {
        let hi = x.zip_with(&y, f64::max).unwrap();
        prop_assert!(h(&phi, &x) <= h(&phi, &hi) * (1.0 + 1e-8) + 1e-12);
    }

    #[test]
    fn constants_are_fixed(phi in phi_strategy(), c in 0.01f64..100.0, n in 1usize..5) {
        let x = RandomVariable::constant(FiniteProbabilitySpace::uniform(n).unwrap(), c).unwrap();
        prop_assert!(close(h(&phi, &x), c, 1e-9));
    }

    #[test]
    fn premium_between_bounds(phi in phi_strategy(), x in variable()) {
        let v = h(&phi, &x);
        let u = phi.finite_bound().to_f64();
        let lower = if u.is_finite() { x.ess_sup() / u } else { 0.0 };
        prop_assert!(v >= lower - 1e-8 && v <= x.ess_sup() + 1e-8, "{phi}: {v}");
    }

    #[test]
    fn threshold_equivalence(phi in phi_strategy(), x in variable()) {
        let v = h(&phi, &x);
        let within = expected_loss(&phi, &x, 1.0).to_f64() <= 1.0;
        if v < 1.0 - 1e-9 {
            prop_assert!(within);
        }
        if v > 1.0 + 1e-9 {
            prop_assert!(!within);
        }
    }

    #[test]
    fn relative_entropy_is_nonnegative((r, q) in (2usize..=6).prop_flat_map(|n| (weights(n), weights(n)))) {
        let space = FiniteProbabilitySpace::uniform(r.len()).unwrap();
        let r = MeasureChange::from_probabilities(space.clone(), &r).unwrap();
        let q = MeasureChange::from_probabilities(space, &q).unwrap();
        prop_assert!(relative_entropy(&r, &q).to_f64() >= -1e-15);
        prop_assert!(relative_entropy(&r, &r).to_f64().abs() <= 1e-12);
    }

    #[test]
    fn comonotone_integral_dominates_any_rearrangement(
        (values, q, perm) in (1usize..=6).prop_flat_map(|n| (
            prop::collection::vec(0.0f64..5.0, n),
            weights(n),
            Just((0..n).collect::<Vec<usize>>()).prop_shuffle(),
        ))
    ) {
        let n = values.len();
        let space = FiniteProbabilitySpace::uniform(n).unwrap();
        let x = RandomVariable::new(space.clone(), values).unwrap();
        let d = MeasureChange::from_probabilities(space, &q).unwrap();
        let bound = comonotone_integral(&x, &d).unwrap();
        let rearranged: f64 = (0..n).map(|i| x.values()[i] * d.density()[perm[i]]).sum::<f64>() / n as f64;
        prop_assert!(rearranged <= bound + 1e-12 * bound.max(1.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn weak_duality(
        which in 0usize..3,
        (p, v) in (2usize..=3).prop_flat_map(|n| (weights(n), prop::collection::vec(0.0f64..5.0, n)))
    ) {
        let phi = [OrliczFunction::power(2.0), OrliczFunction::expectile(0.8), OrliczFunction::power(1.0)][which].clone().unwrap();
        let x = RandomVariable::new(FiniteProbabilitySpace::new(p).unwrap(), v).unwrap();
        let r = dual_search(&phi, &x, DualKind::Arithmetic, 0.05, 1e-9).unwrap();
        prop_assert_eq!(r.weak_duality_violations, 0);
        prop_assert!(r.certificate.lower_bound <= r.primal + 1e-9);
    }
}
