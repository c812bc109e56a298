//! Property tests of the symbolic layer and of the algebraic identities.

use proptest::prelude::*;

use algebroid_core::algebroid::{nijenhuis_algebroid, uniform_box};
use algebroid_core::calculus::{d_rho, pullback, BundleMorphism};
use algebroid_core::expr::{simplify, Expr};
use algebroid_core::limits::{ind_equal, oscillator_tower, push, tangent_tower, IndPoint};
use algebroid_core::prolongation::{decompose, make_element, Fibration};
use algebroid_core::random;
use algebroid_core::report::sampled_residual;
use algebroid_core::{Algebroid, CheckConfig};

fn c(v: f64) -> Expr {
    Expr::constant(v)
}

/// Polynomials with small integer coefficients in three variables.
fn poly() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![(-3i32..=3).prop_map(|k| c(k as f64)), (0usize..3).prop_map(Expr::var)];
    leaf.prop_recursive(4, 24, 3, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 1..4).prop_map(Expr::sum),
            prop::collection::vec(inner.clone(), 1..3).prop_map(Expr::product),
            inner.clone().prop_map(|a| -a),
            (inner.clone(), 0i32..3).prop_map(|(a, k)| a.powi(k)),
            (inner.clone(), inner).prop_map(|(a, b)| a - b),
        ]
    })
}

/// Expressions that stay finite on [-1, 1]^3: denominators and logarithm
/// arguments are of the form `1 + p^2`.
fn smooth() -> impl Strategy<Value = Expr> {
    poly().prop_recursive(2, 16, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a / (c(1.0) + b.powi(2))),
            inner.clone().prop_map(|a| (c(1.0) + a.powi(2)).ln()),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a * b),
            (inner.clone(), inner).prop_map(|(a, b)| a + b),
        ]
    })
}

fn unit_point() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0..1.0f64, 3)
}

/// Points with coordinates in (1/4)Z, where small integer polynomials
/// evaluate without rounding.
fn dyadic_point() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec((-8i32..=8).prop_map(|k| k as f64 / 4.0), 3)
}

proptest! {
    #[test]
    fn derivative_matches_central_difference(e in smooth(), p in unit_point(), i in 0usize..3) {
        let h = 1e-5;
        let (mut hi, mut lo) = (p.clone(), p.clone());
        hi[i] += h;
        lo[i] -= h;
        let fd = (e.eval(&hi).unwrap() - e.eval(&lo).unwrap()) / (2.0 * h);
        let d = e.diff(i).eval(&p).unwrap();
        prop_assert!((d - fd).abs() <= 1e-6 * (1.0 + d.abs()), "{e}: d = {d}, fd = {fd}");
    }

    #[test]
    fn simplify_is_exact_on_polynomials(e in poly(), p in dyadic_point()) {
        let v = e.eval(&p).unwrap();
        prop_assume!(v.abs() < 1e12);
        prop_assert_eq!(simplify(&e).eval(&p).unwrap(), v);
    }

    #[test]
    fn simplify_preserves_values(e in smooth(), p in unit_point()) {
        let v = e.eval(&p).unwrap();
        let s = simplify(&e).eval(&p).unwrap();
        prop_assert!((s - v).abs() <= 1e-12 * v.abs().max(1.0), "{e}: {v} vs {s}");
    }

    #[test]
    fn simplify_is_idempotent(e in smooth()) {
        let once = simplify(&e);
        prop_assert_eq!(simplify(&once), once);
    }

    #[test]
    fn derivative_of_simplified_agrees(e in poly(), p in dyadic_point(), i in 0usize..3) {
        let a = e.diff(i).eval(&p).unwrap();
        let b = simplify(&e).diff(i).eval(&p).unwrap();
        prop_assume!(a.abs() < 1e12);
        prop_assert_eq!(a, b);
    }
}

fn n1() -> Algebroid {
    let f = (Expr::var(0).powi(2) + Expr::var(1).powi(2)) / c(2.0);
    let z = Expr::zero();
    nijenhuis_algebroid(vec![vec![f.clone(), z.clone()], vec![z, f]], uniform_box(2, -1.5, 1.5), &CheckConfig::default())
        .unwrap()
        .value
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn bracket_is_antisymmetric(seed in any::<u64>()) {
        let alg = n1();
        let mut rng = random::rng(seed);
        let s1 = random::section(&mut rng, 2, 2);
        let s2 = random::section(&mut rng, 2, 2);
        let sum = alg.bracket(&s1, &s2).unwrap().add(&alg.bracket(&s2, &s1).unwrap()).simplified();
        prop_assert!(sum.is_zero(), "{sum:?}");
    }

    #[test]
    fn jacobi_holds_on_random_triples(seed in any::<u64>()) {
        let alg = n1();
        let mut rng = random::rng(seed);
        let s: Vec<_> = (0..3).map(|_| random::section(&mut rng, 2, 2)).collect();
        let j = alg.jacobiator(&s[0], &s[1], &s[2]).unwrap();
        let (r, _) = sampled_residual(&j.0, &alg.samples(16)).unwrap();
        prop_assert!(r < 1e-9, "residual {r}");
    }

    #[test]
    fn d_squared_vanishes_on_random_forms(seed in any::<u64>(), degree in 0usize..=2) {
        let alg = n1();
        let mut rng = random::rng(seed);
        let w = random::form(&mut rng, 2, 2, degree);
        let dd = d_rho(&alg, &d_rho(&alg, &w).unwrap()).unwrap();
        let (r, _) = sampled_residual(dd.components(), &alg.samples(16)).unwrap();
        prop_assert!(r < 1e-9, "residual {r}");
    }

    #[test]
    fn pullback_is_functorial(seed in any::<u64>(), degree in 0usize..=2) {
        let mut rng = random::rng(seed);
        let map = |rng: &mut _| {
            let base = (0..2).map(|_| random::polynomial(rng, 2)).collect();
            let fiber = (0..2).map(|_| (0..2).map(|_| random::polynomial(rng, 2)).collect()).collect();
            BundleMorphism::new(base, fiber).unwrap()
        };
        let (first, second) = (map(&mut rng), map(&mut rng));
        let w = random::form(&mut rng, 2, 2, degree);
        let composite = pullback(&first.then(&second), &w).unwrap();
        let stepwise = pullback(&first, &pullback(&second, &w).unwrap()).unwrap();
        let diff = composite.sub(&stepwise).unwrap();
        let pts = algebroid_core::sampling::halton_points(&uniform_box(2, -1.0, 1.0), 16);
        let (r, _) = sampled_residual(diff.components(), &pts).unwrap();
        prop_assert!(r <= 1e-9 * (1.0 + composite.components().iter().map(|e| e.eval(&pts[0]).unwrap().abs()).fold(0.0, f64::max)));
    }

    #[test]
    fn decompose_inverts_make_element(
        p in prop::collection::vec(-1.5..1.5f64, 4),
        b in prop::collection::vec(-3.0..3.0f64, 2),
        v in prop::collection::vec(-3.0..3.0f64, 2),
    ) {
        let alg = n1();
        let fib = Fibration::new(2, 2).unwrap();
        let z = make_element(&alg, &fib, &p, &b, &v).unwrap();
        let (b2, v2) = decompose(&alg, &fib, &z).unwrap();
        prop_assert_eq!(&b2, &b);
        prop_assert_eq!(&v2, &v);
        prop_assert_eq!(make_element(&alg, &fib, &p, &b2, &v2).unwrap(), z);
    }
}

fn ind_point(depth: usize, dim: impl Fn(usize) -> usize) -> impl Strategy<Value = IndPoint> {
    (0..depth).prop_flat_map(move |level| {
        prop::collection::vec(-2.0..2.0f64, dim(level)).prop_map(move |coords| IndPoint::new(level, coords))
    })
}

proptest! {
    #[test]
    fn push_is_a_cocycle(p in ind_point(4, |l| l + 1), a in 0usize..4, b in 0usize..4) {
        let sys = tangent_tower(4).unwrap();
        let (j, k) = (p.level.max(a.min(b)), p.level.max(a.max(b)));
        let twice = push(&sys, &push(&sys, &p, j).unwrap(), k).unwrap();
        prop_assert_eq!(twice, push(&sys, &p, k).unwrap());
    }

    #[test]
    fn oscillator_push_is_a_cocycle(p in ind_point(3, |l| 2 * l + 2)) {
        let sys = oscillator_tower(3, &CheckConfig::default()).unwrap();
        let via = push(&sys, &push(&sys, &p, 1.max(p.level)).unwrap(), 2).unwrap();
        prop_assert_eq!(via, push(&sys, &p, 2).unwrap());
    }

    #[test]
    fn ind_equal_is_an_equivalence(p in ind_point(4, |l| l + 1), up in 0usize..4, other in ind_point(4, |l| l + 1)) {
        let sys = tangent_tower(4).unwrap();
        let q = push(&sys, &p, p.level.max(up)).unwrap();
        let r = push(&sys, &q, 3).unwrap();
        prop_assert!(ind_equal(&sys, &p, &p).unwrap());
        prop_assert!(ind_equal(&sys, &p, &q).unwrap() && ind_equal(&sys, &q, &p).unwrap());
        prop_assert!(ind_equal(&sys, &q, &r).unwrap() && ind_equal(&sys, &p, &r).unwrap());
        prop_assert_eq!(ind_equal(&sys, &p, &other).unwrap(), ind_equal(&sys, &other, &p).unwrap());
        if ind_equal(&sys, &p, &other).unwrap() {
            prop_assert!(ind_equal(&sys, &r, &other).unwrap());
        }
    }
}
