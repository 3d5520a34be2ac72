use orderbound_core::bounds::{bound_level1, bound_level2, bound_moment, BoundError};
use orderbound_core::kernels::{expectation_1level, SymmetryGroup};
use orderbound_core::moments::{
    centered_moment, enumerate_matchings, matching_sum, r_term, MomentFamily, MomentRequest, Regime,
};
use orderbound_core::testfunc::{make_from_generator, make_naive, sigma2, GeneratorSpec, TestFunction};
use proptest::prelude::*;

fn naive(v: f64) -> TestFunction {
    make_naive(v).unwrap()
}

fn double_factorial(n: u64) -> u64 {
    (1..=n).rev().step_by(2).product()
}

fn cosine(coeffs: Vec<f64>, half: f64) -> TestFunction {
    make_from_generator(GeneratorSpec::cosine_series(coeffs, half).unwrap()).unwrap()
}

#[test]
fn matching_counts_are_double_factorials() {
    for m in 1..=6u64 {
        let n = (2 * m) as usize;
        assert_eq!(enumerate_matchings(n).unwrap().len() as u64, double_factorial(2 * m - 1));
    }
}

#[test]
fn naive_variance_is_one_third_for_every_width() {
    for v in [1.0 / 6.0, 0.25, 1.0 / 3.0, 0.5, 1.0] {
        let tf = naive(v);
        assert!((sigma2(&tf, &tf).unwrap() - 1.0 / 3.0).abs() < 1e-10, "v = {v}");
    }
}

#[test]
fn test_functions_are_non_negative_on_a_grid() {
    let tfs = [
        naive(1.0 / 3.0),
        naive(2.0),
        make_from_generator(GeneratorSpec::sin_of_square(0.125).unwrap()).unwrap(),
        cosine(vec![1.0, -0.7, 0.3], 0.2),
        make_from_generator(GeneratorSpec::polynomial(vec![0.2, -1.0, 0.5], 0.3).unwrap()).unwrap(),
    ];
    for tf in &tfs {
        for i in 0..10_000 {
            let x = -100.0 + 200.0 * i as f64 / 9_999.0;
            assert!(tf.phi(x) >= -1e-12, "{tf} at {x}: {}", tf.phi(x));
        }
    }
}

#[test]
fn transform_vanishes_outside_support() {
    let g = make_from_generator(GeneratorSpec::sin_of_square(0.125).unwrap()).unwrap();
    for tf in [naive(0.3), g] {
        let s = tf.support_bound();
        for k in 0..50 {
            let y = s * (1.0 + k as f64 * 0.1);
            assert_eq!(tf.phi_hat(y), 0.0);
            assert_eq!(tf.phi_hat(-y), 0.0);
        }
    }
}

#[test]
fn o_expectation_is_the_so_average() {
    for tf in [naive(0.5), naive(1.5), cosine(vec![1.0, 0.4], 0.6)] {
        let o = expectation_1level(&tf, SymmetryGroup::O).unwrap();
        let e = expectation_1level(&tf, SymmetryGroup::SoEven).unwrap();
        let d = expectation_1level(&tf, SymmetryGroup::SoOdd).unwrap();
        assert!((o - 0.5 * (e + d)).abs() < 1e-12);
    }
}

#[test]
fn reduction_to_identical_inputs() {
    // Oracle: (2m − 1)!!·σ^{2m} ± R from independently computed σ² and R.
    let tfs = [naive(1.0 / 3.0), naive(0.2), cosine(vec![1.0, 0.5], 0.1)];
    for tf in &tfs {
        for (m, regime) in [(1usize, Regime::WithR), (2, Regime::WithR), (2, Regime::MockGaussian), (3, Regime::MockGaussian)] {
            let n = 2 * m;
            if tf.support_bound() > 1.0 / (n as f64 - 1.0) && regime == Regime::WithR {
                continue;
            }
            if tf.support_bound() > 1.5 / n as f64 && regime == Regime::MockGaussian {
                continue;
            }
            let s2 = sigma2(tf, tf).unwrap();
            let r = r_term(&vec![tf.clone(); n]).unwrap();
            for (family, sign) in [(MomentFamily::SoEven, 1.0), (MomentFamily::SoOdd, -1.0)] {
                let req = MomentRequest::new(vec![tf.clone(); n], family).with_regime(regime);
                let got = centered_moment(&req).unwrap().value;
                let r_part = if regime == Regime::WithR { sign * r } else { 0.0 };
                let expect = double_factorial(n as u64 - 1) as f64 * s2.powi(m as i32) + r_part;
                assert!((got - expect).abs() < 1e-10, "{tf} n={n} {regime}: {got} vs {expect}");
            }
        }
    }
}

#[test]
fn families_differ_by_twice_r() {
    let four = vec![naive(1.0 / 3.0); 4];
    let even = centered_moment(&MomentRequest::new(four.clone(), MomentFamily::SoEven).with_regime(Regime::WithR)).unwrap();
    let odd = centered_moment(&MomentRequest::new(four.clone(), MomentFamily::SoOdd).with_regime(Regime::WithR)).unwrap();
    assert!((even.value - odd.value - 2.0 * r_term(&four).unwrap()).abs() < 1e-15);
}

#[test]
fn parity_rejection() {
    let tf = naive(1.0 / 3.0);
    for (family, r) in [(SymmetryGroup::SoEven, 7), (SymmetryGroup::SoOdd, 8)] {
        let pair = [tf.clone(), tf.clone()];
        assert!(matches!(
            bound_moment(&pair, family, r, 2, Regime::WithR),
            Err(BoundError::ParityMismatch { .. })
        ));
        assert!(matches!(bound_level1(&tf, family, r), Err(BoundError::ParityMismatch { .. })));
        assert!(matches!(bound_level2(&tf, &tf, family, r), Err(BoundError::ParityMismatch { .. })));
    }
}

#[test]
fn tail_dominance_for_naive_inputs() {
    let third = naive(1.0 / 3.0);
    let one = naive(1.0);
    for r in (8..=50).step_by(2) {
        let m4 = bound_moment(&[third.clone(), third.clone()], SymmetryGroup::SoEven, r, 2, Regime::WithR)
            .unwrap()
            .upper_bound;
        let l2 = bound_level2(&one, &one, SymmetryGroup::SoEven, r).unwrap().upper_bound;
        let l1 = bound_level1(&one, SymmetryGroup::SoEven, r).unwrap().upper_bound;
        assert!(m4 < l2 && l2 < l1, "r = {r}: {m4} {l2} {l1}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn permutation_invariance(
        widths in proptest::collection::vec(0.05f64..0.25, 4),
        perm in Just(vec![0usize, 1, 2, 3]).prop_shuffle(),
    ) {
        let tfs: Vec<TestFunction> = widths.iter().map(|&v| naive(v)).collect();
        let permuted: Vec<TestFunction> = perm.iter().map(|&i| tfs[i].clone()).collect();
        for regime in [Regime::WithR, Regime::MockGaussian] {
            let a = centered_moment(&MomentRequest::new(tfs.clone(), MomentFamily::SoEven).with_regime(regime)).unwrap();
            let b = centered_moment(&MomentRequest::new(permuted.clone(), MomentFamily::SoEven).with_regime(regime)).unwrap();
            prop_assert!((a.value - b.value).abs() <= 1e-12 * a.value.abs().max(1.0));
        }
    }

    #[test]
    fn even_matching_sums_are_non_negative(widths in proptest::collection::vec(0.05f64..1.0, 1..4)) {
        let mut tfs = Vec::new();
        for v in widths {
            tfs.push(naive(v));
            tfs.push(naive(v));
        }
        prop_assert!(matching_sum(&tfs).unwrap() >= 0.0);
    }

    #[test]
    fn moment_bound_decreases_with_rank(v in 0.05f64..0.3333, r in 4u64..400) {
        let tf = naive(v);
        let r = r.max(tf.min_rank());
        let r = if r % 2 == 1 { r + 1 } else { r };
        let pair = [tf.clone(), tf];
        let a = bound_moment(&pair, SymmetryGroup::SoEven, r, 2, Regime::WithR).unwrap();
        let b = bound_moment(&pair, SymmetryGroup::SoEven, r + 2, 2, Regime::WithR).unwrap();
        prop_assert!(b.upper_bound < a.upper_bound);
    }

    #[test]
    fn bounds_are_scale_invariant(c in 0.01f64..100.0, r in 10u64..200) {
        let r = 2 * r;
        let tf = naive(1.0 / 3.0);
        let scaled = tf.scaled(c).unwrap();
        let rel = |a: f64, b: f64| (a - b).abs() / a.abs();
        let m = bound_moment(&[tf.clone(), tf.clone()], SymmetryGroup::SoEven, r, 2, Regime::WithR).unwrap();
        let ms = bound_moment(&[scaled.clone(), scaled.clone()], SymmetryGroup::SoEven, r, 2, Regime::WithR).unwrap();
        prop_assert!(rel(m.upper_bound, ms.upper_bound) < 1e-9);
        let l1 = bound_level1(&tf, SymmetryGroup::SoEven, r).unwrap();
        let l1s = bound_level1(&scaled, SymmetryGroup::SoEven, r).unwrap();
        prop_assert!(rel(l1.upper_bound, l1s.upper_bound) < 1e-12);
        let l2 = bound_level2(&tf, &tf, SymmetryGroup::SoEven, r).unwrap();
        let l2s = bound_level2(&scaled, &scaled, SymmetryGroup::SoEven, r).unwrap();
        prop_assert!(rel(l2.upper_bound, l2s.upper_bound) < 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn generator_bound_is_scale_invariant(c in 0.1f64..10.0, a in 0.5f64..2.0) {
        let g = make_from_generator(GeneratorSpec::new(
            orderbound_core::testfunc::GeneratorKind::SinOfSquare, vec![a], 0.125).unwrap()).unwrap();
        let n = naive(0.25);
        let b = bound_moment(&[g.clone(), n.clone()], SymmetryGroup::SoEven, 100, 2, Regime::MockGaussian).unwrap();
        let bs = bound_moment(&[g.scaled(c).unwrap(), n], SymmetryGroup::SoEven, 100, 2, Regime::MockGaussian).unwrap();
        prop_assert!((b.upper_bound - bs.upper_bound).abs() < 1e-9 * b.upper_bound);
    }
}
