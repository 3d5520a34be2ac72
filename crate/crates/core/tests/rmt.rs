use nalgebra::DMatrix;
use orderbound_core::kernels::SymmetryGroup;
use orderbound_core::rmt::{
    empirical_moments, haar_special_orthogonal, linear_statistic, moments_of_values, orthogonal_angles,
    predicted_mean, sample_haar, Ensemble, EnsembleSpec,
};
use orderbound_core::testfunc::make_naive;
use orderbound_core::expectation_1level;
use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Composite Simpson on `[a, b]` with `n` (even) panels.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let inner: f64 = (1..n).map(|i| f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 }).sum();
    (f(a) + f(b) + inner) * h / 3.0
}

#[test]
fn so_even_mean_matches_the_finite_n_density() {
    let tf = make_naive(1.0 / 3.0).unwrap();
    let n = 20;
    let spec = EnsembleSpec::new(Ensemble::SoEven, n, 4000, 1);
    let emp = empirical_moments(&spec, &tf, 2).unwrap();
    // Oracle: SO(2N) one-point density (2N − 1 + sin((2N − 1)θ)/sin θ)/2π on
    // (0, π), each angle paired with its negative.
    let m = 2.0 * n as f64 - 1.0;
    let density = |t: f64| if t == 0.0 { 2.0 * m } else { m + (m * t).sin() / t.sin() } / (2.0 * PI);
    let exact = simpson(|t| 2.0 * tf.phi(n as f64 * t / PI) * density(t), 0.0, PI, 20_000);
    let se = emp.mean_std_error.unwrap();
    assert!((emp.mean - exact).abs() < 3.0 * se, "{} vs {exact} (se {se})", emp.mean);
    // The limit φ̂(0) + ½φ(0) is approached from below as the tail of φ enters.
    let limit = predicted_mean(Ensemble::SoEven, &tf).unwrap();
    let by_density = expectation_1level(&tf, SymmetryGroup::SoEven).unwrap() * tf.phi_at_zero();
    assert!((limit - 3.5).abs() < 1e-12 && (by_density - 3.5).abs() < 1e-12);
    assert!(exact < limit);
}

#[test]
fn permutation_conjugation_leaves_the_statistic_unchanged() {
    let tf = make_naive(0.5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let d = 12;
    let mut p = DMatrix::<f64>::zeros(d, d);
    for i in 0..d {
        p[(i, (i * 5 + 3) % d)] = 1.0;
    }
    let (mut plain, mut conj) = (Vec::new(), Vec::new());
    for _ in 0..300 {
        let q = haar_special_orthogonal(d, &mut rng);
        let c = &p * &q * p.transpose();
        plain.push(linear_statistic(&orthogonal_angles(&q), &tf, d));
        conj.push(linear_statistic(&orthogonal_angles(&c), &tf, d));
    }
    let a = moments_of_values(&plain, 2).unwrap();
    let b = moments_of_values(&conj, 2).unwrap();
    let se = a.mean_std_error.unwrap().max(b.mean_std_error.unwrap());
    assert!((a.mean - b.mean).abs() <= 3.0 * se);
}

#[test]
fn removing_the_forced_zero_shifts_by_phi_zero() {
    let tf = make_naive(0.4).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let d = 2 * 6 + 1;
    for _ in 0..20 {
        let angles = sample_haar(Ensemble::SoOdd, 6, &mut rng);
        let full = linear_statistic(&angles, &tf, d);
        let mut without = angles.clone();
        let zero = without.iter().position(|&t| t == 0.0).unwrap();
        without.remove(zero);
        assert!((full - linear_statistic(&without, &tf, d) - tf.phi_at_zero()).abs() < 1e-12);
    }
}

#[test]
fn unitary_odd_moments_vanish() {
    let tf = make_naive(0.3).unwrap();
    let spec = EnsembleSpec::new(Ensemble::U, 16, 4000, 2);
    let emp = empirical_moments(&spec, &tf, 3).unwrap();
    let m3 = emp.centered(3).unwrap();
    assert!(m3.abs() < 3.0 * emp.std_error(3).unwrap() + 0.01, "{m3}");
    // Oracle: U(N) angles are uniform, so the mean is ∫ φ over |x| ≤ N/2.
    let exact = simpson(|x| tf.phi(x), -8.0, 8.0, 20_000);
    assert!((emp.mean - exact).abs() < 3.0 * emp.mean_std_error.unwrap());
}

#[test]
fn every_angle_is_a_root_of_the_matrix() {
    // Oracle: e^{±iθ} are eigenvalues iff Q² − 2cos θ·Q + I is singular.
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for d in [10, 11] {
        let q = haar_special_orthogonal(d, &mut rng);
        let q2 = &q * &q;
        for &t in &orthogonal_angles(&q) {
            let m = &q2 - &q * (2.0 * t.cos()) + DMatrix::identity(d, d);
            let smallest = m.singular_values().iter().copied().fold(f64::INFINITY, f64::min);
            assert!(smallest < 1e-6, "d={d} θ={t}: {smallest}");
        }
    }
}
