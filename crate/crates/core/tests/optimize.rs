use orderbound_core::kernels::SymmetryGroup;
use orderbound_core::moments::Regime;
use orderbound_core::optimize::{objective, search, GeneratorBasis, OptimizationProblem, SearchSettings};
use orderbound_core::testfunc::make_naive;

const SIN_SQUARE_R100: f64 = 3.7858e-9;

fn cosine_problem() -> OptimizationProblem {
    OptimizationProblem::new(
        SymmetryGroup::SoEven,
        100,
        vec![
            GeneratorBasis::cosine_series(4, 0.125, 1.0),
            GeneratorBasis::Fixed(make_naive(0.25).unwrap()),
        ],
        0.25,
    )
    .with_regime(Regime::MockGaussian)
}

#[test]
fn cosine_series_beats_sin_of_square() {
    let p = cosine_problem();
    // Oracle: coarse grid over the box (c₀ = 1 by scale invariance).
    let grid = [-1.0, 0.0, 1.0];
    let mut best = (f64::INFINITY, Vec::new());
    for &a in &grid {
        for &b in &grid {
            for &c in &grid {
                let x = vec![1.0, a, b, c];
                let v = objective(&x, &p);
                if v < best.0 {
                    best = (v, x);
                }
            }
        }
    }
    assert!(best.0 <= SIN_SQUARE_R100, "grid best {:e}", best.0);

    let settings = SearchSettings {
        restarts: 2,
        seed: 3,
        max_evals: 60,
        initial: Some(best.1.clone()),
        ..SearchSettings::default()
    };
    let r = search(&p, &settings).unwrap();
    assert!(r.best_bound <= best.0);
    assert!(r.best_bound <= SIN_SQUARE_R100);
    assert!(r.best_bound < 1.0, "penalty branch never wins");
    assert_eq!(r.best_coefficients.len(), 2);
    assert!(r.best_coefficients[1].is_empty());
}

#[test]
fn restarts_are_reproducible_across_calls() {
    let p = cosine_problem();
    let settings = SearchSettings {
        restarts: 2,
        seed: 99,
        max_evals: 25,
        ..SearchSettings::default()
    };
    let a = search(&p, &settings).unwrap();
    let b = search(&p, &settings).unwrap();
    assert_eq!(a.trace, b.trace);
    for t in &a.trace {
        assert!(t.best_value <= t.start_value);
        assert!(t.history.windows(2).all(|w| w[1] <= w[0] || w[0] == t.start_value));
    }
}
