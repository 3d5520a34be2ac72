//! Search over generator coefficients for test-function slots that minimise
//! the moment bound at a fixed rank.
//!
//! Each slot is either a fixed test function or a parametrised generator
//! family with a coefficient box. All free coefficients are concatenated and
//! searched jointly by Nelder-Mead, restarted from uniform random points in
//! the box. Restarts run in parallel, each on its own ChaCha stream derived
//! from `(seed, restart index)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bounds::{bound_moment, BoundError};
use crate::kernels::SymmetryGroup;
use crate::moments::{mock_gaussian_threshold, with_r_threshold, MomentFamily, Regime};
use crate::testfunc::{make_from_generator, GeneratorKind, GeneratorSpec, TestFunction};

/// Base of the penalty returned for infeasible points.
pub const PENALTY: f64 = 1.0e6;
/// Violation charged when a slot cannot be built at all.
const BUILD_FAILURE_VIOLATION: f64 = 1.0e6;
const SUPPORT_SLACK: f64 = 1.0e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OptimizeError {
    #[error("problem has no slots")]
    NoSlots,
    #[error("slot {slot}: coefficient box needs lower ≤ upper, finite, one pair per coefficient")]
    InvalidBox { slot: usize },
    #[error("slot {slot}: half-support {half} exceeds half the support budget {budget}")]
    HalfSupportExceedsBudget { slot: usize, half: f64, budget: f64 },
    #[error("slot {slot}: fixed test function has support {support} beyond the budget {budget}")]
    FixedSupportExceedsBudget { slot: usize, support: f64, budget: f64 },
    #[error("support budget {budget} is outside the {regime} regime for order {order} (threshold {threshold})")]
    BudgetOutsideRegime {
        budget: f64,
        regime: Regime,
        order: usize,
        threshold: f64,
    },
    #[error("initial point has {got} coefficients, expected {expected}")]
    InitialPointLength { expected: usize, got: usize },
    #[error("settings need restarts ≥ 1, max_evals ≥ 1 and a non-negative simplex tolerance")]
    InvalidSettings,
    #[error("no feasible point found in {restarts} restart(s)")]
    NoFeasiblePoint { restarts: usize },
    #[error(transparent)]
    Bound(#[from] BoundError),
}

/// Search space of one slot.
#[derive(Debug, Clone)]
pub enum GeneratorBasis {
    Fixed(TestFunction),
    Family {
        kind: GeneratorKind,
        lower: Vec<f64>,
        upper: Vec<f64>,
        half_support: f64,
    },
}

impl GeneratorBasis {
    pub fn family(
        kind: GeneratorKind,
        lower: Vec<f64>,
        upper: Vec<f64>,
        half_support: f64,
    ) -> Self {
        GeneratorBasis::Family {
            kind,
            lower,
            upper,
            half_support,
        }
    }

    /// `Σ c_k cos(kπt/h)`, `k < dimension`, each coefficient in `[−bound, bound]`.
    pub fn cosine_series(dimension: usize, half_support: f64, bound: f64) -> Self {
        Self::family(
            GeneratorKind::CosineSeries,
            vec![-bound; dimension],
            vec![bound; dimension],
            half_support,
        )
    }

    pub fn polynomial(dimension: usize, half_support: f64, bound: f64) -> Self {
        Self::family(
            GeneratorKind::Polynomial,
            vec![-bound; dimension],
            vec![bound; dimension],
            half_support,
        )
    }

    /// `sin(a·t²)` with `a ∈ [lower, upper]`.
    pub fn sin_of_square(half_support: f64, lower: f64, upper: f64) -> Self {
        Self::family(GeneratorKind::SinOfSquare, vec![lower], vec![upper], half_support)
    }

    pub fn dimension(&self) -> usize {
        match self {
            GeneratorBasis::Fixed(_) => 0,
            GeneratorBasis::Family { lower, .. } => lower.len(),
        }
    }

    fn build(&self, coeffs: &[f64]) -> Option<TestFunction> {
        match self {
            GeneratorBasis::Fixed(tf) => Some(tf.clone()),
            GeneratorBasis::Family {
                kind, half_support, ..
            } => {
                let spec = GeneratorSpec::new(*kind, coeffs.to_vec(), *half_support).ok()?;
                make_from_generator(spec).ok()
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct OptimizationProblem {
    pub family: SymmetryGroup,
    pub rank: u64,
    /// One basis per slot; each slot enters the moment twice.
    pub slots: Vec<GeneratorBasis>,
    pub support_budget: f64,
    pub weight_k: u32,
    pub regime: Regime,
}

impl OptimizationProblem {
    pub fn new(family: SymmetryGroup, rank: u64, slots: Vec<GeneratorBasis>, support_budget: f64) -> Self {
        Self {
            family,
            rank,
            slots,
            support_budget,
            weight_k: 2,
            regime: Regime::Auto,
        }
    }

    pub fn with_regime(mut self, regime: Regime) -> Self {
        self.regime = regime;
        self
    }

    pub fn with_weight(mut self, weight_k: u32) -> Self {
        self.weight_k = weight_k;
        self
    }

    pub fn moment_order(&self) -> usize {
        2 * self.slots.len()
    }

    pub fn dimension(&self) -> usize {
        self.slots.iter().map(GeneratorBasis::dimension).sum()
    }

    /// Lower and upper corners of the concatenated box.
    pub fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
        let mut lo = Vec::new();
        let mut hi = Vec::new();
        for slot in &self.slots {
            if let GeneratorBasis::Family { lower, upper, .. } = slot {
                lo.extend_from_slice(lower);
                hi.extend_from_slice(upper);
            }
        }
        (lo, hi)
    }

    pub fn validate(&self) -> Result<(), OptimizeError> {
        if self.slots.is_empty() {
            return Err(OptimizeError::NoSlots);
        }
        let budget = self.support_budget;
        let n = self.moment_order();
        let mock = mock_gaussian_threshold(n, self.weight_k);
        let with_r = with_r_threshold(n);
        let unsplit = MomentFamily::try_from(self.family).ok() == Some(MomentFamily::Unsplit);
        let (regime, threshold) = match self.regime {
            Regime::MockGaussian => (Regime::MockGaussian, mock),
            Regime::WithR => (Regime::WithR, with_r),
            Regime::Auto if unsplit => (Regime::MockGaussian, mock),
            Regime::Auto => (Regime::Auto, mock.max(with_r)),
        };
        if !(budget > 0.0) || budget > threshold * (1.0 + SUPPORT_SLACK) {
            return Err(OptimizeError::BudgetOutsideRegime {
                budget,
                regime,
                order: n,
                threshold,
            });
        }
        for (slot, basis) in self.slots.iter().enumerate() {
            match basis {
                GeneratorBasis::Fixed(tf) => {
                    let support = tf.support_bound();
                    if support > budget * (1.0 + SUPPORT_SLACK) {
                        return Err(OptimizeError::FixedSupportExceedsBudget { slot, support, budget });
                    }
                }
                GeneratorBasis::Family {
                    lower,
                    upper,
                    half_support,
                    ..
                } => {
                    let ok = lower.len() == upper.len()
                        && lower
                            .iter()
                            .zip(upper)
                            .all(|(l, u)| l.is_finite() && u.is_finite() && l <= u);
                    if !ok {
                        return Err(OptimizeError::InvalidBox { slot });
                    }
                    if 2.0 * half_support > budget * (1.0 + SUPPORT_SLACK) {
                        return Err(OptimizeError::HalfSupportExceedsBudget {
                            slot,
                            half: *half_support,
                            budget,
                        });
                    }
                }
            }
        }
        Ok(())
    }

    /// Builds the slot test functions, or the violation magnitude when some
    /// slot cannot be built or has `r ≤ c_φ`.
    pub fn build_slots(&self, coeffs: &[f64]) -> Result<Vec<TestFunction>, f64> {
        let mut out = Vec::with_capacity(self.slots.len());
        let mut offset = 0;
        let mut violation: f64 = 0.0;
        for basis in &self.slots {
            let d = basis.dimension();
            let Some(tf) = basis.build(&coeffs[offset..offset + d]) else {
                return Err(BUILD_FAILURE_VIOLATION);
            };
            offset += d;
            let gap = tf.rank_threshold() - self.rank as f64;
            if gap >= 0.0 {
                violation = violation.max(gap + f64::EPSILON);
            }
            out.push(tf);
        }
        if violation > 0.0 {
            Err(violation)
        } else {
            Ok(out)
        }
    }
}

/// Objective value with its feasibility flag.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub value: f64,
    pub feasible: bool,
}

/// The moment bound at `coeffs`, or `PENALTY·(1 + violation)` for points
/// that violate `r > c_φ` or cannot be built.
pub fn objective(coeffs: &[f64], problem: &OptimizationProblem) -> f64 {
    evaluate(coeffs, problem).value
}

pub fn evaluate(coeffs: &[f64], problem: &OptimizationProblem) -> Evaluation {
    let penalty = |violation: f64| Evaluation {
        value: PENALTY * (1.0 + violation),
        feasible: false,
    };
    let slots = match problem.build_slots(coeffs) {
        Ok(s) => s,
        Err(v) => return penalty(v),
    };
    match bound_moment(&slots, problem.family, problem.rank, problem.weight_k, problem.regime) {
        Ok(b) if b.upper_bound.is_finite() => Evaluation {
            value: b.upper_bound,
            feasible: true,
        },
        _ => penalty(BUILD_FAILURE_VIOLATION),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSettings {
    pub restarts: usize,
    pub seed: u64,
    pub max_evals: usize,
    /// Stop when the simplex spread falls below this fraction of its best value.
    pub simplex_tolerance: f64,
    /// Starting point of restart 0; later restarts start at random.
    pub initial: Option<Vec<f64>>,
}

impl Default for SearchSettings {
    fn default() -> Self {
        Self {
            restarts: 16,
            seed: 0,
            max_evals: 2000,
            simplex_tolerance: 1e-12,
            initial: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestartTrace {
    pub restart: usize,
    pub start: Vec<f64>,
    pub start_value: f64,
    pub best: Vec<f64>,
    pub best_value: f64,
    pub feasible: bool,
    pub evaluations: usize,
    pub converged: bool,
    /// Best value after each simplex iteration.
    pub history: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    /// Best coefficients split per slot (empty for fixed slots).
    pub best_coefficients: Vec<Vec<f64>>,
    pub best_bound: f64,
    /// Spec strings of the best slot test functions.
    pub best_slots: Vec<String>,
    pub trace: Vec<RestartTrace>,
}

fn clamp_into(x: &mut [f64], lo: &[f64], hi: &[f64]) {
    for ((v, l), h) in x.iter_mut().zip(lo).zip(hi) {
        *v = v.clamp(*l, *h);
    }
}

struct Counter<'a> {
    problem: &'a OptimizationProblem,
    evals: usize,
    best: Evaluation,
    best_x: Vec<f64>,
}

impl Counter<'_> {
    fn eval(&mut self, x: &[f64]) -> f64 {
        self.evals += 1;
        let e = evaluate(x, self.problem);
        if e.value < self.best.value {
            self.best = e;
            self.best_x = x.to_vec();
        }
        e.value
    }
}

fn nelder_mead(
    problem: &OptimizationProblem,
    start: Vec<f64>,
    lo: &[f64],
    hi: &[f64],
    settings: &SearchSettings,
    restart: usize,
) -> RestartTrace {
    let d = start.len();
    let mut counter = Counter {
        problem,
        evals: 0,
        best: Evaluation {
            value: f64::INFINITY,
            feasible: false,
        },
        best_x: start.clone(),
    };
    let start_value = counter.eval(&start);
    let mut history = vec![start_value];
    let mut converged = d == 0;

    if d > 0 {
        let mut simplex = vec![(start.clone(), start_value)];
        for i in 0..d {
            let mut p = start.clone();
            let width = hi[i] - lo[i];
            let step = if width > 0.0 { 0.1 * width } else { 0.0 };
            p[i] = if p[i] + step <= hi[i] { p[i] + step } else { p[i] - step };
            let f = counter.eval(&p);
            simplex.push((p, f));
        }
        while counter.evals < settings.max_evals {
            simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
            let f_best = simplex[0].1;
            let f_worst = simplex[d].1;
            history.push(f_best);
            let spread = f_worst - f_best;
            if spread <= settings.simplex_tolerance * f_best.abs() {
                converged = true;
                break;
            }
            let diameter = simplex[1..]
                .iter()
                .flat_map(|(p, _)| p.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()))
                .fold(0.0, f64::max);
            if diameter <= 1e-15 * (1.0 + simplex[0].0.iter().fold(0.0f64, |m, v| m.max(v.abs()))) {
                converged = true;
                break;
            }
            let mut centroid = vec![0.0; d];
            for (p, _) in &simplex[..d] {
                for (c, v) in centroid.iter_mut().zip(p) {
                    *c += v / d as f64;
                }
            }
            let toward = |t: f64| -> Vec<f64> {
                let mut q: Vec<f64> = centroid
                    .iter()
                    .zip(&simplex[d].0)
                    .map(|(c, w)| c + t * (c - w))
                    .collect();
                clamp_into(&mut q, lo, hi);
                q
            };
            let reflected = toward(1.0);
            let f_r = counter.eval(&reflected);
            if f_r < f_best {
                let expanded = toward(2.0);
                let f_e = counter.eval(&expanded);
                simplex[d] = if f_e < f_r { (expanded, f_e) } else { (reflected, f_r) };
                continue;
            }
            if f_r < simplex[d - 1].1 {
                simplex[d] = (reflected, f_r);
                continue;
            }
            let (contracted, f_c) = if f_r < f_worst {
                let c = toward(0.5);
                let f = counter.eval(&c);
                (c, f)
            } else {
                let c = toward(-0.5);
                let f = counter.eval(&c);
                (c, f)
            };
            if f_c < f_r.min(f_worst) {
                simplex[d] = (contracted, f_c);
                continue;
            }
            let anchor = simplex[0].0.clone();
            for (p, f) in simplex.iter_mut().skip(1) {
                for (v, a) in p.iter_mut().zip(&anchor) {
                    *v = a + 0.5 * (*v - a);
                }
                *f = counter.eval(p);
            }
        }
    }

    RestartTrace {
        restart,
        start,
        start_value,
        best: counter.best_x,
        best_value: counter.best.value,
        feasible: counter.best.feasible,
        evaluations: counter.evals,
        converged,
        history,
    }
}

fn restart_start(restart: usize, lo: &[f64], hi: &[f64], settings: &SearchSettings) -> Vec<f64> {
    if restart == 0 {
        if let Some(init) = &settings.initial {
            let mut x = init.clone();
            clamp_into(&mut x, lo, hi);
            return x;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
    rng.set_stream(restart as u64);
    lo.iter()
        .zip(hi)
        .map(|(&l, &h)| if h > l { rng.random_range(l..=h) } else { l })
        .collect()
}

/// Multi-start Nelder-Mead; deterministic for a fixed seed.
pub fn search(problem: &OptimizationProblem, settings: &SearchSettings) -> Result<SearchResult, OptimizeError> {
    problem.validate()?;
    if settings.restarts == 0 || settings.max_evals == 0 || !(settings.simplex_tolerance >= 0.0) {
        return Err(OptimizeError::InvalidSettings);
    }
    let (lo, hi) = problem.bounds();
    if let Some(init) = &settings.initial {
        if init.len() != lo.len() {
            return Err(OptimizeError::InitialPointLength {
                expected: lo.len(),
                got: init.len(),
            });
        }
    }
    // A singleton search space needs a single evaluation.
    let restarts = if lo.is_empty() { 1 } else { settings.restarts };
    let trace: Vec<RestartTrace> = (0..restarts)
        .into_par_iter()
        .map(|k| nelder_mead(problem, restart_start(k, &lo, &hi, settings), &lo, &hi, settings, k))
        .collect();

    let winner = trace
        .iter()
        .filter(|t| t.feasible)
        .min_by(|a, b| a.best_value.total_cmp(&b.best_value).then(a.restart.cmp(&b.restart)))
        .ok_or(OptimizeError::NoFeasiblePoint { restarts })?;
    let slots = problem
        .build_slots(&winner.best)
        .map_err(|_| OptimizeError::NoFeasiblePoint { restarts })?;
    let mut best_coefficients = Vec::new();
    let mut offset = 0;
    for basis in &problem.slots {
        let d = basis.dimension();
        best_coefficients.push(winner.best[offset..offset + d].to_vec());
        offset += d;
    }
    Ok(SearchResult {
        best_coefficients,
        best_bound: winner.best_value,
        best_slots: slots.iter().map(TestFunction::label).collect(),
        trace,
    })
}
