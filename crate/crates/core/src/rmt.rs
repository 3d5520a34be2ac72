//! Monte Carlo check of the centered-moment predictions on Haar-random
//! matrices from SO(2N), SO(2N+1) and U(N).
//!
//! Orthogonal samples come from the QR factorisation of a Gaussian matrix
//! with the diagonal of `R` made positive, followed by a column flip when
//! the determinant is −1. Their eigenangles are read off the symmetric part
//! `(Q + Qᵀ)/2`, whose eigenvalues are the cosines of the angles, each
//! conjugate pair contributing a double eigenvalue.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::{Complex, DMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kernels::{expectation_1level, ExpectationError, SymmetryGroup};
use crate::moments::{centered_moment, with_r_threshold, MomentError, MomentFamily, MomentRequest, Regime};
use crate::testfunc::TestFunction;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RmtError {
    #[error("half-dimension N must be at least 1")]
    ZeroDimension,
    #[error("need at least one sample")]
    NoSamples,
    #[error("highest moment order must be at least 2, got {0}")]
    OrderTooSmall(usize),
    #[error("no ensemble for {0} (use so-even, so-odd or u)")]
    UnsupportedGroup(SymmetryGroup),
    #[error(transparent)]
    Expectation(#[from] ExpectationError),
    #[error(transparent)]
    Moment(#[from] MomentError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Ensemble {
    /// SO(2N).
    SoEven,
    /// SO(2N + 1).
    SoOdd,
    /// U(N).
    U,
}

impl Ensemble {
    pub fn dimension(self, half_dim: usize) -> usize {
        match self {
            Ensemble::SoEven => 2 * half_dim,
            Ensemble::SoOdd => 2 * half_dim + 1,
            Ensemble::U => half_dim,
        }
    }

    pub fn group(self) -> SymmetryGroup {
        match self {
            Ensemble::SoEven => SymmetryGroup::SoEven,
            Ensemble::SoOdd => SymmetryGroup::SoOdd,
            Ensemble::U => SymmetryGroup::U,
        }
    }

    pub fn family(self) -> MomentFamily {
        match self {
            Ensemble::SoEven => MomentFamily::SoEven,
            Ensemble::SoOdd => MomentFamily::SoOdd,
            Ensemble::U => MomentFamily::Unsplit,
        }
    }
}

impl TryFrom<SymmetryGroup> for Ensemble {
    type Error = RmtError;

    fn try_from(g: SymmetryGroup) -> Result<Self, Self::Error> {
        match g {
            SymmetryGroup::SoEven => Ok(Ensemble::SoEven),
            SymmetryGroup::SoOdd => Ok(Ensemble::SoOdd),
            SymmetryGroup::U => Ok(Ensemble::U),
            other => Err(RmtError::UnsupportedGroup(other)),
        }
    }
}

impl fmt::Display for Ensemble {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.group().tag())
    }
}

impl FromStr for Ensemble {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let g: SymmetryGroup = s.parse().map_err(|e: crate::kernels::UnknownGroup| e.to_string())?;
        Ensemble::try_from(g).map_err(|e| e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub ensemble: Ensemble,
    pub half_dim: usize,
    pub samples: usize,
    pub seed: u64,
}

impl EnsembleSpec {
    pub fn new(ensemble: Ensemble, half_dim: usize, samples: usize, seed: u64) -> Self {
        Self {
            ensemble,
            half_dim,
            samples,
            seed,
        }
    }

    pub fn dimension(&self) -> usize {
        self.ensemble.dimension(self.half_dim)
    }

    pub fn validate(&self) -> Result<(), RmtError> {
        if self.half_dim == 0 {
            return Err(RmtError::ZeroDimension);
        }
        if self.samples == 0 {
            return Err(RmtError::NoSamples);
        }
        Ok(())
    }
}

/// Gaussian QR with positive `diag(R)`; `None` when `R` is numerically
/// singular.
fn haar_orthogonal<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Option<DMatrix<f64>> {
    let g = DMatrix::<f64>::from_fn(d, d, |_, _| StandardNormal.sample(rng));
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..d {
        let rjj = r[(j, j)];
        if !(rjj.abs() > 1e-300) {
            return None;
        }
        if rjj < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    Some(q)
}

/// Haar-distributed element of SO(d).
pub fn haar_special_orthogonal<R: Rng + ?Sized>(d: usize, rng: &mut R) -> DMatrix<f64> {
    loop {
        if let Some(mut q) = haar_orthogonal(d, rng) {
            if q.determinant() < 0.0 {
                q.column_mut(0).neg_mut();
            }
            return q;
        }
    }
}

/// Haar-distributed element of U(d).
pub fn haar_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> DMatrix<Complex<f64>> {
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    loop {
        let g = DMatrix::<Complex<f64>>::from_fn(d, d, |_, _| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            Complex::new(re * scale, im * scale)
        });
        let qr = g.qr();
        let r = qr.r();
        let mut q = qr.q();
        let mut ok = true;
        for j in 0..d {
            let rjj = r[(j, j)];
            let norm = rjj.norm();
            if !(norm > 1e-300) {
                ok = false;
                break;
            }
            let phase = rjj / norm;
            for i in 0..d {
                q[(i, j)] *= phase;
            }
        }
        if ok {
            return q;
        }
    }
}

/// Eigenangles in `(−π, π]` of a special orthogonal matrix, sorted.
pub fn orthogonal_angles(q: &DMatrix<f64>) -> Vec<f64> {
    let d = q.nrows();
    let sym = (q + q.transpose()) * 0.5;
    let mut cosines: Vec<f64> = sym.symmetric_eigenvalues().iter().copied().collect();
    cosines.sort_by(|a, b| b.total_cmp(a));
    let mut angles = Vec::with_capacity(d);
    let mut rest = &cosines[..];
    if d % 2 == 1 {
        // The forced eigenvalue 1 is the largest cosine.
        angles.push(0.0);
        rest = &rest[1..];
    }
    for pair in rest.chunks_exact(2) {
        let c = (0.5 * (pair[0] + pair[1])).clamp(-1.0, 1.0);
        let theta = c.acos();
        angles.push(theta);
        angles.push(-theta);
    }
    for a in angles.iter_mut() {
        if *a <= -PI {
            *a += 2.0 * PI;
        }
    }
    angles.sort_by(f64::total_cmp);
    angles
}

/// Eigenangles in `(−π, π]` of a unitary matrix, sorted.
pub fn unitary_angles(u: &DMatrix<Complex<f64>>) -> Vec<f64> {
    let eig = u.clone().schur().eigenvalues().expect("complex Schur form is triangular");
    let mut angles: Vec<f64> = eig
        .iter()
        .map(|z| {
            let a = z.arg();
            if a <= -PI {
                a + 2.0 * PI
            } else {
                a
            }
        })
        .collect();
    angles.sort_by(f64::total_cmp);
    angles
}

/// Eigenangles of one Haar sample of dimension `ensemble.dimension(half_dim)`.
pub fn sample_haar<R: Rng + ?Sized>(ensemble: Ensemble, half_dim: usize, rng: &mut R) -> Vec<f64> {
    let d = ensemble.dimension(half_dim);
    match ensemble {
        Ensemble::SoEven | Ensemble::SoOdd => orthogonal_angles(&haar_special_orthogonal(d, rng)),
        Ensemble::U => unitary_angles(&haar_unitary(d, rng)),
    }
}

/// `Σ_j φ(θ_j · total_dim / 2π)`.
pub fn linear_statistic(angles: &[f64], tf: &TestFunction, total_dim: usize) -> f64 {
    let scale = total_dim as f64 / (2.0 * PI);
    angles.iter().map(|&t| tf.phi(t * scale)).sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalMoments {
    pub mean: f64,
    pub mean_std_error: Option<f64>,
    /// Centered-moment orders reported, `2..=n_max`.
    pub orders: Vec<usize>,
    pub centered: Vec<f64>,
    /// Batch-means standard errors, aligned with `orders`; empty when fewer
    /// than two batches exist.
    pub std_errors: Vec<f64>,
    pub sample_count: usize,
    pub batches: usize,
}

impl EmpiricalMoments {
    pub fn centered(&self, order: usize) -> Option<f64> {
        self.orders.iter().position(|&o| o == order).map(|i| self.centered[i])
    }

    pub fn std_error(&self, order: usize) -> Option<f64> {
        self.orders.iter().position(|&o| o == order).and_then(|i| self.std_errors.get(i).copied())
    }
}

/// Power sums `Σ (x − shift)^p`, `p = 0..=n_max`, of one batch.
#[derive(Debug, Clone)]
struct PowerSums {
    sums: Vec<f64>,
}

impl PowerSums {
    fn new(n_max: usize) -> Self {
        Self {
            sums: vec![0.0; n_max + 1],
        }
    }

    fn push(&mut self, y: f64) {
        let mut p = 1.0;
        for s in self.sums.iter_mut() {
            *s += p;
            p *= y;
        }
    }

    fn merge(&mut self, other: &PowerSums) {
        for (a, b) in self.sums.iter_mut().zip(&other.sums) {
            *a += b;
        }
    }

    /// Mean offset from the shift and centered moments of orders `2..=n_max`.
    fn moments(&self) -> (f64, Vec<f64>) {
        let n = self.sums[0];
        let raw: Vec<f64> = self.sums.iter().map(|s| s / n).collect();
        let m = raw[1];
        let n_max = raw.len() - 1;
        let centered = (2..=n_max)
            .map(|k| {
                // E[(y − m)^k] = Σ_j C(k, j) E[y^j] (−m)^{k−j}.
                let mut total = 0.0;
                let mut binom = 1.0;
                for (j, r) in raw.iter().enumerate().take(k + 1) {
                    total += binom * r * (-m).powi((k - j) as i32);
                    binom = binom * (k - j) as f64 / (j + 1) as f64;
                }
                total
            })
            .collect();
        (m, centered)
    }
}

fn batch_rng(seed: u64, batch: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(batch as u64);
    rng
}

/// Batch count `⌊√samples⌋` and the size of batch `b`.
fn batch_layout(samples: usize) -> (usize, impl Fn(usize) -> usize) {
    let batches = (samples as f64).sqrt().floor().max(1.0) as usize;
    let base = samples / batches;
    let extra = samples % batches;
    (batches, move |b| base + usize::from(b < extra))
}

/// Draws every sample's linear statistic, batch by batch.
pub fn sample_statistics(spec: &EnsembleSpec, tf: &TestFunction) -> Result<Vec<f64>, RmtError> {
    spec.validate()?;
    let (batches, size) = batch_layout(spec.samples);
    let d = spec.dimension();
    let per_batch: Vec<Vec<f64>> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = batch_rng(spec.seed, b);
            (0..size(b))
                .map(|_| linear_statistic(&sample_haar(spec.ensemble, spec.half_dim, &mut rng), tf, d))
                .collect()
        })
        .collect();
    Ok(per_batch.concat())
}

/// Mean and centered moments up to `n_max`, with batch-means errors.
pub fn empirical_moments(spec: &EnsembleSpec, tf: &TestFunction, n_max: usize) -> Result<EmpiricalMoments, RmtError> {
    spec.validate()?;
    if n_max < 2 {
        return Err(RmtError::OrderTooSmall(n_max));
    }
    let d = spec.dimension();
    // Centering near the limiting mean keeps the power sums well scaled.
    let shift = expectation_1level(tf, spec.ensemble.group())? * tf.phi_at_zero();
    let (batches, size) = batch_layout(spec.samples);
    let per_batch: Vec<PowerSums> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = batch_rng(spec.seed, b);
            let mut sums = PowerSums::new(n_max);
            for _ in 0..size(b) {
                let angles = sample_haar(spec.ensemble, spec.half_dim, &mut rng);
                sums.push(linear_statistic(&angles, tf, d) - shift);
            }
            sums
        })
        .collect();
    from_batches(&per_batch, shift, n_max, spec.samples)
}

/// Moments of an explicit list of statistic values, batched as in
/// [`empirical_moments`].
pub fn moments_of_values(values: &[f64], n_max: usize) -> Result<EmpiricalMoments, RmtError> {
    if values.is_empty() {
        return Err(RmtError::NoSamples);
    }
    if n_max < 2 {
        return Err(RmtError::OrderTooSmall(n_max));
    }
    let shift = values.iter().sum::<f64>() / values.len() as f64;
    let (batches, size) = batch_layout(values.len());
    let mut per_batch = Vec::with_capacity(batches);
    let mut offset = 0;
    for b in 0..batches {
        let mut sums = PowerSums::new(n_max);
        for &v in &values[offset..offset + size(b)] {
            sums.push(v - shift);
        }
        offset += size(b);
        per_batch.push(sums);
    }
    from_batches(&per_batch, shift, n_max, values.len())
}

fn from_batches(per_batch: &[PowerSums], shift: f64, n_max: usize, samples: usize) -> Result<EmpiricalMoments, RmtError> {
    // Sequential merge in batch order keeps the result independent of the
    // thread count.
    let mut total = PowerSums::new(n_max);
    for b in per_batch {
        total.merge(b);
    }
    let (offset, centered) = total.moments();
    let batches = per_batch.len();
    let (mean_std_error, std_errors) = if batches >= 2 {
        let estimates: Vec<(f64, Vec<f64>)> = per_batch.iter().map(PowerSums::moments).collect();
        let k = batches as f64;
        let se = |vals: &mut dyn Iterator<Item = f64>| {
            let v: Vec<f64> = vals.collect();
            let m = v.iter().sum::<f64>() / k;
            let var = v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (k - 1.0);
            (var / k).sqrt()
        };
        let mean_se = se(&mut estimates.iter().map(|e| e.0));
        let errs = (0..centered.len())
            .map(|i| se(&mut estimates.iter().map(|e| e.1[i])))
            .collect();
        (Some(mean_se), errs)
    } else {
        (None, Vec::new())
    };
    Ok(EmpiricalMoments {
        mean: shift + offset,
        mean_std_error,
        orders: (2..=n_max).collect(),
        centered,
        std_errors,
        sample_count: samples,
        batches,
    })
}

/// Limiting centered moment of order `n` for `n` copies of `tf`: the
/// R-term regime for SO ensembles when the support allows, mock-Gaussian
/// otherwise.
pub fn predicted_moment(ensemble: Ensemble, tf: &TestFunction, n: usize) -> Result<f64, RmtError> {
    let family = ensemble.family();
    let regime = if family != MomentFamily::Unsplit && tf.support_bound() <= with_r_threshold(n) {
        Regime::WithR
    } else {
        Regime::Auto
    };
    let req = MomentRequest::new(vec![tf.clone(); n], family).with_regime(regime);
    Ok(centered_moment(&req)?.value)
}

/// Limiting mean `∫ φ W₁` as N → ∞. At finite N the mass of φ beyond
/// |x| ≈ N is missing, so sampled means sit O(1/N) below it.
pub fn predicted_mean(ensemble: Ensemble, tf: &TestFunction) -> Result<f64, RmtError> {
    Ok(expectation_1level(tf, ensemble.group())? * tf.phi_at_zero())
}

/// Finite-size allowance `C` in `3·std_error + C/N`, calibrated on
/// Naive(1/3) at N = 20, 40 and 80 (see `examples/calibrate_finite_size.rs`).
pub const DEFAULT_FINITE_SIZE: f64 = 0.05;

/// One empirical-versus-predicted comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentCheck {
    pub order: usize,
    pub empirical: f64,
    pub predicted: f64,
    pub std_error: f64,
    pub z_score: f64,
    /// `3·std_error + C/N`.
    pub band: f64,
    pub within_band: bool,
}

/// Compares empirical moments with predictions inside
/// `3·std_error + finite_size/N`.
pub fn check_moments(
    spec: &EnsembleSpec,
    tf: &TestFunction,
    orders: &[usize],
    finite_size: f64,
) -> Result<(EmpiricalMoments, Vec<MomentCheck>), RmtError> {
    let n_max = orders.iter().copied().max().unwrap_or(2).max(2);
    let emp = empirical_moments(spec, tf, n_max)?;
    let mut checks = Vec::with_capacity(orders.len());
    for &order in orders {
        let (empirical, predicted, std_error) = if order == 1 {
            (emp.mean, predicted_mean(spec.ensemble, tf)?, emp.mean_std_error.unwrap_or(f64::NAN))
        } else {
            let e = emp.centered(order).ok_or(RmtError::OrderTooSmall(order))?;
            (e, predicted_moment(spec.ensemble, tf, order)?, emp.std_error(order).unwrap_or(f64::NAN))
        };
        let band = 3.0 * std_error + finite_size / spec.half_dim as f64;
        checks.push(MomentCheck {
            order,
            empirical,
            predicted,
            std_error,
            z_score: (empirical - predicted) / std_error,
            band,
            within_band: (empirical - predicted).abs() <= band,
        });
    }
    Ok((emp, checks))
}
