//! Limiting eigenvalue densities of the classical compact groups and the
//! 1-/2-level density expectations built from them.
//!
//! With `K(y) = sin(πy)/(πy)` and `K_ε(x, y) = K(x − y) + ε·K(x + y)`,
//! the `n`-level densities are determinants of `K_ε` (ε = +1 for SO(even),
//! −1 for SO(odd) and Sp, 0 for U). SO(odd) additionally carries point
//! masses at the origin, and O is the average of the two SO cases.
//!
//! Expectations against product test functions are computed in transform
//! space, where every sinc factor becomes an indicator and compact support
//! of φ̂ makes the integrals finite.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::quadrature::{integrate_with_breaks, sinc_pi, QuadratureError, QuadratureSettings};
use crate::testfunc::TestFunction;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SymmetryGroup {
    #[serde(rename = "o")]
    O,
    #[serde(rename = "so-even")]
    SoEven,
    #[serde(rename = "so-odd")]
    SoOdd,
    #[serde(rename = "u")]
    U,
    #[serde(rename = "sp")]
    Sp,
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("unknown symmetry group `{0}` (expected so-even, so-odd, o, u or sp)")]
pub struct UnknownGroup(pub String);

impl SymmetryGroup {
    pub const ALL: [SymmetryGroup; 5] = [
        SymmetryGroup::O,
        SymmetryGroup::SoEven,
        SymmetryGroup::SoOdd,
        SymmetryGroup::U,
        SymmetryGroup::Sp,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            SymmetryGroup::O => "o",
            SymmetryGroup::SoEven => "so-even",
            SymmetryGroup::SoOdd => "so-odd",
            SymmetryGroup::U => "u",
            SymmetryGroup::Sp => "sp",
        }
    }

    /// Required parity of the central vanishing order, if any.
    pub fn rank_parity(self) -> Option<u64> {
        match self {
            SymmetryGroup::SoEven => Some(0),
            SymmetryGroup::SoOdd => Some(1),
            _ => None,
        }
    }

    pub fn admits_rank(self, r: u64) -> bool {
        self.rank_parity().is_none_or(|p| r % 2 == p)
    }
}

impl fmt::Display for SymmetryGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for SymmetryGroup {
    type Err = UnknownGroup;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "o" => Ok(SymmetryGroup::O),
            "so-even" | "soeven" | "so(even)" => Ok(SymmetryGroup::SoEven),
            "so-odd" | "soodd" | "so(odd)" => Ok(SymmetryGroup::SoOdd),
            "u" => Ok(SymmetryGroup::U),
            "sp" | "usp" => Ok(SymmetryGroup::Sp),
            other => Err(UnknownGroup(other.to_string())),
        }
    }
}

/// Density value split into its smooth part and the weight of point masses
/// at the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityValue {
    pub smooth: f64,
    pub delta_weight: f64,
}

/// Two-variable density: smooth part plus the coefficients of `δ(x)` and
/// `δ(y)` evaluated at the given point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairDensity {
    pub smooth: f64,
    pub delta_x: f64,
    pub delta_y: f64,
}

/// Sine kernel `K(y) = sin(πy)/(πy)`, `K(0) = 1`.
#[inline]
pub fn kernel_k(y: f64) -> f64 {
    sinc_pi(y)
}

/// `K_ε(x, y) = K(x − y) + ε·K(x + y)`.
#[inline]
pub fn kernel_k_eps(eps: i8, x: f64, y: f64) -> f64 {
    kernel_k(x - y) + f64::from(eps) * kernel_k(x + y)
}

fn kernel_sign(g: SymmetryGroup) -> i8 {
    match g {
        SymmetryGroup::SoEven => 1,
        SymmetryGroup::SoOdd | SymmetryGroup::Sp => -1,
        SymmetryGroup::U => 0,
        SymmetryGroup::O => unreachable!("O is handled as an average"),
    }
}

/// One-level density `W_{1,G}(x)`.
pub fn density_w1(g: SymmetryGroup, x: f64) -> DensityValue {
    match g {
        SymmetryGroup::O => {
            let e = density_w1(SymmetryGroup::SoEven, x);
            let o = density_w1(SymmetryGroup::SoOdd, x);
            DensityValue {
                smooth: 0.5 * (e.smooth + o.smooth),
                delta_weight: 0.5 * (e.delta_weight + o.delta_weight),
            }
        }
        _ => {
            let eps = kernel_sign(g);
            DensityValue {
                smooth: kernel_k_eps(eps, x, x),
                delta_weight: if g == SymmetryGroup::SoOdd { 1.0 } else { 0.0 },
            }
        }
    }
}

/// Two-level density `W_{2,G}(x, y)`.
pub fn density_w2(g: SymmetryGroup, x: f64, y: f64) -> PairDensity {
    match g {
        SymmetryGroup::O => {
            let e = density_w2(SymmetryGroup::SoEven, x, y);
            let o = density_w2(SymmetryGroup::SoOdd, x, y);
            PairDensity {
                smooth: 0.5 * (e.smooth + o.smooth),
                delta_x: 0.5 * (e.delta_x + o.delta_x),
                delta_y: 0.5 * (e.delta_y + o.delta_y),
            }
        }
        _ => {
            let eps = kernel_sign(g);
            let kxx = kernel_k_eps(eps, x, x);
            let kyy = kernel_k_eps(eps, y, y);
            let kxy = kernel_k_eps(eps, x, y);
            let (delta_x, delta_y) = if g == SymmetryGroup::SoOdd {
                (kyy, kxx)
            } else {
                (0.0, 0.0)
            };
            PairDensity {
                smooth: kxx * kyy - kxy * kxy,
                delta_x,
                delta_y,
            }
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExpectationError {
    #[error("φ(0) must be positive, got {0}")]
    NonPositiveAtOrigin(f64),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
}

/// `∫ φ(x)·K_ε(x, x) dx = φ̂(0) + (ε/2)∫_{−1}^{1} φ̂(y) dy`.
fn diagonal_pairing(tf: &TestFunction, eps: i8) -> Result<f64, QuadratureError> {
    let base = tf.phi_hat_at_zero();
    if eps == 0 {
        return Ok(base);
    }
    Ok(base + 0.5 * f64::from(eps) * tf.phi_hat_integral(1.0)?)
}

/// Unnormalised `∫ φ(x) W_{1,G}(x) dx` including point masses.
fn pairing_w1(tf: &TestFunction, g: SymmetryGroup) -> Result<f64, QuadratureError> {
    match g {
        SymmetryGroup::O => Ok(0.5
            * (pairing_w1(tf, SymmetryGroup::SoEven)? + pairing_w1(tf, SymmetryGroup::SoOdd)?)),
        SymmetryGroup::SoOdd => Ok(diagonal_pairing(tf, -1)? + tf.phi_at_zero()),
        _ => diagonal_pairing(tf, kernel_sign(g)),
    }
}

/// `(1/φ(0)) ∫ φ(x) W_{1,G}(x) dx`.
pub fn expectation_1level(tf: &TestFunction, g: SymmetryGroup) -> Result<f64, ExpectationError> {
    let phi0 = tf.phi_at_zero();
    if !(phi0 > 0.0) {
        return Err(ExpectationError::NonPositiveAtOrigin(phi0));
    }
    Ok(pairing_w1(tf, g)? / phi0)
}

/// `∫∫ φ₁(x)φ₂(y) K(x ∓ y)² dx dy = ∫ (1 − |ξ|)₊ φ̂₁(ξ)φ̂₂(ξ) dξ`.
fn sine_square_pairing(
    a: &TestFunction,
    b: &TestFunction,
    s: &QuadratureSettings,
) -> Result<f64, QuadratureError> {
    let top = a.support_bound().min(b.support_bound()).min(1.0);
    let (na, nb) = (a.phi_hat_at_zero(), b.phi_hat_at_zero());
    let mut breaks = vec![0.0, top];
    for tf in [a, b] {
        if let Some(v) = tf.naive_width() {
            if v < top {
                breaks.insert(1, v);
            }
        }
    }
    breaks.sort_by(f64::total_cmp);
    let est = integrate_with_breaks(
        |xi| (1.0 - xi) * (a.phi_hat(xi) / na) * (b.phi_hat(xi) / nb),
        &breaks,
        s,
    )?;
    Ok(2.0 * est.value * na * nb)
}

/// `∫∫ φ₁(x)φ₂(y) K(x − y)K(x + y) dx dy
///   = ½ ∫∫_{|ξ|+|η|<1} φ̂₁(ξ) φ̂₂(η) dξ dη`.
fn cross_pairing(
    a: &TestFunction,
    b: &TestFunction,
    s: &QuadratureSettings,
) -> Result<f64, QuadratureError> {
    let (sa, sb) = (a.support_bound(), b.support_bound());
    if sa + sb <= 1.0 {
        // The diamond contains both supports.
        return Ok(0.5 * a.phi_at_zero() * b.phi_at_zero());
    }
    let (na, nb) = (a.phi_hat_at_zero(), b.phi_hat_at_zero());
    let inner_settings = QuadratureSettings {
        abs_tol: s.abs_tol / 10.0,
        rel_tol: s.rel_tol / 10.0,
        ..*s
    };
    let failure = std::cell::RefCell::new(None);
    let outer = |xi: f64| {
        let reach = 1.0 - xi;
        match b.phi_hat_integral(reach) {
            Ok(v) => a.phi_hat(xi) / na * v / nb,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                0.0
            }
        }
    };
    let top = sa.min(1.0);
    let mut breaks = vec![0.0, top];
    let knee = 1.0 - sb;
    if knee > 0.0 && knee < top {
        breaks.insert(1, knee);
    }
    if let Some(v) = a.naive_width() {
        if v < top && !breaks.contains(&v) {
            breaks.push(v);
            breaks.sort_by(f64::total_cmp);
        }
    }
    let est = integrate_with_breaks(outer, &breaks, &inner_settings)?;
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    // ∫_{-1}^{1} over ξ is twice the half-line integral; the ½ prefactor cancels it.
    Ok(est.value * na * nb)
}

/// Unnormalised `∫∫ φ₁(x)φ₂(y) W_{2,G}(x,y) dx dy` including point masses.
fn pairing_w2(
    a: &TestFunction,
    b: &TestFunction,
    g: SymmetryGroup,
    s: &QuadratureSettings,
) -> Result<f64, QuadratureError> {
    match g {
        SymmetryGroup::O => Ok(0.5
            * (pairing_w2(a, b, SymmetryGroup::SoEven, s)?
                + pairing_w2(a, b, SymmetryGroup::SoOdd, s)?)),
        _ => {
            let eps = kernel_sign(g);
            let diag = diagonal_pairing(a, eps)? * diagonal_pairing(b, eps)?;
            let square = sine_square_pairing(a, b, s)?;
            // K_ε(x,y)² = K(x−y)² + 2ε K(x−y)K(x+y) + ε² K(x+y)².
            let off = if eps == 0 {
                square
            } else {
                2.0 * square + 2.0 * f64::from(eps) * cross_pairing(a, b, s)?
            };
            let mut total = diag - off;
            if g == SymmetryGroup::SoOdd {
                total += a.phi_at_zero() * diagonal_pairing(b, -1)?
                    + b.phi_at_zero() * diagonal_pairing(a, -1)?;
            }
            Ok(total)
        }
    }
}

/// `(1/(φ₁(0)φ₂(0))) ∫∫ φ₁(x)φ₂(y) W_{2,G}(x, y) dx dy`.
pub fn expectation_2level(
    a: &TestFunction,
    b: &TestFunction,
    g: SymmetryGroup,
) -> Result<f64, ExpectationError> {
    expectation_2level_with(a, b, g, &QuadratureSettings::default())
}

pub fn expectation_2level_with(
    a: &TestFunction,
    b: &TestFunction,
    g: SymmetryGroup,
    s: &QuadratureSettings,
) -> Result<f64, ExpectationError> {
    let norm = a.phi_at_zero() * b.phi_at_zero();
    if !(norm > 0.0) {
        return Err(ExpectationError::NonPositiveAtOrigin(norm));
    }
    Ok(pairing_w2(a, b, g, s)? / norm)
}

/// `μ₂ = μ'₂ − μ²`.
pub fn raw_to_centered(mu: f64, mu2_raw: f64) -> f64 {
    mu2_raw - mu * mu
}

/// `μ₃ = μ'₃ − 3μμ'₂ + 2μ³`.
pub fn raw_to_centered3(mu: f64, mu2_raw: f64, mu3_raw: f64) -> f64 {
    mu3_raw - 3.0 * mu * mu2_raw + 2.0 * mu.powi(3)
}
