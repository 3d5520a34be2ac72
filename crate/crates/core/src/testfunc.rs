//! Admissible test functions `(φ, φ̂)`.
//!
//! Two families are supported. The naive pair is the Fejér kernel
//! `φ(x) = (sin πvx / πvx)²` with the triangle `φ̂(y) = (1/v)(1 − |y|/v)` on
//! `|y| < v`. Generator-backed pairs start from a real `g` supported on
//! `(−h, h)` and set `φ̂ = g ⋆ g̃` (autocorrelation), so that
//! `φ = |ǧ|² ≥ 0` is automatically even with `supp φ̂ ⊂ (−2h, 2h)`.
//!
//! Test functions are immutable and cheap to clone.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::quadrature::{
    integrate, integrate_with_breaks, GaussLegendre, QuadratureError, QuadratureSettings,
};

const SPEC_GRAMMAR: &str = "expected one of `naive:v=<num>`, `gen:sinx2:half=<num>`, \
`gen:cos:<c0,c1,...>:half=<num>`, `gen:poly:<c0,c1,...>:half=<num>`, \
`gen:tab:<g0,g1,...>:half=<num>`; numbers are decimals or `p/q`";

/// Initial node count of the φ̂ tabulation over `[0, 2h]`.
pub const TABLE_NODES: usize = 4097;
const MAX_TABLE_NODES: usize = (1 << 18) + 1;
const TABLE_AGREEMENT: f64 = 1.0e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TestFunctionError {
    #[error("naive width must be positive and finite, got {0}")]
    NonPositiveWidth(f64),
    #[error("generator half-support must be positive and finite, got {0}")]
    InvalidHalfSupport(f64),
    #[error("generator has no coefficients")]
    EmptyGenerator,
    #[error("generator coefficient {index} is not finite")]
    NonFiniteCoefficient { index: usize },
    #[error("generator is identically zero")]
    ZeroGenerator,
    #[error("generator integrates to zero, so φ(0) = 0 (∫g = {integral:e})")]
    ZeroMean { integral: f64 },
    #[error("scale factor must be positive and finite, got {0}")]
    InvalidScale(f64),
    #[error("malformed test-function spec `{input}`: {reason}; {SPEC_GRAMMAR}")]
    Parse { input: String, reason: String },
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GeneratorKind {
    /// `g(t) = sin(a·t²)`; the optional single coefficient is `a` (default 1).
    SinOfSquare,
    /// `g(t) = Σ c_k t^k`.
    Polynomial,
    /// `g(t) = Σ c_k cos(kπt/h)`.
    CosineSeries,
    /// Values at equally spaced nodes from `−h` to `h`, linearly interpolated.
    Tabulated,
}

impl GeneratorKind {
    fn tag(self) -> &'static str {
        match self {
            GeneratorKind::SinOfSquare => "sinx2",
            GeneratorKind::Polynomial => "poly",
            GeneratorKind::CosineSeries => "cos",
            GeneratorKind::Tabulated => "tab",
        }
    }
}

/// A real generator `g` vanishing outside `(−half_support, half_support)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub kind: GeneratorKind,
    pub coefficients: Vec<f64>,
    pub half_support: f64,
}

impl GeneratorSpec {
    pub fn new(
        kind: GeneratorKind,
        coefficients: Vec<f64>,
        half_support: f64,
    ) -> Result<Self, TestFunctionError> {
        if !(half_support > 0.0 && half_support.is_finite()) {
            return Err(TestFunctionError::InvalidHalfSupport(half_support));
        }
        if let Some(index) = coefficients.iter().position(|c| !c.is_finite()) {
            return Err(TestFunctionError::NonFiniteCoefficient { index });
        }
        match kind {
            GeneratorKind::SinOfSquare => {
                if coefficients.len() > 1 {
                    return Err(TestFunctionError::Parse {
                        input: format!("{coefficients:?}"),
                        reason: "sin-of-square takes at most one coefficient".into(),
                    });
                }
                if coefficients.first() == Some(&0.0) {
                    return Err(TestFunctionError::ZeroGenerator);
                }
            }
            GeneratorKind::Tabulated if coefficients.len() < 2 => {
                return Err(TestFunctionError::EmptyGenerator);
            }
            _ if coefficients.is_empty() => return Err(TestFunctionError::EmptyGenerator),
            _ => {}
        }
        if kind != GeneratorKind::SinOfSquare && coefficients.iter().all(|&c| c == 0.0) {
            return Err(TestFunctionError::ZeroGenerator);
        }
        Ok(Self {
            kind,
            coefficients,
            half_support,
        })
    }

    /// `sin(t²)` on `(−half, half)`.
    pub fn sin_of_square(half_support: f64) -> Result<Self, TestFunctionError> {
        Self::new(GeneratorKind::SinOfSquare, Vec::new(), half_support)
    }

    pub fn polynomial(coefficients: Vec<f64>, half_support: f64) -> Result<Self, TestFunctionError> {
        Self::new(GeneratorKind::Polynomial, coefficients, half_support)
    }

    pub fn cosine_series(
        coefficients: Vec<f64>,
        half_support: f64,
    ) -> Result<Self, TestFunctionError> {
        Self::new(GeneratorKind::CosineSeries, coefficients, half_support)
    }

    pub fn tabulated(values: Vec<f64>, half_support: f64) -> Result<Self, TestFunctionError> {
        Self::new(GeneratorKind::Tabulated, values, half_support)
    }

    fn sin_scale(&self) -> f64 {
        self.coefficients.first().copied().unwrap_or(1.0)
    }

    /// `g(t)`, zero outside the open support.
    pub fn eval(&self, t: f64) -> f64 {
        let h = self.half_support;
        if !(t.abs() < h) {
            return 0.0;
        }
        self.eval_inside(t)
    }

    fn eval_inside(&self, t: f64) -> f64 {
        let h = self.half_support;
        match self.kind {
            GeneratorKind::SinOfSquare => (self.sin_scale() * t * t).sin(),
            GeneratorKind::Polynomial => self.coefficients.iter().rev().fold(0.0, |acc, c| acc * t + c),
            GeneratorKind::CosineSeries => {
                let w = std::f64::consts::PI * t / h;
                self.coefficients
                    .iter()
                    .enumerate()
                    .map(|(k, c)| c * (k as f64 * w).cos())
                    .sum()
            }
            GeneratorKind::Tabulated => {
                let n = self.coefficients.len() - 1;
                let pos = ((t + h) / (2.0 * h) * n as f64).clamp(0.0, n as f64);
                let i = (pos.floor() as usize).min(n - 1);
                let frac = pos - i as f64;
                self.coefficients[i] * (1.0 - frac) + self.coefficients[i + 1] * frac
            }
        }
    }

    fn derivative(&self, t: f64) -> f64 {
        let h = self.half_support;
        match self.kind {
            GeneratorKind::SinOfSquare => {
                let a = self.sin_scale();
                2.0 * a * t * (a * t * t).cos()
            }
            GeneratorKind::Polynomial => self
                .coefficients
                .iter()
                .enumerate()
                .skip(1)
                .rev()
                .fold(0.0, |acc, (k, c)| acc * t + k as f64 * c),
            GeneratorKind::CosineSeries => {
                let w = std::f64::consts::PI / h;
                -self
                    .coefficients
                    .iter()
                    .enumerate()
                    .map(|(k, c)| c * k as f64 * w * (k as f64 * w * t).sin())
                    .sum::<f64>()
            }
            GeneratorKind::Tabulated => {
                let n = self.coefficients.len() - 1;
                let step = 2.0 * h / n as f64;
                let pos = ((t + h) / step).clamp(0.0, n as f64);
                let i = (pos.floor() as usize).min(n - 1);
                (self.coefficients[i + 1] - self.coefficients[i]) / step
            }
        }
    }

    /// Interior breakpoints where `g` is only piecewise smooth.
    fn kinks(&self) -> Vec<f64> {
        match self.kind {
            GeneratorKind::Tabulated => {
                let n = self.coefficients.len() - 1;
                let h = self.half_support;
                (1..n).map(|i| -h + 2.0 * h * i as f64 / n as f64).collect()
            }
            _ => Vec::new(),
        }
    }

    /// Number of Gauss-Legendre panels resolving `g` over its whole support.
    fn base_panels(&self) -> usize {
        let h = self.half_support;
        match self.kind {
            GeneratorKind::SinOfSquare => 1 + (self.sin_scale().abs() * h * h / 2.0).ceil() as usize,
            GeneratorKind::Polynomial => 1 + self.coefficients.len() / 12,
            GeneratorKind::CosineSeries => 1 + self.coefficients.len() / 2,
            GeneratorKind::Tabulated => 1,
        }
    }

    /// Integral of `f` over `[a, b] ⊂ [−h, h]`, splitting at the
    /// generator's kinks (and their shifts by `shift`, if given).
    fn integrate_on<F: Fn(f64) -> f64>(
        &self,
        rule: &GaussLegendre,
        f: F,
        a: f64,
        b: f64,
        shift: Option<f64>,
        oscillation: f64,
    ) -> f64 {
        if !(b > a) {
            return 0.0;
        }
        let h = self.half_support;
        let frac = (b - a) / (2.0 * h);
        let panels = ((self.base_panels() as f64 * frac).ceil() as usize).max(1)
            + (oscillation * (b - a)).ceil() as usize;
        if self.kind != GeneratorKind::Tabulated {
            return rule.integrate_composite(f, a, b, panels);
        }
        let mut points = vec![a, b];
        for k in self.kinks() {
            points.push(k);
            if let Some(s) = shift {
                points.push(k + s);
            }
        }
        points.retain(|p| *p >= a && *p <= b);
        points.sort_by(f64::total_cmp);
        points.dedup();
        let mut total = 0.0;
        for w in points.windows(2) {
            let sub = ((oscillation * (w[1] - w[0])).ceil() as usize).max(1);
            total += rule.integrate_composite(&f, w[0], w[1], sub);
        }
        total
    }

    /// `|g(−h)| + |g(h)| + ∫|g'|`, so that `|ǧ(x)| ≤ V/(2π|x|)`.
    fn variation_bound(&self) -> Result<f64, TestFunctionError> {
        let h = self.half_support;
        let ends = self.eval_inside(-h).abs() + self.eval_inside(h).abs();
        let tv = match self.kind {
            GeneratorKind::Tabulated => self
                .coefficients
                .windows(2)
                .map(|w| (w[1] - w[0]).abs())
                .sum(),
            _ => {
                let s = QuadratureSettings::default().with_rel_tol(1e-8).with_abs_tol(1e-300);
                let est = integrate(|t| self.derivative(t).abs(), -h, h, &s)?;
                (est.value + est.err_est) * (1.0 + 1e-6)
            }
        };
        Ok(ends + tv)
    }
}

impl fmt::Display for GeneratorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "gen:{}", self.kind.tag())?;
        if !self.coefficients.is_empty() {
            let list: Vec<String> = self.coefficients.iter().map(|c| c.to_string()).collect();
            write!(f, ":{}", list.join(","))?;
        }
        write!(f, ":half={}", self.half_support)
    }
}

/// φ̂ tabulated on `[0, support]`, read back by local cubic interpolation.
#[derive(Debug, Clone)]
struct TransformTable {
    support: f64,
    step: f64,
    values: Vec<f64>,
}

impl TransformTable {
    fn build(g: &GeneratorSpec, nodes: usize, rule: &GaussLegendre) -> Self {
        let h = g.half_support;
        let support = 2.0 * h;
        let step = support / (nodes - 1) as f64;
        let values = (0..nodes)
            .map(|i| {
                let y = i as f64 * step;
                if i == nodes - 1 {
                    0.0
                } else {
                    g.integrate_on(
                        rule,
                        |t| g.eval_inside(t) * g.eval_inside(t - y),
                        -h + y,
                        h,
                        Some(y),
                        0.0,
                    )
                }
            })
            .collect();
        Self {
            support,
            step,
            values,
        }
    }

    fn eval(&self, y: f64) -> f64 {
        let y = y.abs();
        if !(y < self.support) {
            return 0.0;
        }
        let n = self.values.len();
        let pos = y / self.step;
        let i = (pos.floor() as usize).min(n - 2);
        // Four-point stencil kept inside the table.
        let start = i.saturating_sub(1).min(n - 4);
        let t = pos - start as f64;
        let v = &self.values[start..start + 4];
        let (l0, l1, l2, l3) = (
            -(t - 1.0) * (t - 2.0) * (t - 3.0) / 6.0,
            t * (t - 2.0) * (t - 3.0) / 2.0,
            -t * (t - 1.0) * (t - 3.0) / 2.0,
            t * (t - 1.0) * (t - 2.0) / 6.0,
        );
        l0 * v[0] + l1 * v[1] + l2 * v[2] + l3 * v[3]
    }
}

#[derive(Debug)]
struct Generated {
    spec: GeneratorSpec,
    table: TransformTable,
    g_integral: f64,
    g_abs_integral: f64,
    variation: f64,
    rule: GaussLegendre,
}

#[derive(Debug)]
enum Shape {
    Naive { v: f64 },
    Generated(Generated),
}

/// An admissible test-function pair.
#[derive(Debug, Clone)]
pub struct TestFunction {
    shape: Arc<Shape>,
    scale: f64,
}

/// Naive pair with transform supported on `(−v, v)`.
pub fn make_naive(v: f64) -> Result<TestFunction, TestFunctionError> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(TestFunctionError::NonPositiveWidth(v));
    }
    Ok(TestFunction {
        shape: Arc::new(Shape::Naive { v }),
        scale: 1.0,
    })
}

/// Generator-backed pair `φ̂ = g ⋆ g̃`, `φ = |ǧ|²`.
pub fn make_from_generator(g: GeneratorSpec) -> Result<TestFunction, TestFunctionError> {
    let rule = GaussLegendre::new(24);
    let h = g.half_support;
    let g_integral = g.integrate_on(&rule, |t| g.eval_inside(t), -h, h, None, 0.0);
    let g_abs_integral = g.integrate_on(&rule, |t| g.eval_inside(t).abs(), -h, h, None, 0.0);
    if g_abs_integral == 0.0 {
        return Err(TestFunctionError::ZeroGenerator);
    }
    if g_integral.abs() <= 1.0e-13 * g_abs_integral {
        return Err(TestFunctionError::ZeroMean {
            integral: g_integral,
        });
    }
    let variation = g.variation_bound()?;

    let mut nodes = TABLE_NODES;
    let mut table = TransformTable::build(&g, nodes, &rule);
    let mut previous = self_pair_variance(&table)?;
    while nodes < MAX_TABLE_NODES {
        nodes = 2 * nodes - 1;
        let refined = TransformTable::build(&g, nodes, &rule);
        let current = self_pair_variance(&refined)?;
        table = refined;
        if (current - previous).abs() <= TABLE_AGREEMENT * current.abs() {
            break;
        }
        previous = current;
    }
    if table.values[0] <= 0.0 {
        return Err(TestFunctionError::ZeroGenerator);
    }

    Ok(TestFunction {
        shape: Arc::new(Shape::Generated(Generated {
            spec: g,
            table,
            g_integral,
            g_abs_integral,
            variation,
            rule,
        })),
        scale: 1.0,
    })
}

fn self_pair_variance(table: &TransformTable) -> Result<f64, QuadratureError> {
    let norm = table.values[0];
    let s = QuadratureSettings::default();
    let est = integrate(
        |y| y * (table.eval(y) / norm).powi(2),
        0.0,
        table.support,
        &s,
    )?;
    Ok(4.0 * est.value * norm * norm)
}

impl TestFunction {
    /// `c·φ` (and `c·φ̂`).
    pub fn scaled(&self, c: f64) -> Result<Self, TestFunctionError> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(TestFunctionError::InvalidScale(c));
        }
        Ok(Self {
            shape: Arc::clone(&self.shape),
            scale: self.scale * c,
        })
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// φ̂(y) = 0 for `|y| ≥ support_bound()`.
    pub fn support_bound(&self) -> f64 {
        match &*self.shape {
            Shape::Naive { v } => *v,
            Shape::Generated(gen) => gen.table.support,
        }
    }

    pub fn generator(&self) -> Option<&GeneratorSpec> {
        match &*self.shape {
            Shape::Naive { .. } => None,
            Shape::Generated(gen) => Some(&gen.spec),
        }
    }

    pub fn naive_width(&self) -> Option<f64> {
        match &*self.shape {
            Shape::Naive { v } => Some(*v),
            Shape::Generated(_) => None,
        }
    }

    pub fn phi(&self, x: f64) -> f64 {
        self.scale * self.phi_unscaled(x)
    }

    fn phi_unscaled(&self, x: f64) -> f64 {
        match &*self.shape {
            Shape::Naive { v } => crate::quadrature::sinc_pi(v * x).powi(2),
            Shape::Generated(gen) => {
                if x == 0.0 {
                    return gen.g_integral * gen.g_integral;
                }
                let g = &gen.spec;
                let h = g.half_support;
                let w = 2.0 * std::f64::consts::PI * x;
                let osc = x.abs();
                let re = g.integrate_on(&gen.rule, |t| g.eval_inside(t) * (w * t).cos(), -h, h, None, osc);
                let im = g.integrate_on(&gen.rule, |t| g.eval_inside(t) * (w * t).sin(), -h, h, None, osc);
                re * re + im * im
            }
        }
    }

    pub fn phi_hat(&self, y: f64) -> f64 {
        let s = self.support_bound();
        if !(y.abs() < s) {
            return 0.0;
        }
        self.scale
            * match &*self.shape {
                Shape::Naive { v } => (1.0 - y.abs() / v) / v,
                Shape::Generated(gen) => gen.table.eval(y),
            }
    }

    pub fn phi_at_zero(&self) -> f64 {
        self.phi(0.0)
    }

    pub fn phi_hat_at_zero(&self) -> f64 {
        self.phi_hat(0.0)
    }

    /// Certified envelope `|φ(x)| ≤ decay_bound(x)`.
    pub fn decay_bound(&self, x: f64) -> f64 {
        let x = x.abs();
        self.scale
            * match &*self.shape {
                Shape::Naive { v } => {
                    let px = std::f64::consts::PI * v * x;
                    if px <= 1.0 {
                        1.0
                    } else {
                        1.0 / (px * px)
                    }
                }
                Shape::Generated(gen) => {
                    let near = gen.g_abs_integral * gen.g_abs_integral;
                    if x == 0.0 {
                        near
                    } else {
                        let far = gen.variation / (2.0 * std::f64::consts::PI * x);
                        near.min(far * far)
                    }
                }
            }
    }

    /// `φ̂(0)/φ(0) + 1/2`, the threshold in the minimum-rank condition.
    pub fn rank_threshold(&self) -> f64 {
        self.phi_hat_at_zero() / self.phi_at_zero() + 0.5
    }

    /// Smallest integer `c` with `c > φ̂(0)/φ(0) + 1/2`.
    pub fn min_rank(&self) -> u64 {
        self.rank_threshold().floor() as u64 + 1
    }

    /// `∫_{−limit}^{limit} φ̂(y) dy`.
    pub fn phi_hat_integral(&self, limit: f64) -> Result<f64, QuadratureError> {
        let top = limit.min(self.support_bound());
        if top <= 0.0 {
            return Ok(0.0);
        }
        if let Shape::Naive { v } = &*self.shape {
            // Triangle area, exact.
            let t = top / v;
            return Ok(self.scale * 2.0 * (t - 0.5 * t * t));
        }
        let norm = self.phi_hat_at_zero();
        let est = integrate(|y| self.phi_hat(y) / norm, 0.0, top, &QuadratureSettings::default())?;
        Ok(2.0 * est.value * norm)
    }

    /// Canonical spec string.
    pub fn label(&self) -> String {
        let base = match &*self.shape {
            Shape::Naive { v } => format!("naive:v={v}"),
            Shape::Generated(gen) => gen.spec.to_string(),
        };
        if self.scale == 1.0 {
            base
        } else {
            format!("{base}*{}", self.scale)
        }
    }
}

impl fmt::Display for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// `σ²_{ab} = 2∫|y| φ̂_a(y) φ̂_b(y) dy`.
pub fn sigma2(a: &TestFunction, b: &TestFunction) -> Result<f64, QuadratureError> {
    sigma2_with(a, b, &QuadratureSettings::default())
}

pub fn sigma2_with(
    a: &TestFunction,
    b: &TestFunction,
    s: &QuadratureSettings,
) -> Result<f64, QuadratureError> {
    let top = a.support_bound().min(b.support_bound());
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
    let est = integrate_with_breaks(|y| y * (a.phi_hat(y) / na) * (b.phi_hat(y) / nb), &breaks, s)?;
    Ok(4.0 * est.value * na * nb)
}

/// Parsed form of a test-function spec string.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TestFunctionSpec {
    Naive { v: f64 },
    Generator(GeneratorSpec),
}

impl TestFunctionSpec {
    pub fn build(&self) -> Result<TestFunction, TestFunctionError> {
        match self {
            TestFunctionSpec::Naive { v } => make_naive(*v),
            TestFunctionSpec::Generator(g) => make_from_generator(g.clone()),
        }
    }
}

impl fmt::Display for TestFunctionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TestFunctionSpec::Naive { v } => write!(f, "naive:v={v}"),
            TestFunctionSpec::Generator(g) => write!(f, "{g}"),
        }
    }
}

/// Parses a decimal or `p/q` rational.
pub fn parse_number(text: &str) -> Result<f64, String> {
    let text = text.trim();
    let value = match text.split_once('/') {
        Some((p, q)) => {
            let p: f64 = p.trim().parse().map_err(|_| format!("bad numerator `{p}`"))?;
            let q: f64 = q.trim().parse().map_err(|_| format!("bad denominator `{q}`"))?;
            if q == 0.0 {
                return Err("zero denominator".into());
            }
            p / q
        }
        None => text.parse().map_err(|_| format!("bad number `{text}`"))?,
    };
    if value.is_finite() {
        Ok(value)
    } else {
        Err(format!("non-finite number `{text}`"))
    }
}

impl FromStr for TestFunctionSpec {
    type Err = TestFunctionError;

    fn from_str(input: &str) -> Result<Self, Self::Err> {
        let fail = |reason: &str| TestFunctionError::Parse {
            input: input.to_string(),
            reason: reason.to_string(),
        };
        let keyed = |part: &str, key: &str| -> Result<f64, TestFunctionError> {
            let value = part
                .strip_prefix(key)
                .and_then(|rest| rest.strip_prefix('='))
                .ok_or_else(|| fail(&format!("expected `{key}=<num>`, found `{part}`")))?;
            parse_number(value).map_err(|e| fail(&e))
        };
        let parts: Vec<&str> = input.trim().split(':').collect();
        match parts.as_slice() {
            ["naive", v] => {
                let v = keyed(v, "v")?;
                if v <= 0.0 {
                    return Err(TestFunctionError::NonPositiveWidth(v));
                }
                Ok(TestFunctionSpec::Naive { v })
            }
            ["gen", kind, rest @ ..] => {
                let kind = match *kind {
                    "sinx2" => GeneratorKind::SinOfSquare,
                    "cos" => GeneratorKind::CosineSeries,
                    "poly" => GeneratorKind::Polynomial,
                    "tab" => GeneratorKind::Tabulated,
                    other => return Err(fail(&format!("unknown generator kind `{other}`"))),
                };
                let (coefficients, half) = match (kind, rest) {
                    (_, [half]) => (Vec::new(), keyed(half, "half")?),
                    (_, [list, half]) => {
                        let coefficients = list
                            .split(',')
                            .filter(|c| !c.trim().is_empty())
                            .map(|c| parse_number(c).map_err(|e| fail(&e)))
                            .collect::<Result<Vec<_>, _>>()?;
                        (coefficients, keyed(half, "half")?)
                    }
                    _ => return Err(fail("wrong number of `:`-separated fields")),
                };
                if kind != GeneratorKind::SinOfSquare && coefficients.is_empty() {
                    return Err(TestFunctionError::EmptyGenerator);
                }
                Ok(TestFunctionSpec::Generator(GeneratorSpec::new(kind, coefficients, half)?))
            }
            _ => Err(fail("unrecognised prefix")),
        }
    }
}

/// Parses and builds a test function from its spec string.
pub fn parse_test_function(spec: &str) -> Result<TestFunction, TestFunctionError> {
    spec.parse::<TestFunctionSpec>()?.build()
}
