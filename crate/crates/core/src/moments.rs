//! Centered moments of the 1-level statistic for products of test
//! functions.
//!
//! For `n = 2m` the moment is a sum over the `(2m − 1)!!` perfect matchings
//! of `{1, …, 2m}` of products of pair variances `σ²_{ab}`, corrected by
//! `± R_n` when the supports allow the non-Gaussian term to appear; odd
//! moments reduce to `± R_n` or zero. The sign is `+` for SO(even) and `−`
//! for SO(odd); the unsplit family only has the mock-Gaussian regime.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kernels::SymmetryGroup;
use crate::quadrature::{integrate_sinc_weighted, QuadratureError, QuadratureSettings};
use crate::testfunc::{sigma2_with, TestFunction};

/// Largest order whose matchings are enumerated exhaustively.
pub const MAX_MATCHED_ORDER: usize = 16;

/// Support bounds may exceed a threshold by this relative amount and still
/// count as contained (φ̂ vanishing at the endpoint).
const SUPPORT_SLACK: f64 = 1.0e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MomentError {
    #[error("perfect matchings need a positive even size, got {0}")]
    OddMatchingSize(usize),
    #[error("moment order must be at least 2, got {0}")]
    OrderTooSmall(usize),
    #[error("moment order {0} exceeds the enumeration limit {MAX_MATCHED_ORDER}")]
    OrderTooLarge(usize),
    #[error(
        "{regime} regime needs every support below {threshold} ({rule}), but test function {index} has support {support}"
    )]
    SupportViolation {
        regime: Regime,
        rule: &'static str,
        index: usize,
        support: f64,
        threshold: f64,
    },
    #[error("the unsplit family has no R-term regime; use mock-gaussian")]
    UnsplitWithR,
    #[error(
        "no regime applies: largest support {support} exceeds mock-gaussian threshold {mock_threshold} and R-term threshold {with_r_threshold}"
    )]
    NoRegime {
        support: f64,
        mock_threshold: f64,
        with_r_threshold: f64,
    },
    #[error("family {0} has no centered-moment formula (use so-even, so-odd or o)")]
    UnsupportedFamily(SymmetryGroup),
    #[error("weight k must be at least 2, got {0}")]
    InvalidWeight(u32),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
}

/// A perfect matching of `{0, …, 2m − 1}`; pairs are stored with the
/// smaller element first, ordered by that element.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Matching {
    pairs: Vec<(usize, usize)>,
}

impl Matching {
    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn size(&self) -> usize {
        2 * self.pairs.len()
    }
}

impl fmt::Display for Matching {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .pairs
            .iter()
            .map(|(a, b)| format!("{}{}", a + 1, b + 1))
            .collect();
        f.write_str(&parts.join("|"))
    }
}

/// `(2m − 1)!!` for `two_m = 2m`.
pub fn matching_count(two_m: usize) -> u128 {
    (1..two_m).step_by(2).map(|k| k as u128).product()
}

/// Visits every perfect matching of `{0, …, n − 1}` exactly once, in
/// lexicographic order of the partner chosen for the smallest free element.
pub fn for_each_matching<F: FnMut(&[(usize, usize)])>(n: usize, mut visit: F) -> Result<(), MomentError> {
    if n == 0 || n % 2 == 1 {
        return Err(MomentError::OddMatchingSize(n));
    }
    let mut used = vec![false; n];
    let mut pairs = Vec::with_capacity(n / 2);
    recurse_matchings(&mut used, &mut pairs, &mut visit);
    Ok(())
}

fn recurse_matchings<F: FnMut(&[(usize, usize)])>(
    used: &mut [bool],
    pairs: &mut Vec<(usize, usize)>,
    visit: &mut F,
) {
    let Some(first) = used.iter().position(|u| !u) else {
        visit(pairs);
        return;
    };
    used[first] = true;
    for partner in first + 1..used.len() {
        if used[partner] {
            continue;
        }
        used[partner] = true;
        pairs.push((first, partner));
        recurse_matchings(used, pairs, visit);
        pairs.pop();
        used[partner] = false;
    }
    used[first] = false;
}

/// All perfect matchings of a `two_m`-element set.
pub fn enumerate_matchings(two_m: usize) -> Result<Vec<Matching>, MomentError> {
    if two_m > MAX_MATCHED_ORDER {
        return Err(MomentError::OrderTooLarge(two_m));
    }
    let mut out = Vec::with_capacity(matching_count(two_m.max(2)) as usize);
    for_each_matching(two_m, |pairs| {
        out.push(Matching {
            pairs: pairs.to_vec(),
        })
    })?;
    Ok(out)
}

/// The family a moment is taken over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MomentFamily {
    SoEven,
    SoOdd,
    Unsplit,
}

impl MomentFamily {
    /// Coefficient of `R_n` in the moment.
    pub fn sign(self) -> i8 {
        match self {
            MomentFamily::SoEven => 1,
            MomentFamily::SoOdd => -1,
            MomentFamily::Unsplit => 0,
        }
    }
}

impl TryFrom<SymmetryGroup> for MomentFamily {
    type Error = MomentError;

    fn try_from(g: SymmetryGroup) -> Result<Self, Self::Error> {
        match g {
            SymmetryGroup::SoEven => Ok(MomentFamily::SoEven),
            SymmetryGroup::SoOdd => Ok(MomentFamily::SoOdd),
            SymmetryGroup::O => Ok(MomentFamily::Unsplit),
            other => Err(MomentError::UnsupportedFamily(other)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    Auto,
    WithR,
    MockGaussian,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regime::Auto => "auto",
            Regime::WithR => "with-r",
            Regime::MockGaussian => "mock-gaussian",
        })
    }
}

impl FromStr for Regime {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "auto" => Ok(Regime::Auto),
            "with-r" => Ok(Regime::WithR),
            "mock-gaussian" | "mock" => Ok(Regime::MockGaussian),
            other => Err(format!("unknown regime `{other}` (expected auto, with-r or mock-gaussian)")),
        }
    }
}

/// R-term support threshold `1/(n − 1)`.
pub fn with_r_threshold(n: usize) -> f64 {
    1.0 / (n as f64 - 1.0)
}

/// Mock-Gaussian support threshold `(1/n)(2k − 1)/k`.
pub fn mock_gaussian_threshold(n: usize, weight_k: u32) -> f64 {
    let k = f64::from(weight_k);
    (2.0 * k - 1.0) / (k * n as f64)
}

#[derive(Debug, Clone)]
pub struct MomentRequest {
    pub test_functions: Vec<TestFunction>,
    pub family: MomentFamily,
    pub weight_k: u32,
    pub regime: Regime,
}

impl MomentRequest {
    pub fn new(test_functions: Vec<TestFunction>, family: MomentFamily) -> Self {
        Self {
            test_functions,
            family,
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

    pub fn order(&self) -> usize {
        self.test_functions.len()
    }

    fn check_support(&self, regime: Regime, threshold: f64, rule: &'static str) -> Result<(), MomentError> {
        for (index, tf) in self.test_functions.iter().enumerate() {
            let support = tf.support_bound();
            if support > threshold * (1.0 + SUPPORT_SLACK) {
                return Err(MomentError::SupportViolation {
                    regime,
                    rule,
                    index,
                    support,
                    threshold,
                });
            }
        }
        Ok(())
    }

    /// Resolves `Auto` and validates the support hypotheses.
    pub fn resolve_regime(&self) -> Result<Regime, MomentError> {
        let n = self.order();
        if n < 2 {
            return Err(MomentError::OrderTooSmall(n));
        }
        if self.weight_k < 2 {
            return Err(MomentError::InvalidWeight(self.weight_k));
        }
        let mock = mock_gaussian_threshold(n, self.weight_k);
        let with_r = with_r_threshold(n);
        let mock_ok = self.check_support(Regime::MockGaussian, mock, "(1/n)(2k-1)/k");
        let with_r_ok = self.check_support(Regime::WithR, with_r, "1/(n-1)");
        match self.regime {
            Regime::MockGaussian => mock_ok.map(|_| Regime::MockGaussian),
            Regime::WithR => {
                if self.family == MomentFamily::Unsplit {
                    return Err(MomentError::UnsplitWithR);
                }
                with_r_ok.map(|_| Regime::WithR)
            }
            Regime::Auto => {
                if mock_ok.is_ok() {
                    Ok(Regime::MockGaussian)
                } else if with_r_ok.is_ok() && self.family != MomentFamily::Unsplit {
                    Ok(Regime::WithR)
                } else {
                    let support = self
                        .test_functions
                        .iter()
                        .map(TestFunction::support_bound)
                        .fold(0.0, f64::max);
                    Err(MomentError::NoRegime {
                        support,
                        mock_threshold: mock,
                        with_r_threshold: with_r,
                    })
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentResult {
    pub value: f64,
    pub matching_sum: f64,
    pub r_term: f64,
    pub sign_applied: i8,
    pub regime: Regime,
}

/// `R_n(φ₁, …, φ_n) = (−1)^{n−1} 2^{n−1} [∫ Πφ_j(x)·sin(2πx)/(2πx) dx − ½ Πφ_j(0)]`.
pub fn r_term(tfs: &[TestFunction]) -> Result<f64, MomentError> {
    r_term_with(tfs, &QuadratureSettings::default())
}

pub fn r_term_with(tfs: &[TestFunction], s: &QuadratureSettings) -> Result<f64, MomentError> {
    let n = tfs.len();
    if n < 2 {
        return Err(MomentError::OrderTooSmall(n));
    }
    // Work with φ_j/φ_j(0) so the integral is O(1) whatever the scales.
    let norms: Vec<f64> = tfs.iter().map(TestFunction::phi_at_zero).collect();
    let product = |x: f64| {
        tfs.iter()
            .zip(&norms)
            .map(|(tf, n0)| tf.phi(x) / n0)
            .product::<f64>()
    };
    let envelope = |x: f64| {
        tfs.iter()
            .zip(&norms)
            .map(|(tf, n0)| tf.decay_bound(x) / n0)
            .product::<f64>()
    };
    let integral = integrate_sinc_weighted(product, envelope, s)?.value;
    let prefactor = if n % 2 == 1 { 1.0 } else { -1.0 } * 2f64.powi(n as i32 - 1);
    let scale: f64 = norms.iter().product();
    Ok(prefactor * (integral - 0.5) * scale)
}

/// `σ²_{ab}` for every pair, computed once per distinct test function pair.
fn pair_variances(tfs: &[TestFunction], s: &QuadratureSettings) -> Result<Vec<Vec<f64>>, MomentError> {
    let n = tfs.len();
    let mut table = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i..n {
            // Reuse an identical earlier pair (same labels) when present.
            let cached = (0..=i).find_map(|a| {
                (a..n).find_map(|b| {
                    let earlier = (a, b) < (i, j);
                    let same = tfs[a].label() == tfs[i].label() && tfs[b].label() == tfs[j].label();
                    (earlier && same).then(|| table[a][b])
                })
            });
            let v = match cached {
                Some(v) => v,
                None => sigma2_with(&tfs[i], &tfs[j], s)?,
            };
            table[i][j] = v;
            table[j][i] = v;
        }
    }
    Ok(table)
}

/// `Σ_{matchings} Π σ²_{a b}` over all perfect matchings of the list.
pub fn matching_sum(tfs: &[TestFunction]) -> Result<f64, MomentError> {
    matching_sum_with(tfs, &QuadratureSettings::default())
}

pub fn matching_sum_with(tfs: &[TestFunction], s: &QuadratureSettings) -> Result<f64, MomentError> {
    let n = tfs.len();
    if n > MAX_MATCHED_ORDER {
        return Err(MomentError::OrderTooLarge(n));
    }
    let sigma = pair_variances(tfs, s)?;
    Ok(matching_sum_from_table(&sigma))
}

fn matching_sum_from_table(sigma: &[Vec<f64>]) -> f64 {
    let n = sigma.len();
    let mut used = vec![false; n];
    sum_over_matchings(sigma, &mut used)
}

// Depth-first: Σ_j σ²(first, j)·(sum over matchings of the rest), in a fixed
// order so the result is reproducible bit for bit.
fn sum_over_matchings(sigma: &[Vec<f64>], used: &mut [bool]) -> f64 {
    let Some(first) = used.iter().position(|u| !u) else {
        return 1.0;
    };
    used[first] = true;
    let mut total = 0.0;
    for partner in first + 1..used.len() {
        if used[partner] {
            continue;
        }
        used[partner] = true;
        total += sigma[first][partner] * sum_over_matchings(sigma, used);
        used[partner] = false;
    }
    used[first] = false;
    total
}

/// Centered moment `⟨Π_j (D(f;φ_j) − ⟨D(f;φ_j)⟩)⟩` in the requested regime.
pub fn centered_moment(req: &MomentRequest) -> Result<MomentResult, MomentError> {
    centered_moment_with(req, &QuadratureSettings::default())
}

pub fn centered_moment_with(
    req: &MomentRequest,
    s: &QuadratureSettings,
) -> Result<MomentResult, MomentError> {
    let n = req.order();
    if n > MAX_MATCHED_ORDER {
        return Err(MomentError::OrderTooLarge(n));
    }
    let regime = req.resolve_regime()?;
    let matching = if n.is_multiple_of(2) {
        matching_sum_with(&req.test_functions, s)?
    } else {
        0.0
    };
    let (r, sign) = match regime {
        Regime::WithR => (r_term_with(&req.test_functions, s)?, req.family.sign()),
        _ => (0.0, 0),
    };
    Ok(MomentResult {
        value: matching + f64::from(sign) * r,
        matching_sum: matching,
        r_term: r,
        sign_applied: sign,
        regime,
    })
}
