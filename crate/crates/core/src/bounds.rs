//! Upper bounds on the proportion of forms vanishing to order at least `r`.
//!
//! Three routes are offered. The 1-level bound divides the 1-level
//! expectation by `r`. The 2-level bound divides the 2-level expectation by
//! `r(r − 2)` for even `r` and `(r − 1)²` for odd `r`. The moment bound
//! divides a centered moment of even order `2m` by
//! `Π_s (r·φ_s(0) − (φ̂_s(0) + ½φ_s(0)))²`, each slot entering the moment
//! twice.

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kernels::{expectation_1level, expectation_2level_with, ExpectationError, SymmetryGroup};
use crate::moments::{centered_moment_with, MomentError, MomentFamily, MomentRequest, Regime};
use crate::quadrature::QuadratureSettings;
use crate::testfunc::{make_from_generator, make_naive, GeneratorSpec, TestFunction, TestFunctionError};

/// Optimal 1-level expectation for SO(even), support `(−2, 2)`.
pub const REFERENCE_LEVEL1_SO_EVEN: f64 = 0.86454;
/// Optimal 1-level expectation for SO(odd), support `(−2, 2)`.
pub const REFERENCE_LEVEL1_SO_ODD: f64 = 1.11454;
/// Optimal 2-level expectation for SO(even), support `(−1, 1)`.
pub const REFERENCE_LEVEL2_SO_EVEN: f64 = 0.378449;
/// SO(odd) 2-level expectation, the row-constant `bound·(r − 1)²` of the
/// published odd tables.
pub const REFERENCE_LEVEL2_SO_ODD: f64 = 1.079086;

const REFERENCE_CSV: &str = include_str!("../data/reference_tables.csv");

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BoundError {
    #[error("rank must be positive")]
    ZeroRank,
    #[error("rank {rank} has the wrong parity for {family}")]
    ParityMismatch { family: SymmetryGroup, rank: u64 },
    #[error("bounds are only available for so-even and so-odd, got {0}")]
    UnsupportedFamily(SymmetryGroup),
    #[error("2-level coefficient vanishes at rank {0}")]
    ZeroCoefficient(u64),
    #[error(
        "rank {rank} is below the minimum usable rank {min_rank} of slot {index} (needs r > c_φ = {threshold})"
    )]
    RankBelowMinimum {
        index: usize,
        rank: u64,
        min_rank: u64,
        threshold: f64,
    },
    #[error("moment bound needs at least one test-function slot")]
    NoSlots,
    #[error("moment order must be even and at least 2, got {0}")]
    InvalidOrder(usize),
    #[error("method {method} expects {expected} test function(s), got {got}")]
    WrongSlotCount {
        method: BoundMethod,
        expected: usize,
        got: usize,
    },
    #[error("no valid candidate: {}", .0.join("; "))]
    NoValidCandidate(Vec<String>),
    #[error(transparent)]
    Expectation(#[from] ExpectationError),
    #[error(transparent)]
    Moment(#[from] MomentError),
    #[error(transparent)]
    TestFunction(#[from] TestFunctionError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum BoundMethod {
    Level1,
    Level2,
    /// Centered moment of the given even order.
    Moment { order: usize },
}

impl BoundMethod {
    pub const MOMENT4: BoundMethod = BoundMethod::Moment { order: 4 };

    pub fn moment(order: usize) -> Result<Self, BoundError> {
        if order < 2 || !order.is_multiple_of(2) {
            return Err(BoundError::InvalidOrder(order));
        }
        Ok(BoundMethod::Moment { order })
    }
}

impl fmt::Display for BoundMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoundMethod::Level1 => f.write_str("level1"),
            BoundMethod::Level2 => f.write_str("level2"),
            BoundMethod::Moment { order } => write!(f, "moment{order}"),
        }
    }
}

impl FromStr for BoundMethod {
    type Err = String;

    /// Accepts `level1`, `level2`, `moment<2m>` and `moment2m:<m>`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim().to_ascii_lowercase();
        let bad = || format!("unknown method `{s}` (expected level1, level2, moment4 or moment2m:<m>)");
        match s.as_str() {
            "level1" => return Ok(BoundMethod::Level1),
            "level2" => return Ok(BoundMethod::Level2),
            _ => {}
        }
        let order = if let Some(m) = s.strip_prefix("moment2m:") {
            m.parse::<usize>().map_err(|_| bad())?.checked_mul(2).ok_or_else(bad)?
        } else if let Some(n) = s.strip_prefix("moment") {
            n.parse::<usize>().map_err(|_| bad())?
        } else {
            return Err(bad());
        };
        BoundMethod::moment(order).map_err(|e| e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundResult {
    pub family: SymmetryGroup,
    pub rank: u64,
    pub method: BoundMethod,
    /// Spec strings of the test functions, slot order; empty when a
    /// reference expectation was used.
    pub test_functions: Vec<String>,
    pub upper_bound: f64,
    pub denominator: f64,
    /// Density expectation feeding the 1-/2-level bounds.
    pub expectation: Option<f64>,
    pub moment_value: Option<f64>,
}

fn check_family_rank(family: SymmetryGroup, r: u64) -> Result<(), BoundError> {
    if r == 0 {
        return Err(BoundError::ZeroRank);
    }
    if !matches!(family, SymmetryGroup::SoEven | SymmetryGroup::SoOdd) {
        return Err(BoundError::UnsupportedFamily(family));
    }
    if !family.admits_rank(r) {
        return Err(BoundError::ParityMismatch { family, rank: r });
    }
    Ok(())
}

/// Reference optimal expectation for the 1-/2-level methods.
pub fn reference_expectation(method: BoundMethod, family: SymmetryGroup) -> Option<f64> {
    match (method, family) {
        (BoundMethod::Level1, SymmetryGroup::SoEven) => Some(REFERENCE_LEVEL1_SO_EVEN),
        (BoundMethod::Level1, SymmetryGroup::SoOdd) => Some(REFERENCE_LEVEL1_SO_ODD),
        (BoundMethod::Level2, SymmetryGroup::SoEven) => Some(REFERENCE_LEVEL2_SO_EVEN),
        (BoundMethod::Level2, SymmetryGroup::SoOdd) => Some(REFERENCE_LEVEL2_SO_ODD),
        _ => None,
    }
}

/// `r(r − 2)` for even `r`, `(r − 1)²` for odd `r`.
pub fn level2_coefficient(r: u64) -> f64 {
    let r = r as f64;
    if r % 2.0 == 0.0 {
        r * (r - 2.0)
    } else {
        (r - 1.0) * (r - 1.0)
    }
}

pub fn bound_level1_from_expectation(
    expectation: f64,
    family: SymmetryGroup,
    r: u64,
) -> Result<BoundResult, BoundError> {
    check_family_rank(family, r)?;
    Ok(BoundResult {
        family,
        rank: r,
        method: BoundMethod::Level1,
        test_functions: Vec::new(),
        upper_bound: expectation / r as f64,
        denominator: r as f64,
        expectation: Some(expectation),
        moment_value: None,
    })
}

pub fn bound_level1(tf: &TestFunction, family: SymmetryGroup, r: u64) -> Result<BoundResult, BoundError> {
    check_family_rank(family, r)?;
    let e = expectation_1level(tf, family)?;
    let mut out = bound_level1_from_expectation(e, family, r)?;
    out.test_functions = vec![tf.label()];
    Ok(out)
}

pub fn bound_level2_from_expectation(
    expectation: f64,
    family: SymmetryGroup,
    r: u64,
) -> Result<BoundResult, BoundError> {
    check_family_rank(family, r)?;
    let coefficient = level2_coefficient(r);
    if coefficient == 0.0 {
        return Err(BoundError::ZeroCoefficient(r));
    }
    Ok(BoundResult {
        family,
        rank: r,
        method: BoundMethod::Level2,
        test_functions: Vec::new(),
        upper_bound: expectation / coefficient,
        denominator: coefficient,
        expectation: Some(expectation),
        moment_value: None,
    })
}

pub fn bound_level2(
    tf1: &TestFunction,
    tf2: &TestFunction,
    family: SymmetryGroup,
    r: u64,
) -> Result<BoundResult, BoundError> {
    bound_level2_with(tf1, tf2, family, r, &QuadratureSettings::default())
}

pub fn bound_level2_with(
    tf1: &TestFunction,
    tf2: &TestFunction,
    family: SymmetryGroup,
    r: u64,
    s: &QuadratureSettings,
) -> Result<BoundResult, BoundError> {
    check_family_rank(family, r)?;
    if level2_coefficient(r) == 0.0 {
        return Err(BoundError::ZeroCoefficient(r));
    }
    let e = expectation_2level_with(tf1, tf2, family, s)?;
    let mut out = bound_level2_from_expectation(e, family, r)?;
    out.test_functions = vec![tf1.label(), tf2.label()];
    Ok(out)
}

/// `Π_s (r·φ_s(0) − (φ̂_s(0) + ½φ_s(0)))²` after checking `r > c_φ` per slot.
pub fn moment_denominator(slots: &[TestFunction], r: u64) -> Result<f64, BoundError> {
    let mut product = 1.0;
    for (index, tf) in slots.iter().enumerate() {
        let threshold = tf.rank_threshold();
        if !(r as f64 > threshold) {
            return Err(BoundError::RankBelowMinimum {
                index,
                rank: r,
                min_rank: tf.min_rank(),
                threshold,
            });
        }
        let phi0 = tf.phi_at_zero();
        let gap = r as f64 * phi0 - (tf.phi_hat_at_zero() + 0.5 * phi0);
        product *= gap * gap;
    }
    Ok(product)
}

/// Moment bound of order `2·slots.len()`; every slot is used twice.
pub fn bound_moment(
    slots: &[TestFunction],
    family: SymmetryGroup,
    r: u64,
    weight_k: u32,
    regime: Regime,
) -> Result<BoundResult, BoundError> {
    bound_moment_with(slots, family, r, weight_k, regime, &QuadratureSettings::default())
}

pub fn bound_moment_with(
    slots: &[TestFunction],
    family: SymmetryGroup,
    r: u64,
    weight_k: u32,
    regime: Regime,
    s: &QuadratureSettings,
) -> Result<BoundResult, BoundError> {
    if slots.is_empty() {
        return Err(BoundError::NoSlots);
    }
    check_family_rank(family, r)?;
    let denominator = moment_denominator(slots, r)?;
    let doubled: Vec<TestFunction> = slots.iter().flat_map(|tf| [tf.clone(), tf.clone()]).collect();
    let req = MomentRequest::new(doubled, MomentFamily::try_from(family)?)
        .with_weight(weight_k)
        .with_regime(regime);
    let moment = centered_moment_with(&req, s)?;
    Ok(BoundResult {
        family,
        rank: r,
        method: BoundMethod::Moment { order: 2 * slots.len() },
        test_functions: slots.iter().map(TestFunction::label).collect(),
        upper_bound: moment.value / denominator,
        denominator,
        expectation: None,
        moment_value: Some(moment.value),
    })
}

/// Where a 1-/2-level candidate takes its expectation from.
#[derive(Debug, Clone)]
pub enum ExpectationSource {
    Reference,
    TestFunctions(Vec<TestFunction>),
}

#[derive(Debug, Clone)]
pub enum BoundCandidate {
    Level1(ExpectationSource),
    Level2(ExpectationSource),
    Moment {
        slots: Vec<TestFunction>,
        weight_k: u32,
        regime: Regime,
    },
}

impl BoundCandidate {
    pub fn method(&self) -> BoundMethod {
        match self {
            BoundCandidate::Level1(_) => BoundMethod::Level1,
            BoundCandidate::Level2(_) => BoundMethod::Level2,
            BoundCandidate::Moment { slots, .. } => BoundMethod::Moment { order: 2 * slots.len() },
        }
    }

    pub fn evaluate(&self, family: SymmetryGroup, r: u64) -> Result<BoundResult, BoundError> {
        let method = self.method();
        let wrong = |expected: usize, got: usize| BoundError::WrongSlotCount { method, expected, got };
        match self {
            BoundCandidate::Level1(ExpectationSource::Reference) | BoundCandidate::Level2(ExpectationSource::Reference) => {
                check_family_rank(family, r)?;
                let e = reference_expectation(method, family).ok_or(BoundError::UnsupportedFamily(family))?;
                if method == BoundMethod::Level1 {
                    bound_level1_from_expectation(e, family, r)
                } else {
                    bound_level2_from_expectation(e, family, r)
                }
            }
            BoundCandidate::Level1(ExpectationSource::TestFunctions(tfs)) => match tfs.as_slice() {
                [tf] => bound_level1(tf, family, r),
                _ => Err(wrong(1, tfs.len())),
            },
            BoundCandidate::Level2(ExpectationSource::TestFunctions(tfs)) => match tfs.as_slice() {
                [a] => bound_level2(a, a, family, r),
                [a, b] => bound_level2(a, b, family, r),
                _ => Err(wrong(2, tfs.len())),
            },
            BoundCandidate::Moment { slots, weight_k, regime } => bound_moment(slots, family, r, *weight_k, *regime),
        }
    }
}

/// Smallest bound among the candidates whose hypotheses hold at `r`.
pub fn best_bound(
    r: u64,
    family: SymmetryGroup,
    candidates: &[BoundCandidate],
) -> Result<BoundResult, BoundError> {
    let mut best: Option<BoundResult> = None;
    let mut reasons = Vec::new();
    for c in candidates {
        match c.evaluate(family, r) {
            Ok(b) => {
                if best.as_ref().is_none_or(|cur| b.upper_bound < cur.upper_bound) {
                    best = Some(b);
                }
            }
            Err(e) => reasons.push(format!("{}: {e}", c.method())),
        }
    }
    match best {
        Some(b) => Ok(b),
        None => {
            if reasons.is_empty() {
                reasons.push("candidate list is empty".into());
            }
            Err(BoundError::NoValidCandidate(reasons))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TableId {
    T1,
    T2,
    T3,
    T4,
    T5,
}

impl TableId {
    pub const ALL: [TableId; 5] = [TableId::T1, TableId::T2, TableId::T3, TableId::T4, TableId::T5];

    /// Family of a row; T1 mixes parities.
    pub fn family_for(self, r: u64) -> SymmetryGroup {
        match self {
            TableId::T1 if r.is_multiple_of(2) => SymmetryGroup::SoEven,
            TableId::T1 => SymmetryGroup::SoOdd,
            TableId::T2 | TableId::T3 => SymmetryGroup::SoEven,
            TableId::T4 | TableId::T5 => SymmetryGroup::SoOdd,
        }
    }
}

impl fmt::Display for TableId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

impl FromStr for TableId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "T1" | "1" => Ok(TableId::T1),
            "T2" | "2" => Ok(TableId::T2),
            "T3" | "3" => Ok(TableId::T3),
            "T4" | "4" => Ok(TableId::T4),
            "T5" | "5" => Ok(TableId::T5),
            other => Err(format!("unknown table `{other}` (expected T1..T5)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TableColumn {
    #[serde(rename = "level1")]
    Level1,
    #[serde(rename = "level2")]
    Level2,
    /// Four copies of Naive(1/3), R-term regime.
    #[serde(rename = "moment4*")]
    Moment4Naive,
    /// Two copies each of the sin(x²) generator on `|x| < 1/8` and
    /// Naive(1/4), mock-Gaussian regime.
    #[serde(rename = "moment4**")]
    Moment4Mixed,
}

impl TableColumn {
    pub fn tag(self) -> &'static str {
        match self {
            TableColumn::Level1 => "level1",
            TableColumn::Level2 => "level2",
            TableColumn::Moment4Naive => "moment4*",
            TableColumn::Moment4Mixed => "moment4**",
        }
    }

    /// Relative tolerance used when comparing against the printed value.
    pub fn rel_tol(self) -> f64 {
        match self {
            TableColumn::Moment4Mixed => 1e-3,
            _ => 1e-4,
        }
    }
}

impl fmt::Display for TableColumn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for TableColumn {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "level1" => Ok(TableColumn::Level1),
            "level2" => Ok(TableColumn::Level2),
            "moment4*" => Ok(TableColumn::Moment4Naive),
            "moment4**" => Ok(TableColumn::Moment4Mixed),
            other => Err(format!("unknown column `{other}`")),
        }
    }
}

/// One published cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceCell {
    pub table: TableId,
    pub rank: u64,
    pub column: TableColumn,
    /// The number exactly as printed.
    pub printed: String,
    pub value: f64,
    pub provenance: String,
}

impl ReferenceCell {
    /// One unit in the last printed digit.
    pub fn printed_unit(&self) -> f64 {
        printed_unit(&self.printed)
    }
}

/// One unit in the last digit of a decimal literal such as `0.0003640` or
/// `4.49988e-6`.
pub fn printed_unit(text: &str) -> f64 {
    let lower = text.trim().to_ascii_lowercase();
    let (mantissa, exponent) = match lower.split_once('e') {
        Some((m, e)) => (m, e.parse::<i32>().unwrap_or(0)),
        None => (lower.as_str(), 0),
    };
    let decimals = mantissa.split_once('.').map_or(0, |(_, frac)| frac.len()) as i32;
    10f64.powi(exponent - decimals)
}

fn parse_reference(text: &str) -> Result<Vec<ReferenceCell>, String> {
    let mut out = Vec::new();
    let mut header_seen = false;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if !header_seen {
            header_seen = true;
            continue;
        }
        let fields: Vec<&str> = line.splitn(5, ',').collect();
        let err = |what: &str| format!("reference data line {}: {what}", lineno + 1);
        if fields.len() != 5 {
            return Err(err("expected 5 fields"));
        }
        out.push(ReferenceCell {
            table: fields[0].parse().map_err(|e: String| err(&e))?,
            rank: fields[1].parse().map_err(|_| err("bad rank"))?,
            column: fields[2].parse().map_err(|e: String| err(&e))?,
            printed: fields[3].to_string(),
            value: fields[3].parse().map_err(|_| err("bad value"))?,
            provenance: fields[4].to_string(),
        });
    }
    Ok(out)
}

/// Every published cell, in file order.
pub fn reference_cells() -> &'static [ReferenceCell] {
    static CELLS: OnceLock<Vec<ReferenceCell>> = OnceLock::new();
    CELLS.get_or_init(|| parse_reference(REFERENCE_CSV).expect("bundled reference data is well formed"))
}

pub fn reference_table(which: TableId) -> Vec<ReferenceCell> {
    reference_cells().iter().filter(|c| c.table == which).cloned().collect()
}

/// A recomputed table cell next to its published value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableCell {
    pub table: TableId,
    pub family: SymmetryGroup,
    pub rank: u64,
    pub column: TableColumn,
    pub computed: f64,
    pub paper_value: f64,
    pub printed: String,
    pub rel_dev: f64,
    /// `max(rel_tol·|paper|, one unit in the last printed digit)`.
    pub allowance: f64,
    pub within_tolerance: bool,
    pub provenance: String,
}

/// Test functions of the moment columns.
#[derive(Debug, Clone)]
pub struct TableInputs {
    pub naive_third: TestFunction,
    pub sin_square: TestFunction,
    pub naive_quarter: TestFunction,
}

impl TableInputs {
    pub fn build() -> Result<Self, BoundError> {
        Ok(Self {
            naive_third: make_naive(1.0 / 3.0)?,
            sin_square: make_from_generator(GeneratorSpec::sin_of_square(0.125)?)?,
            naive_quarter: make_naive(0.25)?,
        })
    }

    pub fn compute(&self, column: TableColumn, family: SymmetryGroup, r: u64) -> Result<f64, BoundError> {
        let b = match column {
            TableColumn::Level1 => BoundCandidate::Level1(ExpectationSource::Reference).evaluate(family, r)?,
            TableColumn::Level2 => BoundCandidate::Level2(ExpectationSource::Reference).evaluate(family, r)?,
            TableColumn::Moment4Naive => {
                let tf = &self.naive_third;
                bound_moment(&[tf.clone(), tf.clone()], family, r, 2, Regime::WithR)?
            }
            TableColumn::Moment4Mixed => bound_moment(
                &[self.sin_square.clone(), self.naive_quarter.clone()],
                family,
                r,
                2,
                Regime::MockGaussian,
            )?,
        };
        Ok(b.upper_bound)
    }
}

/// Recomputes every published cell of a table.
pub fn reproduce_table(which: TableId) -> Result<Vec<TableCell>, BoundError> {
    let inputs = TableInputs::build()?;
    reproduce_table_with(which, &inputs)
}

pub fn reproduce_table_with(which: TableId, inputs: &TableInputs) -> Result<Vec<TableCell>, BoundError> {
    reference_table(which)
        .into_par_iter()
        .map(|cell| {
            let family = which.family_for(cell.rank);
            let computed = inputs.compute(cell.column, family, cell.rank)?;
            let diff = (computed - cell.value).abs();
            let allowance = (cell.column.rel_tol() * cell.value.abs()).max(cell.printed_unit());
            Ok(TableCell {
                table: which,
                family,
                rank: cell.rank,
                column: cell.column,
                computed,
                paper_value: cell.value,
                rel_dev: diff / cell.value.abs(),
                allowance,
                within_tolerance: diff <= allowance,
                printed: cell.printed.clone(),
                provenance: cell.provenance.clone(),
            })
        })
        .collect()
}
