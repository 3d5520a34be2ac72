use orderbound_core::bounds::{
    bound_level1, bound_level2_with, bound_moment_with, reference_expectation, reproduce_table_with,
    BoundCandidate, BoundMethod, ExpectationSource, TableId, TableInputs,
};
use orderbound_core::moments::{centered_moment_with, MomentFamily, MomentRequest, Regime};
use orderbound_core::optimize::{search, GeneratorBasis, OptimizationProblem, SearchSettings};
use orderbound_core::quadrature::QuadratureSettings;
use orderbound_core::rmt::{check_moments, Ensemble, EnsembleSpec};
use orderbound_core::testfunc::{parse_number, parse_test_function, GeneratorKind, TestFunction};
use orderbound_core::SymmetryGroup;
use serde::{Deserialize, Serialize};

use crate::args::{BoundArgs, Cli, Command, Common, MomentArgs, OptimizeArgs, RmtArgs, TableArgs};
use crate::output::{CliError, Sink};

/// Runs one invocation; `Ok(false)` means a hard check failed.
pub fn run(cli: Cli) -> Result<bool, CliError> {
    let settings = quadrature_settings(&cli.common)?;
    let mut sink = Sink::new();
    let passed = match cli.command {
        Command::Bound(a) => bound(a, &settings, &mut sink)?,
        Command::Moment(a) => moment(a, &settings, &mut sink)?,
        Command::Table(a) => table(a, &mut sink)?,
        Command::Optimize(a) => optimize(a, &mut sink)?,
        Command::RmtVerify(a) => rmt_verify(a, &mut sink)?,
    };
    sink.finish(cli.common.format, cli.common.out.as_deref())?;
    Ok(passed)
}

fn quadrature_settings(c: &Common) -> Result<QuadratureSettings, CliError> {
    let mut s = QuadratureSettings::default();
    if let Some(t) = c.tol_abs {
        s = s.with_abs_tol(t);
    }
    if let Some(t) = c.tol_rel {
        s = s.with_rel_tol(t);
    }
    s.validate().map_err(|e| CliError::new("invalid_argument", e.to_string()))?;
    Ok(s)
}

fn parse_all(specs: &[String]) -> Result<Vec<TestFunction>, CliError> {
    specs
        .iter()
        .map(|s| parse_test_function(s).map_err(CliError::from))
        .collect()
}

fn bound(a: BoundArgs, s: &QuadratureSettings, sink: &mut Sink) -> Result<bool, CliError> {
    let mut ranks = a.ranks.clone();
    ranks.extend(a.rank);
    if ranks.is_empty() {
        return Err(CliError::new("invalid_argument", "give --rank or --ranks"));
    }
    let tfs = parse_all(&a.testfn)?;
    for r in ranks {
        let result = match a.method {
            BoundMethod::Level1 => match tfs.as_slice() {
                [] => BoundCandidate::Level1(ExpectationSource::Reference).evaluate(a.family, r)?,
                [tf] => bound_level1(tf, a.family, r)?,
                _ => return Err(slot_error(a.method, 1, tfs.len())),
            },
            BoundMethod::Level2 => match tfs.as_slice() {
                [] => {
                    reference_expectation(a.method, a.family)
                        .ok_or_else(|| CliError::new("unsupported_family", format!("no reference for {}", a.family)))?;
                    BoundCandidate::Level2(ExpectationSource::Reference).evaluate(a.family, r)?
                }
                [tf] => bound_level2_with(tf, tf, a.family, r, s)?,
                [x, y] => bound_level2_with(x, y, a.family, r, s)?,
                _ => return Err(slot_error(a.method, 2, tfs.len())),
            },
            BoundMethod::Moment { order } => {
                let m = order / 2;
                let slots = match tfs.len() {
                    0 => return Err(CliError::new("wrong_slot_count", "moment bounds need --testfn")),
                    1 => vec![tfs[0].clone(); m],
                    n if n == m => tfs.clone(),
                    n => return Err(slot_error(a.method, m, n)),
                };
                bound_moment_with(&slots, a.family, r, a.weight_k, a.regime, s)?
            }
        };
        sink.push("bound", &result)?;
    }
    Ok(true)
}

fn slot_error(method: BoundMethod, expected: usize, got: usize) -> CliError {
    CliError::new(
        "wrong_slot_count",
        format!("method {method} expects {expected} test function(s), got {got}"),
    )
}

/// Record emitted by `moment`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentRecord {
    pub family: SymmetryGroup,
    pub order: usize,
    pub test_functions: Vec<String>,
    pub value: f64,
    pub matching_sum: f64,
    pub r_term: f64,
    pub sign_applied: i8,
    pub regime: Regime,
}

fn moment(a: MomentArgs, s: &QuadratureSettings, sink: &mut Sink) -> Result<bool, CliError> {
    let mut tfs = parse_all(&a.testfn)?;
    if let Some(order) = a.order {
        match tfs.len() {
            1 => tfs = vec![tfs[0].clone(); order],
            n if n == order => {}
            n => {
                return Err(CliError::new(
                    "wrong_slot_count",
                    format!("--order {order} needs one or {order} test functions, got {n}"),
                ))
            }
        }
    }
    let family = MomentFamily::try_from(a.family)?;
    let labels = tfs.iter().map(TestFunction::label).collect();
    let order = tfs.len();
    let req = MomentRequest::new(tfs, family).with_weight(a.weight_k).with_regime(a.regime);
    let m = centered_moment_with(&req, s)?;
    sink.push(
        "moment",
        &MomentRecord {
            family: a.family,
            order,
            test_functions: labels,
            value: m.value,
            matching_sum: m.matching_sum,
            r_term: m.r_term,
            sign_applied: m.sign_applied,
            regime: m.regime,
        },
    )?;
    Ok(true)
}

fn table(a: TableArgs, sink: &mut Sink) -> Result<bool, CliError> {
    let mut which = a.tables;
    which.extend(a.table_flags);
    if which.is_empty() {
        which = TableId::ALL.to_vec();
    }
    which.sort();
    which.dedup();
    let inputs = TableInputs::build()?;
    let mut all_ok = true;
    for t in which {
        for cell in reproduce_table_with(t, &inputs)? {
            all_ok &= cell.within_tolerance;
            sink.push("table_cell", &cell)?;
        }
    }
    Ok(all_ok)
}

fn basis_error(spec: &str, reason: impl std::fmt::Display) -> CliError {
    CliError::new(
        "invalid_basis",
        format!(
            "malformed basis `{spec}`: {reason}; expected `fixed:<testfn>`, `sinx2:half=<h>:range=<lo>..<hi>`, \
             `cos:<dim>:half=<h>:bound=<b>` or `poly:<dim>:half=<h>:bound=<b>`"
        ),
    )
}

/// Parses one `--basis` value.
pub fn parse_basis(spec: &str) -> Result<GeneratorBasis, CliError> {
    if let Some(tf) = spec.strip_prefix("fixed:") {
        return Ok(GeneratorBasis::Fixed(parse_test_function(tf)?));
    }
    let mut parts = spec.split(':');
    let kind = parts.next().unwrap_or_default();
    let mut dim = None;
    let mut half = None;
    let mut bound = 1.0;
    let mut range = (0.5, 2.0);
    for p in parts {
        let num = |t: &str| parse_number(t).map_err(|e| basis_error(spec, e));
        if let Some(v) = p.strip_prefix("half=") {
            half = Some(num(v)?);
        } else if let Some(v) = p.strip_prefix("bound=") {
            bound = num(v)?;
        } else if let Some(v) = p.strip_prefix("range=") {
            let (lo, hi) = v.split_once("..").ok_or_else(|| basis_error(spec, "range needs lo..hi"))?;
            range = (num(lo)?, num(hi)?);
        } else {
            dim = Some(p.parse::<usize>().map_err(|_| basis_error(spec, format!("unexpected `{p}`")))?);
        }
    }
    let half = half.ok_or_else(|| basis_error(spec, "missing half="))?;
    let need_dim = || dim.filter(|&d| d > 0).ok_or_else(|| basis_error(spec, "missing positive dimension"));
    match kind {
        "sinx2" => Ok(GeneratorBasis::sin_of_square(half, range.0, range.1)),
        "cos" => Ok(GeneratorBasis::family(
            GeneratorKind::CosineSeries,
            vec![-bound; need_dim()?],
            vec![bound; need_dim()?],
            half,
        )),
        "poly" => Ok(GeneratorBasis::family(
            GeneratorKind::Polynomial,
            vec![-bound; need_dim()?],
            vec![bound; need_dim()?],
            half,
        )),
        other => Err(basis_error(spec, format!("unknown basis kind `{other}`"))),
    }
}

/// Final record emitted by `optimize`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimumRecord {
    pub family: SymmetryGroup,
    pub rank: u64,
    pub best_bound: f64,
    pub best_coefficients: Vec<Vec<f64>>,
    pub best_slots: Vec<String>,
    pub seed: u64,
}

fn optimize(a: OptimizeArgs, sink: &mut Sink) -> Result<bool, CliError> {
    let slots = a.basis.iter().map(|b| parse_basis(b)).collect::<Result<Vec<_>, _>>()?;
    let problem = OptimizationProblem::new(a.family, a.rank, slots, a.support)
        .with_weight(a.weight_k)
        .with_regime(a.regime);
    let settings = SearchSettings {
        restarts: a.restarts,
        seed: a.seed,
        max_evals: a.max_evals,
        simplex_tolerance: a.simplex_tol,
        initial: (!a.initial.is_empty()).then_some(a.initial),
    };
    let result = search(&problem, &settings)?;
    for t in &result.trace {
        sink.push("restart", t)?;
    }
    sink.push(
        "optimum",
        &OptimumRecord {
            family: a.family,
            rank: a.rank,
            best_bound: result.best_bound,
            best_coefficients: result.best_coefficients,
            best_slots: result.best_slots,
            seed: a.seed,
        },
    )?;
    Ok(true)
}

/// Record emitted by `rmt-verify`, one per order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RmtRecord {
    pub group: Ensemble,
    #[serde(rename = "N")]
    pub n: usize,
    pub samples: usize,
    pub seed: u64,
    pub testfn: String,
    pub order: usize,
    pub empirical: f64,
    pub predicted: f64,
    pub std_error: f64,
    pub z_score: f64,
    pub band: f64,
    pub within_band: bool,
}

fn rmt_verify(a: RmtArgs, sink: &mut Sink) -> Result<bool, CliError> {
    let tf = parse_test_function(&a.testfn)?;
    let spec = EnsembleSpec::new(a.group, a.n, a.samples, a.seed);
    let (_, checks) = check_moments(&spec, &tf, &a.orders, a.finite_size)?;
    let mut all_ok = true;
    for c in checks {
        all_ok &= c.within_band;
        sink.push(
            "rmt_check",
            &RmtRecord {
                group: a.group,
                n: a.n,
                samples: a.samples,
                seed: a.seed,
                testfn: tf.label(),
                order: c.order,
                empirical: c.empirical,
                predicted: c.predicted,
                std_error: c.std_error,
                z_score: c.z_score,
                band: c.band,
                within_band: c.within_band,
            },
        )?;
    }
    Ok(all_ok)
}
