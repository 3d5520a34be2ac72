use std::collections::BTreeSet;
use std::fs::File;
use std::io::{self, Write};
use std::path::Path;
use std::process::ExitCode;

use orderbound_core::bounds::BoundError;
use orderbound_core::moments::MomentError;
use orderbound_core::optimize::OptimizeError;
use orderbound_core::rmt::RmtError;
use orderbound_core::testfunc::TestFunctionError;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::args::Format;

/// An error with a machine-readable code, reported on stderr.
#[derive(Debug)]
pub struct CliError {
    pub code: &'static str,
    pub message: String,
}

impl CliError {
    pub fn new(code: &'static str, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }

    pub fn report(&self) -> ExitCode {
        let mut rec = Map::new();
        rec.insert("record".into(), "error".into());
        rec.insert("code".into(), self.code.into());
        rec.insert("message".into(), self.message.clone().into());
        eprintln!("{}", Value::Object(rec));
        ExitCode::from(2)
    }
}

impl From<TestFunctionError> for CliError {
    fn from(e: TestFunctionError) -> Self {
        let code = match e {
            TestFunctionError::Quadrature(_) => "quadrature_error",
            _ => "invalid_testfn",
        };
        CliError::new(code, e.to_string())
    }
}

impl From<MomentError> for CliError {
    fn from(e: MomentError) -> Self {
        let code = match e {
            MomentError::SupportViolation { .. } => "support_violation",
            MomentError::NoRegime { .. } => "no_regime",
            MomentError::UnsplitWithR => "unsplit_with_r",
            MomentError::UnsupportedFamily(_) => "unsupported_family",
            MomentError::Quadrature(_) => "quadrature_error",
            _ => "invalid_order",
        };
        CliError::new(code, e.to_string())
    }
}

impl From<BoundError> for CliError {
    fn from(e: BoundError) -> Self {
        let code = match &e {
            BoundError::ParityMismatch { .. } => "parity_mismatch",
            BoundError::UnsupportedFamily(_) => "unsupported_family",
            BoundError::ZeroCoefficient(_) => "zero_coefficient",
            BoundError::RankBelowMinimum { .. } => "rank_below_minimum",
            BoundError::ZeroRank => "invalid_rank",
            BoundError::NoSlots | BoundError::WrongSlotCount { .. } => "wrong_slot_count",
            BoundError::InvalidOrder(_) => "invalid_order",
            BoundError::NoValidCandidate(_) => "no_valid_candidate",
            BoundError::Expectation(_) => "expectation_error",
            BoundError::Moment(m) => return CliError::from(m.clone()),
            BoundError::TestFunction(t) => return CliError::from(t.clone()),
        };
        CliError::new(code, e.to_string())
    }
}

impl From<OptimizeError> for CliError {
    fn from(e: OptimizeError) -> Self {
        let code = match &e {
            OptimizeError::NoFeasiblePoint { .. } => "no_feasible_point",
            OptimizeError::Bound(b) => return CliError::from(b.clone()),
            _ => "invalid_problem",
        };
        CliError::new(code, e.to_string())
    }
}

impl From<RmtError> for CliError {
    fn from(e: RmtError) -> Self {
        let code = match &e {
            RmtError::Moment(m) => return CliError::from(m.clone()),
            RmtError::UnsupportedGroup(_) => "unsupported_family",
            _ => "invalid_ensemble",
        };
        CliError::new(code, e.to_string())
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::new("io_error", e.to_string())
    }
}

/// Collects records and writes them as JSON lines or CSV.
pub struct Sink {
    records: Vec<Map<String, Value>>,
}

impl Sink {
    pub fn new() -> Self {
        Self { records: Vec::new() }
    }

    /// Serialises `value` as an object tagged with `record: kind`.
    pub fn push<T: Serialize>(&mut self, kind: &str, value: &T) -> Result<(), CliError> {
        let v = serde_json::to_value(value).map_err(|e| CliError::new("internal_error", e.to_string()))?;
        let mut map = match v {
            Value::Object(m) => m,
            other => {
                let mut m = Map::new();
                m.insert("value".into(), other);
                m
            }
        };
        map.insert("record".into(), kind.into());
        self.records.push(map);
        Ok(())
    }

    pub fn finish(self, format: Format, out: Option<&Path>) -> Result<(), CliError> {
        let mut writer: Box<dyn Write> = match out {
            Some(p) => Box::new(io::BufWriter::new(File::create(p).map_err(|e| {
                CliError::new("io_error", format!("cannot write `{}`: {e}", p.display()))
            })?)),
            None => Box::new(io::BufWriter::new(io::stdout().lock())),
        };
        match format {
            Format::Records => {
                for r in &self.records {
                    writeln!(writer, "{}", Value::Object(r.clone()))?;
                }
            }
            Format::Csv => write_csv(&self.records, &mut writer)?,
        }
        writer.flush()?;
        Ok(())
    }
}

fn csv_field(v: Option<&Value>) -> String {
    match v {
        None | Some(Value::Null) => String::new(),
        Some(Value::String(s)) => s.clone(),
        Some(Value::Array(items)) if items.iter().all(|i| !i.is_object() && !i.is_array()) => items
            .iter()
            .map(|i| csv_field(Some(i)))
            .collect::<Vec<_>>()
            .join(";"),
        Some(other) => other.to_string(),
    }
}

/// Header is `record` followed by the sorted union of all keys.
fn write_csv(records: &[Map<String, Value>], writer: &mut dyn Write) -> Result<(), CliError> {
    let keys: BTreeSet<&String> = records.iter().flat_map(|r| r.keys()).filter(|k| *k != "record").collect();
    let mut header = vec!["record".to_string()];
    header.extend(keys.into_iter().cloned());
    let mut w = csv::Writer::from_writer(writer);
    let csv_err = |e: csv::Error| CliError::new("io_error", e.to_string());
    w.write_record(&header).map_err(csv_err)?;
    for r in records {
        w.write_record(header.iter().map(|k| csv_field(r.get(k)))).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}
