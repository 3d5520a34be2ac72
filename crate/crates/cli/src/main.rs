use std::collections::BTreeSet;
use std::ffi::OsString;
use std::process::ExitCode;

use clap::Parser;

mod args;
mod commands;
mod output;

use args::Cli;
use output::CliError;

const SUBCOMMANDS: [&str; 5] = ["bound", "moment", "table", "optimize", "rmt-verify"];

/// Flags named on the command line, without the leading dashes.
fn named_flags(args: &[String]) -> BTreeSet<String> {
    args.iter()
        .filter_map(|a| a.strip_prefix("--"))
        .map(|a| a.split_once('=').map_or(a, |(k, _)| k).to_string())
        .collect()
}

fn config_path(args: &[String]) -> Option<String> {
    let mut it = args.iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            return it.next().cloned();
        }
        if let Some(p) = a.strip_prefix("--config=") {
            return Some(p.to_string());
        }
    }
    None
}

/// Appends `key=value` lines of the config file as flags not already given.
fn merge_config(args: Vec<String>) -> Result<Vec<OsString>, CliError> {
    let Some(path) = config_path(&args) else {
        return Ok(args.into_iter().map(OsString::from).collect());
    };
    let text = std::fs::read_to_string(&path)
        .map_err(|e| CliError::new("config_error", format!("cannot read config `{path}`: {e}")))?;
    let given = named_flags(&args);
    let mut command = None;
    let mut extra = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(CliError::new(
                "config_error",
                format!("{path}:{}: expected key=value, got `{line}`", lineno + 1),
            ));
        };
        let (key, value) = (key.trim(), value.trim());
        if key == "command" {
            command = Some(value.to_string());
        } else if key != "config" && !given.contains(key) {
            extra.push(format!("--{key}={value}"));
        }
    }
    let mut merged = args;
    let has_command = merged.iter().skip(1).any(|a| SUBCOMMANDS.contains(&a.as_str()));
    if !has_command {
        if let Some(c) = command {
            merged.insert(1, c);
        }
    }
    merged.extend(extra);
    Ok(merged.into_iter().map(OsString::from).collect())
}

fn main() -> ExitCode {
    let args = match merge_config(std::env::args().collect()) {
        Ok(a) => a,
        Err(e) => return e.report(),
    };
    let cli = Cli::parse_from(args);
    match commands::run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => e.report(),
    }
}
