use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use orderbound_core::bounds::{BoundMethod, TableId};
use orderbound_core::moments::Regime;
use orderbound_core::rmt::{Ensemble, DEFAULT_FINITE_SIZE};
use orderbound_core::SymmetryGroup;

#[derive(Debug, Parser)]
#[command(
    name = "orderbound",
    version,
    about = "Bounds on high vanishing orders from centered moments of the 1-level statistic"
)]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    /// One JSON object per line.
    Records,
    Csv,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Flat key=value file mirroring the flags; flags on the command line win.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output file (default stdout).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Records)]
    pub format: Format,
    /// Absolute quadrature tolerance.
    #[arg(long = "tol-abs", global = true)]
    pub tol_abs: Option<f64>,
    /// Relative quadrature tolerance.
    #[arg(long = "tol-rel", global = true)]
    pub tol_rel: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Upper bound on the proportion vanishing to order at least r.
    Bound(BoundArgs),
    /// Centered moment of a product of test functions.
    Moment(MomentArgs),
    /// Recompute published tables and compare cell by cell.
    Table(TableArgs),
    /// Search generator coefficients minimising the moment bound.
    Optimize(OptimizeArgs),
    /// Monte Carlo check of the moment predictions on Haar matrices.
    #[command(name = "rmt-verify")]
    RmtVerify(RmtArgs),
}

#[derive(Debug, Args)]
pub struct BoundArgs {
    #[arg(long)]
    pub family: SymmetryGroup,
    #[arg(long)]
    pub rank: Option<u64>,
    #[arg(long, value_delimiter = ',')]
    pub ranks: Vec<u64>,
    /// level1, level2, moment4 or moment2m:<m>.
    #[arg(long, default_value = "moment4")]
    pub method: BoundMethod,
    /// Test-function spec, repeatable in slot order. Without it the 1-/2-level
    /// methods use the reference expectations.
    #[arg(long)]
    pub testfn: Vec<String>,
    #[arg(long = "weight-k", default_value_t = 2)]
    pub weight_k: u32,
    /// auto, with-r or mock-gaussian.
    #[arg(long, default_value = "auto")]
    pub regime: Regime,
}

#[derive(Debug, Args)]
pub struct MomentArgs {
    #[arg(long)]
    pub family: SymmetryGroup,
    /// Test-function spec per factor; a single spec is repeated `--order` times.
    #[arg(long, required = true)]
    pub testfn: Vec<String>,
    #[arg(long)]
    pub order: Option<usize>,
    #[arg(long = "weight-k", default_value_t = 2)]
    pub weight_k: u32,
    #[arg(long, default_value = "auto")]
    pub regime: Regime,
}

#[derive(Debug, Args)]
pub struct TableArgs {
    /// T1..T5; all tables when omitted.
    pub tables: Vec<TableId>,
    #[arg(long = "table")]
    pub table_flags: Vec<TableId>,
}

#[derive(Debug, Args)]
pub struct OptimizeArgs {
    #[arg(long)]
    pub family: SymmetryGroup,
    #[arg(long)]
    pub rank: u64,
    /// Slot basis, repeatable: `fixed:<testfn>`, `sinx2:half=<h>:range=<lo>..<hi>`,
    /// `cos:<dim>:half=<h>:bound=<b>` or `poly:<dim>:half=<h>:bound=<b>`.
    #[arg(long, required = true)]
    pub basis: Vec<String>,
    /// Largest admissible transform support.
    #[arg(long)]
    pub support: f64,
    #[arg(long = "weight-k", default_value_t = 2)]
    pub weight_k: u32,
    #[arg(long, default_value = "auto")]
    pub regime: Regime,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 16)]
    pub restarts: usize,
    #[arg(long = "max-evals", default_value_t = 2000)]
    pub max_evals: usize,
    #[arg(long = "simplex-tol", default_value_t = 1e-12)]
    pub simplex_tol: f64,
    /// Starting coefficients of the first restart.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub initial: Vec<f64>,
}

#[derive(Debug, Args)]
pub struct RmtArgs {
    /// so-even (SO(2N)), so-odd (SO(2N+1)) or u (U(N)).
    #[arg(long, visible_alias = "family")]
    pub group: Ensemble,
    #[arg(long = "N")]
    pub n: usize,
    #[arg(long)]
    pub samples: usize,
    #[arg(long)]
    pub testfn: String,
    /// Moment orders; 1 checks the mean.
    #[arg(long, value_delimiter = ',', default_value = "2,4")]
    pub orders: Vec<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Finite-size allowance C in the band 3·se + C/N.
    #[arg(long = "finite-size", default_value_t = DEFAULT_FINITE_SIZE)]
    pub finite_size: f64,
}
