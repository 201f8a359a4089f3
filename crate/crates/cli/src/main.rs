use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use knotenum::transfer::TransferError;
use serde::Serialize;

mod commands;
mod output;
mod verify;

/// Counts of alternating knot diagrams with two external legs.
#[derive(Parser, Debug)]
#[command(name = "knotenum", version)]
struct Cli {
    /// Worker threads for enumeration (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Enumerate diagrams and write a coefficient table.
    Enumerate(EnumerateArgs),
    /// Combine residue tables into an exact table.
    Combine(CombineArgs),
    /// Irreducible and skeleton series from the two-leg series.
    Derive(DeriveArgs),
    /// Prime tangle counts from a two-variable table.
    Flype(FlypeArgs),
    /// Check enumeration against bundled tables, closed forms and the oracle.
    Verify(VerifyArgs),
    /// Growth constant, exponent and the second growth constant.
    Fit(FitArgs),
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct EnumerateArgs {
    /// Maximal total order p1 + p2.
    #[arg(long)]
    pub p: usize,
    /// Enumerate tangencies up to this many.
    #[arg(long, conflicts_with = "tangency_slack")]
    pub tangency_max: Option<usize>,
    /// Keep the tangencies needed for tangle counts, with this slack.
    #[arg(long)]
    pub tangency_slack: Option<usize>,
    /// Generate tadpoles directly instead of restoring them afterwards.
    #[arg(long)]
    pub tadpoles: bool,
    /// Count diagrams returning to the vacuum only at the end.
    #[arg(long)]
    pub first_return: bool,
    /// Count modulo this number; repeat for several moduli.
    #[arg(long = "mod", value_name = "M")]
    pub moduli: Vec<u64>,
    /// Reuse and store finished tables and checkpoints here.
    #[arg(long)]
    pub cache_dir: Option<PathBuf>,
    /// Abort once a step holds more states than this.
    #[arg(long)]
    pub max_states: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct CombineArgs {
    /// Residue tables of the same run.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct DeriveArgs {
    /// Table or series file holding the two-leg series.
    #[arg(long, required_unless_present = "fixture", conflicts_with = "fixture")]
    pub input: Option<PathBuf>,
    /// Use the bundled two-leg counts.
    #[arg(long)]
    pub fixture: bool,
    /// Directory for sigma1.json and sigma2.json (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct FlypeArgs {
    /// Highest order of the tangle counts.
    #[arg(long)]
    pub p: usize,
    /// Two-variable table (default: enumerate one).
    #[arg(long, conflicts_with = "fixture")]
    pub input: Option<PathBuf>,
    /// Use the bundled two-variable counts.
    #[arg(long)]
    pub fixture: bool,
    #[arg(long)]
    pub cache_dir: Option<PathBuf>,
    #[arg(long)]
    pub max_states: Option<usize>,
    /// Directory for gamma1.json, gamma2.json and tangles.json (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct VerifyArgs {
    /// Highest order enumerated for the table comparisons.
    #[arg(long, default_value_t = 10)]
    pub p: usize,
    /// Highest total order for the oracle comparison.
    #[arg(long, default_value_t = 6)]
    pub oracle_max: usize,
    /// Also write the report as JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct FitArgs {
    /// Series or table file (its crossing column is used).
    #[arg(long, required_unless_present = "fixture", conflicts_with = "fixture")]
    pub input: Option<PathBuf>,
    /// Use the bundled two-leg counts.
    #[arg(long)]
    pub fixture: bool,
    /// Orders used by the fits: `START` or `START..END`.
    #[arg(long, default_value = "12", value_parser = parse_window)]
    pub fit_window: Window,
    /// JSON report goes here; the summary table then goes to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct Window {
    pub start: usize,
    pub end: Option<usize>,
}

fn parse_window(s: &str) -> Result<Window, String> {
    let bad = || format!("expected START or START..END, got {s:?}");
    match s.split_once("..") {
        None => Ok(Window {
            start: s.trim().parse().map_err(|_| bad())?,
            end: None,
        }),
        Some((a, b)) => {
            let start: usize = a.trim().parse().map_err(|_| bad())?;
            let end: usize = b.trim().parse().map_err(|_| bad())?;
            if end < start {
                return Err(bad());
            }
            Ok(Window {
                start,
                end: Some(end),
            })
        }
    }
}

/// An error with its exit code: 1 mismatch, 2 configuration or I/O,
/// 3 resource abort.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn mismatch(m: impl Into<String>) -> Self {
        Failure {
            code: 1,
            message: m.into(),
        }
    }

    pub fn config(m: impl Into<String>) -> Self {
        Failure {
            code: 2,
            message: m.into(),
        }
    }

    pub fn io(path: &Path, e: std::io::Error) -> Self {
        Failure::config(format!("{}: {e}", path.display()))
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<TransferError> for Failure {
    fn from(e: TransferError) -> Self {
        match &e {
            TransferError::ResourceLimit { peak_states, .. } => Failure {
                code: 3,
                message: format!("{e}; states per step {peak_states:?}"),
            },
            _ => Failure::config(e.to_string()),
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Failure::config("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::config(e.to_string()))?;
    }
    let threads = cli.threads;
    match cli.command {
        Command::Enumerate(a) => commands::enumerate(&a, threads),
        Command::Combine(a) => commands::combine(&a),
        Command::Derive(a) => commands::derive(&a),
        Command::Flype(a) => commands::flype(&a, threads),
        Command::Verify(a) => verify::run(&a),
        Command::Fit(a) => commands::fit(&a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code)
        }
    }
}
