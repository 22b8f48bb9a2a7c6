//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 on a usage error, 2 when an input cannot be
//! read or is invalid.

mod commands;
mod report;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::Error;
use crate::mc::Comparison;
use crate::prob::Probability;
use crate::strategy::Direction;

pub use report::{InputDigest, Report};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "chancecheck", version, about = "How likely is it that a result was reached by chance?")]
pub struct Cli {
    /// Emit the machine-readable JSON report instead of text.
    #[arg(long, global = true)]
    pub json: bool,

    /// Write the output to this file instead of stdout.
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Uncertainty of a trade log against a random baseline.
    Eval(EvalArgs),
    /// Replay a trade log through the live/virtual control gate.
    Monitor(MonitorArgs),
    /// CSV of the doubling strategy's EV, average bet and beat probability.
    Stpetersburg(StPetersburgArgs),
    /// Simulate a random equity line and estimate its equal-or-better probability.
    EquitySim(EquitySimArgs),
    /// Manage and query an attempts ledger.
    #[command(subcommand)]
    Ledger(LedgerCommand),
    /// Compound probability of winning predictions on a state trace.
    Sequence(SequenceArgs),
    /// Hypothesis coverage counts over an enumerated sequence space.
    Occam(OccamArgs),
    /// Binomial probabilities for k successes in n trials.
    Binom(BinomArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum DirectionArg {
    Long,
    Short,
}

impl From<DirectionArg> for Direction {
    fn from(d: DirectionArg) -> Self {
        match d {
            DirectionArg::Long => Direction::Long,
            DirectionArg::Short => Direction::Short,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ComparisonArg {
    /// Random strategies that do strictly better.
    Better,
    /// Random strategies that do equally well or better.
    EqualOrBetter,
}

impl From<ComparisonArg> for Comparison {
    fn from(c: ComparisonArg) -> Self {
        match c {
            ComparisonArg::Better => Comparison::Exceeds,
            ComparisonArg::EqualOrBetter => Comparison::AtLeast,
        }
    }
}

fn parse_prob(s: &str) -> Result<Probability, String> {
    let v: f64 = s.parse().map_err(|_| format!("{s:?} is not a number"))?;
    Probability::new(v).map_err(|e| e.to_string())
}

fn parse_open_prob(s: &str) -> Result<Probability, String> {
    let p = parse_prob(s)?;
    if p.value() <= 0.0 || p.value() >= 1.0 {
        return Err(format!("{s} must lie strictly between 0 and 1"));
    }
    Ok(p)
}

/// Where the per-trade win probability comes from.
#[derive(Debug, Args)]
pub struct BaselineArgs {
    /// Per-trade win probability of a random strategy.
    #[arg(long, value_parser = parse_prob, required_unless_present = "prices", conflicts_with = "prices")]
    pub baseline: Option<Probability>,

    /// Derive the baseline from a `time,close` price CSV.
    #[arg(long, value_name = "PATH", requires = "direction")]
    pub prices: Option<PathBuf>,

    /// Trade direction used with --prices.
    #[arg(long, value_enum, requires = "prices")]
    pub direction: Option<DirectionArg>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Trades CSV with header `open,close,direction,outcome[,size]`.
    #[arg(long, value_name = "PATH")]
    pub trades: PathBuf,

    #[command(flatten)]
    pub baseline: BaselineArgs,

    /// Number of strategies tried before this one.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub attempts: u64,

    /// Acceptable probability of a random result.
    #[arg(long, default_value = "0.05", value_parser = parse_open_prob)]
    pub risk: Probability,

    #[arg(long, value_enum, default_value = "better")]
    pub compare: ComparisonArg,
}

#[derive(Debug, Args)]
pub struct MonitorArgs {
    #[arg(long, value_name = "PATH")]
    pub trades: PathBuf,

    #[command(flatten)]
    pub baseline: BaselineArgs,

    /// Number of most recent trades evaluated.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub window: u64,

    /// Probability above which trading switches to virtual.
    #[arg(long, value_parser = parse_open_prob)]
    pub threshold: Probability,
}

#[derive(Debug, Args)]
pub struct StPetersburgArgs {
    /// Largest toss count.
    #[arg(long = "max", default_value_t = 200, value_parser = clap::value_parser!(u64).range(10..=100_000))]
    pub max_tosses: u64,

    /// First toss count.
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
    pub start: u64,

    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
    pub step: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum EquityTarget {
    /// Final equity of the simulated line itself.
    Random,
    /// Equity of holding through exactly the rising days.
    Oracle,
    Value(f64),
}

fn parse_target(s: &str) -> Result<EquityTarget, String> {
    match s {
        "random" => Ok(EquityTarget::Random),
        "oracle" => Ok(EquityTarget::Oracle),
        _ => s
            .parse::<f64>()
            .ok()
            .filter(|v| !v.is_nan())
            .map(EquityTarget::Value)
            .ok_or_else(|| format!("expected `random`, `oracle` or a number, got {s:?}")),
    }
}

#[derive(Debug, Args)]
pub struct EquitySimArgs {
    #[arg(long, value_name = "PATH")]
    pub prices: PathBuf,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    #[arg(long, default_value_t = 10_000, value_parser = clap::value_parser!(u64).range(100..))]
    pub replicates: u64,

    /// Final equity to measure: `random`, `oracle` or a number.
    #[arg(long, default_value = "random", value_parser = parse_target)]
    pub target: EquityTarget,

    #[arg(long, default_value = "0.95", value_parser = parse_open_prob)]
    pub confidence: Probability,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct ScopeArgs {
    /// Count attempts by every agent.
    #[arg(long)]
    pub all: bool,

    /// Count attempts by these agents only.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub agents: Vec<String>,
}

#[derive(Debug, Subcommand)]
pub enum LedgerCommand {
    /// Append an attempt.
    Register(RegisterArgs),
    /// Uncertainty of one result given the attempts in scope.
    Uncertainty(UncertaintyArgs),
    /// Reviewer's joint uncertainty of several results.
    Combine(CombineArgs),
}

#[derive(Debug, Args)]
pub struct RegisterArgs {
    #[arg(long, value_name = "PATH")]
    pub ledger: PathBuf,
    #[arg(long)]
    pub id: String,
    #[arg(long)]
    pub agent: String,
    /// Integer timestamp ordering the attempts.
    #[arg(long, allow_negative_numbers = true)]
    pub ts: i64,
    /// Predictions made.
    #[arg(long)]
    pub n: u64,
    /// Predictions that came true.
    #[arg(long)]
    pub k: u64,
    #[arg(long, value_parser = parse_prob)]
    pub p0: Probability,
    #[arg(long, default_value = "")]
    pub note: String,
}

#[derive(Debug, Args)]
pub struct UncertaintyArgs {
    #[arg(long, value_name = "PATH")]
    pub ledger: PathBuf,
    #[arg(long)]
    pub id: String,
    #[command(flatten)]
    pub scope: ScopeArgs,
}

#[derive(Debug, Args)]
pub struct CombineArgs {
    #[arg(long, value_name = "PATH")]
    pub ledger: PathBuf,
    #[arg(long, value_delimiter = ',', num_args = 1.., required = true)]
    pub ids: Vec<String>,
    /// Results at or above this value count as extra attempts instead of evidence.
    #[arg(long, default_value = "0.05", value_parser = parse_open_prob)]
    pub cutoff: Probability,
}

#[derive(Debug, Args)]
pub struct SequenceArgs {
    /// Trace file with `F: ...` and `T: ...` lines.
    #[arg(long, value_name = "PATH")]
    pub trace: PathBuf,
    /// Events file, one `start end value` per line.
    #[arg(long, value_name = "PATH")]
    pub events: PathBuf,
}

#[derive(Debug, Args)]
pub struct OccamArgs {
    /// Rule tables of the history, oldest first.
    #[arg(long, value_name = "PATH", num_args = 1.., required = true)]
    pub history: Vec<PathBuf>,
    /// Rule tables of a competing history, oldest first.
    #[arg(long, value_name = "PATH", num_args = 1..)]
    pub against: Vec<PathBuf>,
    /// Largest sequence space enumerated.
    #[arg(long, default_value_t = crate::occam::DEFAULT_BUDGET)]
    pub budget: u64,
}

#[derive(Debug, Args)]
pub struct BinomArgs {
    #[arg(long)]
    pub k: u64,
    #[arg(long)]
    pub n: u64,
    #[arg(long, value_parser = parse_prob)]
    pub p: Probability,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub attempts: u64,
}

/// Parse `args` (program name first), run and write the output. Returns the
/// process exit code.
pub fn run_with<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let rendered = e.render().to_string();
            let _ = if e.use_stderr() {
                stderr.write_all(rendered.as_bytes())
            } else {
                stdout.write_all(rendered.as_bytes())
            };
            return code;
        }
    };

    let rendered = match commands::dispatch(&cli.command) {
        Ok(r) => r,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            return EXIT_DATA;
        }
    };
    let body = if cli.json {
        let mut j = rendered.json;
        j.push('\n');
        j
    } else {
        rendered.text
    };
    match &cli.out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, body) {
                let _ = writeln!(stderr, "error: {}", Error::io(path, e));
                return EXIT_DATA;
            }
        }
        None => {
            if stdout.write_all(body.as_bytes()).is_err() {
                return EXIT_DATA;
            }
        }
    }
    EXIT_OK
}

pub fn run() -> i32 {
    run_with(std::env::args_os(), &mut std::io::stdout().lock(), &mut std::io::stderr().lock())
}
