//! `roe`: generate spaces and isomorphisms, extract bijective coarse
//! equivalences, and tabulate GOAL residuals.
//!
//! Exit codes: 0 success, 1 input or format error, 2 extraction failure.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "roe", version, about = "Finite-scale uniform Roe algebra rigidity toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a space file and print its growth at r = 1..5.
    ///
    /// Kinds and parameters: path N | cycle N | grid W H | tree ARITY DEPTH |
    /// random-geometric N THRESHOLD SEED | expander-sample N DEGREE SEED.
    Gen(GenArgs),
    /// Build an isomorphism from a bijection, optionally twisted by phases
    /// and perturbed by a local unitary.
    Iso(IsoArgs),
    /// Recover a bijective coarse equivalence and write its certificate.
    Extract(ExtractArgs),
    /// Tabulate GOAL residuals over an (eps, m) grid.
    Goal(GoalArgs),
    /// Run the fixed-seed invariant suite.
    Selftest(SelftestArgs),
}

#[derive(Args, Debug)]
struct GenArgs {
    kind: String,
    params: Vec<String>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct IsoArgs {
    #[arg(long)]
    space: PathBuf,
    /// `identity`, `reversal`, or a JSON file mapping point ids to point ids.
    #[arg(long, conflicts_with = "random_bce")]
    bijection: Option<String>,
    /// Random bijection moving every point at most this far.
    #[arg(long, value_name = "D")]
    random_bce: Option<f64>,
    #[arg(long, value_enum, default_value_t = Phases::None)]
    phases: Phases,
    /// Perturb by a block-local unitary of this propagation.
    #[arg(long, value_name = "R")]
    perturb: Option<f64>,
    /// The bijection uses this seed, phases `seed + 1`, the perturbation
    /// `seed + 2`.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Sidecar path; the matrix goes next to it with extension `.bin`.
    #[arg(long)]
    out: PathBuf,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Phases {
    Random,
    None,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum StrategyArg {
    Support,
    Flattened,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Format {
    Json,
    Csv,
}

#[derive(Args, Debug)]
struct GridArgs {
    /// Comma-separated eps values.
    #[arg(long, value_delimiter = ',')]
    eps: Option<Vec<f64>>,
    /// Comma-separated ball radii m.
    #[arg(long, value_delimiter = ',')]
    m: Option<Vec<f64>>,
    /// Sampler seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug)]
struct ExtractArgs {
    #[arg(long)]
    iso: PathBuf,
    #[command(flatten)]
    grid: GridArgs,
    /// Comma-separated flattening radii (flattened strategy).
    #[arg(long, value_delimiter = ',')]
    r: Option<Vec<f64>>,
    #[arg(long, default_value_t = 0.5)]
    delta: f64,
    #[arg(long, value_enum, default_value_t = StrategyArg::Support)]
    strategy: StrategyArg,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Certificate path; standard output if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct GoalArgs {
    #[arg(long)]
    iso: PathBuf,
    #[command(flatten)]
    grid: GridArgs,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum FaultArg {
    TieBreak,
    Unitarity,
}

#[derive(Args, Debug)]
struct SelftestArgs {
    #[arg(long, value_enum, hide = true)]
    fault: Option<FaultArg>,
}

fn configure_threads() -> anyhow::Result<()> {
    let Ok(v) = std::env::var("ROE_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .map_err(|_| anyhow::anyhow!("ROE_THREADS must be a positive integer, got {v:?}"))?;
    if n == 0 {
        anyhow::bail!("ROE_THREADS must be a positive integer, got 0");
    }
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(1);
    }
    let result = match cli.command {
        Command::Gen(a) => commands::gen(&a),
        Command::Iso(a) => commands::iso(&a),
        Command::Extract(a) => commands::extract(&a),
        Command::Goal(a) => commands::goal(&a),
        Command::Selftest(a) => commands::selftest(&a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
