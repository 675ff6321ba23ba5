//! phasecut: max-cut solving by oscillator phase dynamics.
//!
//! Subcommands: generate | solve | oracle | ratio | bench.
//! Exit codes: 0 success, 2 usage error, 3 runtime failure.

mod commands;
mod config;

use clap::{Args, Parser, Subcommand};
use std::fmt;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "phasecut", version, about = "Max-cut via coupled-oscillator gradient flows")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a graph instance and write it as an edge-list file.
    Generate {
        #[command(subcommand)]
        kind: GenerateKind,
    },
    /// Run seeded gradient-flow restarts, round, and certify.
    Solve(SolveArgs),
    /// Exact max-cut by enumeration (up to 30 vertices).
    Oracle {
        /// Edge-list file to solve exactly.
        #[arg(long)]
        graph: String,
        /// Write the JSON report here instead of stdout.
        #[arg(long)]
        out: Option<String>,
    },
    /// Approximation ratio of a coupling, optionally on a subinterval.
    Ratio {
        /// Coupling name: cos, g2, or g2-fourier:K.
        #[arg(long)]
        coupling: String,
        /// Lower end of the angle interval in radians (default 0).
        #[arg(long)]
        lo: Option<f64>,
        /// Upper end of the angle interval in radians (default pi).
        #[arg(long)]
        hi: Option<f64>,
    },
    /// Sweep instances x couplings x penalties and emit a CSV table.
    Bench(BenchArgs),
}

#[derive(Subcommand)]
enum GenerateKind {
    /// Erdos-Renyi G(n, p).
    Er {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        p: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<String>,
    },
    /// Hypercube Q_d.
    Hypercube {
        #[arg(long)]
        d: usize,
        #[arg(long)]
        out: Option<String>,
    },
    /// Random 3-regular graph (pairing model).
    Cubic {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<String>,
    },
}

#[derive(Args)]
struct SolveArgs {
    /// Edge-list file with the instance.
    #[arg(long)]
    graph: String,
    /// Coupling name: cos, g2, or g2-fourier:K.
    #[arg(long, default_value = "cos")]
    coupling: String,
    /// Penalty strength (locking term K_s = K * mu / 2 of the cosine
    /// machine).
    #[arg(long, default_value_t = 1.0)]
    mu: f64,
    /// Coupling strength K (rescales flow time).
    #[arg(long, default_value_t = 1.0)]
    k: f64,
    #[arg(long, default_value_t = 1e-3)]
    rtol: f64,
    #[arg(long, default_value_t = 1e-6)]
    atol: f64,
    #[arg(long, default_value_t = 1e-6)]
    grad_tol: f64,
    #[arg(long, default_value_t = 1e4)]
    t_max: f64,
    #[arg(long, default_value_t = 10)]
    restarts: usize,
    /// Base seed; restart r uses seed + r.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Random rounding lines per restart.
    #[arg(long, default_value_t = 100)]
    lines: usize,
    /// Binarization tolerance in radians.
    #[arg(long, default_value_t = 0.15)]
    eps: f64,
    /// Record every k-th accepted step (0: endpoints only).
    #[arg(long, default_value_t = 0)]
    record_every: usize,
    /// Write the result JSON here instead of stdout.
    #[arg(long)]
    out: Option<String>,
    /// Write the best restart's trajectory CSV here.
    #[arg(long)]
    trajectory: Option<String>,
}

#[derive(Args)]
struct BenchArgs {
    /// Edge-list instance files (repeatable).
    #[arg(long = "graph", required = true)]
    graphs: Vec<String>,
    /// Comma-separated coupling names.
    #[arg(long, value_delimiter = ',', default_values_t = [String::from("cos"), String::from("g2-fourier:10")])]
    couplings: Vec<String>,
    /// Comma-separated penalty strengths (applied to the cosine machine).
    #[arg(long, value_delimiter = ',', default_values_t = [0.0, 1.0])]
    mus: Vec<f64>,
    #[arg(long, default_value_t = 10)]
    restarts: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 100)]
    lines: usize,
    #[arg(long, default_value_t = 0.15)]
    eps: f64,
    /// Write the CSV table here instead of stdout.
    #[arg(long)]
    out: Option<String>,
}

/// Errors carrying the process exit code: 2 for bad input, 3 for failures
/// at run time.
enum CliError {
    Usage(anyhow::Error),
    Runtime(anyhow::Error),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(e) | CliError::Runtime(e) => write!(f, "{e:#}"),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate { kind } => commands::generate(kind),
        Command::Solve(args) => commands::solve(args),
        Command::Oracle { graph, out } => commands::oracle(&graph, out.as_deref()),
        Command::Ratio { coupling, lo, hi } => commands::ratio(&coupling, lo, hi),
        Command::Bench(args) => commands::bench(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
