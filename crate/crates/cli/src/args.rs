use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "iterint",
    version,
    about = "Fourier expansions of iterated stochastic integrals of multiplicity 2"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Write the artifact here (atomically) instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Output format; each command has its own default.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,

    /// Worker threads for parallel sections (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Omit the generation timestamp from metadata.
    #[arg(long, global = true)]
    pub no_timestamp: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args, Clone)]
pub struct Problem {
    /// Orthonormal basis: legendre or trigonometric.
    #[arg(long, default_value = "legendre")]
    pub basis: String,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub t0: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub t1: f64,
    /// Weight of the inner variable: const:<c> or poly:<c0>,<c1>,...
    #[arg(long, default_value = "const:1", allow_hyphen_values = true)]
    pub w1: String,
    /// Weight of the outer variable.
    #[arg(long, default_value = "const:1", allow_hyphen_values = true)]
    pub w2: String,
    /// Absolute quadrature tolerance for coefficients.
    #[arg(long, default_value_t = iterint::coefficients::DEFAULT_TOL)]
    pub tol: f64,
}

#[derive(Debug, Args, Clone, Copy)]
pub struct Truncation {
    #[arg(long, default_value_t = 0)]
    pub p1: usize,
    #[arg(long, default_value_t = 0)]
    pub p2: usize,
}

#[derive(Debug, Args, Clone, Copy)]
pub struct Pair {
    #[arg(long, default_value_t = 1)]
    pub i1: usize,
    #[arg(long, default_value_t = 1)]
    pub i2: usize,
    /// Dimension of the driving Wiener process (default: max(i1, i2, 1)).
    #[arg(long)]
    pub m: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Coefficient table C_{j2 j1} for j1 <= p1, j2 <= p2.
    Coeffs {
        #[command(flatten)]
        problem: Problem,
        #[command(flatten)]
        trunc: Truncation,
    },
    /// Partial diagonal sums against their limit, for p' = 0..=p.
    Trace {
        #[command(flatten)]
        problem: Problem,
        #[arg(long, default_value_t = 0)]
        p: usize,
    },
    /// Mean-square error functionals for every truncation up to (p1, p2).
    ErrorCurve {
        #[command(flatten)]
        problem: Problem,
        #[command(flatten)]
        trunc: Truncation,
        #[command(flatten)]
        pair: Pair,
        /// Only square truncations (p, p).
        #[arg(long)]
        square: bool,
    },
    /// Samples of the truncated expansion from fresh Gaussian draws.
    Sample {
        #[command(flatten)]
        problem: Problem,
        #[command(flatten)]
        trunc: Truncation,
        #[command(flatten)]
        pair: Pair,
        #[arg(long, alias = "count", default_value_t = 1000)]
        paths: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Pathwise Monte Carlo check of the truncation error.
    McValidate {
        #[command(flatten)]
        problem: Problem,
        #[command(flatten)]
        trunc: Truncation,
        #[command(flatten)]
        pair: Pair,
        #[arg(long, default_value_t = 100_000)]
        paths: usize,
        /// Grid steps per path (power of two).
        #[arg(long, default_value_t = 4096)]
        grid: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Square truncations p to evaluate over the same paths, e.g. 0,1,2,5.
        #[arg(long, value_delimiter = ',')]
        sweep: Option<Vec<usize>>,
    },
    /// Remainder kernel on the midpoints of a grid x grid lattice.
    RemainderGrid {
        #[command(flatten)]
        problem: Problem,
        #[command(flatten)]
        trunc: Truncation,
        #[arg(long, default_value_t = 64)]
        grid: usize,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Coeffs { .. } => "coeffs",
            Command::Trace { .. } => "trace",
            Command::ErrorCurve { .. } => "error-curve",
            Command::Sample { .. } => "sample",
            Command::McValidate { .. } => "mc-validate",
            Command::RemainderGrid { .. } => "remainder-grid",
        }
    }

    pub fn default_format(&self) -> Format {
        match self {
            Command::McValidate { sweep: None, .. } => Format::Json,
            _ => Format::Csv,
        }
    }
}
