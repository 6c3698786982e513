use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "klnmf",
    version,
    about = "KL-divergence NMF with MU and DNA solvers"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Factorize a matrix file.
    Factorize(FactorizeArgs),
    /// Compare MU and DNA from one shared initialization.
    Bench(BenchArgs),
    /// Write a synthetic low-rank matrix and its ground-truth factors.
    Gen(GenArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Algo {
    Mu,
    Dna,
}

impl Algo {
    pub fn name(self) -> &'static str {
        match self {
            Algo::Mu => "mu",
            Algo::Dna => "dna",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NoiseArg {
    None,
    Poisson,
}

/// Options shared by `factorize` and `bench`.
#[derive(Debug, Args)]
pub struct SolverArgs {
    /// MatrixMarket (.mtx) or CSV data file.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub rank: usize,
    #[arg(long, default_value_t = 500)]
    pub max_iters: usize,
    /// Stop once the relative objective decrease falls below this; 0 disables.
    #[arg(long, default_value_t = 0.0)]
    pub rel_tol: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Penalty on the sum of W.
    #[arg(long, default_value_t = 0.0)]
    pub rho: f64,
    /// Penalty on the sum of H.
    #[arg(long, default_value_t = 0.0)]
    pub lambda: f64,
    /// Smallest multiplicative gain of a decreasing Newton step.
    #[arg(long, default_value_t = 0.01)]
    pub epsilon: f64,
    /// Largest relative increase of an increasing Newton step.
    #[arg(long, default_value_t = 4.0)]
    pub alpha: f64,
    /// Worker threads for the column-parallel kernels. Results do not depend on it.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Write 0 in the wall_ms column so logs are reproducible byte for byte.
    #[arg(long)]
    pub no_timing: bool,
    /// Convergence log (CSV).
    #[arg(long)]
    pub log: Option<PathBuf>,
    /// Convergence plot (SVG).
    #[arg(long)]
    pub plot: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FactorizeArgs {
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long, value_enum, default_value_t = Algo::Dna)]
    pub algo: Algo,
    /// Skip cost evaluation (MU only). Disables early stopping and objective logging.
    #[arg(long)]
    pub no_cost: bool,
    #[arg(long)]
    pub out_w: Option<PathBuf>,
    #[arg(long)]
    pub out_h: Option<PathBuf>,
    /// Start from this W instead of the random initialization. Needs --init-h.
    #[arg(long, requires = "init_h")]
    pub init_w: Option<PathBuf>,
    #[arg(long, requires = "init_w")]
    pub init_h: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Also time MU with cost evaluation switched off.
    #[arg(long)]
    pub no_cost: bool,
    #[arg(long, requires = "init_h")]
    pub init_w: Option<PathBuf>,
    #[arg(long, requires = "init_w")]
    pub init_h: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub t: usize,
    #[arg(long)]
    pub r: usize,
    /// Fraction of entries kept. Below 1 the output is sparse.
    #[arg(long, default_value_t = 1.0)]
    pub density: f64,
    #[arg(long, value_enum, default_value_t = NoiseArg::None)]
    pub noise: NoiseArg,
    /// Upper bound of the uniform H* entries.
    #[arg(long, default_value_t = 10.0)]
    pub scale: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Data file. Sparse data is written as a MatrixMarket coordinate file unless the extension is .csv.
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long)]
    pub out_w: Option<PathBuf>,
    #[arg(long)]
    pub out_h: Option<PathBuf>,
}
