use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "critrange", version, about = "Range-penalized Brownian motion: kernels, expansions, simulation")]
pub struct Cli {
    #[command(flatten)]
    pub opts: Opts,

    #[command(subcommand)]
    pub command: Command,
}

/// Flags shared by every command. Anything left unset may come from `--config`.
#[derive(Debug, Clone, Default, Args)]
pub struct Opts {
    /// Horizon in original time units
    #[arg(long, global = true)]
    pub t: Option<f64>,
    /// Drift / penalty strength
    #[arg(long, global = true)]
    pub h: Option<f64>,
    /// Expansion order (at most 8)
    #[arg(long, global = true)]
    pub n: Option<usize>,
    #[arg(long = "n-paths", global = true)]
    pub n_paths: Option<usize>,
    /// Time step in original units
    #[arg(long, global = true)]
    pub dt: Option<f64>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub mode: Option<String>,
    /// Series truncation tolerance
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Worker threads (default: CRITRANGE_THREADS, then machine parallelism)
    #[arg(long, global = true, env = "CRITRANGE_THREADS")]
    pub threads: Option<usize>,
    /// Output directory; tables go to stdout when absent
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Flat `key = value` file; command-line flags take precedence
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate a special function on a grid of arguments
    Eval(EvalArgs),
    /// Asymptotic expansion of the normalizer, optionally against quadrature
    Expansion(ExpansionArgs),
    /// Quadrature value of the normalizer only
    Quadrature,
    /// Run a weighted Monte Carlo ensemble
    Simulate,
    /// Compare a simulated ensemble with the limit laws
    Compare(CompareArgs),
    /// Closed-form limit laws on a grid
    Limits(LimitsArgs),
}

#[derive(Debug, Clone, Args)]
#[command(allow_negative_numbers = true)]
pub struct EvalArgs {
    /// One of G, eta, F, T, p_c, survival
    #[arg(long = "fn")]
    pub func: String,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub v: Vec<f64>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub x: Vec<f64>,
    /// Derivative order in x (G)
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub l: Vec<u32>,
    /// Index of eta, in -4..=0
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub k: Vec<i32>,
    /// Start point (p_c, survival)
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub a: Vec<f64>,
    /// End point (p_c)
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub y: Vec<f64>,
    /// Interval width (p_c, survival)
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub c: Vec<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct ExpansionArgs {
    /// Fill the quadrature and abs_diff columns
    #[arg(long)]
    pub quadrature: bool,
    /// Print only the quadrature value
    #[arg(long = "quadrature-only")]
    pub quadrature_only: bool,
}

#[derive(Debug, Clone, Args)]
pub struct CompareArgs {
    /// Probe time for the endpoint law
    #[arg(long)]
    pub u: Option<f64>,
    #[arg(long)]
    pub bins: Option<usize>,
    #[arg(long = "ks-min")]
    pub ks_min: Option<f64>,
    #[arg(long = "ks-max")]
    pub ks_max: Option<f64>,
    #[arg(long = "tv-endpoint")]
    pub tv_endpoint: Option<f64>,
}

#[derive(Debug, Clone, Args)]
#[command(allow_negative_numbers = true)]
pub struct LimitsArgs {
    #[arg(long)]
    pub from: Option<f64>,
    #[arg(long)]
    pub to: Option<f64>,
    #[arg(long)]
    pub points: Option<usize>,
    /// Time at which the endpoint density is evaluated
    #[arg(long)]
    pub u: Option<f64>,
}
