//! Command-line front end for the scale-mixture-of-uniforms estimator.

mod commands;
mod sweep;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "smu",
    about = "Nonparametric maximum likelihood for multivariate scale mixtures of uniforms",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a dataset from a truth model and write it as CSV.
    Simulate {
        /// Truth model: `exp` (exp-product) or `file:PATH` (mixing CSV).
        #[arg(long, default_value = "exp")]
        truth: String,
        /// Dimension (required for the exp truth).
        #[arg(long)]
        dim: Option<usize>,
        /// Sample size.
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output directory (dataset.csv and dataset.meta are written here).
        #[arg(long)]
        out: PathBuf,
    },
    /// Maximize the likelihood for a dataset and write the fitted measure.
    Fit {
        /// Dataset CSV (header x1..xd).
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[arg(long, default_value_t = 100_000)]
        max_iter: u64,
        /// Output directory (mixing.csv, fitted.csv, summary.txt).
        #[arg(long)]
        out: PathBuf,
    },
    /// Check the Fenchel optimality certificate of a mixing measure.
    Certify {
        #[arg(long)]
        data: PathBuf,
        /// Mixing-measure CSV (header w,y1..yd).
        #[arg(long)]
        mixing: PathBuf,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
    },
    /// Evaluate a mixing measure's density and CDF at probe points.
    Eval {
        #[arg(long)]
        mixing: PathBuf,
        /// Probe points, dataset CSV format.
        #[arg(long)]
        probes: PathBuf,
        /// Output CSV (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Distance between two densities (exact cells, or Monte Carlo).
    Dist {
        #[arg(long)]
        mixing: PathBuf,
        /// Second mixing measure; mutually exclusive with --truth.
        #[arg(long)]
        other: Option<PathBuf>,
        /// Compare against a truth model instead: `exp`.
        #[arg(long)]
        truth: Option<String>,
        /// l1 | hellinger | both
        #[arg(long, default_value = "both")]
        metric: String,
        /// Force the Monte Carlo estimator.
        #[arg(long, default_value_t = false)]
        mc: bool,
        #[arg(long, default_value_t = 100_000)]
        n_mc: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Verify the minimax perturbation construction numerically.
    Minimax {
        #[arg(long, default_value_t = 1)]
        dim: usize,
        /// Center x0, comma-separated (defaults to all ones).
        #[arg(long, value_delimiter = ',')]
        x0: Option<Vec<f64>>,
        /// Bandwidths h, comma-separated (defaults to all 0.5).
        #[arg(long, value_delimiter = ',')]
        h: Option<Vec<f64>>,
        #[arg(long, default_value_t = 0.5)]
        theta: f64,
        /// Base index for the integral checks.
        #[arg(long, default_value_t = 64)]
        n: u64,
        /// Indices for the scaled Hellinger sequence (doubling from --n
        /// when omitted).
        #[arg(long, value_delimiter = ',')]
        n_list: Option<Vec<u64>>,
        #[arg(long, default_value_t = 1e-6)]
        quad_tol: f64,
        /// Membership lattice resolution per axis.
        #[arg(long, default_value_t = 32)]
        resolution: usize,
    },
    /// Simulate/fit/measure across sample sizes and report the rate slope.
    Sweep {
        #[arg(long, default_value = "exp")]
        truth: String,
        #[arg(long)]
        dim: Option<usize>,
        /// Sample sizes, comma-separated and strictly increasing.
        #[arg(long, value_delimiter = ',')]
        n: Vec<usize>,
        #[arg(long, default_value_t = 1)]
        reps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[arg(long, default_value_t = 100_000)]
        max_iter: u64,
        /// Probe points for the pointwise error column.
        #[arg(long)]
        probes: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Simulate { truth, dim, n, seed, out } => {
            commands::simulate(&truth, dim, n, seed, &out)
        }
        Command::Fit { data, tol, max_iter, out } => commands::fit(&data, tol, max_iter, &out),
        Command::Certify { data, mixing, tol } => commands::certify(&data, &mixing, tol),
        Command::Eval { mixing, probes, out } => commands::eval(&mixing, &probes, out.as_deref()),
        Command::Dist { mixing, other, truth, metric, mc, n_mc, seed } => {
            commands::dist(&mixing, other.as_deref(), truth.as_deref(), &metric, mc, n_mc, seed)
        }
        Command::Minimax { dim, x0, h, theta, n, n_list, quad_tol, resolution } => {
            commands::minimax(dim, x0, h, theta, n, n_list, quad_tol, resolution)
        }
        Command::Sweep { truth, dim, n, reps, seed, tol, max_iter, probes, out } => {
            sweep::run(&truth, dim, &n, reps, seed, tol, max_iter, probes.as_deref(), &out)
        }
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}
