use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

/// Verify, prolong, and simulate Lie algebroids given in coordinates.
#[derive(Debug, Parser)]
#[command(name = "algebroid-kit", version)]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Global {
    /// Residual tolerance for sampled identities.
    #[arg(long, global = true, default_value_t = 1e-9)]
    pub tol: f64,

    /// Number of low-discrepancy sample points (at least 8).
    #[arg(long, global = true, default_value_t = 64)]
    pub samples: usize,

    /// Seed for the random sections and forms used by the checks.
    #[arg(long, global = true, default_value_t = 0x5eed)]
    pub seed: u64,

    /// Write the main output here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the Leibniz, Jacobi, anchor and d^2 checks on one algebroid.
    Verify {
        /// Algebroid JSON.
        input: PathBuf,
    },
    /// Prolong an algebroid along a trivial fibration and print the result.
    Prolong {
        /// Algebroid JSON.
        input: PathBuf,
        /// JSON file of the form {"fiber_dim": q}.
        fiber: Option<PathBuf>,
        /// Fiber dimension, instead of a fiber file.
        #[arg(long, conflicts_with = "fiber")]
        fiber_dim: Option<usize>,
    },
    /// Verify a direct system of algebroids and, optionally, a family on it.
    LimitVerify {
        /// Direct system JSON.
        input: PathBuf,
        /// Family JSON: {"kind": "sections|fields|functions", "levels": [...]}.
        #[arg(long)]
        family: Option<PathBuf>,
        /// Also prolong every level with these fiber dimensions and verify
        /// the prolonged system, e.g. `2,4,6`.
        #[arg(long, value_delimiter = ',')]
        fiber_dims: Option<Vec<usize>>,
    },
    /// Integrate Hamilton's equations with fixed-step RK4 and write a CSV.
    Simulate {
        /// `oscillator:<n>` or a Hamiltonian system JSON.
        #[arg(long)]
        system: String,
        /// Initial state `x1,..,xn,mu1,..,mum`.
        #[arg(long, allow_hyphen_values = true)]
        z0: String,
        /// Step size; the final step count is ceil(T/dt).
        #[arg(long, default_value_t = 1e-3)]
        dt: f64,
        /// Final time.
        #[arg(long = "T", default_value_t = 1.0)]
        t_end: f64,
    },
    /// Print dimensions, anchor and structure functions.
    Describe {
        /// Algebroid or direct system JSON.
        input: PathBuf,
    },
}
