//! `mudae` command-line front end.
//!
//! Exit codes: 0 success, 1 error, 2 completed but not certified.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "mudae", version, about = "Small-signal stability certificates for DAE power-system models")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args)]
pub struct Global {
    /// Built-in model (only `twobus`); used when --file is absent.
    #[arg(long, global = true)]
    pub builtin: Option<String>,
    /// Model JSON file.
    #[arg(long, global = true)]
    pub file: Option<PathBuf>,
    /// Output directory for result files and the run manifest.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads. Falls back to MUDAE_THREADS, then the config file.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// TOML config file; flags take precedence over its entries.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

#[derive(Subcommand)]
pub enum Command {
    /// Print a model summary; optionally export it as JSON.
    Model {
        #[arg(long)]
        export: Option<PathBuf>,
    },
    /// Solve f = 0, g = 0 by Newton's method.
    Equilibrium {
        /// Initial guess, comma separated (defaults to the model base point).
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        guess: Option<Vec<f64>>,
    },
    /// Finite pencil spectrum at the equilibrium or at --at.
    Eigs {
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        at: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        guess: Option<Vec<f64>>,
    },
    /// Root locus along a dynamic variable with consistent algebraic states.
    Rootlocus(SweepArgs),
    /// Eigenvalue sensitivity along a sweep.
    Sensitivity {
        #[command(flatten)]
        sweep: SweepArgs,
        /// Index (in descending real-part order) of the eigenvalue tracked from the first step.
        #[arg(long)]
        eig: Option<usize>,
        /// Lifted coordinates to report (default: all).
        #[arg(long, value_delimiter = ',')]
        coords: Option<Vec<usize>>,
    },
    /// Point and box certificates.
    Certify {
        #[command(subcommand)]
        what: CertifyCommand,
    },
    /// Classify a 2-D grid of operating points.
    Scan {
        /// Two axes `NAME:LO:HI:STEPS`; NAME is a variable or `|X+jY|` for a magnitude.
        #[arg(long, allow_hyphen_values = true)]
        grid: Option<String>,
        /// Comma separated: exact, bmi (fixed Z), bmi_at_point.
        #[arg(long)]
        modes: Option<String>,
        /// Values of the variables not on an axis (defaults to the base point).
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        at: Option<Vec<f64>>,
        #[arg(long)]
        z_file: Option<PathBuf>,
    },
    /// Monte-Carlo area measures around several centers and their regression on sigma.
    Area {
        #[arg(long)]
        samples: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
        /// JSON file `{"centers": [[...], ...]}`; otherwise centers are found by sigma targets.
        #[arg(long)]
        centers_file: Option<PathBuf>,
        /// Absolute box half-widths per variable.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        half_widths: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        sigma_targets: Option<Vec<f64>>,
        /// Variable walked to find centers.
        #[arg(long)]
        var: Option<String>,
        /// End of the walk.
        #[arg(long, allow_hyphen_values = true)]
        to: Option<f64>,
    },
}

#[derive(Args, Clone)]
pub struct SweepArgs {
    /// Swept variable (name or index).
    #[arg(long)]
    pub var: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub from: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub to: Option<f64>,
    #[arg(long)]
    pub steps: Option<usize>,
}

#[derive(Subcommand)]
pub enum CertifyCommand {
    /// Certificate at one operating point.
    Point {
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        at: Option<Vec<f64>>,
        /// Reuse `Z` from a certificate file instead of building one at the point.
        #[arg(long)]
        z_file: Option<PathBuf>,
    },
    /// Robust certificate for a box with fixed `Z`.
    Box {
        /// Box file, or a certificate file carrying a `box`.
        #[arg(long)]
        box_file: Option<PathBuf>,
        #[arg(long)]
        z_file: Option<PathBuf>,
    },
    /// Largest certified scaling of a weighted box around a center.
    Grow {
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        at: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',')]
        weights: Option<Vec<f64>>,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        z_file: Option<PathBuf>,
    },
}

/// How a completed command ended.
pub enum Status {
    Done,
    NotCertified,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(Status::Done) => ExitCode::SUCCESS,
        Ok(Status::NotCertified) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
