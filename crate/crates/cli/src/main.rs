//! `lie-poincare`: singular-value gates, Diophantine certificates and
//! solvability reports from the command line.
//!
//! Exit status is 0 on evidence-pass or a completed computation, 2 on
//! evidence-fail and 1 on errors, usage errors included.

mod commands;
mod config;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Jsonl,
    Csv,
}

#[derive(Parser, Debug)]
#[command(name = "lie-poincare", version, about = "Directional Poincaré inequalities and global solvability on tori and SU(2)")]
pub struct Cli {
    /// JSON file with default values for any flag
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Write the report here instead of stdout
    #[arg(long, short, global = true, value_name = "FILE")]
    output: Option<PathBuf>,

    /// Output format; spectrum defaults to jsonl, everything else to json
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,

    /// Seed for random trials
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Rank cutoff relative to the largest singular value
    #[arg(long, global = true, default_value_t = lie_poincare::spectral::DEFAULT_RANK_TOL)]
    rank_tol: f64,

    /// Relative residual accepted by range-membership checks
    #[arg(long, global = true, default_value_t = lie_poincare::solvability::DEFAULT_RESIDUAL_TOL)]
    residual_tol: f64,

    #[command(subcommand)]
    command: Command,
}

/// Group and operator selection shared by several subcommands.
#[derive(Args, Debug, Clone)]
pub struct FieldArgs {
    /// su2, torus-N (or t1 for the circle)
    #[arg(long)]
    group: String,

    /// Field coefficients, comma separated; tokens phi, sqrt2, pi, e, L1..L5, p/q
    #[arg(long, allow_hyphen_values = true)]
    alpha: String,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Symbol block of a vector field at one dual index, with its spectral record
    Symbol {
        #[command(flatten)]
        field: FieldArgs,
        /// 2ℓ for su2
        #[arg(long)]
        two_ell: Option<u32>,
        /// Lattice point for tori, comma separated
        #[arg(long, allow_hyphen_values = true)]
        xi: Option<String>,
    },
    /// Spectral records over a dual range, one per line
    Spectrum {
        #[command(flatten)]
        field: FieldArgs,
        #[arg(long)]
        two_ell_max: Option<u32>,
        #[arg(long)]
        radius: Option<f64>,
    },
    /// Lattice minimum of |<xi,alpha>|·|xi|^(delta-1), margin curve and continued fraction
    Dioph {
        #[arg(long, allow_hyphen_values = true)]
        alpha: String,
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        radius: f64,
        #[arg(long, default_value_t = 40)]
        cf_depth: usize,
        /// Emit the (radius, empirical_C) curve as CSV
        #[arg(long)]
        csv: bool,
    },
    /// Decay gate of a vector field with optional random quotient trials
    PoincareCheck {
        #[command(flatten)]
        field: FieldArgs,
        #[arg(long)]
        delta: f64,
        /// Torus scan radius
        #[arg(long)]
        radius: Option<f64>,
        /// Largest 2ℓ for su2
        #[arg(long)]
        two_ell_max: Option<u32>,
        #[arg(long, default_value_t = 0)]
        trials: usize,
        /// Largest |xi| used for torus trials
        #[arg(long, default_value_t = 16.0)]
        trial_radius: f64,
        /// Test the inequality on mean-zero data instead of (ker Y)^perp
        #[arg(long)]
        mean_zero_only: bool,
        /// Also write (weight, margin) pairs as CSV here
        #[arg(long, value_name = "FILE")]
        csv: Option<PathBuf>,
    },
    /// Solvability gate; a failing gate comes with a witness right-hand side
    Solvable {
        #[arg(long)]
        group: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        alpha: Option<String>,
        /// Symbol blocks as a FourierData JSON document
        #[arg(long, value_name = "FILE", conflicts_with_all = ["group", "alpha"])]
        symbol_file: Option<PathBuf>,
        #[arg(long)]
        radius: Option<f64>,
        #[arg(long)]
        two_ell_max: Option<u32>,
        /// Write the witness data here as FourierData JSON
        #[arg(long, value_name = "FILE")]
        witness_out: Option<PathBuf>,
    },
    /// Solve P u = f index by index
    Solve {
        #[arg(long, value_name = "FILE")]
        symbol_file: PathBuf,
        #[arg(long, value_name = "FILE")]
        rhs_file: PathBuf,
        /// Constant of a solvability fit, for the growth bound column
        #[arg(long, requires = "fit_k")]
        fit_c: Option<f64>,
        #[arg(long, requires = "fit_c")]
        fit_k: Option<u32>,
    },
    /// Gate of a tube field d/dt + a(t)X on T¹×G
    Tube {
        #[arg(long, value_name = "FILE")]
        profile: PathBuf,
        /// t1 or su2
        #[arg(long)]
        group: String,
        #[arg(long, allow_hyphen_values = true)]
        alpha: Option<String>,
        /// Omit on t1 to use the recommended delta
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long)]
        kmax: u64,
        #[arg(long)]
        radius: Option<f64>,
        #[arg(long)]
        two_ell_max: Option<u32>,
        #[arg(long, value_name = "FILE")]
        csv: Option<PathBuf>,
    },
    /// Apply Ψ to tube data and report the conjugation residual
    TubeReduce {
        #[arg(long, value_name = "FILE")]
        profile: PathBuf,
        #[arg(long, value_name = "FILE")]
        data: PathBuf,
        /// t1 or su2
        #[arg(long, default_value = "t1")]
        group: String,
        #[arg(long, allow_hyphen_values = true)]
        alpha: Option<String>,
        /// Grid size, a power of two
        #[arg(long)]
        grid: Option<usize>,
        /// Apply Ψ⁻¹ instead
        #[arg(long)]
        inverse: bool,
    },
}

pub enum Status {
    Complete,
    Fail,
}

fn open_output(path: &Option<PathBuf>) -> io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn main() -> ExitCode {
    lie_poincare::init_thread_pool_from_env();
    let args = match config::expand(std::env::args_os().collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(1);
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let run = || -> anyhow::Result<Status> {
        commands::validate_globals(&cli)?;
        let mut out = open_output(&cli.output)?;
        let status = commands::run(&cli, &mut out)?;
        out.flush()?;
        Ok(status)
    };
    match run() {
        Ok(Status::Complete) => ExitCode::SUCCESS,
        Ok(Status::Fail) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
