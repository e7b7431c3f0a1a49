use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use stokeswb::error::Error;

mod commands;
mod input;

#[derive(Parser, Debug)]
#[command(name = "stokes-wb", version, about = "Exponential periods, Borel sums and Stokes factors of rational 1-forms")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

/// Settings shared by every command.
#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Working precision in bits (at least 64); defaults to STOKES_WB_PRECISION or 256.
    #[arg(long, global = true)]
    pub precision: Option<u32>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    /// Seed for randomized checks.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Zeros, poles, period lattice, critical values and non-generic directions of P/Q dx.
    Analyze(commands::AnalyzeArgs),
    /// Borel sum of a series on a z-grid.
    Sum(commands::SumArgs),
    /// Formal expansions at a zero of the form.
    FormalXi(commands::FormalXiArgs),
    /// Trace one steepest-descent path.
    Thimble(commands::ThimbleArgs),
    /// Sample both sides of a Stokes direction and fit the factor.
    Stokes(commands::StokesArgs),
    /// End-to-end run of the Gamma-function example.
    GammaDemo(commands::GammaDemoArgs),
    /// Run the module invariants and print a TAP report.
    Check(commands::CheckArgs),
}

/// A command failure with its exit status.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Core(Error),
    Io(String),
    Check(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) | Failure::Io(_) => 1,
            Failure::Core(Error::NotOneForm(_)) => 2,
            Failure::Core(Error::SupportPropertyFailure(_) | Error::DegenerateLattice(_)) => 3,
            Failure::Core(Error::DivergentLaplace(_) | Error::SingularRay(_)) => 4,
            Failure::Core(_) => 1,
            Failure::Check(_) => 5,
        }
    }

    fn message(&self) -> String {
        match self {
            Failure::Usage(m) => format!("usage error: {m}"),
            Failure::Core(e) => e.to_string(),
            Failure::Io(m) => format!("i/o error: {m}"),
            Failure::Check(m) => m.clone(),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            // clap reports usage errors with status 2, which is reserved here.
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let ctx = match commands::Context::new(&cli.common) {
        Ok(c) => c,
        Err(f) => {
            eprintln!("stokes-wb: {}", f.message());
            return ExitCode::from(f.code());
        }
    };
    let r = match &cli.command {
        Command::Analyze(a) => commands::cmd_analyze(&ctx, a),
        Command::Sum(a) => commands::cmd_sum(&ctx, a),
        Command::FormalXi(a) => commands::cmd_formal_xi(&ctx, a),
        Command::Thimble(a) => commands::cmd_thimble(&ctx, a),
        Command::Stokes(a) => commands::cmd_stokes(&ctx, a),
        Command::GammaDemo(a) => commands::cmd_gamma_demo(&ctx, a),
        Command::Check(a) => commands::cmd_check(&ctx, a),
    };
    match r {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("stokes-wb: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
