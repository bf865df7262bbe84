//! `qlevy <command> [--flag value]…`
//!
//! Exit status: 0 when every verdict passes, 1 when a verdict fails, 2 on
//! malformed input. Artifacts go to `--out` or standard output; diagnostics go
//! to standard error.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use commands::{Failure, Outcome};

#[derive(Debug, Parser)]
#[command(name = "qlevy", version, about = "Quantum stochastic convolution cocycles on finite-dimensional *-bialgebras")]
pub struct Cli {
    /// Accept bialgebras that fail an axiom.
    #[arg(long, global = true)]
    pub allow_invalid: bool,
    /// Tolerance for the verdicts; overrides `QLEVY_TOL`.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Write the artifact here instead of standard output.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Route {
    Semigroup,
    Guichardet,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ExpRoute {
    Series,
    Semigroup,
    Both,
}

/// Inputs shared by commands that evaluate matrix elements.
#[derive(Debug, clap::Args)]
pub struct Evaluation {
    /// Generator: a functional, Schürmann triple, structure map or CPC tuple.
    pub spec: PathBuf,
    /// Bialgebra for documents that do not embed one.
    #[arg(long)]
    pub algebra: Option<PathBuf>,
    /// Comma-separated times.
    #[arg(long, value_delimiter = ',', required = true)]
    pub t: Vec<f64>,
    /// `const0` or a step-function document.
    #[arg(long, default_value = "const0")]
    pub f: String,
    /// `const0` or a step-function document.
    #[arg(long, default_value = "const0")]
    pub g: String,
    /// Basis label; all basis elements when absent.
    #[arg(long)]
    pub a: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check the bialgebra axioms.
    Validate { input: PathBuf },
    /// Solve for the Haar state and test its positivity.
    Haar { input: PathBuf },
    /// Tabulate the convolution exponential of a functional.
    Expstar {
        input: PathBuf,
        #[arg(long)]
        algebra: Option<PathBuf>,
        #[arg(long, value_delimiter = ',', required = true)]
        t: Vec<f64>,
        #[arg(long)]
        a: Option<String>,
        #[arg(long, value_enum, default_value = "both")]
        method: ExpRoute,
    },
    /// GNS reconstruction of a Schürmann triple from a generator.
    Reconstruct {
        input: PathBuf,
        #[arg(long)]
        algebra: Option<PathBuf>,
    },
    /// Tabulate cocycle matrix elements.
    Evaluate {
        #[command(flatten)]
        eval: Evaluation,
        #[arg(long, value_enum, default_value = "semigroup")]
        method: Route,
        /// Kernel level for the Guichardet route; chosen from the tail bound when absent.
        #[arg(long)]
        n_max: Option<usize>,
    },
    /// Check that the kernel map is multiplicative up to a level.
    CheckMultiplicative {
        spec: PathBuf,
        #[arg(long)]
        algebra: Option<PathBuf>,
        #[arg(long, default_value_t = 3)]
        n_max: usize,
    },
    /// Apply a Euclidean element to a Schürmann triple.
    Perturb {
        spec: PathBuf,
        #[arg(long)]
        algebra: Option<PathBuf>,
        #[arg(long)]
        euclidean: PathBuf,
    },
    /// Homomorphic dilation of a CPC tuple.
    Dilate {
        input: PathBuf,
        #[arg(long)]
        algebra: Option<PathBuf>,
    },
    /// Stinespring-type decomposition of a CPC tuple.
    Stinespring {
        input: PathBuf,
        #[arg(long)]
        algebra: Option<PathBuf>,
        /// JSON matrix (array of rows of `[re, im]`) for the contraction `B`; zero when absent.
        #[arg(long)]
        b: Option<PathBuf>,
    },
    /// Compare the opposite cocycle, the opposite bialgebra and time reversal.
    OppositeCheck {
        #[command(flatten)]
        eval: Evaluation,
    },
}

fn emit(cli: &Cli, outcome: &Outcome) -> Result<(), Failure> {
    match &cli.out {
        Some(path) => std::fs::write(path, &outcome.artifact).map_err(|e| Failure::Input(format!("{}: {e}", path.display()))),
        None => {
            print!("{}", outcome.artifact);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = commands::run(&cli).and_then(|outcome| {
        emit(&cli, &outcome)?;
        Ok(outcome)
    });
    match result {
        Ok(outcome) => {
            for line in &outcome.diagnostics {
                eprintln!("{line}");
            }
            if outcome.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(Failure::Verdict(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
