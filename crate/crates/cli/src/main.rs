//! `evosym`: classify, reverse and decompose quantum operations from files.
//!
//! Exit codes: 0 ok, 2 parse or usage error, 3 invariant violated,
//! 4 transform precondition failed, 5 not a symmetry.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use evosym::symmetry::NogoTarget;
use evosym_cli::commands::{self, NogoArgs, Outcome, ReverseInputs, SimulateArgs, Transform, EQUALITY_TOL_VAR};

#[derive(Parser)]
#[command(name = "evosym", version, about = "Time-reversal and symmetry tools for quantum operations")]
#[command(after_help = format!("Environment: {EQUALITY_TOL_VAR} overrides the equality tolerance (default 1e-8)."))]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print every flag and defect of a channel file.
    Classify {
        input: String,
        #[arg(long)]
        json: bool,
    },
    /// Apply a reversal transform and write the result as a Choi file.
    Reverse {
        input: String,
        #[arg(long, value_enum)]
        transform: TransformArg,
        #[arg(long)]
        omega_a: Option<String>,
        #[arg(long)]
        omega_b: Option<String>,
        #[arg(long)]
        rho0: Option<String>,
        /// Channel completing the input, for `crooks-operation`.
        #[arg(long)]
        complement: Option<String>,
        #[arg(long)]
        out: Option<String>,
        #[arg(long)]
        json: bool,
    },
    /// Decompose a supermap into a pair of state symmetries.
    Decompose {
        input: String,
        #[arg(long)]
        json: bool,
    },
    /// Search for a pair of state symmetries realizing a reversal.
    Nogo {
        #[arg(long, default_value_t = 2)]
        dim: usize,
        #[arg(long, value_enum, default_value_t = TargetArg::Dagger)]
        target: TargetArg,
        #[arg(long, default_value_t = 200)]
        samples: usize,
        #[arg(long, default_value_t = 20)]
        restarts: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Report whether the residual stays at or above this value.
        #[arg(long)]
        floor: Option<f64>,
        #[arg(long)]
        json: bool,
    },
    /// Sample an instrument on a state.
    Simulate {
        instrument: String,
        state: String,
        #[arg(long, default_value_t = 10_000)]
        shots: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Fail unless every branch is time-symmetric.
        #[arg(long)]
        require_ts: bool,
        #[arg(long)]
        json: bool,
    },
    /// Write the bundled fixture corpus.
    Fixtures {
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum TransformArg {
    DoubleTranspose,
    Theta,
    ThetaPrime,
    WeakAdjoint,
    Petz,
    PetzTranspose,
    Crooks,
    CrooksOperation,
}

impl From<TransformArg> for Transform {
    fn from(t: TransformArg) -> Self {
        match t {
            TransformArg::DoubleTranspose => Transform::DoubleTranspose,
            TransformArg::Theta => Transform::Theta,
            TransformArg::ThetaPrime => Transform::ThetaPrime,
            TransformArg::WeakAdjoint => Transform::WeakAdjoint,
            TransformArg::Petz => Transform::Petz,
            TransformArg::PetzTranspose => Transform::PetzTranspose,
            TransformArg::Crooks => Transform::Crooks,
            TransformArg::CrooksOperation => Transform::CrooksOperation,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum TargetArg {
    Dagger,
    Transpose,
    Identity,
}

impl From<TargetArg> for NogoTarget {
    fn from(t: TargetArg) -> Self {
        match t {
            TargetArg::Dagger => NogoTarget::Dagger,
            TargetArg::Transpose => NogoTarget::Transpose,
            TargetArg::Identity => NogoTarget::Identity,
        }
    }
}

fn emit(outcome: Outcome, json: bool, tol: &evosym::Tolerances) -> ExitCode {
    if json {
        let text = serde_json::to_string_pretty(&outcome.report.to_json(tol)).expect("report serializes");
        println!("{text}");
    } else {
        print!("{}", outcome.report.to_text());
    }
    if let Some(f) = &outcome.failure {
        eprintln!("error: {}", f.message());
    }
    ExitCode::from(outcome.code as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let tol = match commands::tolerances() {
        Ok(t) => t,
        Err(f) => {
            eprintln!("error: {}", f.message());
            return ExitCode::from(f.exit_code() as u8);
        }
    };
    match cli.command {
        Command::Classify { input, json } => emit(commands::classify(&input, &tol), json, &tol),
        Command::Reverse {
            input,
            transform,
            omega_a,
            omega_b,
            rho0,
            complement,
            out,
            json,
        } => {
            let extra = ReverseInputs {
                omega_a,
                omega_b,
                rho0,
                complement,
                out,
            };
            emit(commands::reverse(&input, transform.into(), &extra, &tol), json, &tol)
        }
        Command::Decompose { input, json } => emit(commands::decompose(&input, &tol), json, &tol),
        Command::Nogo {
            dim,
            target,
            samples,
            restarts,
            seed,
            floor,
            json,
        } => {
            let args = NogoArgs {
                dim,
                target: target.into(),
                samples,
                restarts,
                seed,
                floor,
            };
            emit(commands::nogo(&args), json, &tol)
        }
        Command::Simulate {
            instrument,
            state,
            shots,
            seed,
            require_ts,
            json,
        } => {
            let args = SimulateArgs {
                instrument,
                state,
                shots,
                seed,
                require_ts,
            };
            emit(commands::simulate(&args, &tol), json, &tol)
        }
        Command::Fixtures { out } => match evosym_cli::fixtures::write_corpus(&out) {
            Ok(files) => {
                for f in files {
                    println!("{}", out.join(f).display());
                }
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: cannot write fixtures to {}: {e}", out.display());
                ExitCode::from(commands::EXIT_PARSE as u8)
            }
        },
    }
}
