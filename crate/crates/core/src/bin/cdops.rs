use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use cdops::registry::{registry, reproduce};
use cdops::run::{export_matrix, run, verify_adjoint, ExportKind};
use cdops::scenario::{parse_scenario, Scenario};
use cdops::{json, Error, Result};

#[derive(Parser)]
#[command(name = "cdops", version, about = "Posinormality analysis of weighted composition-differentiation operators on H^2")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every analysis on a scenario file and print the JSON report.
    Analyze {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        truncation: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the built-in registry and print a pass/fail table.
    Reproduce {
        #[arg(long)]
        only: Option<String>,
        /// Write the full JSON reports here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Dump a finite section as JSON.
    Export {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, value_enum, default_value_t = Which::Operator)]
        which: Which,
        #[arg(long)]
        truncation: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare the adjoint on reproducing kernels with its closed form.
    VerifyAdjoint {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        truncation: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Which {
    Operator,
    Adjoint,
    CowenFactorization,
}

impl From<Which> for ExportKind {
    fn from(w: Which) -> Self {
        match w {
            Which::Operator => ExportKind::Operator,
            Which::Adjoint => ExportKind::Adjoint,
            Which::CowenFactorization => ExportKind::CowenFactorization,
        }
    }
}

fn load(path: &Path, truncation: Option<usize>, seed: Option<u64>) -> Result<Scenario> {
    let mut scenario = parse_scenario(&fs::read(path)?)?;
    if let Some(t) = truncation {
        scenario.truncation = t;
    }
    if let Some(s) = seed {
        scenario.seed = s;
    }
    scenario.validate()?;
    Ok(scenario)
}

fn emit(bytes: &[u8], out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => fs::write(path, bytes)?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(bytes)?;
            stdout.flush()?;
        }
    }
    Ok(())
}

fn execute(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Analyze {
            scenario,
            truncation,
            seed,
            out,
        } => {
            let report = run(&load(&scenario, truncation, seed)?)?;
            emit(&json::to_vec_pretty(&report)?, out.as_deref())?;
            Ok(if report.all_expectations_met() { 0 } else { 1 })
        }
        Command::Reproduce { only, out } => {
            let rep = reproduce(&registry(), only.as_deref())?;
            if let Some(path) = out {
                fs::write(path, json::to_vec_pretty(&rep.reports)?)?;
            }
            emit(rep.table().as_bytes(), None)?;
            Ok(rep.exit_code())
        }
        Command::Export {
            scenario,
            which,
            truncation,
            out,
        } => {
            let bytes = export_matrix(&load(&scenario, truncation, None)?, which.into())?;
            emit(&bytes, out.as_deref())?;
            Ok(0)
        }
        Command::VerifyAdjoint {
            scenario,
            truncation,
            seed,
            out,
        } => {
            let result = verify_adjoint(&load(&scenario, truncation, seed)?)?;
            emit(&json::to_vec_pretty(&result)?, out.as_deref())?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            let code = match &e {
                Error::Io(_) => 2,
                other => other.exit_code(),
            };
            ExitCode::from(code as u8)
        }
    }
}
