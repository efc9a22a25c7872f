mod commands;
mod config;
mod error;
mod output;
mod specs;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

use commands::{Format, Outcome};
use error::{CliError, CliResult};

/// Experiments on learning reductions, half-space representations and
/// antipodal maps. Exit status is 0 iff the report passes.
#[derive(Parser)]
#[command(name = "convexred", version)]
struct Cli {
    /// JSON object whose fields override the command's flags.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Report path; stdout when absent. Relative paths resolve under
    /// $CONVEXRED_OUT_DIR when it is set.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// VC and dual VC dimension of a finite class.
    Vc(commands::VcArgs),
    /// Check a reduction's (alpha, beta) claim on a suite of distributions.
    ReduceVerify(commands::ReduceArgs),
    /// Sign-flip rate of Gaussian random projections.
    RandomProjection(commands::ProjectionArgs),
    /// Certify exactness of a representation on realizable samples.
    HellyCert(commands::HellyArgs),
    /// Half-space representation of a finite class from the hard-SVM reduction.
    ExtractSignrank(commands::SignrankArgs),
    /// Antipodal collision search on a partition-of-unity map.
    BuDemo(commands::BuArgs),
    /// Some member of a three-way majority errs on at most a third of the mass.
    Majority3Check(commands::MajorityArgs),
}

fn merged<T: Serialize + DeserializeOwned>(args: T, config: &Map<String, Value>) -> CliResult<T> {
    config::apply(args, config)
}

fn run(cli: Cli) -> CliResult<Outcome> {
    let mut config = match &cli.config {
        Some(p) => config::read_config(p)?,
        None => Map::new(),
    };
    let format = match config.remove("format") {
        Some(v) => serde_json::from_value(v).map_err(|e| CliError::Config {
            field: "format".into(),
            message: e.to_string(),
        })?,
        None => cli.format,
    };
    let out = match config.remove("out") {
        Some(Value::String(s)) => Some(PathBuf::from(s)),
        Some(_) => {
            return Err(CliError::Config {
                field: "out".into(),
                message: "must be a string".into(),
            })
        }
        None => cli.out.clone(),
    };
    let outcome = match cli.command {
        Command::Vc(a) => commands::vc(&merged(a, &config)?, format),
        Command::ReduceVerify(a) => commands::reduce_verify(&merged(a, &config)?, format),
        Command::RandomProjection(a) => commands::random_projection(&merged(a, &config)?, format),
        Command::HellyCert(a) => commands::helly_cert(&merged(a, &config)?, format),
        Command::ExtractSignrank(a) => commands::extract_signrank(&merged(a, &config)?, format),
        Command::BuDemo(a) => commands::bu_demo(&merged(a, &config)?, format),
        Command::Majority3Check(a) => commands::majority3_check(&merged(a, &config)?, format),
    }?;
    match out {
        Some(p) => output::write_atomic(&output::resolve(&p), &outcome.body)?,
        None => print!("{}", outcome.body),
    }
    Ok(outcome)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(o) if o.pass => ExitCode::SUCCESS,
        Ok(_) => {
            eprintln!("report did not pass");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
