//! `mghd`: builds a scenario's development and writes CSV, JSON and SVG artifacts.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod error;
mod output;
mod scenario;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mghd_core::oracle_solver::Scheme;
use serde_json::json;

use crate::commands::{OracleOverrides, Pipeline};
use crate::error::{CliError, CliResult};
use crate::output::OutputDir;
use crate::scenario::Scenario;

#[derive(Parser, Debug)]
#[command(name = "mghd", version, about = "Maximal development of shock-forming plane-symmetric relativistic Euler flows")]
struct Cli {
    /// Scenario TOML file (defaults to $MGHD_SCENARIO, then built-in defaults).
    #[arg(long, global = true)]
    scenario: Option<PathBuf>,
    /// Output directory (defaults to the scenario's `output`, then `out`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for parallel sweeps.
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Validate the seed and write the certified data constants.
    Seed,
    /// Tabulate the closed-form solution in geometric coordinates.
    SolveGeo,
    /// Crease, singular curve and Cauchy horizon.
    Boundary,
    /// Map to rectangular coordinates with jacobian and injectivity audit.
    Map,
    /// Run the rectangular-coordinate solver.
    Oracle {
        #[command(flatten)]
        flags: OracleFlags,
        /// Also estimate the blowup time on the scenario's mesh ladder.
        #[arg(long)]
        blowup: bool,
    },
    /// Compare solver runs on refined meshes with the geometric solution.
    Compare {
        #[command(flatten)]
        flags: OracleFlags,
    },
    /// Verification suites.
    Check {
        #[command(subcommand)]
        suite: CheckSuite,
    },
    /// Seed profile, development and its rectangular image as SVG.
    Plot,
}

#[derive(Subcommand, Debug)]
enum CheckSuite {
    Identities,
    EnergyCurrent {
        /// Number of (state, one-form) pairs.
        #[arg(long)]
        samples: Option<usize>,
    },
    Kernels,
    SharpEstimates,
}

#[derive(Args, Debug)]
struct OracleFlags {
    #[arg(long)]
    dx: Option<f64>,
    #[arg(long)]
    cfl: Option<f64>,
    #[arg(long = "t-end")]
    t_end: Option<f64>,
    #[arg(long, value_enum)]
    scheme: Option<SchemeArg>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SchemeArg {
    Upwind,
    Minmod,
}

impl OracleFlags {
    fn overrides(&self) -> OracleOverrides {
        OracleOverrides {
            dx: self.dx,
            cfl: self.cfl,
            t_end: self.t_end,
            scheme: self.scheme.map(|s| match s {
                SchemeArg::Upwind => Scheme::Upwind,
                SchemeArg::Minmod => Scheme::Minmod,
            }),
        }
    }
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Seed => "seed",
        Command::SolveGeo => "solve-geo",
        Command::Boundary => "boundary",
        Command::Map => "map",
        Command::Oracle { .. } => "oracle",
        Command::Compare { .. } => "compare",
        Command::Check { suite: CheckSuite::Identities } => "check identities",
        Command::Check { suite: CheckSuite::EnergyCurrent { .. } } => "check energy-current",
        Command::Check { suite: CheckSuite::Kernels } => "check kernels",
        Command::Check { suite: CheckSuite::SharpEstimates } => "check sharp-estimates",
        Command::Plot => "plot",
    }
}

fn run(cli: &Cli) -> CliResult<serde_json::Value> {
    if let Some(n) = cli.workers {
        if n == 0 {
            return Err(CliError::Usage("--workers must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| CliError::Usage(e.to_string()))?;
    }
    let scenario = Scenario::resolve(cli.scenario.as_deref())?;
    let dir = cli.out.clone().or_else(|| scenario.output.clone()).unwrap_or_else(|| PathBuf::from("out"));
    let pipeline = Pipeline::build(&scenario)?;
    let mut out = OutputDir::create(&dir)?;
    let result = match &cli.command {
        Command::Seed => commands::seed(&pipeline, &mut out),
        Command::SolveGeo => commands::solve_geo(&pipeline, &mut out),
        Command::Boundary => commands::boundary(&pipeline, &mut out),
        Command::Map => commands::map(&pipeline, &mut out),
        Command::Oracle { flags, blowup } => commands::oracle(&pipeline, &flags.overrides(), *blowup, &mut out),
        Command::Compare { flags } => commands::compare(&pipeline, &flags.overrides(), &mut out),
        Command::Check { suite } => match suite {
            CheckSuite::Identities => commands::check_identities(&pipeline, &mut out),
            CheckSuite::EnergyCurrent { samples } => commands::check_energy_current(&pipeline, *samples, &mut out),
            CheckSuite::Kernels => commands::check_kernels(&pipeline, &mut out),
            CheckSuite::SharpEstimates => commands::check_sharp_estimates(&pipeline, &mut out),
        },
        Command::Plot => commands::plot(&pipeline, &mut out),
    }?;
    Ok(json!({
        "command": command_name(&cli.command),
        "output": dir.display().to_string(),
        "written": out.written(),
        "result": result,
    }))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let err = CliError::Usage(e.render().to_string().trim().to_string());
            eprintln!("{}", err.to_json());
            return ExitCode::from(err.exit_code() as u8);
        }
    };
    match run(&cli) {
        Ok(summary) => {
            println!("{}", serde_json::to_string_pretty(&summary).expect("summary serializes"));
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("{}", serde_json::to_string_pretty(&err.to_json()).expect("error serializes"));
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
