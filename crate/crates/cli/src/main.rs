//! `duhem`: config-driven front end for the Duhem hysteresis toolkit.
//!
//! Exit status: 0 when every check passes, 1 when a check fails, 2 on
//! usage or config errors.

mod commands;
mod config;
mod error;
mod report;

use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::commands::{Ctx, Outcome};
use crate::config::{Config, ToleranceConfig};
use crate::error::{CliError, CliResult, EXIT_FAIL, EXIT_PASS, EXIT_USAGE};

#[derive(Parser, Debug)]
#[command(name = "duhem", version, about = "Duhem hysteresis operators, storage functions and feedback certificates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Default, Clone)]
struct TolArgs {
    #[arg(long = "tol-eq", global = true)]
    eq: Option<f64>,
    #[arg(long = "tol-psd", global = true)]
    psd: Option<f64>,
    #[arg(long = "tol-pd", global = true)]
    pd: Option<f64>,
    #[arg(long = "tol-root", global = true)]
    root: Option<f64>,
    #[arg(long = "tol-quad", global = true)]
    quad: Option<f64>,
    #[arg(long = "tol-mono", global = true)]
    mono: Option<f64>,
    #[arg(long = "tol-conv", global = true)]
    conv: Option<f64>,
    #[arg(long = "tol-margin", global = true)]
    margin: Option<f64>,
}

impl From<TolArgs> for ToleranceConfig {
    fn from(t: TolArgs) -> Self {
        Self {
            eq: t.eq,
            psd: t.psd,
            pd: t.pd,
            root: t.root,
            quad: t.quad,
            mono: t.mono,
            conv: t.conv,
            margin: t.margin,
        }
    }
}

#[derive(Args, Debug)]
struct Common {
    /// Experiment config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    tol: TolArgs,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Classify the operator as CCW, CW or neither.
    Classify(Common),
    /// Evaluate the storage function on a (gamma, v) grid.
    StorageGrid(Common),
    /// Verify a certificate for the configured interconnection.
    Certify(Common),
    /// Simulate the closed loop with Lyapunov monitoring.
    Simulate(Common),
    /// Search for a controller and certificate.
    Design {
        #[command(flatten)]
        common: Common,
        /// Master seed; overrides `design.seed`.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Integrate the operator alone along a piecewise-linear input.
    Integrate(Common),
    /// Rerun built-in examples (`all` or no ids runs every one).
    Reproduce {
        ids: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        tol: TolArgs,
    },
}

fn load(common: Common, seed: Option<u64>) -> CliResult<Ctx> {
    let text = std::fs::read_to_string(&common.config).map_err(|source| CliError::Read {
        path: common.config.clone(),
        source,
    })?;
    Ok(Ctx {
        config: Config::parse(&text)?,
        config_text: text,
        out: common.out,
        seed,
        tol_overrides: common.tol.into(),
    })
}

fn run(cli: Cli) -> CliResult<Outcome> {
    match cli.command {
        Command::Classify(c) => commands::classify_cmd(&load(c, None)?),
        Command::StorageGrid(c) => commands::storage_grid_cmd(&load(c, None)?),
        Command::Certify(c) => commands::certify_cmd(&load(c, None)?),
        Command::Simulate(c) => commands::simulate_cmd(&load(c, None)?),
        Command::Design { common, seed } => commands::design_cmd(&load(common, seed)?),
        Command::Integrate(c) => commands::integrate_cmd(&load(c, None)?),
        Command::Reproduce { ids, out, tol } => commands::reproduce_cmd(&ids, out.as_deref(), &tol.into()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS });
        }
    };
    match run(cli) {
        Ok(o) => {
            // A closed pipe (e.g. `| head`) is not an error of the run.
            let _ = writeln!(std::io::stdout().lock(), "{}", o.stdout);
            ExitCode::from(if o.pass { EXIT_PASS } else { EXIT_FAIL })
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
