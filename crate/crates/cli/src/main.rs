use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use dphase_cli::{parse_config, run, CliError, Command, RunOptions};

#[derive(Parser)]
#[command(name = "dphase", version, about = "Double phase Dirichlet problems: eigenpairs, constant-sign solutions, checks")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `[output] dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Cmd {
    /// First eigenpair of the p-Laplacian.
    Eigen(Common),
    /// Nonnegative and nonpositive solutions at one lambda.
    Solve(Common),
    /// Both solutions for every lambda in the list.
    Sweep(Common),
    /// Residual, sup-norm and truncated test identity for a stored solution.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Solution CSV; defaults to u_plus.csv in the output directory.
        #[arg(long)]
        solution: Option<PathBuf>,
    },
    /// Hypothesis diagnostics and randomized property checks.
    Check(Common),
}

fn execute(cli: Cli) -> Result<(), CliError> {
    let (cmd, common, solution) = match cli.command {
        Cmd::Eigen(c) => (Command::Eigen, c, None),
        Cmd::Solve(c) => (Command::Solve, c, None),
        Cmd::Sweep(c) => (Command::Sweep, c, None),
        Cmd::Verify { common, solution } => (Command::Verify, common, solution),
        Cmd::Check(c) => (Command::Check, c, None),
    };
    let quiet = common.quiet;
    env_logger::Builder::new()
        .filter_level(if quiet { log::LevelFilter::Error } else { log::LevelFilter::Warn })
        .parse_default_env()
        .init();
    let text = std::fs::read_to_string(&common.config).map_err(|source| CliError::Io {
        path: common.config.clone(),
        source,
    })?;
    let cfg = parse_config(&text)?;
    let out = common
        .out
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    let outcome = run(cmd, &cfg, &RunOptions { out, solution })?;
    if !quiet {
        print!("{}", outcome.summary);
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
