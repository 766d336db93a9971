//! `fbcov`: coverage curves, connectable-AP tables, Monte Carlo validation
//! reports, and approximation-sensitivity grids from a JSON scenario file.
//!
//! Exit codes: 0 success, 1 configuration/IO/usage failure, 2 acceptance
//! failure in `validate --strict`.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod grid;
mod manifest;

use commands::StrictFailure;

#[derive(Parser)]
#[command(name = "fbcov", version, about = "Feedback-aided uplink coverage analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Scenario file (JSON; see configs/default.json)
    #[arg(long)]
    config: PathBuf,
    /// Directory for output files (created if missing)
    #[arg(long)]
    output: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Coverage-probability curves over a distance grid
    Coverage {
        #[command(flatten)]
        common: CommonArgs,
        /// forward | feedback-exact | feedback-gl | feedback-closed | all
        #[arg(long, default_value = "all")]
        method: String,
        /// Distance grid in meters, start:stop:step (inclusive stop)
        #[arg(long, default_value = "25:300:25")]
        grid: String,
    },
    /// Expected connectable-AP counts over a region-radius grid
    Aps {
        #[command(flatten)]
        common: CommonArgs,
        /// forward | feedback | both
        #[arg(long, default_value = "both")]
        mode: String,
        /// Radius grid in meters, start:stop:step
        #[arg(long, default_value = "25:300:25")]
        grid: String,
    },
    /// Side-by-side analytical vs Monte Carlo report
    Validate {
        #[command(flatten)]
        common: CommonArgs,
        /// forward | feedback
        #[arg(long, default_value = "forward")]
        mode: String,
        /// Grid of distances / region radii in meters
        #[arg(long, default_value = "50:250:50")]
        grid: String,
        /// Coverage trials per grid point
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
        /// Spatial realizations per grid point
        #[arg(long, default_value_t = 10_000)]
        realizations: u64,
        /// Master seed for the per-trial random streams
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Exit 2 when the report fails or the budget cannot resolve a point
        #[arg(long)]
        strict: bool,
    },
    /// Per-step approximation errors, monotonicity verdicts, and the
    /// end-to-end AP-count error grid
    Sensitivity {
        #[command(flatten)]
        common: CommonArgs,
        /// Feedback-ratio axis, start:stop:step (integers)
        #[arg(long, default_value = "1:8:1")]
        a_grid: String,
        /// Distance/radius axis in meters
        #[arg(long, default_value = "25:300:25")]
        d_grid: String,
        /// Uplink power axis in milliwatts, comma-separated
        #[arg(long, default_value = "0.5,1,2")]
        pu_mw: String,
    },
}

fn run() -> anyhow::Result<()> {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap's own exit code for usage errors is 2, which this tool
            // reserves for strict-validation failures
            if e.use_stderr() {
                e.print().ok();
                std::process::exit(1);
            }
            e.print().ok();
            std::process::exit(0); // --help / --version
        }
    };
    match cli.command {
        Command::Coverage {
            common,
            method,
            grid,
        } => {
            let cfg = fbcov::load_config(&common.config)?;
            commands::cmd_coverage(&cfg, &method, &grid, &common.output)
        }
        Command::Aps { common, mode, grid } => {
            let cfg = fbcov::load_config(&common.config)?;
            commands::cmd_aps(&cfg, &mode, &grid, &common.output)
        }
        Command::Validate {
            common,
            mode,
            grid,
            trials,
            realizations,
            seed,
            strict,
        } => {
            let cfg = fbcov::load_config(&common.config)?;
            commands::cmd_validate(
                &cfg,
                &mode,
                &grid,
                trials,
                realizations,
                seed,
                strict,
                &common.output,
            )
        }
        Command::Sensitivity {
            common,
            a_grid,
            d_grid,
            pu_mw,
        } => {
            let cfg = fbcov::load_config(&common.config)?;
            commands::cmd_sensitivity(&cfg, &a_grid, &d_grid, &pu_mw, &common.output)
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if e.is::<StrictFailure>() {
                eprintln!("{e}");
                ExitCode::from(2)
            } else {
                eprintln!("error: {e:#}");
                ExitCode::from(1)
            }
        }
    }
}
