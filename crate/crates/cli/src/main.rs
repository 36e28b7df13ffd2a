//! `construal-sim`: world generation, construal estimation, model
//! comparison, fitting and rendering.

mod commands;
mod error;
mod files;

use clap::{Parser, Subcommand};
use error::CliError;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "construal-sim", version, about = "Construal models for grid planning and falling-ball prediction")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a corpus of worlds and its manifest.
    Gen(commands::gen::GenArgs),
    /// Estimate per-object construal weights for one world.
    Construal(commands::construal::ConstrualArgs),
    /// Sweep computation and representation costs over a grid corpus.
    Efficiency(commands::efficiency::EfficiencyArgs),
    /// Grid-search model parameters against per-object data.
    Fit(commands::fit::FitArgs),
    /// Draw a world, optionally shaded by construal weights, as SVG.
    Render(commands::render::RenderArgs),
    /// Export one simulated trajectory as CSV.
    Rollout(commands::rollout::RolloutArgs),
}

const THREADS_VAR: &str = "CONSTRUAL_SIM_THREADS";

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| CliError::Environment(format!("{THREADS_VAR} must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Environment(format!("thread pool: {e}")))
}

fn run(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    match cli.command {
        Command::Gen(a) => commands::gen::run(a),
        Command::Construal(a) => commands::construal::run(a),
        Command::Efficiency(a) => commands::efficiency::run(a),
        Command::Fit(a) => commands::fit::run(a),
        Command::Render(a) => commands::render::run(a),
        Command::Rollout(a) => commands::rollout::run(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json_line());
            ExitCode::from(e.exit_code())
        }
    }
}
