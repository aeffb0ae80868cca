use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use gpcbo_cli::config::{Overrides, RunConfig};
use gpcbo_cli::{experiment, plot, CliError};

#[derive(Parser)]
#[command(
    name = "gpcbo",
    version,
    about = "Consensus-based optimization with Gaussian-process sampling"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write its artifacts.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory; defaults to the file's `out`, then `runs/<problem>`.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        repeats: Option<usize>,
        /// Record wall times in history.csv.
        #[arg(long)]
        timing: bool,
    },
    /// Render SVG charts from one or more run directories.
    Plot {
        #[arg(required = true)]
        dirs: Vec<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run {
            config,
            seed,
            out,
            repeats,
            timing,
        } => {
            let cfg = RunConfig::load(&config)?;
            let resolved = cfg.resolve(&Overrides {
                seed,
                repeats,
                timing: timing.then_some(true),
            })?;
            let out = out
                .or(cfg.out.clone())
                .unwrap_or_else(|| PathBuf::from("runs").join(resolved.problem.name()));
            let summary = experiment::run_experiment(&resolved, &out)?;
            println!(
                "{}: {} repeat(s), {} iterations, final cost mean {:.6e} best {:.6e} -> {}",
                summary.problem,
                summary.repeats,
                summary.iterations,
                summary.mean_final_cost,
                summary.best_final_cost,
                out.display()
            );
            if let Some(z) = summary.zero_control_cost {
                println!("zero-control cost {z:.6e}");
            }
        }
        Command::Plot { dirs } => {
            for f in plot::plot_runs(&dirs)? {
                println!("{}", f.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
