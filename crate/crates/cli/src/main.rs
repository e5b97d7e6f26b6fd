use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use gridmap_cli::bench::parse_tols;
use gridmap_cli::{cmd_bench, cmd_generate, cmd_render, GenerateArgs, StageError};

/// Grid map generation from polygon regions.
#[derive(Debug, Parser)]
#[command(name = "gridmap", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the full pipeline and write layout, metrics and renderings.
    Generate {
        /// GeoJSON FeatureCollection of polygon regions.
        #[arg(long)]
        input: PathBuf,
        /// GeoJSON outer boundary; derived from the regions when omitted.
        #[arg(long)]
        boundary: Option<PathBuf>,
        /// JSON configuration overriding the defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        /// Also write the snake iteration trace.
        #[arg(long)]
        trace: bool,
    },
    /// Time the pipeline at several boundary simplification tolerances.
    Bench {
        #[arg(long)]
        input: PathBuf,
        /// Comma-separated tolerances in input units.
        #[arg(long)]
        tols: String,
        /// Runs per tolerance; the fastest is reported.
        #[arg(long, default_value_t = 1)]
        repeats: usize,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Render a layout JSON file to SVG.
    Render {
        #[arg(long)]
        layout: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Generate {
            input,
            boundary,
            config,
            out,
            trace,
        } => {
            let args = GenerateArgs {
                input,
                boundary,
                config,
                out,
                trace,
            };
            let (result, written) = cmd_generate(&args)?;
            let chosen = result.chosen();
            log::info!(
                "chose shift {:?}, md {}, seed {} out of {} candidates",
                chosen.strategy.shift,
                chosen.strategy.md,
                chosen.strategy.seed,
                result.candidates.candidates.len()
            );
            for f in &written.files {
                println!("{}", f.display());
            }
        }
        Command::Bench {
            input,
            tols,
            repeats,
            config,
            out,
        } => {
            let tols = parse_tols(&tols)?;
            let rows = cmd_bench(&input, &tols, repeats, config.as_deref(), &out)
                .with_context(|| format!("benchmark of {}", input.display()))?;
            println!("{} rows written to {}", rows.len(), out.display());
        }
        Command::Render { layout, out } => {
            cmd_render(&layout, &out)?;
            println!("{}", out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            let code = err
                .chain()
                .find_map(|e| e.downcast_ref::<StageError>())
                .map_or(1, StageError::exit_code);
            ExitCode::from(code as u8)
        }
    }
}
