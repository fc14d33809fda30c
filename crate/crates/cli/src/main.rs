use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use clap::{Parser, Subcommand};
use rewalk_core::cli::{
    cmd_export_world, cmd_generate, cmd_oracle_check, cmd_stats, cmd_validate, named_fixture, CliError,
    GenerateOptions, RunConfig, EXIT_CONFIG,
};

/// Synthesize multi-stride GUI trajectories over a simulated GUI world.
#[derive(Parser)]
#[command(name = "rewalk", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run episodes and write dataset.jsonl / rejects.jsonl.
    Generate {
        #[arg(long)]
        config: PathBuf,
        /// Overrides n_episodes.
        #[arg(long)]
        episodes: Option<u64>,
        /// Overrides base_seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads; defaults to available parallelism.
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Re-check every line of a dataset file.
    Validate { dataset: PathBuf },
    /// Action-kind rates and dataset summary.
    Stats {
        dataset: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Reachability, oracle-goal soundness and walk uniformity on the configured world.
    OracleCheck {
        #[arg(long)]
        config: PathBuf,
    },
    /// Save the configured world, or a named fixture, as JSON.
    ExportWorld {
        #[arg(long, required_unless_present = "fixture")]
        config: Option<PathBuf>,
        /// e.g. `severed/mobile`.
        #[arg(long, conflicts_with = "config")]
        fixture: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut stdout = std::io::stdout().lock();
    match cli.command {
        Command::Generate { config, episodes, seed, workers } => {
            let cfg = RunConfig::load(&config)?;
            let stop = Arc::new(AtomicBool::new(false));
            let flag = Arc::clone(&stop);
            if let Err(e) = ctrlc::set_handler(move || flag.store(true, Ordering::SeqCst)) {
                log::warn!("no Ctrl-C handler: {e}");
            }
            cmd_generate(&cfg, &GenerateOptions { episodes, seed, workers }, &stop, &mut stdout).map(|_| ())
        }
        Command::Validate { dataset } => cmd_validate(&dataset, &mut stdout),
        Command::Stats { dataset, json } => cmd_stats(&dataset, json, &mut stdout).map(|_| ()),
        Command::OracleCheck { config } => cmd_oracle_check(&RunConfig::load(&config)?, &mut stdout).map(|_| ()),
        Command::ExportWorld { config, fixture, out } => {
            let world = match (fixture, config) {
                (Some(name), _) => named_fixture(&name).ok_or_else(|| CliError::ConfigInvalid {
                    field: "fixture".into(),
                    message: format!("unknown fixture `{name}`"),
                })?,
                (None, Some(path)) => RunConfig::load(&path)?.build_world()?,
                (None, None) => unreachable!("clap requires one of --config/--fixture"),
            };
            cmd_export_world(&world, &out, &mut stdout)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_CONFIG as u8 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("rewalk: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
