//! The operator commands behind the `rewalk` binary: generate, validate,
//! stats, oracle-check and export-world. Each writes its report to the given
//! sink and maps failures to a [`CliError`] with a fixed exit code.

pub mod config;
mod oracle_check;
mod pool;

use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::AtomicBool;

pub use config::{OutputConfig, RunConfig};
pub use oracle_check::{cmd_oracle_check, oracle_check_world, OracleCheck};
pub use pool::{generate_episodes, GenerateSummary};

use crate::dataset::{self, compute_stats, read_episodes, validate_dataset, DatasetError, DatasetSink};
use crate::env::GuiWorld;
use crate::reasoner::remote::API_KEY_VAR;
use crate::reasoner::{Backend, HttpTransport, Reasoner, RemoteReasoner, ScriptedOracle};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_VALIDATION: i32 = 4;
pub const EXIT_ORACLE: i32 = 5;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid config: {field}: {message}")]
    ConfigInvalid { field: String, message: String },
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("oracle check failed: {0}")]
    Oracle(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::ConfigInvalid { .. } => EXIT_CONFIG,
            CliError::Io { .. } => EXIT_IO,
            CliError::Validation(_) => EXIT_VALIDATION,
            CliError::Oracle(_) => EXIT_ORACLE,
        }
    }
}

impl From<DatasetError> for CliError {
    fn from(e: DatasetError) -> Self {
        match e {
            DatasetError::Io { path, source } => CliError::Io { path, source },
            other => CliError::Validation(other.to_string()),
        }
    }
}

fn stdout_err(source: io::Error) -> CliError {
    CliError::Io { path: PathBuf::from("<stdout>"), source }
}

/// Command-line overrides for `generate`.
#[derive(Debug, Clone, Default)]
pub struct GenerateOptions {
    pub episodes: Option<u64>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
}

pub fn build_reasoner(config: &RunConfig) -> Result<Box<dyn Reasoner>, CliError> {
    match config.backend {
        Backend::ScriptedOracle => Ok(Box::new(ScriptedOracle)),
        Backend::Remote => {
            if std::env::var(API_KEY_VAR).map_or(true, |k| k.is_empty()) {
                return Err(CliError::ConfigInvalid {
                    field: "backend".into(),
                    message: format!("the remote backend needs {API_KEY_VAR} in the environment"),
                });
            }
            let transport = HttpTransport::from_env(&config.reasoner)
                .map_err(|e| CliError::ConfigInvalid { field: "reasoner".into(), message: e.to_string() })?;
            Ok(Box::new(RemoteReasoner::new(Box::new(transport), config.reasoner.clone())))
        }
    }
}

/// Runs the configured episodes, writes both streams and prints the stats.
pub fn cmd_generate(
    config: &RunConfig,
    options: &GenerateOptions,
    stop: &AtomicBool,
    out: &mut dyn Write,
) -> Result<GenerateSummary, CliError> {
    let mut config = config.clone();
    if let Some(n) = options.episodes {
        config.n_episodes = n;
    }
    if let Some(s) = options.seed {
        config.base_seed = s;
    }
    config.validate()?;
    let workers = options
        .workers
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
        .max(1);
    let world = config.build_world()?;
    let reasoner = build_reasoner(&config)?;
    let mut sink = DatasetSink::create(&config.output.dir)?;
    let summary = generate_episodes(&world, reasoner.as_ref(), &config, workers, stop, &mut sink)?;
    writeln!(
        out,
        "wrote {} kept and {} rejected episode(s) to {}{}",
        summary.kept,
        summary.rejected,
        config.output.dir.display(),
        if summary.interrupted { " (interrupted)" } else { "" }
    )
    .map_err(stdout_err)?;
    writeln!(out, "tokens: {} (${:.6})", summary.tokens, summary.dollars).map_err(stdout_err)?;
    match compute_stats(&summary.records) {
        Ok(stats) => write!(out, "{}", stats.render_table()).map_err(stdout_err)?,
        Err(e) => writeln!(out, "stats: {e}").map_err(stdout_err)?,
    }
    Ok(summary)
}

/// Re-checks a dataset file; lists at most ten violations.
pub fn cmd_validate(path: &Path, out: &mut dyn Write) -> Result<(), CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
    let report = validate_dataset(&text);
    if report.episodes == 0 {
        writeln!(out, "0 episodes: nothing to check").map_err(stdout_err)?;
        return Ok(());
    }
    if report.is_ok() {
        writeln!(out, "{} episodes: ok", report.episodes).map_err(stdout_err)?;
        return Ok(());
    }
    writeln!(out, "{} episodes, {} violation(s):", report.episodes, report.violations.len()).map_err(stdout_err)?;
    for v in report.violations.iter().take(10) {
        writeln!(out, "  {v}").map_err(stdout_err)?;
    }
    Err(CliError::Validation(format!("{} violation(s), first: {}", report.violations.len(), report.violations[0])))
}

pub fn cmd_stats(path: &Path, json: bool, out: &mut dyn Write) -> Result<dataset::StatsReport, CliError> {
    let episodes = read_episodes(path)?;
    let stats = compute_stats(&episodes)?;
    if json {
        writeln!(out, "{}", stats.to_json()).map_err(stdout_err)?;
    } else {
        write!(out, "{}", stats.render_table()).map_err(stdout_err)?;
    }
    Ok(stats)
}

/// Named worlds `export-world` can write besides the configured one.
pub fn named_fixture(name: &str) -> Option<GuiWorld> {
    crate::fixtures::all().into_iter().find(|(n, _)| n == name).map(|(_, w)| w)
}

pub fn cmd_export_world(world: &GuiWorld, path: &Path, out: &mut dyn Write) -> Result<(), CliError> {
    std::fs::write(path, world.to_json() + "\n").map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
    writeln!(out, "wrote {} world with {} apps to {}", world.platform, world.apps.len(), path.display()).map_err(stdout_err)
}

#[cfg(test)]
mod tests;
