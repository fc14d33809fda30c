//! Episode serialization, filtering, statistics and cost accounting.

pub mod cost;
pub mod filter;
pub mod schema;
pub mod stats;
pub mod validate;

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

pub use filter::{filter_episode, filter_records};
pub use schema::{CostRecord, EpisodeRecord, FilterVerdict, GoalRecord, RecoveryRecord, StepRecord, StrideRecord, SCHEMA_VERSION};
pub use stats::{apportion_basis_points, compute_stats, PlatformStats, StatsReport};
pub use validate::{validate_dataset, ValidationReport, Violation};

pub const DATASET_FILE: &str = "dataset.jsonl";
pub const REJECTS_FILE: &str = "rejects.jsonl";

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("no kept episodes to report on")]
    EmptyDataset,
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

fn io_at(path: &Path) -> impl FnOnce(io::Error) -> DatasetError + '_ {
    move |source| DatasetError::Io { path: path.to_path_buf(), source }
}

/// Appends one episode as a JSON line.
pub fn emit_episode(record: &EpisodeRecord, sink: &mut impl Write) -> io::Result<()> {
    sink.write_all(record.to_line().as_bytes())?;
    sink.write_all(b"\n")
}

/// The two output streams: kept episodes and everything the filter dropped.
pub struct DatasetSink {
    dataset: BufWriter<File>,
    rejects: BufWriter<File>,
    dir: PathBuf,
    pub kept: usize,
    pub rejected: usize,
}

impl DatasetSink {
    pub fn create(dir: &Path) -> Result<Self, DatasetError> {
        std::fs::create_dir_all(dir).map_err(io_at(dir))?;
        let open = |name: &str| {
            let p = dir.join(name);
            File::create(&p).map(BufWriter::new).map_err(|source| DatasetError::Io { path: p, source })
        };
        Ok(Self { dataset: open(DATASET_FILE)?, rejects: open(REJECTS_FILE)?, dir: dir.to_path_buf(), kept: 0, rejected: 0 })
    }

    pub fn write(&mut self, record: &EpisodeRecord) -> Result<(), DatasetError> {
        if record.filter_verdict.is_kept() {
            self.kept += 1;
            emit_episode(record, &mut self.dataset).map_err(io_at(&self.dir.join(DATASET_FILE)))
        } else {
            self.rejected += 1;
            emit_episode(record, &mut self.rejects).map_err(io_at(&self.dir.join(REJECTS_FILE)))
        }
    }

    pub fn flush(&mut self) -> Result<(), DatasetError> {
        self.dataset.flush().map_err(io_at(&self.dir.join(DATASET_FILE)))?;
        self.rejects.flush().map_err(io_at(&self.dir.join(REJECTS_FILE)))
    }
}

/// Parses every non-blank line of a JSON-lines file.
pub fn read_episodes(path: &Path) -> Result<Vec<EpisodeRecord>, DatasetError> {
    let file = File::open(path).map_err(io_at(path))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_at(path))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(EpisodeRecord::from_line(&line).map_err(|e| DatasetError::Parse { line: i + 1, message: e.to_string() })?);
    }
    Ok(out)
}
