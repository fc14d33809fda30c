//! Bounded worker pool: workers claim episode indices, a single writer
//! receives finished episodes over a channel and appends them in index
//! order, so output is identical whatever the worker count.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::mpsc;

use super::{CliError, RunConfig};
use crate::dataset::{DatasetSink, EpisodeRecord};
use crate::env::GuiWorld;
use crate::orchestrator::run_episode;
use crate::reasoner::Reasoner;

#[derive(Debug, Clone, Default)]
pub struct GenerateSummary {
    pub kept: usize,
    pub rejected: usize,
    /// The stop flag was raised before every episode ran.
    pub interrupted: bool,
    pub tokens: u64,
    pub dollars: f64,
    /// Every written episode, in index order.
    pub records: Vec<EpisodeRecord>,
}

pub fn generate_episodes(
    world: &GuiWorld,
    reasoner: &dyn Reasoner,
    config: &RunConfig,
    workers: usize,
    stop: &AtomicBool,
    sink: &mut DatasetSink,
) -> Result<GenerateSummary, CliError> {
    let episode_config = config.episode_config();
    let next = AtomicU64::new(0);
    let n = config.n_episodes;
    let mut summary = GenerateSummary::default();
    let mut pending: BTreeMap<u64, EpisodeRecord> = BTreeMap::new();
    let mut expected = 0u64;

    let mut write = |rec: EpisodeRecord, summary: &mut GenerateSummary| -> Result<(), CliError> {
        sink.write(&rec)?;
        summary.tokens += rec.cost.prompt_tokens + rec.cost.completion_tokens;
        summary.dollars += rec.cost.dollars;
        summary.records.push(rec);
        Ok(())
    };

    let result = std::thread::scope(|scope| -> Result<(), CliError> {
        let (tx, rx) = mpsc::channel::<(u64, EpisodeRecord)>();
        for _ in 0..workers.min(n as usize).max(1) {
            let tx = tx.clone();
            let (next, episode_config) = (&next, &episode_config);
            scope.spawn(move || loop {
                if stop.load(Ordering::SeqCst) {
                    break;
                }
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= n {
                    break;
                }
                let seed = config.base_seed.wrapping_add(i);
                let episode = run_episode(world, reasoner, i, seed, episode_config);
                log::debug!("episode {i} finished: {} records", episode.record_count());
                if tx.send((i, episode.to_record())).is_err() {
                    break;
                }
            });
        }
        drop(tx);
        for (i, rec) in rx {
            pending.insert(i, rec);
            while let Some(rec) = pending.remove(&expected) {
                write(rec, &mut summary)?;
                expected += 1;
            }
        }
        // After an interrupt, later episodes may have finished past a gap.
        for (_, rec) in std::mem::take(&mut pending) {
            write(rec, &mut summary)?;
        }
        Ok(())
    });
    sink.flush()?;
    result?;
    summary.kept = sink.kept;
    summary.rejected = sink.rejected;
    summary.interrupted = (summary.records.len() as u64) < n;
    Ok(summary)
}
