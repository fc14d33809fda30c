//! Action-kind rates per platform, in the shape of the unified action table.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::schema::EpisodeRecord;
use super::DatasetError;
use crate::action::{kind_allowed, ActionKind, Platform};
use crate::guided::Outcome;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlatformStats {
    pub episodes: usize,
    pub actions: u64,
    pub counts: BTreeMap<ActionKind, u64>,
    /// Percent with two decimals; legal kinds only.
    pub percent: BTreeMap<ActionKind, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    /// Kept episodes the report covers.
    pub episodes: usize,
    /// Episodes seen, kept or not.
    pub episodes_seen: usize,
    /// Strides that carried a goal.
    pub tasks: usize,
    pub mean_records_per_episode: f64,
    pub mean_strides_per_episode: f64,
    pub platforms: BTreeMap<Platform, PlatformStats>,
}

/// Splits 10,000 basis points over `counts` by largest remainder, so the
/// parts always sum to exactly 100.00%. Ties go to the earlier entry.
pub fn apportion_basis_points(counts: &[u64]) -> Vec<u32> {
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return vec![0; counts.len()];
    }
    let scaled: Vec<(u64, u64)> = counts
        .iter()
        .map(|&c| {
            let x = c as u128 * 10_000;
            ((x / total as u128) as u64, (x % total as u128) as u64)
        })
        .collect();
    let mut out: Vec<u32> = scaled.iter().map(|&(q, _)| q as u32).collect();
    let short = 10_000 - out.iter().sum::<u32>();
    let mut order: Vec<usize> = (0..counts.len()).collect();
    order.sort_by(|&a, &b| scaled[b].1.cmp(&scaled[a].1).then(a.cmp(&b)));
    for &i in order.iter().take(short as usize) {
        out[i] += 1;
    }
    out
}

/// Every executed record, plus one decision per stride that ended with
/// `Completed()` or `Infeasible()`.
fn episode_kinds(e: &EpisodeRecord) -> impl Iterator<Item = ActionKind> + '_ {
    e.strides.iter().flat_map(|s| {
        let decision = match s.outcome {
            Outcome::Completed => Some(ActionKind::Completed),
            Outcome::Infeasible => Some(ActionKind::Infeasible),
            Outcome::BudgetExhausted => None,
        };
        s.steps.iter().map(|st| st.record.action.kind()).chain(decision)
    })
}

pub fn compute_stats<'a>(episodes: impl IntoIterator<Item = &'a EpisodeRecord>) -> Result<StatsReport, DatasetError> {
    let mut seen = 0;
    let mut kept = 0;
    let mut tasks = 0;
    let mut records = 0usize;
    let mut strides = 0usize;
    let mut per: BTreeMap<Platform, (usize, BTreeMap<ActionKind, u64>)> = BTreeMap::new();
    for e in episodes {
        seen += 1;
        if !e.filter_verdict.is_kept() {
            continue;
        }
        kept += 1;
        tasks += e.strides.iter().filter(|s| s.goal.is_some()).count();
        records += e.record_count();
        strides += e.strides.len();
        let (n, counts) = per.entry(e.platform).or_default();
        *n += 1;
        for k in episode_kinds(e) {
            *counts.entry(k).or_default() += 1;
        }
    }
    if kept == 0 {
        return Err(DatasetError::EmptyDataset);
    }
    let platforms = per
        .into_iter()
        .map(|(platform, (episodes, counts))| {
            let kinds: Vec<ActionKind> = ActionKind::ALL.into_iter().filter(|k| kind_allowed(*k, platform)).collect();
            let raw: Vec<u64> = kinds.iter().map(|k| counts.get(k).copied().unwrap_or(0)).collect();
            let bp = apportion_basis_points(&raw);
            let percent = kinds.iter().zip(bp).map(|(k, b)| (*k, b as f64 / 100.0)).collect();
            let stats = PlatformStats { episodes, actions: raw.iter().sum(), counts, percent };
            (platform, stats)
        })
        .collect();
    Ok(StatsReport {
        episodes: kept,
        episodes_seen: seen,
        tasks,
        mean_records_per_episode: records as f64 / kept as f64,
        mean_strides_per_episode: strides as f64 / kept as f64,
        platforms,
    })
}

impl StatsReport {
    /// Aligned text table: one row per kind, one rate column per platform;
    /// `-` where a kind does not exist on the platform or no data was seen.
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:<12} {:>12} {:>12}", "Action", "Mobile Rate", "Desktop Rate");
        for kind in ActionKind::ALL {
            let cell = |p: Platform| match self.platforms.get(&p).and_then(|s| s.percent.get(&kind)) {
                Some(v) => format!("{v:.2}%"),
                None => "-".to_string(),
            };
            let _ = writeln!(out, "{:<12} {:>12} {:>12}", kind.name(), cell(Platform::Mobile), cell(Platform::Desktop));
        }
        for p in [Platform::Mobile, Platform::Desktop] {
            if let Some(s) = self.platforms.get(&p) {
                let sum: f64 = s.percent.values().sum();
                let _ = writeln!(out, "{:<12} {:>12}", format!("{p} total"), format!("{sum:.2}%"));
            }
        }
        let _ = writeln!(out);
        let _ = writeln!(out, "episodes (kept/seen): {}/{}", self.episodes, self.episodes_seen);
        let _ = writeln!(out, "tasks: {}", self.tasks);
        let _ = writeln!(out, "mean records per episode: {:.2}", self.mean_records_per_episode);
        let _ = writeln!(out, "mean strides per episode: {:.2}", self.mean_strides_per_episode);
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("stats serialize")
    }
}
