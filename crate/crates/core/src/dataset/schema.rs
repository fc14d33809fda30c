//! The JSON-lines episode schema.

use serde::{Deserialize, Serialize};

use crate::action::{ActionRecord, Platform};
use crate::env::AppId;
use crate::guided::{Outcome, TriggerReason};
use crate::reasoner::GoalOrigin;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FilterVerdict {
    Kept,
    DroppedLogin,
    DroppedSystemSideEffect,
}

impl FilterVerdict {
    pub fn is_kept(self) -> bool {
        self == FilterVerdict::Kept
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub schema_version: u32,
    pub episode_id: String,
    pub platform: Platform,
    pub world_seed: u64,
    pub episode_seed: u64,
    pub filter_verdict: FilterVerdict,
    pub overall_task: String,
    pub strides: Vec<StrideRecord>,
    pub cost: CostRecord,
    /// Why the episode has fewer strides than configured.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub early_stop: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StrideRecord {
    pub index: usize,
    /// Absent when no goal could be proposed.
    pub goal: Option<GoalRecord>,
    pub steps: Vec<StepRecord>,
    pub summary: String,
    pub outcome: Outcome,
    pub reward: u8,
    pub recoveries: Vec<RecoveryRecord>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoalRecord {
    pub task_text: String,
    pub origin: GoalOrigin,
    pub app: AppId,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepRecord {
    #[serde(flatten)]
    pub record: ActionRecord,
    pub instruction: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecoveryRecord {
    pub step_index: usize,
    pub trigger_reason: TriggerReason,
    pub revised_task: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostRecord {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
    pub dollars: f64,
}

impl EpisodeRecord {
    pub fn records(&self) -> impl Iterator<Item = &ActionRecord> {
        self.strides.iter().flat_map(|s| s.steps.iter().map(|st| &st.record))
    }

    pub fn record_count(&self) -> usize {
        self.strides.iter().map(|s| s.steps.len()).sum()
    }

    /// One JSON line, without the newline.
    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("episode records always serialize")
    }

    pub fn from_line(line: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(line)
    }
}
