//! Goal-conditioned completion with a sparse reward, plus the recovery loop:
//! a stall detector over the records since the last goal change, and goal
//! revision when it fires.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::action::{encode_action, Action, ActionRecord, Phase};
use crate::env::{record_step, transition, EnvState, GuiWorld, ScreenKey};
use crate::reasoner::{Goal, ReasonCtx, Reasoner, ReasonerError};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GuidedConfig {
    /// Policy decisions allowed per goal.
    pub step_budget: u32,
    pub target_atomic_actions: u32,
    /// R: repeats of one (screen, action) pair that count as a cycle.
    pub stall_repeat_threshold: u32,
    /// W: how many recent records the cycle check looks at.
    pub stall_window: u32,
    /// K: records without a new screen before progress counts as stalled.
    pub no_progress_limit: u32,
    pub max_recoveries: u32,
}

impl Default for GuidedConfig {
    fn default() -> Self {
        Self {
            step_budget: 12,
            target_atomic_actions: 3,
            stall_repeat_threshold: 2,
            stall_window: 8,
            no_progress_limit: 6,
            max_recoveries: 2,
        }
    }
}

impl GuidedConfig {
    pub fn validate(&self) -> Result<(), (&'static str, String)> {
        for (name, v) in [
            ("step_budget", self.step_budget),
            ("target_atomic_actions", self.target_atomic_actions),
            ("stall_repeat_threshold", self.stall_repeat_threshold),
            ("stall_window", self.stall_window),
            ("no_progress_limit", self.no_progress_limit),
        ] {
            if v == 0 {
                return Err((name, "must be at least 1".into()));
            }
        }
        if self.stall_window < self.stall_repeat_threshold {
            return Err(("stall_window", "must be at least stall_repeat_threshold".into()));
        }
        if self.step_budget < self.target_atomic_actions {
            return Err(("step_budget", "must be at least target_atomic_actions".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Outcome {
    Completed,
    Infeasible,
    BudgetExhausted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TriggerReason {
    RepeatCycle,
    NoNewState,
    /// The policy's reply was unusable: unparseable, not executable, or a
    /// premature `Completed()`.
    IllegalReply,
    /// The policy answered `Infeasible()`.
    DeclaredInfeasible,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryEvent {
    /// Records taken before the trigger fired.
    pub step_index: usize,
    /// Where the failed goal's records began.
    pub window_start: usize,
    pub trigger_reason: TriggerReason,
    pub failed_goal: Goal,
    pub revised_goal: Goal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GuidedSegment {
    pub records: Vec<ActionRecord>,
    /// `states[0]` is the start; `states[k + 1]` follows `records[k]`.
    pub states: Vec<EnvState>,
    pub outcome: Outcome,
    pub reward: u8,
    pub recoveries: Vec<RecoveryEvent>,
    /// The trigger that ended the segment as Infeasible, if any.
    pub final_trigger: Option<TriggerReason>,
    /// Revision found nothing else to try.
    pub no_alternative: bool,
    /// The goal active at the end.
    pub final_goal: Goal,
}

impl GuidedSegment {
    pub fn terminal_state(&self) -> &EnvState {
        self.states.last().expect("a segment always has its start state")
    }
}

/// 1 iff the goal's success predicate holds.
pub fn sparse_reward(world: &GuiWorld, state: &EnvState, goal: &Goal) -> u8 {
    u8::from(goal.is_satisfied(world, state))
}

/// Checks `history` (the records since the last goal change) for a stall.
/// Never fires once the goal is met at the end of `history`.
pub fn detect_stall(
    world: &GuiWorld,
    history: &[ActionRecord],
    goal: &Goal,
    config: &GuidedConfig,
) -> Option<TriggerReason> {
    let last = history.last()?;
    if goal.success_spec.holds_at(world, &last.post_screen) {
        return None;
    }
    let window = &history[history.len().saturating_sub(config.stall_window as usize)..];
    let mut pairs: HashMap<(&ScreenKey, String), u32> = HashMap::new();
    for r in window {
        let n = pairs.entry((&r.pre_screen, encode_action(&r.action))).or_default();
        *n += 1;
        if *n >= config.stall_repeat_threshold {
            return Some(TriggerReason::RepeatCycle);
        }
    }
    let k = config.no_progress_limit as usize;
    if history.len() >= k {
        let mut seen = BTreeSet::from([&history[0].pre_screen]);
        let fresh: Vec<bool> = history.iter().map(|r| seen.insert(&r.post_screen)).collect();
        if !fresh[fresh.len() - k..].iter().any(|&f| f) {
            return Some(TriggerReason::NoNewState);
        }
    }
    None
}

fn failure_summary(world: &GuiWorld, records: &[ActionRecord], goal: &Goal, reason: TriggerReason) -> String {
    let why = match reason {
        TriggerReason::RepeatCycle => "the same action kept repeating on the same screen",
        TriggerReason::NoNewState => "no new screen appeared for several actions",
        TriggerReason::IllegalReply => "the proposed action could not be executed",
        TriggerReason::DeclaredInfeasible => "the task was judged infeasible from here",
    };
    format!(
        "Attempted \"{}\" with {} action(s); stopped because {why}.\n{}",
        goal.task_text,
        records.len(),
        crate::reasoner::prompts::render_history(world, records)
    )
}

/// Runs the guided loop from `start`. `context` holds the records that came
/// before (shown to the policy as history); record indices continue from
/// `first_index`.
pub fn run_guided(
    ctx: &mut ReasonCtx<'_>,
    reasoner: &dyn Reasoner,
    start: &EnvState,
    goal: Goal,
    config: &GuidedConfig,
    context: &[ActionRecord],
    first_index: usize,
) -> GuidedSegment {
    let world = ctx.world;
    let mut goal = goal;
    let mut records: Vec<ActionRecord> = Vec::new();
    let mut states = vec![start.clone()];
    let mut history: Vec<ActionRecord> = context.to_vec();
    let mut recoveries = Vec::new();
    let mut window_start = 0usize;
    let mut decisions = 0u32;
    let mut phase = Phase::Guided;
    let mut pending: Option<TriggerReason> = None;
    let mut final_trigger = None;
    let mut no_alternative = false;

    let outcome = loop {
        let state = states.last().expect("start state").clone();
        if goal.is_satisfied(world, &state) {
            break Outcome::Completed;
        }
        let trigger = pending.take().or_else(|| detect_stall(world, &records[window_start..], &goal, config));
        if let Some(reason) = trigger {
            if recoveries.len() >= config.max_recoveries as usize {
                final_trigger = Some(reason);
                break Outcome::Infeasible;
            }
            let summary = failure_summary(world, &records[window_start..], &goal, reason);
            match reasoner.revise_goal(ctx, &state, &goal, &summary) {
                Ok(revised) => {
                    log::debug!("recovery after {} records: {reason:?}", records.len());
                    recoveries.push(RecoveryEvent {
                        step_index: records.len(),
                        window_start,
                        trigger_reason: reason,
                        failed_goal: std::mem::replace(&mut goal, revised.clone()),
                        revised_goal: revised,
                    });
                    window_start = records.len();
                    decisions = 0;
                    phase = Phase::Recovery;
                    continue;
                }
                Err(e) => {
                    no_alternative = e == ReasonerError::NoAlternative;
                    final_trigger = Some(reason);
                    break Outcome::Infeasible;
                }
            }
        }
        if decisions >= config.step_budget {
            break Outcome::BudgetExhausted;
        }
        decisions += 1;
        match reasoner.select_action(ctx, &state, &goal, &history) {
            // The goal was checked above, so a claimed completion is premature.
            Ok(Action::Completed) => pending = Some(TriggerReason::IllegalReply),
            Ok(Action::Infeasible) => pending = Some(TriggerReason::DeclaredInfeasible),
            Ok(action) => match transition(world, &state, &action) {
                Ok(next) => {
                    let record = record_step(world, first_index + records.len(), phase, &state, &action, &next);
                    history.push(record.clone());
                    records.push(record);
                    states.push(next);
                }
                Err(_) => pending = Some(TriggerReason::IllegalReply),
            },
            Err(e) => {
                log::debug!("policy reply rejected: {e}");
                pending = Some(TriggerReason::IllegalReply);
            }
        }
    };
    GuidedSegment {
        reward: u8::from(outcome == Outcome::Completed),
        records,
        states,
        outcome,
        recoveries,
        final_trigger,
        no_alternative,
        final_goal: goal,
    }
}

#[cfg(test)]
mod tests;
