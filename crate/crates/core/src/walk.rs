//! The random-walk phase: a uniform policy over action kinds, then over the
//! elements affording the drawn kind, with a walk length that decays across
//! strides.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::action::{Action, ActionKind, ActionRecord, Direction, Phase};
use crate::env::{available_actions, drag_action, pointer_action, record_step, transition, Available, EnvState, GuiWorld};
use crate::reasoner::{ReasonCtx, Reasoner};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WalkConfig {
    pub initial_length: u32,
    pub decay: f64,
    pub min_length: u32,
    /// Salt mixed into each episode's generator.
    pub rng_seed: u64,
}

impl Default for WalkConfig {
    fn default() -> Self {
        Self { initial_length: 8, decay: 0.6, min_length: 2, rng_seed: 0 }
    }
}

impl WalkConfig {
    pub fn validate(&self) -> Result<(), (&'static str, String)> {
        if self.min_length == 0 {
            return Err(("min_length", "must be at least 1".into()));
        }
        if self.initial_length < self.min_length {
            return Err(("initial_length", format!("{} is below min_length {}", self.initial_length, self.min_length)));
        }
        if !(self.decay > 0.0 && self.decay <= 1.0) {
            return Err(("decay", format!("{} not in (0, 1]", self.decay)));
        }
        Ok(())
    }
}

/// `max(L_min, round(L0 * decay^i))`.
pub fn walk_length(stride_index: u32, config: &WalkConfig) -> u32 {
    let raw = (config.initial_length as f64 * config.decay.powi(stride_index.min(i32::MAX as u32) as i32)).round();
    (raw as u32).max(config.min_length)
}

/// The walk policy's support: what `available_actions` offers, minus phase
/// decisions and app switching (launchers, `Launch`, `PressHome`).
pub fn walk_actions(world: &GuiWorld, state: &EnvState) -> Vec<Available> {
    available_actions(world, state)
        .into_iter()
        .filter(|a| {
            !a.kind.is_decision()
                && !matches!(a.kind, ActionKind::Launch | ActionKind::PressHome)
                && a.element
                    .as_ref()
                    .is_none_or(|id| world.find_element(state, id).is_some_and(|e| e.launches.is_none()))
        })
        .collect()
}

/// Distinct kinds in the walk support, in kind order.
pub fn walk_kinds(world: &GuiWorld, state: &EnvState) -> Vec<ActionKind> {
    let mut kinds: Vec<ActionKind> = walk_actions(world, state).iter().map(|a| a.kind).collect();
    kinds.dedup();
    kinds
}

/// Draws a kind uniformly, then an element uniformly among those affording it.
pub fn sample_action(world: &GuiWorld, state: &EnvState, rng: &mut impl Rng) -> Available {
    let support = walk_actions(world, state);
    let mut by_kind: BTreeMap<ActionKind, Vec<&Available>> = BTreeMap::new();
    for a in &support {
        by_kind.entry(a.kind).or_default().push(a);
    }
    let kinds: Vec<ActionKind> = by_kind.keys().copied().collect();
    // Wait is always available, so the support is never empty.
    let kind = kinds[rng.gen_range(0..kinds.len())];
    let options = &by_kind[&kind];
    options[rng.gen_range(0..options.len())].clone()
}

const HOTKEYS: &[&str] = &["ctrl+c", "ctrl+v", "ctrl+z", "ctrl+f", "ctrl+s", "esc"];

/// Fills in the payload of a sampled (kind, element) pair.
pub fn realize(
    ctx: &mut ReasonCtx<'_>,
    reasoner: &dyn Reasoner,
    state: &EnvState,
    choice: &Available,
) -> Action {
    let world = ctx.world;
    let element = choice.element.as_ref().and_then(|id| world.find_element(state, id));
    match choice.kind {
        ActionKind::Click | ActionKind::LongPress | ActionKind::LeftDouble | ActionKind::RightSingle => {
            pointer_action(choice.kind, element.expect("pointer kinds are element-bound")).expect("pointer kind")
        }
        ActionKind::Drag => drag_action(world.platform, element.expect("drag is element-bound")),
        ActionKind::Type => {
            let el = element.expect("type is element-bound");
            Action::Type { content: reasoner.generate_text_input(ctx, state, el) }
        }
        ActionKind::Scroll => Action::Scroll { direction: *Direction::ALL.choose(ctx.rng).expect("four directions") },
        ActionKind::HotKey => Action::HotKey { key: HOTKEYS.choose(ctx.rng).expect("hotkeys").to_string() },
        ActionKind::Wait => Action::Wait,
        ActionKind::PressBack => Action::PressBack,
        ActionKind::PressEnter => Action::PressEnter,
        ActionKind::PressHome => Action::PressHome,
        ActionKind::Launch | ActionKind::Completed | ActionKind::Infeasible => {
            unreachable!("{} is outside the walk support", choice.kind)
        }
    }
}

/// A walk's records with every state it passed through: `states[0]` is the
/// start and `states[k + 1]` the post-state of `records[k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct WalkSegment {
    pub records: Vec<ActionRecord>,
    pub states: Vec<EnvState>,
}

impl WalkSegment {
    pub fn start(state: EnvState) -> Self {
        Self { records: Vec::new(), states: vec![state] }
    }

    pub fn terminal_state(&self) -> &EnvState {
        self.states.last().expect("a segment always has its start state")
    }

    pub fn push(&mut self, record: ActionRecord, post: EnvState) {
        self.records.push(record);
        self.states.push(post);
    }
}

/// Takes `length` sampled steps, continuing `segment`. Record indices
/// continue from the segment's last record.
pub fn extend_random_walk(
    ctx: &mut ReasonCtx<'_>,
    reasoner: &dyn Reasoner,
    segment: &mut WalkSegment,
    length: usize,
    first_index: usize,
) {
    for _ in 0..length {
        let state = segment.terminal_state().clone();
        let choice = sample_action(ctx.world, &state, ctx.rng);
        let action = realize(ctx, reasoner, &state, &choice);
        let next = transition(ctx.world, &state, &action).expect("sampled actions are available");
        let index = first_index + segment.records.len();
        segment.push(record_step(ctx.world, index, Phase::RandomWalk, &state, &action, &next), next);
    }
}

pub fn run_random_walk(ctx: &mut ReasonCtx<'_>, reasoner: &dyn Reasoner, start: &EnvState, length: usize) -> WalkSegment {
    let mut segment = WalkSegment::start(start.clone());
    extend_random_walk(ctx, reasoner, &mut segment, length, 0);
    segment
}

/// Pearson goodness-of-fit against the uniform distribution:
/// `(statistic, p-value)`.
pub fn chi_square_uniform(counts: &[u64]) -> (f64, f64) {
    let k = counts.len();
    if k < 2 {
        return (0.0, 1.0);
    }
    let n: u64 = counts.iter().sum();
    let expected = n as f64 / k as f64;
    let stat: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    let dist = ChiSquared::new((k - 1) as f64).expect("positive degrees of freedom");
    (stat, 1.0 - dist.cdf(stat))
}

#[cfg(test)]
mod tests;
