//! Stride and episode assembly: walk, infer a goal, complete it, annotate;
//! then hand the final state to a cross-app goal for the next stride.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::action::{ActionRecord, Phase, Platform};
use crate::dataset::cost::{CostLedger, PriceRates};
use crate::dataset::{
    filter_records, CostRecord, EpisodeRecord, FilterVerdict, GoalRecord, RecoveryRecord, StepRecord, StrideRecord,
    SCHEMA_VERSION,
};
use crate::env::{record_step, reset, transition, EnvState, GuiWorld};
use crate::guided::{run_guided, GuidedConfig, GuidedSegment, Outcome};
use crate::reasoner::oracle::{step_instruction, switch_action};
use crate::reasoner::{Goal, ReasonCtx, Reasoner, ReasonerError};
use crate::walk::{extend_random_walk, walk_length, WalkConfig, WalkSegment};

/// Everything one episode needs besides the world and the reasoner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeConfig {
    pub n_strides: u32,
    pub walk: WalkConfig,
    pub guided: GuidedConfig,
    pub rates: PriceRates,
}

impl Default for EpisodeConfig {
    fn default() -> Self {
        Self { n_strides: 3, walk: WalkConfig::default(), guided: GuidedConfig::default(), rates: PriceRates::default() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stride {
    pub index: usize,
    pub walk: WalkSegment,
    pub goal: Option<Goal>,
    /// Absent when no goal could be proposed at the walk's end.
    pub guided: Option<GuidedSegment>,
    /// One per record, walk then guided.
    pub step_instructions: Vec<String>,
    pub summary: String,
}

impl Stride {
    pub fn records(&self) -> impl Iterator<Item = &ActionRecord> {
        self.walk.records.iter().chain(self.guided.iter().flat_map(|g| g.records.iter()))
    }

    pub fn record_count(&self) -> usize {
        self.walk.records.len() + self.guided.as_ref().map_or(0, |g| g.records.len())
    }

    pub fn final_state(&self) -> &EnvState {
        match &self.guided {
            Some(g) => g.terminal_state(),
            None => self.walk.terminal_state(),
        }
    }

    pub fn outcome(&self) -> Outcome {
        self.guided.as_ref().map_or(Outcome::Infeasible, |g| g.outcome)
    }

    pub fn reward(&self) -> u8 {
        self.guided.as_ref().map_or(0, |g| g.reward)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Episode {
    pub episode_id: String,
    pub platform: Platform,
    pub world_seed: u64,
    pub episode_seed: u64,
    pub strides: Vec<Stride>,
    pub overall_task: String,
    pub cost: CostLedger,
    pub filter_verdict: FilterVerdict,
    pub early_stop: Option<String>,
}

impl Episode {
    pub fn records(&self) -> impl Iterator<Item = &ActionRecord> {
        self.strides.iter().flat_map(Stride::records)
    }

    pub fn record_count(&self) -> usize {
        self.strides.iter().map(Stride::record_count).sum()
    }

    pub fn to_record(&self) -> EpisodeRecord {
        let strides = self
            .strides
            .iter()
            .map(|s| StrideRecord {
                index: s.index,
                goal: s.goal.as_ref().map(|g| GoalRecord { task_text: g.task_text.clone(), origin: g.origin, app: g.app.clone() }),
                steps: s
                    .records()
                    .zip(&s.step_instructions)
                    .map(|(r, i)| StepRecord { record: r.clone(), instruction: i.clone() })
                    .collect(),
                summary: s.summary.clone(),
                outcome: s.outcome(),
                reward: s.reward(),
                recoveries: s
                    .guided
                    .iter()
                    .flat_map(|g| &g.recoveries)
                    .map(|r| RecoveryRecord {
                        step_index: r.step_index,
                        trigger_reason: r.trigger_reason,
                        revised_task: r.revised_goal.task_text.clone(),
                    })
                    .collect(),
            })
            .collect();
        EpisodeRecord {
            schema_version: SCHEMA_VERSION,
            episode_id: self.episode_id.clone(),
            platform: self.platform,
            world_seed: self.world_seed,
            episode_seed: self.episode_seed,
            filter_verdict: self.filter_verdict,
            overall_task: self.overall_task.clone(),
            strides,
            cost: CostRecord {
                prompt_tokens: self.cost.prompt_tokens(),
                completion_tokens: self.cost.completion_tokens(),
                dollars: self.cost.dollars(),
            },
            early_stop: self.early_stop.clone(),
        }
    }
}

/// The app switch that opens a stride, with the goal it serves.
#[derive(Debug, Clone, PartialEq)]
pub struct StrideStart {
    pub goal: Goal,
    pub pre_state: EnvState,
    pub switch: ActionRecord,
    pub state: EnvState,
}

/// Instructions for every transition of a stride, falling back to the
/// template wording when the reasoner fails.
fn annotate(ctx: &mut ReasonCtx<'_>, reasoner: &dyn Reasoner, segments: &[&[EnvState]], records: &[&ActionRecord]) -> Vec<String> {
    let pairs: Vec<(&EnvState, &EnvState)> = segments.iter().flat_map(|s| s.windows(2).map(|w| (&w[0], &w[1]))).collect();
    debug_assert_eq!(pairs.len(), records.len());
    pairs
        .into_iter()
        .zip(records)
        .map(|((prev, next), r)| {
            reasoner.annotate_step(ctx, prev, &r.action, next).unwrap_or_else(|e| {
                log::debug!("annotation fell back to the template: {e}");
                step_instruction(ctx.world, prev, &r.action, next)
            })
        })
        .collect()
}

/// One stride: walk (after the opening switch, if any), goal, guided
/// completion and annotation. `prior` holds the episode's earlier records;
/// `summaries` the earlier stride summaries.
pub fn run_stride(
    ctx: &mut ReasonCtx<'_>,
    reasoner: &dyn Reasoner,
    index: usize,
    start: &EnvState,
    opening: Option<StrideStart>,
    config: &EpisodeConfig,
    prior: &[ActionRecord],
    summaries: &[String],
) -> Stride {
    let length = walk_length(index as u32, &config.walk) as usize;
    let (mut walk, preset) = match opening {
        Some(o) => {
            let mut w = WalkSegment::start(o.pre_state);
            w.push(o.switch, o.state);
            (w, Some(o.goal))
        }
        None => (WalkSegment::start(start.clone()), None),
    };
    let remaining = length.saturating_sub(walk.records.len());
    extend_random_walk(ctx, reasoner, &mut walk, remaining, 0);

    let mut history: Vec<ActionRecord> = prior.to_vec();
    history.extend(walk.records.iter().cloned());
    let goal = match preset {
        Some(g) => Some(g),
        None => match reasoner.infer_goal(ctx, walk.terminal_state(), &history) {
            Ok(g) => Some(g),
            Err(e) => {
                log::debug!("stride {index}: no goal ({e})");
                None
            }
        },
    };
    let guided = goal.as_ref().map(|g| {
        run_guided(ctx, reasoner, walk.terminal_state(), g.clone(), &config.guided, &history, walk.records.len())
    });

    let mut segments: Vec<&[EnvState]> = vec![&walk.states];
    let mut records: Vec<&ActionRecord> = walk.records.iter().collect();
    if let Some(g) = &guided {
        segments.push(&g.states);
        records.extend(g.records.iter());
    }
    let step_instructions = annotate(ctx, reasoner, &segments, &records);

    let posts: Vec<&EnvState> = segments.iter().flat_map(|s| s.iter().skip(1)).collect();
    let steps: Vec<(EnvState, String)> =
        posts.into_iter().cloned().zip(step_instructions.iter().cloned()).collect();
    let summary_goal = guided.as_ref().map(|g| &g.final_goal);
    let summary = reasoner
        .summarize_stride(ctx, &steps, summaries, summary_goal)
        .ok()
        .filter(|s| !s.trim().is_empty())
        .unwrap_or_else(|| match summary_goal {
            Some(g) => g.task_text.clone(),
            None => step_instructions.join(" "),
        });
    // A stride always has at least one record, so this never stays empty.
    let summary = if summary.trim().is_empty() { "Wait on the current screen.".to_string() } else { summary };

    Stride { index, walk, goal, guided, step_instructions, summary }
}

/// Asks for a goal in another app and performs the switch into it.
pub fn initiate_next_stride(
    ctx: &mut ReasonCtx<'_>,
    reasoner: &dyn Reasoner,
    prev: &Stride,
    task_history: &[String],
) -> Result<StrideStart, ReasonerError> {
    let state = prev.final_state().clone();
    let apps = ctx.world.app_ids();
    let goal = reasoner.propose_cross_app_goal(ctx, &prev.summary, &prev.step_instructions, task_history, &state, &apps)?;
    let action = switch_action(ctx.world, &goal.app)
        .ok_or_else(|| ReasonerError::Precondition(format!("no way to switch to `{}`", goal.app)))?;
    let next = transition(ctx.world, &state, &action).map_err(|e| ReasonerError::ReplyIllegalAction(e.to_string()))?;
    let switch = record_step(ctx.world, 0, Phase::RandomWalk, &state, &action, &next);
    Ok(StrideStart { goal, pre_state: state, switch, state: next })
}

/// The generator seed for one episode: the episode seed, salted.
pub fn episode_rng(episode_seed: u64, walk: &WalkConfig) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(episode_seed ^ walk.rng_seed.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

pub fn run_episode(
    world: &GuiWorld,
    reasoner: &dyn Reasoner,
    episode_index: u64,
    episode_seed: u64,
    config: &EpisodeConfig,
) -> Episode {
    let mut rng = episode_rng(episode_seed, &config.walk);
    let mut ledger = CostLedger::new(config.rates);
    let mut ctx = ReasonCtx { world, ledger: &mut ledger, rng: &mut rng };

    let apps = world.app_ids();
    let app = apps.choose(ctx.rng).expect("worlds have at least one app").clone();
    let mut state = reset(world, app.as_str()).expect("installed app");
    let mut strides: Vec<Stride> = Vec::new();
    let mut summaries: Vec<String> = Vec::new();
    let mut history: Vec<ActionRecord> = Vec::new();
    let mut opening = None;
    let mut early_stop = None;

    for i in 0..config.n_strides.max(1) as usize {
        let stride = run_stride(&mut ctx, reasoner, i, &state, opening.take(), config, &history, &summaries);
        let stop = if stride.goal.is_none() {
            Some("no goal could be proposed".to_string())
        } else if stride.guided.as_ref().is_some_and(|g| g.no_alternative) {
            Some("no alternative goal after a stall".to_string())
        } else {
            None
        };
        state = stride.final_state().clone();
        history.extend(stride.records().cloned());
        let last = i + 1 == config.n_strides as usize;
        if stop.is_none() && !last {
            match initiate_next_stride(&mut ctx, reasoner, &stride, &summaries) {
                Ok(o) => opening = Some(o),
                Err(e) => early_stop = Some(format!("cross-app initiation failed: {e}")),
            }
        }
        summaries.push(stride.summary.clone());
        strides.push(stride);
        if let Some(s) = stop {
            early_stop = Some(s);
        }
        if early_stop.is_some() {
            break;
        }
    }

    // The whole session: every step, with the stride summaries as subtasks.
    let steps: Vec<(EnvState, String)> = strides
        .iter()
        .flat_map(|s| {
            let posts = s.walk.states.iter().skip(1).chain(s.guided.iter().flat_map(|g| g.states.iter().skip(1)));
            posts.cloned().zip(s.step_instructions.iter().cloned())
        })
        .collect();
    let overall_task = reasoner
        .summarize_stride(&mut ctx, &steps, &summaries, None)
        .ok()
        .filter(|s| !s.trim().is_empty())
        .unwrap_or_else(|| summaries.join(" "));
    let filter_verdict = filter_records(strides.iter().flat_map(Stride::records));
    Episode {
        episode_id: format!("{}-{:08x}-{:06}", world.platform, world.seed as u32, episode_index),
        platform: world.platform,
        world_seed: world.seed,
        episode_seed,
        strides,
        overall_task,
        cost: ledger,
        filter_verdict,
        early_stop,
    }
}

#[cfg(test)]
mod tests;
