//! The reasoning functions behind one interface: goal inference, the guided
//! policy, cross-app goal generation, step annotation, stride summaries, goal
//! revision and text-input generation.
//!
//! Two backends implement [`Reasoner`]: [`ScriptedOracle`], a deterministic
//! search-based stand-in over the simulated world, and [`RemoteReasoner`],
//! which talks to a chat-completion service with the prompt templates in
//! [`prompts`].

pub mod oracle;
pub mod prompts;
pub mod remote;
pub mod reply;

use std::collections::BTreeSet;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::action::{Action, ActionRecord};
use crate::dataset::cost::{CostLedger, PriceRates, TokenUsage};
use crate::env::{AppId, Element, EnvState, GuiWorld, ScreenKey};

pub use oracle::ScriptedOracle;
pub use remote::{ChatMessage, ChatRequest, ChatResponse, ChatTransport, FixtureTransport, HttpTransport, RemoteReasoner, TransportError};
pub use reply::{extract_json_object, parse_reply, ReplyError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GoalOrigin {
    Inferred,
    CrossApp,
    Revised,
}

/// Decidable success predicate for a goal.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SuccessSpec {
    /// Satisfied on any of these screens.
    Screens(BTreeSet<ScreenKey>),
    /// Satisfied on a screen of `app` whose label contains a landmark
    /// (case-insensitive).
    Landmarks { app: AppId, labels: Vec<String> },
}

impl SuccessSpec {
    pub fn holds(&self, world: &GuiWorld, state: &EnvState) -> bool {
        self.holds_at(world, &state.screen_key())
    }

    /// Success is screen-level: it depends on the screen alone.
    pub fn holds_at(&self, world: &GuiWorld, key: &ScreenKey) -> bool {
        match self {
            SuccessSpec::Screens(keys) => keys.contains(key),
            SuccessSpec::Landmarks { app, labels } => {
                &key.app == app && world.screen(key).is_some_and(|s| label_matches(&s.label, labels))
            }
        }
    }

    /// The screens on which the predicate holds.
    pub fn target_screens(&self, world: &GuiWorld) -> BTreeSet<ScreenKey> {
        match self {
            SuccessSpec::Screens(keys) => keys.clone(),
            SuccessSpec::Landmarks { app, labels } => world
                .app(app)
                .map(|a| {
                    a.screens
                        .iter()
                        .filter(|s| label_matches(&s.label, labels))
                        .map(|s| ScreenKey { app: app.clone(), screen: s.screen_id.clone() })
                        .collect()
                })
                .unwrap_or_default(),
        }
    }
}

fn label_matches(label: &str, landmarks: &[String]) -> bool {
    let label = label.to_lowercase();
    landmarks.iter().any(|l| !l.is_empty() && label.contains(&l.to_lowercase()))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Goal {
    pub task_text: String,
    pub first_action_hint: String,
    pub app: AppId,
    pub success_spec: SuccessSpec,
    pub origin: GoalOrigin,
}

impl Goal {
    pub fn is_satisfied(&self, world: &GuiWorld, state: &EnvState) -> bool {
        self.success_spec.holds(world, state)
    }
}

/// A parsed reasoner reply in the JSON shape the prompts request.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ReasonerReply {
    pub thoughts: String,
    pub task: String,
    pub action: String,
    pub app: String,
    /// Any other fields, e.g. `instruction` or `text`.
    pub extra: std::collections::BTreeMap<String, String>,
    pub raw: String,
    pub token_usage: TokenUsage,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Backend {
    Remote,
    ScriptedOracle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReasonerConfig {
    pub endpoint: String,
    pub model_name: String,
    pub temperature: f64,
    pub max_retries: u32,
    pub price_per_million_tokens: PriceRates,
    pub timeout_secs: u64,
    pub max_in_flight: usize,
}

impl Default for ReasonerConfig {
    fn default() -> Self {
        Self {
            endpoint: "https://api.openai.com/v1/chat/completions".into(),
            model_name: "gpt-4o-mini".into(),
            temperature: 0.7,
            max_retries: 2,
            price_per_million_tokens: PriceRates::default(),
            timeout_secs: 60,
            max_in_flight: 8,
        }
    }
}

impl ReasonerConfig {
    pub fn validate(&self) -> Result<(), (&'static str, String)> {
        let r = self.price_per_million_tokens;
        if !(r.prompt >= 0.0 && r.completion >= 0.0) {
            return Err(("price_per_million_tokens", "rates must be nonnegative".into()));
        }
        if !(0.0..=2.0).contains(&self.temperature) {
            return Err(("temperature", format!("{} not in [0, 2]", self.temperature)));
        }
        if self.max_in_flight == 0 {
            return Err(("max_in_flight", "must be at least 1".into()));
        }
        if self.timeout_secs == 0 {
            return Err(("timeout_secs", "must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReasonerError {
    #[error("reply unparseable: {0}")]
    ReplyUnparseable(String),
    #[error("reply names an illegal action: {0}")]
    ReplyIllegalAction(String),
    #[error("reply names the current or an unknown app: {0}")]
    ReplyWrongApp(String),
    #[error("no function node reachable")]
    OracleNoFunctionNode,
    #[error("no reachable alternative goal")]
    NoAlternative,
    #[error("empty trajectory")]
    EmptyTrajectory,
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("transport: {0}")]
    Transport(String),
}

impl ReasonerError {
    /// Format failures worth re-asking about.
    pub fn is_retryable(&self) -> bool {
        matches!(
            self,
            ReasonerError::ReplyUnparseable(_) | ReasonerError::ReplyWrongApp(_) | ReasonerError::Transport(_)
        )
    }
}

/// Per-episode context handed to every reasoning call: the world, the cost
/// ledger every call is billed to, and the seeded generator used for
/// tiebreaks and sampled text. Backends hold no per-episode state.
pub struct ReasonCtx<'a> {
    pub world: &'a GuiWorld,
    pub ledger: &'a mut CostLedger,
    pub rng: &'a mut ChaCha8Rng,
}

pub trait Reasoner: Send + Sync {
    /// Proposes a goal from the state a random walk ended in.
    fn infer_goal(&self, ctx: &mut ReasonCtx<'_>, terminal: &EnvState, walk: &[ActionRecord])
        -> Result<Goal, ReasonerError>;

    /// Next guided action, or `Completed`/`Infeasible` as a phase decision.
    fn select_action(
        &self,
        ctx: &mut ReasonCtx<'_>,
        state: &EnvState,
        goal: &Goal,
        history: &[ActionRecord],
    ) -> Result<Action, ReasonerError>;

    /// A goal in an installed app other than `final_state`'s.
    /// `stride_steps` are the finished stride's step instructions;
    /// `task_history` lists earlier stride summaries, oldest first.
    fn propose_cross_app_goal(
        &self,
        ctx: &mut ReasonCtx<'_>,
        stride_summary: &str,
        stride_steps: &[String],
        task_history: &[String],
        final_state: &EnvState,
        installed_apps: &[AppId],
    ) -> Result<Goal, ReasonerError>;

    fn annotate_step(
        &self,
        ctx: &mut ReasonCtx<'_>,
        prev: &EnvState,
        action: &Action,
        next: &EnvState,
    ) -> Result<String, ReasonerError>;

    /// One task description covering `steps`; `summary_list` holds earlier
    /// summaries for context.
    fn summarize_stride(
        &self,
        ctx: &mut ReasonCtx<'_>,
        steps: &[(EnvState, String)],
        summary_list: &[String],
        goal: Option<&Goal>,
    ) -> Result<String, ReasonerError>;

    fn revise_goal(
        &self,
        ctx: &mut ReasonCtx<'_>,
        state: &EnvState,
        failed: &Goal,
        failure_summary: &str,
    ) -> Result<Goal, ReasonerError>;

    fn generate_text_input(&self, ctx: &mut ReasonCtx<'_>, state: &EnvState, element: &Element) -> String;
}

/// Bills a rendered prompt and reply with the stand-in tokenizer.
pub(crate) fn stand_in_usage(prompt: &prompts::Prompt, reply: &str) -> TokenUsage {
    use crate::dataset::cost::estimate_tokens;
    TokenUsage {
        prompt_tokens: estimate_tokens(&prompt.system) + estimate_tokens(&prompt.user),
        completion_tokens: estimate_tokens(reply),
    }
}
