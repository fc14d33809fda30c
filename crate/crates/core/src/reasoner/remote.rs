//! Chat-completion backend.
//!
//! Every request, retried or not, is billed to the episode ledger: with the
//! service's usage figures when the response carries them, otherwise with the
//! stand-in tokenizer.

use std::collections::VecDeque;
use std::sync::{Condvar, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::prompts::{self, Prompt};
use super::reply::parse_reply;
use super::{stand_in_usage, Goal, GoalOrigin, ReasonCtx, Reasoner, ReasonerConfig, ReasonerError, ReasonerReply, SuccessSpec};
use crate::action::{decode_action, Action, ActionRecord};
use crate::dataset::cost::{CallKind, TokenUsage};
use crate::env::{transition, AppId, Element, EnvState, GuiWorld};

pub const API_KEY_VAR: &str = "REWALK_API_KEY";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model: String,
    pub messages: Vec<ChatMessage>,
    pub temperature: f64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChatResponse {
    pub content: String,
    pub usage: Option<TokenUsage>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TransportError {
    #[error("request failed: {0}")]
    Request(String),
    #[error("service returned status {status}: {body}")]
    Status { status: u16, body: String },
    #[error("malformed response: {0}")]
    Malformed(String),
}

pub trait ChatTransport: Send + Sync {
    fn send(&self, request: &ChatRequest) -> Result<ChatResponse, TransportError>;
}

/// Counting semaphore bounding concurrent requests.
#[derive(Debug)]
struct Slots {
    free: Mutex<usize>,
    cv: Condvar,
}

impl Slots {
    fn new(n: usize) -> Self {
        Self { free: Mutex::new(n.max(1)), cv: Condvar::new() }
    }

    fn acquire(&self) -> SlotGuard<'_> {
        let mut free = self.free.lock().expect("slots poisoned");
        while *free == 0 {
            free = self.cv.wait(free).expect("slots poisoned");
        }
        *free -= 1;
        SlotGuard(self)
    }
}

struct SlotGuard<'a>(&'a Slots);

impl Drop for SlotGuard<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().expect("slots poisoned") += 1;
        self.0.cv.notify_one();
    }
}

/// JSON-over-HTTP transport in the common hosted chat-completion shape,
/// authenticated with a bearer token from `REWALK_API_KEY`.
pub struct HttpTransport {
    client: reqwest::blocking::Client,
    endpoint: String,
    api_key: Option<String>,
    slots: Slots,
}

#[derive(Deserialize)]
struct WireResponse {
    choices: Vec<WireChoice>,
    usage: Option<WireUsage>,
}

#[derive(Deserialize)]
struct WireChoice {
    message: ChatMessage,
}

#[derive(Deserialize)]
struct WireUsage {
    prompt_tokens: u64,
    completion_tokens: u64,
}

impl HttpTransport {
    pub fn new(config: &ReasonerConfig, api_key: Option<String>) -> Result<Self, TransportError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(config.timeout_secs))
            .build()
            .map_err(|e| TransportError::Request(e.to_string()))?;
        Ok(Self { client, endpoint: config.endpoint.clone(), api_key, slots: Slots::new(config.max_in_flight) })
    }

    pub fn from_env(config: &ReasonerConfig) -> Result<Self, TransportError> {
        Self::new(config, std::env::var(API_KEY_VAR).ok().filter(|k| !k.is_empty()))
    }
}

/// Reads a service response body.
pub fn parse_wire_response(body: &str) -> Result<ChatResponse, TransportError> {
    let wire: WireResponse = serde_json::from_str(body).map_err(|e| TransportError::Malformed(e.to_string()))?;
    let choice = wire.choices.into_iter().next().ok_or_else(|| TransportError::Malformed("no choices".into()))?;
    Ok(ChatResponse {
        content: choice.message.content,
        usage: wire.usage.map(|u| TokenUsage { prompt_tokens: u.prompt_tokens, completion_tokens: u.completion_tokens }),
    })
}

impl ChatTransport for HttpTransport {
    fn send(&self, request: &ChatRequest) -> Result<ChatResponse, TransportError> {
        let _slot = self.slots.acquire();
        let body = serde_json::to_string(request).map_err(|e| TransportError::Request(e.to_string()))?;
        let mut req = self.client.post(&self.endpoint).header("content-type", "application/json").body(body);
        if let Some(key) = &self.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req.send().map_err(|e| TransportError::Request(e.to_string()))?;
        let status = resp.status();
        let text = resp.text().map_err(|e| TransportError::Request(e.to_string()))?;
        if !status.is_success() {
            return Err(TransportError::Status { status: status.as_u16(), body: text });
        }
        parse_wire_response(&text)
    }
}

/// Replays canned responses in order and keeps every request it saw.
#[derive(Debug, Default)]
pub struct FixtureTransport {
    replies: Mutex<VecDeque<Result<ChatResponse, TransportError>>>,
    seen: Mutex<Vec<ChatRequest>>,
}

impl FixtureTransport {
    pub fn new(replies: impl IntoIterator<Item = Result<ChatResponse, TransportError>>) -> Self {
        Self { replies: Mutex::new(replies.into_iter().collect()), seen: Mutex::default() }
    }

    /// Plain-text replies without usage figures.
    pub fn texts<S: Into<String>>(replies: impl IntoIterator<Item = S>) -> Self {
        Self::new(replies.into_iter().map(|s| Ok(ChatResponse { content: s.into(), usage: None })))
    }

    pub fn requests(&self) -> Vec<ChatRequest> {
        self.seen.lock().expect("fixture poisoned").clone()
    }
}

impl ChatTransport for FixtureTransport {
    fn send(&self, request: &ChatRequest) -> Result<ChatResponse, TransportError> {
        self.seen.lock().expect("fixture poisoned").push(request.clone());
        self.replies
            .lock()
            .expect("fixture poisoned")
            .pop_front()
            .unwrap_or_else(|| Err(TransportError::Request("fixture exhausted".into())))
    }
}

pub struct RemoteReasoner {
    transport: Box<dyn ChatTransport>,
    config: ReasonerConfig,
}

impl RemoteReasoner {
    pub fn new(transport: Box<dyn ChatTransport>, config: ReasonerConfig) -> Self {
        Self { transport, config }
    }

    /// Sends `prompt`, re-asking with a correction note while `accept`
    /// rejects the reply with a retryable error and retries remain.
    fn ask<T>(
        &self,
        ctx: &mut ReasonCtx<'_>,
        call: CallKind,
        prompt: &Prompt,
        required: &[&str],
        mut accept: impl FnMut(&GuiWorld, ReasonerReply) -> Result<T, ReasonerError>,
    ) -> Result<T, ReasonerError> {
        let mut user = prompt.user.clone();
        let mut attempt = 0;
        loop {
            let request = ChatRequest {
                model: self.config.model_name.clone(),
                messages: vec![
                    ChatMessage { role: "system".into(), content: prompt.system.clone() },
                    ChatMessage { role: "user".into(), content: user.clone() },
                ],
                temperature: self.config.temperature,
            };
            let sent = Prompt { system: prompt.system.clone(), user: user.clone() };
            let outcome = match self.transport.send(&request) {
                Ok(resp) => {
                    let usage = resp.usage.unwrap_or_else(|| stand_in_usage(&sent, &resp.content));
                    ctx.ledger.push(call, usage);
                    match parse_reply(&resp.content, required) {
                        Ok(mut reply) => {
                            reply.token_usage = usage;
                            accept(ctx.world, reply)
                        }
                        Err(e) => Err(ReasonerError::ReplyUnparseable(e.to_string())),
                    }
                }
                Err(e) => {
                    ctx.ledger.push(call, stand_in_usage(&sent, ""));
                    Err(ReasonerError::Transport(e.to_string()))
                }
            };
            match outcome {
                Err(e) if e.is_retryable() && attempt < self.config.max_retries => {
                    attempt += 1;
                    log::debug!("{call:?} attempt {attempt} rejected: {e}");
                    user = format!(
                        "{}\n\nNote: your previous reply was rejected ({e}). Reply again with only the JSON object in the requested format.",
                        prompt.user
                    );
                }
                other => return other,
            }
        }
    }
}

fn resolve_app(world: &GuiWorld, installed: &[AppId], name: &str) -> Option<AppId> {
    let name = name.trim().trim_matches(|c| c == '\'' || c == '"');
    installed
        .iter()
        .find(|a| {
            a.as_str().eq_ignore_ascii_case(name) || world.app(a).is_some_and(|s| s.name.eq_ignore_ascii_case(name))
        })
        .cloned()
}

/// Landmarks for a free-text task: labels of the app's screens named in the
/// text, else its quoted phrases, else the text itself.
pub fn landmarks(world: &GuiWorld, app: &AppId, task: &str) -> Vec<String> {
    let lower = task.to_lowercase();
    let mut named: Vec<String> = world
        .app(app)
        .map(|a| {
            a.screens
                .iter()
                .filter(|s| s.screen_id != a.entry_screen && lower.contains(&s.label.to_lowercase()))
                .map(|s| s.label.clone())
                .collect()
        })
        .unwrap_or_default();
    if named.is_empty() {
        named = task.split(['"', '\u{201c}', '\u{201d}']).skip(1).step_by(2).map(str::to_string).collect();
    }
    named.retain(|l| !l.trim().is_empty());
    if named.is_empty() {
        named.push(task.to_string());
    }
    named.sort();
    named.dedup();
    named
}

fn remote_goal(world: &GuiWorld, reply: ReasonerReply, app: AppId, origin: GoalOrigin) -> Goal {
    let labels = landmarks(world, &app, &reply.task);
    Goal {
        task_text: reply.task,
        first_action_hint: reply.action,
        app: app.clone(),
        success_spec: SuccessSpec::Landmarks { app, labels },
        origin,
    }
}

impl Reasoner for RemoteReasoner {
    fn infer_goal(
        &self,
        ctx: &mut ReasonCtx<'_>,
        terminal: &EnvState,
        walk: &[ActionRecord],
    ) -> Result<Goal, ReasonerError> {
        let prompt = prompts::infer_goal(ctx.world, terminal, walk);
        let app = terminal.app_id.clone();
        self.ask(ctx, CallKind::InferGoal, &prompt, &["task"], |world, reply| {
            Ok(remote_goal(world, reply, app.clone(), GoalOrigin::Inferred))
        })
    }

    fn select_action(
        &self,
        ctx: &mut ReasonCtx<'_>,
        state: &EnvState,
        goal: &Goal,
        history: &[ActionRecord],
    ) -> Result<Action, ReasonerError> {
        let prompt = prompts::select_action(ctx.world, state, &goal.task_text, history);
        self.ask(ctx, CallKind::SelectAction, &prompt, &["action"], |world, reply| {
            let action = decode_action(&reply.action)
                .map_err(|e| ReasonerError::ReplyUnparseable(format!("action `{}`: {e}", reply.action)))?;
            if !action.kind().is_decision() {
                transition(world, state, &action).map_err(|e| ReasonerError::ReplyIllegalAction(e.to_string()))?;
            }
            Ok(action)
        })
    }

    fn propose_cross_app_goal(
        &self,
        ctx: &mut ReasonCtx<'_>,
        stride_summary: &str,
        stride_steps: &[String],
        task_history: &[String],
        final_state: &EnvState,
        installed_apps: &[AppId],
    ) -> Result<Goal, ReasonerError> {
        let distinct: std::collections::BTreeSet<&AppId> = installed_apps.iter().collect();
        if distinct.len() < 2 {
            return Err(ReasonerError::Precondition("cross-app goals need at least 2 installed apps".into()));
        }
        let prompt = prompts::cross_app(ctx.world, stride_summary, stride_steps, task_history, final_state, installed_apps);
        let current = final_state.app_id.clone();
        self.ask(ctx, CallKind::CrossAppGoal, &prompt, &["task", "app"], |world, reply| {
            match resolve_app(world, installed_apps, &reply.app) {
                Some(app) if app != current => Ok(remote_goal(world, reply, app, GoalOrigin::CrossApp)),
                Some(_) => Err(ReasonerError::ReplyWrongApp(format!("`{}` is the current app", reply.app))),
                None => Err(ReasonerError::ReplyWrongApp(format!("`{}` is not installed", reply.app))),
            }
        })
    }

    fn annotate_step(
        &self,
        ctx: &mut ReasonCtx<'_>,
        prev: &EnvState,
        action: &Action,
        next: &EnvState,
    ) -> Result<String, ReasonerError> {
        let prompt = prompts::annotate_step(ctx.world, prev, action, next);
        self.ask(ctx, CallKind::AnnotateStep, &prompt, &["instruction"], |_, mut reply| {
            Ok(reply.extra.remove("instruction").unwrap_or_default())
        })
    }

    fn summarize_stride(
        &self,
        ctx: &mut ReasonCtx<'_>,
        steps: &[(EnvState, String)],
        summary_list: &[String],
        _goal: Option<&Goal>,
    ) -> Result<String, ReasonerError> {
        if steps.is_empty() {
            return Err(ReasonerError::EmptyTrajectory);
        }
        let prompt = prompts::summarize(ctx.world, steps, summary_list);
        self.ask(ctx, CallKind::Summarize, &prompt, &["task"], |_, reply| Ok(reply.task))
    }

    fn revise_goal(
        &self,
        ctx: &mut ReasonCtx<'_>,
        state: &EnvState,
        failed: &Goal,
        failure_summary: &str,
    ) -> Result<Goal, ReasonerError> {
        let prompt = prompts::revise_goal(ctx.world, state, &failed.task_text, failure_summary);
        let installed = ctx.world.app_ids();
        self.ask(ctx, CallKind::ReviseGoal, &prompt, &["task"], |world, reply| {
            let app = resolve_app(world, &installed, &reply.app).unwrap_or_else(|| state.app_id.clone());
            let goal = remote_goal(world, reply, app, GoalOrigin::Revised);
            if goal.success_spec == failed.success_spec {
                return Err(ReasonerError::ReplyUnparseable("revised goal repeats the failed goal".into()));
            }
            Ok(goal)
        })
    }

    fn generate_text_input(&self, ctx: &mut ReasonCtx<'_>, state: &EnvState, element: &Element) -> String {
        let prompt = prompts::text_input(ctx.world, state, element);
        self.ask(ctx, CallKind::TextInput, &prompt, &["text"], |_, mut reply| {
            Ok(reply.extra.remove("text").unwrap_or_default())
        })
        .unwrap_or_else(|e| {
            log::warn!("text input fell back to the field label: {e}");
            element.label.clone()
        })
    }
}

#[cfg(test)]
mod tests;
