//! Deterministic stand-in for every reasoning call, planning with exact
//! shortest paths over the simulated world.
//!
//! Each call still renders the prompt a remote backend would see and bills
//! it, with its template reply, to the ledger through the stand-in tokenizer,
//! so cost figures from offline runs scale like real ones.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;

use super::prompts::{self, Prompt};
use super::{stand_in_usage, Goal, GoalOrigin, ReasonCtx, Reasoner, ReasonerError, SuccessSpec};
use crate::action::{encode_action, Action, ActionKind, ActionRecord, Platform};
use crate::dataset::cost::CallKind;
use crate::env::{pointer_action, type_target, AppId, Element, EnvState, GuiWorld, NavSearch, ScreenKey};

#[derive(Debug, Clone, Copy, Default)]
pub struct ScriptedOracle;

impl ScriptedOracle {
    pub fn new() -> Self {
        ScriptedOracle
    }
}

fn bill(ctx: &mut ReasonCtx<'_>, call: CallKind, prompt: &Prompt, reply: &str) {
    ctx.ledger.push(call, stand_in_usage(prompt, reply));
}

fn pick<T: Clone>(rng: &mut impl Rng, items: &[T]) -> Option<T> {
    match items.len() {
        0 => None,
        1 => Some(items[0].clone()),
        n => Some(items[rng.gen_range(0..n)].clone()),
    }
}

fn screen_label(world: &GuiWorld, key: &ScreenKey) -> String {
    world.screen(key).map(|s| s.label.clone()).unwrap_or_else(|| key.to_string())
}

/// How the device switches into `app` from anywhere.
pub fn switch_action(world: &GuiWorld, app: &AppId) -> Option<Action> {
    match world.platform {
        Platform::Mobile => Some(Action::Launch { app: app.to_string() }),
        Platform::Desktop => world
            .taskbar()
            .iter()
            .find(|e| e.launches.as_ref() == Some(app))
            .and_then(|e| pointer_action(ActionKind::Click, e)),
    }
}

fn screen_goal(
    world: &GuiWorld,
    search: &NavSearch,
    target: ScreenKey,
    origin: GoalOrigin,
    hint: Option<Action>,
) -> Goal {
    let label = screen_label(world, &target);
    let app_name = world.app_name(&target.app);
    let task_text = match origin {
        GoalOrigin::Inferred => format!("Open \"{label}\" in {app_name}"),
        GoalOrigin::CrossApp => format!("Switch to {app_name} and open \"{label}\""),
        GoalOrigin::Revised => format!("Instead, open \"{label}\" in {app_name}"),
    };
    let first = hint.or_else(|| search.path_to(&target).and_then(|p| p.into_iter().next()));
    Goal {
        task_text,
        first_action_hint: first.map(|a| encode_action(&a)).unwrap_or_else(|| encode_action(&Action::Wait)),
        app: target.app.clone(),
        success_spec: SuccessSpec::Screens(BTreeSet::from([target])),
        origin,
    }
}

fn goal_reply(goal: &Goal, thoughts: &str) -> String {
    serde_json::json!({
        "thoughts": thoughts,
        "task": goal.task_text,
        "action": goal.first_action_hint,
        "app": goal.app.to_string(),
    })
    .to_string()
}

/// Per-tag phrases for generated text input.
fn phrases(tag: &str) -> &'static [&'static str] {
    match tag {
        "map" | "places" => &["Eiffel Tower", "Central Park", "Golden Gate Bridge", "Shibuya Crossing"],
        "travel" => &["Paris", "Tokyo Station", "Lisbon old town", "Barcelona"],
        "search" | "web" => &["weather this weekend", "best hiking trails", "how to boil an egg", "local library hours"],
        "news" => &["election results", "technology news", "local traffic"],
        "time" | "alarm" => &["7:30", "Morning run", "Take medicine"],
        "health" | "safety" => &["Penicillin Allergy", "Blood type O+", "Asthma inhaler"],
        "people" => &["Alex Johnson", "Mom", "Dentist office"],
        "shopping" => &["running shoes", "coffee beans", "usb-c cable"],
        "food" => &["vegetable lasagna", "banana bread", "pad thai"],
        "language" => &["Where is the train station?", "Thank you very much", "How much does this cost?"],
        "productivity" | "writing" => &["Grocery list", "Meeting notes", "Call the plumber"],
        "media" | "video" | "audio" => &["jazz for studying", "cooking tutorial", "science podcast"],
        "money" => &["Groceries budget", "Rent", "Savings goal"],
        "math" => &["12 * 7", "250 / 4", "15% of 80"],
        "reading" => &["science fiction", "daily briefing", "classic novels"],
        _ => &[],
    }
}

impl Reasoner for ScriptedOracle {
    fn infer_goal(
        &self,
        ctx: &mut ReasonCtx<'_>,
        terminal: &EnvState,
        walk: &[ActionRecord],
    ) -> Result<Goal, ReasonerError> {
        let world = ctx.world;
        let search = NavSearch::new(world, terminal);
        let here = terminal.screen_key();
        let others: Vec<ScreenKey> = world.function_nodes().map(|(k, _)| k).filter(|k| *k != here).collect();
        let local: Vec<ScreenKey> = others.iter().filter(|k| k.app == terminal.app_id).cloned().collect();
        // Prefer the app the walk ended in; otherwise whatever is closest.
        let (_, mut ties) = search.nearest(local.iter());
        if ties.is_empty() {
            ties = search.nearest(others.iter()).1;
        }
        let target = pick(ctx.rng, &ties).ok_or(ReasonerError::OracleNoFunctionNode)?;
        let goal = screen_goal(world, &search, target, GoalOrigin::Inferred, None);
        let prompt = prompts::infer_goal(world, terminal, walk);
        bill(ctx, CallKind::InferGoal, &prompt, &goal_reply(&goal, "The nearest feature screen of this app."));
        Ok(goal)
    }

    fn select_action(
        &self,
        ctx: &mut ReasonCtx<'_>,
        state: &EnvState,
        goal: &Goal,
        history: &[ActionRecord],
    ) -> Result<Action, ReasonerError> {
        let world = ctx.world;
        let action = if goal.is_satisfied(world, state) {
            Action::Completed
        } else {
            let search = NavSearch::new(world, state);
            let targets = goal.success_spec.target_screens(world);
            let (_, ties) = search.nearest(targets.iter());
            // No route: idle, so the stall detector hands over to recovery.
            ties.first()
                .and_then(|t| search.path_to(t))
                .and_then(|p| p.into_iter().next())
                .unwrap_or(Action::Wait)
        };
        let prompt = prompts::select_action(world, state, &goal.task_text, history);
        let reply = serde_json::json!({"thoughts": "Follow the shortest route.", "action": encode_action(&action)});
        bill(ctx, CallKind::SelectAction, &prompt, &reply.to_string());
        Ok(action)
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
        let world = ctx.world;
        let distinct: BTreeSet<&AppId> = installed_apps.iter().collect();
        if distinct.len() < 2 {
            return Err(ReasonerError::Precondition("cross-app goals need at least 2 installed apps".into()));
        }
        let current = &final_state.app_id;
        let current_tags = world.app(current).map(|a| a.tags.clone()).unwrap_or_default();
        let mut scored: Vec<(usize, &AppId)> = distinct
            .iter()
            .filter(|a| **a != current && world.app(a).is_some())
            .map(|a| (world.app(a).expect("known app").tags.intersection(&current_tags).count(), *a))
            .collect();
        scored.sort_by(|x, y| y.0.cmp(&x.0).then(x.1.cmp(y.1)));

        let search = NavSearch::new(world, final_state);
        let mut chosen = None;
        let mut i = 0;
        'groups: while i < scored.len() {
            let score = scored[i].0;
            let mut group: Vec<&AppId> = scored[i..].iter().take_while(|s| s.0 == score).map(|s| s.1).collect();
            i += group.len();
            group.shuffle(ctx.rng);
            for app in group {
                let nodes: Vec<ScreenKey> = world.function_nodes().map(|(k, _)| k).filter(|k| &k.app == app).collect();
                let (_, ties) = search.nearest(nodes.iter());
                if let Some(target) = pick(ctx.rng, &ties) {
                    chosen = Some(target);
                    break 'groups;
                }
            }
        }
        let target = chosen.ok_or(ReasonerError::OracleNoFunctionNode)?;
        let hint = switch_action(world, &target.app);
        let goal = screen_goal(world, &search, target, GoalOrigin::CrossApp, hint);
        let prompt = prompts::cross_app(world, stride_summary, stride_steps, task_history, final_state, installed_apps);
        bill(ctx, CallKind::CrossAppGoal, &prompt, &goal_reply(&goal, "The related app with the most shared topics."));
        Ok(goal)
    }

    fn annotate_step(
        &self,
        ctx: &mut ReasonCtx<'_>,
        prev: &EnvState,
        action: &Action,
        next: &EnvState,
    ) -> Result<String, ReasonerError> {
        let world = ctx.world;
        let instruction = step_instruction(world, prev, action, next);
        let prompt = prompts::annotate_step(world, prev, action, next);
        let reply = serde_json::json!({"thoughts": "Describe the step.", "instruction": instruction});
        bill(ctx, CallKind::AnnotateStep, &prompt, &reply.to_string());
        Ok(instruction)
    }

    fn summarize_stride(
        &self,
        ctx: &mut ReasonCtx<'_>,
        steps: &[(EnvState, String)],
        summary_list: &[String],
        goal: Option<&Goal>,
    ) -> Result<String, ReasonerError> {
        let world = ctx.world;
        let (last, _) = steps.last().ok_or(ReasonerError::EmptyTrajectory)?;
        let summary = match goal {
            Some(goal) => {
                let key = last.screen_key();
                match world.screen(&key) {
                    Some(s) if s.is_function_node => {
                        format!("{}, ending on \"{}\" in {}.", goal.task_text, s.label, world.app_name(&key.app))
                    }
                    _ => format!("{}.", goal.task_text),
                }
            }
            // Subtask summaries, when given, describe the session better
            // than its individual steps.
            None if !summary_list.is_empty() => compose(summary_list.iter().map(String::as_str)),
            None => compose(steps.iter().map(|(_, t)| t.as_str())),
        };
        let prompt = prompts::summarize(world, steps, summary_list);
        let reply = serde_json::json!({"thoughts": "One task covers the steps.", "task": summary});
        bill(ctx, CallKind::Summarize, &prompt, &reply.to_string());
        Ok(summary)
    }

    fn revise_goal(
        &self,
        ctx: &mut ReasonCtx<'_>,
        state: &EnvState,
        failed: &Goal,
        failure_summary: &str,
    ) -> Result<Goal, ReasonerError> {
        let world = ctx.world;
        let excluded = failed.success_spec.target_screens(world);
        let here = state.screen_key();
        let search = NavSearch::new(world, state);
        let nodes: Vec<ScreenKey> = world
            .function_nodes()
            .map(|(k, _)| k)
            .filter(|k| !excluded.contains(k) && *k != here)
            .collect();
        let (_, ties) = search.nearest(nodes.iter());
        let target = pick(ctx.rng, &ties).ok_or(ReasonerError::NoAlternative)?;
        let goal = screen_goal(world, &search, target, GoalOrigin::Revised, None);
        let prompt = prompts::revise_goal(world, state, &failed.task_text, failure_summary);
        bill(ctx, CallKind::ReviseGoal, &prompt, &goal_reply(&goal, "The original target is out of reach."));
        Ok(goal)
    }

    fn generate_text_input(&self, ctx: &mut ReasonCtx<'_>, state: &EnvState, element: &Element) -> String {
        let world = ctx.world;
        let table: Vec<&str> = world
            .app(&state.app_id)
            .map(|a| a.tags.iter().flat_map(|t| phrases(t).iter().copied()).collect())
            .unwrap_or_default();
        let text = pick(ctx.rng, &table).map(str::to_string).unwrap_or_else(|| element.label.clone());
        let prompt = prompts::text_input(world, state, element);
        bill(ctx, CallKind::TextInput, &prompt, &serde_json::json!({"text": text}).to_string());
        text
    }
}

/// "First, a; then b; finally c." over step texts, trailing periods dropped.
fn compose<'a>(parts: impl Iterator<Item = &'a str>) -> String {
    let parts: Vec<&str> = parts.map(|p| p.trim().trim_end_matches('.')).filter(|p| !p.is_empty()).collect();
    match parts.len() {
        0 => "Explore the app.".into(),
        1 => format!("{}.", parts[0]),
        n => {
            let mut out = format!("First, {}", lower_first(parts[0]));
            for p in &parts[1..n - 1] {
                out.push_str(&format!("; then {}", lower_first(p)));
            }
            out.push_str(&format!("; finally {}.", lower_first(parts[n - 1])));
            out
        }
    }
}

fn lower_first(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_lowercase().chain(c).collect(),
        None => String::new(),
    }
}

fn element_at<'a>(world: &'a GuiWorld, state: &EnvState, action: &Action) -> Option<&'a Element> {
    let (x, y) = action.point()?;
    world.visible_elements(state).find(|e| e.bounds.contains(x, y))
}

/// The template instruction for one recorded step.
pub fn step_instruction(world: &GuiWorld, prev: &EnvState, action: &Action, next: &EnvState) -> String {
    let tap = if world.platform == Platform::Mobile { "Tap" } else { "Click" };
    let next_label = screen_label(world, &next.screen_key());
    match action {
        Action::Wait => "Wait for the screen to update.".into(),
        Action::Completed => "Mark the task as finished.".into(),
        Action::Infeasible => "Mark the task as infeasible.".into(),
        Action::Type { content } => {
            let field = type_target(world, prev).map(|e| e.label.as_str()).unwrap_or("text");
            format!("Type \"{content}\" into the \"{field}\" field.")
        }
        Action::Scroll { direction } => {
            format!("Scroll {direction} on the \"{}\" screen.", screen_label(world, &prev.screen_key()))
        }
        Action::Launch { app } => format!("Open the {} app.", world.app_name(&AppId(app.clone()))),
        Action::PressBack => format!("Go back to the \"{next_label}\" screen."),
        Action::PressHome => "Go to the home screen.".into(),
        Action::PressEnter => match type_target(world, prev) {
            Some(el) => format!("Press Enter to submit the \"{}\" field.", el.label),
            None => "Press Enter.".into(),
        },
        Action::HotKey { key } => format!("Press the \"{key}\" shortcut."),
        Action::Drag { .. } => match element_at(world, prev, action) {
            Some(el) => format!("Drag \"{}\" to the right.", el.label),
            None => "Drag across the screen.".into(),
        },
        Action::Click { .. } | Action::LeftDouble { .. } | Action::LongPress { .. } | Action::RightSingle { .. } => {
            let verb = match action.kind() {
                ActionKind::LeftDouble => "Double-click",
                ActionKind::LongPress => "Long-press",
                ActionKind::RightSingle => "Right-click",
                _ => tap,
            };
            let Some(el) = element_at(world, prev, action) else {
                return format!("{verb} the screen.");
            };
            let moved = prev.screen_key() != next.screen_key();
            if moved && el.launches.is_some() {
                format!("{verb} \"{}\" to open {}.", el.label, world.app_name(&next.app_id))
            } else if moved {
                format!("{verb} \"{}\" to open the \"{next_label}\" screen.", el.label)
            } else if el.is_system_global() {
                format!("{verb} \"{}\" to toggle it.", el.label)
            } else if el.affords(ActionKind::Type) {
                format!("{verb} the \"{}\" field.", el.label)
            } else {
                format!("{verb} \"{}\".", el.label)
            }
        }
    }
}
