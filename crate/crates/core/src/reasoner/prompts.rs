//! Versioned prompt templates and their rendering.
//!
//! The goal-prediction, cross-app, summary and recovery templates are kept
//! word for word; the action-selection, step-annotation and text-input
//! templates are this project's own. User templates carry the slots
//! `{task-history}`, `{instruction}`, `{summary-list}`, `{summary}` and
//! `{goal}`.

use crate::action::{encode_action, Action, ActionRecord};
use crate::env::{describe_screen, AppId, Element, EnvState, GuiWorld};

pub const PROMPT_VERSION: u32 = 1;

pub const NEXT_TASK_PREDICT_SYSTEM: &str = include_str!("../../assets/prompts/next_task_predict.system.v1.txt");
pub const CROSS_APP_PREDICT_SYSTEM: &str = include_str!("../../assets/prompts/cross_app_predict.system.v1.txt");
pub const TASK_PREDICT_USER: &str = include_str!("../../assets/prompts/task_predict.user.v1.txt");
pub const TASK_SUMMARY_SYSTEM: &str = include_str!("../../assets/prompts/task_summary.system.v1.txt");
pub const TASK_SUMMARY_USER: &str = include_str!("../../assets/prompts/task_summary.user.v1.txt");
pub const RECOVERED_TASK_SYSTEM: &str = include_str!("../../assets/prompts/recovered_task_predict.system.v1.txt");
pub const RECOVERED_TASK_USER: &str = include_str!("../../assets/prompts/recovered_task_predict.user.v1.txt");
pub const ACTION_SELECT_SYSTEM: &str = include_str!("../../assets/prompts/action_select.system.v1.txt");
pub const ACTION_SELECT_USER: &str = include_str!("../../assets/prompts/action_select.user.v1.txt");
pub const STEP_ANNOTATE_SYSTEM: &str = include_str!("../../assets/prompts/step_annotate.system.v1.txt");
pub const STEP_ANNOTATE_USER: &str = include_str!("../../assets/prompts/step_annotate.user.v1.txt");
pub const TEXT_INPUT_SYSTEM: &str = include_str!("../../assets/prompts/text_input.system.v1.txt");
pub const TEXT_INPUT_USER: &str = include_str!("../../assets/prompts/text_input.user.v1.txt");

/// The example app list printed in the cross-app template; replaced by the
/// installed apps at render time.
pub const CROSS_APP_LIST_PLACEHOLDER: &str = "['chrome', 'Map', ...... 'Settings', 'Clock', 'Message']";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Prompt {
    pub system: String,
    pub user: String,
}

/// Replaces `{slot}` markers. Unknown slots are left in place.
pub fn fill(template: &str, slots: &[(&str, &str)]) -> String {
    let mut out = template.trim_end().to_string();
    for (name, value) in slots {
        out = out.replace(&format!("{{{name}}}"), value);
    }
    out
}

pub fn render_history(world: &GuiWorld, records: &[ActionRecord]) -> String {
    if records.is_empty() {
        return "(no actions yet)".into();
    }
    records
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let label = world.screen(&r.pre_screen).map(|s| s.label.as_str()).unwrap_or("?");
            format!("{}. on \"{}\" ({}): {}", i + 1, label, world.app_name(&r.pre_screen.app), encode_action(&r.action))
        })
        .collect::<Vec<_>>()
        .join("\n")
}

fn render_list(items: &[String]) -> String {
    let quoted: Vec<String> = items.iter().map(|s| serde_json::to_string(s).expect("string")).collect();
    format!("[{}]", quoted.join(", "))
}

pub fn infer_goal(world: &GuiWorld, terminal: &EnvState, walk: &[ActionRecord]) -> Prompt {
    let history = format!(
        "\n{}\n\nCurrent screen:\n{}",
        render_history(world, walk),
        describe_screen(world, terminal)
    );
    Prompt {
        system: NEXT_TASK_PREDICT_SYSTEM.trim_end().to_string(),
        user: fill(TASK_PREDICT_USER, &[("task-history", &history)]),
    }
}

pub fn cross_app(
    world: &GuiWorld,
    stride_summary: &str,
    stride_steps: &[String],
    task_history: &[String],
    final_state: &EnvState,
    installed: &[AppId],
) -> Prompt {
    let apps: Vec<String> = installed.iter().map(|a| format!("'{a}'")).collect();
    let system = NEXT_TASK_OR_CROSS_APP_LIST(CROSS_APP_PREDICT_SYSTEM, &format!("[{}]", apps.join(", ")));
    let mut tasks = task_history.to_vec();
    tasks.push(stride_summary.to_string());
    let history = format!(
        "{}\n\nSteps of the last task:\n{}\n\nCurrent app: {}\nCurrent screen:\n{}",
        render_list(&tasks),
        render_list(stride_steps),
        final_state.app_id,
        describe_screen(world, final_state)
    );
    Prompt { system, user: fill(TASK_PREDICT_USER, &[("task-history", &history)]) }
}

#[allow(non_snake_case)]
fn NEXT_TASK_OR_CROSS_APP_LIST(template: &str, list: &str) -> String {
    template.trim_end().replace(CROSS_APP_LIST_PLACEHOLDER, list)
}

pub fn select_action(world: &GuiWorld, state: &EnvState, goal_text: &str, history: &[ActionRecord]) -> Prompt {
    Prompt {
        system: ACTION_SELECT_SYSTEM.trim_end().to_string(),
        user: fill(
            ACTION_SELECT_USER,
            &[
                ("goal", goal_text),
                ("history", &render_history(world, history)),
                ("screen", describe_screen(world, state).trim_end()),
            ],
        ),
    }
}

pub fn annotate_step(world: &GuiWorld, prev: &EnvState, action: &Action, next: &EnvState) -> Prompt {
    Prompt {
        system: STEP_ANNOTATE_SYSTEM.trim_end().to_string(),
        user: fill(
            STEP_ANNOTATE_USER,
            &[
                ("before", describe_screen(world, prev).trim_end()),
                ("action", &encode_action(action)),
                ("after", describe_screen(world, next).trim_end()),
            ],
        ),
    }
}

/// Screens stand in for screenshots: each step contributes its screen
/// description alongside its instruction.
pub fn summarize(world: &GuiWorld, steps: &[(EnvState, String)], summary_list: &[String]) -> Prompt {
    let instructions: Vec<String> = steps
        .iter()
        .enumerate()
        .map(|(i, (state, text))| format!("{}. {}\n   screen:\n{}", i + 1, text, indent(&describe_screen(world, state))))
        .collect();
    Prompt {
        system: TASK_SUMMARY_SYSTEM.trim_end().to_string(),
        user: fill(
            TASK_SUMMARY_USER,
            &[("instruction", &format!("\n{}\n", instructions.join("\n"))), ("summary-list", &render_list(summary_list))],
        ),
    }
}

fn indent(text: &str) -> String {
    text.lines().map(|l| format!("      {l}")).collect::<Vec<_>>().join("\n")
}

pub fn revise_goal(world: &GuiWorld, state: &EnvState, failed_goal: &str, failure_summary: &str) -> Prompt {
    let summary = format!("{failure_summary}\n\nCurrent screen:\n{}", describe_screen(world, state).trim_end());
    Prompt {
        system: RECOVERED_TASK_SYSTEM.trim_end().to_string(),
        user: fill(RECOVERED_TASK_USER, &[("summary", &summary), ("goal", failed_goal)]),
    }
}

pub fn text_input(world: &GuiWorld, state: &EnvState, element: &Element) -> Prompt {
    Prompt {
        system: TEXT_INPUT_SYSTEM.trim_end().to_string(),
        user: fill(
            TEXT_INPUT_USER,
            &[
                ("app", &world.app_name(&state.app_id)),
                ("field", &element.label),
                ("screen", describe_screen(world, state).trim_end()),
            ],
        ),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn user_templates_carry_their_slots() {
        assert!(TASK_PREDICT_USER.contains("{task-history}"));
        assert!(TASK_SUMMARY_USER.contains("{instruction}"));
        assert!(TASK_SUMMARY_USER.contains("{summary-list}"));
        assert!(RECOVERED_TASK_USER.contains("{summary}"));
        assert!(RECOVERED_TASK_USER.contains("{goal}"));
    }

    #[test]
    fn templates_keep_their_budgets_and_constraints() {
        assert!(NEXT_TASK_PREDICT_SYSTEM.contains("Completable Within 3 Atomic Actions"));
        assert!(CROSS_APP_PREDICT_SYSTEM.contains("achievable within 2 atomic actions"));
        assert!(CROSS_APP_PREDICT_SYSTEM.contains("must take place in a different app"));
        assert!(CROSS_APP_PREDICT_SYSTEM.contains(CROSS_APP_LIST_PLACEHOLDER));
        assert!(TASK_SUMMARY_SYSTEM.contains("single, complete, and clearly defined task"));
        assert!(RECOVERED_TASK_SYSTEM.contains("achievable within 3 atomic actions"));
        for t in [NEXT_TASK_PREDICT_SYSTEM, CROSS_APP_PREDICT_SYSTEM, TASK_SUMMARY_SYSTEM, RECOVERED_TASK_SYSTEM] {
            assert!(!t.contains("\\setlength") && !t.contains("$<$"), "LaTeX left in template");
            assert!(t.contains("\"task\""));
        }
    }

    #[test]
    fn fill_replaces_named_slots() {
        assert_eq!(fill("a {x} b {y}\n", &[("x", "1"), ("y", "2")]), "a 1 b 2");
        assert_eq!(fill("keep {z}", &[("x", "1")]), "keep {z}");
    }
}
