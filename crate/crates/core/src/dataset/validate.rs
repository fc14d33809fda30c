//! Line-by-line re-checking of an emitted dataset.

use std::fmt;

use serde_json::Value;

use super::filter::filter_episode;
use super::schema::{EpisodeRecord, SCHEMA_VERSION};
use super::stats::compute_stats;
use crate::action::{decode_action, validate_platform};
use crate::guided::Outcome;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    /// 1-based line number.
    pub line: usize,
    /// Path into the record, e.g. `strides[0].steps[3].action`.
    pub field: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}: {}", self.line, self.field, self.message)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub episodes: usize,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks every non-blank line of a JSON-lines dataset.
pub fn validate_dataset(text: &str) -> ValidationReport {
    let mut report = ValidationReport::default();
    let mut parsed = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        report.episodes += 1;
        let before = report.violations.len();
        let lineno = i + 1;
        let mut push = |field: String, message: String| report.violations.push(Violation { line: lineno, field, message });
        match check_line(line, &mut push) {
            Some(rec) if report.violations.len() == before => parsed.push(rec),
            _ => {}
        }
    }
    if parsed.iter().any(|e| e.filter_verdict.is_kept()) {
        if let Ok(stats) = compute_stats(&parsed) {
            for (p, s) in &stats.platforms {
                let sum: f64 = s.percent.values().sum();
                if (sum - 100.0).abs() > 0.01 {
                    report.violations.push(Violation {
                        line: 0,
                        field: format!("stats.{p}"),
                        message: format!("rates sum to {sum:.2}"),
                    });
                }
            }
        }
    }
    report
}

fn check_line(line: &str, push: &mut impl FnMut(String, String)) -> Option<EpisodeRecord> {
    let value: Value = match serde_json::from_str(line) {
        Ok(v) => v,
        Err(e) => {
            push("-".into(), format!("not JSON: {e}"));
            return None;
        }
    };
    match value.get("schema_version").and_then(Value::as_u64) {
        Some(v) if v == SCHEMA_VERSION as u64 => {}
        Some(v) => push("schema_version".into(), format!("unsupported version {v}")),
        None => push("schema_version".into(), "missing".into()),
    }
    // Name bad action strings precisely before the typed parse lumps them together.
    if let Some(strides) = value.get("strides").and_then(Value::as_array) {
        for (si, s) in strides.iter().enumerate() {
            for (ti, step) in s.get("steps").and_then(Value::as_array).into_iter().flatten().enumerate() {
                let field = format!("strides[{si}].steps[{ti}].action");
                match step.get("action").and_then(Value::as_str) {
                    Some(a) => {
                        if let Err(e) = decode_action(a) {
                            push(field, format!("{a:?} does not decode: {e}"));
                        }
                    }
                    None => push(field, "missing or not a string".into()),
                }
            }
        }
    }
    let rec = match EpisodeRecord::from_line(line) {
        Ok(r) => r,
        Err(e) => {
            push("-".into(), format!("does not match the episode schema: {e}"));
            return None;
        }
    };
    check_episode(&rec, push);
    Some(rec)
}

fn check_episode(rec: &EpisodeRecord, push: &mut impl FnMut(String, String)) {
    let derived = filter_episode(rec);
    if derived != rec.filter_verdict {
        push("filter_verdict".into(), format!("stored {:?}, records say {derived:?}", rec.filter_verdict));
    }
    if rec.filter_verdict.is_kept() && rec.overall_task.trim().is_empty() {
        push("overall_task".into(), "empty on a kept episode".into());
    }
    let mut prev_post = None;
    let mut prev_app = None;
    for (si, s) in rec.strides.iter().enumerate() {
        let at = |f: &str| format!("strides[{si}].{f}");
        if s.index != si {
            push(at("index"), format!("expected {si}, found {}", s.index));
        }
        if s.summary.trim().is_empty() {
            push(at("summary"), "empty".into());
        }
        if (s.reward == 1) != (s.outcome == Outcome::Completed) || s.reward > 1 {
            push(at("reward"), format!("reward {} with outcome {:?}", s.reward, s.outcome));
        }
        if si > 0 {
            if let (Some(g), Some(app)) = (&s.goal, &prev_app) {
                if &g.app == app {
                    push(at("goal.app"), format!("stays in `{app}` after the previous stride"));
                }
            }
        }
        for (ti, st) in s.steps.iter().enumerate() {
            let at = |f: &str| format!("strides[{si}].steps[{ti}].{f}");
            let r = &st.record;
            if !validate_platform(&r.action, rec.platform) {
                push(at("action"), format!("{} is not a {} action", r.action, rec.platform));
            }
            if r.action.kind().is_decision() {
                push(at("action"), "phase decisions are never executed".into());
            }
            if st.instruction.trim().is_empty() {
                push(at("instruction"), "empty".into());
            }
            if r.index != ti {
                push(at("index"), format!("expected {ti}, found {}", r.index));
            }
            if let Some(p) = prev_post {
                if p != r.pre_digest {
                    push(at("pre_digest"), "does not continue from the previous step".into());
                }
            }
            prev_post = Some(r.post_digest);
        }
        prev_app = s.steps.last().map(|st| st.record.post_screen.app.clone()).or(prev_app);
    }
    if rec.cost.dollars < 0.0 || !rec.cost.dollars.is_finite() {
        push("cost.dollars".into(), format!("{} is not a cost", rec.cost.dollars));
    }
}
