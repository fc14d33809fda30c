//! Pulling the JSON object out of a chat reply.
//!
//! Services often wrap the requested object in prose or code fences, so the
//! extractor scans for the first `{` and its matching `}`, skipping braces
//! inside string literals.

use std::collections::BTreeMap;

use thiserror::Error;

use super::ReasonerReply;

/// `position` is a byte offset into the raw reply.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("at byte {position}: {message}")]
pub struct ReplyError {
    pub position: usize,
    pub message: String,
}

fn err(position: usize, message: impl Into<String>) -> ReplyError {
    ReplyError { position, message: message.into() }
}

/// The outermost JSON object in `text`.
pub fn extract_json_object(text: &str) -> Result<&str, ReplyError> {
    let start = text.find('{').ok_or_else(|| err(0, "no JSON object in reply"))?;
    let mut depth = 0usize;
    let mut in_string = false;
    let mut escaped = false;
    for (i, c) in text[start..].char_indices() {
        if in_string {
            match c {
                _ if escaped => escaped = false,
                '\\' => escaped = true,
                '"' => in_string = false,
                _ => {}
            }
            continue;
        }
        match c {
            '"' => in_string = true,
            '{' => depth += 1,
            '}' => {
                depth -= 1;
                if depth == 0 {
                    return Ok(&text[start..start + i + 1]);
                }
            }
            _ => {}
        }
    }
    Err(err(text.len(), format!("unterminated JSON object opened at byte {start}")))
}

fn byte_offset(text: &str, line: usize, column: usize) -> usize {
    let mut offset = 0;
    for (n, l) in text.split_inclusive('\n').enumerate() {
        if n + 1 == line {
            return offset + column.saturating_sub(1).min(l.len());
        }
        offset += l.len();
    }
    text.len()
}

/// Parses a reply, requiring each of `required` to be a non-empty field.
/// Non-string values are kept in their JSON spelling.
pub fn parse_reply(raw: &str, required: &[&str]) -> Result<ReasonerReply, ReplyError> {
    let object = extract_json_object(raw)?;
    let start = object.as_ptr() as usize - raw.as_ptr() as usize;
    let value: serde_json::Map<String, serde_json::Value> = serde_json::from_str(object)
        .map_err(|e| err(start + byte_offset(object, e.line(), e.column()), e.to_string()))?;
    let mut fields: BTreeMap<String, String> = value
        .into_iter()
        .map(|(k, v)| {
            let text = match v {
                serde_json::Value::String(s) => s,
                serde_json::Value::Null => String::new(),
                other => other.to_string(),
            };
            (k, text.trim().to_string())
        })
        .collect();
    for name in required {
        if fields.get(*name).is_none_or(|v| v.is_empty()) {
            return Err(err(start, format!("missing or empty field `{name}`")));
        }
    }
    let mut take = |k: &str| fields.remove(k).unwrap_or_default();
    Ok(ReasonerReply {
        thoughts: take("thoughts"),
        task: take("task"),
        action: take("action"),
        app: take("app"),
        extra: fields,
        raw: raw.to_string(),
        token_usage: Default::default(),
    })
}
