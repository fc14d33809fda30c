//! Unified action vocabulary shared by the simulator, the reasoners and the
//! emitted dataset.
//!
//! Every action has exactly one canonical text form (see `docs/action-grammar.md`):
//! call syntax, case-sensitive names, a single space after each comma, and
//! double-quoted, backslash-escaped text payloads.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::env::ScreenKey;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Platform {
    Mobile,
    Desktop,
}

impl fmt::Display for Platform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Platform::Mobile => "mobile",
            Platform::Desktop => "desktop",
        })
    }
}

/// Which column of the action table a kind lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KindGroup {
    Shared,
    Mobile,
    Desktop,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ActionKind {
    Click,
    Scroll,
    Drag,
    Type,
    Wait,
    Completed,
    Infeasible,
    Launch,
    LongPress,
    PressBack,
    PressHome,
    PressEnter,
    HotKey,
    LeftDouble,
    RightSingle,
}

impl ActionKind {
    /// All kinds in table order.
    pub const ALL: [ActionKind; 15] = [
        ActionKind::Click,
        ActionKind::Scroll,
        ActionKind::Drag,
        ActionKind::Type,
        ActionKind::Wait,
        ActionKind::Completed,
        ActionKind::Infeasible,
        ActionKind::Launch,
        ActionKind::LongPress,
        ActionKind::PressBack,
        ActionKind::PressHome,
        ActionKind::PressEnter,
        ActionKind::HotKey,
        ActionKind::LeftDouble,
        ActionKind::RightSingle,
    ];

    pub fn group(self) -> KindGroup {
        use ActionKind::*;
        match self {
            Click | Scroll | Drag | Type | Wait | Completed | Infeasible => KindGroup::Shared,
            Launch | LongPress | PressBack | PressHome | PressEnter => KindGroup::Mobile,
            HotKey | LeftDouble | RightSingle => KindGroup::Desktop,
        }
    }

    pub fn name(self) -> &'static str {
        use ActionKind::*;
        match self {
            Click => "Click",
            Scroll => "Scroll",
            Drag => "Drag",
            Type => "Type",
            Wait => "Wait",
            Completed => "Completed",
            Infeasible => "Infeasible",
            Launch => "Launch",
            LongPress => "LongPress",
            PressBack => "PressBack",
            PressHome => "PressHome",
            PressEnter => "PressEnter",
            HotKey => "HotKey",
            LeftDouble => "LeftDouble",
            RightSingle => "RightSingle",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }

    /// Phase outcomes rather than UI operations.
    pub fn is_decision(self) -> bool {
        matches!(self, ActionKind::Completed | ActionKind::Infeasible)
    }

    /// Kinds that act on a specific on-screen element.
    pub fn is_element_bound(self) -> bool {
        use ActionKind::*;
        matches!(self, Click | Drag | Type | LongPress | LeftDouble | RightSingle)
    }
}

impl fmt::Display for ActionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Up,
    Down,
    Left,
    Right,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Direction {
    pub const ALL: [Direction; 4] = [Direction::Up, Direction::Down, Direction::Left, Direction::Right];

    fn as_str(self) -> &'static str {
        match self {
            Direction::Up => "up",
            Direction::Down => "down",
            Direction::Left => "left",
            Direction::Right => "right",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Action {
    Click { x: u32, y: u32 },
    Scroll { direction: Direction },
    Drag { x1: u32, y1: u32, x2: u32, y2: u32 },
    Type { content: String },
    Wait,
    Completed,
    Infeasible,
    Launch { app: String },
    LongPress { x: u32, y: u32 },
    PressBack,
    PressHome,
    PressEnter,
    HotKey { key: String },
    LeftDouble { x: u32, y: u32 },
    RightSingle { x: u32, y: u32 },
}

impl Action {
    pub fn kind(&self) -> ActionKind {
        match self {
            Action::Click { .. } => ActionKind::Click,
            Action::Scroll { .. } => ActionKind::Scroll,
            Action::Drag { .. } => ActionKind::Drag,
            Action::Type { .. } => ActionKind::Type,
            Action::Wait => ActionKind::Wait,
            Action::Completed => ActionKind::Completed,
            Action::Infeasible => ActionKind::Infeasible,
            Action::Launch { .. } => ActionKind::Launch,
            Action::LongPress { .. } => ActionKind::LongPress,
            Action::PressBack => ActionKind::PressBack,
            Action::PressHome => ActionKind::PressHome,
            Action::PressEnter => ActionKind::PressEnter,
            Action::HotKey { .. } => ActionKind::HotKey,
            Action::LeftDouble { .. } => ActionKind::LeftDouble,
            Action::RightSingle { .. } => ActionKind::RightSingle,
        }
    }

    /// The point a pointer action lands on, if any.
    pub fn point(&self) -> Option<(u32, u32)> {
        match *self {
            Action::Click { x, y }
            | Action::LongPress { x, y }
            | Action::LeftDouble { x, y }
            | Action::RightSingle { x, y } => Some((x, y)),
            Action::Drag { x1, y1, .. } => Some((x1, y1)),
            _ => None,
        }
    }

    /// False when a payload cannot be written in canonical form.
    pub fn is_well_formed(&self) -> bool {
        match self {
            Action::Launch { app } => is_identifier(app),
            _ => true,
        }
    }
}

/// Application identifiers as they appear unquoted in `Launch(app)`.
pub fn is_identifier(s: &str) -> bool {
    !s.is_empty()
        && s.chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'))
}

pub fn validate_platform(action: &Action, platform: Platform) -> bool {
    kind_allowed(action.kind(), platform)
}

pub fn kind_allowed(kind: ActionKind, platform: Platform) -> bool {
    match kind.group() {
        KindGroup::Shared => true,
        KindGroup::Mobile => platform == Platform::Mobile,
        KindGroup::Desktop => platform == Platform::Desktop,
    }
}

fn quote(out: &mut String, content: &str) {
    out.push('"');
    for c in content.chars() {
        if c == '"' || c == '\\' {
            out.push('\\');
        }
        out.push(c);
    }
    out.push('"');
}

pub fn encode_action(action: &Action) -> String {
    let name = action.kind().name();
    let mut out = String::with_capacity(24);
    out.push_str(name);
    out.push('(');
    match action {
        Action::Click { x, y }
        | Action::LongPress { x, y }
        | Action::LeftDouble { x, y }
        | Action::RightSingle { x, y } => {
            out.push_str(&format!("{x}, {y}"));
        }
        Action::Drag { x1, y1, x2, y2 } => out.push_str(&format!("{x1}, {y1}, {x2}, {y2}")),
        Action::Scroll { direction } => out.push_str(direction.as_str()),
        Action::Type { content } => quote(&mut out, content),
        Action::HotKey { key } => quote(&mut out, key),
        Action::Launch { app } => out.push_str(app),
        Action::Wait
        | Action::Completed
        | Action::Infeasible
        | Action::PressBack
        | Action::PressHome
        | Action::PressEnter => {}
    }
    out.push(')');
    out
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&encode_action(self))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("parse error at byte {position}: {message}")]
pub struct ParseError {
    pub position: usize,
    pub message: String,
}

impl ParseError {
    fn new(position: usize, message: impl Into<String>) -> Self {
        Self { position, message: message.into() }
    }
}

struct Cursor<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        Some(c)
    }

    fn expect(&mut self, want: &str) -> Result<(), ParseError> {
        if self.src[self.pos..].starts_with(want) {
            self.pos += want.len();
            Ok(())
        } else {
            Err(ParseError::new(self.pos, format!("expected `{want}`")))
        }
    }

    fn take_while(&mut self, f: impl Fn(char) -> bool) -> &'a str {
        let start = self.pos;
        while let Some(c) = self.peek() {
            if !f(c) {
                break;
            }
            self.pos += c.len_utf8();
        }
        &self.src[start..self.pos]
    }

    fn uint(&mut self) -> Result<u32, ParseError> {
        let start = self.pos;
        let digits = self.take_while(|c| c.is_ascii_digit());
        if digits.is_empty() {
            return Err(ParseError::new(start, "expected a nonnegative integer"));
        }
        if digits.len() > 1 && digits.starts_with('0') {
            return Err(ParseError::new(start, "leading zero in integer"));
        }
        digits
            .parse()
            .map_err(|_| ParseError::new(start, "integer out of range"))
    }

    fn uints(&mut self, n: usize) -> Result<Vec<u32>, ParseError> {
        let mut v = Vec::with_capacity(n);
        for i in 0..n {
            if i > 0 {
                if self.peek() == Some(')') {
                    return Err(ParseError::new(self.pos, format!("expected {n} arguments, found {i}")));
                }
                self.expect(", ")?;
            }
            v.push(self.uint()?);
        }
        Ok(v)
    }

    fn quoted(&mut self) -> Result<String, ParseError> {
        self.expect("\"")?;
        let mut out = String::new();
        loop {
            let at = self.pos;
            match self.bump() {
                None => return Err(ParseError::new(at, "unterminated string")),
                Some('"') => return Ok(out),
                Some('\\') => match self.bump() {
                    Some(c @ ('"' | '\\')) => out.push(c),
                    _ => return Err(ParseError::new(at, "invalid escape")),
                },
                Some(c) => out.push(c),
            }
        }
    }
}

/// Parses the canonical form. Surrounding whitespace is the only leniency.
pub fn decode_action(text: &str) -> Result<Action, ParseError> {
    let lead = text.len() - text.trim_start().len();
    let body = text.trim();
    let mut cur = Cursor { src: body, pos: 0 };
    let err = |e: ParseError| ParseError::new(e.position + lead, e.message);

    let name = cur.take_while(|c| c.is_ascii_alphabetic());
    let kind = ActionKind::from_name(name)
        .ok_or_else(|| err(ParseError::new(0, format!("unknown action `{name}`"))))?;
    cur.expect("(").map_err(err)?;

    let action = (|| -> Result<Action, ParseError> {
        Ok(match kind {
            ActionKind::Click | ActionKind::LongPress | ActionKind::LeftDouble | ActionKind::RightSingle => {
                let v = cur.uints(2)?;
                let (x, y) = (v[0], v[1]);
                match kind {
                    ActionKind::Click => Action::Click { x, y },
                    ActionKind::LongPress => Action::LongPress { x, y },
                    ActionKind::LeftDouble => Action::LeftDouble { x, y },
                    _ => Action::RightSingle { x, y },
                }
            }
            ActionKind::Drag => {
                let v = cur.uints(4)?;
                Action::Drag { x1: v[0], y1: v[1], x2: v[2], y2: v[3] }
            }
            ActionKind::Scroll => {
                let at = cur.pos;
                let word = cur.take_while(|c| c.is_ascii_alphabetic());
                let direction = Direction::ALL
                    .into_iter()
                    .find(|d| d.as_str() == word)
                    .ok_or_else(|| ParseError::new(at, "expected up, down, left or right"))?;
                Action::Scroll { direction }
            }
            ActionKind::Type => Action::Type { content: cur.quoted()? },
            ActionKind::HotKey => Action::HotKey { key: cur.quoted()? },
            ActionKind::Launch => {
                let at = cur.pos;
                let app = cur.take_while(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'));
                if app.is_empty() {
                    return Err(ParseError::new(at, "expected an app identifier"));
                }
                Action::Launch { app: app.to_string() }
            }
            ActionKind::Wait => Action::Wait,
            ActionKind::Completed => Action::Completed,
            ActionKind::Infeasible => Action::Infeasible,
            ActionKind::PressBack => Action::PressBack,
            ActionKind::PressHome => Action::PressHome,
            ActionKind::PressEnter => Action::PressEnter,
        })
    })()
    .map_err(err)?;

    if cur.peek() != Some(')') {
        return Err(err(ParseError::new(cur.pos, "expected `)`")));
    }
    cur.bump();
    if cur.pos != body.len() {
        return Err(err(ParseError::new(cur.pos, "trailing input after `)`")));
    }
    Ok(action)
}

impl FromStr for Action {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        decode_action(s)
    }
}

impl Serialize for Action {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&encode_action(self))
    }
}

impl<'de> Deserialize<'de> for Action {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        decode_action(&s).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Phase {
    RandomWalk,
    Guided,
    Recovery,
}

/// One executed step with the effects the dataset filters need.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionRecord {
    pub index: usize,
    pub action: Action,
    pub phase: Phase,
    pub pre_digest: crate::env::StateDigest,
    pub post_digest: crate::env::StateDigest,
    pub pre_screen: ScreenKey,
    pub post_screen: ScreenKey,
    /// The post-state screen is behind a login wall.
    #[serde(default)]
    pub login_gated: bool,
    /// Global flags present before the step and absent after it.
    #[serde(default)]
    pub cleared_flags: Vec<String>,
}
