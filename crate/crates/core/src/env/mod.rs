//! Deterministic simulated GUI world: apps, screens, elements, and the
//! point-mass transition function every phase of the pipeline runs on.

mod fixture;
mod generate;
mod nav;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::action::{encode_action, kind_allowed, Action, ActionKind, Direction, Platform};

pub use fixture::{ScreenBuilder, WorldBuilder, WorldFile, WORLD_SCHEMA_VERSION};
pub use generate::{generate_world, WorldParams};
pub use nav::{reachable_states, reachable_states_with_cap, NavSearch, ORACLE_STATE_CAP};

/// Reserved app/screen id of the mobile home pseudo-screen.
pub const HOME_APP: &str = "_home";
pub const HOME_SCREEN: &str = "home";

/// Global flags whose loss makes the rest of a trajectory unusable.
pub const REQUIRED_FLAGS: &[&str] = &["network_enabled"];

macro_rules! id_type {
    ($name:ident) => {
        #[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub String);

        impl $name {
            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                Self(s.to_string())
            }
        }

        impl From<String> for $name {
            fn from(s: String) -> Self {
                Self(s)
            }
        }

        impl PartialEq<str> for $name {
            fn eq(&self, other: &str) -> bool {
                self.0 == other
            }
        }

        impl PartialEq<&str> for $name {
            fn eq(&self, other: &&str) -> bool {
                self.0 == *other
            }
        }
    };
}

id_type!(AppId);
id_type!(ScreenId);
id_type!(ElementId);

/// Screen-level projection of a state: which app and screen is showing.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ScreenKey {
    pub app: AppId,
    pub screen: ScreenId,
}

impl ScreenKey {
    pub fn new(app: impl Into<AppId>, screen: impl Into<ScreenId>) -> Self {
        Self { app: app.into(), screen: screen.into() }
    }

    pub fn home() -> Self {
        Self::new(HOME_APP, HOME_SCREEN)
    }

    pub fn is_home(&self) -> bool {
        self.app == HOME_APP
    }
}

impl fmt::Display for ScreenKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.app, self.screen)
    }
}

impl Serialize for ScreenKey {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ScreenKey {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        let (app, screen) = s
            .split_once('/')
            .ok_or_else(|| serde::de::Error::custom(format!("expected `app/screen`, got `{s}`")))?;
        Ok(ScreenKey::new(app, screen))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rect {
    pub x: u32,
    pub y: u32,
    pub w: u32,
    pub h: u32,
}

impl Rect {
    pub fn new(x: u32, y: u32, w: u32, h: u32) -> Self {
        Self { x, y, w, h }
    }

    pub fn contains(&self, px: u32, py: u32) -> bool {
        px >= self.x && py >= self.y && px < self.x + self.w && py < self.y + self.h
    }

    pub fn center(&self) -> (u32, u32) {
        (self.x + self.w / 2, self.y + self.h / 2)
    }

    fn within(&self, width: u32, height: u32) -> bool {
        self.w > 0 && self.h > 0 && self.x + self.w <= width && self.y + self.h <= height
    }
}

/// Pixel size of the simulated display.
pub fn viewport(platform: Platform) -> (u32, u32) {
    match platform {
        Platform::Mobile => (1080, 2400),
        Platform::Desktop => (1920, 1080),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Element {
    pub element_id: ElementId,
    pub label: String,
    pub bounds: Rect,
    pub affordances: BTreeSet<ActionKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<ScreenId>,
    /// Global flag toggled when the element is touched.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system_flag: Option<String>,
    /// Launcher entries (home screen, desktop taskbar) open this app.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub launches: Option<AppId>,
}

impl Element {
    pub fn is_system_global(&self) -> bool {
        self.system_flag.is_some()
    }

    pub fn affords(&self, kind: ActionKind) -> bool {
        self.affordances.contains(&kind)
    }

    pub fn navigates(&self) -> bool {
        self.target.is_some() || self.launches.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Screen {
    pub screen_id: ScreenId,
    pub label: String,
    pub elements: Vec<Element>,
    #[serde(default)]
    pub is_function_node: bool,
    #[serde(default)]
    pub is_login_gated: bool,
    #[serde(default)]
    pub scroll_extent: u32,
}

impl Screen {
    pub fn element(&self, id: &ElementId) -> Option<&Element> {
        self.elements.iter().find(|e| &e.element_id == id)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AppSpec {
    pub app_id: AppId,
    pub name: String,
    pub tags: BTreeSet<String>,
    pub screens: Vec<Screen>,
    pub entry_screen: ScreenId,
}

impl AppSpec {
    pub fn screen(&self, id: &ScreenId) -> Option<&Screen> {
        self.screens.iter().find(|s| &s.screen_id == id)
    }

    pub fn entry_key(&self) -> ScreenKey {
        ScreenKey { app: self.app_id.clone(), screen: self.entry_screen.clone() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct WorldDigest(pub u64);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StateDigest(pub u64);

impl fmt::Display for StateDigest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:016x}", self.0)
    }
}

impl fmt::Display for WorldDigest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:016x}", self.0)
    }
}

impl Serialize for StateDigest {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for StateDigest {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        if s.len() != 16 {
            return Err(serde::de::Error::custom("digest must be 16 hex digits"));
        }
        u64::from_str_radix(&s, 16)
            .map(StateDigest)
            .map_err(serde::de::Error::custom)
    }
}

/// Length-prefixed feed into SHA-256, truncated to 64 bits.
pub(crate) struct StableHasher(Sha256);

impl StableHasher {
    pub(crate) fn new(domain: &str) -> Self {
        let mut h = Self(Sha256::new());
        h.str(domain);
        h
    }

    pub(crate) fn str(&mut self, s: &str) -> &mut Self {
        self.0.update((s.len() as u64).to_le_bytes());
        self.0.update(s.as_bytes());
        self
    }

    pub(crate) fn u64(&mut self, v: u64) -> &mut Self {
        self.0.update(v.to_le_bytes());
        self
    }

    pub(crate) fn finish(self) -> u64 {
        let out = self.0.finalize();
        u64::from_be_bytes(out[..8].try_into().expect("sha256 output is 32 bytes"))
    }
}

#[derive(Debug, Error)]
pub enum EnvError {
    #[error("invalid params: {0}")]
    InvalidParams(String),
    #[error("invalid world: {0}")]
    InvalidWorld(String),
    #[error("unknown app `{0}`")]
    UnknownApp(String),
    #[error("illegal action {action}: {reason}")]
    IllegalAction { action: String, reason: String },
    #[error("oracle too large: {states} screen-level states exceed cap {cap}")]
    OracleTooLarge { states: usize, cap: usize },
    #[error("world fixture: {0}")]
    Fixture(String),
}

fn illegal(action: &Action, reason: impl Into<String>) -> EnvError {
    EnvError::IllegalAction { action: encode_action(action), reason: reason.into() }
}

/// An immutable generated or imported world.
#[derive(Debug, Clone)]
pub struct GuiWorld {
    pub seed: u64,
    pub platform: Platform,
    pub apps: Vec<AppSpec>,
    pub global_flags: BTreeSet<String>,
    home: Screen,
    taskbar: Vec<Element>,
    app_index: HashMap<AppId, usize>,
    digest: WorldDigest,
}

impl PartialEq for GuiWorld {
    fn eq(&self, other: &Self) -> bool {
        self.digest == other.digest
    }
}

impl GuiWorld {
    /// Assembles a world and checks its structural invariants. Graph-level
    /// properties (connectivity, function-node presence) are left to
    /// [`GuiWorld::invariant_violations`] so that broken fixtures can be built.
    pub fn from_parts(
        seed: u64,
        platform: Platform,
        apps: Vec<AppSpec>,
        global_flags: BTreeSet<String>,
    ) -> Result<Self, EnvError> {
        let bad = |m: String| Err(EnvError::InvalidWorld(m));
        if apps.is_empty() {
            return bad("world has no apps".into());
        }
        let (width, height) = viewport(platform);
        let mut app_index = HashMap::new();
        let mut element_ids = BTreeSet::new();
        for (i, app) in apps.iter().enumerate() {
            if !crate::action::is_identifier(app.app_id.as_str()) || app.app_id.as_str().starts_with('_') {
                return bad(format!("app id `{}` is not a valid identifier", app.app_id));
            }
            if app_index.insert(app.app_id.clone(), i).is_some() {
                return bad(format!("duplicate app id `{}`", app.app_id));
            }
            if app.screen(&app.entry_screen).is_none() {
                return bad(format!("app `{}` has no entry screen `{}`", app.app_id, app.entry_screen));
            }
            let mut screen_ids = BTreeSet::new();
            for screen in &app.screens {
                if screen.screen_id.as_str().contains('/') || screen.screen_id.as_str().is_empty() {
                    return bad(format!("screen id `{}` is not valid", screen.screen_id));
                }
                if !screen_ids.insert(&screen.screen_id) {
                    return bad(format!("duplicate screen `{}/{}`", app.app_id, screen.screen_id));
                }
                if screen.is_login_gated && screen.is_function_node {
                    return bad(format!("login-gated screen `{}/{}` is a function node", app.app_id, screen.screen_id));
                }
                for el in &screen.elements {
                    if !element_ids.insert(el.element_id.clone()) {
                        return bad(format!("duplicate element id `{}`", el.element_id));
                    }
                    if !el.bounds.within(width, height) {
                        return bad(format!("element `{}` lies outside the viewport", el.element_id));
                    }
                    for k in &el.affordances {
                        if !kind_allowed(*k, platform) || !k.is_element_bound() {
                            return bad(format!("element `{}` affords {k}, not legal here", el.element_id));
                        }
                    }
                    if el.launches.is_some() {
                        return bad(format!("element `{}`: launchers are reserved", el.element_id));
                    }
                }
            }
            for screen in &app.screens {
                for el in &screen.elements {
                    if let Some(t) = &el.target {
                        if app.screen(t).is_none() {
                            return bad(format!("element `{}` targets unknown screen `{t}`", el.element_id));
                        }
                    }
                }
            }
        }
        let home = build_home(platform, &apps);
        let taskbar = build_taskbar(platform, &apps);
        let mut world = Self {
            seed,
            platform,
            apps,
            global_flags,
            home,
            taskbar,
            app_index,
            digest: WorldDigest(0),
        };
        world.digest = WorldDigest({
            let file = WorldFile::from_world(&world);
            let json = serde_json::to_string(&file).expect("world serializes");
            let mut h = StableHasher::new("rewalk.world");
            h.str(&json);
            h.finish()
        });
        Ok(world)
    }

    pub fn digest(&self) -> WorldDigest {
        self.digest
    }

    pub fn app(&self, id: &AppId) -> Option<&AppSpec> {
        self.app_index.get(id).map(|&i| &self.apps[i])
    }

    pub fn app_by_str(&self, id: &str) -> Option<&AppSpec> {
        self.app(&AppId::from(id))
    }

    pub fn screen(&self, key: &ScreenKey) -> Option<&Screen> {
        if key.is_home() {
            return (self.platform == Platform::Mobile && key.screen == HOME_SCREEN).then_some(&self.home);
        }
        self.app(&key.app)?.screen(&key.screen)
    }

    pub fn home_screen(&self) -> Option<&Screen> {
        (self.platform == Platform::Mobile).then_some(&self.home)
    }

    pub fn taskbar(&self) -> &[Element] {
        &self.taskbar
    }

    pub fn app_ids(&self) -> Vec<AppId> {
        self.apps.iter().map(|a| a.app_id.clone()).collect()
    }

    /// Label shown for an app, falling back to the id for the home screen.
    pub fn app_name(&self, id: &AppId) -> String {
        self.app(id).map(|a| a.name.clone()).unwrap_or_else(|| "Home".to_string())
    }

    pub fn screen_count(&self) -> usize {
        self.apps.iter().map(|a| a.screens.len()).sum::<usize>() + usize::from(self.platform == Platform::Mobile)
    }

    pub fn function_nodes(&self) -> impl Iterator<Item = (ScreenKey, &Screen)> {
        self.apps.iter().flat_map(|app| {
            app.screens
                .iter()
                .filter(|s| s.is_function_node)
                .map(move |s| (ScreenKey { app: app.app_id.clone(), screen: s.screen_id.clone() }, s))
        })
    }

    /// Elements reachable by pointer on the state's screen, including the
    /// desktop taskbar.
    pub fn visible_elements<'a>(&'a self, state: &EnvState) -> impl Iterator<Item = &'a Element> + 'a {
        let screen_elems = self
            .screen(&state.screen_key())
            .map(|s| s.elements.as_slice())
            .unwrap_or(&[]);
        screen_elems.iter().chain(self.taskbar.iter())
    }

    pub fn find_element(&self, state: &EnvState, id: &ElementId) -> Option<&Element> {
        self.visible_elements(state).find(|e| &e.element_id == id)
    }

    /// Graph-level checks that generated worlds always satisfy.
    pub fn invariant_violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.function_nodes().next().is_none() {
            out.push("world has no function node".into());
        }
        for app in &self.apps {
            let reach = app_local_reach(app);
            for s in &app.screens {
                if !reach.contains(&s.screen_id) {
                    out.push(format!("app `{}`: screen `{}` unreachable from entry", app.app_id, s.screen_id));
                }
                if s.elements.is_empty() && !s.is_function_node {
                    out.push(format!("app `{}`: screen `{}` has no elements", app.app_id, s.screen_id));
                }
            }
        }
        out
    }
}

/// Screens of one app reachable from its entry through element targets.
pub fn app_local_reach(app: &AppSpec) -> BTreeSet<ScreenId> {
    let mut seen = BTreeSet::from([app.entry_screen.clone()]);
    let mut queue = vec![app.entry_screen.clone()];
    while let Some(id) = queue.pop() {
        if let Some(screen) = app.screen(&id) {
            for t in screen.elements.iter().filter_map(|e| e.target.as_ref()) {
                if seen.insert(t.clone()) {
                    queue.push(t.clone());
                }
            }
        }
    }
    seen
}

pub(crate) fn grid_layout(n: usize, cols: usize, area: Rect, max_h: u32) -> Vec<Rect> {
    if n == 0 {
        return Vec::new();
    }
    let cols = cols.max(1).min(n);
    let rows = n.div_ceil(cols) as u32;
    let cell_w = area.w / cols as u32;
    let cell_h = (area.h / rows).min(max_h);
    let pad_x = (cell_w / 12).min(10);
    let pad_y = (cell_h / 12).min(10);
    (0..n)
        .map(|i| {
            let (r, c) = ((i / cols) as u32, (i % cols) as u32);
            Rect::new(
                area.x + c * cell_w + pad_x,
                area.y + r * cell_h + pad_y,
                cell_w - 2 * pad_x,
                cell_h - 2 * pad_y,
            )
        })
        .collect()
}

fn build_home(platform: Platform, apps: &[AppSpec]) -> Screen {
    let (w, h) = viewport(platform);
    let rects = grid_layout(apps.len(), 4, Rect::new(0, 200, w, h - 400), 300);
    let elements = if platform == Platform::Mobile {
        apps.iter()
            .zip(rects)
            .map(|(app, bounds)| Element {
                element_id: ElementId(format!("launcher.{}", app.app_id)),
                label: app.name.clone(),
                bounds,
                affordances: BTreeSet::from([ActionKind::Click, ActionKind::LongPress]),
                target: None,
                system_flag: None,
                launches: Some(app.app_id.clone()),
            })
            .collect()
    } else {
        Vec::new()
    };
    Screen {
        screen_id: ScreenId(HOME_SCREEN.into()),
        label: "Home".into(),
        elements,
        is_function_node: false,
        is_login_gated: false,
        scroll_extent: 0,
    }
}

pub(crate) const TASKBAR_HEIGHT: u32 = 48;

fn build_taskbar(platform: Platform, apps: &[AppSpec]) -> Vec<Element> {
    if platform != Platform::Desktop {
        return Vec::new();
    }
    let (w, h) = viewport(platform);
    let slot = (w / apps.len() as u32).min(120);
    apps.iter()
        .enumerate()
        .map(|(i, app)| Element {
            element_id: ElementId(format!("taskbar.{}", app.app_id)),
            label: app.name.clone(),
            bounds: Rect::new(i as u32 * slot + 2, h - TASKBAR_HEIGHT + 4, slot - 4, TASKBAR_HEIGHT - 8),
            affordances: BTreeSet::from([ActionKind::Click, ActionKind::LeftDouble]),
            target: None,
            system_flag: None,
            launches: Some(app.app_id.clone()),
        })
        .collect()
}

/// A concrete GUI situation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnvState {
    pub world_ref: WorldDigest,
    pub app_id: AppId,
    pub screen_id: ScreenId,
    pub scroll_position: u32,
    pub back_stack: Vec<ScreenKey>,
    pub text_buffers: BTreeMap<ElementId, String>,
    /// Buffers committed with PressEnter.
    pub submitted: BTreeSet<ElementId>,
    pub focus: Option<ElementId>,
    pub global_flags: BTreeSet<String>,
    /// Step counter; not part of the digest.
    pub tick: u64,
}

impl Serialize for WorldDigest {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for WorldDigest {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        u64::from_str_radix(&s, 16).map(WorldDigest).map_err(serde::de::Error::custom)
    }
}

impl EnvState {
    pub fn screen_key(&self) -> ScreenKey {
        ScreenKey { app: self.app_id.clone(), screen: self.screen_id.clone() }
    }

    pub fn digest(&self) -> StateDigest {
        let mut h = StableHasher::new("rewalk.state");
        h.u64(self.world_ref.0)
            .str(self.app_id.as_str())
            .str(self.screen_id.as_str())
            .u64(self.scroll_position as u64)
            .u64(self.back_stack.len() as u64);
        for k in &self.back_stack {
            h.str(k.app.as_str()).str(k.screen.as_str());
        }
        h.u64(self.text_buffers.len() as u64);
        for (k, v) in &self.text_buffers {
            h.str(k.as_str()).str(v);
        }
        h.u64(self.submitted.len() as u64);
        for k in &self.submitted {
            h.str(k.as_str());
        }
        match &self.focus {
            Some(f) => h.u64(1).str(f.as_str()),
            None => h.u64(0),
        };
        h.u64(self.global_flags.len() as u64);
        for f in &self.global_flags {
            h.str(f);
        }
        StateDigest(h.finish())
    }

    fn goto(&mut self, key: ScreenKey) {
        self.app_id = key.app;
        self.screen_id = key.screen;
        self.scroll_position = 0;
        self.focus = None;
    }

    fn push_and_goto(&mut self, key: ScreenKey) {
        let here = self.screen_key();
        self.back_stack.push(here);
        self.goto(key);
    }
}

pub fn reset(world: &GuiWorld, app_id: &str) -> Result<EnvState, EnvError> {
    let app = world.app_by_str(app_id).ok_or_else(|| EnvError::UnknownApp(app_id.to_string()))?;
    Ok(EnvState {
        world_ref: world.digest(),
        app_id: app.app_id.clone(),
        screen_id: app.entry_screen.clone(),
        scroll_position: 0,
        back_stack: Vec::new(),
        text_buffers: BTreeMap::new(),
        submitted: BTreeSet::new(),
        focus: None,
        global_flags: world.global_flags.clone(),
        tick: 0,
    })
}

/// One executable (kind, element) pair.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Available {
    pub kind: ActionKind,
    pub element: Option<ElementId>,
}

/// The element a `Type` action writes into: the focused field when it is on
/// screen, otherwise the first text field of the screen.
pub fn type_target<'a>(world: &'a GuiWorld, state: &EnvState) -> Option<&'a Element> {
    let screen = world.screen(&state.screen_key())?;
    if let Some(f) = &state.focus {
        if let Some(el) = screen.element(f) {
            if el.affords(ActionKind::Type) {
                return Some(el);
            }
        }
    }
    screen.elements.iter().find(|e| e.affords(ActionKind::Type))
}

pub fn available_actions(world: &GuiWorld, state: &EnvState) -> Vec<Available> {
    let mut out = BTreeSet::new();
    let typing = type_target(world, state).map(|e| e.element_id.clone());
    for el in world.visible_elements(state) {
        for &kind in &el.affordances {
            if kind == ActionKind::Type {
                continue;
            }
            out.insert(Available { kind, element: Some(el.element_id.clone()) });
        }
    }
    if let Some(id) = typing {
        out.insert(Available { kind: ActionKind::Type, element: Some(id) });
    }
    out.insert(Available { kind: ActionKind::Wait, element: None });
    if world.screen(&state.screen_key()).is_some_and(|s| s.scroll_extent > 0) {
        out.insert(Available { kind: ActionKind::Scroll, element: None });
    }
    match world.platform {
        Platform::Mobile => {
            for kind in [ActionKind::Launch, ActionKind::PressBack, ActionKind::PressHome, ActionKind::PressEnter] {
                out.insert(Available { kind, element: None });
            }
        }
        Platform::Desktop => {
            out.insert(Available { kind: ActionKind::HotKey, element: None });
        }
    }
    out.into_iter().collect()
}

fn hit<'a>(world: &'a GuiWorld, state: &EnvState, action: &Action) -> Result<&'a Element, EnvError> {
    let (x, y) = action.point().expect("pointer action");
    let kind = action.kind();
    world
        .visible_elements(state)
        .find(|e| e.bounds.contains(x, y))
        .filter(|e| e.affords(kind))
        .ok_or_else(|| illegal(action, format!("no element affording {kind} at ({x}, {y})")))
}

fn touch(state: &mut EnvState, el: &Element) {
    if let Some(flag) = &el.system_flag {
        if !state.global_flags.remove(flag) {
            state.global_flags.insert(flag.clone());
        }
    }
}

fn activate(world: &GuiWorld, state: &mut EnvState, el: &Element) {
    touch(state, el);
    if let Some(app) = &el.launches {
        let entry = world.app(app).expect("launcher for known app").entry_key();
        state.push_and_goto(entry);
    } else if let Some(target) = &el.target {
        let key = ScreenKey { app: state.app_id.clone(), screen: target.clone() };
        state.push_and_goto(key);
    } else if el.affords(ActionKind::Type) {
        state.focus = Some(el.element_id.clone());
    }
}

/// Applies one action. Pure: the input state is left untouched.
pub fn transition(world: &GuiWorld, state: &EnvState, action: &Action) -> Result<EnvState, EnvError> {
    if state.world_ref != world.digest() {
        return Err(illegal(action, "state belongs to a different world"));
    }
    if !crate::action::validate_platform(action, world.platform) {
        return Err(illegal(action, format!("not available on {}", world.platform)));
    }
    if action.kind().is_decision() {
        return Ok(state.clone());
    }
    let screen = world
        .screen(&state.screen_key())
        .ok_or_else(|| illegal(action, "state is on an unknown screen"))?;
    let mut next = state.clone();
    next.tick += 1;
    match action {
        Action::Wait | Action::HotKey { .. } => {}
        Action::Scroll { direction } => {
            if screen.scroll_extent == 0 {
                return Err(illegal(action, "screen does not scroll"));
            }
            match direction {
                Direction::Up => next.scroll_position = next.scroll_position.saturating_sub(1),
                Direction::Down => next.scroll_position = (next.scroll_position + 1).min(screen.scroll_extent),
                Direction::Left | Direction::Right => {}
            }
        }
        Action::Click { .. } | Action::LeftDouble { .. } => {
            let el = hit(world, state, action)?;
            activate(world, &mut next, el);
        }
        Action::LongPress { .. } | Action::RightSingle { .. } => {
            let el = hit(world, state, action)?;
            touch(&mut next, el);
        }
        Action::Drag { x2, y2, .. } => {
            hit(world, state, action)?;
            let (w, h) = viewport(world.platform);
            if *x2 >= w || *y2 >= h {
                return Err(illegal(action, "drag ends outside the viewport"));
            }
        }
        Action::Type { content } => {
            let el = type_target(world, state).ok_or_else(|| illegal(action, "no text field on screen"))?;
            next.text_buffers.insert(el.element_id.clone(), content.clone());
            next.submitted.remove(&el.element_id);
            next.focus = Some(el.element_id.clone());
        }
        Action::Launch { app } => {
            let app = world.app_by_str(app).ok_or_else(|| illegal(action, format!("unknown app `{app}`")))?;
            next.push_and_goto(app.entry_key());
        }
        Action::PressBack => {
            if let Some(prev) = next.back_stack.pop() {
                next.goto(prev);
            }
        }
        Action::PressHome => {
            if !state.screen_key().is_home() {
                next.push_and_goto(ScreenKey::home());
            }
        }
        Action::PressEnter => {
            if let Some(el) = type_target(world, state) {
                if next.text_buffers.get(&el.element_id).is_some_and(|t| !t.is_empty()) {
                    next.submitted.insert(el.element_id.clone());
                }
            }
        }
        Action::Completed | Action::Infeasible => unreachable!("handled above"),
    }
    Ok(next)
}

/// Turns an available (kind, element) pair into a concrete action for the
/// kinds that need no generated payload.
pub fn pointer_action(kind: ActionKind, el: &Element) -> Option<Action> {
    let (x, y) = el.bounds.center();
    Some(match kind {
        ActionKind::Click => Action::Click { x, y },
        ActionKind::LongPress => Action::LongPress { x, y },
        ActionKind::LeftDouble => Action::LeftDouble { x, y },
        ActionKind::RightSingle => Action::RightSingle { x, y },
        _ => return None,
    })
}

/// Drag from the element's center toward the right edge, kept on screen.
pub fn drag_action(platform: Platform, el: &Element) -> Action {
    let (w, _) = viewport(platform);
    let (x, y) = el.bounds.center();
    Action::Drag { x1: x, y1: y, x2: (x + 200).min(w - 1), y2: y }
}

/// Records the filter-relevant effects of a step.
pub fn record_step(
    world: &GuiWorld,
    index: usize,
    phase: crate::action::Phase,
    pre: &EnvState,
    action: &Action,
    post: &EnvState,
) -> crate::action::ActionRecord {
    let post_screen = post.screen_key();
    crate::action::ActionRecord {
        index,
        action: action.clone(),
        phase,
        pre_digest: pre.digest(),
        post_digest: post.digest(),
        pre_screen: pre.screen_key(),
        login_gated: world.screen(&post_screen).is_some_and(|s| s.is_login_gated),
        post_screen,
        cleared_flags: pre.global_flags.difference(&post.global_flags).cloned().collect(),
    }
}

/// Plain-text rendering of a screen for prompts.
pub fn describe_screen(world: &GuiWorld, state: &EnvState) -> String {
    let key = state.screen_key();
    let mut out = String::new();
    let app_name = world.app_name(&state.app_id);
    match world.screen(&key) {
        Some(screen) => {
            out.push_str(&format!("App: {app_name}\nScreen: {}\n", screen.label));
            if screen.scroll_extent > 0 {
                out.push_str(&format!("Scroll: page {} of {}\n", state.scroll_position + 1, screen.scroll_extent + 1));
            }
            out.push_str("Elements:\n");
            for el in world.visible_elements(state) {
                let b = el.bounds;
                let kinds: Vec<&str> = el.affordances.iter().map(|k| k.name()).collect();
                out.push_str(&format!(
                    "- \"{}\" at [{}, {}, {}, {}] accepts {}",
                    el.label,
                    b.x,
                    b.y,
                    b.x + b.w,
                    b.y + b.h,
                    kinds.join("/")
                ));
                if let Some(text) = state.text_buffers.get(&el.element_id) {
                    out.push_str(&format!(" (text: \"{text}\")"));
                }
                out.push('\n');
            }
        }
        None => out.push_str(&format!("App: {app_name}\nScreen: unknown\n")),
    }
    out
}
