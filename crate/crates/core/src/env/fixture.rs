//! World fixture documents and a small builder for hand-made worlds.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::generate::default_global_flags;
use super::{grid_layout, viewport, AppId, AppSpec, Element, ElementId, EnvError, GuiWorld, Rect, Screen, ScreenId};
use crate::action::{ActionKind, Platform};

pub const WORLD_SCHEMA_VERSION: u32 = 1;

/// On-disk form of a world (`"world_schema": 1`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorldFile {
    pub world_schema: u32,
    pub seed: u64,
    pub platform: Platform,
    pub global_flags: BTreeSet<String>,
    pub apps: Vec<AppSpec>,
}

impl WorldFile {
    pub fn from_world(world: &GuiWorld) -> Self {
        Self {
            world_schema: WORLD_SCHEMA_VERSION,
            seed: world.seed,
            platform: world.platform,
            global_flags: world.global_flags.clone(),
            apps: world.apps.clone(),
        }
    }

    pub fn into_world(self) -> Result<GuiWorld, EnvError> {
        if self.world_schema != WORLD_SCHEMA_VERSION {
            return Err(EnvError::Fixture(format!(
                "unsupported world_schema {} (expected {WORLD_SCHEMA_VERSION})",
                self.world_schema
            )));
        }
        GuiWorld::from_parts(self.seed, self.platform, self.apps, self.global_flags)
    }
}

impl GuiWorld {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&WorldFile::from_world(self)).expect("world serializes")
    }

    pub fn from_json(text: &str) -> Result<GuiWorld, EnvError> {
        let file: WorldFile = serde_json::from_str(text).map_err(|e| EnvError::Fixture(e.to_string()))?;
        file.into_world()
    }

    pub fn load(path: &Path) -> Result<GuiWorld, EnvError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| EnvError::Fixture(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn save(&self, path: &Path) -> Result<(), EnvError> {
        std::fs::write(path, self.to_json() + "\n")
            .map_err(|e| EnvError::Fixture(format!("{}: {e}", path.display())))
    }
}

#[derive(Debug, Clone)]
enum PendingElement {
    Nav { label: String, target: String, kinds: Vec<ActionKind> },
    Plain { label: String, kinds: Vec<ActionKind>, system_flag: Option<String> },
}

/// One screen under construction; elements are laid out on a grid when the
/// world is built.
#[derive(Debug, Clone)]
pub struct ScreenBuilder {
    id: String,
    label: String,
    function: bool,
    login: bool,
    scroll: u32,
    elements: Vec<PendingElement>,
}

impl ScreenBuilder {
    pub fn new(id: &str, label: &str) -> Self {
        Self { id: id.into(), label: label.into(), function: false, login: false, scroll: 0, elements: Vec::new() }
    }

    pub fn function_node(mut self) -> Self {
        self.function = true;
        self
    }

    pub fn login_gated(mut self) -> Self {
        self.login = true;
        self
    }

    pub fn scroll(mut self, extent: u32) -> Self {
        self.scroll = extent;
        self
    }

    /// Clickable element navigating to `target` (a screen id in the same app).
    pub fn link(mut self, label: &str, target: &str) -> Self {
        self.elements.push(PendingElement::Nav {
            label: label.into(),
            target: target.into(),
            kinds: vec![ActionKind::Click],
        });
        self
    }

    pub fn link_with(mut self, label: &str, target: &str, kinds: &[ActionKind]) -> Self {
        self.elements.push(PendingElement::Nav { label: label.into(), target: target.into(), kinds: kinds.to_vec() });
        self
    }

    pub fn element(mut self, label: &str, kinds: &[ActionKind]) -> Self {
        self.elements.push(PendingElement::Plain { label: label.into(), kinds: kinds.to_vec(), system_flag: None });
        self
    }

    pub fn text_field(self, label: &str) -> Self {
        self.element(label, &[ActionKind::Click, ActionKind::Type])
    }

    pub fn system_toggle(mut self, label: &str, flag: &str) -> Self {
        self.elements.push(PendingElement::Plain {
            label: label.into(),
            kinds: vec![ActionKind::Click],
            system_flag: Some(flag.into()),
        });
        self
    }
}

#[derive(Debug, Clone)]
struct PendingApp {
    id: String,
    name: String,
    tags: Vec<String>,
    screens: Vec<ScreenBuilder>,
}

/// Builds small hand-made worlds for tests and diagnostics. The first screen
/// added to an app is its entry.
#[derive(Debug, Clone)]
pub struct WorldBuilder {
    seed: u64,
    platform: Platform,
    flags: BTreeSet<String>,
    apps: Vec<PendingApp>,
}

impl WorldBuilder {
    pub fn new(platform: Platform) -> Self {
        Self { seed: 0, platform, flags: default_global_flags(), apps: Vec::new() }
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn app(mut self, id: &str, name: &str, tags: &[&str], screens: Vec<ScreenBuilder>) -> Self {
        self.apps.push(PendingApp {
            id: id.into(),
            name: name.into(),
            tags: tags.iter().map(|t| t.to_string()).collect(),
            screens,
        });
        self
    }

    pub fn build(self) -> Result<GuiWorld, EnvError> {
        let (w, h) = viewport(self.platform);
        let area = match self.platform {
            Platform::Mobile => Rect::new(0, 200, w, h - 400),
            Platform::Desktop => Rect::new(0, 60, w, h - 120),
        };
        let cols = if self.platform == Platform::Mobile { 2 } else { 4 };
        let apps = self
            .apps
            .into_iter()
            .map(|app| {
                let entry = app
                    .screens
                    .first()
                    .map(|s| ScreenId(s.id.clone()))
                    .ok_or_else(|| EnvError::InvalidWorld(format!("app `{}` has no screens", app.id)))?;
                let screens = app
                    .screens
                    .into_iter()
                    .map(|s| {
                        let rects = grid_layout(s.elements.len(), cols, area, 160);
                        let elements = s
                            .elements
                            .into_iter()
                            .zip(rects)
                            .enumerate()
                            .map(|(i, (p, bounds))| {
                                let element_id = ElementId(format!("{}.{}.e{i}", app.id, s.id));
                                match p {
                                    PendingElement::Nav { label, target, kinds } => Element {
                                        element_id,
                                        label,
                                        bounds,
                                        affordances: kinds.into_iter().collect(),
                                        target: Some(ScreenId(target)),
                                        system_flag: None,
                                        launches: None,
                                    },
                                    PendingElement::Plain { label, kinds, system_flag } => Element {
                                        element_id,
                                        label,
                                        bounds,
                                        affordances: kinds.into_iter().collect(),
                                        target: None,
                                        system_flag,
                                        launches: None,
                                    },
                                }
                            })
                            .collect();
                        Screen {
                            screen_id: ScreenId(s.id),
                            label: s.label,
                            elements,
                            is_function_node: s.function,
                            is_login_gated: s.login,
                            scroll_extent: s.scroll,
                        }
                    })
                    .collect();
                Ok(AppSpec {
                    app_id: AppId(app.id),
                    name: app.name,
                    tags: app.tags.into_iter().collect(),
                    screens,
                    entry_screen: entry,
                })
            })
            .collect::<Result<Vec<_>, EnvError>>()?;
        GuiWorld::from_parts(self.seed, self.platform, apps, self.flags)
    }
}
