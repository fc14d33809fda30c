use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{
    grid_layout, viewport, AppId, AppSpec, Element, ElementId, EnvError, GuiWorld, Rect, Screen, ScreenId,
    TASKBAR_HEIGHT,
};
use crate::action::{ActionKind, Platform};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorldParams {
    pub platform: Platform,
    pub app_count: u32,
    pub screens_per_app: u32,
    /// Upper bound on elements per screen; each screen draws from [2, this].
    pub elements_per_screen: u32,
    pub login_fraction: f64,
    pub system_global_fraction: f64,
}

impl Default for WorldParams {
    fn default() -> Self {
        Self {
            platform: Platform::Mobile,
            app_count: 8,
            screens_per_app: 6,
            elements_per_screen: 6,
            login_fraction: 0.05,
            system_global_fraction: 0.03,
        }
    }
}

impl WorldParams {
    pub fn with_platform(platform: Platform) -> Self {
        Self { platform, ..Self::default() }
    }

    /// Returns the offending field and reason.
    pub fn validate(&self) -> Result<(), (&'static str, String)> {
        if !(2..=64).contains(&self.app_count) {
            return Err(("app_count", format!("{} not in [2, 64]", self.app_count)));
        }
        if !(3..=40).contains(&self.screens_per_app) {
            return Err(("screens_per_app", format!("{} not in [3, 40]", self.screens_per_app)));
        }
        if !(2..=20).contains(&self.elements_per_screen) {
            return Err(("elements_per_screen", format!("{} not in [2, 20]", self.elements_per_screen)));
        }
        if !(0.0..=0.3).contains(&self.login_fraction) {
            return Err(("login_fraction", format!("{} not in [0, 0.3]", self.login_fraction)));
        }
        if !(0.0..=0.1).contains(&self.system_global_fraction) {
            return Err(("system_global_fraction", format!("{} not in [0, 0.1]", self.system_global_fraction)));
        }
        Ok(())
    }
}

struct CatalogApp {
    id: &'static str,
    name: &'static str,
    tags: &'static [&'static str],
}

const CATALOG: &[CatalogApp] = &[
    CatalogApp { id: "chrome", name: "Chrome", tags: &["web", "search", "news"] },
    CatalogApp { id: "map", name: "Maps", tags: &["travel", "search", "places"] },
    CatalogApp { id: "clock", name: "Clock", tags: &["time", "alarm", "utility"] },
    CatalogApp { id: "settings", name: "Settings", tags: &["system", "utility"] },
    CatalogApp { id: "youtube", name: "YouTube", tags: &["video", "media", "search"] },
    CatalogApp { id: "calendar", name: "Calendar", tags: &["time", "planning"] },
    CatalogApp { id: "notes", name: "Notes", tags: &["productivity", "writing"] },
    CatalogApp { id: "weather", name: "Weather", tags: &["travel", "places", "utility"] },
    CatalogApp { id: "music", name: "Music", tags: &["media", "audio"] },
    CatalogApp { id: "files", name: "Files", tags: &["productivity", "storage"] },
    CatalogApp { id: "camera", name: "Camera", tags: &["media", "photo"] },
    CatalogApp { id: "gallery", name: "Gallery", tags: &["media", "photo", "storage"] },
    CatalogApp { id: "health", name: "Health", tags: &["health", "safety"] },
    CatalogApp { id: "contacts", name: "Contacts", tags: &["people", "safety"] },
    CatalogApp { id: "shop", name: "Shop", tags: &["shopping", "search"] },
    CatalogApp { id: "news", name: "News", tags: &["news", "reading"] },
    CatalogApp { id: "recipes", name: "Recipes", tags: &["food", "reading", "search"] },
    CatalogApp { id: "translate", name: "Translate", tags: &["language", "utility"] },
    CatalogApp { id: "calculator", name: "Calculator", tags: &["utility", "math"] },
    CatalogApp { id: "podcasts", name: "Podcasts", tags: &["audio", "media"] },
    CatalogApp { id: "books", name: "Books", tags: &["reading", "storage"] },
    CatalogApp { id: "fitness", name: "Fitness", tags: &["health", "time"] },
    CatalogApp { id: "finance", name: "Finance", tags: &["money", "productivity"] },
    CatalogApp { id: "travel", name: "Travel", tags: &["travel", "planning", "places"] },
];

/// Goal-eligible feature screens per tag.
fn feature_labels(tag: &str) -> &'static [&'static str] {
    match tag {
        "web" => &["Bookmarks", "Reading list", "Downloads", "Open new tab"],
        "search" => &["Search results", "Saved searches", "Top result"],
        "news" => &["Top stories", "Headline article", "Local news"],
        "travel" => &["Directions", "Saved places", "Trip itinerary"],
        "places" => &["Nearby restaurants", "Place details", "Forecast for Paris"],
        "time" => &["Set alarm", "World clock", "Start timer"],
        "alarm" => &["Set alarm", "Bedtime schedule", "Snooze settings"],
        "utility" => &["Unit converter", "Quick settings", "History"],
        "system" => &["Display brightness", "Battery usage", "Storage overview"],
        "video" => &["Watch video", "Watch later", "Subscriptions"],
        "media" => &["Now playing", "Playlist", "Library"],
        "planning" => &["New event", "Agenda", "Reminders"],
        "productivity" => &["New note", "Pinned notes", "Recent files"],
        "writing" => &["Draft", "Checklist", "Archive"],
        "audio" => &["Play episode", "Queue", "Equalizer"],
        "storage" => &["Downloads folder", "Recent photos", "Free up space"],
        "photo" => &["Take photo", "Album", "Edit photo"],
        "health" => &["Emergency information", "Step count", "Medications"],
        "safety" => &["Emergency contacts", "Medical ID", "Safety check"],
        "people" => &["Contact details", "Favorites", "Add contact"],
        "shopping" => &["Cart", "Order status", "Product page"],
        "reading" => &["Continue reading", "Article view", "Saved articles"],
        "food" => &["Recipe details", "Shopping list", "Meal plan"],
        "language" => &["Translate text", "Phrasebook", "Conversation"],
        "math" => &["Scientific mode", "Calculation history", "Currency"],
        "money" => &["Account balance", "Spending report", "Budget"],
        _ => &["Overview"],
    }
}

const GENERIC_SCREENS: &[&str] = &["Details", "Preferences", "About", "Help", "Categories", "Recent", "Profile", "Menu"];
const BUTTON_LABELS: &[&str] = &["More options", "Refresh", "Sort", "Filter", "Favorite", "Info", "Share", "Edit"];
const FIELD_LABELS: &[&str] = &["Search", "Enter text", "Name", "Notes", "Address", "Allergies"];
const SYSTEM_TOGGLES: &[(&str, &str)] = &[
    ("Airplane mode", "network_enabled"),
    ("Mobile data", "network_enabled"),
    ("Bluetooth", "bluetooth_enabled"),
    ("Location", "location_enabled"),
];

pub fn default_global_flags() -> BTreeSet<String> {
    ["network_enabled", "bluetooth_enabled", "location_enabled"]
        .into_iter()
        .map(String::from)
        .collect()
}

fn content_area(platform: Platform) -> Rect {
    let (w, h) = viewport(platform);
    match platform {
        Platform::Mobile => Rect::new(0, 200, w, h - 400),
        Platform::Desktop => Rect::new(0, 60, w, h - 60 - TASKBAR_HEIGHT - 12),
    }
}

enum Slot {
    Nav { target: usize, label: String },
    Back { target: usize },
    Field(String),
    Button(String),
    Slider,
    System(&'static str, &'static str),
}

/// Generates a world; deterministic in `(seed, params)`.
pub fn generate_world(seed: u64, params: &WorldParams) -> Result<GuiWorld, EnvError> {
    params
        .validate()
        .map_err(|(field, why)| EnvError::InvalidParams(format!("{field}: {why}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let platform = params.platform;

    let mut order: Vec<usize> = (0..CATALOG.len()).collect();
    order.shuffle(&mut rng);
    let mut apps = Vec::with_capacity(params.app_count as usize);
    for i in 0..params.app_count as usize {
        let base = &CATALOG[order[i % CATALOG.len()]];
        let round = i / CATALOG.len();
        let (id, name) = if round == 0 {
            (base.id.to_string(), base.name.to_string())
        } else {
            (format!("{}-{}", base.id, round + 1), format!("{} {}", base.name, round + 1))
        };
        apps.push(generate_app(&mut rng, params, id, name, base.tags));
    }
    GuiWorld::from_parts(seed, platform, apps, default_global_flags())
}

fn generate_app(
    rng: &mut ChaCha8Rng,
    params: &WorldParams,
    id: String,
    name: String,
    tags: &[&str],
) -> AppSpec {
    let n = params.screens_per_app as usize;
    let cap = params.elements_per_screen as usize;

    // Spanning tree from the entry, respecting per-screen element capacity
    // (non-entry screens reserve one slot for their back element).
    let capacity = |i: usize| if i == 0 { cap } else { cap - 1 };
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut parent = vec![0usize; n];
    for k in 1..n {
        let open: Vec<usize> = (0..k).filter(|&p| children[p].len() < capacity(p)).collect();
        let p = *open.choose(rng).expect("the newest screen always has room");
        children[p].push(k);
        parent[k] = p;
    }
    let mut extra: Vec<Vec<usize>> = vec![Vec::new(); n];
    for s in 0..n {
        if rng.gen_bool(0.3) && children[s].len() + extra[s].len() < capacity(s) {
            let t = rng.gen_range(1..n);
            if t != s && !children[s].contains(&t) && parent[s] != t {
                extra[s].push(t);
            }
        }
    }

    let mut login = vec![false; n];
    for flag in login.iter_mut().skip(1) {
        *flag = rng.gen_bool(params.login_fraction);
    }
    let mut candidates: Vec<usize> = (1..n).filter(|&i| !login[i]).collect();
    if candidates.is_empty() {
        login[n - 1] = false;
        candidates.push(n - 1);
    }
    candidates.shuffle(rng);
    let n_features = ((n - 1) / 3).max(1).min(candidates.len());
    let mut function = vec![false; n];
    for &i in &candidates[..n_features] {
        function[i] = true;
    }

    let mut feature_pool: Vec<&str> = tags.iter().flat_map(|t| feature_labels(t).iter().copied()).collect();
    feature_pool.sort_unstable();
    feature_pool.dedup();
    feature_pool.shuffle(rng);
    let mut generic_pool: Vec<&str> = GENERIC_SCREENS.to_vec();
    generic_pool.shuffle(rng);
    let mut used = BTreeSet::new();
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let label = if i == 0 {
            format!("{name} Home")
        } else if login[i] {
            format!("Sign in {i}")
        } else {
            let pool: &mut Vec<&str> = if function[i] { &mut feature_pool } else { &mut generic_pool };
            match pool.pop() {
                Some(l) if used.insert(l.to_string()) => l.to_string(),
                _ => format!("{} {i}", if function[i] { "Feature" } else { "Section" }),
            }
        };
        labels.push(label);
    }

    let screen_id = |i: usize| ScreenId(if i == 0 { "main".to_string() } else { format!("s{i}") });
    let area = content_area(params.platform);
    let cols = if params.platform == Platform::Mobile { 2 } else { 4 };

    let screens = (0..n)
        .map(|i| {
            let mut slots: Vec<Slot> = children[i]
                .iter()
                .chain(extra[i].iter())
                .map(|&t| Slot::Nav { target: t, label: labels[t].clone() })
                .collect();
            if i != 0 {
                slots.push(Slot::Back { target: parent[i] });
            }
            let want = rng.gen_range(2..=cap).max(slots.len());
            while slots.len() < want {
                let roll: f64 = rng.gen();
                let slot = if roll < params.system_global_fraction {
                    let (label, flag) = SYSTEM_TOGGLES[rng.gen_range(0..SYSTEM_TOGGLES.len())];
                    Slot::System(label, flag)
                } else if roll < 0.25 {
                    Slot::Field(FIELD_LABELS[rng.gen_range(0..FIELD_LABELS.len())].to_string())
                } else if roll < 0.35 {
                    Slot::Slider
                } else {
                    Slot::Button(BUTTON_LABELS[rng.gen_range(0..BUTTON_LABELS.len())].to_string())
                };
                slots.push(slot);
            }
            slots.shuffle(rng);

            let rects = grid_layout(slots.len(), cols, area, 160);
            let elements = slots
                .into_iter()
                .zip(rects)
                .enumerate()
                .map(|(e, (slot, bounds))| {
                    let element_id = ElementId(format!("{id}.{}.e{e}", screen_id(i)));
                    build_element(rng, params.platform, element_id, bounds, slot, &screen_id)
                })
                .collect();
            Screen {
                screen_id: screen_id(i),
                label: labels[i].clone(),
                elements,
                is_function_node: function[i],
                is_login_gated: login[i],
                scroll_extent: if rng.gen_bool(0.5) { 0 } else { rng.gen_range(1..=3) },
            }
        })
        .collect();

    AppSpec {
        app_id: AppId(id),
        name,
        tags: tags.iter().map(|t| t.to_string()).collect(),
        screens,
        entry_screen: screen_id(0),
    }
}

fn build_element(
    rng: &mut ChaCha8Rng,
    platform: Platform,
    element_id: ElementId,
    bounds: Rect,
    slot: Slot,
    screen_id: &dyn Fn(usize) -> ScreenId,
) -> Element {
    use ActionKind::*;
    let mobile = platform == Platform::Mobile;
    let mut aff = BTreeSet::new();
    let mut maybe = |aff: &mut BTreeSet<ActionKind>, kind: ActionKind, p: f64| {
        if rng.gen_bool(p) {
            aff.insert(kind);
        }
    };
    let (label, target, system_flag) = match slot {
        Slot::Nav { target, label } => {
            aff.insert(Click);
            if mobile {
                maybe(&mut aff, LongPress, 0.2);
            } else {
                maybe(&mut aff, LeftDouble, 0.3);
                maybe(&mut aff, RightSingle, 0.3);
            }
            (label, Some(screen_id(target)), None)
        }
        Slot::Back { target } => {
            aff.insert(Click);
            let label = if mobile { "Navigate up" } else { "Back" };
            (label.to_string(), Some(screen_id(target)), None)
        }
        Slot::Field(label) => {
            aff.insert(Click);
            aff.insert(Type);
            if !mobile {
                maybe(&mut aff, RightSingle, 0.3);
            }
            (label, None, None)
        }
        Slot::Button(label) => {
            aff.insert(Click);
            if mobile {
                maybe(&mut aff, LongPress, 0.3);
            } else {
                maybe(&mut aff, RightSingle, 0.3);
                maybe(&mut aff, LeftDouble, 0.2);
            }
            (label, None, None)
        }
        Slot::Slider => {
            aff.insert(Drag);
            ("Slider".to_string(), None, None)
        }
        Slot::System(label, flag) => {
            aff.insert(Click);
            (label.to_string(), None, Some(flag.to_string()))
        }
    };
    Element { element_id, label, bounds, affordances: aff, target, system_flag, launches: None }
}
