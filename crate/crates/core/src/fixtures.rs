//! Small hand-built worlds with known shapes, shared by the test suites and
//! the `oracle-check` command.

use crate::action::{ActionKind, Platform};
use crate::env::{GuiWorld, ScreenBuilder, WorldBuilder};

fn clock_screens() -> Vec<ScreenBuilder> {
    vec![
        ScreenBuilder::new("main", "Clock Home").link("Alarms", "alarms").link("Timer", "timer"),
        ScreenBuilder::new("alarms", "Alarms").link("Set alarm", "set").link("Back", "main"),
        ScreenBuilder::new("set", "Set alarm").function_node().link("Back", "alarms"),
        ScreenBuilder::new("timer", "Timer").link("Stopwatch", "stopwatch").link("Back", "main"),
        ScreenBuilder::new("stopwatch", "Stopwatch").link("Back", "timer"),
    ]
}

/// One connected five-screen app; "Set alarm" is two hops from the entry.
pub fn clock(platform: Platform) -> GuiWorld {
    WorldBuilder::new(platform)
        .app("clock", "Clock", &["time", "alarm"], clock_screens())
        .build()
        .expect("clock fixture")
}

/// Three apps; chrome shares the `search` tag with map, clock shares none.
pub fn map_chrome_clock(platform: Platform) -> GuiWorld {
    WorldBuilder::new(platform)
        .app(
            "map",
            "Maps",
            &["map", "search", "travel"],
            vec![
                ScreenBuilder::new("main", "Map View").link("Directions", "directions").text_field("Search"),
                ScreenBuilder::new("directions", "Directions").function_node().link("Back", "main"),
            ],
        )
        .app(
            "chrome",
            "Chrome",
            &["search", "web"],
            vec![
                ScreenBuilder::new("main", "New Tab").link("Search", "results").text_field("Address"),
                ScreenBuilder::new("results", "Search results").function_node().link("Back", "main"),
            ],
        )
        .app("clock", "Clock", &["time", "alarm"], clock_screens())
        .build()
        .expect("map/chrome/clock fixture")
}

/// Health's "Emergency" feature screen has lost its only incoming link; the
/// one reachable alternative is chrome's search results.
pub fn severed(platform: Platform) -> GuiWorld {
    WorldBuilder::new(platform)
        .app(
            "health",
            "Health",
            &["health", "safety"],
            vec![
                ScreenBuilder::new("main", "Health Home").link("Profile", "profile"),
                ScreenBuilder::new("profile", "Profile").link("Back", "main").text_field("Allergies"),
                ScreenBuilder::new("emergency", "Emergency").function_node().link("Back", "main"),
            ],
        )
        .app(
            "chrome",
            "Chrome",
            &["search", "web"],
            vec![
                ScreenBuilder::new("main", "New Tab").link("Search", "results"),
                ScreenBuilder::new("results", "Search results").function_node().link("Back", "main"),
            ],
        )
        .build()
        .expect("severed fixture")
}

/// Settings with an emergency page, a text field and a system toggle.
pub fn settings(platform: Platform) -> GuiWorld {
    let toggle = if platform == Platform::Mobile { "Airplane mode" } else { "Network" };
    WorldBuilder::new(platform)
        .app(
            "settings",
            "Settings",
            &["system", "health"],
            vec![
                ScreenBuilder::new("main", "Settings")
                    .link("Emergency Information", "emergency")
                    .link("Account", "login")
                    .system_toggle(toggle, "network_enabled")
                    .scroll(2),
                ScreenBuilder::new("emergency", "Emergency")
                    .function_node()
                    .text_field("Allergies")
                    .link("Back", "main"),
                ScreenBuilder::new("login", "Sign in").login_gated().link("Back", "main"),
            ],
        )
        .app(
            "notes",
            "Notes",
            &["productivity", "writing"],
            vec![
                ScreenBuilder::new("main", "All notes")
                    .link("New note", "new")
                    .element("Pin", &pointer_kinds(platform)),
                ScreenBuilder::new("new", "New note").function_node().text_field("Title").link("Back", "main"),
            ],
        )
        .build()
        .expect("settings fixture")
}

fn pointer_kinds(platform: Platform) -> Vec<ActionKind> {
    match platform {
        Platform::Mobile => vec![ActionKind::Click, ActionKind::LongPress, ActionKind::Drag],
        Platform::Desktop => vec![ActionKind::Click, ActionKind::RightSingle, ActionKind::LeftDouble, ActionKind::Drag],
    }
}

/// Two apps without a single feature screen.
pub fn featureless(platform: Platform) -> GuiWorld {
    WorldBuilder::new(platform)
        .app(
            "files",
            "Files",
            &["storage"],
            vec![ScreenBuilder::new("main", "Files").link("Recent", "recent"), ScreenBuilder::new("recent", "Recent").link("Back", "main")],
        )
        .app("books", "Books", &["reading"], vec![ScreenBuilder::new("main", "Library").link("Shelf", "main")])
        .build()
        .expect("featureless fixture")
}

/// A desktop world of one bare screen: nothing to do but wait.
pub fn isolated() -> GuiWorld {
    WorldBuilder::new(Platform::Desktop)
        .app("solo", "Solo", &[], vec![ScreenBuilder::new("only", "Blank")])
        .build()
        .expect("isolated fixture")
}

/// Every small fixture on both platforms, named.
pub fn all() -> Vec<(String, GuiWorld)> {
    let mut out = Vec::new();
    for platform in [Platform::Mobile, Platform::Desktop] {
        out.push((format!("clock/{platform}"), clock(platform)));
        out.push((format!("map_chrome_clock/{platform}"), map_chrome_clock(platform)));
        out.push((format!("severed/{platform}"), severed(platform)));
        out.push((format!("settings/{platform}"), settings(platform)));
        out.push((format!("featureless/{platform}"), featureless(platform)));
    }
    out.push(("isolated/desktop".into(), isolated()));
    out
}

/// Single-screen apps whose walk supports have known sizes.
pub fn policy_lab(platform: Platform) -> GuiWorld {
    WorldBuilder::new(platform)
        .app("bare", "Bare", &[], vec![ScreenBuilder::new("main", "Blank").function_node()])
        .app(
            "browse",
            "Browse",
            &["reading"],
            vec![ScreenBuilder::new("main", "Feed").link("Refresh", "main").scroll(3).function_node()],
        )
        .app(
            "form",
            "Form",
            &["productivity"],
            vec![ScreenBuilder::new("main", "Form").text_field("Name").scroll(2).function_node()],
        )
        .app(
            "full",
            "Full",
            &["productivity"],
            vec![ScreenBuilder::new("main", "Editor")
                .text_field("Title")
                .element("Card", &pointer_kinds(platform))
                .scroll(2)
                .function_node()],
        )
        .build()
        .expect("policy lab fixture")
}

/// Five named (world, app) starting points with walk supports of 2, 3, 5,
/// 5 and 8 kinds.
pub fn policy_states() -> Vec<(String, GuiWorld, &'static str)> {
    let d = policy_lab(Platform::Desktop);
    let m = policy_lab(Platform::Mobile);
    vec![
        ("desktop/bare".into(), d.clone(), "bare"),
        ("mobile/bare".into(), m.clone(), "bare"),
        ("mobile/browse".into(), m.clone(), "browse"),
        ("desktop/form".into(), d.clone(), "form"),
        ("mobile/full".into(), m, "full"),
    ]
}
