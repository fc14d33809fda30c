//! Brute-force self-checks of a world and the scripted oracle over it.

use std::collections::BTreeMap;
use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{stdout_err, CliError, RunConfig};
use crate::dataset::cost::CostLedger;
use crate::env::{reachable_states_with_cap, reset, EnvError, GuiWorld, NavSearch, ORACLE_STATE_CAP};
use crate::guided::{run_guided, GuidedConfig, Outcome};
use crate::reasoner::{ReasonCtx, Reasoner, ScriptedOracle};
use crate::walk::{chi_square_uniform, sample_action, walk_kinds};

const UNIFORMITY_DRAWS: u64 = 9_000;
const UNIFORMITY_ALPHA: f64 = 0.01;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleCheck {
    pub property: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn too_large(e: EnvError) -> CliError {
    CliError::Oracle(e.to_string())
}

/// Reachability of every app's screens from its entry, soundness of the
/// oracle's goals (reachable, completed along a shortest path), and
/// uniformity of the walk policy at every app's entry.
pub fn oracle_check_world(world: &GuiWorld, cap: usize) -> Result<Vec<OracleCheck>, CliError> {
    let mut checks = Vec::new();

    let mut unreachable: Vec<String> = Vec::new();
    for app in &world.apps {
        let start = reset(world, app.app_id.as_str()).map_err(too_large)?;
        let seen = reachable_states_with_cap(world, &start, cap).map_err(too_large)?;
        let missing: Vec<&str> = app
            .screens
            .iter()
            .filter(|s| !seen.iter().any(|k| k.app == app.app_id && k.screen == s.screen_id))
            .map(|s| s.screen_id.as_str())
            .collect();
        if !missing.is_empty() {
            unreachable.push(format!("app `{}` cannot reach {}", app.app_id, missing.join(", ")));
        }
    }
    checks.push(OracleCheck {
        property: "reachability",
        passed: unreachable.is_empty(),
        detail: if unreachable.is_empty() { format!("{} apps fully connected", world.apps.len()) } else { unreachable.join("; ") },
    });

    let mut unsound = Vec::new();
    let mut goals = 0;
    let guided = GuidedConfig { step_budget: 64, target_atomic_actions: 1, stall_window: 64, no_progress_limit: 64, ..Default::default() };
    for app in &world.apps {
        let start = reset(world, app.app_id.as_str()).map_err(too_large)?;
        let mut ledger = CostLedger::default();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut ctx = ReasonCtx { world, ledger: &mut ledger, rng: &mut rng };
        let Ok(goal) = ScriptedOracle.infer_goal(&mut ctx, &start, &[]) else { continue };
        goals += 1;
        let reach = reachable_states_with_cap(world, &start, cap).map_err(too_large)?;
        let targets = goal.success_spec.target_screens(world);
        if !targets.iter().any(|t| reach.contains(t)) {
            unsound.push(format!("app `{}`: goal \"{}\" is unreachable", app.app_id, goal.task_text));
            continue;
        }
        let shortest = NavSearch::new(world, &start).nearest(targets.iter()).0;
        let seg = run_guided(&mut ctx, &ScriptedOracle, &start, goal.clone(), &guided, &[], 0);
        if seg.outcome != Outcome::Completed || Some(seg.records.len()) != shortest {
            unsound.push(format!(
                "app `{}`: goal \"{}\" took {} records ({:?}), shortest {:?}",
                app.app_id,
                goal.task_text,
                seg.records.len(),
                seg.outcome,
                shortest
            ));
        }
    }
    checks.push(OracleCheck {
        property: "oracle goal soundness",
        passed: unsound.is_empty(),
        detail: if unsound.is_empty() { format!("{goals} goals reachable and completed optimally") } else { unsound.join("; ") },
    });

    let mut min_p = 1.0f64;
    let mut worst = String::new();
    for app in &world.apps {
        let state = reset(world, app.app_id.as_str()).map_err(too_large)?;
        let kinds = walk_kinds(world, &state);
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let mut counts: BTreeMap<_, u64> = kinds.iter().map(|k| (*k, 0)).collect();
        for _ in 0..UNIFORMITY_DRAWS {
            *counts.entry(sample_action(world, &state, &mut rng).kind).or_default() += 1;
        }
        let observed: Vec<u64> = counts.values().copied().collect();
        let (_, p) = chi_square_uniform(&observed);
        if p < min_p {
            min_p = p;
            worst = app.app_id.to_string();
        }
    }
    checks.push(OracleCheck {
        property: "walk uniformity",
        passed: min_p >= UNIFORMITY_ALPHA,
        detail: format!("min chi-square p-value {min_p:.4} over {} entry states{}", world.apps.len(), if worst.is_empty() { String::new() } else { format!(" (at `{worst}`)") }),
    });
    Ok(checks)
}

pub fn cmd_oracle_check(config: &RunConfig, out: &mut dyn Write) -> Result<Vec<OracleCheck>, CliError> {
    let world = config.build_world()?;
    let checks = oracle_check_world(&world, ORACLE_STATE_CAP)?;
    for c in &checks {
        writeln!(out, "{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.property, c.detail).map_err(stdout_err)?;
    }
    let failed: Vec<String> = checks.iter().filter(|c| !c.passed).map(|c| format!("{}: {}", c.property, c.detail)).collect();
    if failed.is_empty() {
        Ok(checks)
    } else {
        Err(CliError::Oracle(failed.join("; ")))
    }
}
