use std::collections::BTreeSet;

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::action::{Direction, Platform};
use crate::dataset::cost::CostLedger;
use crate::env::{generate_world, reset, AppId, Element, NavSearch, StateDigest, WorldParams};
use crate::fixtures;
use crate::reasoner::{GoalOrigin, ScriptedOracle, SuccessSpec};

fn goal_on(app: &str, screen: &str) -> Goal {
    Goal {
        task_text: format!("Open {screen}"),
        first_action_hint: String::new(),
        app: AppId(app.into()),
        success_spec: SuccessSpec::Screens(BTreeSet::from([ScreenKey::new(app, screen)])),
        origin: GoalOrigin::Inferred,
    }
}

fn rec(pre: &str, action: Action, post: &str) -> ActionRecord {
    ActionRecord {
        index: 0,
        action,
        phase: Phase::Guided,
        pre_digest: StateDigest(0),
        post_digest: StateDigest(0),
        pre_screen: ScreenKey::new("clock", pre),
        post_screen: ScreenKey::new("clock", post),
        login_gated: false,
        cleared_flags: Vec::new(),
    }
}

fn run(world: &GuiWorld, reasoner: &dyn Reasoner, app: &str, goal: Goal, config: &GuidedConfig, seed: u64) -> GuidedSegment {
    let mut ledger = CostLedger::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ctx = ReasonCtx { world, ledger: &mut ledger, rng: &mut rng };
    run_guided(&mut ctx, reasoner, &reset(world, app).unwrap(), goal, config, &[], 0)
}

#[test]
fn config_ranges() {
    assert!(GuidedConfig::default().validate().is_ok());
    let c = GuidedConfig { stall_window: 1, ..Default::default() };
    assert_eq!(c.validate().unwrap_err().0, "stall_window");
    let c = GuidedConfig { step_budget: 2, ..Default::default() };
    assert_eq!(c.validate().unwrap_err().0, "step_budget");
}

#[test]
fn reward_examples() {
    let world = fixtures::clock(Platform::Mobile);
    let s = reset(&world, "clock").unwrap();
    assert_eq!(sparse_reward(&world, &s, &goal_on("clock", "main")), 1);
    assert_eq!(sparse_reward(&world, &s, &goal_on("clock", "set")), 0);
}

#[test]
fn two_cycle_fires_at_second_occurrence() {
    let world = fixtures::clock(Platform::Mobile);
    let goal = goal_on("clock", "set");
    let c = GuidedConfig::default();
    let a1 = Action::Click { x: 1, y: 1 };
    let a2 = Action::PressBack;
    let trace = [rec("main", a1.clone(), "timer"), rec("timer", a2.clone(), "main"), rec("main", a1, "timer")];
    assert_eq!(detect_stall(&world, &trace[..2], &goal, &c), None);
    assert_eq!(detect_stall(&world, &trace, &goal, &c), Some(TriggerReason::RepeatCycle));
}

#[test]
fn cycle_outside_the_window_is_ignored() {
    let world = fixtures::clock(Platform::Mobile);
    let goal = goal_on("clock", "set");
    let c = GuidedConfig { stall_window: 2, no_progress_limit: 100, ..Default::default() };
    let trace = [
        rec("main", Action::Wait, "main"),
        rec("main", Action::Scroll { direction: Direction::Up }, "main"),
        rec("main", Action::Scroll { direction: Direction::Down }, "main"),
    ];
    assert_eq!(detect_stall(&world, &trace, &goal, &c), None);
}

#[test]
fn fresh_screens_never_stall() {
    let world = fixtures::clock(Platform::Mobile);
    let goal = goal_on("clock", "set");
    let names = ["main", "timer", "stopwatch", "alarms", "x1", "x2", "x3", "x4", "x5"];
    let trace: Vec<_> = names.windows(2).map(|w| rec(w[0], Action::Click { x: 5, y: 5 }, w[1])).collect();
    assert_eq!(detect_stall(&world, &trace, &goal, &GuidedConfig::default()), None);
}

#[test]
fn no_new_state_after_k_records() {
    let world = fixtures::clock(Platform::Mobile);
    let goal = goal_on("clock", "set");
    let c = GuidedConfig { stall_repeat_threshold: 50, stall_window: 50, ..Default::default() };
    let keys = ["ctrl+a", "ctrl+b", "ctrl+c", "ctrl+d", "ctrl+e", "ctrl+f"];
    let trace: Vec<_> = keys.iter().map(|k| rec("main", Action::HotKey { key: k.to_string() }, "main")).collect();
    assert_eq!(detect_stall(&world, &trace[..5], &goal, &c), None);
    assert_eq!(detect_stall(&world, &trace, &goal, &c), Some(TriggerReason::NoNewState));
}

#[test]
fn satisfied_goal_never_stalls() {
    let world = fixtures::clock(Platform::Mobile);
    let goal = goal_on("clock", "main");
    let trace = vec![rec("main", Action::Wait, "main"); 8];
    assert_eq!(detect_stall(&world, &trace, &goal, &GuidedConfig::default()), None);
}

#[test]
fn oracle_completes_in_shortest_path_length() {
    for platform in [Platform::Mobile, Platform::Desktop] {
        let world = fixtures::clock(platform);
        let seg = run(&world, &ScriptedOracle, "clock", goal_on("clock", "set"), &GuidedConfig::default(), 0);
        assert_eq!(seg.outcome, Outcome::Completed);
        assert_eq!(seg.reward, 1);
        assert_eq!(seg.records.len(), 2);
        assert!(seg.recoveries.is_empty());
        assert!(seg.records.iter().all(|r| r.phase == Phase::Guided));
    }
}

#[test]
fn severed_goal_recovers_once_then_completes() {
    for platform in [Platform::Mobile, Platform::Desktop] {
        let world = fixtures::severed(platform);
        let c = GuidedConfig { max_recoveries: 1, ..Default::default() };
        let seg = run(&world, &ScriptedOracle, "health", goal_on("health", "emergency"), &c, 1);
        assert_eq!(seg.outcome, Outcome::Completed, "{platform}");
        assert_eq!(seg.recoveries.len(), 1);
        let ev = &seg.recoveries[0];
        assert_eq!(ev.trigger_reason, TriggerReason::RepeatCycle);
        assert_eq!(ev.step_index, 2, "two idle waits trigger the cycle");
        assert_ne!(ev.revised_goal.success_spec, ev.failed_goal.success_spec);
        assert_eq!(ev.revised_goal.app, AppId("chrome".into()));
        assert!(seg.records[2..].iter().all(|r| r.phase == Phase::Recovery));
        assert_eq!(seg.final_goal, ev.revised_goal);
    }
}

#[test]
fn severed_goal_without_recovery_is_infeasible() {
    let world = fixtures::severed(Platform::Mobile);
    let c = GuidedConfig { max_recoveries: 0, ..Default::default() };
    let seg = run(&world, &ScriptedOracle, "health", goal_on("health", "emergency"), &c, 1);
    assert_eq!(seg.outcome, Outcome::Infeasible);
    assert_eq!(seg.reward, 0);
    assert_eq!(seg.final_trigger, Some(TriggerReason::RepeatCycle));
    assert!(seg.recoveries.is_empty());
}

#[test]
fn isolated_state_has_no_alternative() {
    let world = fixtures::isolated();
    let seg = run(&world, &ScriptedOracle, "solo", goal_on("solo", "elsewhere"), &GuidedConfig::default(), 0);
    assert_eq!(seg.outcome, Outcome::Infeasible);
    assert!(seg.no_alternative);
}

/// Delegates to the oracle but answers every policy query with `reply`.
struct Fixed(Action);

impl Reasoner for Fixed {
    fn infer_goal(&self, c: &mut ReasonCtx<'_>, t: &EnvState, w: &[ActionRecord]) -> Result<Goal, ReasonerError> {
        ScriptedOracle.infer_goal(c, t, w)
    }
    fn select_action(&self, _: &mut ReasonCtx<'_>, _: &EnvState, _: &Goal, _: &[ActionRecord]) -> Result<Action, ReasonerError> {
        Ok(self.0.clone())
    }
    fn propose_cross_app_goal(
        &self,
        c: &mut ReasonCtx<'_>,
        s: &str,
        st: &[String],
        h: &[String],
        f: &EnvState,
        a: &[AppId],
    ) -> Result<Goal, ReasonerError> {
        ScriptedOracle.propose_cross_app_goal(c, s, st, h, f, a)
    }
    fn annotate_step(&self, c: &mut ReasonCtx<'_>, p: &EnvState, a: &Action, n: &EnvState) -> Result<String, ReasonerError> {
        ScriptedOracle.annotate_step(c, p, a, n)
    }
    fn summarize_stride(
        &self,
        c: &mut ReasonCtx<'_>,
        s: &[(EnvState, String)],
        l: &[String],
        g: Option<&Goal>,
    ) -> Result<String, ReasonerError> {
        ScriptedOracle.summarize_stride(c, s, l, g)
    }
    fn revise_goal(&self, c: &mut ReasonCtx<'_>, s: &EnvState, f: &Goal, m: &str) -> Result<Goal, ReasonerError> {
        ScriptedOracle.revise_goal(c, s, f, m)
    }
    fn generate_text_input(&self, c: &mut ReasonCtx<'_>, s: &EnvState, e: &Element) -> String {
        ScriptedOracle.generate_text_input(c, s, e)
    }
}

#[test]
fn premature_completion_and_declared_infeasibility_trigger_recovery() {
    let world = fixtures::clock(Platform::Mobile);
    let c = GuidedConfig { max_recoveries: 0, ..Default::default() };
    let seg = run(&world, &Fixed(Action::Completed), "clock", goal_on("clock", "set"), &c, 0);
    assert_eq!((seg.outcome, seg.final_trigger), (Outcome::Infeasible, Some(TriggerReason::IllegalReply)));
    let seg = run(&world, &Fixed(Action::Infeasible), "clock", goal_on("clock", "set"), &c, 0);
    assert_eq!((seg.outcome, seg.final_trigger), (Outcome::Infeasible, Some(TriggerReason::DeclaredInfeasible)));
    let seg = run(&world, &Fixed(Action::Click { x: 0, y: 0 }), "clock", goal_on("clock", "set"), &c, 0);
    assert_eq!((seg.outcome, seg.final_trigger), (Outcome::Infeasible, Some(TriggerReason::IllegalReply)));
    assert!(seg.records.is_empty());

    let world = fixtures::map_chrome_clock(Platform::Mobile);
    let c = GuidedConfig { max_recoveries: 1, ..Default::default() };
    let seg = run(&world, &Fixed(Action::Infeasible), "clock", goal_on("clock", "set"), &c, 0);
    assert_eq!(seg.recoveries.len(), 1);
    assert_eq!(seg.recoveries[0].trigger_reason, TriggerReason::DeclaredInfeasible);
}

#[test]
fn budget_runs_out() {
    let world = fixtures::clock(Platform::Desktop);
    let c = GuidedConfig {
        step_budget: 3,
        target_atomic_actions: 3,
        stall_repeat_threshold: 10,
        stall_window: 10,
        no_progress_limit: 10,
        max_recoveries: 2,
    };
    let seg = run(&world, &Fixed(Action::HotKey { key: "esc".into() }), "clock", goal_on("clock", "set"), &c, 0);
    assert_eq!(seg.outcome, Outcome::BudgetExhausted);
    assert_eq!(seg.records.len(), 3);
    assert_eq!(seg.reward, 0);
}

fn fuzz_goal(world: &GuiWorld, rng: &mut ChaCha8Rng) -> Goal {
    let keys: Vec<ScreenKey> = world
        .apps
        .iter()
        .flat_map(|a| a.screens.iter().map(move |s| ScreenKey { app: a.app_id.clone(), screen: s.screen_id.clone() }))
        .collect();
    let k = keys.choose(rng).unwrap().clone();
    goal_on(k.app.as_str(), k.screen.as_str())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn guided_runs_keep_their_invariants(seed in 0u64..10_000, world_seed in 0u64..4, mobile in any::<bool>(), recoveries in 0u32..3) {
        let platform = if mobile { Platform::Mobile } else { Platform::Desktop };
        let world = if world_seed == 0 {
            fixtures::severed(platform)
        } else {
            generate_world(world_seed, &WorldParams::with_platform(platform)).unwrap()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let app = world.app_ids().choose(&mut rng).unwrap().clone();
        let goal = fuzz_goal(&world, &mut rng);
        let c = GuidedConfig { max_recoveries: recoveries, ..Default::default() };
        let start = reset(&world, app.as_str()).unwrap();
        let distance = NavSearch::new(&world, &start).nearest(goal.success_spec.target_screens(&world).iter()).0;
        let seg = run(&world, &ScriptedOracle, app.as_str(), goal.clone(), &c, seed);

        prop_assert_eq!(seg.reward == 1, seg.outcome == Outcome::Completed);
        prop_assert!(seg.records.len() <= (c.step_budget * (1 + c.max_recoveries)) as usize);
        prop_assert!(seg.recoveries.len() <= c.max_recoveries as usize);
        if let Some(d) = distance {
            prop_assert_eq!(seg.outcome, Outcome::Completed);
            prop_assert_eq!(seg.records.len(), d);
        }
        for ev in &seg.recoveries {
            prop_assert_ne!(&ev.revised_goal.success_spec, &ev.failed_goal.success_spec);
            if matches!(ev.trigger_reason, TriggerReason::RepeatCycle | TriggerReason::NoNewState) {
                let again = detect_stall(&world, &seg.records[ev.window_start..ev.step_index], &ev.failed_goal, &c);
                prop_assert_eq!(again, Some(ev.trigger_reason));
            }
        }
    }
}
