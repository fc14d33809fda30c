use super::*;
use crate::action::{Action, ActionKind};
use crate::env::{generate_world, WorldParams};
use crate::fixtures;
use crate::reasoner::{GoalOrigin, ScriptedOracle};

fn episode(world: &GuiWorld, n: u32, seed: u64) -> Episode {
    let cfg = EpisodeConfig { n_strides: n, ..Default::default() };
    run_episode(world, &ScriptedOracle, seed, seed, &cfg)
}

#[test]
fn first_stride_walks_eight_and_completes() {
    let world = fixtures::map_chrome_clock(Platform::Mobile);
    let ep = episode(&world, 1, 4);
    let s = &ep.strides[0];
    assert_eq!(s.walk.records.len(), 8);
    assert_eq!(s.outcome(), Outcome::Completed);
    assert_eq!(s.step_instructions.len(), s.record_count());
    assert!(!s.summary.is_empty());
    assert!(!ep.overall_task.is_empty());
}

#[test]
fn single_stride_issues_no_cross_app_call() {
    let world = fixtures::map_chrome_clock(Platform::Mobile);
    let ep = episode(&world, 1, 2);
    assert!(ep.cost.entries.iter().all(|e| e.call != crate::dataset::cost::CallKind::CrossAppGoal));
}

#[test]
fn later_strides_open_with_an_app_switch() {
    for platform in [Platform::Mobile, Platform::Desktop] {
        let world = fixtures::map_chrome_clock(platform);
        for seed in 0..20 {
            let ep = episode(&world, 3, seed);
            assert_eq!(ep.strides.len(), 3, "{:?}", ep.early_stop);
            for w in ep.strides.windows(2) {
                let first = &w[1].walk.records[0];
                match platform {
                    Platform::Mobile => assert_eq!(first.action.kind(), ActionKind::Launch),
                    Platform::Desktop => assert_eq!(first.action.kind(), ActionKind::Click),
                }
                let goal = w[1].goal.as_ref().unwrap();
                assert_eq!(goal.origin, GoalOrigin::CrossApp);
                assert_ne!(goal.app, w[0].final_state().app_id);
                assert_eq!(first.post_screen.app, goal.app);
                assert!(w[1].walk.records.len() <= w[0].walk.records.len());
            }
        }
    }
}

#[test]
fn mobile_switch_is_a_launch_of_the_goal_app() {
    let world = fixtures::map_chrome_clock(Platform::Mobile);
    let ep = episode(&world, 2, 11);
    let goal = ep.strides[1].goal.as_ref().unwrap();
    assert_eq!(ep.strides[1].walk.records[0].action, Action::Launch { app: goal.app.to_string() });
}

#[test]
fn featureless_app_gives_a_walk_only_infeasible_stride() {
    let world = fixtures::featureless(Platform::Mobile);
    let ep = episode(&world, 3, 0);
    assert_eq!(ep.strides.len(), 1);
    let s = &ep.strides[0];
    assert!(s.goal.is_none() && s.guided.is_none());
    assert_eq!(s.outcome(), Outcome::Infeasible);
    assert_eq!(s.step_instructions.len(), s.walk.records.len());
    assert!(!s.summary.is_empty());
    assert!(ep.early_stop.is_some());
}

#[test]
fn records_chain_across_the_whole_episode() {
    let world = generate_world(7, &WorldParams::default()).unwrap();
    for seed in 0..10 {
        let ep = episode(&world, 3, seed);
        let records: Vec<_> = ep.records().collect();
        for w in records.windows(2) {
            assert_eq!(w[0].post_digest, w[1].pre_digest);
        }
        for s in &ep.strides {
            for (k, r) in s.records().enumerate() {
                assert_eq!(r.index, k);
            }
        }
    }
}

#[test]
fn episodes_are_reproducible() {
    let world = generate_world(3, &WorldParams::default()).unwrap();
    let a = episode(&world, 3, 42).to_record().to_line();
    let b = episode(&world, 3, 42).to_record().to_line();
    assert_eq!(a, b);
    assert_ne!(a, episode(&world, 3, 43).to_record().to_line());
}

#[test]
fn verdict_follows_the_records() {
    let world = generate_world(5, &WorldParams::default()).unwrap();
    for seed in 0..30 {
        let ep = episode(&world, 3, seed);
        assert_eq!(ep.filter_verdict, filter_records(ep.records()));
    }
}
