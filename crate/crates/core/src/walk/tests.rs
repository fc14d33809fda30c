use std::collections::BTreeSet;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::action::Platform;
use crate::dataset::cost::CostLedger;
use crate::env::reset;
use crate::fixtures;
use crate::reasoner::ScriptedOracle;

#[test]
fn schedule_examples() {
    let c = WalkConfig::default();
    assert_eq!(walk_length(0, &c), 8);
    assert_eq!(walk_length(1, &c), 5);
    assert_eq!(walk_length(2, &c), 3);
    assert_eq!(walk_length(5, &c), 2);
    assert_eq!(walk_length(u32::MAX, &c), 2);
}

#[test]
fn config_ranges() {
    assert!(WalkConfig::default().validate().is_ok());
    assert_eq!(WalkConfig { decay: 1.5, ..Default::default() }.validate().unwrap_err().0, "decay");
    assert_eq!(WalkConfig { decay: 0.0, ..Default::default() }.validate().unwrap_err().0, "decay");
    assert_eq!(WalkConfig { initial_length: 1, ..Default::default() }.validate().unwrap_err().0, "initial_length");
    assert_eq!(WalkConfig { min_length: 0, ..Default::default() }.validate().unwrap_err().0, "min_length");
}

proptest! {
    #[test]
    fn schedule_is_monotone(l0 in 1u32..100, lmin in 1u32..100, decay in 0.01f64..=1.0, i in 0u32..60) {
        let c = WalkConfig { initial_length: l0.max(lmin), decay, min_length: lmin, rng_seed: 0 };
        prop_assert!(walk_length(i + 1, &c) <= walk_length(i, &c));
        prop_assert!(walk_length(i, &c) >= lmin);
    }
}

#[test]
fn support_sizes_of_policy_states() {
    let sizes: Vec<usize> = fixtures::policy_states()
        .iter()
        .map(|(_, w, app)| walk_kinds(w, &reset(w, app).unwrap()).len())
        .collect();
    assert_eq!(sizes, [2, 3, 5, 5, 8]);
}

#[test]
fn support_excludes_decisions_and_app_switching() {
    for platform in [Platform::Mobile, Platform::Desktop] {
        let world = fixtures::map_chrome_clock(platform);
        let state = reset(&world, "map").unwrap();
        let kinds = walk_kinds(&world, &state);
        for k in [ActionKind::Completed, ActionKind::Infeasible, ActionKind::Launch, ActionKind::PressHome] {
            assert!(!kinds.contains(&k));
        }
        for a in walk_actions(&world, &state) {
            if let Some(id) = &a.element {
                assert!(world.find_element(&state, id).unwrap().launches.is_none());
            }
        }
    }
}

/// Kind frequencies over 9,000 draws sit within 4 sigma of 1/k.
#[test]
fn kinds_are_drawn_uniformly() {
    for (name, world, app) in fixtures::policy_states() {
        let state = reset(&world, app).unwrap();
        let kinds = walk_kinds(&world, &state);
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let mut counts = std::collections::BTreeMap::<ActionKind, u64>::new();
        let n = 9_000u64;
        for _ in 0..n {
            *counts.entry(sample_action(&world, &state, &mut rng).kind).or_default() += 1;
        }
        let p = 1.0 / kinds.len() as f64;
        let sigma = (n as f64 * p * (1.0 - p)).sqrt();
        for k in &kinds {
            let c = counts.get(k).copied().unwrap_or(0) as f64;
            assert!((c - n as f64 * p).abs() <= 4.0 * sigma, "{name}: {k} drawn {c} times");
        }
        let observed: Vec<u64> = kinds.iter().map(|k| counts.get(k).copied().unwrap_or(0)).collect();
        let (_, pvalue) = chi_square_uniform(&observed);
        assert!(pvalue >= 0.01, "{name}: p = {pvalue}");
    }
}

#[test]
fn elements_are_drawn_uniformly_within_a_kind() {
    let world = fixtures::settings(Platform::Mobile);
    let state = reset(&world, "settings").unwrap();
    let clickable = walk_actions(&world, &state).iter().filter(|a| a.kind == ActionKind::Click).count();
    assert_eq!(clickable, 3);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut per = std::collections::BTreeMap::new();
    let mut clicks = 0u64;
    for _ in 0..30_000 {
        let a = sample_action(&world, &state, &mut rng);
        if a.kind == ActionKind::Click {
            clicks += 1;
            *per.entry(a.element.unwrap()).or_insert(0u64) += 1;
        }
    }
    let observed: Vec<u64> = per.values().copied().collect();
    assert_eq!(observed.len(), 3);
    assert!(chi_square_uniform(&observed).1 >= 0.01, "{per:?} of {clicks}");
}

#[test]
fn chi_square_oracle_values() {
    // Statistic by hand: expected 50 each, (60-50)^2/50 + (40-50)^2/50 = 4.
    let (stat, p) = chi_square_uniform(&[60, 40]);
    assert!((stat - 4.0).abs() < 1e-12);
    // P(chi2_1 > 4) = erfc(sqrt(2)) = 0.0455003...
    assert!((p - 0.045_500_263_896).abs() < 1e-9, "{p}");
    assert_eq!(chi_square_uniform(&[7]), (0.0, 1.0));
}

fn walk(world: &GuiWorld, app: &str, len: usize, seed: u64) -> WalkSegment {
    let mut ledger = CostLedger::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ctx = ReasonCtx { world, ledger: &mut ledger, rng: &mut rng };
    run_random_walk(&mut ctx, &ScriptedOracle, &reset(world, app).unwrap(), len)
}

#[test]
fn walks_chain_and_exclude_decisions() {
    for platform in [Platform::Mobile, Platform::Desktop] {
        let world = fixtures::settings(platform);
        let seg = walk(&world, "settings", 40, 3);
        assert_eq!(seg.records.len(), 40);
        assert_eq!(seg.states.len(), 41);
        for (k, r) in seg.records.iter().enumerate() {
            assert_eq!(r.index, k);
            assert_eq!(r.phase, Phase::RandomWalk);
            assert!(!r.action.kind().is_decision());
            assert!(crate::action::validate_platform(&r.action, platform));
            assert_eq!(r.pre_digest, seg.states[k].digest());
            assert_eq!(r.post_digest, seg.states[k + 1].digest());
        }
        for w in seg.records.windows(2) {
            assert_eq!(w[0].post_digest, w[1].pre_digest);
        }
        assert_eq!(&seg.states[40], seg.terminal_state());
    }
}

#[test]
fn long_walks_cover_the_five_screen_app() {
    let world = fixtures::clock(Platform::Desktop);
    for seed in 0..50 {
        let seg = walk(&world, "clock", 200, seed);
        let screens: BTreeSet<_> = seg.states.iter().map(|s| s.screen_key()).collect();
        assert!(screens.len() >= 4, "seed {seed}: {screens:?}");
    }
}

#[test]
fn walks_are_reproducible() {
    let world = fixtures::settings(Platform::Mobile);
    assert_eq!(walk(&world, "settings", 30, 9), walk(&world, "settings", 30, 9));
    assert_ne!(walk(&world, "settings", 30, 9).records, walk(&world, "settings", 30, 10).records);
}
