use std::sync::atomic::AtomicBool;

use super::*;
use crate::action::Platform;
use crate::fixtures;

fn config(dir: &Path, extra: &str) -> RunConfig {
    RunConfig::from_toml(&format!("platform = \"mobile\"\nbackend = \"scripted-oracle\"\n{extra}"), dir).unwrap()
}

#[test]
fn two_line_config_is_complete() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "");
    assert_eq!(cfg.n_episodes, 10);
    assert_eq!(cfg.output.dir, dir.path().join("out"));
    assert_eq!(cfg.episode_config().n_strides, 3);
}

#[test]
fn bad_values_name_their_field() {
    let dir = tempfile::tempdir().unwrap();
    let err = RunConfig::from_toml("[walk]\ndecay = 1.5\n", dir.path()).unwrap_err();
    assert_eq!(err.exit_code(), EXIT_CONFIG);
    assert!(matches!(&err, CliError::ConfigInvalid { field, .. } if field == "walk.decay"), "{err}");
    let err = RunConfig::from_toml("n_episodes = 0\n", dir.path()).unwrap_err();
    assert!(err.to_string().contains("n_episodes"));
    let err = RunConfig::from_toml("[guided]\nstep_budjet = 3\n", dir.path()).unwrap_err();
    assert!(err.to_string().contains("step_budjet"), "{err}");
}

#[test]
fn generate_then_validate_and_stats() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "");
    let stop = AtomicBool::new(false);
    let mut out = Vec::new();
    let summary = cmd_generate(&cfg, &GenerateOptions { workers: Some(3), ..Default::default() }, &stop, &mut out).unwrap();
    assert_eq!(summary.kept + summary.rejected, 10);
    let text = |name: &str| std::fs::read_to_string(cfg.output.dir.join(name)).unwrap();
    assert_eq!(text(dataset::DATASET_FILE).lines().count() + text(dataset::REJECTS_FILE).lines().count(), 10);
    for name in [dataset::DATASET_FILE, dataset::REJECTS_FILE] {
        cmd_validate(&cfg.output.dir.join(name), &mut Vec::new()).unwrap();
    }
    if summary.kept > 0 {
        let mut json = Vec::new();
        let stats = cmd_stats(&cfg.output.dir.join(dataset::DATASET_FILE), true, &mut json).unwrap();
        let back: dataset::StatsReport = serde_json::from_slice(&json).unwrap();
        assert_eq!(back, stats);
    }
}

#[test]
fn worker_count_does_not_change_output() {
    let dir = tempfile::tempdir().unwrap();
    let run = |workers: usize, sub: &str| {
        let cfg = config(&dir.path().join(sub), "n_episodes = 6\n");
        std::fs::create_dir_all(dir.path().join(sub)).unwrap();
        let opts = GenerateOptions { workers: Some(workers), ..Default::default() };
        cmd_generate(&cfg, &opts, &AtomicBool::new(false), &mut Vec::new()).unwrap();
        std::fs::read(cfg.output.dir.join(dataset::DATASET_FILE)).unwrap()
    };
    assert_eq!(run(1, "a"), run(4, "b"));
}

#[test]
fn raised_stop_flag_writes_nothing_new() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "");
    let summary = cmd_generate(&cfg, &GenerateOptions::default(), &AtomicBool::new(true), &mut Vec::new()).unwrap();
    assert!(summary.interrupted);
    assert_eq!(summary.records.len(), 0);
}

#[test]
fn validate_reports_io_and_empty() {
    let dir = tempfile::tempdir().unwrap();
    let missing = cmd_validate(&dir.path().join("nope.jsonl"), &mut Vec::new()).unwrap_err();
    assert_eq!(missing.exit_code(), EXIT_IO);
    let empty = dir.path().join("empty.jsonl");
    std::fs::write(&empty, "").unwrap();
    let mut out = Vec::new();
    cmd_validate(&empty, &mut out).unwrap();
    assert!(String::from_utf8(out).unwrap().contains("0 episodes"));
    assert_eq!(cmd_stats(&empty, false, &mut Vec::new()).unwrap_err().exit_code(), EXIT_VALIDATION);
}

#[test]
fn oracle_check_passes_on_healthy_worlds() {
    let dir = tempfile::tempdir().unwrap();
    let mut out = Vec::new();
    cmd_oracle_check(&config(dir.path(), ""), &mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS")).count(), 3, "{text}");
    assert!(text.contains("p-value"));
}

#[test]
fn oracle_check_names_the_severed_app() {
    let checks = oracle_check_world(&fixtures::severed(Platform::Mobile), crate::env::ORACLE_STATE_CAP).unwrap();
    let reach = checks.iter().find(|c| c.property == "reachability").unwrap();
    assert!(!reach.passed);
    assert!(reach.detail.contains("`health`"), "{}", reach.detail);
}

#[test]
fn oracle_check_respects_the_cap() {
    let err = oracle_check_world(&fixtures::clock(Platform::Mobile), 3).unwrap_err();
    assert_eq!(err.exit_code(), EXIT_ORACLE);
    assert!(err.to_string().contains("cap"));
}

#[test]
fn exported_world_loads_back_through_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let world = named_fixture("severed/desktop").unwrap();
    cmd_export_world(&world, &dir.path().join("w.json"), &mut Vec::new()).unwrap();
    let cfg = RunConfig::from_toml("platform = \"desktop\"\nworld_file = \"w.json\"\n", dir.path()).unwrap();
    assert_eq!(cfg.build_world().unwrap(), world);
    let err = cmd_oracle_check(&cfg, &mut Vec::new()).unwrap_err();
    assert_eq!(err.exit_code(), EXIT_ORACLE);
    let wrong = RunConfig::from_toml("platform = \"mobile\"\nworld_file = \"w.json\"\n", dir.path()).unwrap();
    assert_eq!(wrong.build_world().unwrap_err().exit_code(), EXIT_CONFIG);
}
