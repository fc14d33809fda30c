use std::path::Path;
use std::process::{Command, Output};

fn rewalk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rewalk")).args(args).env_remove("REWALK_API_KEY").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write_config(dir: &Path, extra: &str) -> String {
    let path = dir.join("run.toml");
    std::fs::write(&path, format!("platform = \"mobile\"\nbackend = \"scripted-oracle\"\n{extra}")).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn generate_validate_stats_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "");
    let gen = rewalk(&["generate", "--config", &cfg, "--workers", "2"]);
    assert_eq!(gen.status.code(), Some(0), "{}", String::from_utf8_lossy(&gen.stderr));
    assert!(stdout(&gen).contains("Mobile Rate"));
    let out = dir.path().join("out");
    let lines = |f: &str| std::fs::read_to_string(out.join(f)).unwrap().lines().count();
    assert_eq!(lines("dataset.jsonl") + lines("rejects.jsonl"), 10);

    let data = out.join("dataset.jsonl");
    let val = rewalk(&["validate", data.to_str().unwrap()]);
    assert_eq!(val.status.code(), Some(0), "{}", stdout(&val));

    let stats = rewalk(&["stats", "--json", data.to_str().unwrap()]);
    assert_eq!(stats.status.code(), Some(0));
    let json = stdout(&stats);
    assert!(json.trim().starts_with('{') && json.trim().ends_with('}'), "{json}");
    assert!(json.contains("\"platforms\""));
}

#[test]
fn episode_and_seed_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "");
    let gen = rewalk(&["generate", "--config", &cfg, "--episodes", "3", "--seed", "100"]);
    assert_eq!(gen.status.code(), Some(0));
    let out = dir.path().join("out");
    let all: String = ["dataset.jsonl", "rejects.jsonl"].iter().map(|f| std::fs::read_to_string(out.join(f)).unwrap()).collect();
    assert_eq!(all.lines().count(), 3);
    assert!(all.contains("\"episode_seed\":100"));
}

#[test]
fn invalid_config_exits_2_naming_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[walk]\ndecay = 1.5\n");
    let o = rewalk(&["generate", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("walk.decay"));
}

#[test]
fn missing_files_exit_3() {
    assert_eq!(rewalk(&["validate", "/nonexistent/x.jsonl"]).status.code(), Some(3));
    assert_eq!(rewalk(&["generate", "--config", "/nonexistent/run.toml"]).status.code(), Some(3));
}

#[test]
fn corrupted_dataset_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "n_episodes = 4\n");
    assert_eq!(rewalk(&["generate", "--config", &cfg]).status.code(), Some(0));
    let data = dir.path().join("out/dataset.jsonl");
    let text = std::fs::read_to_string(&data).unwrap();
    let bad = dir.path().join("bad.jsonl");
    std::fs::write(&bad, text.replacen("\"action\":\"", "\"action\":\"Nope", 1)).unwrap();
    let o = rewalk(&["validate", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4));
    assert!(stdout(&o).contains("line 1: strides[0].steps[0].action"), "{}", stdout(&o));

    let empty = dir.path().join("empty.jsonl");
    std::fs::write(&empty, "").unwrap();
    let o = rewalk(&["validate", empty.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("0 episodes"));
    assert_eq!(rewalk(&["stats", empty.to_str().unwrap()]).status.code(), Some(4));
}

#[test]
fn oracle_check_passes_then_fails_on_severed_world() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "");
    let ok = rewalk(&["oracle-check", "--config", &cfg]);
    assert_eq!(ok.status.code(), Some(0), "{}", stdout(&ok));
    assert!(stdout(&ok).contains("p-value"));

    let world = dir.path().join("severed.json");
    let exp = rewalk(&["export-world", "--fixture", "severed/mobile", "--out", world.to_str().unwrap()]);
    assert_eq!(exp.status.code(), Some(0));
    let cfg = write_config(dir.path(), "world_file = \"severed.json\"\n");
    let bad = rewalk(&["oracle-check", "--config", &cfg]);
    assert_eq!(bad.status.code(), Some(5));
    assert!(stdout(&bad).contains("FAIL reachability: app `health`"), "{}", stdout(&bad));
}

#[test]
fn remote_backend_without_key_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("remote.toml");
    std::fs::write(&path, "platform = \"desktop\"\nbackend = \"remote\"\n").unwrap();
    let o = rewalk(&["generate", "--config", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("REWALK_API_KEY"));
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    assert_eq!(rewalk(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn shipped_configs_load() {
    let root = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    for name in ["mobile.toml", "desktop.toml"] {
        let cfg = rewalk_core::cli::RunConfig::load(&root.join(name)).unwrap();
        assert_eq!(cfg.platform.to_string(), name.trim_end_matches(".toml"));
    }
}
