use std::path::Path;
use std::process::{Command, Output};

fn fedlfd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fedlfd"))
        .args(args)
        .env_remove("RUST_LOG")
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, extra: &str) -> String {
    let path = dir.join("config.toml");
    let text = format!(
        r#"
seeds = [1, 2]
output_dir = "{}"

[scenario]
nodes = 2
teachers = 3
initial_sessions = 2
session_length = [5, 8]
samples_per_session = 3
eval_samples = 40

[model]
policy_hidden = [3]
representation_dim = 2
profile_hidden = 2
profile_code = 2

[training]
rounds = 3
local_epochs = 1
lstm_epochs = 1
profile_pretrain_epochs = 2
profile_epochs = 1
checkpoint_every = 1
{extra}
"#,
        dir.join("out").display()
    );
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn validate_reports_hash_and_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "");
    let out = fedlfd(&["validate", &cfg]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.starts_with("config hash "));
    assert!(text.contains("default training.kappa"));
}

#[test]
fn invalid_field_exits_with_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "global_learning_rate = -1.0");
    let out = fedlfd(&["validate", &cfg]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("global_learning_rate"));
    assert_eq!(fedlfd(&["run", &cfg, "--quiet"]).status.code(), Some(1));
}

#[test]
fn unknown_key_exits_with_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "learning_rate = 0.1");
    assert_eq!(fedlfd(&["validate", &cfg]).status.code(), Some(1));
}

#[test]
fn missing_config_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.toml");
    assert_eq!(fedlfd(&["run", missing.to_str().unwrap()]).status.code(), Some(3));
}

#[test]
fn run_compare_and_resume() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "");
    let out_dir = dir.path().join("out");

    let run = fedlfd(&["run", &cfg, "--quiet"]);
    assert_eq!(run.status.code(), Some(0), "{}", String::from_utf8_lossy(&run.stderr));
    assert!(stdout(&run).contains("user_weighted"));
    let metrics = out_dir.join("metrics_seed2_user_weighted.csv");
    let before = std::fs::read_to_string(&metrics).unwrap();

    let cmp = fedlfd(&["compare", out_dir.to_str().unwrap()]);
    assert_eq!(cmp.status.code(), Some(0));
    assert!(stdout(&cmp).starts_with("ranking: "));
    assert!(out_dir.join("comparison.toml").exists());

    let ckpt = out_dir.join("ckpt_seed2_user_weighted_r0001.bin");
    let res = fedlfd(&["resume", ckpt.to_str().unwrap(), "--config", &cfg, "--quiet"]);
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
    let strip = |t: &str| {
        t.lines()
            .map(|l| l.rsplit_once(',').unwrap().0.to_owned())
            .collect::<Vec<_>>()
    };
    assert_eq!(strip(&std::fs::read_to_string(&metrics).unwrap()), strip(&before));
}

#[test]
fn seed_offset_and_out_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "");
    let other = dir.path().join("elsewhere");
    let out = fedlfd(&[
        "run",
        &cfg,
        "--quiet",
        "--seed-offset",
        "5",
        "--out",
        other.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(other.join("metrics_seed6_fedavg.csv").exists());
    assert!(other.join("metrics_seed7_user_weighted.csv").exists());
    assert!(!dir.path().join("out").exists());
}

#[test]
fn corrupted_checkpoint_exits_with_io_code() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "");
    assert_eq!(fedlfd(&["run", &cfg, "--quiet"]).status.code(), Some(0));
    let ckpt = dir.path().join("out").join("ckpt_seed1_fedavg_r0002.bin");
    let mut bytes = std::fs::read(&ckpt).unwrap();
    let last = bytes.len() - 1;
    bytes[last] ^= 1;
    std::fs::write(&ckpt, bytes).unwrap();
    let out = fedlfd(&["resume", ckpt.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("integrity"));
}

#[test]
fn foreign_checkpoint_exits_with_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "");
    assert_eq!(fedlfd(&["run", &cfg, "--quiet"]).status.code(), Some(0));
    let ckpt = dir.path().join("out").join("ckpt_seed1_fedavg_r0001.bin");
    let other_dir = tempfile::tempdir().unwrap();
    let other = write_config(other_dir.path(), "kappa = 0.5");
    let out = fedlfd(&["resume", ckpt.to_str().unwrap(), "--config", &other]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn divergence_exits_with_code_two_and_keeps_results() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "local_learning_rate = 1e6");
    let text = std::fs::read_to_string(&cfg).unwrap().replace("local_epochs = 1", "local_epochs = 40");
    std::fs::write(&cfg, text).unwrap();
    let out = fedlfd(&["run", &cfg, "--quiet"]);
    assert_eq!(out.status.code(), Some(2));
    let summary = std::fs::read_to_string(dir.path().join("out").join("summary.toml")).unwrap();
    assert!(summary.contains("diverged = true"));
}

#[test]
fn compare_needs_two_strategies() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "");
    let text = std::fs::read_to_string(&cfg).unwrap().replace(
        "seeds = [1, 2]",
        "seeds = [1, 2]\nstrategies = [\"fedavg\"]",
    );
    std::fs::write(&cfg, text).unwrap();
    assert_eq!(fedlfd(&["run", &cfg, "--quiet"]).status.code(), Some(0));
    let out = fedlfd(&["compare", dir.path().join("out").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}
