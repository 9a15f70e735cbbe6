use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn ctrap(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ctrap"))
        .arg("--out-dir")
        .arg(out)
        .args(args)
        .env_remove("CTRAP_OUT_DIR")
        .env_remove("CTRAP_THREADS")
        .output()
        .expect("binary runs")
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join(name)).unwrap()
}

#[test]
fn missing_required_parameter_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = ctrap(dir.path(), &["portrait", "--beta", "0.4"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("alpha"));
}

#[test]
fn out_of_domain_parameter_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = ctrap(dir.path(), &["portrait", "--alpha", "0.1", "--beta", "1.5"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_input_file_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.csv");
    let out = ctrap(dir.path(), &["fit", "--input", missing.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn degenerate_data_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("flat.csv");
    fs::write(&input, "country,inventory_days,eci\na,10,1\nb,11,1\nc,12,1\nd,13,1\ne,9,1\n").unwrap();
    let out = ctrap(dir.path(), &["fit", "--input", input.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn stdout_is_silent_unless_verbose() {
    let dir = tempfile::tempdir().unwrap();
    let quiet = ctrap(dir.path(), &["portrait", "--alpha", "0.1", "--beta", "0.4"]);
    assert!(quiet.status.success());
    assert!(quiet.stdout.is_empty());
    let loud = ctrap(dir.path(), &["--verbose", "portrait", "--alpha", "0.1", "--beta", "0.4"]);
    assert!(loud.status.success());
    assert_eq!(String::from_utf8_lossy(&loud.stdout).lines().count(), 1);
}

#[test]
fn portrait_starts_in_the_withdrawal_region() {
    let dir = tempfile::tempdir().unwrap();
    assert!(ctrap(dir.path(), &["portrait", "--alpha", "0.1", "--beta", "0.4"]).status.success());
    let csv = read(dir.path(), "portrait.csv");
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("f_lo,f_hi,m,tau,sign"));
    assert_eq!(lines.next(), Some("0,0.1,0,0,zero"));
}

#[test]
fn expensive_inputs_trap_everything() {
    let dir = tempfile::tempdir().unwrap();
    assert!(ctrap(dir.path(), &["portrait", "--alpha", "0.3", "--beta", "0.4"]).status.success());
    let json: serde_json::Value = serde_json::from_str(&read(dir.path(), "portrait.json")).unwrap();
    assert_eq!(json["trap_basin"].as_f64(), Some(1.0));
}

#[test]
fn zero_overshoot_reproduces_the_portrait() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert!(ctrap(a.path(), &["portrait", "--alpha", "0.1", "--beta", "0.4"]).status.success());
    assert!(ctrap(b.path(), &["overshoot", "--alpha", "0.1", "--beta", "0.4", "--s", "0"]).status.success());
    for name in ["portrait.csv", "portrait.json"] {
        assert_eq!(read(a.path(), name), read(b.path(), name), "{name}");
    }
}

#[test]
fn manifest_replays_the_run() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["abm", "--alpha", "0.1", "--beta", "0.4", "--n", "30", "--t-end", "20", "--replicas", "3", "--seed", "5"];
    assert!(ctrap(a.path(), &args).status.success());
    let manifest = a.path().join("manifest.json");
    let replay = ctrap(b.path(), &["--config", manifest.to_str().unwrap(), "abm"]);
    assert!(replay.status.success(), "{}", String::from_utf8_lossy(&replay.stderr));
    for name in ["abm_series.csv", "abm_final.csv", "abm_summary.json", "manifest.json"] {
        assert_eq!(fs::read(a.path().join(name)).unwrap(), fs::read(b.path().join(name)).unwrap(), "{name}");
    }
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.toml");
    fs::write(&config, "alpha = 0.3\nbeta = 0.4\n").unwrap();
    let out = ctrap(dir.path(), &["--config", config.to_str().unwrap(), "portrait", "--alpha", "0.1"]);
    assert!(out.status.success());
    let manifest: serde_json::Value = serde_json::from_str(&read(dir.path(), "manifest.json")).unwrap();
    assert_eq!(manifest["config"]["alpha"].as_f64(), Some(0.1));
    assert_eq!(manifest["config"]["beta"].as_f64(), Some(0.4));
}
