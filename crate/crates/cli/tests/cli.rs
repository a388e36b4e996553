use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn fx(rel: &str) -> String {
    fixtures().join(rel).display().to_string()
}

fn morphkit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_morphkit"))
        .args(args)
        .env_remove("DEIMOS_SEED")
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stderr_lines(o: &Output) -> Vec<Value> {
    String::from_utf8_lossy(&o.stderr)
        .lines()
        .map(|l| serde_json::from_str(l).unwrap_or_else(|_| panic!("not JSONL: {l}")))
        .collect()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.display().to_string()
}

#[test]
fn gallery_validates_clean() {
    let o = morphkit(&["validate", &fx("morphs")]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stderr_lines(&o).iter().all(|d| d["severity"] != "error"));
}

#[test]
fn validate_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let malformed = write(dir.path(), "bad.json", "{\"name\": ");
    let o = morphkit(&["validate", &malformed]);
    assert_eq!(code(&o), 1);
    assert_eq!(stderr_lines(&o)[0]["code"], "SYNTAX");

    let schema = write(dir.path(), "schema.json", r#"{"name": "x", "states": "nope", "transitions": []}"#);
    assert_eq!(code(&morphkit(&["validate", &schema])), 1);

    let dup = write(
        dir.path(),
        "dup.json",
        r#"{"name":"d","states":[{"name":"a"},{"name":"a"}],"transitions":[{"name":"t","states":["a","a"]}]}"#,
    );
    let o = morphkit(&["validate", &dup]);
    assert_eq!(code(&o), 2);
    let diags = stderr_lines(&o);
    assert!(diags.iter().any(|d| d["code"] == "DUP_NAME"), "{diags:?}");
    assert!(diags.iter().all(|d| d["file"] == dup.as_str()));

    // The worst file decides the exit code.
    assert_eq!(code(&morphkit(&["validate", &fx("morphs/highlight.json"), &malformed, &dup])), 2);
}

#[test]
fn explain_reports_each_state() {
    let o = morphkit(&["validate", &fx("morphs/highlight.json"), "--explain", &fx("vis/scatterplot.json")]);
    assert_eq!(code(&o), 0);
    let records: Vec<Value> = String::from_utf8_lossy(&o.stdout)
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(records.len(), 2);
    assert_eq!(records[0]["state"], "unhighlighted");
    assert_eq!(records[0]["matched"], true);
    assert_eq!(records[1]["matched"], false);
    assert_eq!(records[1]["failures"][0]["path"], "encoding.color.value");
}

fn run_highlight(dir: &Path, tag: &str, seed: &str) -> (Output, String) {
    let out = dir.join(format!("{tag}.jsonl"));
    let o = morphkit(&[
        "run",
        "--scene",
        &fx("scenes/highlight.json"),
        "--morphs",
        &fx("morphs/highlight.json"),
        "--trace",
        &fx("traces/highlight.jsonl"),
        "--ticks",
        "150",
        "--seed",
        seed,
        "--out",
        &out.display().to_string(),
    ]);
    let log = std::fs::read_to_string(&out).unwrap_or_default();
    (o, log)
}

#[test]
fn run_writes_log_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let (o, log) = run_highlight(dir.path(), "a", "3");
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let summary: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(summary["transitions"]["started"], 2);
    assert_eq!(summary["transitions"]["completed"], 2);
    assert_eq!(summary["seed"], 3);
    let kinds: Vec<String> = log
        .lines()
        .map(|l| serde_json::from_str::<Value>(l).unwrap())
        .filter(|e| e["kind"] != "tween-progress")
        .map(|e| format!("{}:{}", e["kind"].as_str().unwrap(), e["direction"].as_str().unwrap_or("")))
        .collect();
    assert_eq!(
        kinds,
        [
            "machine-entered:",
            "transition-started:forward",
            "transition-completed:forward",
            "transition-started:reverse",
            "transition-completed:reverse"
        ]
    );
}

#[test]
fn run_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (_, a) = run_highlight(dir.path(), "a", "9");
    let (_, b) = run_highlight(dir.path(), "b", "9");
    assert!(!a.is_empty());
    assert_eq!(a, b);
}

#[test]
fn seed_comes_from_environment() {
    let o = Command::new(env!("CARGO_BIN_EXE_morphkit"))
        .args(["run", "--scene", &fx("scenes/highlight.json"), "--morphs", &fx("morphs/highlight.json"), "--ticks", "2"])
        .env("DEIMOS_SEED", "42")
        .output()
        .unwrap();
    let summary: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(summary["seed"], 42);
}

#[test]
fn run_optional_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let signals = dir.path().join("signals.jsonl");
    let keyframes = dir.path().join("keyframes.jsonl");
    let o = morphkit(&[
        "run",
        "--scene",
        &fx("scenes/geo-slider.json"),
        "--morphs",
        &fx("morphs/geo-slider.json"),
        "--trace",
        &fx("traces/slider.jsonl"),
        "--ticks",
        "30",
        "--trace-signals",
        &signals.display().to_string(),
        "--dump-keyframes",
        &keyframes.display().to_string(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let lines: Vec<Value> = std::fs::read_to_string(&signals)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(lines.len(), 30);
    assert_eq!(lines[12]["signals"]["geo/geo-slider/progress"], Value::from(12.0 / 60.0));
    let dumps = std::fs::read_to_string(&keyframes).unwrap();
    assert_eq!(dumps.lines().count(), 1);
    let d: Value = serde_json::from_str(dumps.lines().next().unwrap()).unwrap();
    assert_eq!(d["transition"], "scatter-to-map");
}

#[test]
fn run_failures_are_nonzero() {
    let o = morphkit(&["run", "--scene", "/nonexistent/scene.json", "--morphs", &fx("morphs/highlight.json")]);
    assert_ne!(code(&o), 0);
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.json", "[");
    let o = morphkit(&["run", "--scene", &fx("scenes/highlight.json"), "--morphs", &bad]);
    assert_eq!(code(&o), 1);
}

#[test]
fn export_dot() {
    let o = morphkit(&["export-dot", &fx("morphs/partition-stack.json")]);
    assert_eq!(code(&o), 0);
    let dot = String::from_utf8(o.stdout).unwrap();
    assert!(dot.starts_with("digraph"));
    for name in ["barchart3d", "faceted", "stacked", "partitioning", "stacking"] {
        assert!(dot.contains(name), "{name} missing from\n{dot}");
    }
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.json", "{");
    assert_eq!(code(&morphkit(&["export-dot", &bad])), 1);
}

#[test]
fn config_file_sets_engine_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "morphkit.toml", "seed = 77\ndt = 0.05\n");
    let o = morphkit(&[
        "--config",
        &cfg,
        "run",
        "--scene",
        &fx("scenes/highlight.json"),
        "--morphs",
        &fx("morphs/highlight.json"),
        "--ticks",
        "2",
    ]);
    let summary: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(summary["seed"], 77);
    let bad = write(dir.path(), "bad.toml", "speed = 3\n");
    let o = morphkit(&["--config", &bad, "run", "--scene", &fx("scenes/highlight.json"), "--morphs", &fx("morphs/highlight.json")]);
    assert_eq!(code(&o), 1);
}

#[test]
fn serve_reports_port_in_use() {
    let taken = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let port = taken.local_addr().unwrap().port().to_string();
    let o = morphkit(&["serve", "--port", &port, "--scene", &fx("scenes/highlight.json"), "--morphs", &fx("morphs/highlight.json")]);
    assert_ne!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stderr).contains("cannot listen"));
}
