use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value;
use synworld::commands::{cmd_eval, cmd_init, cmd_optimize, cmd_report, cmd_synth, CHECKPOINT_FILE};
use synworld::config::RunConfig;
use synworld::io::{read_checkpoint, write_checkpoint, LOCK_FILE};
use synworld_core::fixture;
use synworld_core::types::{ActionKnowledge, Scenario};
use tempfile::TempDir;

fn workspace() -> (TempDir, PathBuf) {
    let dir = TempDir::new().unwrap();
    let config = cmd_init(dir.path()).unwrap();
    (dir, config)
}

/// Rewrites fields of the config file in place.
fn edit_config(path: &Path, edit: impl FnOnce(&mut Value)) {
    let mut v: Value = serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
    edit(&mut v);
    fs::write(path, serde_json::to_string_pretty(&v).unwrap()).unwrap();
}

fn synworld(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_synworld")).args(args).output().unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn read(path: &Path) -> String {
    fs::read_to_string(path).unwrap()
}

#[test]
fn synth_is_deterministic_and_capped() {
    let (dir, config) = workspace();
    edit_config(&config, |v| v["synthesis"]["target_scenario_count"] = 6.into());
    let cfg = RunConfig::load(&config).unwrap();
    let first = cmd_synth(&cfg).unwrap();
    let store_path = dir.path().join("out/scenarios.json");
    let store = read(&store_path);
    assert!(first.report.accepted <= 6);
    assert_eq!(first.report.subsets, 2);
    let scenarios: Vec<Scenario> = serde_json::from_str(&store).unwrap();
    assert_eq!(scenarios.len(), first.report.accepted);
    assert_eq!(scenarios[0].scenario_id, "scn-0001");
    cmd_synth(&cfg).unwrap();
    assert_eq!(read(&store_path), store);
    assert!(dir.path().join("out/synthesis_report.json").exists());
}

#[test]
fn one_iteration_writes_one_progress_row() {
    let (dir, config) = workspace();
    edit_config(&config, |v| v["search"]["max_iterations"] = 1.into());
    let (code, stdout, _) = synworld(&["optimize", "--config", s(&config)]);
    assert_eq!(code, 0);
    assert!(stdout.contains("1 iterations"));
    let csv = read(&dir.path().join("out/progress.csv"));
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "iteration,node_id,reward,node_score,best_score");
    assert_eq!(lines.len(), 2);
    assert!(!dir.path().join("out").join(LOCK_FILE).exists());
}

#[test]
fn workflow_only_keeps_descriptions() {
    let (dir, config) = workspace();
    let (code, _, _) = synworld(&["optimize", "--config", s(&config), "--mode", "workflow-only", "--seed", "4"]);
    assert_eq!(code, 0);
    let best: ActionKnowledge = serde_json::from_str(&read(&dir.path().join("out/best_knowledge.json"))).unwrap();
    assert_eq!(best.descriptions, fixture::initial_knowledge().descriptions);
    assert_ne!(best.workflow, fixture::initial_knowledge().workflow);
    let cp = read_checkpoint(&dir.path().join("out").join(CHECKPOINT_FILE)).unwrap();
    assert_eq!(cp.config.seed, 4);
}

#[test]
fn resume_equals_uninterrupted() {
    let (full_dir, full_cfg) = workspace();
    assert_eq!(synworld(&["optimize", "--config", s(&full_cfg)]).0, 0);
    let full = read(&full_dir.path().join("out/checkpoint.json"));

    let (dir, config) = workspace();
    edit_config(&config, |v| v["search"]["max_iterations"] = 7.into());
    assert_eq!(synworld(&["optimize", "--config", s(&config)]).0, 0);
    let saved = dir.path().join("saved.json");
    fs::copy(dir.path().join("out/checkpoint.json"), &saved).unwrap();
    edit_config(&config, |v| v["search"]["max_iterations"] = 15.into());
    let (code, _, err) = synworld(&["optimize", "--config", s(&config), "--resume", s(&saved)]);
    assert_eq!(code, 0, "{err}");
    assert_eq!(read(&dir.path().join("out/checkpoint.json")), full);
    assert_eq!(read(&dir.path().join("out/progress.csv")), read(&full_dir.path().join("out/progress.csv")));

    let (code, _, err) = synworld(&["optimize", "--config", s(&config), "--resume", s(&saved), "--seed", "99"]);
    assert_eq!(code, 2);
    assert!(err.contains("differ"));
    let (code, _, _) = synworld(&["optimize", "--config", s(&config), "--resume", s(&saved), "--mode", "workflow-only"]);
    assert_eq!(code, 2);
}

#[test]
fn optimized_knowledge_evaluates_at_least_as_well() {
    let (dir, config) = workspace();
    let cfg = RunConfig::load(&config).unwrap();
    let before = cmd_eval(&cfg, &dir.path().join("initial_knowledge.json")).unwrap();
    cmd_optimize(&cfg, None).unwrap();
    let after = cmd_eval(&cfg, &dir.path().join("out/best_knowledge.json")).unwrap();
    assert_eq!(before.pass_rate, 0.25);
    assert_eq!(after.pass_rate, 1.0);
    assert_eq!(after.results.len(), 12);
    assert!(dir.path().join("out/trajectories.json").exists());

    let (code, stdout, _) = synworld(&["eval", "--config", s(&config), "--knowledge", s(&dir.path().join("initial_knowledge.json"))]);
    assert_eq!(code, 0);
    assert_eq!(stdout.trim(), "pass_rate 0.2500 (3/12)");
}

#[test]
fn eval_rejects_empty_store_and_invalid_knowledge() {
    let (dir, config) = workspace();
    let knowledge = dir.path().join("initial_knowledge.json");
    fs::write(dir.path().join("scenarios.json"), "[]").unwrap();
    let (code, _, err) = synworld(&["eval", "--config", s(&config), "--knowledge", s(&knowledge)]);
    assert_eq!(code, 2);
    assert!(err.contains("empty"), "{err}");

    fs::write(dir.path().join("scenarios.json"), fixture::SCENARIOS_JSON).unwrap();
    let mut ak = fixture::initial_knowledge();
    ak.descriptions.remove("wiki_search");
    let bad = dir.path().join("bad.json");
    fs::write(&bad, serde_json::to_string(&ak).unwrap()).unwrap();
    let (code, _, err) = synworld(&["eval", "--config", s(&config), "--knowledge", s(&bad)]);
    assert_eq!(code, 2);
    assert!(err.contains("wiki_search"), "{err}");
}

#[test]
fn report_emits_curves_and_best_path() {
    let (dir, config) = workspace();
    assert_eq!(synworld(&["optimize", "--config", s(&config)]).0, 0);
    let cp = dir.path().join("out/checkpoint.json");
    let report_dir = dir.path().join("report");
    let (code, stdout, _) = synworld(&["report", s(&cp), "--out", s(&report_dir)]);
    assert_eq!(code, 0);
    let csv = read(&report_dir.join("iterations.csv"));
    assert_eq!(csv.lines().next().unwrap(), "run,iteration,node_id,reward,node_score,best_score");
    assert_eq!(csv.lines().count(), 16);
    let lines: Vec<&str> = stdout.lines().collect();
    assert!(lines[1].contains("node 0:"));
    assert!(lines.last().unwrap().contains("score 1.0000"));
    assert_eq!(read(&report_dir.join("best_path.txt")), stdout);
    assert!(!report_dir.join("scenario_count.csv").exists());
}

#[test]
fn report_merges_runs_by_scenario_count() {
    let root = TempDir::new().unwrap();
    let mut checkpoints = Vec::new();
    for (name, n) in [("small", 4usize), ("large", 12)] {
        let dir = root.path().join(name);
        let config = cmd_init(&dir).unwrap();
        let mut all: Vec<Scenario> = fixture::scenarios();
        all.truncate(n);
        fs::write(dir.join("scenarios.json"), serde_json::to_string(&all).unwrap()).unwrap();
        cmd_optimize(&RunConfig::load(&config).unwrap(), None).unwrap();
        checkpoints.push(dir.join("out/checkpoint.json"));
    }
    checkpoints.reverse();
    let out = root.path().join("merged");
    let r = cmd_report(&checkpoints, &out).unwrap();
    assert_eq!(r.iteration_rows, 30);
    let csv = read(&out.join("scenario_count.csv"));
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows[0], "run,scenario_count,best_score");
    assert!(rows[1].contains(",4,"));
    assert!(rows[2].contains(",12,"));
}

#[test]
fn checkpoint_round_trip_is_byte_identical() {
    let (dir, config) = workspace();
    edit_config(&config, |v| v["search"]["max_iterations"] = 3.into());
    cmd_optimize(&RunConfig::load(&config).unwrap(), None).unwrap();
    let path = dir.path().join("out/checkpoint.json");
    let original = read(&path);
    let copy = dir.path().join("copy.json");
    write_checkpoint(&copy, &read_checkpoint(&path).unwrap()).unwrap();
    assert_eq!(read(&copy), original);
}

#[test]
fn corrupt_checkpoint_names_the_field() {
    let (dir, config) = workspace();
    edit_config(&config, |v| v["search"]["max_iterations"] = 1.into());
    cmd_optimize(&RunConfig::load(&config).unwrap(), None).unwrap();
    let path = dir.path().join("out/checkpoint.json");
    let mut v: Value = serde_json::from_str(&read(&path)).unwrap();
    v.as_object_mut().unwrap().remove("progress");
    let broken = dir.path().join("broken.json");
    fs::write(&broken, v.to_string()).unwrap();
    let (code, _, err) = synworld(&["report", s(&broken)]);
    assert_eq!(code, 2);
    assert!(err.contains("progress"), "{err}");

    v["schema_version"] = 7.into();
    fs::write(&broken, v.to_string()).unwrap();
    let (code, _, err) = synworld(&["report", s(&broken)]);
    assert_eq!(code, 2);
    assert!(err.contains("schema_version"), "{err}");
}

#[test]
fn locked_output_dir_is_refused() {
    let (dir, config) = workspace();
    fs::create_dir_all(dir.path().join("out")).unwrap();
    fs::write(dir.path().join("out").join(LOCK_FILE), "1").unwrap();
    let (code, _, err) = synworld(&["optimize", "--config", s(&config)]);
    assert_eq!(code, 2);
    assert!(err.contains("locked"), "{err}");
}

#[test]
fn missing_toolkit_is_an_input_error() {
    let (dir, config) = workspace();
    fs::remove_file(dir.path().join("toolkit.json")).unwrap();
    let (code, _, err) = synworld(&["synth", "--config", s(&config)]);
    assert_eq!(code, 2);
    assert!(err.contains("toolkit.json"), "{err}");
}

/// An HTTP backend on a port nobody listens on.
fn dead_http() -> Value {
    let port = std::net::TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    serde_json::json!({
        "kind": "http",
        "endpoint": format!("http://127.0.0.1:{port}/v1/chat/completions"),
        "max_retries": 0,
        "timeout_secs": 2
    })
}

#[test]
fn backend_failure_exits_with_three() {
    let (_dir, config) = workspace();
    edit_config(&config, |v| v["backends"]["synthesis"] = dead_http());
    let (code, _, err) = synworld(&["synth", "--config", s(&config)]);
    assert_eq!(code, 3, "{err}");
}

#[test]
fn optimizer_failure_leaves_a_partial_checkpoint() {
    let (dir, config) = workspace();
    edit_config(&config, |v| v["backends"]["optimizer"] = dead_http());
    let (code, _, err) = synworld(&["optimize", "--config", s(&config)]);
    assert_eq!(code, 3, "{err}");
    let cp = read_checkpoint(&dir.path().join("out/checkpoint.json")).unwrap();
    assert_eq!(cp.tree.iteration, 0);
    assert_eq!(cp.tree.len(), 1);
    assert!(!dir.path().join("out/best_knowledge.json").exists());
}

#[test]
fn unknown_mode_is_a_usage_error() {
    let (_dir, config) = workspace();
    let (code, _, _) = synworld(&["optimize", "--config", s(&config), "--mode", "everything"]);
    assert_eq!(code, 2);
}

#[test]
fn synth_store_matches_golden_file() {
    let (dir, config) = workspace();
    edit_config(&config, |v| {
        v["synthesis"]["target_scenario_count"] = 6.into();
        v["synthesis"]["seed"] = 42.into();
    });
    let (code, _, _) = synworld(&["synth", "--config", s(&config)]);
    assert_eq!(code, 0);
    let golden = include_str!("golden/synth_store.json");
    assert_eq!(read(&dir.path().join("out/scenarios.json")), golden);
}
