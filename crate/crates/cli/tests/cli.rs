//! CLI behavior: subcommand round-trips and exit-code contract
//! (0 success, 2 config error, 3 data error, 4 runtime error).

use std::path::Path;
use std::process::Command;

fn fairfleet() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fairfleet"))
}

fn synth_into(dir: &Path) {
    let status = fairfleet()
        .args(["synth", "--days", "2", "--core-zones", "3", "--periphery-zones", "2"])
        .arg("--out-dir")
        .arg(dir)
        .status()
        .unwrap();
    assert!(status.success());
}

#[test]
fn synth_writes_scenario_files() {
    let dir = tempfile::tempdir().unwrap();
    synth_into(dir.path());
    for file in ["zones.csv", "demographics.csv", "trips.csv", "scenario.toml"] {
        assert!(dir.path().join(file).exists(), "missing {file}");
    }
}

#[test]
fn graph_dumps_weights_within_bounds() {
    let dir = tempfile::tempdir().unwrap();
    synth_into(dir.path());
    let out = dir.path().join("graph.json");
    let status = fairfleet()
        .arg("graph")
        .arg("--zones")
        .arg(dir.path().join("zones.csv"))
        .arg("--demographics")
        .arg(dir.path().join("demographics.csv"))
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let omega = doc["omega"].as_array().unwrap();
    assert_eq!(omega.len(), 5);
    for w in omega {
        let w = w.as_f64().unwrap();
        assert!((0.9..=1.0).contains(&w), "omega {w} out of range");
    }
    assert!(doc["w"].as_array().unwrap().len() == 5);
    assert!(doc["lambda"].as_f64().unwrap() > 0.0);
}

#[test]
fn plan_solves_state_file() {
    let dir = tempfile::tempdir().unwrap();
    synth_into(dir.path());
    let state = dir.path().join("state.json");
    std::fs::write(
        &state,
        r#"{"interval_index": 4, "idle": [3, 0, 0, 0, 0], "forecast": [[0, 2, 0, 0, 0]]}"#,
    )
    .unwrap();
    let out = dir.path().join("plan.json");
    let status = fairfleet()
        .arg("plan")
        .arg("--state")
        .arg(&state)
        .arg("--zones")
        .arg(dir.path().join("zones.csv"))
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(doc["interval_index"], 4);
    assert!(doc["objective"].as_f64().unwrap() >= 0.0);
}

#[test]
fn metrics_scores_prediction_file() {
    let dir = tempfile::tempdir().unwrap();
    let preds = dir.path().join("preds.csv");
    std::fs::write(
        &preds,
        "interval,zone,actual,predicted\n0,1,10,9\n0,2,10,12\n",
    )
    .unwrap();
    let output = fairfleet()
        .arg("metrics")
        .arg("--predictions")
        .arg(&preds)
        .output()
        .unwrap();
    assert!(output.status.success());
    let doc: serde_json::Value = serde_json::from_slice(&output.stdout).unwrap();
    assert!((doc["mae"].as_f64().unwrap() - 1.5).abs() < 1e-12);
    assert!((doc["mvpe"].as_f64().unwrap() - 0.045).abs() < 1e-12);
}

#[test]
fn exit_code_2_for_config_errors() {
    let status = fairfleet()
        .args(["simulate", "--config", "/definitely/not/here.toml"])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn exit_code_3_for_data_errors() {
    let dir = tempfile::tempdir().unwrap();
    synth_into(dir.path());
    let bad = dir.path().join("bad_trips.csv");
    std::fs::write(
        &bad,
        "request_id,arrival_epoch_s,origin_zone,dest_zone\n1,notatime,101,102\n",
    )
    .unwrap();
    let status = fairfleet()
        .arg("simulate")
        .arg("--config")
        .arg(dir.path().join("scenario.toml"))
        .arg("--trips")
        .arg(&bad)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(3));
}

#[test]
fn simulate_runs_pipeline_and_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    synth_into(dir.path());
    let status = fairfleet()
        .arg("simulate")
        .arg("--config")
        .arg(dir.path().join("scenario.toml"))
        .args([
            "--fleet-size",
            "16",
            "--controller",
            "true_demand",
            "--eval-offset-s",
            "61200",
            "--eval-horizon-s",
            "1200",
            "--request-log",
        ])
        .status()
        .unwrap();
    assert!(status.success());
    let report_path = dir.path().join("out/run_report.json");
    assert!(report_path.exists());
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report_path).unwrap()).unwrap();
    assert!(doc["provenance"]["config_sha256"].as_str().unwrap().len() == 64);
    assert!(doc["service"]["total_requests"].as_u64().unwrap() > 0);
    assert!(dir.path().join("out/requests.csv").exists());
}
