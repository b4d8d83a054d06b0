mod common;

use std::path::Path;
use std::process::Command;

fn flexcell(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_flexcell")).args(args).output().expect("binary runs")
}

fn toy() -> String {
    common::scenario_path("toy_two_plant.json").display().to_string()
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap()
}

#[test]
fn validate_reports_the_census() {
    let path = common::scenario_path("rural1_flex.json").display().to_string();
    let out = flexcell(&["validate", "--scenario", &path]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("38 controllable plants"), "{text}");
}

#[test]
fn dispatch_output_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        let o = flexcell(&[
            "dispatch", "--scenario", &toy(), "--seed", "3", "--steps", "4", "--n-iter", "5",
            "--out", out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for f in ["dispatch.csv", "vectors.csv", "summary.json"] {
        assert_eq!(read(&a.join(f)), read(&b.join(f)), "{f}");
    }
    let csv = read(&a.join("dispatch.csv"));
    assert_eq!(csv.lines().count(), 5);
    assert!(csv.starts_with("t_s,p_pcc_kw,q_pcc_kvar,dp_target_kw,dq_target_kvar,"));
    let summary: serde_json::Value = serde_json::from_str(&read(&a.join("summary.json"))).unwrap();
    for key in ["final_of", "mean_tracking_error", "total_cost_eur"] {
        assert!(summary[key].is_number(), "{key}");
    }
}

#[test]
fn sweep_writes_one_log_per_temperature() {
    let dir = tempfile::tempdir().unwrap();
    let o = flexcell(&[
        "sweep-temperature", "--scenario", &toy(), "--n-iter", "6", "--temperatures", "0.2,0.5,2,10",
        "--out", dir.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for t in ["0.2", "0.5", "2", "10"] {
        let log = read(&dir.path().join(format!("iterations_t{t}.csv")));
        assert_eq!(log.lines().count(), 8, "T = {t}");
        assert!(log.starts_with("iteration,local_of,global_of,step_size,accepted,local_feasible\n"));
    }
}

#[test]
fn simulate_and_oracle_write_their_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    assert!(flexcell(&["simulate", "--scenario", &toy(), "--steps", "3", "--out", out]).status.success());
    assert_eq!(read(&dir.path().join("trace.csv")).lines().count(), 5);
    let o = flexcell(&["oracle", "--scenario", &toy(), "--dp-kw", "2", "--dq-kvar", "0", "--resolution", "0.1", "--out", out]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let oracle: serde_json::Value = serde_json::from_str(&read(&dir.path().join("oracle.json"))).unwrap();
    assert!(oracle["score"]["value"].as_f64().unwrap() < 0.01);
}

#[test]
fn exit_codes_separate_configuration_from_runtime() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.json");
    let o = flexcell(&["validate", "--scenario", missing.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(flexcell(&["dispatch", "--bogus"]).status.code(), Some(1));
    let rural = common::scenario_path("rural1_flex.json").display().to_string();
    let o = flexcell(&["oracle", "--scenario", &rural, "--steps", "1", "--warmup-s", "0", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1), "{}", String::from_utf8_lossy(&o.stderr));
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"topology\": 3}").unwrap();
    let o = flexcell(&["validate", "--scenario", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("topology"));
}
