use std::path::Path;
use std::process::{Command, Output};

use pmm_cli::output::strip_timing;

fn pmm(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_pmm"));
    cmd.args(args).env_remove("PMM_WORKERS");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn sharp_l1_run_writes_all_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::create_dir(dir.path().join("out")).unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        r#"{"schema_version":1,"problem":{"kind":"sharp-l1","n":10},"memory":[0],"output_dir":"out"}"#,
    );
    let out = pmm(&["run", "--config", &cfg], &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let o = dir.path().join("out");
    let csv = std::fs::read_to_string(o.join("trace_M0.csv")).unwrap();
    assert!(csv.lines().count() >= 2);
    let summary: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(o.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["runs"][0]["status"], "solved");
    for svg in ["violation_vs_iteration.svg", "violation_vs_time.svg"] {
        assert!(std::fs::read_to_string(o.join(svg)).unwrap().contains("<polyline"));
    }
    // No temp files left behind.
    assert!(std::fs::read_dir(&o).unwrap().all(|e| !e.unwrap().file_name().to_string_lossy().starts_with('.')));
}

#[test]
fn usage_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let missing_dir = write_config(
        dir.path(),
        "a.json",
        r#"{"schema_version":1,"problem":{"kind":"sharp-l1","n":10},"memory":[0],"output_dir":"missing"}"#,
    );
    let empty_memory = write_config(
        dir.path(),
        "b.json",
        r#"{"schema_version":1,"problem":{"kind":"sharp-l1","n":10},"memory":[],"output_dir":"."}"#,
    );
    let bad_schema = write_config(
        dir.path(),
        "c.json",
        r#"{"schema_version":7,"problem":{"kind":"sharp-l1","n":10},"memory":[0],"output_dir":"."}"#,
    );
    for args in [
        vec!["run", "--config", &missing_dir],
        vec!["run", "--config", &empty_memory],
        vec!["run", "--config", &bad_schema],
        vec!["run", "--config", "/no/such/config.json"],
        vec!["check-projection", "--trials", "0"],
        vec!["gen", "--kind", "socp", "--seed", "1", "--n", "7", "--cones", "2", "--out", "x.json"],
        vec!["frobnicate"],
    ] {
        assert_eq!(pmm(&args, &[]).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn solver_failure_exits_with_one() {
    // A X + X A ⪯ 0 with A = I contradicts X ⪰ I.
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("lmi.json");
    let out = pmm(&["gen", "--kind", "lmi", "--seed", "1", "--q", "2", "--k", "1", "--out", inst.to_str().unwrap()], &[]);
    assert_eq!(out.status.code(), Some(0));
    let mut json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&inst).unwrap()).unwrap();
    json["matrices"] = serde_json::json!([[[1.0, 0.0], [0.0, 1.0]]]);
    json["certificate"] = serde_json::Value::Null;
    std::fs::write(&inst, json.to_string()).unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        r#"{"schema_version":1,"problem":{"kind":"custom-from-file","path":"lmi.json"},"memory":[0],"max_iterations":50,"output_dir":"."}"#,
    );
    let out = pmm(&["run", "--config", &cfg], &[]);
    assert_eq!(out.status.code(), Some(1));
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["runs"][0]["status"], "numerical-failure");
    assert!(summary["runs"][0]["diagnostic"].as_str().unwrap().contains("empty"));
}

#[test]
fn iteration_cap_is_not_a_failure() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        r#"{"schema_version":1,"problem":{"kind":"sharp-l1","n":5},"memory":[0],"max_iterations":1,"output_dir":"."}"#,
    );
    assert_eq!(pmm(&["run", "--config", &cfg], &[]).status.code(), Some(0));
    assert_eq!(pmm(&["run", "--config", &cfg], &[("PMM_WORKERS", "zero")]).status.code(), Some(2));
}

#[test]
fn check_projection_reports_one_line() {
    let out = pmm(&["check-projection", "--trials", "1", "--seed", "5"], &[]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 1);
    assert!(text.contains("trials=1"));
}

#[test]
fn generated_instance_runs_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("socp.json");
    let out = pmm(
        &["gen", "--kind", "socp", "--seed", "3", "--n", "20", "--p", "6", "--cones", "2", "--out", inst.to_str().unwrap()],
        &[],
    );
    assert_eq!(out.status.code(), Some(0));
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&inst).unwrap()).unwrap();
    assert_eq!(json["kind"], "socp");
    assert_eq!(json["metadata"]["seed"], 3);

    let cfg = write_config(
        dir.path(),
        "c.json",
        r#"{"schema_version":1,"problem":{"kind":"custom-from-file","path":"socp.json"},"memory":[0,5],"output_dir":".","workers":2}"#,
    );
    let out = pmm(&["run", "--config", &cfg], &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("trace_M5.csv").exists());
}

#[test]
fn worker_count_does_not_change_traces() {
    let dir = tempfile::tempdir().unwrap();
    let mut stripped = Vec::new();
    for (i, workers) in ["1", "3"].iter().enumerate() {
        let out_dir = dir.path().join(format!("o{i}"));
        std::fs::create_dir(&out_dir).unwrap();
        let cfg = write_config(
            dir.path(),
            &format!("c{i}.json"),
            &format!(
                r#"{{"schema_version":1,"problem":{{"kind":"lmi","seed":2,"q":5,"k":2}},"memory":[0,5,20],"max_iterations":200,"output_dir":"o{i}","workers":3}}"#
            ),
        );
        let out = pmm(&["run", "--config", &cfg], &[("PMM_WORKERS", workers)]);
        assert_eq!(out.status.code(), Some(0));
        let traces: Vec<String> = [0, 5, 20]
            .iter()
            .map(|m| strip_timing(&std::fs::read_to_string(out_dir.join(format!("trace_M{m}.csv"))).unwrap()))
            .collect();
        stripped.push(traces);
    }
    assert_eq!(stripped[0], stripped[1]);
}
