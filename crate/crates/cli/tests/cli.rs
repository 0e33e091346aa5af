use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_pecok"))
}

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn json_file(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn golden_partition_fixed_k() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("result.json");
    let input = data("reference_x.csv");
    let res = run(&["cluster", "--input", input.to_str().unwrap(), "--k", "4", "--out", out.to_str().unwrap()]);
    assert!(res.status.success(), "{}", stderr(&res));
    let got = json_file(&out);
    let want = json_file(&data("reference_labels.json"));
    assert_eq!(got["labels"], want["labels"]);
    assert_eq!(got["K"], 4);
    assert_eq!(got["solver"]["converged"], true);
}

#[test]
fn golden_partition_adaptive() {
    let input = data("reference_x.csv");
    let res = run(&["cluster", "--input", input.to_str().unwrap(), "--adaptive"]);
    assert!(res.status.success(), "{}", stderr(&res));
    let got: Value = serde_json::from_slice(&res.stdout).unwrap();
    let want = json_file(&data("reference_labels.json"));
    assert_eq!(got["labels"], want["labels"]);
    assert_eq!(got["K"], 4);
    assert_eq!(got["method"], "pecok_adaptive");
    assert!(got["kappa"].as_f64().unwrap() > 0.0);
}

#[test]
fn simulate_reproduces_shipped_data() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.csv");
    let model = data("reference_model.json");
    let res = run(&["simulate", "--model", model.to_str().unwrap(), "--n", "300", "--seed", "7", "--out", out.to_str().unwrap()]);
    assert!(res.status.success(), "{}", stderr(&res));
    assert_eq!(fs::read(&out).unwrap(), fs::read(data("reference_x.csv")).unwrap());
}

#[test]
fn duplicated_columns_are_grouped() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("dup.csv");
    // Three base signals, each repeated three times, interleaved.
    let mut text = String::new();
    for i in 0..30 {
        let base = [((i * 7) % 11) as f64 - 5.0, ((i * 3) % 7) as f64 - 3.0, (i % 5) as f64 * 0.5 - 1.0];
        let row: Vec<String> = (0..9).map(|j| base[j % 3].to_string()).collect();
        text.push_str(&row.join(","));
        text.push('\n');
    }
    fs::write(&path, text).unwrap();
    let res = run(&["cluster", "--input", path.to_str().unwrap(), "--k", "3"]);
    assert!(res.status.success(), "{}", stderr(&res));
    let got: Value = serde_json::from_slice(&res.stdout).unwrap();
    let labels: Vec<u64> = got["labels"].as_array().unwrap().iter().map(|v| v.as_u64().unwrap()).collect();
    assert_eq!(labels, vec![0, 1, 2, 0, 1, 2, 0, 1, 2]);
    assert!(got["gamma_hat"].as_array().unwrap().iter().all(|v| v.as_f64().unwrap() == 0.0));
}

#[test]
fn malformed_csv_reports_line_and_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    fs::write(&path, "1,2,3\n4,5,6\n7,oops,9\n").unwrap();
    let res = run(&["cluster", "--input", path.to_str().unwrap(), "--k", "2"]);
    assert_eq!(res.status.code(), Some(2));
    assert!(stderr(&res).contains("line 3"), "{}", stderr(&res));
}

#[test]
fn usage_errors_exit_1() {
    assert_eq!(run(&["cluster", "--input", "x.csv"]).status.code(), Some(1));
    assert_eq!(run(&["cluster", "--input", "x.csv", "--k", "2", "--adaptive"]).status.code(), Some(1));
    assert_eq!(run(&["cluster", "--input", "x.csv", "--k", "2", "--gamma", "median"]).status.code(), Some(1));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn data_errors_exit_2() {
    let input = data("reference_x.csv");
    let input = input.to_str().unwrap();
    let res = run(&["cluster", "--input", input, "--k", "2", "--gamma", "oracle"]);
    assert_eq!(res.status.code(), Some(2));
    let res = run(&["cluster", "--input", input, "--k", "21"]);
    assert_eq!(res.status.code(), Some(2));
    let res = run(&["cluster", "--input", "/nonexistent/x.csv", "--k", "2"]);
    assert_eq!(res.status.code(), Some(2));
}

#[test]
fn oracle_gamma_with_model() {
    let input = data("reference_x.csv");
    let model = data("reference_model.json");
    let res = run(&["cluster", "--input", input.to_str().unwrap(), "--k", "4", "--gamma", "oracle", "--model", model.to_str().unwrap()]);
    assert!(res.status.success(), "{}", stderr(&res));
    let got: Value = serde_json::from_slice(&res.stdout).unwrap();
    assert_eq!(got["labels"], json_file(&data("reference_labels.json"))["labels"]);
}

#[test]
fn bhat_dump_is_doubly_stochastic() {
    let dir = tempfile::tempdir().unwrap();
    let bhat = dir.path().join("bhat.csv");
    let input = data("reference_x.csv");
    let res = run(&["cluster", "--input", input.to_str().unwrap(), "--k", "4", "--bhat-out", bhat.to_str().unwrap()]);
    assert!(res.status.success());
    let text = fs::read_to_string(&bhat).unwrap();
    let rows: Vec<Vec<f64>> = text
        .lines()
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 20);
    for row in rows {
        assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-4);
    }
}

#[test]
fn klcheck_table() {
    let res = run(&["klcheck", "--tau", "0,0.1,0.5,1,2,5", "--m", "2,3,5,10", "--k", "3"]);
    assert!(res.status.success(), "{}", stderr(&res));
    let text = String::from_utf8(res.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("tau,m,k,closed_form,numeric,abs_diff"));
    let mut count = 0;
    for line in lines {
        let f: Vec<&str> = line.split(',').collect();
        let (tau, m): (f64, u32) = (f[0].parse().unwrap(), f[1].parse().unwrap());
        let closed: f64 = f[3].parse().unwrap();
        let diff: f64 = f[5].parse().unwrap();
        assert!(diff <= 1e-8);
        if tau == 2.0 && m == 3 {
            assert!((closed - 2.2857142857).abs() < 1e-10);
        }
        if tau == 0.0 {
            assert_eq!(closed, 0.0);
        }
        count += 1;
    }
    assert_eq!(count, 24);
}

#[test]
fn phase_outputs_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("config.json");
    fs::write(
        &config,
        r#"{"n": [120], "k": [2], "m": [4], "tau_multipliers": [0, 20],
            "methods": ["pecok", "csc", "cord_metric_only"], "replicates": 3, "base_seed": 5}"#,
    )
    .unwrap();
    let mut bodies = Vec::new();
    for name in ["a", "b"] {
        let out = dir.path().join(name);
        let res = run(&["phase", "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        assert!(res.status.success(), "{}", stderr(&res));
        assert!(out.join("timings.csv").exists());
        assert!(out.join("run_info.json").exists());
        bodies.push((
            fs::read(out.join("records.csv")).unwrap(),
            fs::read(out.join("summary.csv")).unwrap(),
        ));
    }
    assert_eq!(bodies[0], bodies[1]);
    let records = String::from_utf8(bodies[0].0.clone()).unwrap();
    assert_eq!(records.lines().next(), Some("# pecok-records v1"));
    assert_eq!(records.lines().count(), 2 + 2 * 3 * 3);
}

#[test]
fn phase_rejects_bad_config_and_unwritable_output() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"p": [10], "k": [4], "m": [3]}"#).unwrap();
    let out = dir.path().join("out");
    let res = run(&["phase", "--config", bad.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(2));
    assert!(!out.exists(), "no work before validation");

    let good = dir.path().join("good.json");
    fs::write(&good, r#"{"n": [50], "k": [2], "m": [3], "tau_multipliers": [1], "replicates": 1}"#).unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "").unwrap();
    let res = run(&["phase", "--config", good.to_str().unwrap(), "--out", blocker.join("sub").to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(2));
}
