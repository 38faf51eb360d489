use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn odpca(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_odpca"))
        .args(args)
        .output()
        .unwrap()
}

fn run_to(args: &[&str], out: &Path) -> Output {
    let mut all: Vec<&str> = args.to_vec();
    let out = out.to_str().unwrap();
    all.extend(["--out", out]);
    odpca(&all)
}

const SMALL: [&str; 12] = [
    "--d", "12", "--K", "2", "--m", "2", "--n", "30", "--T", "3", "--seed", "5",
];

#[test]
fn synth_report_schema() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.csv");
    let mut args = vec!["synth"];
    args.extend(SMALL);
    args.extend(["--reps", "2"]);
    let o = run_to(&args, &out);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let text = std::fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("# odpca-report schema=1"));
    assert_eq!(
        lines.next(),
        Some("algorithm,round,error,comm_entries,wall_ms")
    );
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    // three odpca rounds plus one summary row per algorithm
    assert_eq!(rows.len(), 3 + 4);
    let odpca_rounds: Vec<&str> = rows
        .iter()
        .filter(|r| r[0] == "odpca")
        .map(|r| r[1])
        .collect();
    assert_eq!(odpca_rounds, ["1", "2", "3", "final"]);
    for r in &rows {
        let err: f64 = r[2].parse().unwrap();
        assert!((0.0..=2f64.sqrt() * 2.0).contains(&err));
    }

    let json: Value =
        serde_json::from_str(&std::fs::read_to_string(out.with_extension("json")).unwrap())
            .unwrap();
    assert_eq!(json["schema"], "odpca-summary/1");
    assert_eq!(json["config"]["total_samples"], 2 * 30 * 3);
    assert!(json["scaling"].as_array().is_some_and(|s| s.len() == 3));
}

#[test]
fn lowrank_and_kmeans_report_ratios() {
    let dir = tempfile::tempdir().unwrap();
    for cmd in ["lowrank", "kmeans"] {
        let out = dir.path().join(format!("{cmd}.csv"));
        let mut args = vec![cmd];
        args.extend(SMALL);
        let o = run_to(&args, &out);
        assert!(
            o.status.success(),
            "{cmd}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
        let text = std::fs::read_to_string(&out).unwrap();
        for line in text.lines().skip(2) {
            let ratio: f64 = line.split(',').nth(2).unwrap().parse().unwrap();
            assert!(ratio >= 1.0 - 1e-6 || cmd == "kmeans", "{cmd}: {line}");
            assert!(ratio.is_finite() && ratio > 0.0);
        }
    }
}

#[test]
fn dataset_input_runs_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("x.csv");
    let mut text = String::from("a,b,c,d\n");
    for i in 0..40 {
        let t = i as f64;
        text.push_str(&format!(
            "{},{},{},{}\n",
            t.sin(),
            (2.0 * t).cos(),
            0.1 * t,
            1.0
        ));
    }
    std::fs::write(&data, text).unwrap();
    let out = dir.path().join("r.csv");
    let o = run_to(
        &[
            "lowrank",
            "--dataset",
            data.to_str().unwrap(),
            "--header",
            "--center",
            "global",
            "--K",
            "2",
            "--m",
            "2",
            "--n",
            "5",
            "--T",
            "4",
        ],
        &out,
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let json: Value =
        serde_json::from_str(&std::fs::read_to_string(out.with_extension("json")).unwrap())
            .unwrap();
    assert_eq!(json["centering"], "global");
}

#[test]
fn argument_errors_exit_with_one() {
    assert_eq!(odpca(&["lowrank", "--m", "4"]).status.code(), Some(1));
    let unknown = odpca(&["synth", "--bogus"]);
    assert_eq!(unknown.status.code(), Some(1));
    assert!(!unknown.stderr.is_empty());
    assert_eq!(odpca(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(
        odpca(&["synth", "--d", "5", "--K", "5"]).status.code(),
        Some(1)
    );
}

#[test]
fn runtime_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("bad.csv");
    std::fs::write(&data, "1,2\n3,x\n").unwrap();
    let o = odpca(&["lowrank", "--dataset", data.to_str().unwrap(), "--K", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("bad.csv:2:"));
}

#[test]
fn help_exits_cleanly() {
    assert_eq!(odpca(&["--help"]).status.code(), Some(0));
}

#[test]
fn bench_rows_per_surplus() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("b.csv");
    let mut args = vec!["bench"];
    args.extend(SMALL);
    args.extend(["--Z", "0,3", "--algorithms", "odpca,dpca"]);
    let o = run_to(&args, &out);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    let rows: Vec<Vec<&str>> = text
        .lines()
        .skip(2)
        .map(|l| l.split(',').collect())
        .collect();
    assert_eq!(rows.len(), 4);
    let dims: Vec<&str> = rows.iter().map(|r| r[1]).collect();
    assert_eq!(dims, ["2", "2", "5", "5"]);
    // comm entries: T·m·d·p for odpca, m·d·p for dpca
    assert_eq!(rows[0][7], "144");
    assert_eq!(rows[1][7], "48");
    assert_eq!(rows[2][7], "360");
}

#[test]
fn repeated_synth_is_identical_apart_from_wall_time() {
    let dir = tempfile::tempdir().unwrap();
    let mut reports = Vec::new();
    for i in 0..2 {
        let out = dir.path().join(format!("s{i}.csv"));
        let mut args = vec!["synth"];
        args.extend(SMALL);
        assert!(run_to(&args, &out).status.success());
        let text = std::fs::read_to_string(&out).unwrap();
        let stripped: Vec<String> = text
            .lines()
            .map(|l| l.rsplit_once(',').map_or(l, |(head, _)| head).to_string())
            .collect();
        reports.push(stripped);
    }
    assert_eq!(reports[0], reports[1]);
}
