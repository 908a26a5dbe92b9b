use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn cheatvote(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cheatvote"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn missing_required_flag_fails() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("o");
    let o = cheatvote(&["simulate-match", "--cheaters", "1", "--acc", "0.8", "--tactic", "none", "--out", path(&out)]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("--benign"), "{}", stderr(&o));
}

#[test]
fn out_of_range_accuracy_fails() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("o");
    let o = cheatvote(&[
        "simulate-match", "--benign", "2", "--cheaters", "1", "--acc", "0.3", "--tactic", "none", "--out", path(&out),
    ]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("0.3"), "{}", stderr(&o));
}

#[test]
fn malformed_log_reports_line() {
    let tmp = tempfile::tempdir().unwrap();
    let fixture = tmp.path().join("fx");
    assert!(cheatvote(&["gen-fixture", "--matches", "2", "--battles", "3", "--seed", "1", "--out", path(&fixture)])
        .status
        .success());
    let log = fixture.join("match_00.csv");
    let mut lines: Vec<String> = fs::read_to_string(&log).unwrap().lines().map(String::from).collect();
    let fields: Vec<&str> = lines[3].split(',').collect();
    lines[3] = format!("{},teleport", fields[..8].join(","));
    fs::write(&log, lines.join("\n") + "\n").unwrap();

    let o = cheatvote(&["replay-log", "--input", path(&fixture), "--out", path(&tmp.path().join("r"))]);
    assert!(!o.status.success());
    let err = stderr(&o);
    assert!(err.contains("line 4") && err.contains("teleport"), "{err}");
}

#[test]
fn service_rejects_tiny_population() {
    let tmp = tempfile::tempdir().unwrap();
    let o = cheatvote(&["service-sim", "--population", "5", "--out", path(&tmp.path().join("s"))]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("population"), "{}", stderr(&o));
}

#[test]
fn service_config_unknown_field_fails() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("cfg.json");
    fs::write(&cfg, r#"{"population": 100, "populaton": 3}"#).unwrap();
    let o = cheatvote(&["service-sim", "--config", path(&cfg), "--out", path(&tmp.path().join("s"))]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("populaton"), "{}", stderr(&o));
}

#[test]
fn service_writes_one_report_per_day() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("s");
    let o = cheatvote(&[
        "service-sim", "--game", "game2", "--population", "400", "--days", "7", "--seed", "4", "--out", path(&out),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    for day in 1..=7 {
        let report = fs::read_to_string(out.join(format!("day_{day:03}.csv"))).unwrap();
        assert_eq!(report.lines().count(), 401);
    }
    assert!(!out.join("day_008.csv").exists());
    let summary = fs::read_to_string(out.join("summary.csv")).unwrap();
    let days: Vec<&str> = summary.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(days, ["1", "2", "3", "4", "5", "6", "7"]);
    assert!(out.join("manifest.json").exists());
}

#[test]
fn kfold_on_generated_fixture() {
    let tmp = tempfile::tempdir().unwrap();
    let fixture = tmp.path().join("fx");
    assert!(cheatvote(&["gen-fixture", "--seed", "2", "--out", path(&fixture)]).status.success());
    let logs = fs::read_dir(&fixture)
        .unwrap()
        .filter(|e| e.as_ref().unwrap().file_name().to_string_lossy().starts_with("match_"))
        .count();
    assert_eq!(logs, 28);

    let out = tmp.path().join("r");
    let o = cheatvote(&["replay-log", "--input", path(&fixture), "--kfold", "7", "--seed", "2", "--out", path(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let thresholds = fs::read_to_string(out.join("thresholds.csv")).unwrap();
    let rows: Vec<&str> = thresholds.lines().skip(1).collect();
    assert_eq!(rows.len(), 7);
    assert!(fs::read_to_string(out.join("scores.csv")).unwrap().lines().count() > 28 * 8);
}

#[test]
fn json_format_parses() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("m");
    let o = cheatvote(&[
        "simulate-match", "--benign", "4", "--cheaters", "2", "--acc", "0.9", "--tactic", "tactical",
        "--format", "json", "--seed", "11", "--out", path(&out),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("outcome.json")).unwrap()).unwrap();
    assert!(!v.is_null());
    let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["command"], "simulate-match");
    assert_eq!(m["seed"], 11);
    assert_eq!(m["format"], "json");
}

#[test]
fn replay_reproduces_sweep_with_other_jobs() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    let o = cheatvote(&[
        "sweep", "--experiment", "separation", "--acc", "0.6,0.9", "--matches", "50", "--seed", "8", "--jobs", "1",
        "--out", path(&a),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = cheatvote(&["replay", "--manifest", path(&a.join("manifest.json")), "--jobs", "3", "--out", path(&b)]);
    assert!(o.status.success(), "{}", stderr(&o));
    for f in ["separation.csv", "manifest.json"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
}
