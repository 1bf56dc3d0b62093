use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn socnav(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_socnav"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn sorted_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().into_string().unwrap(), fs::read(e.path()).unwrap())
        })
        .collect();
    v.sort();
    v
}

#[test]
fn social_training_without_warm_start_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = socnav(&["train", "--stage", "social", "--out", arg(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--warm-start"));
}

#[test]
fn zero_budget_training_writes_a_loadable_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    fs::write(&cfg, "[train]\nbudget = 0\n").unwrap();
    let out = socnav(&["train", "--stage", "ego", "--config", arg(&cfg), "--out", arg(dir.path())]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let ckpt = dir.path().join("ego.ckpt");
    assert!(ckpt.exists());
    assert!(socnav::policy::Checkpoint::load(&ckpt).is_ok());
}

#[test]
fn eval_is_byte_identical_and_replays_to_the_same_tables() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let out = socnav(&[
            "eval",
            "--policy",
            "greedy",
            "--suite",
            "combined:crossing:3",
            "--runs",
            "3",
            "--seed",
            "4",
            "--single-thread",
            "--out",
            arg(d.path()),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let files = sorted_files(a.path());
    assert_eq!(files, sorted_files(b.path()));
    let names: Vec<&str> = files.iter().map(|(n, _)| n.as_str()).collect();
    assert!(names.iter().any(|n| n.ends_with(".metrics.json")));

    let logs = a.path().join("combined-crossing-3__greedy__seed4.logs.json");
    let replay = tempfile::tempdir().unwrap();
    let out = socnav(&[
        "replay-export",
        "--logs",
        arg(&logs),
        "--format",
        "trajectory-table",
        "--out",
        arg(replay.path()),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for (name, bytes) in sorted_files(replay.path()) {
        let original = files.iter().find(|(n, _)| *n == name).expect("same file names");
        assert_eq!(&original.1, &bytes, "{name}");
    }
}

#[test]
fn unknown_suite_and_format_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = socnav(&["eval", "--policy", "greedy", "--suite", "hallway", "--out", arg(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("valid suites"));
    let out = socnav(&[
        "replay-export",
        "--logs",
        "x.logs.json",
        "--format",
        "png",
        "--out",
        arg(dir.path()),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("valid formats"));
}

#[test]
fn scenario_generation_writes_one_record_per_run() {
    let dir = tempfile::tempdir().unwrap();
    let out = socnav(&["scenario-gen", "--suite", "crowd:towards:5", "--runs", "4", "--out", arg(dir.path())]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(dir.path().join("crowd-towards-5__seed0.scenarios.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    let runs = v.as_array().unwrap();
    assert_eq!(runs.len(), 4);
    assert!(runs.iter().all(|r| r["pedestrians"].as_array().unwrap().len() == 5));
}
