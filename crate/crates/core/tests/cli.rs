//! Command-line behaviour: exit codes, config handling and artifacts.

use std::fs;
use std::path::PathBuf;

use dpp_linstat::cli::{main_with_args, EXIT_CONFIG, EXIT_CRITERION, EXIT_NUMERICAL, EXIT_PASS};

fn scratch(name: &str) -> PathBuf {
    let p = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(format!("cli-{name}"));
    let _ = fs::remove_dir_all(&p);
    fs::create_dir_all(&p).unwrap();
    p
}

fn run(args: &[&str]) -> i32 {
    main_with_args(std::iter::once("dpp-linstat").chain(args.iter().copied()))
}

#[test]
fn list_and_help_succeed() {
    assert_eq!(run(&["--list"]), EXIT_PASS);
    assert_eq!(run(&["--help"]), EXIT_PASS);
}

#[test]
fn configuration_errors_exit_2() {
    let dir = scratch("config");
    assert_eq!(run(&[]), EXIT_CONFIG);
    assert_eq!(run(&["no-such-experiment"]), EXIT_CONFIG);
    assert_eq!(run(&["clt", "--experiment", "sample"]), EXIT_CONFIG);
    assert_eq!(run(&["bessel-rough", "--scales", "16"]), EXIT_CONFIG);
    assert_eq!(run(&["harmonic-rough", "--scales", "64,32,128"]), EXIT_CONFIG);
    assert_eq!(run(&["bessel-smooth", "--scales", "1,2,4"]), EXIT_CONFIG);
    assert_eq!(run(&["constants", "--tolerance", "-1"]), EXIT_CONFIG);
    assert_eq!(run(&["sample", "--tolerance", "0.1"]), EXIT_CONFIG);
    assert_eq!(run(&["sample", "--dim", "0"]), EXIT_CONFIG);

    let bad = dir.join("bad.json");
    fs::write(&bad, r#"{"experiment": "clt", "bogus": 1}"#).unwrap();
    assert_eq!(run(&["--config", bad.to_str().unwrap()]), EXIT_CONFIG);
    fs::write(&bad, "not json").unwrap();
    assert_eq!(run(&["--config", bad.to_str().unwrap()]), EXIT_CONFIG);
    assert_eq!(run(&["--config", dir.join("missing.json").to_str().unwrap()]), EXIT_CONFIG);
}

#[test]
fn config_file_drives_a_run() {
    let dir = scratch("file");
    let cfg = dir.join("run.json");
    let out = dir.join("out");
    fs::write(
        &cfg,
        format!(r#"{{"experiment": "sample", "seed": 3, "replicas": 2, "out": {:?}}}"#, out.to_str().unwrap()),
    )
    .unwrap();
    assert_eq!(run(&["--config", cfg.to_str().unwrap()]), EXIT_PASS);
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("sample.json")).unwrap()).unwrap();
    assert_eq!(json["config"]["seed"], 3);
    assert_eq!(json["passed"], true);
    assert!(!json["points"].as_array().unwrap().is_empty());
}

#[test]
fn criterion_failure_exits_1() {
    let dir = scratch("fail");
    let out = dir.to_str().unwrap();
    assert_eq!(run(&["cue-exact", "--replicas", "30", "--tolerance", "1e-300", "--out", out]), EXIT_CRITERION);
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.join("cue-exact.json")).unwrap()).unwrap();
    assert_eq!(json["passed"], false);
}

#[test]
fn unwritable_output_exits_3() {
    let dir = scratch("io");
    let blocker = dir.join("file");
    fs::write(&blocker, "").unwrap();
    let out = blocker.join("sub");
    assert_eq!(run(&["constants", "--out", out.to_str().unwrap()]), EXIT_NUMERICAL);
}

#[test]
fn identical_configs_give_identical_artifacts() {
    let dir = scratch("repro");
    let out = dir.to_str().unwrap();
    let args = ["cue-exact", "--replicas", "60", "--seed", "11", "--out", out];
    assert_eq!(run(&args), EXIT_PASS);
    let csv = fs::read(dir.join("cue-exact.csv")).unwrap();
    let json = fs::read(dir.join("cue-exact.json")).unwrap();
    assert_eq!(run(&args), EXIT_PASS);
    assert_eq!(csv, fs::read(dir.join("cue-exact.csv")).unwrap());
    assert_eq!(json, fs::read(dir.join("cue-exact.json")).unwrap());

    let text = String::from_utf8(csv).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# dpp-linstat table v1 experiment=cue-exact config={"));
    assert_eq!(lines.next().unwrap(), "series,scale,raw,normalized,diagnostic");
    assert!(lines.all(|l| l.split(',').count() == 5));

    // a different seed changes the sampled rows
    assert_eq!(run(&["cue-exact", "--replicas", "60", "--seed", "12", "--out", out]), EXIT_PASS);
    assert_ne!(text.as_bytes(), fs::read(dir.join("cue-exact.csv")).unwrap().as_slice());
}
