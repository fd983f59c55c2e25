mod common;

use std::path::Path;
use std::process::{Command, Output};

use common::{constant, full_mask, synthetic_corpus, write_dataset, Sample};

fn patchscore(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_patchscore")).args(args).output().unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn full_run_through_the_binary() {
    let dir = tempfile::tempdir().unwrap();
    let data = synthetic_corpus(&dir.path().join("data"));
    let out = dir.path().join("out");
    let common = ["--out", path(&out), "--sides", "32,64", "--seed", "3"];

    let run = |extra: &[&str]| {
        let args: Vec<&str> = extra.iter().chain(common.iter()).copied().collect();
        let o = patchscore(&args);
        assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        o
    };
    run(&["extract", "--index", path(&data)]);
    run(&["score", "--criterion", "entropy"]);
    run(&["score", "--criterion", "memd"]);
    let o = run(&["select", "--criterion", "memd", "--band", "high", "--quantile", "0.3"]);
    let listed = String::from_utf8(o.stdout).unwrap();
    assert_eq!(listed.lines().count(), 2);
    assert!(listed.contains("manifest_memd_high_0.3_64.csv"));

    let o = run(&["bench", "--criterion", "memd", "--repetitions", "2"]);
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let entry = &report["entries"][0];
    let m = entry["patches"].as_u64().unwrap();
    assert_eq!(entry["pairs"].as_u64().unwrap(), m * (m - 1) / 2);
    assert_eq!(entry["samples_sec"].as_array().unwrap().len(), 2);
}

#[test]
fn quantile_at_or_above_half_is_a_validation_error() {
    let o = patchscore(&["select", "--quantile", "0.6"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("0.6"));
}

#[test]
fn bad_side_is_a_validation_error() {
    assert_eq!(patchscore(&["extract", "--index", ".", "--sides", "48"]).status.code(), Some(1));
}

#[test]
fn missing_index_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = patchscore(&["extract", "--index", path(dir.path()), "--out", path(&dir.path().join("o"))]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unknown_label_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    write_dataset(
        dir.path(),
        &[Sample { id: "a".into(), label: "unknown", image: constant(32, 32, 0), mask: Some(full_mask(32, 32)) }],
    );
    let o = patchscore(&["extract", "--index", path(dir.path()), "--out", path(&dir.path().join("o"))]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("unknown"));
}

#[test]
fn bench_on_missing_store_is_empty() {
    let dir = tempfile::tempdir().unwrap();
    let o = patchscore(&["bench", "--out", path(&dir.path().join("nothing"))]);
    assert_eq!(o.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(report["entries"].as_array().unwrap().is_empty());
}

#[test]
fn help_lists_subcommands() {
    let o = patchscore(&["--help"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    for cmd in ["extract", "score", "select", "aggregate", "bench", "fetch"] {
        assert!(text.contains(cmd), "{cmd} missing from help");
    }
}
