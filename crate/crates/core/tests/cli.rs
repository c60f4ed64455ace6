//! Drives the `iqauth` binary end to end on a tiny constellation.

use std::path::Path;
use std::process::Command;

fn iqauth(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_iqauth"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) {
    let out = iqauth(args);
    assert!(out.status.success(), "iqauth {args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
}

fn pipeline(root: &Path) {
    let p = |s: &str| root.join(s).to_str().unwrap().to_string();
    let cfg = p("run.cfg");
    std::fs::write(&cfg, "seed = 99\nside = 16\nsamples_per_image = 2000\ncnn.epochs = 2\n").unwrap();
    ok(&["synth", "--config", &cfg, "--sats", "3", "--frames", "300", "--snr", "20", "--out", &p("data")]);
    ok(&["image", "--config", &cfg, "--input", &p("data/dataset.csv"), "--out", &p("img")]);
    ok(&["stats", "--config", &cfg, "--input", &p("data/dataset.csv"), "--out", &p("stats")]);
    ok(&["train-cnn", "--config", &cfg, "--images", &p("img/images"), "--out", &p("cnn")]);
}

fn read(root: &Path, rel: &str) -> Vec<u8> {
    std::fs::read(root.join(rel)).unwrap_or_else(|e| panic!("{rel}: {e}"))
}

#[test]
fn same_seed_same_outputs() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    pipeline(a.path());
    pipeline(b.path());
    for rel in [
        "data/dataset.csv",
        "img/images/labels.csv",
        "img/images/sat001_img00000.pgm",
        "stats/snr_hist.csv",
        "cnn/model.cnn",
        "cnn/trace.csv",
    ] {
        assert_eq!(read(a.path(), rel), read(b.path(), rel), "{rel} differs between runs");
    }
    let summary = String::from_utf8(read(a.path(), "cnn/summary.txt")).unwrap();
    assert!(summary.contains("seed = 99"), "{summary}");
}

#[test]
fn missing_seed_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = iqauth(&["synth", "--sats", "2", "--frames", "10", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("seed"));
}

#[test]
fn unreadable_input_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.csv");
    let out = iqauth(&["--seed", "1", "ingest", "--input", missing.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
}
