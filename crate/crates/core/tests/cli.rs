//! End-to-end tests of the binary: exit codes, artifact determinism, and
//! the `--verify` round trip.

use std::path::Path;
use std::process::{Command, Output};

use tempfile::tempdir;

const F2_GROWTH: &str = r#"
seed = 7
set = ["a", "b", "a^-1", "b^-1"]

[group]
kind = "free"
labels = ["a", "b"]

[params]
n_max = 10
"#;

const Z2Z3_LOXO: &str = r#"
set = ["s", "t"]

[group]
kind = "free-product"
labels = ["s", "t"]
orders = [2, 3]
"#;

const TRIVIAL_TRANSFER: &str = r#"
set = [["1", "1"]]

[group]
kind = "direct"
[[group.factors]]
kind = "free"
labels = ["a", "b"]
[[group.factors]]
kind = "free"
labels = ["c", "d"]

[params]
m = 1
"#;

fn growthlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_growthlab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("config.toml");
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_owned()
}

#[test]
fn growth_matches_symmetric_closed_form() {
    let dir = tempdir().unwrap();
    let cfg = write_config(dir.path(), F2_GROWTH);
    let out = growthlab(&["growth", "--config", &cfg]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows.len(), 11, "header plus ten rows");
    for n in 1..=10u32 {
        let cumulative: u64 = rows[n as usize].split(',').nth(2).unwrap().parse().unwrap();
        assert_eq!(cumulative, 2 * 3u64.pow(n) - 1);
    }
}

#[test]
fn loxo_z2z3_short_element() {
    let dir = tempdir().unwrap();
    let cfg = write_config(dir.path(), Z2Z3_LOXO);
    let out = growthlab(&["loxo", "--config", &cfg]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    // b = st lies in U^{<=2} with translation length 2
    assert!(text.contains("tau = 2"), "{text}");
    assert!(text.contains("lambda4 = 4"), "{text}");
}

#[test]
fn bad_config_exits_2() {
    let out = growthlab(&["growth", "--config", "/no/such/config.toml"]);
    assert_eq!(out.status.code(), Some(2));

    let dir = tempdir().unwrap();
    let cfg = write_config(dir.path(), "bogus = true");
    let out = growthlab(&["growth", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stderr).unwrap().contains("bogus"));
}

#[test]
fn trivial_transfer_is_inconclusive() {
    let dir = tempdir().unwrap();
    let cfg = write_config(dir.path(), TRIVIAL_TRANSFER);
    let out = growthlab(&["transfer", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(3));
    let report = String::from_utf8(out.stdout).unwrap();
    assert!(report.contains("lambda_per_factor"), "{report}");
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempdir().unwrap();
    let cfg = write_config(dir.path(), F2_GROWTH);
    let a = growthlab(&["growth", "--config", &cfg]);
    let b = growthlab(&["growth", "--config", &cfg, "--threads", "2"]);
    assert!(a.status.success() && b.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn verify_round_trip_and_tamper_detection() {
    let dir = tempdir().unwrap();
    let cfg = write_config(dir.path(), Z2Z3_LOXO);
    let artifact = dir.path().join("cert.toml");
    let artifact = artifact.to_str().unwrap();

    let out = growthlab(&["loxo", "--config", &cfg, "--out", artifact]);
    assert!(out.status.success());

    let out = growthlab(&["loxo", "--config", &cfg, "--out", artifact, "--verify"]);
    assert_eq!(out.status.code(), Some(0));

    let mut bytes = std::fs::read(artifact).unwrap();
    bytes.extend_from_slice(b"tampered\n");
    std::fs::write(artifact, bytes).unwrap();
    let out = growthlab(&["loxo", "--config", &cfg, "--out", artifact, "--verify"]);
    assert_eq!(out.status.code(), Some(4));

    // verify against a missing artifact is an input problem, not a violation
    let out = growthlab(&["loxo", "--config", &cfg, "--out", "/no/such/cert", "--verify"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn single_suite_criterion_runs() {
    let out = growthlab(&["suite", "--criterion", "9"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("ACCEPTANCE 9: PASS"), "{text}");

    let out = growthlab(&["suite", "--criterion", "42"]);
    assert_eq!(out.status.code(), Some(2));
}
