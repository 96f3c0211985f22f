//! Exit-code and filesystem behavior of the installed binary.

use std::path::PathBuf;
use std::process::Command;

fn binary() -> Command {
    Command::new(env!("CARGO_BIN_EXE_willsim"))
}

fn crate_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

fn temp_out(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("willsim-cli-{tag}-{}", std::process::id()));
    if dir.exists() {
        std::fs::remove_dir_all(&dir).unwrap();
    }
    dir
}

#[test]
fn successful_run_exits_zero_and_writes_files() {
    let out = temp_out("ok");
    let status = binary()
        .args([
            "estimate-willpower",
            "--config",
            crate_dir()
                .join("configs/estimate_willpower.json")
                .to_str()
                .unwrap(),
            "--out",
            out.to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    assert!(out.join("report.json").exists());
    assert!(out.join("category_shares.csv").exists());
    std::fs::remove_dir_all(&out).unwrap();
}

#[test]
fn unknown_subcommand_exits_two_without_files() {
    let out = temp_out("unknown-sub");
    let output = binary()
        .args(["frobnicate", "--config", "whatever.json", "--out", out.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    assert!(!out.exists());
    assert!(String::from_utf8_lossy(&output.stderr).contains("unknown subcommand"));
}

#[test]
fn config_with_unknown_key_exits_two() {
    let out = temp_out("unknown-key");
    let config = out.join("bad.json");
    std::fs::create_dir_all(&out).unwrap();
    std::fs::write(
        &config,
        r#"{"subcommand": "estimate-willpower", "seed": 1, "typo_key": true,
           "params": {"dataset": "bundled", "fractions": "baseline",
                      "budget_tw": 20.0, "body_tw": 1.0}}"#,
    )
    .unwrap();
    let output = binary()
        .args([
            "estimate-willpower",
            "--config",
            config.to_str().unwrap(),
            "--out",
            out.join("results").to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    assert!(!out.join("results").exists());
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("line"), "diagnostic not line-anchored: {stderr}");
    std::fs::remove_dir_all(&out).unwrap();
}

#[test]
fn params_subcommand_mismatch_exits_two() {
    let out = temp_out("mismatch");
    std::fs::create_dir_all(&out).unwrap();
    let config = out.join("mismatch.json");
    std::fs::write(
        &config,
        r#"{"subcommand": "infer", "seed": 1,
           "params": {"dataset": "bundled", "fractions": "baseline",
                      "budget_tw": 20.0, "body_tw": 1.0}}"#,
    )
    .unwrap();
    let output = binary()
        .args([
            "estimate-willpower",
            "--config",
            config.to_str().unwrap(),
            "--out",
            out.join("results").to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    assert!(!out.join("results").exists());
    std::fs::remove_dir_all(&out).unwrap();
}

#[test]
fn runtime_failure_exits_three_without_partial_outputs() {
    let out = temp_out("runtime");
    std::fs::create_dir_all(&out).unwrap();
    let config = out.join("zero.json");
    // n = 0 passes schema validation but fails at population generation
    std::fs::write(
        &config,
        r#"{"subcommand": "simulate-crs", "seed": 1,
           "params": {"n_grid": [0], "budget": 4, "rank": 2, "noise_sigma": 0.0}}"#,
    )
    .unwrap();
    let output = binary()
        .args([
            "simulate-crs",
            "--config",
            config.to_str().unwrap(),
            "--out",
            out.join("results").to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(3));
    assert!(!out.join("results").exists());
    std::fs::remove_dir_all(&out).unwrap();
}

#[test]
fn seed_override_changes_stochastic_report() {
    let out_a = temp_out("seed-a");
    let out_b = temp_out("seed-b");
    for (out, seed) in [(&out_a, "7"), (&out_b, "8")] {
        let status = binary()
            .args([
                "verify-a7",
                "--config",
                crate_dir().join("configs/verify_a7.json").to_str().unwrap(),
                "--out",
                out.to_str().unwrap(),
                "--seed",
                seed,
            ])
            .status()
            .unwrap();
        assert_eq!(status.code(), Some(0));
    }
    let a = std::fs::read(out_a.join("report.json")).unwrap();
    let b = std::fs::read(out_b.join("report.json")).unwrap();
    assert_ne!(a, b, "different seeds must change the stochastic report");
    std::fs::remove_dir_all(&out_a).unwrap();
    std::fs::remove_dir_all(&out_b).unwrap();
}
