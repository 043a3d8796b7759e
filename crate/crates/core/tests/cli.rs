// Copyright 2026 The katoreg Authors
// SPDX-License-Identifier: Apache-2.0

use std::path::Path;
use std::process::{Command, Output};

fn katoreg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_katoreg"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn out_dir(dir: &Path) -> &str {
    dir.to_str().unwrap()
}

fn rows(path: &Path) -> Vec<Vec<String>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn sub_semigroup_trajectory_decays_at_the_closed_form_rate() {
    let dir = tempfile::tempdir().unwrap();
    let out = katoreg(&[
        "evolve",
        "--generator",
        "H",
        "--state",
        "basis:1",
        "--dim",
        "8",
        "--buffer",
        "2",
        "--time-steps",
        "20",
        "--time-stop",
        "2",
        "--out-dir",
        out_dir(dir.path()),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let table = rows(&dir.path().join("trajectory.csv"));
    assert_eq!(
        table[0],
        [
            "t",
            "trace",
            "trace_norm",
            "min_eig",
            "purity",
            "mean_occupation"
        ]
    );
    assert_eq!(table.len(), 21);
    for row in &table[1..] {
        let t: f64 = row[0].parse().unwrap();
        let tr: f64 = row[1].parse().unwrap();
        assert!((tr - (-1.5 * t).exp()).abs() < 1e-10);
    }
    assert!(dir.path().join("manifest.json").exists());
}

#[test]
fn full_generator_keeps_unit_trace_and_single_point_grid_echoes_state() {
    let dir = tempfile::tempdir().unwrap();
    let out = katoreg(&[
        "evolve",
        "--dim",
        "20",
        "--state",
        "seeded",
        "--out-dir",
        out_dir(dir.path()),
    ]);
    assert_eq!(out.status.code(), Some(0));
    for row in &rows(&dir.path().join("trajectory.csv"))[1..] {
        assert!((row[1].parse::<f64>().unwrap() - 1.0).abs() < 1e-6);
    }
    let out = katoreg(&[
        "evolve",
        "--dim",
        "6",
        "--state",
        "basis:2",
        "--time-steps",
        "1",
        "--out-dir",
        out_dir(dir.path()),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let table = rows(&dir.path().join("trajectory.csv"));
    assert_eq!(table.len(), 2);
    assert_eq!(table[1], ["0", "1", "1", "0", "1", "2"]);
}

#[test]
fn configuration_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "dim = 10\nsigma_mnus = 1\n").unwrap();
    let out = katoreg(&["verify", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("sigma_mnus"));

    assert_eq!(
        katoreg(&[
            "evolve",
            "--state",
            "nonsense",
            "--out-dir",
            out_dir(dir.path())
        ])
        .status
        .code(),
        Some(2)
    );
    assert_eq!(
        katoreg(&[
            "study",
            "--axis",
            "sideways",
            "--out-dir",
            out_dir(dir.path())
        ])
        .status
        .code(),
        Some(2)
    );
    assert_eq!(katoreg(&["verify", "--dim", "1"]).status.code(), Some(2));
    assert_eq!(katoreg(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "dim = 8\nbuffer = 2\ntime_steps = 3\n").unwrap();
    let out = katoreg(&[
        "evolve",
        "--config",
        cfg.to_str().unwrap(),
        "--time-steps",
        "4",
        "--out-dir",
        out_dir(dir.path()),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(rows(&dir.path().join("trajectory.csv")).len(), 5);
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["config"]["dim"], 8);
    assert_eq!(manifest["config"]["time_steps"], 4);
}

#[test]
fn require_markov_fails_outside_the_markov_regime() {
    let dir = tempfile::tempdir().unwrap();
    let out = katoreg(&[
        "verify",
        "--dim",
        "30",
        "--samples",
        "4",
        "--sigma-minus",
        "1",
        "--sigma-plus",
        "1.5",
        "--require-markov",
        "--out-dir",
        out_dir(dir.path()),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("trace_preservation"));
}

#[test]
fn isolated_system_skips_dissipation_checks() {
    let dir = tempfile::tempdir().unwrap();
    let out = katoreg(&[
        "verify",
        "--dim",
        "30",
        "--samples",
        "4",
        "--sigma-minus",
        "0",
        "--sigma-plus",
        "0",
        "--out-dir",
        out_dir(dir.path()),
    ]);
    let reports: Vec<serde_json::Value> =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("reports.json")).unwrap())
            .unwrap();
    assert!(reports.len() >= 10);
    let skipped: Vec<&str> = reports
        .iter()
        .filter(|r| r["verdict"] == "skipped")
        .map(|r| r["name"].as_str().unwrap())
        .collect();
    assert!(skipped.contains(&"trace_preservation") && skipped.contains(&"stationary_state"));
    assert!(reports
        .iter()
        .all(|r| r["passed"] == true || r["informational"] == true));
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn counterexample_scan_reproduces_the_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let out = katoreg(&["counterexample", "--out-dir", out_dir(dir.path())]);
    assert_eq!(out.status.code(), Some(0));
    let table = rows(&dir.path().join("counterexample.csv"));
    assert_eq!(
        &table[0][..5],
        [
            "k",
            "lambda",
            "closed_form_value",
            "matrix_value",
            "negative"
        ]
    );
    let find = |k: &str| {
        table
            .iter()
            .find(|r| r[0] == k && r[1] == "0.4" && r[5] == "1" && r[6] == "1")
            .unwrap()
            .clone()
    };
    assert_eq!(find("10")[2], "-0.84");
    assert_eq!(find("10")[4], "true");
    assert_eq!(find("2")[2], "3");

    let out = katoreg(&[
        "counterexample",
        "--lambda",
        "0",
        "--out-dir",
        out_dir(dir.path()),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(rows(&dir.path().join("counterexample.csv"))[1..]
        .iter()
        .all(|r| r[4] == "false"));
}

#[test]
fn study_axes_write_their_tables() {
    let dir = tempfile::tempdir().unwrap();
    let out = katoreg(&[
        "study",
        "--axis",
        "kato",
        "--dim",
        "16",
        "--out-dir",
        out_dir(dir.path()),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let table = rows(&dir.path().join("study.csv"));
    assert_eq!(table[0][0], "r");
    let errors: Vec<f64> = table[1..].iter().map(|r| r[1].parse().unwrap()).collect();
    assert!(errors.windows(2).all(|w| w[1] < w[0]));

    let out = katoreg(&[
        "study",
        "--axis",
        "cutoff",
        "--dim",
        "12",
        "--buffer",
        "2",
        "--out-dir",
        out_dir(dir.path()),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(rows(&dir.path().join("study.csv")).len(), 12);

    let out = katoreg(&[
        "study",
        "--axis",
        "cutoff",
        "--family",
        "kato_scaling",
        "--out-dir",
        out_dir(dir.path()),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn manifest_reproduces_csv_outputs() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let out = katoreg(&[
        "study",
        "--axis",
        "euler",
        "--dim",
        "10",
        "--buffer",
        "2",
        "--euler-steps",
        "8,16,32",
        "--out-dir",
        out_dir(a.path()),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let manifest = a.path().join("manifest.json");
    let out = katoreg(&[
        "study",
        "--config",
        manifest.to_str().unwrap(),
        "--out-dir",
        out_dir(b.path()),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(
        std::fs::read(a.path().join("study.csv")).unwrap(),
        std::fs::read(b.path().join("study.csv")).unwrap()
    );
}
