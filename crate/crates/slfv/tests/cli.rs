//! End-to-end tests of the `slfv` binary: config parsing, artifact shapes,
//! error paths, and reproducibility across worker counts.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn run_cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_slfv"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_cfg(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("config.json");
    std::fs::write(&path, text).unwrap();
    path
}

fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

/// CSV rows after the `#` preamble and the header, split on commas.
fn csv_rows(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut header = Vec::new();
    let mut rows = Vec::new();
    for line in text.lines() {
        if line.starts_with('#') || line.is_empty() {
            continue;
        }
        if header.is_empty() {
            header = line.split(',').map(str::to_owned).collect();
        } else {
            rows.push(line.split(',').map(|v| v.parse::<f64>().unwrap()).collect());
        }
    }
    (header, rows)
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

const HEADLINE_REGIME: &str =
    r#""regime": {"kind": "one_tail", "d": 1, "u0": 0.5, "mu": 0.2, "a": 1.5, "b": 1.0, "c": 0.0}"#;

#[test]
fn params_reports_the_derived_limit_quantities() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(
        dir.path(),
        r#"{
            "seed": 7,
            "regime": {"kind": "one_tail", "d": 2, "u0": 1.0, "mu": 0.2, "a": 1.5, "b": 1.0, "c": 0.7},
            "scaling": {"N": 1000, "delta": 0.1}
        }"#,
    );
    let out_dir = dir.path().join("out");
    let out = run_cli(&[
        "params",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr_of(&out));
    assert!(String::from_utf8_lossy(&out.stdout).contains("params.json"));

    let report = read_json(&out_dir.join("params.json"));
    assert_eq!(report["seed"], 7);
    assert_eq!(report["config_sha256"].as_str().unwrap().len(), 64);
    let derived = &report["derived"];
    assert!((derived["alpha"].as_f64().unwrap() - 1.5).abs() < 1e-12);
    assert!((derived["beta"].as_f64().unwrap() - 2.2).abs() < 1e-12);
    assert_eq!(derived["coalescence"], "local");
    let gamma = derived["gamma"].as_f64().unwrap();
    assert!((gamma - 49.34802200544679).abs() < 1e-9 * gamma);
    // equal search and replacement radii take the corrected dispersal rate
    let zeta = derived["zeta"].as_f64().unwrap();
    assert!((zeta - 5.1368302747743638).abs() < 1e-9 * zeta);
    let schedule = &report["schedule"];
    assert_eq!(schedule["N"], 1000);
    assert!(schedule["uN"].as_f64().unwrap() > 0.0);
}

#[test]
fn params_handles_a_two_sided_radius_mixture() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(
        dir.path(),
        r#"{
            "seed": 3,
            "regime": {"kind": "two_tails", "d": 1, "u0": 0.5, "mu": 0.1,
                       "a1": 1.3, "a2": 1.3, "c1": 0.0, "c2": 0.4}
        }"#,
    );
    let out_dir = dir.path().join("out");
    let out = run_cli(&[
        "params",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr_of(&out));
    let derived = &read_json(&out_dir.join("params.json"))["derived"];
    // equal tail exponents: both families feed the same stable index
    assert!((derived["alpha"].as_f64().unwrap() - 1.3).abs() < 1e-12);
    assert!(derived["zeta"].as_f64().unwrap() > 0.0);
    assert!(derived["gamma"].as_f64().unwrap() > 0.0);
    assert!(derived["sigma2"].is_null());
}

#[test]
fn params_rejects_the_brownian_boundary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(
        dir.path(),
        r#"{
            "seed": 1,
            "regime": {"kind": "one_tail", "d": 1, "u0": 0.5, "mu": 0.0, "a": 2.0, "b": 1.0, "c": 0.0}
        }"#,
    );
    let out = run_cli(&["params", "--config", cfg.to_str().unwrap()]);
    assert!(!out.status.success());
    let err = stderr_of(&out);
    assert!(err.starts_with("error:"), "{err}");
    assert!(err.contains("Brownian boundary"), "{err}");
}

#[test]
fn wmf_single_point_grid_normalizes_to_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(
        dir.path(),
        r#"{
            "seed": 1,
            "wmf": {
                "mu": 0.2,
                "curves": [{"label": "lr", "d": 2, "alpha": 1.5, "beta": 1.5}],
                "r": {"start": 3.0, "stop": 3.0, "count": 1},
                "normalize_at": 3.0
            }
        }"#,
    );
    let out_dir = dir.path().join("out");
    let out = run_cli(&[
        "wmf",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr_of(&out));
    let (header, rows) = csv_rows(&out_dir.join("wmf.csv"));
    assert_eq!(header, vec!["r", "lr"]);
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][0], 3.0);
    assert!((rows[0][1] - 1.0).abs() < 1e-12);
}

#[test]
fn wmf_doubling_mutation_steepens_the_normalized_decay() {
    let dir = tempfile::tempdir().unwrap();
    let mut at_r10 = Vec::new();
    for (tag, mu) in [("a", 0.2), ("b", 0.4)] {
        let cfg = write_cfg(
            dir.path(),
            &format!(
                r#"{{
                    "seed": 1,
                    "wmf": {{
                        "mu": {mu},
                        "curves": [{{"label": "lr", "d": 2, "alpha": 1.5, "beta": 1.5}}],
                        "r": {{"start": 3.0, "stop": 10.0, "count": 8}},
                        "normalize_at": 3.0
                    }}
                }}"#
            ),
        );
        let out_dir = dir.path().join(tag);
        let out = run_cli(&[
            "wmf",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out_dir.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{}", stderr_of(&out));
        let (_, rows) = csv_rows(&out_dir.join("wmf.csv"));
        assert_eq!(rows.len(), 8);
        at_r10.push(rows.last().unwrap()[1]);
    }
    assert!(
        at_r10[1] < at_r10[0],
        "mu = 0.4 should decay faster than mu = 0.2: {at_r10:?}"
    );
}

#[test]
fn wmf_brownian_curves_ignore_the_coalescence_exponent_above_d() {
    // with local coalescence the identity curve does not depend on beta, so
    // the two Brownian configs superpose after normalization
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(
        dir.path(),
        r#"{
            "seed": 1,
            "wmf": {
                "mu": 0.2,
                "curves": [
                    {"label": "purple", "d": 2, "alpha": 2.0, "beta": 2.2},
                    {"label": "grey", "d": 2, "alpha": 2.0, "beta": 3.0}
                ],
                "r": {"start": 3.0, "stop": 10.0, "count": 8},
                "normalize_at": 3.0
            }
        }"#,
    );
    let out_dir = dir.path().join("out");
    let out = run_cli(&[
        "wmf",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr_of(&out));
    let (_, rows) = csv_rows(&out_dir.join("wmf.csv"));
    for row in &rows {
        assert!((row[1] - row[2]).abs() < 1e-6, "row {row:?}");
    }
}

#[test]
fn wmf_rejects_bad_grids_and_labels() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(
        dir.path(),
        r#"{
            "seed": 1,
            "wmf": {
                "mu": 0.2,
                "curves": [{"label": "lr", "d": 1, "alpha": 1.5, "beta": 1.5}],
                "r": {"start": 0.0, "stop": 10.0, "count": 5}
            }
        }"#,
    );
    let out = run_cli(&["wmf", "--config", cfg.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(stderr_of(&out).contains("diverges at r = 0"));

    let cfg = write_cfg(
        dir.path(),
        r#"{
            "seed": 1,
            "wmf": {
                "mu": 0.2,
                "curves": [{"label": "a,b", "d": 1, "alpha": 1.5, "beta": 1.5}],
                "r": {"start": 1.0, "stop": 10.0, "count": 5}
            }
        }"#,
    );
    let out = run_cli(&["wmf", "--config", cfg.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(stderr_of(&out).contains("CSV-safe"));
}

#[test]
fn dual_reports_outcome_counts_and_a_comparison() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(
        dir.path(),
        &format!(
            r#"{{
                "seed": 11,
                {HEADLINE_REGIME},
                "scaling": {{"N": 50, "delta": 0.2}},
                "dual": {{
                    "t": 1.0,
                    "reps": 2000,
                    "start1": {{"block": [0.0, 1.0]}},
                    "start2": {{"block": [2.0, 3.0]}},
                    "compare": true,
                    "trials_csv": true
                }}
            }}"#
        ),
    );
    let out_dir = dir.path().join("out");
    let out = run_cli(&[
        "dual",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr_of(&out));
    let report = read_json(&out_dir.join("dual.json"));
    let outcomes = &report["outcomes"];
    let total = outcomes["coal"].as_u64().unwrap()
        + outcomes["killed"].as_u64().unwrap()
        + outcomes["survived"].as_u64().unwrap();
    assert_eq!(total, 2000);
    let estimate = report["estimate"]["estimate"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&estimate));
    assert!(report["comparison"]["formula"].as_f64().unwrap() > 0.0);
    assert!(report["comparison"]["z_score"].as_f64().unwrap().is_finite());

    let trials = std::fs::read_to_string(out_dir.join("dual_trials.csv")).unwrap();
    let data_lines = trials
        .lines()
        .filter(|l| !l.starts_with('#') && !l.is_empty())
        .count();
    assert_eq!(data_lines, 2001, "header plus one row per replicate");
}

#[test]
fn forward_zero_duration_writes_only_the_initial_state() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(
        dir.path(),
        r#"{
            "seed": 5,
            "regime": {"kind": "one_tail", "d": 2, "u0": 0.5, "mu": 0.0, "a": 1.3, "b": 0.5, "c": 0.0},
            "scaling": {"N": 20, "delta": 0.25},
            "forward": {
                "mode": "two_allele",
                "l": 8.0,
                "grid": 16,
                "init": {"ball": {"center": [4.0, 4.0], "radius": 2.0}},
                "t_end": 0.0,
                "snapshot_times": [0.0]
            }
        }"#,
    );
    let out_dir = dir.path().join("out");
    let out = run_cli(&[
        "forward",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr_of(&out));
    let path = out_dir.join("forward_snapshots.csv");
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.contains("# events=0"));
    let (header, rows) = csv_rows(&path);
    assert_eq!(header, vec!["time", "cell", "x0", "x1", "value"]);
    assert_eq!(rows.len(), 256, "one row per cell of the 16x16 grid");
    let mut seen = [false, false];
    for row in &rows {
        assert_eq!(row[0], 0.0);
        assert!(row[4] == 0.0 || row[4] == 1.0, "two-allele init is pure");
        seen[(row[4] > 0.5) as usize] = true;
    }
    assert!(seen[0] && seen[1], "ball and complement both present");
}

#[test]
fn forward_runs_both_radius_couplings() {
    // same stable index alpha = 1.3 reached with wide parent search (b = 2)
    // and with narrow search (b = 0.5)
    let dir = tempfile::tempdir().unwrap();
    for (tag, a, b) in [("wide", 2.6, 2.0), ("narrow", 1.3, 0.5)] {
        let cfg = write_cfg(
            dir.path(),
            &format!(
                r#"{{
                    "seed": 5,
                    "regime": {{"kind": "one_tail", "d": 2, "u0": 0.5, "mu": 0.0,
                               "a": {a}, "b": {b}, "c": 0.0}},
                    "scaling": {{"N": 20, "delta": 0.25}},
                    "forward": {{
                        "mode": "two_allele",
                        "l": 4.0,
                        "grid": 16,
                        "init": {{"ball": {{"center": [2.0, 2.0], "radius": 1.0}}}},
                        "t_end": 0.1,
                        "snapshot_times": [0.1]
                    }}
                }}"#
            ),
        );
        let out_dir = dir.path().join(tag);
        let out = run_cli(&[
            "forward",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out_dir.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{tag}: {}", stderr_of(&out));
        let (_, rows) = csv_rows(&out_dir.join("forward_snapshots.csv"));
        assert_eq!(rows.len(), 256);
        for row in &rows {
            assert!((0.0..=1.0).contains(&row[4]), "{tag}: frequency in [0, 1]");
        }
    }
}

#[test]
fn qv_compares_against_the_limiting_constant() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(
        dir.path(),
        &format!(
            r#"{{
                "seed": 13,
                {HEADLINE_REGIME},
                "scaling": {{"N": 50, "delta": 0.2}},
                "qv": {{
                    "l": 10.0,
                    "grid": 50,
                    "phi": {{"bump": {{"center": [5.0], "radius": 3.0, "amplitude": 1.0}}}},
                    "window": [0.0, 0.5],
                    "t_end": 0.1,
                    "reps": 4,
                    "compare": true
                }}
            }}"#
        ),
    );
    let out_dir = dir.path().join("out");
    let out = run_cli(&[
        "qv",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr_of(&out));
    let report = read_json(&out_dir.join("qv.json"));
    assert_eq!(report["reps"], 4);
    assert!(report["formula"].as_f64().unwrap() > 0.0);
    let ratio = report["ratio"].as_f64().unwrap();
    assert!(ratio.is_finite() && ratio > 0.0);
}

#[test]
fn gencheck_sweeps_resolutions() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(
        dir.path(),
        r#"{
            "seed": 1,
            "gencheck": {
                "u0": 1.0,
                "a": 1.5,
                "b": 0.0,
                "deltas": [0.2, 0.1],
                "x": {"start": -1.0, "stop": 1.0, "count": 5},
                "phi": {"gaussian": {"center": [0.0], "width": 1.0, "amplitude": 1.0}}
            }
        }"#,
    );
    let out_dir = dir.path().join("out");
    let out = run_cli(&[
        "gencheck",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr_of(&out));
    let (header, rows) = csv_rows(&out_dir.join("gencheck.csv"));
    assert_eq!(header, vec!["delta", "sup_error"]);
    assert_eq!(rows.len(), 2);
    assert!(
        rows[1][1] < rows[0][1],
        "halving delta should shrink the generator gap: {rows:?}"
    );
}

#[test]
fn results_do_not_depend_on_the_worker_count() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(
        dir.path(),
        &format!(
            r#"{{
                "seed": 21,
                {HEADLINE_REGIME},
                "scaling": {{"N": 50, "delta": 0.2}},
                "dual": {{
                    "t": 1.0,
                    "reps": 500,
                    "start1": {{"block": [0.0, 1.0]}},
                    "start2": {{"block": [2.0, 3.0]}}
                }}
            }}"#
        ),
    );
    let mut payloads = Vec::new();
    for threads in ["1", "2"] {
        let out_dir = dir.path().join(format!("t{threads}"));
        let out = run_cli(&[
            "dual",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out_dir.to_str().unwrap(),
            "--threads",
            threads,
        ]);
        assert!(out.status.success(), "{}", stderr_of(&out));
        payloads.push(std::fs::read(out_dir.join("dual.json")).unwrap());
    }
    assert_eq!(
        payloads[0], payloads[1],
        "identical bytes for 1 and 2 worker threads"
    );
}

#[test]
fn seed_override_changes_hash_and_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(
        dir.path(),
        &format!(
            r#"{{
                "seed": 7,
                {HEADLINE_REGIME},
                "scaling": {{"N": 50, "delta": 0.2}},
                "dual": {{
                    "t": 1.0,
                    "reps": 200,
                    "start1": {{"block": [0.0, 1.0]}},
                    "start2": {{"block": [2.0, 3.0]}}
                }}
            }}"#
        ),
    );
    let dir_a = dir.path().join("a");
    let out = run_cli(&[
        "dual",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir_a.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr_of(&out));
    let dir_b = dir.path().join("b");
    let out = run_cli(&[
        "dual",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir_b.to_str().unwrap(),
        "--seed",
        "8",
    ]);
    assert!(out.status.success(), "{}", stderr_of(&out));
    let a = read_json(&dir_a.join("dual.json"));
    let b = read_json(&dir_b.join("dual.json"));
    assert_eq!(a["seed"], 7);
    assert_eq!(b["seed"], 8);
    assert_ne!(a["config_sha256"], b["config_sha256"]);
}

#[test]
fn error_paths_are_structured() {
    // no --config
    let out = run_cli(&["params"]);
    assert!(!out.status.success());
    assert!(stderr_of(&out).contains("--config is required"));

    let dir = tempfile::tempdir().unwrap();

    // config without the block the command needs
    let cfg = write_cfg(dir.path(), r#"{"seed": 1}"#);
    let out = run_cli(&["params", "--config", cfg.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(stderr_of(&out).contains("needs a `regime` block"));

    // unknown field anywhere in the config
    let cfg = write_cfg(dir.path(), r#"{"seed": 1, "regimes": {}}"#);
    let out = run_cli(&["params", "--config", cfg.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(stderr_of(&out).contains("unknown field"));

    // no seed in the config and none on the command line
    let cfg = write_cfg(
        dir.path(),
        r#"{"regime": {"kind": "one_tail", "d": 1, "u0": 0.5, "mu": 0.0, "a": 1.5, "b": 0.0, "c": 0.0}}"#,
    );
    let out = run_cli(&["params", "--config", cfg.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(stderr_of(&out).contains("no seed"));

    // missing config file
    let out = run_cli(&[
        "params",
        "--config",
        dir.path().join("nope.json").to_str().unwrap(),
    ]);
    assert!(!out.status.success());
    assert!(stderr_of(&out).contains("reading config"));
}
