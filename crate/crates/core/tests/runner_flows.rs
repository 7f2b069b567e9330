//! Config parsing, run manifests and reports through the public runner API.

use polyheat::runner::{parse_config, read_manifest, report, run, Outcome};

const SOLVE: &str = r#"{
    "command": "solve",
    "grid": {"dim": 1, "half_width": 16.0, "points_per_dim": 256},
    "degeneracy": {"kind": "rational", "n": 0.1},
    "solver": {"m": 2, "eps": 1e-3, "dt": 1e-4, "t_final": 0.01, "snapshot_times": [0.005]}
}"#;

#[test]
fn solve_writes_listed_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let m = run(&parse_config(SOLVE).unwrap(), dir.path()).unwrap();
    assert!(m.is_ok());
    let names: Vec<&str> = m.artifacts.iter().map(|a| a.path.as_str()).collect();
    assert_eq!(
        names,
        ["energy.csv", "snapshot_000.phf", "snapshot_001.phf", "interface.json"]
    );
    assert!(m.verify(dir.path()).unwrap());
    let back = read_manifest(dir.path()).unwrap();
    assert_eq!(back.run_id, m.run_id);
    assert_eq!(back.config["solver"]["eps"], 1e-3);

    std::fs::write(dir.path().join("energy.csv"), "tampered").unwrap();
    assert!(!m.verify(dir.path()).unwrap());
}

#[test]
fn missing_blocks_are_named() {
    let err = parse_config(r#"{"command": "sweep", "grid": {"dim": 1, "half_width": 8.0, "points_per_dim": 64}}"#)
        .unwrap_err()
        .to_string();
    assert!(err.contains("degeneracy"), "{err}");
    let err = parse_config(r#"{"command": "kernel"}"#).unwrap_err().to_string();
    assert!(err.contains("kernel"), "{err}");
}

#[test]
fn gaussian_branch_fails_on_log_singularity() {
    // e^{-x²} sits below the clamp floor on most of a box wide enough for decay
    let text = r#"{
        "command": "branch",
        "grid": {"dim": 1, "half_width": 16.0, "points_per_dim": 256},
        "degeneracy": {"kind": "rational"},
        "schedule": {"kind": "eps_of_n", "c": 1.0, "samples": [0.1, 0.03]},
        "sweep": {"t_eval": 0.1, "dt": 1e-5},
        "branch": {}
    }"#;
    let dir = tempfile::tempdir().unwrap();
    let m = run(&parse_config(text).unwrap(), dir.path()).unwrap();
    match &m.outcome {
        Outcome::Failed { reason } => assert!(reason.contains("log-singularity dominates"), "{reason}"),
        Outcome::Ok => panic!("expected failure"),
    }
    let digest = report(&[dir.path().to_path_buf()]);
    assert!(digest.starts_with("0/1 ok\n"), "{digest}");
}

#[test]
fn kernel_run_reports_fit() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = parse_config(r#"{"command": "kernel", "kernel": {"m": 2, "dim": 1}}"#).unwrap();
    let m = run(&cfg, dir.path()).unwrap();
    assert!(m.is_ok());
    let csv = std::fs::read_to_string(dir.path().join("kernel_m2_N1.csv")).unwrap();
    assert!(csv.contains("# fit C="));
    let alpha = m.summary["decay_fit"]["alpha"].as_f64().unwrap();
    assert!((alpha - 4.0 / 3.0).abs() <= 0.05 * 4.0 / 3.0);
}
