//! Exit-code and output-directory contract of the `polyheat` binary.

use std::path::Path;
use std::process::Command;

fn polyheat() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_polyheat"));
    c.env_remove("POLYHEAT_OUT");
    c
}

fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn kernel_run_succeeds_and_reports() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "k.json", r#"{"kernel": {"m": 1, "dim": 1}}"#);
    let out = dir.path().join("run");
    let status = polyheat()
        .args(["kernel", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["outcome"]["status"], "ok");
    assert_eq!(manifest["command"], "kernel");

    let report = polyheat().arg("report").arg(&out).output().unwrap();
    let text = String::from_utf8(report.stdout).unwrap();
    assert!(text.starts_with("1/1 ok"), "{text}");
}

#[test]
fn failed_outcome_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    // a box too small for the datum trips the decay check inside the solver
    let cfg = write(
        dir.path(),
        "s.json",
        r#"{"grid": {"dim": 1, "half_width": 3.0, "points_per_dim": 64},
            "degeneracy": {"kind": "rational", "n": 0.1},
            "solver": {"m": 2, "eps": 1e-3, "dt": 1e-4, "t_final": 0.01}}"#,
    );
    let out = dir.path().join("env_out");
    let status = polyheat()
        .args(["solve", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path().join("ignored"))
        .env("POLYHEAT_OUT", &out)
        .status()
        .unwrap();
    assert!(!status.success());
    let manifest = std::fs::read_to_string(out.join("manifest.json")).unwrap();
    assert!(manifest.contains("\"failed\""));
    assert!(!dir.path().join("ignored").exists());
}

#[test]
fn config_errors_name_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "bad.json",
        r#"{"grid": {"dim": 1, "half_width": 16.0, "points_per_dim": 256},
            "degeneracy": {"kind": "rational", "n": 0.1},
            "solver": {"m": 2, "eps": 0, "dt": 1e-4, "t_final": 0.01}}"#,
    );
    let out = polyheat()
        .args(["solve", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path().join("run"))
        .output()
        .unwrap();
    assert!(!out.status.success());
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("solver.eps") && err.contains("eps must lie in (0, 1]"), "{err}");
}
