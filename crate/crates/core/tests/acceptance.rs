//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Run with `cargo test -p polyheat-core --test acceptance`. The process
//! exits nonzero if any criterion fails.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::path::Path;
use std::time::Instant;

use polyheat::degeneracy::{DegeneracyFunction, PathVariant, RegPath};
use polyheat::gridfield::make_grid;
use polyheat::kernel::{
    bessel_profile_mass, decay_fit, decay_range, phe_solve, profile_at, profile_bessel,
    profile_fourier, uniform_radii, QuadratureSpec,
};
use polyheat::runner::{parse_config, run, RunManifest};
use polyheat::solver::{solve, SolverConfig};
use polyheat::Field;
use serde_json::Value;

const CASES: [(u32, usize); 4] = [(1, 1), (2, 1), (3, 1), (2, 2)];

type Criterion<'a> = (&'static str, Box<dyn Fn() -> Verdict + 'a>);

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn kernel_normalization() -> Verdict {
    let mut worst: f64 = 0.0;
    let mut slowest: f64 = 0.0;
    for (m, dim) in CASES {
        let start = Instant::now();
        let mass = bessel_profile_mass(m, dim, 40.0, QuadratureSpec::default_for(m));
        slowest = slowest.max(start.elapsed().as_secs_f64());
        match mass {
            Ok(v) => worst = worst.max((v - 1.0).abs()),
            Err(e) => return verdict(false, format!("m={m} N={dim}: {e}")),
        }
    }
    verdict(
        worst <= 1e-6 && slowest < 10.0,
        format!("max |∫F - 1| = {worst:.2e}, slowest case {slowest:.2}s"),
    )
}

fn gaussian_reduction() -> Verdict {
    let radii = uniform_radii(10.0, 0.01);
    let mut worst: f64 = 0.0;
    for dim in [1, 2] {
        let p = match profile_bessel(1, dim, &radii, QuadratureSpec::default_for(1)) {
            Ok(p) => p,
            Err(e) => return verdict(false, e.to_string()),
        };
        for (r, v) in radii.iter().zip(&p.values) {
            let exact = (4.0 * PI).powf(-(dim as f64) / 2.0) * (-r * r / 4.0).exp();
            worst = worst.max((v - exact).abs());
        }
    }
    verdict(worst <= 1e-8, format!("max pointwise error {worst:.2e} on r ≤ 10"))
}

fn dual_route() -> Verdict {
    let mut worst: f64 = 0.0;
    for (m, dim) in CASES {
        let points = if dim == 1 { 512 } else { 256 };
        let grid = make_grid(dim, 40.0, points).expect("grid");
        let fourier = match profile_fourier(m, &grid) {
            Ok(f) => f,
            Err(e) => return verdict(false, format!("m={m} N={dim}: {e}")),
        };
        let quad = QuadratureSpec::default_for(m);
        let mut cache: HashMap<u64, f64> = HashMap::new();
        for (i, v) in fourier.values().iter().enumerate() {
            let r = grid.radius(i);
            if r > 10.0 {
                continue;
            }
            let b = match cache.get(&r.to_bits()) {
                Some(b) => *b,
                None => match profile_at(m, dim, r, &quad) {
                    Ok(b) => *cache.entry(r.to_bits()).or_insert(b),
                    Err(e) => return verdict(false, format!("m={m} N={dim}: {e}")),
                },
            };
            worst = worst.max((v - b).abs());
        }
    }
    verdict(worst <= 1e-5, format!("max route difference {worst:.2e} on |y| ≤ 10"))
}

fn decay_exponent() -> Verdict {
    let mut parts = Vec::new();
    let mut pass = true;
    for m in 1..=3u32 {
        let radii = uniform_radii(decay_range(m), 0.02);
        let fit = profile_bessel(m, 1, &radii, QuadratureSpec::default_for(m))
            .and_then(|p| decay_fit(&p));
        match fit {
            Ok(fit) => {
                let target = 2.0 * m as f64 / (2.0 * m as f64 - 1.0);
                let rel = (fit.alpha - target).abs() / target;
                pass &= rel <= 0.05;
                parts.push(format!("m={m} α={:.4} ({:.1}%)", fit.alpha, 100.0 * rel));
            }
            Err(e) => return verdict(false, format!("m={m}: {e}")),
        }
    }
    verdict(pass, parts.join(", "))
}

fn manifest_checks(m: &RunManifest) -> serde_json::Map<String, Value> {
    m.summary
        .get("checks")
        .and_then(Value::as_object)
        .cloned()
        .unwrap_or_default()
}

fn check(m: &RunManifest, name: &str) -> bool {
    manifest_checks(m).get(name).and_then(Value::as_bool) == Some(true)
}

fn run_config(text: &str, dir: &Path) -> Result<RunManifest, String> {
    let cfg = parse_config(text).map_err(|e| e.to_string())?;
    let m = run(&cfg, dir).map_err(|e| e.to_string())?;
    if !m.verify(dir).map_err(|e| e.to_string())? {
        return Err("artifact checksum mismatch".into());
    }
    Ok(m)
}

fn spectrum(root: &Path) -> Verdict {
    let text = r#"{
        "command": "spectrum",
        "grid": {"dim": 1, "half_width": 40.0, "points_per_dim": 512},
        "spectrum": {"m": 2, "max_order": 4, "adjoint_max_order": 8}
    }"#;
    match run_config(text, &root.join("spectrum")) {
        Ok(m) => {
            let pass = m.is_ok()
                && check(&m, "eigen_residual_le_1e-4")
                && check(&m, "adjoint_exact")
                && check(&m, "psi0_dual_normalized");
            verdict(
                pass,
                format!(
                    "max residual {:.2e}, ⟨ψ0, ψ0*⟩ = {:.9}, adjoint exact = {}",
                    m.summary["max_residual"].as_f64().unwrap_or(f64::NAN),
                    m.summary["gram"][0][0].as_f64().unwrap_or(f64::NAN),
                    check(&m, "adjoint_exact")
                ),
            )
        }
        Err(e) => verdict(false, e),
    }
}

fn degeneracy_off() -> Verdict {
    let start = Instant::now();
    let grid = make_grid(1, 24.0, 256).expect("grid");
    let u0 = Field::from_fn(grid, |x| (-x[0] * x[0]).exp());
    let path = RegPath::new(DegeneracyFunction::rational(), 0.0, PathVariant::Simple)
        .expect("path");
    let cfg = SolverConfig::new(2, path, 1e-3, 1e-3, 0.5);
    let result = solve(&u0, cfg).and_then(|traj| {
        let exact = phe_solve(&u0, 2, 0.5)?;
        Ok(traj.final_field().sub(&exact)?.l2_norm() / exact.l2_norm())
    });
    let secs = start.elapsed().as_secs_f64();
    match result {
        Ok(gap) => verdict(
            gap <= 1e-6 && secs < 30.0,
            format!("relative l2 gap {gap:.2e}, {secs:.2}s"),
        ),
        Err(e) => verdict(false, e.to_string()),
    }
}

fn conservation(root: &Path) -> Verdict {
    let text = r#"{
        "command": "solve",
        "grid": {"dim": 1, "half_width": 24.0, "points_per_dim": 384},
        "degeneracy": {"kind": "rational", "n": 0.2, "variant": "full"},
        "solver": {"m": 2, "eps": 1e-3, "dt": 5e-6, "t_final": 0.2}
    }"#;
    match run_config(text, &root.join("conservation")) {
        Ok(m) => verdict(
            m.is_ok() && check(&m, "mass_drift_le_1e-10") && check(&m, "dissipation_residual_le_1e-4"),
            format!(
                "mass drift {:.2e}, dissipation residual {:.2e}",
                m.summary["mass_drift"].as_f64().unwrap_or(f64::NAN),
                m.summary["dissipation_residual"].as_f64().unwrap_or(f64::NAN)
            ),
        ),
        Err(e) => verdict(false, e),
    }
}

/// Shared by the sweep, branching, path and determinism criteria.
const SWEEP: &str = r#"{
    "initial": {"kind": "sech"},
    "grid": {"dim": 1, "half_width": 22.0, "points_per_dim": 256},
    "degeneracy": {"kind": "rational"},
    "schedule": {"kind": "eps_of_n", "c": 1.0, "samples": [0.1, 0.03, 0.01, 0.003]},
    "sweep": {"t_eval": 0.1, "dt": 1e-5, "compare_paths_at": 0.01},
    "branch": {},
    "workers": 4
}"#;

fn with_command(cmd: &str) -> String {
    SWEEP.replacen('{', &format!("{{\n    \"command\": \"{cmd}\","), 1)
}

fn homotopy_convergence(m: &Result<RunManifest, String>, secs: f64) -> Verdict {
    match m {
        Ok(m) => {
            let dir_gaps = m.summary["strictly_decreasing"].as_bool() == Some(true);
            verdict(
                m.is_ok() && dir_gaps && check(m, "all_rows_ok") && secs < 600.0,
                format!(
                    "gaps strictly decreasing = {dir_gaps}, sweep {secs:.1}s, slope {:.3}",
                    m.summary["slope"].as_f64().unwrap_or(f64::NAN)
                ),
            )
        }
        Err(e) => verdict(false, e.clone()),
    }
}

fn branching(root: &Path) -> Verdict {
    match run_config(&with_command("branch"), &root.join("branch")) {
        Ok(m) => {
            let pass = m.is_ok()
                && check(&m, "clamped_fraction_le_0.2")
                && check(&m, "remainder_ratio_decreasing")
                && check(&m, "ablated_ratio_ge_half_phi")
                && check(&m, "slope_in_0.7_1.3");
            let ratios: Vec<String> = m.summary["rows"]
                .as_array()
                .map(|rows| {
                    rows.iter()
                        .filter_map(|r| r["remainder_ratio"].as_f64())
                        .map(|v| format!("{v:.2e}"))
                        .collect()
                })
                .unwrap_or_default();
            verdict(
                pass,
                format!(
                    "clamped {:.3}, remainder ratios [{}], slope {:.3}, sign {}",
                    m.summary["clamped_fraction"].as_f64().unwrap_or(f64::NAN),
                    ratios.join(", "),
                    m.summary["slope"].as_f64().unwrap_or(f64::NAN),
                    m.summary["sign_of_phi"].as_str().unwrap_or("?")
                ),
            )
        }
        Err(e) => verdict(false, e),
    }
}

fn eventual_positivity(root: &Path) -> Verdict {
    let snaps: Vec<String> = (1..=100).map(|i| format!("{}", i as f64 / 100.0)).collect();
    let text = format!(
        r#"{{
        "command": "solve",
        "initial": {{"kind": "gaussian", "center": [2.0], "width": 0.5}},
        "grid": {{"dim": 1, "half_width": 32.0, "points_per_dim": 1024}},
        "degeneracy": {{"kind": "rational", "n": 0.01}},
        "solver": {{"m": 2, "eps": 1e-3, "dt": 1e-4, "t_final": 1.0,
                    "snapshot_times": [{}]}},
        "interface": {{"k_radius": 1.0}}
    }}"#,
        snaps.join(", ")
    );
    let dir = root.join("positivity");
    let m = match run_config(&text, &dir) {
        Ok(m) => m,
        Err(e) => return verdict(false, e),
    };
    let reports: Vec<Value> = std::fs::read_to_string(dir.join("interface.json"))
        .ok()
        .and_then(|t| serde_json::from_str(&t).ok())
        .unwrap_or_default();
    let early_min = reports
        .iter()
        .filter(|r| r["t"].as_f64().is_some_and(|t| t <= 0.05))
        .filter_map(|r| r["min_on_k"].as_f64())
        .fold(f64::INFINITY, f64::min);
    let t_pos = m.summary["eventual_positivity_time"].as_f64();
    let positive_after = t_pos.is_some_and(|tp| {
        reports
            .iter()
            .filter(|r| r["t"].as_f64().is_some_and(|t| t >= tp))
            .all(|r| r["positivity_on_k"].as_bool() == Some(true))
    });
    verdict(
        m.is_ok() && early_min < 0.0 && positive_after,
        format!(
            "min on K for t ≤ 0.05: {early_min:.3e}; positive on K from T = {}",
            t_pos.map_or("none".to_string(), |t| format!("{t}"))
        ),
    )
}

fn path_dependence(m: &Result<RunManifest, String>) -> Verdict {
    match m {
        Ok(m) => {
            let cmp = &m.summary["path_comparison"];
            let gap = cmp["gap"].as_f64();
            let floor = cmp["floor"].as_f64();
            let reported = gap.is_some_and(f64::is_finite) && floor.is_some_and(f64::is_finite);
            verdict(
                m.is_ok() && reported,
                format!(
                    "n = 0.01: full vs simple gap {:.3e}, floor {:.3e}, within 10x floor = {}",
                    gap.unwrap_or(f64::NAN),
                    floor.unwrap_or(f64::NAN),
                    cmp["within_floor"].as_bool().unwrap_or(false)
                ),
            )
        }
        Err(e) => verdict(false, e.clone()),
    }
}

fn determinism(root: &Path, first: &Result<RunManifest, String>) -> Verdict {
    let second = run_config(&with_command("sweep"), &root.join("sweep_again"));
    let (Ok(a), Ok(b)) = (first, &second) else {
        return verdict(false, "a sweep run failed".into());
    };
    let csvs = |m: &RunManifest| -> Vec<(String, String)> {
        m.artifacts
            .iter()
            .filter(|x| x.path.ends_with(".csv"))
            .map(|x| (x.path.clone(), x.sha256.clone()))
            .collect()
    };
    let (ca, cb) = (csvs(a), csvs(b));
    let same_files = !ca.is_empty() && ca == cb;
    let same_bytes = ca.iter().all(|(p, _)| {
        std::fs::read(root.join("sweep").join(p)).ok()
            == std::fs::read(root.join("sweep_again").join(p)).ok()
    });
    verdict(
        same_files && same_bytes,
        format!("{} CSV files compared byte for byte", ca.len()),
    )
}

fn main() {
    let tmp = tempfile::tempdir().expect("temporary directory");
    let root = tmp.path();

    let sweep_start = Instant::now();
    let sweep = run_config(&with_command("sweep"), &root.join("sweep"));
    let sweep_secs = sweep_start.elapsed().as_secs_f64();

    let criteria: Vec<Criterion> = vec![
        ("kernel normalization", Box::new(kernel_normalization)),
        ("gaussian reduction", Box::new(gaussian_reduction)),
        ("dual-route kernel agreement", Box::new(dual_route)),
        ("decay exponent", Box::new(decay_exponent)),
        ("spectrum", Box::new(|| spectrum(root))),
        ("degeneracy-off equivalence", Box::new(degeneracy_off)),
        ("conservation and dissipation", Box::new(|| conservation(root))),
        ("homotopy convergence", Box::new(|| homotopy_convergence(&sweep, sweep_secs))),
        ("branching rate", Box::new(|| branching(root))),
        ("oscillation and eventual positivity", Box::new(|| eventual_positivity(root))),
        ("path-dependence report", Box::new(|| path_dependence(&sweep))),
        ("determinism", Box::new(|| determinism(root, &sweep))),
    ];

    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let v = f();
        let tag = if v.pass { "PASS" } else { "FAIL" };
        if !v.pass {
            failed += 1;
        }
        println!(
            "{tag} {:>2} {name}: {} [{:.1}s]",
            i + 1,
            v.detail,
            start.elapsed().as_secs_f64()
        );
    }
    println!("{}/{} criteria pass", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
