//! Run configuration, dispatch, artifacts and manifests.
//!
//! A run reads one strict JSON config, executes a single command, writes its
//! artifacts through one [`RunWriter`] and finishes with `manifest.json`.
//! Module errors become a failed outcome rather than a missing manifest.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::degeneracy::{DegeneracyFunction, FKind, PathVariant, RegPath};
use crate::error::{Error, Result};
use crate::gridfield::{snapshot, Field, GridSpec, WeightSpec};
use crate::homotopy::{
    branching_residual, correction_phi, path_comparison, perturbation_smallness_report,
    schedule_eval, select_sign, sweep, PhTrajectory, Schedule, ScheduleKind, SweepParams,
    SweepSummary,
};
use crate::kernel::{self, QuadratureSpec};
use crate::solver::{self, eventual_positivity_time, interface_report, SolverConfig};
use crate::spectral_theory::{self, poly::MultiIndex};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Kernel,
    Spectrum,
    Solve,
    Sweep,
    Branch,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Kernel => "kernel",
            Command::Spectrum => "spectrum",
            Command::Solve => "solve",
            Command::Sweep => "sweep",
            Command::Branch => "branch",
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridBlock {
    pub dim: usize,
    pub half_width: f64,
    pub points_per_dim: usize,
}

fn one() -> f64 {
    1.0
}

/// Initial datum. `random_bumps` draws centers and signs from `seed`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialBlock {
    /// `A e^{-|x - x0|²/w²}`
    Gaussian {
        #[serde(default = "one")]
        amplitude: f64,
        #[serde(default)]
        center: Vec<f64>,
        #[serde(default = "one")]
        width: f64,
    },
    /// `A sech(|x - x0|/w)`; its exponential tail outlasts the kernel's.
    Sech {
        #[serde(default = "one")]
        amplitude: f64,
        #[serde(default)]
        center: Vec<f64>,
        #[serde(default = "one")]
        width: f64,
    },
    RandomBumps {
        count: usize,
        #[serde(default = "one")]
        width: f64,
        /// Centers are drawn uniformly from `[-spread, spread]^N`.
        spread: f64,
    },
}

impl Default for InitialBlock {
    fn default() -> Self {
        InitialBlock::Gaussian {
            amplitude: 1.0,
            center: Vec::new(),
            width: 1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KindName {
    Tanh,
    Rational,
    ExpSaturating,
    Power,
    Tabulated,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FParams {
    pub kappa: Option<f64>,
    pub t_max: Option<f64>,
    pub knots: Option<Vec<f64>>,
    pub values: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DegeneracyBlock {
    pub kind: KindName,
    #[serde(default)]
    pub params: FParams,
    /// Required by `solve`; sweeps take `n` from the schedule.
    pub n: Option<f64>,
    #[serde(default = "default_variant")]
    pub variant: PathVariant,
}

fn default_variant() -> PathVariant {
    PathVariant::Simple
}

fn default_true() -> bool {
    true
}

fn default_energy_tol() -> f64 {
    1e-8
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverBlock {
    pub m: u32,
    pub eps: f64,
    pub dt: f64,
    pub t_final: f64,
    pub stabilization: Option<f64>,
    #[serde(default = "default_true")]
    pub dealias: bool,
    #[serde(default = "default_energy_tol")]
    pub energy_tol: f64,
    #[serde(default)]
    pub snapshot_times: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleBlock {
    pub kind: ScheduleKind,
    pub c: f64,
    /// `n` values for `eps_of_n`, `ε` values for `n_of_eps`.
    pub samples: Vec<f64>,
}

fn default_m() -> u32 {
    2
}

fn default_weak_samples() -> usize {
    50
}

fn default_weak_modes() -> usize {
    4
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepBlock {
    #[serde(default = "default_m")]
    pub m: u32,
    pub t_eval: f64,
    pub dt: f64,
    /// Adds an `n = 0` row (only for `eps_of_n`).
    #[serde(default)]
    pub include_zero: bool,
    #[serde(default = "default_weak_samples")]
    pub weak_samples: usize,
    #[serde(default = "default_weak_modes")]
    pub weak_modes: usize,
    /// Runs both path variants at this `n` and reports their gap.
    pub compare_paths_at: Option<f64>,
}

fn default_time_nodes() -> usize {
    1000
}

fn default_clamp() -> f64 {
    1e-8
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BranchBlock {
    #[serde(default = "default_time_nodes")]
    pub time_nodes: usize,
    /// `η = clamp_relative · sup|u0|`.
    #[serde(default = "default_clamp")]
    pub clamp_relative: f64,
    #[serde(default = "default_thresholds")]
    pub thresholds: [f64; 2],
}

fn default_thresholds() -> [f64; 2] {
    [0.1, 0.5]
}

fn default_kernel_h() -> f64 {
    0.02
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelBlock {
    pub m: u32,
    pub dim: usize,
    pub r_max: Option<f64>,
    #[serde(default = "default_kernel_h")]
    pub h: f64,
    #[serde(default = "default_true")]
    pub fit: bool,
    pub s_max: Option<f64>,
    pub nodes: Option<usize>,
}

fn default_max_order() -> u32 {
    4
}

fn default_adjoint_order() -> u32 {
    8
}

fn default_weight_a() -> f64 {
    0.1
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumBlock {
    pub m: u32,
    #[serde(default = "default_max_order")]
    pub max_order: u32,
    #[serde(default = "default_adjoint_order")]
    pub adjoint_max_order: u32,
    #[serde(default = "default_weight_a")]
    pub weight_a: f64,
}

fn default_threshold_rel() -> f64 {
    1e-8
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InterfaceBlock {
    #[serde(default = "one")]
    pub k_radius: f64,
    #[serde(default = "default_threshold_rel")]
    pub threshold_relative: f64,
}

fn default_workers() -> usize {
    1
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Option<Command>,
    pub grid: Option<GridBlock>,
    #[serde(default)]
    pub initial: InitialBlock,
    pub degeneracy: Option<DegeneracyBlock>,
    pub solver: Option<SolverBlock>,
    pub schedule: Option<ScheduleBlock>,
    pub sweep: Option<SweepBlock>,
    pub branch: Option<BranchBlock>,
    pub kernel: Option<KernelBlock>,
    pub spectrum: Option<SpectrumBlock>,
    pub interface: Option<InterfaceBlock>,
    pub output: Option<String>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_workers")]
    pub workers: usize,
}

/// Parses and validates a config; errors carry the offending field path.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        Error::config(path, e.into_inner().to_string())
    })?;
    validate(&cfg)?;
    Ok(cfg)
}

fn require<'a, T>(block: &'a Option<T>, name: &str, cmd: Command) -> Result<&'a T> {
    block
        .as_ref()
        .ok_or_else(|| Error::config(name, format!("required by the {} command", cmd.name())))
}

fn positive(path: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::config(path, format!("must be > 0, got {v}")))
    }
}

/// Checks every block the chosen command needs and each block present.
pub fn validate(cfg: &RunConfig) -> Result<()> {
    if let Some(g) = &cfg.grid {
        GridSpec::new(g.dim, g.half_width, g.points_per_dim)
            .map_err(|e| Error::config("grid", e.to_string()))?;
    }
    if cfg.workers == 0 {
        return Err(Error::config("workers", "must be ≥ 1"));
    }
    if let Some(d) = &cfg.degeneracy {
        f_from_block(d)?;
        if let Some(n) = d.n {
            if !(n >= 0.0 && n.is_finite()) {
                return Err(Error::config("degeneracy.n", format!("must be ≥ 0, got {n}")));
            }
        }
    }
    if let Some(s) = &cfg.solver {
        if !(s.eps > 0.0 && s.eps <= 1.0) {
            return Err(Error::config("solver.eps", "eps must lie in (0, 1]"));
        }
        if !(2..=3).contains(&s.m) {
            return Err(Error::config("solver.m", format!("must be 2 or 3, got {}", s.m)));
        }
        positive("solver.dt", s.dt)?;
        positive("solver.t_final", s.t_final)?;
        for (i, &t) in s.snapshot_times.iter().enumerate() {
            if !(t > 0.0 && t <= s.t_final) {
                return Err(Error::config(
                    format!("solver.snapshot_times[{i}]"),
                    format!("must lie in (0, t_final], got {t}"),
                ));
            }
        }
    }
    if let Some(s) = &cfg.schedule {
        positive("schedule.c", s.c)?;
        if s.samples.is_empty() {
            return Err(Error::config("schedule.samples", "must not be empty"));
        }
        for (i, &v) in s.samples.iter().enumerate() {
            positive(&format!("schedule.samples[{i}]"), v)?;
            if s.kind == ScheduleKind::NOfEps && v > 1.0 {
                return Err(Error::config(
                    format!("schedule.samples[{i}]"),
                    "eps must lie in (0, 1]",
                ));
            }
        }
    }
    if let Some(s) = &cfg.sweep {
        positive("sweep.t_eval", s.t_eval)?;
        positive("sweep.dt", s.dt)?;
        if !(2..=3).contains(&s.m) {
            return Err(Error::config("sweep.m", format!("must be 2 or 3, got {}", s.m)));
        }
    }
    if let Some(b) = &cfg.branch {
        positive("branch.clamp_relative", b.clamp_relative)?;
        if b.time_nodes == 0 {
            return Err(Error::config("branch.time_nodes", "must be ≥ 1"));
        }
        positive("branch.thresholds[0]", b.thresholds[0])?;
        positive("branch.thresholds[1]", b.thresholds[1])?;
    }
    if let Some(k) = &cfg.kernel {
        if k.m < 1 {
            return Err(Error::config("kernel.m", "must be ≥ 1"));
        }
        if k.dim != 1 && k.dim != 2 {
            return Err(Error::config("kernel.dim", "must be 1 or 2"));
        }
        positive("kernel.h", k.h)?;
    }
    if let Some(s) = &cfg.spectrum {
        if s.max_order > 4 {
            return Err(Error::config("spectrum.max_order", "must be ≤ 4"));
        }
        if s.adjoint_max_order > 8 {
            return Err(Error::config("spectrum.adjoint_max_order", "must be ≤ 8"));
        }
    }
    if let Some(cmd) = cfg.command {
        match cmd {
            Command::Kernel => {
                require(&cfg.kernel, "kernel", cmd)?;
            }
            Command::Spectrum => {
                require(&cfg.spectrum, "spectrum", cmd)?;
                require(&cfg.grid, "grid", cmd)?;
            }
            Command::Solve => {
                require(&cfg.grid, "grid", cmd)?;
                require(&cfg.solver, "solver", cmd)?;
                let d = require(&cfg.degeneracy, "degeneracy", cmd)?;
                if d.n.is_none() {
                    return Err(Error::config("degeneracy.n", "required by the solve command"));
                }
            }
            Command::Sweep | Command::Branch => {
                require(&cfg.grid, "grid", cmd)?;
                require(&cfg.degeneracy, "degeneracy", cmd)?;
                require(&cfg.schedule, "schedule", cmd)?;
                require(&cfg.sweep, "sweep", cmd)?;
                if cmd == Command::Branch {
                    require(&cfg.branch, "branch", cmd)?;
                }
            }
        }
    }
    Ok(())
}

fn f_from_block(d: &DegeneracyBlock) -> Result<DegeneracyFunction> {
    let p = &d.params;
    let kind = match d.kind {
        KindName::Tanh => FKind::Tanh,
        KindName::Rational => FKind::Rational,
        KindName::ExpSaturating => FKind::ExpSaturating,
        KindName::Power => FKind::Power {
            kappa: p
                .kappa
                .ok_or_else(|| Error::config("degeneracy.params.kappa", "required for power"))?,
            t_max: p
                .t_max
                .ok_or_else(|| Error::config("degeneracy.params.t_max", "required for power"))?,
        },
        KindName::Tabulated => FKind::Tabulated {
            knots: p
                .knots
                .clone()
                .ok_or_else(|| Error::config("degeneracy.params.knots", "required for tabulated"))?,
            values: p.values.clone().ok_or_else(|| {
                Error::config("degeneracy.params.values", "required for tabulated")
            })?,
        },
    };
    DegeneracyFunction::new(kind).map_err(|e| Error::config("degeneracy", e.to_string()))
}

fn grid_of(cfg: &RunConfig) -> Result<GridSpec> {
    let g = cfg
        .grid
        .as_ref()
        .ok_or_else(|| Error::config("grid", "missing"))?;
    GridSpec::new(g.dim, g.half_width, g.points_per_dim)
}

fn center_of(center: &[f64]) -> [f64; 2] {
    [
        center.first().copied().unwrap_or(0.0),
        center.get(1).copied().unwrap_or(0.0),
    ]
}

fn dist2(x: &[f64], c: &[f64; 2]) -> f64 {
    x.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// Samples the configured initial datum.
pub fn initial_field(block: &InitialBlock, grid: GridSpec, seed: u64) -> Result<Field> {
    match block {
        InitialBlock::Gaussian {
            amplitude,
            center,
            width,
        } => {
            positive("initial.width", *width)?;
            let c = center_of(center);
            Ok(Field::from_fn(grid, |x| {
                amplitude * (-dist2(x, &c) / (width * width)).exp()
            }))
        }
        InitialBlock::Sech {
            amplitude,
            center,
            width,
        } => {
            positive("initial.width", *width)?;
            let c = center_of(center);
            Ok(Field::from_fn(grid, |x| {
                amplitude / (dist2(x, &c).sqrt() / width).cosh()
            }))
        }
        InitialBlock::RandomBumps {
            count,
            width,
            spread,
        } => {
            positive("initial.width", *width)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let bumps: Vec<([f64; 2], f64)> = (0..*count)
                .map(|_| {
                    let c = [rng.gen_range(-spread..=*spread), rng.gen_range(-spread..=*spread)];
                    let a = if rng.gen_bool(0.5) { 1.0 } else { -1.0 } * rng.gen_range(0.5..1.0);
                    (c, a)
                })
                .collect();
            Ok(Field::from_fn(grid, |x| {
                bumps
                    .iter()
                    .map(|(c, a)| {
                        let r2 = dist2(x, c);
                        a * (-r2 / (width * width)).exp()
                    })
                    .sum()
            }))
        }
    }
}

/// One emitted file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Artifact {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

/// The single writer for a run directory; records every file it writes.
pub struct RunWriter {
    dir: PathBuf,
    artifacts: Vec<Artifact>,
}

impl RunWriter {
    pub fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            artifacts: Vec::new(),
        })
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        fs::write(self.dir.join(name), bytes)?;
        self.artifacts.push(Artifact {
            path: name.to_string(),
            sha256: sha256_hex(bytes),
            bytes: bytes.len() as u64,
        });
        Ok(())
    }

    pub fn write_json(&mut self, name: &str, value: &impl Serialize) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    pub fn artifacts(&self) -> &[Artifact] {
        &self.artifacts
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Outcome {
    Ok,
    Failed { reason: String },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub run_id: String,
    pub command: String,
    pub tool_version: String,
    pub config: Value,
    pub artifacts: Vec<Artifact>,
    pub elapsed_seconds: f64,
    pub outcome: Outcome,
    /// Command-specific digest, including named invariant checks.
    pub summary: Value,
}

impl RunManifest {
    pub fn is_ok(&self) -> bool {
        self.outcome == Outcome::Ok
    }

    /// Re-reads every artifact and compares checksums.
    pub fn verify(&self, dir: &Path) -> Result<bool> {
        for a in &self.artifacts {
            let bytes = fs::read(dir.join(&a.path))?;
            if sha256_hex(&bytes) != a.sha256 {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// Executes `cfg` into `out_dir`. Module failures are recorded in the
/// manifest outcome; only I/O on the manifest itself is an `Err`.
pub fn run(cfg: &RunConfig, out_dir: &Path) -> Result<RunManifest> {
    let command = cfg
        .command
        .ok_or_else(|| Error::config("command", "no command given"))?;
    validate(cfg)?;
    let config = serde_json::to_value(cfg)?;
    let run_id = sha256_hex(serde_json::to_string(&config)?.as_bytes())[..12].to_string();
    let mut writer = RunWriter::new(out_dir)?;
    let start = Instant::now();
    let result = match command {
        Command::Kernel => run_kernel(cfg, &mut writer),
        Command::Spectrum => run_spectrum(cfg, &mut writer),
        Command::Solve => run_solve(cfg, &mut writer),
        Command::Sweep => run_sweep(cfg, &mut writer),
        Command::Branch => run_branch(cfg, &mut writer),
    };
    let (outcome, summary) = match result {
        Ok(summary) => (Outcome::Ok, summary),
        Err(e) => (
            Outcome::Failed {
                reason: e.to_string(),
            },
            Value::Null,
        ),
    };
    let manifest = RunManifest {
        run_id,
        command: command.name().to_string(),
        tool_version: TOOL_VERSION.to_string(),
        config,
        artifacts: writer.artifacts().to_vec(),
        elapsed_seconds: start.elapsed().as_secs_f64(),
        outcome,
        summary,
    };
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    fs::write(out_dir.join(MANIFEST_NAME), text)?;
    Ok(manifest)
}

fn checks_value(checks: &BTreeMap<&str, bool>) -> Value {
    json!(checks)
}

fn run_kernel(cfg: &RunConfig, w: &mut RunWriter) -> Result<Value> {
    let k = cfg.kernel.as_ref().expect("validated");
    let mut quad = QuadratureSpec::default_for(k.m);
    if let Some(s) = k.s_max {
        quad.s_max = s;
    }
    if let Some(n) = k.nodes {
        quad.nodes = n;
    }
    let r_max = k.r_max.unwrap_or_else(|| kernel::decay_range(k.m));
    let radii = kernel::uniform_radii(r_max, k.h);
    let mut profile = kernel::profile_bessel(k.m, k.dim, &radii, quad)?;
    if k.fit {
        profile.decay_fit = Some(kernel::decay_fit(&profile)?);
    }
    let mass = kernel::bessel_profile_mass(k.m, k.dim, r_max.min(40.0), quad)?;
    w.write(
        &format!("kernel_m{}_N{}.csv", k.m, k.dim),
        profile.to_csv().as_bytes(),
    )?;
    let target = 2.0 * k.m as f64 / (2.0 * k.m as f64 - 1.0);
    let mut checks = BTreeMap::new();
    checks.insert("mass_within_1e-6", (mass - 1.0).abs() <= 1e-6);
    if let Some(fit) = &profile.decay_fit {
        checks.insert("alpha_within_5pct", ((fit.alpha - target) / target).abs() <= 0.05);
    }
    Ok(json!({
        "m": k.m,
        "dim": k.dim,
        "mass": mass,
        "sign_changes": profile.sign_changes(),
        "decay_fit": profile.decay_fit,
        "alpha_target": target,
        "checks": checks_value(&checks),
    }))
}

fn run_spectrum(cfg: &RunConfig, w: &mut RunWriter) -> Result<Value> {
    let s = cfg.spectrum.as_ref().expect("validated");
    let grid = grid_of(cfg)?;
    let mut residuals = Vec::new();
    for beta in MultiIndex::up_to_order(grid.dim(), s.max_order) {
        let psi = spectral_theory::eigenfunction(&beta, s.m, &grid)?;
        let lpsi = spectral_theory::apply_l(&psi, s.m)?;
        let lam = spectral_theory::eigenvalue(&beta, s.m);
        let res = lpsi.sub(&psi.scale(lam))?.l2_norm() / psi.l2_norm();
        residuals.push(json!({"beta": beta.entries(), "lambda": lam, "residual": res}));
    }
    let mut adjoint = Vec::new();
    let mut exact = true;
    for beta in MultiIndex::up_to_order(grid.dim(), s.adjoint_max_order) {
        let p = spectral_theory::adjoint_eigenpolynomial(&beta, s.m)?;
        let lp = spectral_theory::apply_l_star(&p, s.m)?;
        let lam = spectral_theory::eigenvalue_exact(&beta, s.m);
        exact &= lp == p.mul_rational(lam);
        adjoint.push(json!({"beta": beta.entries(), "terms": p.to_records()}));
    }
    w.write_json("adjoint_polynomials.json", &adjoint)?;
    let weight = WeightSpec::for_order(s.weight_a, s.m, 1)?;
    let gram = spectral_theory::biorthogonality_matrix(s.max_order.min(3), s.m, &grid, &weight)?;
    let max_res = residuals
        .iter()
        .map(|r| r["residual"].as_f64().unwrap_or(f64::INFINITY))
        .fold(0.0, f64::max);
    let mut checks = BTreeMap::new();
    checks.insert("eigen_residual_le_1e-4", max_res <= 1e-4);
    checks.insert("adjoint_exact", exact);
    checks.insert("psi0_dual_normalized", (gram.entries[0][0] - 1.0).abs() <= 1e-6);
    let summary = json!({
        "residuals": residuals,
        "max_residual": max_res,
        "gram": gram.entries,
        "gram_max_off_diagonal": gram.max_off_diagonal(),
        "checks": checks_value(&checks),
    });
    w.write_json("spectrum.json", &summary)?;
    Ok(summary)
}

fn reg_path(cfg: &RunConfig, n: f64) -> Result<RegPath> {
    let d = cfg.degeneracy.as_ref().expect("validated");
    RegPath::new(f_from_block(d)?, n, d.variant)
}

fn run_solve(cfg: &RunConfig, w: &mut RunWriter) -> Result<Value> {
    let grid = grid_of(cfg)?;
    let s = cfg.solver.as_ref().expect("validated");
    let n = cfg
        .degeneracy
        .as_ref()
        .and_then(|d| d.n)
        .expect("validated");
    let u0 = initial_field(&cfg.initial, grid, cfg.seed)?;
    let mut sc = SolverConfig::new(s.m, reg_path(cfg, n)?, s.eps, s.dt, s.t_final);
    sc.stabilization = s.stabilization;
    sc.dealias = s.dealias;
    sc.energy_tol = s.energy_tol;
    sc.snapshot_times = s.snapshot_times.clone();
    let traj = solver::solve(&u0, sc)?;
    w.write("energy.csv", solver::energy_csv(&traj.energy).as_bytes())?;
    let iface = cfg.interface.clone().unwrap_or(InterfaceBlock {
        k_radius: 1.0,
        threshold_relative: 1e-8,
    });
    let threshold = iface.threshold_relative * u0.max_abs().max(f64::MIN_POSITIVE);
    let mut reports = Vec::new();
    for (k, snap) in traj.snapshots.iter().enumerate() {
        w.write(&format!("snapshot_{k:03}.phf"), &snapshot::encode_scalar(snap))?;
        reports.push(interface_report(snap, threshold, iface.k_radius)?);
    }
    w.write_json("interface.json", &reports)?;
    let mut checks = BTreeMap::new();
    checks.insert("mass_drift_le_1e-10", traj.max_mass_drift() <= 1e-10);
    checks.insert(
        "energy_non_increasing",
        traj.max_energy_increase() <= s.energy_tol,
    );
    checks.insert(
        "dissipation_residual_le_1e-4",
        traj.max_dissipation_residual() <= 1e-4,
    );
    Ok(json!({
        "trajectory_id": traj.run_id,
        "steps": traj.energy.len() - 1,
        "halvings": traj.halvings,
        "mass_drift": traj.max_mass_drift(),
        "dissipation_residual": traj.max_dissipation_residual(),
        "eventual_positivity_time": eventual_positivity_time(&reports),
        "checks": checks_value(&checks),
    }))
}

fn sweep_setup(cfg: &RunConfig) -> Result<(Field, Schedule, Vec<f64>, SweepParams)> {
    let grid = grid_of(cfg)?;
    let d = cfg.degeneracy.as_ref().expect("validated");
    let sb = cfg.schedule.as_ref().expect("validated");
    let sw = cfg.sweep.as_ref().expect("validated");
    let schedule = Schedule::new(sb.kind, sb.c, f_from_block(d)?)?;
    schedule.eval_checked(&sb.samples)?;
    let mut params_list = sb.samples.clone();
    if sw.include_zero && sb.kind == ScheduleKind::EpsOfN {
        params_list.push(0.0);
    }
    let mut params = SweepParams::new(sw.m, sw.dt, sw.t_eval);
    params.variant = d.variant;
    params.weak_samples = sw.weak_samples;
    params.weak_modes = sw.weak_modes;
    params.workers = cfg.workers;
    let u0 = initial_field(&cfg.initial, grid, cfg.seed)?;
    Ok((u0, schedule, params_list, params))
}

fn run_sweep(cfg: &RunConfig, w: &mut RunWriter) -> Result<Value> {
    let (u0, schedule, list, params) = sweep_setup(cfg)?;
    let out = sweep(&u0, &schedule, &list, &params, None)?;
    w.write("table.csv", out.table.to_csv().as_bytes())?;
    w.write("plot.csv", out.table.plot_data().as_bytes())?;
    let summary = SweepSummary::new(&out.table, &schedule, None);
    w.write_json("summary.json", &summary)?;
    let mut value = serde_json::to_value(&summary)?;
    if let Some(n) = cfg.sweep.as_ref().and_then(|s| s.compare_paths_at) {
        let cmp = path_comparison(&u0, &schedule, n, &params)?;
        w.write_json("path_comparison.json", &cmp)?;
        value["path_comparison"] = serde_json::to_value(&cmp)?;
    }
    let mut checks = BTreeMap::new();
    checks.insert("gaps_strictly_decreasing", summary.strictly_decreasing);
    checks.insert(
        "all_rows_ok",
        out.table.rows.iter().all(|r| r.status == crate::homotopy::RowStatus::Ok),
    );
    value["checks"] = checks_value(&checks);
    Ok(value)
}

fn run_branch(cfg: &RunConfig, w: &mut RunWriter) -> Result<Value> {
    let (u0, schedule, list, params) = sweep_setup(cfg)?;
    let b = cfg.branch.as_ref().expect("validated");
    let ph = PhTrajectory::new(&u0, params.m)?;
    let eta = b.clamp_relative * u0.max_abs();
    let raw = correction_phi(&ph, &schedule.f, params.t_eval, b.time_nodes, eta)?;
    let refined = correction_phi(&ph, &schedule.f, params.t_eval, 2 * b.time_nodes, eta)?;
    let quad_change = refined.field.sub(&raw.field)?.l2_norm() / raw.field.l2_norm();

    let mut out = sweep(&u0, &schedule, &list, &params, None)?;
    let positive_runs: Vec<(f64, Field)> =
        out.finals.iter().filter(|(n, _)| *n > 0.0).cloned().collect();
    let fit = select_sign(&raw, &out.u_ph, &positive_runs)?;
    let phi = raw.with_sign(fit.sign);
    let phi_norm = phi.field.l2_norm();

    let mut csv = String::from("n,eps,l2_gap,linear_gap,remainder_ratio,ablated_ratio\n");
    let mut rows = Vec::new();
    for row in out.table.rows.iter_mut() {
        let Some((_, u_n)) = out.finals.iter().find(|(n, _)| *n == row.n) else {
            continue;
        };
        let r = branching_residual(u_n, &out.u_ph, &phi.field, row.n)?;
        let ablated = branching_residual(u_n, &out.u_ph, &crate::Field::zeros(*u0.grid()), row.n)?;
        row.correction_gap = Some(r.linear_gap);
        let ratio = r.remainder_ratio.unwrap_or(f64::NAN);
        let abl = ablated.remainder_ratio.unwrap_or(f64::NAN);
        csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            row.n, row.eps, row.l2_gap, r.linear_gap, ratio, abl
        ));
        let smallness = if row.n > 0.0 {
            Some(perturbation_smallness_report(
                &[u0.clone(), u_n.clone()],
                &schedule.f,
                row.n,
                row.eps,
                b.thresholds[0],
                b.thresholds[1],
            )?)
        } else {
            None
        };
        rows.push(json!({
            "n": row.n,
            "eps": row.eps,
            "linear_gap": r.linear_gap,
            "remainder_ratio": r.remainder_ratio,
            "ablated_ratio": ablated.remainder_ratio,
            "smallness": smallness,
        }));
    }
    w.write("branch.csv", csv.as_bytes())?;
    w.write("table.csv", out.table.to_csv().as_bytes())?;
    w.write("plot.csv", out.table.plot_data().as_bytes())?;
    w.write("phi.phf", &snapshot::encode_scalar(&phi.field))?;

    let ratios: Vec<f64> = rows
        .iter()
        .filter(|r| r["n"].as_f64().unwrap_or(0.0) > 0.0)
        .filter_map(|r| r["remainder_ratio"].as_f64())
        .collect();
    let ablated: Vec<f64> = rows
        .iter()
        .filter(|r| r["n"].as_f64().unwrap_or(0.0) > 0.0)
        .filter_map(|r| r["ablated_ratio"].as_f64())
        .collect();
    let summary = SweepSummary::new(&out.table, &schedule, Some(&phi));
    let slope = summary.slope.unwrap_or(f64::NAN);
    let mut checks = BTreeMap::new();
    checks.insert("clamped_fraction_le_0.2", phi.clamped_fraction <= 0.2);
    checks.insert(
        "remainder_ratio_decreasing",
        ratios.len() >= 2 && ratios.windows(2).all(|w| w[1] < w[0]),
    );
    checks.insert(
        "ablated_ratio_ge_half_phi",
        !ablated.is_empty() && ablated.iter().all(|&a| a >= 0.5 * phi_norm),
    );
    checks.insert("slope_in_0.7_1.3", (0.7..=1.3).contains(&slope));
    checks.insert("quadrature_change_le_1e-4", quad_change <= 1e-4);
    let mut value = serde_json::to_value(&summary)?;
    value["sign_fit"] = serde_json::to_value(&fit)?;
    value["analytic_sign"] = json!(if (params.m - 1) % 2 == 0 { "+" } else { "-" });
    value["phi_l2"] = json!(phi_norm);
    value["quadrature_doubling_change"] = json!(quad_change);
    value["rows"] = json!(rows);
    value["checks"] = checks_value(&checks);
    w.write_json("summary.json", &value)?;
    Ok(value)
}

/// Reads a manifest from a file or a run directory.
pub fn read_manifest(path: &Path) -> Result<RunManifest> {
    let file = if path.is_dir() {
        path.join(MANIFEST_NAME)
    } else {
        path.to_path_buf()
    };
    let text = fs::read_to_string(&file)?;
    Ok(serde_json::from_str(&text)?)
}

/// Human-readable digest over several runs.
pub fn report(paths: &[PathBuf]) -> String {
    if paths.is_empty() {
        return "no runs\n".to_string();
    }
    let mut manifests = Vec::new();
    let mut unreadable = Vec::new();
    for p in paths {
        match read_manifest(p) {
            Ok(m) => manifests.push(m),
            Err(e) => unreadable.push(format!("{}: {e}", p.display())),
        }
    }
    let ok = manifests.iter().filter(|m| m.is_ok()).count();
    let mut out = format!("{ok}/{} ok\n", manifests.len());
    for m in &manifests {
        let status = match &m.outcome {
            Outcome::Ok => "ok".to_string(),
            Outcome::Failed { reason } => format!("failed: {reason}"),
        };
        out.push_str(&format!("{} {} {}\n", m.run_id, m.command, status));
        if let Some(checks) = m.summary.get("checks").and_then(Value::as_object) {
            let passed = checks.values().filter(|v| v.as_bool() == Some(true)).count();
            out.push_str(&format!("  checks {passed}/{} pass", checks.len()));
            let failed: Vec<&str> = checks
                .iter()
                .filter(|(_, v)| v.as_bool() != Some(true))
                .map(|(k, _)| k.as_str())
                .collect();
            if !failed.is_empty() {
                out.push_str(&format!(" (failing: {})", failed.join(", ")));
            }
            out.push('\n');
        }
        if let Some(slope) = m.summary.get("slope").and_then(Value::as_f64) {
            out.push_str(&format!("  slope {slope:.4}\n"));
        }
        if let Some(sign) = m.summary.get("sign_of_phi").and_then(Value::as_str) {
            out.push_str(&format!("  sign_of_phi {sign}\n"));
        }
        if let Some(t) = m.summary.get("eventual_positivity_time").and_then(Value::as_f64) {
            out.push_str(&format!("  eventual_positivity_time {t}\n"));
        }
    }
    for u in unreadable {
        out.push_str(&format!("unreadable {u}\n"));
    }
    out
}

/// `(n, ε)` pairs the schedule would use, for dry runs and `--help` output.
pub fn schedule_pairs(cfg: &RunConfig) -> Result<Vec<(f64, f64)>> {
    let d = cfg
        .degeneracy
        .as_ref()
        .ok_or_else(|| Error::config("degeneracy", "missing"))?;
    let sb = cfg
        .schedule
        .as_ref()
        .ok_or_else(|| Error::config("schedule", "missing"))?;
    let s = Schedule::new(sb.kind, sb.c, f_from_block(d)?)?;
    sb.samples.iter().map(|&p| schedule_eval(&s, p)).collect()
}
