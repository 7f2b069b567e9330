//! Homotopy limits toward the polyharmonic heat equation.
//!
//! Schedules couple `n` and `ε`; a sweep runs the regularized solver along a
//! schedule and measures the gap to `u_PH`. The branching correction `φ` is
//! the Duhamel integral of `∇𝓗 * (ln f(|u_PH|) ∇Δ^{m-1}u_PH)`, and
//! `u_n - u_PH - nφ` is tested for being `o(n)`.

use std::fmt::Write as _;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::degeneracy::{DegeneracyFunction, PathVariant, RegPath};
use crate::error::{Error, Result};
use crate::gridfield::{Field, GridSpec, Spectrum, SHELL_DECAY_LIMIT};
use crate::kernel::PhSolutionOperator;
use crate::solver::{Solver, SolverConfig};

/// Two-sided 95% Student quantile with one degree of freedom.
const T_QUANTILE_DOF1: f64 = 12.706;
/// Threshold above which the log clamp is considered dominant.
const MAX_CLAMPED_FRACTION: f64 = 0.2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleKind {
    /// `n(ε) = c / √|ln f(ε)|`
    NOfEps,
    /// `ε(n) = f^{-1}(e^{-c/√n})`
    EpsOfN,
}

#[derive(Clone, Debug)]
pub struct Schedule {
    pub kind: ScheduleKind,
    pub c: f64,
    pub f: DegeneracyFunction,
}

impl Schedule {
    pub fn new(kind: ScheduleKind, c: f64, f: DegeneracyFunction) -> Result<Self> {
        if !(c > 0.0) || !c.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "schedule constant must be > 0, got {c}"
            )));
        }
        Ok(Self { kind, c, f })
    }

    /// `n |ln f(ε)|` at a pair.
    pub fn product(&self, n: f64, eps: f64) -> f64 {
        n * self.f.value(eps).ln().abs()
    }

    /// Evaluates the schedule at every sample and checks the defining
    /// trend: along decreasing `n` (or `ε`), `n|ln f(ε)|` must fall for
    /// `eps_of_n` and grow for `n_of_eps`.
    pub fn eval_checked(&self, samples: &[f64]) -> Result<Vec<(f64, f64)>> {
        let mut sorted = samples.to_vec();
        sorted.sort_by(|a, b| b.total_cmp(a));
        let pairs: Vec<(f64, f64)> = sorted
            .iter()
            .map(|&p| schedule_eval(self, p))
            .collect::<Result<_>>()?;
        for w in pairs.windows(2) {
            let (a, b) = (self.product(w[0].0, w[0].1), self.product(w[1].0, w[1].1));
            let ok = match self.kind {
                ScheduleKind::EpsOfN => b < a,
                ScheduleKind::NOfEps => b > a,
            };
            if !ok {
                return Err(Error::ScheduleRange(format!(
                    "product n|ln f(eps)| has the wrong trend: {a} then {b}"
                )));
            }
        }
        Ok(pairs)
    }
}

/// `(n, ε)` for one schedule parameter (`n` for `eps_of_n`, `ε` otherwise).
pub fn schedule_eval(schedule: &Schedule, parameter: f64) -> Result<(f64, f64)> {
    match schedule.kind {
        ScheduleKind::EpsOfN => {
            let n = parameter;
            if !(n > 0.0) || !n.is_finite() {
                return Err(Error::ScheduleRange(format!("n must be > 0, got {n}")));
            }
            let target = (-schedule.c / n.sqrt()).exp();
            if !(target > 0.0) || target.is_subnormal() {
                return Err(Error::ScheduleRange(format!(
                    "f^-1 target e^(-c/sqrt(n)) underflows at n = {n}"
                )));
            }
            let eps = schedule
                .f
                .inverse(target)
                .map_err(|e| Error::ScheduleRange(e.to_string()))?;
            if !(eps > 0.0 && eps <= 1.0) {
                return Err(Error::ScheduleRange(format!(
                    "eps(n = {n}) = {eps} outside (0, 1]"
                )));
            }
            Ok((n, eps))
        }
        ScheduleKind::NOfEps => {
            let eps = parameter;
            if !(eps > 0.0 && eps <= 1.0) {
                return Err(Error::ScheduleRange(format!(
                    "eps must lie in (0, 1], got {eps}"
                )));
            }
            let l = schedule.f.value(eps).ln().abs();
            if !(l > 0.0) || !l.is_finite() {
                return Err(Error::ScheduleRange(format!("|ln f(eps)| = {l} at eps = {eps}")));
            }
            Ok((schedule.c / l.sqrt(), eps))
        }
    }
}

/// Exact `u_PH(s)` on demand from one cached solution operator.
#[derive(Clone, Debug)]
pub struct PhTrajectory {
    op: PhSolutionOperator,
    u0: Field,
    spec0: Spectrum,
}

impl PhTrajectory {
    /// Requires `u0` to pass the boundary-shell decay check.
    pub fn new(u0: &Field, m: u32) -> Result<Self> {
        u0.check_decay(SHELL_DECAY_LIMIT)?;
        Ok(Self::unchecked(u0, m))
    }

    fn unchecked(u0: &Field, m: u32) -> Self {
        Self {
            op: PhSolutionOperator::new(*u0.grid(), m),
            u0: u0.clone().with_time(0.0),
            spec0: u0.spectrum(),
        }
    }

    pub fn m(&self) -> u32 {
        self.op.m()
    }

    pub fn grid(&self) -> &GridSpec {
        self.op.grid()
    }

    pub fn initial(&self) -> &Field {
        &self.u0
    }

    pub fn at(&self, s: f64) -> Result<Field> {
        if !(s >= 0.0) {
            return Err(Error::InvalidParameter(format!("s must be ≥ 0, got {s}")));
        }
        if s == 0.0 {
            return Ok(self.u0.clone());
        }
        let sym = self.op.symbol();
        let mut i = 0;
        let out = self.spec0.apply(|_| {
            let v = (-sym[i] * s).exp();
            i += 1;
            v
        });
        Ok(out.to_field().with_time(s))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CorrectionField {
    pub t: f64,
    pub time_nodes: usize,
    pub clamp_floor: f64,
    /// Largest over time nodes of `measure{|u_PH| < η} / box volume`.
    pub clamped_fraction: f64,
    /// Sign applied to the raw integral; `+1` until `select_sign` runs.
    pub sign: i8,
    #[serde(skip)]
    pub field: Field,
}

impl CorrectionField {
    pub fn values(&self) -> &[f64] {
        self.field.values()
    }

    pub fn with_sign(&self, sign: i8) -> CorrectionField {
        let mut out = self.clone();
        out.field = self.field.scale((sign * self.sign) as f64);
        out.sign = sign;
        out
    }
}

/// Weights of `∫_0^h e^{-λ(h-τ)} (1-τ/h)` and `∫_0^h e^{-λ(h-τ)} τ/h`.
fn product_trapezoid_weights(lam: f64, h: f64) -> (f64, f64) {
    let x = lam * h;
    if x < 1e-4 {
        // series to O(x^3)
        let w0 = h * (0.5 - x / 3.0 + x * x / 8.0);
        let w1 = h * (0.5 - x / 6.0 + x * x / 24.0);
        return (w0, w1);
    }
    let i1 = -(-x).exp_m1() / lam;
    let itau = (h - i1) / lam;
    (i1 - itau / h, itau / h)
}

/// The raw Duhamel integral `∫_0^t ∇𝓗(t-s) * w(s) ds` with
/// `w = ln f(max(|u_PH|, η)) ∇Δ^{m-1}u_PH`.
///
/// `w` is linear in `s` between `time_nodes + 1` uniform nodes and the
/// exponential factor is integrated exactly per mode. The returned field
/// carries `sign = +1`; see [`select_sign`].
pub fn correction_phi(
    ph: &PhTrajectory,
    f: &DegeneracyFunction,
    t: f64,
    time_nodes: usize,
    eta: f64,
) -> Result<CorrectionField> {
    if !(eta > 0.0) {
        return Err(Error::InvalidParameter(format!("clamp floor must be > 0, got {eta}")));
    }
    if !(t >= 0.0) {
        return Err(Error::InvalidParameter(format!("t must be ≥ 0, got {t}")));
    }
    let grid = *ph.grid();
    if t == 0.0 || time_nodes == 0 {
        return Ok(CorrectionField {
            t,
            time_nodes,
            clamp_floor: eta,
            clamped_fraction: clamped_fraction(ph.initial(), eta),
            sign: 1,
            field: Field::zeros(grid).with_time(t),
        });
    }
    let m = ph.m();
    let lam: Vec<f64> = (0..grid.len())
        .map(|i| {
            let xi = grid.mode(i);
            (xi[0] * xi[0] + xi[1] * xi[1]).powi(m as i32)
        })
        .collect();
    let h = t / time_nodes as f64;
    let weights: Vec<(f64, f64)> = lam.iter().map(|&l| product_trapezoid_weights(l, h)).collect();

    let mut frac: f64 = 0.0;
    let mut source = |j: usize| -> Result<Vec<Spectrum>> {
        let s = if j == time_nodes { t } else { j as f64 * h };
        let u = ph.at(s)?;
        frac = frac.max(clamped_fraction(&u, eta));
        let spec = u.spectrum();
        let g = spec.apply(|xi| {
            let k2 = xi[0] * xi[0] + xi[1] * xi[1];
            if (m - 1).is_multiple_of(2) {
                k2.powi(m as i32 - 1)
            } else {
                -k2.powi(m as i32 - 1)
            }
        });
        let logf: Vec<f64> = u
            .values()
            .iter()
            .map(|v| f.value(v.abs().max(eta)).ln())
            .collect();
        (0..grid.dim())
            .map(|axis| {
                let gi = g.derivative(axis).to_field();
                let w: Vec<f64> = gi.values().iter().zip(&logf).map(|(a, b)| a * b).collect();
                let mut ws = Field::new(grid, w)?.spectrum();
                ws.dealias();
                Ok(ws)
            })
            .collect()
    };

    let dim = grid.dim();
    let mut acc = vec![vec![Complex64::new(0.0, 0.0); grid.len()]; dim];
    let mut left = source(0)?;
    for j in 0..time_nodes {
        let right = source(j + 1)?;
        // propagate from s_{j+1} to t
        let tail = t - (j + 1) as f64 * h;
        for axis in 0..dim {
            let (l, r) = (left[axis].coeffs(), right[axis].coeffs());
            for (i, a) in acc[axis].iter_mut().enumerate() {
                let (w0, w1) = weights[i];
                let decay = (-lam[i] * tail.max(0.0)).exp();
                *a += (l[i] * w0 + r[i] * w1) * decay;
            }
        }
        left = right;
    }
    let mut total: Option<Spectrum> = None;
    for (axis, coeffs) in acc.into_iter().enumerate() {
        let d = Spectrum::from_coeffs(grid, coeffs).derivative(axis);
        match total.as_mut() {
            Some(s) => s.add_assign(&d),
            None => total = Some(d),
        }
    }
    let field = total.expect("dim ≥ 1").to_field().with_time(t);
    if field.values().iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("correction field".into()));
    }
    if frac > MAX_CLAMPED_FRACTION {
        return Err(Error::LogSingularity(frac));
    }
    Ok(CorrectionField {
        t,
        time_nodes,
        clamp_floor: eta,
        clamped_fraction: frac,
        sign: 1,
        field,
    })
}

fn clamped_fraction(u: &Field, eta: f64) -> f64 {
    let n = u.values().iter().filter(|v| v.abs() < eta).count();
    n as f64 / u.values().len() as f64
}

/// Outcome of fitting `σ φ_raw` to the empirical quotients `(u_n - u_PH)/n`.
#[derive(Clone, Debug, Serialize)]
pub struct SignFit {
    pub sign: i8,
    /// Least-squares amplitude `a` in `(u_n - u_PH)/n ≈ a φ_raw`.
    pub amplitude: f64,
    /// Relative l2 gap of each empirical quotient to the signed correction.
    pub relative_gaps: Vec<f64>,
}

/// Chooses the sign of the correction by least squares.
pub fn select_sign(raw: &CorrectionField, u_ph: &Field, runs: &[(f64, Field)]) -> Result<SignFit> {
    let phi = &raw.field;
    let pp = phi.inner(phi)?;
    if runs.is_empty() || pp == 0.0 {
        return Err(Error::InvalidParameter(
            "sign selection needs runs and a nonzero correction".into(),
        ));
    }
    let mut num = 0.0;
    let mut quotients = Vec::with_capacity(runs.len());
    for (n, u) in runs {
        let q = u.sub(u_ph)?.scale(1.0 / n);
        num += q.inner(phi)?;
        quotients.push(q);
    }
    let amplitude = num / (pp * runs.len() as f64);
    let sign: i8 = if amplitude >= 0.0 { 1 } else { -1 };
    let signed = phi.scale(sign as f64);
    let relative_gaps = quotients
        .iter()
        .map(|q| Ok(q.sub(&signed)?.l2_norm() / signed.l2_norm()))
        .collect::<Result<_>>()?;
    Ok(SignFit {
        sign,
        amplitude,
        relative_gaps,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BranchingResidual {
    /// `‖u_n - u_PH - nφ‖₂`
    pub linear_gap: f64,
    /// `linear_gap / n`; `None` at `n = 0`.
    pub remainder_ratio: Option<f64>,
}

pub fn branching_residual(u_n: &Field, u_ph: &Field, phi: &Field, n: f64) -> Result<BranchingResidual> {
    let gap = u_n.sub(u_ph)?.sub(&phi.scale(n))?.l2_norm();
    Ok(BranchingResidual {
        linear_gap: gap,
        remainder_ratio: (n > 0.0).then(|| gap / n),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct SmallnessReport {
    pub n: f64,
    pub eps: f64,
    pub thresholds: [f64; 2],
    /// `sup Θ` on `{ε² + u² ≤ t_i²}` for each threshold.
    pub sup_theta_inner: [f64; 2],
    /// `sup Θ` on the complement.
    pub sup_theta_outer: [f64; 2],
    /// `1 - f^n(t_i)`, the monotone bound on the complement.
    pub outer_bound: [f64; 2],
    /// `Θ` at `u = 0`: `1 - f^n(ε)`.
    pub theta_at_zero: f64,
    /// `n |ln f(ε)|`.
    pub product: f64,
    /// `|(1 - f^n(ε))/n + ln f(ε)|`.
    pub expansion_residual: f64,
}

/// Partitions space-time samples by `√(ε² + u²)` against two thresholds
/// and reports where `Θ_{n,ε}` is largest.
pub fn perturbation_smallness_report(
    snapshots: &[Field],
    f: &DegeneracyFunction,
    n: f64,
    eps: f64,
    t1: f64,
    t2: f64,
) -> Result<SmallnessReport> {
    if !(t1 > 0.0 && t2 > 0.0) {
        return Err(Error::InvalidParameter("thresholds must be positive".into()));
    }
    let path = RegPath::new(f.clone(), n, PathVariant::Simple)?;
    let thresholds = [t1, t2];
    let mut inner = [0.0f64; 2];
    let mut outer = [0.0f64; 2];
    for u in snapshots {
        for &v in u.values() {
            let r = eps.hypot(v);
            let th = path.theta(eps, v);
            for i in 0..2 {
                if r <= thresholds[i] {
                    inner[i] = inner[i].max(th);
                } else {
                    outer[i] = outer[i].max(th);
                }
            }
        }
    }
    let fe = f.value(eps);
    Ok(SmallnessReport {
        n,
        eps,
        thresholds,
        sup_theta_inner: inner,
        sup_theta_outer: outer,
        outer_bound: [1.0 - f.pow_n(n, t1), 1.0 - f.pow_n(n, t2)],
        theta_at_zero: path.theta(eps, 0.0),
        product: n * fe.ln().abs(),
        expansion_residual: if n > 0.0 {
            (-(n * fe.ln()).exp_m1() / n + fe.ln()).abs()
        } else {
            0.0
        },
    })
}

/// Very-weak residual of `u_t = -(-Δ)^m u` tested against the lowest
/// Fourier modes: `max_k |û_k(T) - û_k(0) + |ξ_k|^{2m} ∫_0^T û_k ds| / ‖û(0)‖`.
///
/// `snapshots` must start at `t = 0` and be uniformly spaced in time.
pub fn very_weak_residual(snapshots: &[Field], m: u32, modes: usize) -> Result<f64> {
    if snapshots.len() < 2 {
        return Err(Error::InvalidParameter("need at least two snapshots".into()));
    }
    let grid = *snapshots[0].grid();
    let times: Vec<f64> = snapshots.iter().map(|s| s.time().unwrap_or(0.0)).collect();
    let specs: Vec<Spectrum> = snapshots.iter().map(Field::spectrum).collect();
    let norm0: f64 = specs[0].coeffs().iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    let mut worst: f64 = 0.0;
    for idx in 0..grid.len() {
        let k = grid.mode_index(idx);
        if k[0].unsigned_abs() as usize > modes || k[1].unsigned_abs() as usize > modes {
            continue;
        }
        let xi = grid.mode(idx);
        let lam = (xi[0] * xi[0] + xi[1] * xi[1]).powi(m as i32);
        let mut integral = Complex64::new(0.0, 0.0);
        for j in 0..specs.len() - 1 {
            let h = times[j + 1] - times[j];
            integral += (specs[j].coeffs()[idx] + specs[j + 1].coeffs()[idx]) * (0.5 * h);
        }
        let last = specs.last().expect("≥ 2 snapshots").coeffs()[idx];
        let r = last - specs[0].coeffs()[idx] + integral * lam;
        worst = worst.max(r.norm());
    }
    Ok(worst / norm0.max(f64::MIN_POSITIVE))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "status", content = "reason")]
pub enum RowStatus {
    Ok,
    Failed(String),
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceRow {
    pub n: f64,
    pub eps: f64,
    pub t_eval: f64,
    pub l2_gap: f64,
    pub sup_gap: f64,
    pub correction_gap: Option<f64>,
    pub weak_residual: f64,
    pub status: RowStatus,
}

#[derive(Clone, Debug, Serialize)]
pub struct SlopeFit {
    pub slope: f64,
    /// 95% confidence interval (degenerate for exactly two points).
    pub ci: [f64; 2],
    pub points: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceTable {
    pub rows: Vec<ConvergenceRow>,
    pub slope: Option<SlopeFit>,
}

pub const TABLE_CSV_HEADER: &str =
    "n,eps,t_eval,l2_gap,sup_gap,correction_gap,weak_residual,status";

impl ConvergenceTable {
    fn from_rows(mut rows: Vec<ConvergenceRow>) -> Self {
        rows.sort_by(|a, b| b.n.total_cmp(&a.n));
        let slope = fit_slope(&rows);
        Self { rows, slope }
    }

    pub fn ok_rows(&self) -> impl Iterator<Item = &ConvergenceRow> {
        self.rows.iter().filter(|r| r.status == RowStatus::Ok)
    }

    /// True if `l2_gap` strictly decreases with `n` over rows with `n > 0`.
    pub fn strictly_decreasing(&self) -> bool {
        let gaps: Vec<f64> = self.ok_rows().filter(|r| r.n > 0.0).map(|r| r.l2_gap).collect();
        gaps.len() == self.rows.iter().filter(|r| r.n > 0.0).count()
            && gaps.windows(2).all(|w| w[1] < w[0])
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from(TABLE_CSV_HEADER);
        s.push('\n');
        for r in &self.rows {
            let corr = r.correction_gap.map(|v| v.to_string()).unwrap_or_default();
            let status = match &r.status {
                RowStatus::Ok => "ok".to_string(),
                RowStatus::Failed(reason) => format!("failed: {}", reason.replace(',', ";")),
            };
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{}",
                r.n, r.eps, r.t_eval, r.l2_gap, r.sup_gap, corr, r.weak_residual, status
            );
        }
        s
    }

    /// `log_n,log_gap` for rows with `n > 0` and a positive gap.
    pub fn plot_data(&self) -> String {
        let mut s = String::from("log_n,log_gap\n");
        for r in self.ok_rows().filter(|r| r.n > 0.0 && r.l2_gap > 0.0) {
            let _ = writeln!(s, "{},{}", r.n.ln(), r.l2_gap.ln());
        }
        s
    }
}

/// Least squares of `ln l2_gap` on `ln n` over the three smallest `n > 0`.
fn fit_slope(rows: &[ConvergenceRow]) -> Option<SlopeFit> {
    let mut pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.status == RowStatus::Ok && r.n > 0.0 && r.l2_gap > 0.0)
        .map(|r| (r.n.ln(), r.l2_gap.ln()))
        .collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    pts.truncate(3);
    if pts.len() < 2 {
        return None;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let half = if pts.len() > 2 {
        let rss: f64 = pts
            .iter()
            .map(|p| (p.1 - my - slope * (p.0 - mx)).powi(2))
            .sum();
        let se = (rss / (k - 2.0) / sxx).sqrt();
        T_QUANTILE_DOF1 * se
    } else {
        0.0
    };
    Some(SlopeFit {
        slope,
        ci: [slope - half, slope + half],
        points: pts.len(),
    })
}

/// Knobs shared by every row of a sweep.
#[derive(Clone, Debug)]
pub struct SweepParams {
    pub m: u32,
    pub variant: PathVariant,
    pub dt: f64,
    pub t_eval: f64,
    /// Snapshots per row used by the very-weak residual.
    pub weak_samples: usize,
    /// Fourier modes per axis tested in the very-weak residual.
    pub weak_modes: usize,
    pub workers: usize,
}

impl SweepParams {
    pub fn new(m: u32, dt: f64, t_eval: f64) -> Self {
        Self {
            m,
            variant: PathVariant::Simple,
            dt,
            t_eval,
            weak_samples: 50,
            weak_modes: 4,
            workers: 1,
        }
    }
}

/// A sweep's table together with the final fields of successful rows.
#[derive(Clone, Debug)]
pub struct SweepOutcome {
    pub table: ConvergenceTable,
    /// `(n, u_{n,ε}(t_eval))` in table order, successful rows only.
    pub finals: Vec<(f64, Field)>,
    pub u_ph: Field,
}

/// Runs one solver per parameter value. `n = 0` is allowed for the
/// `eps_of_n` kind and solves the unperturbed problem at `ε = 1`.
pub fn sweep(
    u0: &Field,
    schedule: &Schedule,
    parameters: &[f64],
    params: &SweepParams,
    phi: Option<&CorrectionField>,
) -> Result<SweepOutcome> {
    let ph = PhTrajectory::new(u0, params.m)?;
    let u_ph = ph.at(params.t_eval)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(params.workers.max(1))
        .build()
        .map_err(|e| Error::InvalidParameter(format!("worker pool: {e}")))?;
    let results: Vec<(ConvergenceRow, Option<Field>)> = pool.install(|| {
        parameters
            .par_iter()
            .map(|&p| run_row(u0, schedule, p, params, &u_ph, phi))
            .collect()
    });
    let mut rows = Vec::with_capacity(results.len());
    let mut finals = Vec::new();
    for (row, field) in results {
        if let Some(f) = field {
            finals.push((row.n, f));
        }
        rows.push(row);
    }
    finals.sort_by(|a, b| b.0.total_cmp(&a.0));
    Ok(SweepOutcome {
        table: ConvergenceTable::from_rows(rows),
        finals,
        u_ph,
    })
}

fn run_row(
    u0: &Field,
    schedule: &Schedule,
    parameter: f64,
    params: &SweepParams,
    u_ph: &Field,
    phi: Option<&CorrectionField>,
) -> (ConvergenceRow, Option<Field>) {
    let pair = if schedule.kind == ScheduleKind::EpsOfN && parameter == 0.0 {
        Ok((0.0, 1.0))
    } else {
        schedule_eval(schedule, parameter)
    };
    let mut row = ConvergenceRow {
        n: if schedule.kind == ScheduleKind::EpsOfN { parameter } else { f64::NAN },
        eps: if schedule.kind == ScheduleKind::NOfEps { parameter } else { f64::NAN },
        t_eval: params.t_eval,
        l2_gap: f64::NAN,
        sup_gap: f64::NAN,
        correction_gap: None,
        weak_residual: f64::NAN,
        status: RowStatus::Ok,
    };
    let outcome = pair.and_then(|(n, eps)| {
        row.n = n;
        row.eps = eps;
        solve_row(u0, schedule, n, eps, params)
    });
    match outcome {
        Ok((final_field, weak)) => {
            let diff = final_field.sub(u_ph).expect("same grid");
            row.l2_gap = diff.l2_norm();
            row.sup_gap = diff.max_abs();
            row.weak_residual = weak;
            row.correction_gap = phi.map(|p| {
                diff.sub(&p.field.scale(row.n)).expect("same grid").l2_norm()
            });
            (row, Some(final_field))
        }
        Err(e) => {
            row.status = RowStatus::Failed(e.to_string());
            (row, None)
        }
    }
}

fn solve_row(
    u0: &Field,
    schedule: &Schedule,
    n: f64,
    eps: f64,
    params: &SweepParams,
) -> Result<(Field, f64)> {
    let path = RegPath::new(schedule.f.clone(), n, params.variant)?;
    let mut cfg = SolverConfig::new(params.m, path, eps, params.dt, params.t_eval);
    let k = params.weak_samples.max(1);
    cfg.snapshot_times = (1..=k).map(|i| params.t_eval * i as f64 / k as f64).collect();
    let traj = Solver::new(cfg, *u0.grid())?.solve(u0)?;
    let mut snaps = vec![u0.clone().with_time(0.0)];
    snaps.extend(traj.snapshots.iter().cloned());
    let weak = very_weak_residual(&snaps, params.m, params.weak_modes)?;
    Ok((traj.final_field().clone(), weak))
}

/// Limits of the two regularization paths at one schedule point.
#[derive(Clone, Debug, Serialize)]
pub struct PathComparison {
    pub n: f64,
    pub eps: f64,
    /// `‖u_full - u_simple‖₂` at `t_eval`.
    pub gap: f64,
    /// `‖u_simple(dt) - u_simple(dt/2)‖₂`, the time-discretization floor.
    pub floor: f64,
    pub full_gap_to_ph: f64,
    pub simple_gap_to_ph: f64,
    /// `gap ≤ 10 floor`.
    pub within_floor: bool,
}

/// Runs both path variants at `ε(n)` and reports how far apart they end.
pub fn path_comparison(
    u0: &Field,
    schedule: &Schedule,
    n: f64,
    params: &SweepParams,
) -> Result<PathComparison> {
    let (n, eps) = schedule_eval(schedule, n)?;
    let run = |variant: PathVariant, dt: f64| -> Result<Field> {
        let path = RegPath::new(schedule.f.clone(), n, variant)?;
        let cfg = SolverConfig::new(params.m, path, eps, dt, params.t_eval);
        Ok(Solver::new(cfg, *u0.grid())?.solve(u0)?.final_field().clone())
    };
    let simple = run(PathVariant::Simple, params.dt)?;
    let simple_half = run(PathVariant::Simple, 0.5 * params.dt)?;
    let full = run(PathVariant::Full, params.dt)?;
    let u_ph = PhTrajectory::new(u0, params.m)?.at(params.t_eval)?;
    let gap = full.sub(&simple)?.l2_norm();
    let floor = simple.sub(&simple_half)?.l2_norm();
    Ok(PathComparison {
        n,
        eps,
        gap,
        floor,
        full_gap_to_ph: full.sub(&u_ph)?.l2_norm(),
        simple_gap_to_ph: simple.sub(&u_ph)?.l2_norm(),
        within_floor: gap <= 10.0 * floor,
    })
}

/// JSON digest written next to the table.
#[derive(Clone, Debug, Serialize)]
pub struct SweepSummary {
    pub slope: Option<f64>,
    pub slope_ci: Option<[f64; 2]>,
    pub sign_of_phi: Option<String>,
    pub clamped_fraction: Option<f64>,
    pub schedule: ScheduleSummary,
    pub strictly_decreasing: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ScheduleSummary {
    pub kind: ScheduleKind,
    pub c: f64,
}

impl SweepSummary {
    pub fn new(
        table: &ConvergenceTable,
        schedule: &Schedule,
        phi: Option<&CorrectionField>,
    ) -> Self {
        Self {
            slope: table.slope.as_ref().map(|s| s.slope),
            slope_ci: table.slope.as_ref().map(|s| s.ci),
            sign_of_phi: phi.map(|p| if p.sign >= 0 { "+" } else { "-" }.to_string()),
            clamped_fraction: phi.map(|p| p.clamped_fraction),
            schedule: ScheduleSummary {
                kind: schedule.kind,
                c: schedule.c,
            },
            strictly_decreasing: table.strictly_decreasing(),
        }
    }
}
