//! Stabilized IMEX integration of the regularized problem
//! `u_t = (-1)^{m-1} ∇·(φ_ε(u) ∇Δ^{m-1} u)` with Bernis–Friedman monitors.
//!
//! One step is `û ← e^{-c|ξ|^{2m} dt} (û + dt R̂)` where
//! `R = rhs(u) + c(-Δ)^m u`. Since `0 < φ_ε ≤ c` the explicit remainder never
//! amplifies. A step is accepted only if the energy `∫|ξ|^{2(m-1)}|û|²` does
//! not grow by more than `energy_tol`; otherwise `dt` is halved.

use std::fmt::Write as _;

use num_complex::Complex64;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::degeneracy::{PathVariant, RegPath};
use crate::error::{Error, Result};
use crate::gridfield::{
    divergence_spectrum, integrate, Field, GridSpec, Spectrum, VectorField, SHELL_DECAY_LIMIT,
};
use crate::kernel::count_sign_changes;

const MAX_HALVINGS: u32 = 30;
const TRIPWIRE_FACTOR: f64 = 10.0;
const INITIAL_TAIL_LIMIT: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct SolverConfig {
    pub m: u32,
    pub path: RegPath,
    pub eps: f64,
    pub dt_init: f64,
    pub t_final: f64,
    /// `c`; `None` selects the default for the path variant.
    pub stabilization: Option<f64>,
    pub dealias: bool,
    pub energy_tol: f64,
    pub snapshot_times: Vec<f64>,
}

impl SolverConfig {
    pub fn new(m: u32, path: RegPath, eps: f64, dt_init: f64, t_final: f64) -> Self {
        Self {
            m,
            path,
            eps,
            dt_init,
            t_final,
            stabilization: None,
            dealias: true,
            energy_tol: 1e-8,
            snapshot_times: Vec::new(),
        }
    }

    /// The stabilization constant actually used.
    ///
    /// Full path: `1.1 (f^n(ε) + C_f^n)`. Simple path: `C_f^n`, the supremum
    /// of `ψ_ε`, which makes the constant-coefficient case `n = 0` exact.
    pub fn stabilization_constant(&self) -> f64 {
        self.stabilization.unwrap_or_else(|| match self.path.variant {
            PathVariant::Full => 1.1 * self.path.upper_bound(self.eps),
            PathVariant::Simple => self.path.upper_bound(self.eps),
        })
    }

    pub fn validate(&self) -> Result<()> {
        if !(2..=3).contains(&self.m) {
            return Err(Error::InvalidParameter(format!(
                "solver order m must be 2 or 3, got {}",
                self.m
            )));
        }
        if !(self.eps > 0.0 && self.eps <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "eps must lie in (0, 1], got {}",
                self.eps
            )));
        }
        if !(self.dt_init > 0.0) || !(self.t_final >= 0.0) || !self.t_final.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "need dt_init > 0 and finite t_final ≥ 0, got {} and {}",
                self.dt_init, self.t_final
            )));
        }
        if !(self.energy_tol >= 0.0) {
            return Err(Error::InvalidParameter("energy_tol must be ≥ 0".into()));
        }
        for &t in &self.snapshot_times {
            if !(t > 0.0 && t <= self.t_final) {
                return Err(Error::InvalidParameter(format!(
                    "snapshot time {t} outside (0, t_final]"
                )));
            }
        }
        let c = self.stabilization_constant();
        let sampled = (0..=2000)
            .map(|i| self.path.coefficient(self.eps, -10.0 + i as f64 * 0.01))
            .fold(0.0, f64::max);
        if !(c >= sampled) {
            return Err(Error::InvalidParameter(format!(
                "stabilization c = {c} below sampled coefficient maximum {sampled}"
            )));
        }
        Ok(())
    }

    /// `c` and `φ_ε` both enter the identity; keep the id sensitive to them.
    fn fingerprint(&self) -> String {
        format!(
            "m={} kind={:?} n={} variant={:?} eps={} dt={} t={} c={} dealias={} tol={} snaps={:?}",
            self.m,
            self.path.f.kind(),
            self.path.n,
            self.path.variant,
            self.eps,
            self.dt_init,
            self.t_final,
            self.stabilization_constant(),
            self.dealias,
            self.energy_tol,
            self.snapshot_times
        )
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct EnergyReport {
    pub t: f64,
    pub mass: f64,
    /// `∫|ξ|^{2(m-1)}|û|²`: `∫|∇u|²` for `m = 2`, `∫|Δu|²` for `m = 3`.
    pub bf_energy: f64,
    /// `∫|ξ|^{2(m-2)}|û|²`.
    pub bf_lower: f64,
    /// `∫_0^t ∫ |φ_ε ∇Δ^{m-1}u|²`.
    pub flux_l2_accum: f64,
    /// `∫_0^t ∫ φ_ε |∇Δ^{m-1}u|²`.
    pub dissipation_accum: f64,
    /// `bf_energy(t) + 2 dissipation_accum(t) - bf_energy(0)`.
    pub dissipation_residual: f64,
    /// `∫_0^t ∫ |∇Δ^{m-1}u|²`, unweighted.
    pub gradient_accum: f64,
}

pub const ENERGY_CSV_HEADER: &str =
    "t,mass,bf_energy,bf_lower,flux_l2_accum,dissipation_accum,dissipation_residual";

pub fn energy_csv(reports: &[EnergyReport]) -> String {
    let mut s = String::from(ENERGY_CSV_HEADER);
    s.push('\n');
    for r in reports {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            r.t,
            r.mass,
            r.bf_energy,
            r.bf_lower,
            r.flux_l2_accum,
            r.dissipation_accum,
            r.dissipation_residual
        );
    }
    s
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub run_id: String,
    /// Snapshots at the requested times and `t_final`, strictly increasing.
    pub snapshots: Vec<Field>,
    /// One report for `t = 0` and one per accepted step.
    pub energy: Vec<EnergyReport>,
    pub halvings: u32,
}

impl Trajectory {
    pub fn final_field(&self) -> &Field {
        self.snapshots.last().expect("trajectory always holds t_final")
    }

    pub fn max_mass_drift(&self) -> f64 {
        let m0 = self.energy[0].mass;
        let scale = m0.abs().max(f64::MIN_POSITIVE);
        self.energy
            .iter()
            .map(|r| (r.mass - m0).abs() / scale)
            .fold(0.0, f64::max)
    }

    pub fn max_dissipation_residual(&self) -> f64 {
        let e0 = self.energy[0].bf_energy;
        self.energy
            .iter()
            .map(|r| r.dissipation_residual.abs() / e0)
            .fold(0.0, f64::max)
    }

    /// Largest single-step growth of `bf_energy` (≤ 0 when monotone).
    pub fn max_energy_increase(&self) -> f64 {
        self.energy
            .windows(2)
            .map(|w| w[1].bf_energy - w[0].bf_energy)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Everything one step needs at the current state.
struct Eval {
    spec: Vec<Complex64>,
    grad: VectorField,
    coef: Vec<f64>,
}

/// Cached per-mode symbols.
struct Symbols {
    lam: Vec<f64>,
    energy_weight: Vec<f64>,
    lower_weight: Vec<f64>,
    grad_symbol: Vec<f64>,
}

impl Symbols {
    fn new(grid: &GridSpec, m: u32) -> Self {
        let k2: Vec<f64> = (0..grid.len())
            .map(|i| {
                let xi = grid.mode(i);
                xi[0] * xi[0] + xi[1] * xi[1]
            })
            .collect();
        let sign = if (m - 1).is_multiple_of(2) { 1.0 } else { -1.0 };
        Self {
            lam: k2.iter().map(|k| k.powi(m as i32)).collect(),
            energy_weight: k2.iter().map(|k| k.powi(m as i32 - 1)).collect(),
            lower_weight: k2.iter().map(|k| k.powi(m as i32 - 2)).collect(),
            grad_symbol: k2.iter().map(|k| sign * k.powi(m as i32 - 1)).collect(),
        }
    }

    fn weighted(&self, grid: &GridSpec, spec: &[Complex64], w: &[f64]) -> f64 {
        let s: f64 = spec.iter().zip(w).map(|(c, w)| w * c.norm_sqr()).sum();
        s * grid.cell_volume() / grid.len() as f64
    }
}

/// The time integrator for one configuration on one grid.
pub struct Solver {
    config: SolverConfig,
    grid: GridSpec,
    c: f64,
    symbols: Symbols,
}

impl Solver {
    pub fn new(config: SolverConfig, grid: GridSpec) -> Result<Self> {
        config.validate()?;
        let c = config.stabilization_constant();
        let symbols = Symbols::new(&grid, config.m);
        Ok(Self {
            config,
            grid,
            c,
            symbols,
        })
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    pub fn stabilization(&self) -> f64 {
        self.c
    }

    fn evaluate(&self, u: &Field) -> Result<Eval> {
        let spec = u.spectrum();
        let mut k = 0;
        let g = spec.apply(|_| {
            let v = self.symbols.grad_symbol[k];
            k += 1;
            v
        });
        let components = (0..self.grid.dim())
            .map(|axis| g.derivative(axis).to_field().into_values())
            .collect();
        let grad = VectorField::new(self.grid, components)?;
        let coef = u
            .values()
            .iter()
            .map(|&v| self.config.path.coefficient(self.config.eps, v))
            .collect();
        Ok(Eval {
            spec: spec.into_coeffs(),
            grad,
            coef,
        })
    }

    /// Transform of `(-1)^{m-1} ∇·(φ g)`.
    fn rhs_spectrum(&self, ev: &Eval) -> Result<Vec<Complex64>> {
        let product: Vec<Vec<f64>> = ev
            .grad
            .components()
            .iter()
            .map(|g| g.iter().zip(&ev.coef).map(|(g, c)| g * c).collect())
            .collect();
        if product.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("flux product φ_ε ∇Δ^{m-1}u".into()));
        }
        let flux = VectorField::new(self.grid, product)?;
        let sign = if (self.config.m - 1).is_multiple_of(2) { 1.0 } else { -1.0 };
        Ok(divergence_spectrum(&flux, self.config.dealias)
            .into_coeffs()
            .into_iter()
            .map(|z| z * sign)
            .collect())
    }

    pub fn rhs(&self, u: &Field) -> Result<Field> {
        self.grid.check_same(u.grid())?;
        let ev = self.evaluate(u)?;
        let r = self.rhs_spectrum(&ev)?;
        Ok(Spectrum::from_coeffs(self.grid, r).to_field())
    }

    /// One candidate step from a prepared state, returning the new spectrum.
    fn advance(&self, ev: &Eval, rhs: &[Complex64], dt: f64) -> Vec<Complex64> {
        ev.spec
            .iter()
            .zip(rhs)
            .zip(&self.symbols.lam)
            .map(|((u, r), &lam)| {
                let remainder = r + u * (self.c * lam);
                (u + remainder * dt) * (-self.c * lam * dt).exp()
            })
            .collect()
    }

    /// A single accepted step of size at most `dt`, with halving.
    /// Returns the new field and the step actually taken.
    pub fn step_imex(&self, u: &Field, dt: f64) -> Result<(Field, f64)> {
        if !(dt > 0.0) {
            return Err(Error::InvalidParameter(format!("dt must be > 0, got {dt}")));
        }
        self.grid.check_same(u.grid())?;
        let ev = self.evaluate(u)?;
        let rhs = self.rhs_spectrum(&ev)?;
        let t = u.time().unwrap_or(0.0);
        let (spec, taken, _) = self.accept(&ev, &rhs, dt, t)?;
        let field = Spectrum::from_coeffs(self.grid, spec).to_field().with_time(t + taken);
        Ok((field, taken))
    }

    fn accept(
        &self,
        ev: &Eval,
        rhs: &[Complex64],
        dt: f64,
        t: f64,
    ) -> Result<(Vec<Complex64>, f64, u32)> {
        let e_old = self
            .symbols
            .weighted(&self.grid, &ev.spec, &self.symbols.energy_weight);
        let mut h = dt;
        let mut jump = 0.0;
        for halvings in 0..=MAX_HALVINGS {
            let cand = self.advance(ev, rhs, h);
            let e_new = self
                .symbols
                .weighted(&self.grid, &cand, &self.symbols.energy_weight);
            jump = e_new - e_old;
            if e_new.is_finite() && jump <= self.config.energy_tol {
                return Ok((cand, h, halvings));
            }
            h *= 0.5;
        }
        Err(Error::Stiffness {
            t,
            halvings: MAX_HALVINGS,
            energy_jump: jump,
        })
    }

    fn dissipation_terms(&self, ev: &Eval) -> (f64, f64, f64) {
        let g2 = ev.grad.norm_sq();
        let dv = self.grid.cell_volume();
        let mut diss = 0.0;
        let mut flux = 0.0;
        let mut plain = 0.0;
        for (g, c) in g2.values().iter().zip(&ev.coef) {
            diss += c * g;
            flux += c * c * g;
            plain += g;
        }
        (diss * dv, flux * dv, plain * dv)
    }

    fn report(&self, ev: &Eval, u: &Field, t: f64) -> EnergyReport {
        EnergyReport {
            t,
            mass: integrate(u),
            bf_energy: self
                .symbols
                .weighted(&self.grid, &ev.spec, &self.symbols.energy_weight),
            bf_lower: self
                .symbols
                .weighted(&self.grid, &ev.spec, &self.symbols.lower_weight),
            ..EnergyReport::default()
        }
    }

    pub fn solve(&self, u0: &Field) -> Result<Trajectory> {
        self.grid.check_same(u0.grid())?;
        u0.check_decay(SHELL_DECAY_LIMIT)?;
        let tail = u0.spectrum().tail_energy_fraction();
        if tail > INITIAL_TAIL_LIMIT {
            return Err(Error::UnderResolved(format!(
                "initial datum spectral tail {tail:.3e} exceeds {INITIAL_TAIL_LIMIT:.0e}"
            )));
        }
        let limit = TRIPWIRE_FACTOR * u0.max_abs();
        let mut targets: Vec<f64> = self.config.snapshot_times.clone();
        targets.push(self.config.t_final);
        targets.sort_by(f64::total_cmp);
        targets.dedup();

        let mut u = u0.clone().with_time(0.0);
        let mut t = 0.0;
        let mut ev = self.evaluate(&u)?;
        let mut first = self.report(&ev, &u, 0.0);
        let e0 = first.bf_energy;
        let (mut d_prev, mut f_prev, mut g_prev) = self.dissipation_terms(&ev);
        first.dissipation_residual = 0.0;
        let mut energy = vec![first];
        let mut snapshots = Vec::with_capacity(targets.len());
        let mut dt = self.config.dt_init;
        let mut halvings_total = 0;

        for &target in &targets {
            if target == 0.0 {
                snapshots.push(u.clone());
                continue;
            }
            while t < target {
                let remaining = target - t;
                // absorb a sliver below 1e-9 dt into this step
                let h = if remaining <= dt * (1.0 + 1e-9) { remaining } else { dt };
                let rhs = self.rhs_spectrum(&ev)?;
                let (spec, taken, halvings) = self.accept(&ev, &rhs, h, t)?;
                if halvings > 0 {
                    halvings_total += halvings;
                    dt = dt.min(taken);
                }
                t = if taken == remaining { target } else { t + taken };
                u = Spectrum::from_coeffs(self.grid, spec).to_field().with_time(t);
                if u.values().iter().any(|v| !v.is_finite()) {
                    return Err(Error::NonFinite(format!("solution at t = {t:.6e}")));
                }
                let sup = u.max_abs();
                if sup > limit {
                    return Err(Error::Unbounded { t, sup, limit });
                }
                ev = self.evaluate(&u)?;
                let (d, f, g) = self.dissipation_terms(&ev);
                let prev = *energy.last().expect("seeded with t = 0");
                let mut rep = self.report(&ev, &u, t);
                rep.dissipation_accum = prev.dissipation_accum + 0.5 * taken * (d + d_prev);
                rep.flux_l2_accum = prev.flux_l2_accum + 0.5 * taken * (f + f_prev);
                rep.gradient_accum = prev.gradient_accum + 0.5 * taken * (g + g_prev);
                rep.dissipation_residual = rep.bf_energy + 2.0 * rep.dissipation_accum - e0;
                (d_prev, f_prev, g_prev) = (d, f, g);
                energy.push(rep);
            }
            u.check_decay(SHELL_DECAY_LIMIT)?;
            snapshots.push(u.clone());
        }
        Ok(Trajectory {
            run_id: run_id(&self.config.fingerprint(), u0),
            snapshots,
            energy,
            halvings: halvings_total,
        })
    }
}

/// First 12 hex digits of a SHA-256 over the configuration and initial data.
pub fn run_id(fingerprint: &str, u0: &Field) -> String {
    let mut h = Sha256::new();
    h.update(fingerprint.as_bytes());
    h.update(format!("{:?}", u0.grid()).as_bytes());
    for v in u0.values() {
        h.update(v.to_le_bytes());
    }
    hex::encode(h.finalize())[..12].to_string()
}

/// Convenience wrapper: build a solver on `u0`'s grid and integrate.
pub fn solve(u0: &Field, config: SolverConfig) -> Result<Trajectory> {
    Solver::new(config, *u0.grid())?.solve(u0)
}

/// `(-1)^{m-1}∇·(φ_ε(u)∇Δ^{m-1}u)` for a configuration.
pub fn rhs(u: &Field, config: &SolverConfig) -> Result<Field> {
    Solver::new(config.clone(), *u.grid())?.rhs(u)
}

/// Bernis–Friedman quantities of one field (accumulators left at zero).
pub fn bf_energies(u: &Field, m: u32) -> EnergyReport {
    let spec = u.spectrum();
    EnergyReport {
        t: u.time().unwrap_or(0.0),
        mass: integrate(u),
        bf_energy: spec.weighted_energy(m as f64 - 1.0),
        bf_lower: spec.weighted_energy(m as f64 - 2.0),
        ..EnergyReport::default()
    }
}

/// `running + dt ∫|φ_ε(u)∇Δ^{m-1}u|²` (left-endpoint form of one step).
pub fn flux_accumulate(u: &Field, config: &SolverConfig, dt: f64, running: f64) -> Result<f64> {
    let solver = Solver::new(config.clone(), *u.grid())?;
    let ev = solver.evaluate(u)?;
    let (_, flux, _) = solver.dissipation_terms(&ev);
    Ok(running + dt * flux)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InterfaceReport {
    pub t: f64,
    /// Measure of `{|u| > threshold}`.
    pub support_measure: f64,
    /// Sign changes along each coordinate axis through the center.
    pub sign_changes: Vec<usize>,
    pub min_on_k: f64,
    pub positivity_on_k: bool,
}

impl InterfaceReport {
    pub fn sign_change_count(&self) -> usize {
        self.sign_changes.iter().sum()
    }
}

/// Support, sign structure and positivity on `K = {|x| ≤ k_radius}`.
pub fn interface_report(u: &Field, threshold: f64, k_radius: f64) -> Result<InterfaceReport> {
    if !(threshold > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "threshold must be > 0, got {threshold}"
        )));
    }
    let grid = u.grid();
    let vals = u.values();
    let count = vals.iter().filter(|v| v.abs() > threshold).count();
    let m = grid.points_per_dim();
    let sign_changes = match grid.dim() {
        1 => vec![count_sign_changes(vals, threshold)],
        _ => {
            // the row and column through x = 0 (index M/2)
            let mid = m / 2;
            let row: Vec<f64> = (0..m).map(|j| vals[mid * m + j]).collect();
            let col: Vec<f64> = (0..m).map(|i| vals[i * m + mid]).collect();
            vec![
                count_sign_changes(&row, threshold),
                count_sign_changes(&col, threshold),
            ]
        }
    };
    let min_on_k = (0..grid.len())
        .filter(|&i| grid.radius(i) <= k_radius)
        .map(|i| vals[i])
        .fold(f64::INFINITY, f64::min);
    Ok(InterfaceReport {
        t: u.time().unwrap_or(0.0),
        support_measure: count as f64 * grid.cell_volume(),
        sign_changes,
        min_on_k,
        positivity_on_k: min_on_k > 0.0,
    })
}

/// The first sampled time after which every sample is positive on `K`.
/// `None` if the last sample is not positive on `K`.
pub fn eventual_positivity_time(reports: &[InterfaceReport]) -> Option<f64> {
    let last_bad = reports.iter().rposition(|r| !r.positivity_on_k);
    match last_bad {
        None => reports.first().map(|r| r.t),
        Some(i) if i + 1 < reports.len() => Some(reports[i + 1].t),
        Some(_) => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::degeneracy::DegeneracyFunction;
    use crate::gridfield::{laplacian_power, make_grid};
    use crate::kernel::phe_solve;

    fn bump(grid: GridSpec) -> Field {
        Field::from_fn(grid, |x| (-x.iter().map(|v| v * v).sum::<f64>()).exp())
    }

    fn simple(n: f64) -> RegPath {
        RegPath::new(DegeneracyFunction::rational(), n, PathVariant::Simple).unwrap()
    }

    fn full(n: f64) -> RegPath {
        RegPath::new(DegeneracyFunction::rational(), n, PathVariant::Full).unwrap()
    }

    #[test]
    fn config_validation() {
        let mut c = SolverConfig::new(2, full(0.2), 1e-3, 1e-4, 0.1);
        assert!(c.validate().is_ok());
        assert!((c.stabilization_constant() - 1.1 * (1e-3f64 / 1.001).powf(0.2) - 1.1).abs() < 1e-12);
        c.eps = 0.0;
        assert!(c.validate().is_err());
        c.eps = 1e-3;
        c.stabilization = Some(0.5);
        assert!(c.validate().is_err());
        c.stabilization = None;
        c.m = 1;
        assert!(c.validate().is_err());
        c.m = 2;
        c.snapshot_times = vec![0.2];
        assert!(c.validate().is_err());
        assert_eq!(SolverConfig::new(3, simple(0.0), 0.5, 1e-4, 1.0).stabilization_constant(), 1.0);
    }

    #[test]
    fn rhs_examples() {
        let g = make_grid(1, 12.0, 256).unwrap();
        let u = bump(g);
        // n = 0 on the simple path: φ ≡ 1
        let cfg = SolverConfig::new(2, simple(0.0), 0.5, 1e-4, 0.1);
        let r = rhs(&u, &cfg).unwrap();
        let want = laplacian_power(&u, 2).scale(-1.0);
        assert!(r.sub(&want).unwrap().max_abs() < 1e-10);
        let cfg3 = SolverConfig::new(3, simple(0.0), 0.5, 1e-4, 0.1);
        let r3 = rhs(&u, &cfg3).unwrap();
        let want3 = laplacian_power(&u, 3);
        // k^6 amplifies transform round-off at the top modes
        assert!(r3.sub(&want3).unwrap().max_abs() < 1e-10 * want3.max_abs().max(1e3));
        let cfg = SolverConfig::new(2, full(0.3), 1e-3, 1e-4, 0.1);
        assert!(rhs(&Field::constant(g, 2.0), &cfg).unwrap().max_abs() < 1e-14);
        assert!(integrate(&rhs(&u, &cfg).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn step_examples() {
        let g = make_grid(1, 12.0, 256).unwrap();
        let u = bump(g).with_time(0.0);
        let solver = Solver::new(SolverConfig::new(2, full(0.3), 1e-3, 1e-4, 0.1), g).unwrap();
        let (next, taken) = solver.step_imex(&u, 1e-4).unwrap();
        assert_eq!(taken, 1e-4);
        assert!((integrate(&next) - integrate(&u)).abs() < 1e-14);
        let (z, _) = solver.step_imex(&Field::zeros(g), 1e-3).unwrap();
        assert_eq!(z.max_abs(), 0.0);
        assert!(solver.step_imex(&u, 0.0).is_err());
    }

    #[test]
    fn one_step_error_is_second_order() {
        // n = 0 on the full path: φ ≡ 2 - ε, while c = 2.2
        let g = make_grid(1, 12.0, 256).unwrap();
        let u = bump(g).with_time(0.0);
        let eps = 0.5;
        let solver = Solver::new(SolverConfig::new(2, full(0.0), eps, 1.0, 1.0), g).unwrap();
        let err = |dt: f64| {
            let (s, _) = solver.step_imex(&u, dt).unwrap();
            let exact = phe_solve(&u, 2, (2.0 - eps) * dt).unwrap();
            s.sub(&exact).unwrap().l2_norm()
        };
        let (e1, e2, e3) = (err(1e-4), err(5e-5), err(2.5e-5));
        let p1 = (e1 / e2).log2();
        let p2 = (e2 / e3).log2();
        assert!(p1 >= 1.9 && p2 >= 1.9, "{p1} {p2}");
    }

    #[test]
    fn n_zero_matches_exact_solution() {
        let g = make_grid(1, 24.0, 256).unwrap();
        let u0 = bump(g);
        let mut cfg = SolverConfig::new(2, simple(0.0), 1e-3, 1e-3, 0.5);
        cfg.snapshot_times = vec![0.1, 0.25];
        let traj = solve(&u0, cfg).unwrap();
        assert_eq!(traj.snapshots.len(), 3);
        for s in &traj.snapshots {
            let t = s.time().unwrap();
            let exact = phe_solve(&u0, 2, t).unwrap();
            assert!(s.sub(&exact).unwrap().l2_norm() / exact.l2_norm() < 1e-12);
        }
    }

    #[test]
    fn bf_energy_routes() {
        let g = make_grid(1, 12.0, 256).unwrap();
        let u = bump(g);
        assert_eq!(bf_energies(&Field::zeros(g), 2), EnergyReport::default());
        let e3 = bf_energies(&u, 3).bf_energy;
        let lap = laplacian_power(&u, 1);
        let direct = integrate(&lap.map(|v| v * v));
        assert!((e3 - direct).abs() < 1e-12);
        let e2 = bf_energies(&u, 2);
        let by_parts = -lap.inner(&u).unwrap();
        assert!((e2.bf_energy - by_parts).abs() < 1e-12);
        assert!((e2.bf_lower - u.inner(&u).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn flux_accumulate_single_mode() {
        let g = make_grid(1, 8.0, 64).unwrap();
        let cfg = SolverConfig::new(2, simple(0.0), 1e-3, 1e-3, 0.1);
        assert_eq!(flux_accumulate(&Field::zeros(g), &cfg, 0.1, 3.0).unwrap(), 3.0);
        let k = std::f64::consts::PI / 8.0 * 3.0;
        let u = Field::from_fn(g, |x| (k * x[0]).cos());
        let f = flux_accumulate(&u, &cfg, 1.0, 0.0).unwrap();
        // ∫|∂_x u_xx|² = k^6 ∫ sin² = k^6 L
        assert!((f - k.powi(6) * 8.0).abs() < 1e-9 * f);
    }

    #[test]
    fn interface_examples() {
        let g = make_grid(1, 8.0, 64).unwrap();
        let u = Field::from_fn(g, |x| 1.0 + x[0] * x[0]);
        let r = interface_report(&u, 1e-8, 1.0).unwrap();
        assert!(r.positivity_on_k);
        assert_eq!(r.sign_change_count(), 0);
        assert!((r.support_measure - 16.0).abs() < 1e-12);
        let v = Field::from_fn(g, |x| x[0].cos());
        let r = interface_report(&v, 1e-8, 2.0).unwrap();
        assert!(!r.positivity_on_k);
        assert_eq!(r.sign_change_count(), 5);
        assert!(interface_report(&v, 0.0, 1.0).is_err());
        let g2 = make_grid(2, 8.0, 32).unwrap();
        let w = Field::from_fn(g2, |x| x[0].cos() * x[1].cos());
        assert_eq!(interface_report(&w, 1e-8, 1.0).unwrap().sign_changes, vec![5, 5]);
    }

    #[test]
    fn positivity_time_logic() {
        let mk = |t: f64, ok: bool| InterfaceReport {
            t,
            support_measure: 0.0,
            sign_changes: vec![],
            min_on_k: if ok { 1.0 } else { -1.0 },
            positivity_on_k: ok,
        };
        assert_eq!(eventual_positivity_time(&[mk(0.1, false), mk(0.2, true), mk(0.3, true)]), Some(0.2));
        assert_eq!(eventual_positivity_time(&[mk(0.1, true), mk(0.2, false)]), None);
        assert_eq!(eventual_positivity_time(&[mk(0.1, true)]), Some(0.1));
    }
}
