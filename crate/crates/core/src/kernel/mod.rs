//! Polyharmonic heat kernel.
//!
//! The rescaled profile `F_{m,N}` is computed two independent ways: radial
//! Bessel quadrature of `e^{-s^{2m}}` and the discrete inverse Fourier
//! transform of the same symbol on the periodic grid. The fundamental solution
//! and the exact solution operator of `u_t = -(-Δ)^m u` are Fourier
//! multipliers.

pub mod bessel;
pub mod quadrature;

use std::f64::consts::PI;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gridfield::{Field, GridSpec, Spectrum, SHELL_DECAY_LIMIT};
use quadrature::GaussLegendre;

/// Order of each Gauss–Legendre panel.
const PANEL_ORDER: usize = 16;
/// Tolerance between the `n` and `2n` node results.
const DOUBLING_TOL: f64 = 1e-8;
/// Radius substituted for `r = 0`.
const R_ORIGIN: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub s_max: f64,
    /// Base node count; the effective count grows with `r · s_max`.
    pub nodes: usize,
}

impl QuadratureSpec {
    /// `s_max = 2 · 40^{1/2m}`, 64 base nodes.
    pub fn default_for(m: u32) -> Self {
        Self {
            s_max: 2.0 * 40f64.powf(1.0 / (2.0 * m as f64)),
            nodes: 64,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    /// Product `Cω` of the envelope bound.
    pub c: f64,
    pub a: f64,
    pub alpha: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct KernelProfile {
    pub m: u32,
    pub dim: usize,
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
    pub quadrature: QuadratureSpec,
    pub decay_fit: Option<DecayFit>,
}

impl KernelProfile {
    pub fn sign_changes(&self) -> usize {
        count_sign_changes(&self.values, 1e-14)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "# m={} N={} s_max={} nodes={}",
            self.m, self.dim, self.quadrature.s_max, self.quadrature.nodes
        );
        s.push_str("r,F\n");
        for (r, f) in self.radii.iter().zip(&self.values) {
            let _ = writeln!(s, "{r},{f}");
        }
        if let Some(fit) = &self.decay_fit {
            let _ = writeln!(s, "# fit C={} a={} alpha={}", fit.c, fit.a, fit.alpha);
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let bad = |msg: &str| Error::Format(format!("profile csv: {msg}"));
        let mut lines = text.lines();
        let head = lines.next().ok_or_else(|| bad("empty"))?;
        let kv = parse_kv(head.strip_prefix("# ").ok_or_else(|| bad("missing header"))?);
        let get = |k: &str| kv.iter().find(|(a, _)| a == k).map(|(_, v)| v.clone());
        let num = |k: &str| -> Result<f64> {
            get(k)
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| bad(&format!("header key {k}")))
        };
        let m = num("m")? as u32;
        let dim = num("N")? as usize;
        let quadrature = QuadratureSpec {
            s_max: num("s_max")?,
            nodes: num("nodes")? as usize,
        };
        if lines.next() != Some("r,F") {
            return Err(bad("missing column line"));
        }
        let mut radii = Vec::new();
        let mut values = Vec::new();
        let mut decay_fit = None;
        for line in lines {
            if let Some(fit) = line.strip_prefix("# fit ") {
                let kv = parse_kv(fit);
                let val = |k: &str| -> Result<f64> {
                    kv.iter()
                        .find(|(a, _)| a == k)
                        .and_then(|(_, v)| v.parse().ok())
                        .ok_or_else(|| bad("fit line"))
                };
                decay_fit = Some(DecayFit {
                    c: val("C")?,
                    a: val("a")?,
                    alpha: val("alpha")?,
                });
                continue;
            }
            let (r, f) = line.split_once(',').ok_or_else(|| bad("row"))?;
            radii.push(r.parse().map_err(|_| bad("radius"))?);
            values.push(f.parse().map_err(|_| bad("value"))?);
        }
        Ok(Self {
            m,
            dim,
            radii,
            values,
            quadrature,
            decay_fit,
        })
    }
}

fn parse_kv(s: &str) -> Vec<(String, String)> {
    s.split_whitespace()
        .filter_map(|t| t.split_once('='))
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}

pub(crate) fn count_sign_changes(values: &[f64], floor: f64) -> usize {
    let mut last = 0.0f64;
    let mut count = 0;
    for &v in values {
        if v.abs() <= floor {
            continue;
        }
        if last != 0.0 && v.signum() != last.signum() {
            count += 1;
        }
        last = v;
    }
    count
}

/// Normalization of the radial transform: `(2π)^{-N/2}`.
fn radial_norm(dim: usize) -> f64 {
    (2.0 * PI).powf(-(dim as f64) / 2.0)
}

/// `F(r)` at one radius via composite Gauss–Legendre with node doubling.
pub fn profile_at(m: u32, dim: usize, r: f64, quad: &QuadratureSpec) -> Result<f64> {
    let r = if r == 0.0 { R_ORIGIN } else { r };
    let gl = GaussLegendre::new(PANEL_ORDER);
    let two_m = 2 * m as i32;
    let integrand = |s: f64| (-s.powi(two_m)).exp() * bessel::radial_kernel(dim, r * s);
    // one panel per half oscillation of the kernel on top of the base count
    let base = quad.nodes.div_ceil(PANEL_ORDER).max(1);
    let panels = base + (r * quad.s_max / PI).ceil() as usize;
    let coarse = gl.integrate(0.0, quad.s_max, panels, integrand);
    let fine = gl.integrate(0.0, quad.s_max, 2 * panels, integrand);
    let residual = (fine - coarse).abs();
    if residual > DOUBLING_TOL {
        return Err(Error::Quadrature { radius: r, residual });
    }
    Ok(radial_norm(dim) * r.powi(1 - dim as i32) * fine)
}

fn check_inputs(m: u32, quad: &QuadratureSpec) -> Result<()> {
    if m < 1 {
        return Err(Error::InvalidParameter("m must be ≥ 1".into()));
    }
    if !(quad.s_max.powi(2 * m as i32) > 16.0 * 10f64.ln()) {
        return Err(Error::InvalidParameter(format!(
            "s_max = {} leaves e^{{-s^{{2m}}}} above 1e-16",
            quad.s_max
        )));
    }
    Ok(())
}

/// Tabulates `F_{m,N}` at `radii` by Bessel quadrature.
pub fn profile_bessel(
    m: u32,
    dim: usize,
    radii: &[f64],
    quadrature: QuadratureSpec,
) -> Result<KernelProfile> {
    check_inputs(m, &quadrature)?;
    if radii.iter().any(|&r| r < 0.0 || !r.is_finite()) {
        return Err(Error::InvalidParameter("radii must be non-negative".into()));
    }
    let values = radii
        .iter()
        .map(|&r| profile_at(m, dim, r, &quadrature))
        .collect::<Result<Vec<_>>>()?;
    Ok(KernelProfile {
        m,
        dim,
        radii: radii.to_vec(),
        values,
        quadrature,
        decay_fit: None,
    })
}

/// `∫_{R^N} F` from the Bessel route: radial Gauss–Legendre over `[0, r_max]`.
pub fn bessel_profile_mass(m: u32, dim: usize, r_max: f64, quad: QuadratureSpec) -> Result<f64> {
    check_inputs(m, &quad)?;
    let gl = GaussLegendre::new(PANEL_ORDER);
    let panels = (r_max * 2.0).ceil() as usize;
    let shell = match dim {
        1 => 2.0,
        2 => 2.0 * PI,
        _ => return Err(Error::InvalidParameter("dim must be 1 or 2".into())),
    };
    let mut err = None;
    let v = gl.integrate(0.0, r_max, panels, |r| match profile_at(m, dim, r, &quad) {
        Ok(f) => f * r.powi(dim as i32 - 1),
        Err(e) => {
            err.get_or_insert(e);
            0.0
        }
    });
    match err {
        Some(e) => Err(e),
        None => Ok(shell * v),
    }
}

fn symbol_resolved(m: u32, grid: &GridSpec, t: f64) -> bool {
    (grid.xi_max().powi(2 * m as i32) * t) > 16.0 * 10f64.ln()
}

/// `F_{m,N}` on the grid as the inverse transform of `(2π)^{-N} e^{-|ξ|^{2m}}`.
pub fn profile_fourier(m: u32, grid: &GridSpec) -> Result<Field> {
    if m < 1 {
        return Err(Error::InvalidParameter("m must be ≥ 1".into()));
    }
    if !symbol_resolved(m, grid, 1.0) {
        return Err(Error::UnderResolved(format!(
            "e^{{-ξ_max^{{2m}}}} ≥ 1e-16 with ξ_max = {:.3}",
            grid.xi_max()
        )));
    }
    Ok(Spectrum::from_symbol(*grid, |xi| {
        (-(xi[0] * xi[0] + xi[1] * xi[1]).powi(m as i32)).exp()
    })
    .to_field())
}

/// `𝓗(x, t) = t^{-N/2m} F(x t^{-1/2m})`, built from the symbol
/// `e^{-|ξ|^{2m} t}`.
pub fn fundamental_solution(m: u32, grid: &GridSpec, t: f64) -> Result<Field> {
    if !(t > 0.0) {
        return Err(Error::InvalidParameter(format!("t must be > 0, got {t}")));
    }
    let scale = t.powf(1.0 / (2.0 * m as f64));
    if grid.dx() > 0.5 * scale {
        return Err(Error::UnderResolved(format!(
            "dx = {} exceeds half the kernel scale {scale:.3e}",
            grid.dx()
        )));
    }
    let h = Spectrum::from_symbol(*grid, |xi| {
        (-(xi[0] * xi[0] + xi[1] * xi[1]).powi(m as i32) * t).exp()
    })
    .to_field()
    .with_time(t);
    h.check_decay(SHELL_DECAY_LIMIT)?;
    Ok(h)
}

/// Exact solution operator of `u_t = -(-Δ)^m u` with the symbol cached.
#[derive(Clone, Debug)]
pub struct PhSolutionOperator {
    grid: GridSpec,
    m: u32,
    symbol: Vec<f64>,
}

impl PhSolutionOperator {
    pub fn new(grid: GridSpec, m: u32) -> Self {
        let symbol = (0..grid.len())
            .map(|idx| {
                let xi = grid.mode(idx);
                (xi[0] * xi[0] + xi[1] * xi[1]).powi(m as i32)
            })
            .collect();
        Self { grid, m, symbol }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    /// `|ξ|^{2m}` per spectral slot.
    pub fn symbol(&self) -> &[f64] {
        &self.symbol
    }

    pub fn solve(&self, u0: &Field, t: f64) -> Result<Field> {
        self.grid.check_same(u0.grid())?;
        if !(t >= 0.0) {
            return Err(Error::InvalidParameter(format!("t must be ≥ 0, got {t}")));
        }
        u0.check_decay(SHELL_DECAY_LIMIT)?;
        let t0 = u0.time().unwrap_or(0.0);
        if t == 0.0 {
            return Ok(u0.clone().with_time(t0));
        }
        let spec = u0.spectrum();
        let mut idx = 0;
        let out = spec.apply(|_| {
            let v = (-self.symbol[idx] * t).exp();
            idx += 1;
            v
        });
        Ok(out.to_field().with_time(t0 + t))
    }
}

/// Solution of the polyharmonic heat equation at time `t` from `u0`.
pub fn phe_solve(u0: &Field, m: u32, t: f64) -> Result<Field> {
    PhSolutionOperator::new(*u0.grid(), m).solve(u0, t)
}

/// Fits `ln|F| ≈ ln C - a r^α` over the outer envelope of the profile.
///
/// For an oscillating profile the envelope is the set of local maxima of
/// `|F|`; a single-signed profile is its own envelope. Only samples with
/// `1e-12 < |F| < 1e-2 max|F|` enter the fit.
pub fn decay_fit(profile: &KernelProfile) -> Result<DecayFit> {
    let abs: Vec<f64> = profile.values.iter().map(|v| v.abs()).collect();
    let peak = abs.iter().copied().fold(0.0, f64::max);
    let in_window = |v: f64| v > 1e-12 && v < 1e-2 * peak;
    let oscillating = profile.sign_changes() > 0;
    let mut pts: Vec<(f64, f64)> = Vec::new();
    for i in 0..abs.len() {
        if !in_window(abs[i]) {
            continue;
        }
        if oscillating {
            if i == 0 || i + 1 == abs.len() || abs[i] < abs[i - 1] || abs[i] < abs[i + 1] {
                continue;
            }
        } else if i % 10 != 0 {
            continue;
        }
        pts.push((profile.radii[i], abs[i].ln()));
    }
    if pts.len() < 5 {
        return Err(Error::InsufficientDecay(pts.len()));
    }
    let fit_for = |alpha: f64| -> (f64, f64, f64) {
        // least squares for y = c0 - a x with x = r^alpha
        let n = pts.len() as f64;
        let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
        for &(r, y) in &pts {
            let x = r.powf(alpha);
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
        }
        let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        let c0 = (sy - slope * sx) / n;
        let rss: f64 = pts
            .iter()
            .map(|&(r, y)| (c0 + slope * r.powf(alpha) - y).powi(2))
            .sum();
        (c0, -slope, rss)
    };
    let mut best = (f64::INFINITY, 0.0, 0.0, 0.0);
    let steps = 3000;
    for k in 0..=steps {
        let alpha = 1.0 + 1.5 * k as f64 / steps as f64;
        let (c0, a, rss) = fit_for(alpha);
        if rss < best.0 {
            best = (rss, alpha, c0, a);
        }
    }
    // golden-section polish around the grid minimum
    let (mut lo, mut hi) = (best.1 - 5e-4, best.1 + 5e-4);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..60 {
        let x1 = hi - g * (hi - lo);
        let x2 = lo + g * (hi - lo);
        if fit_for(x1).2 < fit_for(x2).2 {
            hi = x2;
        } else {
            lo = x1;
        }
    }
    let alpha = 0.5 * (lo + hi);
    let (c0, a, rss) = fit_for(alpha);
    let (alpha, c0, a) = if rss <= best.0 {
        (alpha, c0, a)
    } else {
        (best.1, best.2, best.3)
    };
    Ok(DecayFit {
        c: c0.exp(),
        a,
        alpha,
    })
}

/// Radii `0, h, 2h, …` up to and including `r_max`.
pub fn uniform_radii(r_max: f64, h: f64) -> Vec<f64> {
    let n = (r_max / h).round() as usize;
    (0..=n).map(|i| i as f64 * h).collect()
}

/// Outer radius used for decay tabulation of `F_{m,1}`.
pub fn decay_range(m: u32) -> f64 {
    match m {
        1 => 12.0,
        2 => 40.0,
        _ => 75.0,
    }
}
