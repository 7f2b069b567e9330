//! The nonlinearity `f`, its powers `f^n`, and the regularization paths.
//!
//! Two paths connect the degenerate coefficient `f^n(|u|)` to uniformly
//! parabolic problems:
//!
//! * full: `φ_ε(u) = f^n(ε) + (1-ε) f^n(√(ε²+u²))`,
//! * simple: `ψ_ε(u) = f^n(√(ε²+u²))`, with `Θ = 1 - ψ_ε`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const ADMISSIBILITY_SAMPLES: usize = 10_000;
const LOG_UNDERFLOW: f64 = -700.0;
const DEFAULT_T_MAX: f64 = 10.0;

/// Shape of `f`, as read from a config block.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FKind {
    Tanh,
    /// `t / (1 + t)`
    Rational,
    /// `1 - e^{-t}`
    ExpSaturating,
    /// `t^κ`, unbounded; `C_f` is taken as `f(t_max)`.
    Power { kappa: f64, t_max: f64 },
    /// Monotone cubic through `(knots, values)`, constant past the last knot.
    Tabulated { knots: Vec<f64>, values: Vec<f64> },
}

#[derive(Clone, Debug)]
pub struct DegeneracyFunction {
    kind: FKind,
    t_max: f64,
    bound: f64,
    slopes: Vec<f64>,
}

impl DegeneracyFunction {
    pub fn new(kind: FKind) -> Result<Self> {
        let (t_max, slopes) = match &kind {
            FKind::Power { kappa, t_max } => {
                if !(*kappa > 0.0) || !(*t_max > 0.0) {
                    return Err(Error::Inadmissible(format!(
                        "power kind needs kappa > 0 and t_max > 0, got {kappa}, {t_max}"
                    )));
                }
                (*t_max, Vec::new())
            }
            FKind::Tabulated { knots, values } => {
                let slopes = monotone_slopes(knots, values)?;
                (*knots.last().expect("checked non-empty"), slopes)
            }
            _ => (DEFAULT_T_MAX, Vec::new()),
        };
        let mut f = Self {
            kind,
            t_max,
            bound: 0.0,
            slopes,
        };
        f.bound = match &f.kind {
            FKind::Tanh | FKind::Rational | FKind::ExpSaturating => 1.0,
            FKind::Power { .. } => f.value(t_max),
            FKind::Tabulated { values, .. } => *values.last().expect("non-empty"),
        };
        f.check_admissible()?;
        Ok(f)
    }

    pub fn rational() -> Self {
        Self::new(FKind::Rational).expect("built-in kind is admissible")
    }

    pub fn tanh() -> Self {
        Self::new(FKind::Tanh).expect("built-in kind is admissible")
    }

    pub fn exp_saturating() -> Self {
        Self::new(FKind::ExpSaturating).expect("built-in kind is admissible")
    }

    pub fn kind(&self) -> &FKind {
        &self.kind
    }

    /// Upper end of the range on which monotonicity was checked.
    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    /// `C_f`.
    pub fn bound(&self) -> f64 {
        self.bound
    }

    /// True for the power kind, whose bound only holds on `[0, t_max]`.
    pub fn is_unbounded(&self) -> bool {
        matches!(self.kind, FKind::Power { .. })
    }

    fn check_admissible(&self) -> Result<()> {
        let f0 = self.value(0.0);
        if f0 != 0.0 {
            return Err(Error::Inadmissible(format!("f(0) = {f0}, expected 0")));
        }
        let mut prev = 0.0;
        for i in 1..=ADMISSIBILITY_SAMPLES {
            let t = self.t_max * i as f64 / ADMISSIBILITY_SAMPLES as f64;
            let v = self.value(t);
            if !v.is_finite() || v <= prev {
                return Err(Error::Inadmissible(format!(
                    "f not strictly increasing and positive near t = {t}"
                )));
            }
            if v > self.bound * (1.0 + 1e-12) {
                return Err(Error::Inadmissible(format!(
                    "f({t}) = {v} exceeds C_f = {}",
                    self.bound
                )));
            }
            prev = v;
        }
        Ok(())
    }

    /// `f(t)` for `t ≥ 0`; callers in hot loops pass `|u|`.
    pub fn value(&self, t: f64) -> f64 {
        match &self.kind {
            FKind::Tanh => t.tanh(),
            FKind::Rational => t / (1.0 + t),
            FKind::ExpSaturating => -(-t).exp_m1(),
            FKind::Power { kappa, .. } => t.powf(*kappa),
            FKind::Tabulated { knots, values } => hermite_eval(knots, values, &self.slopes, t),
        }
    }

    pub fn f_eval(&self, t: f64) -> Result<f64> {
        check_arg(t)?;
        Ok(self.value(t))
    }

    /// `f(t)^n` in log space; exactly 0 once `n ln f < -700`, and 1 for `n = 0`.
    pub fn pow_n(&self, n: f64, t: f64) -> f64 {
        if n == 0.0 {
            return 1.0;
        }
        let v = self.value(t);
        if v <= 0.0 {
            return 0.0;
        }
        let l = n * v.ln();
        if l < LOG_UNDERFLOW {
            0.0
        } else {
            l.exp()
        }
    }

    pub fn f_pow_n(&self, n: f64, t: f64) -> Result<f64> {
        check_arg(t)?;
        Ok(self.pow_n(n, t))
    }

    /// `f^{-1}(y)` for `y ∈ (0, C_f)`.
    pub fn inverse(&self, y: f64) -> Result<f64> {
        if !(y > 0.0 && y < self.bound) {
            return Err(Error::InvalidParameter(format!(
                "f^-1 needs a target in (0, {}), got {y}",
                self.bound
            )));
        }
        let t = match &self.kind {
            FKind::Tanh => y.atanh(),
            FKind::Rational => y / (1.0 - y),
            FKind::ExpSaturating => -(-y).ln_1p(),
            FKind::Power { kappa, .. } => y.powf(1.0 / kappa),
            FKind::Tabulated { .. } => {
                let (mut lo, mut hi) = (0.0, self.t_max);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if self.value(mid) < y {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                0.5 * (lo + hi)
            }
        };
        Ok(t)
    }
}

fn check_arg(t: f64) -> Result<()> {
    if t >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "f is evaluated at |u| ≥ 0, got {t}"
        )))
    }
}

/// Fritsch–Carlson slopes for a monotone cubic Hermite interpolant.
fn monotone_slopes(knots: &[f64], values: &[f64]) -> Result<Vec<f64>> {
    let n = knots.len();
    if n < 2 || values.len() != n {
        return Err(Error::Inadmissible(
            "tabulated f needs ≥ 2 knots and one value per knot".into(),
        ));
    }
    if knots[0] != 0.0 || values[0] != 0.0 {
        return Err(Error::Inadmissible("tabulated f must start at (0, 0)".into()));
    }
    let mut secants = Vec::with_capacity(n - 1);
    for i in 0..n - 1 {
        let h = knots[i + 1] - knots[i];
        let dv = values[i + 1] - values[i];
        if !(h > 0.0) || !(dv > 0.0) {
            return Err(Error::Inadmissible(format!(
                "tabulated f must be strictly increasing (knot {i})"
            )));
        }
        secants.push(dv / h);
    }
    let mut slopes = vec![0.0; n];
    slopes[0] = secants[0];
    slopes[n - 1] = secants[n - 2];
    for i in 1..n - 1 {
        let (a, b) = (secants[i - 1], secants[i]);
        // weighted harmonic mean keeps each cubic piece monotone
        let (h0, h1) = (knots[i] - knots[i - 1], knots[i + 1] - knots[i]);
        let (w1, w2) = (2.0 * h1 + h0, h1 + 2.0 * h0);
        slopes[i] = (w1 + w2) / (w1 / a + w2 / b);
    }
    for i in 0..n - 1 {
        let d = secants[i];
        let (a, b) = (slopes[i] / d, slopes[i + 1] / d);
        let s = a * a + b * b;
        if s > 9.0 {
            let tau = 3.0 / s.sqrt();
            slopes[i] = tau * a * d;
            slopes[i + 1] = tau * b * d;
        }
    }
    Ok(slopes)
}

fn hermite_eval(knots: &[f64], values: &[f64], slopes: &[f64], t: f64) -> f64 {
    let last = knots.len() - 1;
    if t >= knots[last] {
        return values[last];
    }
    if t <= 0.0 {
        return 0.0;
    }
    let i = knots.partition_point(|&k| k <= t) - 1;
    let h = knots[i + 1] - knots[i];
    let s = (t - knots[i]) / h;
    let (s2, s3) = (s * s, s * s * s);
    let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
    let h10 = s3 - 2.0 * s2 + s;
    let h01 = -2.0 * s3 + 3.0 * s2;
    let h11 = s3 - s2;
    h00 * values[i] + h10 * h * slopes[i] + h01 * values[i + 1] + h11 * h * slopes[i + 1]
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathVariant {
    Full,
    Simple,
}

/// A regularization path for fixed `f` and exponent `n ≥ 0`.
#[derive(Clone, Debug)]
pub struct RegPath {
    pub f: DegeneracyFunction,
    pub n: f64,
    pub variant: PathVariant,
}

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "eps must lie in (0, 1], got {eps}"
        )))
    }
}

impl RegPath {
    pub fn new(f: DegeneracyFunction, n: f64, variant: PathVariant) -> Result<Self> {
        if !(n >= 0.0) || !n.is_finite() {
            return Err(Error::InvalidParameter(format!("n must be ≥ 0, got {n}")));
        }
        Ok(Self { f, n, variant })
    }

    fn smoothed(&self, eps: f64, u: f64) -> f64 {
        self.f.pow_n(self.n, eps.hypot(u))
    }

    pub fn phi_eps(&self, eps: f64, u: f64) -> Result<f64> {
        check_eps(eps)?;
        if self.variant != PathVariant::Full {
            return Err(Error::InvalidParameter("phi_eps needs the full path".into()));
        }
        Ok(self.coefficient(eps, u))
    }

    pub fn psi_eps(&self, eps: f64, u: f64) -> Result<f64> {
        check_eps(eps)?;
        if self.variant != PathVariant::Simple {
            return Err(Error::InvalidParameter("psi_eps needs the simple path".into()));
        }
        Ok(self.coefficient(eps, u))
    }

    /// The diffusion coefficient of the chosen variant, unchecked.
    pub fn coefficient(&self, eps: f64, u: f64) -> f64 {
        match self.variant {
            PathVariant::Full => self.f.pow_n(self.n, eps) + (1.0 - eps) * self.smoothed(eps, u),
            PathVariant::Simple => self.smoothed(eps, u),
        }
    }

    /// `Θ = 1 - f^n(√(ε²+u²))`; `ε = 0` is allowed here.
    pub fn theta(&self, eps: f64, u: f64) -> f64 {
        1.0 - self.smoothed(eps, u)
    }

    /// Pointwise lower bound of the coefficient, `f^n(ε)`.
    pub fn lower_bound(&self, eps: f64) -> f64 {
        self.f.pow_n(self.n, eps)
    }

    /// Pointwise upper bound of the coefficient.
    pub fn upper_bound(&self, eps: f64) -> f64 {
        let cn = if self.n == 0.0 { 1.0 } else { self.f.bound().powf(self.n) };
        match self.variant {
            PathVariant::Full => self.f.pow_n(self.n, eps) + cn,
            PathVariant::Simple => cn,
        }
    }
}

/// `sup_{t ∈ t_grid, f(t) ≥ c0} |(1 - f^n)/n + ln f|`.
pub fn log_expansion_residual(f: &DegeneracyFunction, n: f64, t_grid: &[f64], c0: f64) -> f64 {
    t_grid
        .iter()
        .map(|&t| f.value(t.abs()))
        .filter(|&v| v >= c0)
        .map(|v| expansion_gap(v, n))
        .fold(0.0, f64::max)
}

fn expansion_gap(v: f64, n: f64) -> f64 {
    let l = v.ln();
    // 1 - e^{nl} = -expm1(nl), accurate for tiny n
    (-(n * l).exp_m1() / n + l).abs()
}

/// `∫_0^1 |(1 - f^n)/n + ln f| sin²(πt) dt`, the weak-limit surrogate.
pub fn weak_expansion_gap(f: &DegeneracyFunction, n: f64) -> f64 {
    let gl = crate::kernel::quadrature::GaussLegendre::new(16);
    gl.integrate(0.0, 1.0, 64, |t| {
        let v = f.value(t);
        let w = (std::f64::consts::PI * t).sin().powi(2);
        if v <= 0.0 {
            0.0
        } else {
            expansion_gap(v, n) * w
        }
    })
}
