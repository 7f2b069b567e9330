//! Periodic grid, field storage and exact spectral differential operators.
//!
//! The computational box is `[-L, L)^N` with `M` points per axis, standing in
//! for `R^N` under the assumption that every field decays to round-off well
//! inside the box. All derivatives are Fourier multipliers, so discrete
//! integration by parts holds to round-off.

mod fft;
pub mod snapshot;

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default decay limit for the boundary shell `|x| > 0.9 L`.
pub const SHELL_DECAY_LIMIT: f64 = 1e-8;

/// Periodic box `[-L, L)^N` sampled with `M` points per axis.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    dim: usize,
    half_width: f64,
    points_per_dim: usize,
}

impl GridSpec {
    pub fn new(dim: usize, half_width: f64, points_per_dim: usize) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::InvalidGrid(format!("dim must be 1 or 2, got {dim}")));
        }
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "half_width must be positive, got {half_width}"
            )));
        }
        if points_per_dim < 8 || !points_per_dim.is_multiple_of(2) {
            return Err(Error::InvalidGrid(format!(
                "points_per_dim must be even ≥ 8, got {points_per_dim}"
            )));
        }
        Ok(Self {
            dim,
            half_width,
            points_per_dim,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn points_per_dim(&self) -> usize {
        self.points_per_dim
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.half_width / self.points_per_dim as f64
    }

    /// Total number of grid points `M^N`.
    pub fn len(&self) -> usize {
        self.points_per_dim.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Volume element `dx^N`.
    pub fn cell_volume(&self) -> f64 {
        self.dx().powi(self.dim as i32)
    }

    pub fn box_volume(&self) -> f64 {
        (2.0 * self.half_width).powi(self.dim as i32)
    }

    /// Coordinate of index `j` along one axis.
    pub fn coord(&self, j: usize) -> f64 {
        -self.half_width + j as f64 * self.dx()
    }

    /// Integer wavenumber for FFT output slot `j`: `0..M/2-1, -M/2..-1`.
    pub fn wavenumber_index(&self, j: usize) -> i64 {
        let m = self.points_per_dim as i64;
        let j = j as i64;
        if j < m / 2 {
            j
        } else {
            j - m
        }
    }

    /// Sorted wavevector set `{π k / L : k = -M/2, …, M/2-1}` for one axis.
    pub fn wavevectors(&self) -> Vec<f64> {
        let m = self.points_per_dim as i64;
        (-m / 2..m / 2)
            .map(|k| PI * k as f64 / self.half_width)
            .collect()
    }

    /// Largest resolved wavevector magnitude along one axis.
    pub fn xi_max(&self) -> f64 {
        PI * (self.points_per_dim / 2) as f64 / self.half_width
    }

    fn split(&self, idx: usize) -> [usize; 2] {
        if self.dim == 1 {
            [idx, 0]
        } else {
            [idx / self.points_per_dim, idx % self.points_per_dim]
        }
    }

    /// Physical point of flat index `idx` (unused trailing components are 0).
    pub fn point(&self, idx: usize) -> [f64; 2] {
        let [i, j] = self.split(idx);
        if self.dim == 1 {
            [self.coord(i), 0.0]
        } else {
            [self.coord(i), self.coord(j)]
        }
    }

    pub fn radius(&self, idx: usize) -> f64 {
        let p = self.point(idx);
        (p[0] * p[0] + p[1] * p[1]).sqrt()
    }

    /// Wavevector of spectral slot `idx`.
    pub fn mode(&self, idx: usize) -> [f64; 2] {
        let [i, j] = self.split(idx);
        let s = PI / self.half_width;
        if self.dim == 1 {
            [s * self.wavenumber_index(i) as f64, 0.0]
        } else {
            [
                s * self.wavenumber_index(i) as f64,
                s * self.wavenumber_index(j) as f64,
            ]
        }
    }

    /// Integer wavenumbers of spectral slot `idx`.
    pub fn mode_index(&self, idx: usize) -> [i64; 2] {
        let [i, j] = self.split(idx);
        if self.dim == 1 {
            [self.wavenumber_index(i), 0]
        } else {
            [self.wavenumber_index(i), self.wavenumber_index(j)]
        }
    }

    fn is_nyquist(&self, idx: usize, axis: usize) -> bool {
        self.mode_index(idx)[axis] == -(self.points_per_dim as i64 / 2)
    }

    pub(crate) fn check_same(&self, other: &GridSpec) -> Result<()> {
        if self != other {
            return Err(Error::GridMismatch(format!("{self:?} vs {other:?}")));
        }
        Ok(())
    }
}

/// Convenience wrapper mirroring the grid constructor.
pub fn make_grid(dim: usize, half_width: f64, points_per_dim: usize) -> Result<GridSpec> {
    GridSpec::new(dim, half_width, points_per_dim)
}

/// Real scalar field sampled on a [`GridSpec`].
#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    grid: GridSpec,
    values: Vec<f64>,
    time: Option<f64>,
}

impl Field {
    pub fn new(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("field values".into()));
        }
        Ok(Self {
            grid,
            values,
            time: None,
        })
    }

    // Internal constructor for values produced by operators on finite input.
    pub(crate) fn from_parts(grid: GridSpec, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self {
            grid,
            values,
            time: None,
        }
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Self::from_parts(grid, vec![0.0; grid.len()])
    }

    pub fn constant(grid: GridSpec, c: f64) -> Self {
        Self::from_parts(grid, vec![c; grid.len()])
    }

    /// Samples `f(x)` at every grid point; `x` has `dim` components.
    pub fn from_fn(grid: GridSpec, f: impl Fn(&[f64]) -> f64) -> Self {
        let values = (0..grid.len())
            .map(|idx| {
                let p = grid.point(idx);
                f(&p[..grid.dim()])
            })
            .collect();
        Self::from_parts(grid, values)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn time(&self) -> Option<f64> {
        self.time
    }

    pub fn with_time(mut self, t: f64) -> Self {
        self.time = Some(t);
        self
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field::from_parts(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_with(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Result<Field> {
        self.grid.check_same(&other.grid)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Ok(Field::from_parts(self.grid, values))
    }

    pub fn sub(&self, other: &Field) -> Result<Field> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn add(&self, other: &Field) -> Result<Field> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn scale(&self, s: f64) -> Field {
        self.map(|v| s * v)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `⟨u, v⟩ = dx^N Σ u v`.
    pub fn inner(&self, other: &Field) -> Result<f64> {
        self.grid.check_same(&other.grid)?;
        let s: f64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .sum();
        Ok(s * self.grid.cell_volume())
    }

    pub fn l2_norm(&self) -> f64 {
        let s: f64 = self.values.iter().map(|v| v * v).sum();
        (s * self.grid.cell_volume()).sqrt()
    }

    /// Max of `|u|` over the shell `|x| > 0.9 L`.
    pub fn boundary_shell_max(&self) -> f64 {
        let cut = 0.9 * self.grid.half_width;
        (0..self.grid.len())
            .filter(|&i| self.grid.radius(i) > cut)
            .fold(0.0, |m, i| m.max(self.values[i].abs()))
    }

    pub fn check_decay(&self, limit: f64) -> Result<()> {
        let max_abs = self.boundary_shell_max();
        if max_abs >= limit {
            return Err(Error::DecayViolated { max_abs, limit });
        }
        Ok(())
    }

    pub fn spectrum(&self) -> Spectrum {
        Spectrum {
            grid: self.grid,
            coeffs: fft::forward(&self.grid, &self.values),
        }
    }
}

/// `N` real component arrays on a common grid.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    grid: GridSpec,
    components: Vec<Vec<f64>>,
}

impl VectorField {
    pub fn new(grid: GridSpec, components: Vec<Vec<f64>>) -> Result<Self> {
        if components.len() != grid.dim() {
            return Err(Error::GridMismatch(format!(
                "{} components for a {}-D grid",
                components.len(),
                grid.dim()
            )));
        }
        if components.iter().any(|c| c.len() != grid.len()) {
            return Err(Error::GridMismatch("component length".into()));
        }
        if components.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("vector field".into()));
        }
        Ok(Self { grid, components })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn components(&self) -> &[Vec<f64>] {
        &self.components
    }

    /// Pointwise product with a scalar field.
    pub fn scaled_by(&self, s: &Field) -> Result<VectorField> {
        self.grid.check_same(s.grid())?;
        let components = self
            .components
            .iter()
            .map(|c| c.iter().zip(s.values()).map(|(a, b)| a * b).collect())
            .collect();
        Ok(VectorField {
            grid: self.grid,
            components,
        })
    }

    /// Pointwise `|v|^2` as a scalar field.
    pub fn norm_sq(&self) -> Field {
        let mut out = vec![0.0; self.grid.len()];
        for c in &self.components {
            for (o, v) in out.iter_mut().zip(c) {
                *o += v * v;
            }
        }
        Field::from_parts(self.grid, out)
    }

    pub fn inner(&self, other: &VectorField) -> Result<f64> {
        self.grid.check_same(&other.grid)?;
        let s: f64 = self
            .components
            .iter()
            .zip(&other.components)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>())
            .sum();
        Ok(s * self.grid.cell_volume())
    }
}

/// Fourier coefficients of a real field (unnormalized forward transform).
#[derive(Clone, Debug)]
pub struct Spectrum {
    grid: GridSpec,
    coeffs: Vec<Complex64>,
}

impl Spectrum {
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub(crate) fn from_coeffs(grid: GridSpec, coeffs: Vec<Complex64>) -> Spectrum {
        debug_assert_eq!(coeffs.len(), grid.len());
        Spectrum { grid, coeffs }
    }

    pub(crate) fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    /// Builds the field `(2π)^{-N} ∫ g(ξ) e^{iξ·x} dξ` from a radial-or-not
    /// real symbol `g`, discretized on the box modes.
    pub fn from_symbol(grid: GridSpec, g: impl Fn([f64; 2]) -> f64) -> Spectrum {
        let n = grid.dim() as i32;
        let norm = grid.len() as f64 / (2.0 * grid.half_width()).powi(n);
        let coeffs = (0..grid.len())
            .map(|idx| {
                let [k0, k1] = grid.mode_index(idx);
                // grid starts at -L: e^{-iξL} = (-1)^k per axis
                let sign = if (k0 + k1).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
                Complex64::new(sign * norm * g(grid.mode(idx)), 0.0)
            })
            .collect();
        Spectrum { grid, coeffs }
    }

    pub fn to_field(&self) -> Field {
        Field::from_parts(self.grid, fft::inverse_real(&self.grid, &self.coeffs))
    }

    /// Multiplies every coefficient by a real symbol of the wavevector.
    pub fn apply(&self, mut symbol: impl FnMut([f64; 2]) -> f64) -> Spectrum {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(idx, c)| c * symbol(self.grid.mode(idx)))
            .collect();
        Spectrum {
            grid: self.grid,
            coeffs,
        }
    }

    /// Multiplies by `iξ_axis`; the Nyquist slot is dropped so the result
    /// stays the transform of a real field.
    pub fn derivative(&self, axis: usize) -> Spectrum {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(idx, c)| {
                if self.grid.is_nyquist(idx, axis) {
                    Complex64::new(0.0, 0.0)
                } else {
                    c * Complex64::new(0.0, self.grid.mode(idx)[axis])
                }
            })
            .collect();
        Spectrum {
            grid: self.grid,
            coeffs,
        }
    }

    pub fn add_assign(&mut self, other: &Spectrum) {
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a += b;
        }
    }

    /// Zeroes modes with `|k_i| > M/3` on any axis (2/3 rule).
    pub fn dealias(&mut self) {
        let cut = (self.grid.points_per_dim() / 3) as i64;
        for idx in 0..self.grid.len() {
            let k = self.grid.mode_index(idx);
            if k[0].abs() > cut || k[1].abs() > cut {
                self.coeffs[idx] = Complex64::new(0.0, 0.0);
            }
        }
    }

    /// Fraction of `Σ|c|^2` carried by modes outside the 2/3 band.
    pub fn tail_energy_fraction(&self) -> f64 {
        let cut = (self.grid.points_per_dim() / 3) as i64;
        let mut total = 0.0;
        let mut tail = 0.0;
        for (idx, c) in self.coeffs.iter().enumerate() {
            let e = c.norm_sqr();
            total += e;
            let k = self.grid.mode_index(idx);
            if k[0].abs() > cut || k[1].abs() > cut {
                tail += e;
            }
        }
        if total == 0.0 {
            0.0
        } else {
            tail / total
        }
    }

    /// `∫ |ξ|^{2p} |û|^2` expressed as a physical-space integral (Parseval).
    pub fn weighted_energy(&self, p: f64) -> f64 {
        let scale = self.grid.cell_volume() / self.grid.len() as f64;
        let s: f64 = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(idx, c)| {
                let xi = self.grid.mode(idx);
                let k2 = xi[0] * xi[0] + xi[1] * xi[1];
                let w = if p == 0.0 { 1.0 } else { k2.powf(p) };
                w * c.norm_sqr()
            })
            .sum();
        s * scale
    }
}

fn k2(xi: [f64; 2]) -> f64 {
    xi[0] * xi[0] + xi[1] * xi[1]
}

/// `Δ^k u` via the multiplier `(-|ξ|^2)^k`.
pub fn laplacian_power(field: &Field, k: u32) -> Field {
    if k == 0 {
        return field.clone();
    }
    let sign = if k.is_multiple_of(2) { 1.0 } else { -1.0 };
    field
        .spectrum()
        .apply(|xi| sign * k2(xi).powi(k as i32))
        .to_field()
}

pub fn gradient(field: &Field) -> VectorField {
    let spec = field.spectrum();
    let components = (0..field.grid().dim())
        .map(|axis| spec.derivative(axis).to_field().into_values())
        .collect();
    VectorField {
        grid: *field.grid(),
        components,
    }
}

/// Spectral gradient of an already transformed field.
pub fn gradient_of(spec: &Spectrum) -> VectorField {
    let components = (0..spec.grid().dim())
        .map(|axis| spec.derivative(axis).to_field().into_values())
        .collect();
    VectorField {
        grid: *spec.grid(),
        components,
    }
}

pub fn divergence(vfield: &VectorField) -> Field {
    divergence_spectrum(vfield, false).to_field()
}

/// Transform of `∇·v`, optionally dealiasing each component first.
pub(crate) fn divergence_spectrum(vfield: &VectorField, dealias: bool) -> Spectrum {
    let grid = *vfield.grid();
    let mut acc: Option<Spectrum> = None;
    for (axis, comp) in vfield.components().iter().enumerate() {
        let mut s = Spectrum {
            grid,
            coeffs: fft::forward(&grid, comp),
        };
        if dealias {
            s.dealias();
        }
        let d = s.derivative(axis);
        match acc.as_mut() {
            Some(a) => a.add_assign(&d),
            None => acc = Some(d),
        }
    }
    acc.expect("grid dim ≥ 1")
}

/// `dx^N Σ u`.
pub fn integrate(field: &Field) -> f64 {
    field.values().iter().sum::<f64>() * field.grid().cell_volume()
}

/// Exponential weight `e^{sign·a|x|^α}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightSpec {
    pub a: f64,
    pub alpha: f64,
    pub sign: i8,
}

impl WeightSpec {
    pub fn new(a: f64, alpha: f64, sign: i8) -> Result<Self> {
        if !(a > 0.0) {
            return Err(Error::InvalidParameter(format!("weight a must be > 0, got {a}")));
        }
        if !(alpha > 1.0 && alpha <= 2.0) {
            return Err(Error::InvalidParameter(format!(
                "weight alpha must lie in (1, 2], got {alpha}"
            )));
        }
        if sign != 1 && sign != -1 {
            return Err(Error::InvalidParameter("weight sign must be ±1".into()));
        }
        Ok(Self { a, alpha, sign })
    }

    /// Weight `ρ` with `α = 2m/(2m-1)`.
    pub fn for_order(a: f64, m: u32, sign: i8) -> Result<Self> {
        let two_m = 2.0 * m as f64;
        Self::new(a, two_m / (two_m - 1.0), sign)
    }

    pub fn value(&self, r: f64) -> f64 {
        (self.sign as f64 * self.a * r.powf(self.alpha)).exp()
    }
}

/// `(∫ |u|^2 e^{sign·a|x|^α} dx)^{1/2}`.
pub fn weighted_l2_norm(field: &Field, weight: &WeightSpec) -> Result<f64> {
    let grid = field.grid();
    let exponent = weight.a * grid.half_width().powf(weight.alpha);
    if weight.sign > 0 && exponent > 600.0 {
        return Err(Error::WeightOverflow(exponent));
    }
    let s: f64 = field
        .values()
        .iter()
        .enumerate()
        .map(|(i, v)| v * v * weight.value(grid.radius(i)))
        .sum();
    Ok((s * grid.cell_volume()).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid1() -> GridSpec {
        make_grid(1, 20.0, 256).unwrap()
    }

    fn gaussian(grid: GridSpec) -> Field {
        Field::from_fn(grid, |x| (-x.iter().map(|v| v * v).sum::<f64>()).exp())
    }

    #[test]
    fn grid_construction() {
        let g = grid1();
        assert_eq!(g.dx(), 0.15625);
        assert_eq!(make_grid(2, 10.0, 128).unwrap().len(), 16384);
        let err = make_grid(1, 20.0, 7).unwrap_err().to_string();
        assert!(err.contains("points_per_dim must be even ≥ 8"), "{err}");
        assert!(make_grid(1, -1.0, 64).is_err());
        assert!(make_grid(3, 1.0, 64).is_err());
        let w = g.wavevectors();
        assert_eq!(w.len(), 256);
        assert!((w[0] + PI * 128.0 / 20.0).abs() < 1e-12);
        assert!((w[255] - PI * 127.0 / 20.0).abs() < 1e-12);
    }

    #[test]
    fn laplacian_identity_and_eigenfunction() {
        let g = grid1();
        let u = gaussian(g);
        assert_eq!(laplacian_power(&u, 0), u);
        let l = 20.0;
        let s = Field::from_fn(g, |x| (PI * x[0] / l).sin());
        let ls = laplacian_power(&s, 1);
        let expect = s.scale(-(PI / l).powi(2));
        assert!(ls.sub(&expect).unwrap().max_abs() <= 1e-10);
    }

    #[test]
    fn bilaplacian_of_gaussian_matches_symbolic() {
        // d^4/dx^4 e^{-x^2} = (12 - 48x^2 + 16x^4) e^{-x^2}
        let g = grid1();
        let u = gaussian(g);
        let d4 = laplacian_power(&u, 2);
        let expect = Field::from_fn(g, |x| {
            let x2 = x[0] * x[0];
            (12.0 - 48.0 * x2 + 16.0 * x2 * x2) * (-x2).exp()
        });
        assert!(d4.sub(&expect).unwrap().max_abs() <= 1e-6);
    }

    #[test]
    fn gradient_divergence() {
        let g = make_grid(2, 10.0, 128).unwrap();
        let c = Field::constant(g, 3.0);
        assert!(gradient(&c).norm_sq().max_abs() < 1e-24);
        let u = Field::from_fn(g, |x| (-(x[0] - 0.5).powi(2) - 2.0 * x[1] * x[1]).exp());
        let dg = divergence(&gradient(&u));
        let lap = laplacian_power(&u, 1);
        assert!(dg.sub(&lap).unwrap().max_abs() <= 1e-12);
        let v = VectorField::new(
            g,
            vec![
                Field::from_fn(g, |x| (PI * x[0] / 10.0).cos() + x[1].sin() * 0.0)
                    .into_values(),
                gaussian(g).into_values(),
            ],
        )
        .unwrap();
        assert!(integrate(&divergence(&v)).abs() <= 1e-12);
    }

    #[test]
    fn integrals() {
        let g = grid1();
        assert!((integrate(&Field::constant(g, 2.5)) - 100.0).abs() < 1e-12);
        assert!((integrate(&gaussian(g)) - PI.sqrt()).abs() < 1e-10);
    }

    #[test]
    fn weighted_norms() {
        let g = grid1();
        let w = WeightSpec::new(0.25, 2.0, 1).unwrap();
        assert_eq!(weighted_l2_norm(&Field::zeros(g), &w).unwrap(), 0.0);
        // ∫ e^{-2x^2} e^{x^2/4} dx = sqrt(π / 1.75)
        let n = weighted_l2_norm(&gaussian(g), &w).unwrap();
        assert!((n * n - (PI / 1.75).sqrt()).abs() < 1e-10);
        let one = Field::constant(g, 1.0);
        let mut prev = f64::INFINITY;
        for a in [0.01, 0.1, 1.0, 10.0] {
            let v = weighted_l2_norm(&one, &WeightSpec::new(a, 1.5, -1).unwrap()).unwrap();
            assert!(v < prev);
            prev = v;
        }
        let big = WeightSpec::new(5.0, 2.0, 1).unwrap();
        assert!(matches!(
            weighted_l2_norm(&one, &big),
            Err(Error::WeightOverflow(_))
        ));
        assert!(WeightSpec::new(1.0, 2.5, 1).is_err());
    }

    #[test]
    fn decay_shell() {
        let g = grid1();
        assert!(gaussian(g).check_decay(SHELL_DECAY_LIMIT).is_ok());
        assert!(Field::constant(g, 1.0).check_decay(SHELL_DECAY_LIMIT).is_err());
    }

    #[test]
    fn symbol_construction_gives_gaussian() {
        let g = make_grid(1, 30.0, 256).unwrap();
        let f = Spectrum::from_symbol(g, |xi| (-(xi[0] * xi[0])).exp()).to_field();
        let expect = Field::from_fn(g, |x| (-x[0] * x[0] / 4.0).exp() / (4.0 * PI).sqrt());
        assert!(f.sub(&expect).unwrap().max_abs() < 1e-12);
    }
}
