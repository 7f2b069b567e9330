//! Rescaled operator `𝓛 = -(-Δ)^m + (1/2m) y·∇ + N/2m` and its adjoint.
//!
//! Eigenfunctions of `𝓛` are normalized derivatives of the kernel profile;
//! eigenfunctions of `𝓛*` are polynomials built exactly from iterated
//! Laplacians of monomials. Pairings between the two families are plain `L²`
//! sums over the box.

pub mod poly;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::gridfield::{
    gradient, laplacian_power, Field, GridSpec, Spectrum, WeightSpec, SHELL_DECAY_LIMIT,
};
use crate::kernel::profile_fourier;
pub use poly::{MonomialRecord, MultiIndex, PolynomialNVar, Rational};

/// `𝓛[v]` on the grid; `y·∇v` is a physical-space product.
pub fn apply_l(field: &Field, m: u32) -> Result<Field> {
    field.check_decay(SHELL_DECAY_LIMIT)?;
    let grid = *field.grid();
    let n = grid.dim() as f64;
    let two_m = 2.0 * m as f64;
    let sign = if m.is_multiple_of(2) { -1.0 } else { 1.0 };
    // -(-Δ)^m = (-1)^{m+1} Δ^m
    let top = laplacian_power(field, m);
    let grad = gradient(field);
    let values = (0..grid.len())
        .map(|i| {
            let y = grid.point(i);
            let y_dot_grad: f64 = grad
                .components()
                .iter()
                .enumerate()
                .map(|(axis, c)| y[axis] * c[i])
                .sum();
            sign * top.values()[i] + y_dot_grad / two_m + n / two_m * field.values()[i]
        })
        .collect();
    Field::new(grid, values)
}

/// `λ_β = -|β|/2m`.
pub fn eigenvalue(beta: &MultiIndex, m: u32) -> f64 {
    -(beta.order() as f64) / (2.0 * m as f64)
}

pub fn eigenvalue_exact(beta: &MultiIndex, m: u32) -> Rational {
    Rational::new(-(beta.order() as i128), 2 * m as i128)
}

/// `ψ_β = (-1)^{|β|} D^β F / √β!` on the grid.
pub fn eigenfunction(beta: &MultiIndex, m: u32, grid: &GridSpec) -> Result<Field> {
    if beta.dim() != grid.dim() {
        return Err(Error::InvalidParameter(format!(
            "multi-index {beta} does not match grid dimension {}",
            grid.dim()
        )));
    }
    if beta.order() > 8 {
        return Err(Error::InvalidParameter(format!(
            "|β| = {} exceeds 8",
            beta.order()
        )));
    }
    let profile = profile_fourier(m, grid)?;
    let mut spec: Spectrum = profile.spectrum();
    for (axis, &k) in beta.entries().iter().enumerate() {
        for _ in 0..k {
            spec = spec.derivative(axis);
        }
    }
    let tail = spec.tail_energy_fraction();
    if tail > 1e-6 {
        return Err(Error::UnderResolved(format!(
            "under-resolved derivative: spectral tail carries {tail:.2e} of D^β F"
        )));
    }
    let sign = if beta.order().is_multiple_of(2) { 1.0 } else { -1.0 };
    let norm = sign / (beta.factorial() as f64).sqrt();
    Ok(spec.to_field().scale(norm))
}

/// `ψ*_β = (1/√β!) Σ_{j=0}^{⌊|β|/2m⌋} (1/j!) (-Δ)^{mj} y^β`.
pub fn adjoint_eigenpolynomial(beta: &MultiIndex, m: u32) -> Result<PolynomialNVar> {
    if beta.order() > 12 {
        return Err(Error::InvalidParameter(format!(
            "|β| = {} exceeds 12",
            beta.order()
        )));
    }
    let base = PolynomialNVar::monomial(beta.clone(), Rational::from_integer(1));
    let mut sum = base.clone();
    let mut term = base;
    let mut j_fact: i128 = 1;
    for j in 1..=(beta.order() / (2 * m)) {
        term = term.neg_laplacian_power(m);
        j_fact *= j as i128;
        sum = sum.add(&term.mul_rational(Rational::new(1, j_fact)));
    }
    Ok(sum.with_scale(1.0 / (beta.factorial() as f64).sqrt()))
}

/// `𝓛*[p] = -(-Δ)^m p - (1/2m) y·∇p`, exact.
pub fn apply_l_star(poly: &PolynomialNVar, m: u32) -> Result<PolynomialNVar> {
    if poly.degree() > 12 {
        return Err(Error::InvalidParameter(format!(
            "degree {} exceeds 12",
            poly.degree()
        )));
    }
    let top = poly.neg_laplacian_power(m).mul_rational(-Rational::from_integer(1));
    let drift = poly
        .euler()
        .mul_rational(Rational::new(-1, 2 * m as i128));
    Ok(top.add(&drift))
}

/// Grid samples of a polynomial.
pub fn sample_polynomial(poly: &PolynomialNVar, grid: &GridSpec) -> Field {
    Field::from_fn(*grid, |y| poly.eval(y))
}

#[derive(Clone, Debug, Serialize)]
pub struct GramMatrix {
    pub indices: Vec<MultiIndex>,
    /// `entries[i][j] = ⟨ψ_{β_i}, ψ*_{β_j}⟩`.
    pub entries: Vec<Vec<f64>>,
    /// `‖ψ_β‖` in the weighted space given to the builder.
    pub weighted_norms: Vec<f64>,
}

impl GramMatrix {
    pub fn max_off_diagonal(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, row) in self.entries.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                if i != j {
                    worst = worst.max(v.abs());
                }
            }
        }
        worst
    }

    pub fn max_diagonal_error(&self) -> f64 {
        self.entries
            .iter()
            .enumerate()
            .fold(0.0, |w, (i, row)| w.max((row[i] - 1.0).abs()))
    }
}

/// Gram matrix `⟨ψ_β, ψ*_γ⟩` for all `|β|, |γ| ≤ max_order`.
pub fn biorthogonality_matrix(
    max_order: u32,
    m: u32,
    grid: &GridSpec,
    weight: &WeightSpec,
) -> Result<GramMatrix> {
    if max_order > 4 {
        return Err(Error::InvalidParameter(format!(
            "max_order {max_order} exceeds 4"
        )));
    }
    let indices = MultiIndex::up_to_order(grid.dim(), max_order);
    let psi = indices
        .iter()
        .map(|b| eigenfunction(b, m, grid))
        .collect::<Result<Vec<_>>>()?;
    let psi_star = indices
        .iter()
        .map(|b| adjoint_eigenpolynomial(b, m).map(|p| sample_polynomial(&p, grid)))
        .collect::<Result<Vec<_>>>()?;
    let mut entries = vec![vec![0.0; indices.len()]; indices.len()];
    for (i, a) in psi.iter().enumerate() {
        for (j, b) in psi_star.iter().enumerate() {
            let prod = a.zip_with(b, |x, y| x * y)?;
            prod.check_decay(SHELL_DECAY_LIMIT)?;
            entries[i][j] = a.inner(b)?;
        }
    }
    let weighted_norms = psi
        .iter()
        .map(|p| crate::gridfield::weighted_l2_norm(p, weight))
        .collect::<Result<Vec<_>>>()?;
    Ok(GramMatrix {
        indices,
        entries,
        weighted_norms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gridfield::make_grid;
    use std::f64::consts::PI;

    fn r(n: i128) -> Rational {
        Rational::from_integer(n)
    }

    #[test]
    fn eigenvalues() {
        assert_eq!(eigenvalue(&MultiIndex::zero(1), 2), 0.0);
        assert_eq!(eigenvalue(&MultiIndex::new(vec![2, 1]), 2), -0.75);
        for m in 1..5 {
            assert_eq!(eigenvalue(&MultiIndex::new(vec![2 * m]), m), -1.0);
        }
    }

    #[test]
    fn operator_on_heat_profile() {
        let g = make_grid(1, 30.0, 256).unwrap();
        assert_eq!(apply_l(&Field::zeros(g), 2).unwrap().max_abs(), 0.0);
        let f = Field::from_fn(g, |y| (-y[0] * y[0] / 4.0).exp() / (4.0 * PI).sqrt());
        assert!(apply_l(&f, 1).unwrap().max_abs() <= 1e-8);
        let f2 = profile_fourier(2, &make_grid(1, 40.0, 512).unwrap()).unwrap();
        let res = apply_l(&f2, 2).unwrap();
        assert!(res.l2_norm() <= 1e-5 * f2.l2_norm());
    }

    #[test]
    fn heat_eigenfunction_is_hermite_weighted() {
        let g = make_grid(1, 30.0, 256).unwrap();
        let psi = eigenfunction(&MultiIndex::new(vec![1]), 1, &g).unwrap();
        // -(d/dy) e^{-y²/4}/√(4π) = y e^{-y²/4} / (2√(4π))
        let expect = Field::from_fn(g, |y| {
            y[0] * (-y[0] * y[0] / 4.0).exp() / (2.0 * (4.0 * PI).sqrt())
        });
        assert!(psi.sub(&expect).unwrap().max_abs() < 1e-12);
        let zero = eigenfunction(&MultiIndex::zero(1), 1, &g).unwrap();
        let f = profile_fourier(1, &g).unwrap();
        assert!(zero.sub(&f).unwrap().max_abs() < 1e-15);
    }

    #[test]
    fn eigen_residuals_biharmonic() {
        let g = make_grid(1, 40.0, 512).unwrap();
        for k in 0..=4 {
            let beta = MultiIndex::new(vec![k]);
            let psi = eigenfunction(&beta, 2, &g).unwrap();
            let lpsi = apply_l(&psi, 2).unwrap();
            let lam = eigenvalue(&beta, 2);
            let res = lpsi.sub(&psi.scale(lam)).unwrap().l2_norm() / psi.l2_norm();
            assert!(res <= 1e-4, "|β|={k} residual {res}");
        }
    }

    #[test]
    fn eigenfunction_guards() {
        let g = make_grid(1, 40.0, 512).unwrap();
        assert!(eigenfunction(&MultiIndex::new(vec![9]), 2, &g).is_err());
        assert!(eigenfunction(&MultiIndex::new(vec![1, 1]), 2, &g).is_err());
        // tight box: the symbol barely resolves, high derivatives leak to the tail
        let tight = make_grid(1, 40.0, 64).unwrap();
        assert!(matches!(
            eigenfunction(&MultiIndex::new(vec![8]), 2, &tight),
            Err(Error::UnderResolved(_))
        ));
    }

    #[test]
    fn adjoint_polynomials() {
        let p0 = adjoint_eigenpolynomial(&MultiIndex::zero(2), 2).unwrap();
        assert_eq!(p0.terms().len(), 1);
        assert_eq!(p0.eval(&[1.3, -0.2]), 1.0);
        let b = MultiIndex::new(vec![2, 1]);
        let p = adjoint_eigenpolynomial(&b, 2).unwrap();
        assert_eq!(p.terms().len(), 1);
        assert!((p.scale() - 1.0 / 2f64.sqrt()).abs() < 1e-15);
        // m = 1, β = (2): √2 ψ* = y² - 2
        let h2 = adjoint_eigenpolynomial(&MultiIndex::new(vec![2]), 1).unwrap();
        assert_eq!(h2.terms()[&MultiIndex::new(vec![2])], r(1));
        assert_eq!(h2.terms()[&MultiIndex::new(vec![0])], r(-2));
        let l = apply_l_star(&h2, 1).unwrap();
        assert_eq!(l, h2.mul_rational(r(-1)));
    }

    #[test]
    fn adjoint_eigen_relation_exact() {
        for m in 1..=3 {
            for dim in 1..=2 {
                for beta in MultiIndex::up_to_order(dim, 8) {
                    let p = adjoint_eigenpolynomial(&beta, m).unwrap();
                    assert_eq!(p.degree(), beta.order());
                    let lhs = apply_l_star(&p, m).unwrap();
                    let rhs = p.mul_rational(eigenvalue_exact(&beta, m));
                    assert_eq!(lhs, rhs, "m={m} β={beta}");
                }
            }
        }
        assert_eq!(
            apply_l_star(&PolynomialNVar::constant(1, r(1)), 2).unwrap(),
            PolynomialNVar::zero(1)
        );
        let p1 = adjoint_eigenpolynomial(&MultiIndex::new(vec![0, 1]), 3).unwrap();
        assert_eq!(apply_l_star(&p1, 3).unwrap(), p1.mul_rational(Rational::new(-1, 6)));
    }

    #[test]
    fn gram_matrices() {
        let w = WeightSpec::new(0.1, 2.0, 1).unwrap();
        let g1 = make_grid(1, 30.0, 256).unwrap();
        let heat = biorthogonality_matrix(4, 1, &g1, &w).unwrap();
        assert!((heat.entries[0][0] - 1.0).abs() <= 1e-6);
        assert!(heat.max_off_diagonal() <= 1e-6);
        assert!(heat.max_diagonal_error() <= 1e-6);
        assert!(heat.weighted_norms.iter().all(|v| v.is_finite()));

        let g2 = make_grid(1, 50.0, 512).unwrap();
        let wb = WeightSpec::for_order(0.1, 2, 1).unwrap();
        let bih = biorthogonality_matrix(3, 2, &g2, &wb).unwrap();
        assert!((bih.entries[0][0] - 1.0).abs() <= 1e-6);
        assert!(bih.max_off_diagonal() <= 1e-4, "{:?}", bih.entries);
        assert!(biorthogonality_matrix(5, 2, &g2, &wb).is_err());
    }
}
