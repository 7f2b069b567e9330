//! Multi-indices and exact multivariate polynomials.
//!
//! Coefficients are kept as `i128` rationals times one shared `f64` scale, so
//! operator identities can be checked exactly while the `1/√β!`
//! normalization stays a single floating factor.

use std::collections::BTreeMap;
use std::fmt;

use num_rational::Ratio;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

pub type Rational = Ratio<i128>;

/// `β ∈ N_0^N`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(entries: Vec<u32>) -> Self {
        Self(entries)
    }

    pub fn zero(dim: usize) -> Self {
        Self(vec![0; dim])
    }

    pub fn entries(&self) -> &[u32] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// `|β|`.
    pub fn order(&self) -> u32 {
        self.0.iter().sum()
    }

    /// `β! = Π β_i!`, exact while it fits in `u64` (always for `|β| ≤ 20`).
    pub fn factorial(&self) -> u64 {
        self.0
            .iter()
            .map(|&b| (1..=b as u64).product::<u64>())
            .product()
    }

    /// All indices of dimension `dim` with `|β| = order`, in lexicographic
    /// order with the first entry descending.
    pub fn all_of_order(dim: usize, order: u32) -> Vec<MultiIndex> {
        match dim {
            0 => Vec::new(),
            1 => vec![MultiIndex(vec![order])],
            _ => {
                let mut out = Vec::new();
                for first in (0..=order).rev() {
                    for rest in MultiIndex::all_of_order(dim - 1, order - first) {
                        let mut e = vec![first];
                        e.extend(rest.0);
                        out.push(MultiIndex(e));
                    }
                }
                out
            }
        }
    }

    /// All indices with `|β| ≤ max_order`, grouped by order.
    pub fn up_to_order(dim: usize, max_order: u32) -> Vec<MultiIndex> {
        (0..=max_order)
            .flat_map(|k| MultiIndex::all_of_order(dim, k))
            .collect()
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|v| v.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// `scale · Σ c_α y^α` with exact rational `c_α`.
#[derive(Clone, Debug, PartialEq)]
pub struct PolynomialNVar {
    dim: usize,
    terms: BTreeMap<MultiIndex, Rational>,
    scale: f64,
}

/// One serialized monomial.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonomialRecord {
    pub exponents: Vec<u32>,
    pub coeff: f64,
}

impl PolynomialNVar {
    pub fn zero(dim: usize) -> Self {
        Self {
            dim,
            terms: BTreeMap::new(),
            scale: 1.0,
        }
    }

    pub fn constant(dim: usize, c: Rational) -> Self {
        Self::monomial(MultiIndex::zero(dim), c)
    }

    pub fn monomial(exponent: MultiIndex, c: Rational) -> Self {
        let mut p = Self::zero(exponent.dim());
        p.add_term(exponent, c);
        p
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn with_scale(mut self, scale: f64) -> Self {
        self.scale = scale;
        self
    }

    pub fn terms(&self) -> &BTreeMap<MultiIndex, Rational> {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Maximum `|α|` over stored terms (0 for the zero polynomial).
    pub fn degree(&self) -> u32 {
        self.terms.keys().map(MultiIndex::order).max().unwrap_or(0)
    }

    fn add_term(&mut self, exponent: MultiIndex, c: Rational) {
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(exponent.clone()).or_insert_with(Rational::zero);
        *entry += c;
        if entry.is_zero() {
            self.terms.remove(&exponent);
        }
    }

    /// Sum of two polynomials sharing the same scale.
    pub fn add(&self, other: &PolynomialNVar) -> PolynomialNVar {
        assert_eq!(self.scale, other.scale, "scale mismatch");
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(e.clone(), *c);
        }
        out
    }

    pub fn mul_rational(&self, r: Rational) -> PolynomialNVar {
        let mut out = PolynomialNVar::zero(self.dim).with_scale(self.scale);
        for (e, c) in &self.terms {
            out.add_term(e.clone(), c * r);
        }
        out
    }

    /// `∂/∂y_axis`.
    pub fn derivative(&self, axis: usize) -> PolynomialNVar {
        let mut out = PolynomialNVar::zero(self.dim).with_scale(self.scale);
        for (e, c) in &self.terms {
            let k = e.0[axis];
            if k == 0 {
                continue;
            }
            let mut d = e.0.clone();
            d[axis] -= 1;
            out.add_term(MultiIndex(d), c * Rational::from_integer(k as i128));
        }
        out
    }

    pub fn laplacian(&self) -> PolynomialNVar {
        let mut out = PolynomialNVar::zero(self.dim).with_scale(self.scale);
        for axis in 0..self.dim {
            out = out.add(&self.derivative(axis).derivative(axis));
        }
        out
    }

    /// `(-Δ)^k`.
    pub fn neg_laplacian_power(&self, k: u32) -> PolynomialNVar {
        let mut out = self.clone();
        for _ in 0..k {
            out = out.laplacian().mul_rational(-Rational::one());
        }
        out
    }

    /// Euler operator `y·∇`: multiplies each monomial by its degree.
    pub fn euler(&self) -> PolynomialNVar {
        let mut out = PolynomialNVar::zero(self.dim).with_scale(self.scale);
        for (e, c) in &self.terms {
            out.add_term(e.clone(), c * Rational::from_integer(e.order() as i128));
        }
        out
    }

    pub fn eval(&self, y: &[f64]) -> f64 {
        let s: f64 = self
            .terms
            .iter()
            .map(|(e, c)| {
                let mono: f64 = e.0.iter().zip(y).map(|(&k, &v)| v.powi(k as i32)).product();
                (*c.numer() as f64 / *c.denom() as f64) * mono
            })
            .sum();
        self.scale * s
    }

    pub fn to_records(&self) -> Vec<MonomialRecord> {
        self.terms
            .iter()
            .map(|(e, c)| MonomialRecord {
                exponents: e.0.clone(),
                coeff: self.scale * (*c.numer() as f64 / *c.denom() as f64),
            })
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_records()).expect("records serialize")
    }
}
