//! Bessel functions of the first kind for the orders the kernel needs:
//! half-integers through closed trigonometric forms and non-negative
//! integers through the power series (z ≤ 12) or the Hankel expansion.

use std::f64::consts::PI;

const SERIES_LIMIT: f64 = 12.0;

/// `J_n(z)` for integer `n ≥ 0`, `z ≥ 0`.
pub fn bessel_j_int(n: u32, z: f64) -> f64 {
    if z <= SERIES_LIMIT {
        series(n, z)
    } else {
        hankel(n, z)
    }
}

fn series(n: u32, z: f64) -> f64 {
    let h = 0.5 * z;
    let mut term = 1.0;
    for k in 1..=n {
        term *= h / k as f64;
    }
    let mut sum = term;
    let h2 = h * h;
    let mut k = 1u32;
    loop {
        term *= -h2 / (k as f64 * (k + n) as f64);
        sum += term;
        if term.abs() <= 1e-18 * sum.abs().max(1e-300) && k > 2 {
            break;
        }
        k += 1;
        if k > 200 {
            break;
        }
    }
    sum
}

fn hankel(n: u32, z: f64) -> f64 {
    let mu = 4.0 * (n as f64) * (n as f64);
    let mut p = 0.0;
    let mut q = 0.0;
    let mut a: f64 = 1.0; // a_k / z^k
    let mut prev = f64::INFINITY;
    for k in 0..60u32 {
        if a.abs() > prev {
            break;
        }
        match k % 4 {
            0 => p += a,
            1 => q += a,
            2 => p -= a,
            _ => q -= a,
        }
        prev = a.abs();
        if prev < 1e-17 {
            break;
        }
        let j = (2 * k + 1) as f64;
        a *= (mu - j * j) / ((k + 1) as f64 * 8.0 * z);
    }
    let chi = z - (0.5 * n as f64 + 0.25) * PI;
    (2.0 / (PI * z)).sqrt() * (p * chi.cos() - q * chi.sin())
}

/// `J_{k+1/2}(z)` for `k ≥ -1` (spherical Bessel closed forms, upward
/// recurrence in the order).
pub fn bessel_j_half(k: i32, z: f64) -> f64 {
    assert!(k >= -1, "order below -1/2");
    let pref = (2.0 / (PI * z)).sqrt();
    let mut lo = pref * z.cos(); // J_{-1/2}
    if k == -1 {
        return lo;
    }
    let mut hi = pref * z.sin(); // J_{1/2}
    let mut nu = 0.5;
    for _ in 0..k {
        let next = 2.0 * nu / z * hi - lo;
        lo = hi;
        hi = next;
        nu += 1.0;
    }
    hi
}

/// `J_ν(z)` with `ν` given as `twice_nu / 2`; `twice_nu` odd → half-integer.
pub fn bessel_j(twice_nu: i32, z: f64) -> f64 {
    if twice_nu % 2 != 0 {
        bessel_j_half((twice_nu - 1) / 2, z)
    } else {
        assert!(twice_nu >= 0, "negative integer order not supported");
        bessel_j_int((twice_nu / 2) as u32, z)
    }
}

/// Radial transform kernel `z^{N/2} J_{(N-2)/2}(z)`.
pub fn radial_kernel(dim: usize, z: f64) -> f64 {
    match dim {
        1 => (2.0 / PI).sqrt() * z.cos(),
        2 => z * bessel_j_int(0, z),
        _ => z.powf(dim as f64 / 2.0) * bessel_j(dim as i32 - 2, z),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // J_n(z) = (1/2π) ∫_0^{2π} cos(nτ - z sin τ) dτ; the trapezoid rule is
    // exponentially accurate for this periodic integrand.
    fn integral_oracle(n: u32, z: f64) -> f64 {
        let k = 2048;
        let h = 2.0 * PI / k as f64;
        (0..k)
            .map(|i| {
                let t = i as f64 * h;
                (n as f64 * t - z * t.sin()).cos()
            })
            .sum::<f64>()
            / k as f64
    }

    #[test]
    fn integer_orders_match_integral_representation() {
        for n in 0..4 {
            let z = 10.0;
            assert!((bessel_j_int(n, z) - integral_oracle(n, z)).abs() < 1e-10);
        }
        for &z in &[0.0, 0.3, 2.0, 7.5, 11.9, 12.1, 15.0, 30.0, 80.0, 250.0] {
            for n in 0..3 {
                let d = (bessel_j_int(n, z) - integral_oracle(n, z)).abs();
                assert!(d < 1e-10, "n={n} z={z} diff={d}");
            }
        }
    }

    #[test]
    fn known_values() {
        assert_eq!(bessel_j_int(0, 0.0), 1.0);
        assert_eq!(bessel_j_int(1, 0.0), 0.0);
        // first zero of J_0
        assert!(bessel_j_int(0, 2.404_825_557_695_773).abs() < 1e-14);
        assert!((bessel_j_half(0, 1.0) - (2.0 / PI).sqrt() * 1f64.sin()).abs() < 1e-15);
        let z = 3.0;
        let j32 = (2.0 / (PI * z)).sqrt() * (z.sin() / z - z.cos());
        assert!((bessel_j(3, z) - j32).abs() < 1e-14);
    }

    #[test]
    fn radial_kernels() {
        let z = 1.7;
        assert!((radial_kernel(1, z) - z.sqrt() * bessel_j(-1, z)).abs() < 1e-14);
        assert!((radial_kernel(3, z) - z.powf(1.5) * bessel_j(1, z)).abs() < 1e-14);
    }
}
