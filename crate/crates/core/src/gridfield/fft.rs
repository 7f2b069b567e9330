//! Forward/inverse transforms on the periodic box.
//!
//! Forward is unnormalized, inverse carries `1/M^N`. Two-dimensional data is
//! row-major with axis 1 contiguous; columns go through a transpose so every
//! call hits the same 1-D plan.

use std::cell::RefCell;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::GridSpec;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(len: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(len)
        } else {
            p.plan_fft_forward(len)
        }
    })
}

fn transpose(buf: &mut [Complex64], m: usize) {
    for i in 0..m {
        for j in (i + 1)..m {
            buf.swap(i * m + j, j * m + i);
        }
    }
}

fn transform(grid: &GridSpec, buf: &mut [Complex64], inverse: bool) {
    let m = grid.points_per_dim();
    let fft = plan(m, inverse);
    // process() walks the buffer in consecutive chunks of length m
    fft.process(buf);
    if grid.dim() == 2 {
        transpose(buf, m);
        fft.process(buf);
        transpose(buf, m);
    }
}

pub(crate) fn forward(grid: &GridSpec, values: &[f64]) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    transform(grid, &mut buf, false);
    buf
}

pub(crate) fn inverse_real(grid: &GridSpec, coeffs: &[Complex64]) -> Vec<f64> {
    let mut buf = coeffs.to_vec();
    transform(grid, &mut buf, true);
    let scale = 1.0 / grid.len() as f64;
    buf.iter().map(|c| c.re * scale).collect()
}
