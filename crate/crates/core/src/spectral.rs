//! FFT plumbing shared by the lattice operations.
//!
//! Square `n x n` arrays are stored row-major. Transforms along the second
//! index act on contiguous rows; transforms along the first index go through
//! a transpose.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

pub(crate) type C64 = Complex64;

/// Forward/inverse plans for one transform length.
#[derive(Clone)]
pub(crate) struct Spectral {
    n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl Spectral {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            n,
            fwd: planner.plan_fft_forward(n),
            inv: planner.plan_fft_inverse(n),
        }
    }

    /// Unnormalized forward DFT of every length-`n` chunk.
    pub fn forward(&self, buf: &mut [C64]) {
        debug_assert_eq!(buf.len() % self.n, 0);
        self.fwd.process(buf);
    }

    /// Normalized inverse DFT of every length-`n` chunk.
    pub fn inverse(&self, buf: &mut [C64]) {
        debug_assert_eq!(buf.len() % self.n, 0);
        self.inv.process(buf);
        let s = 1.0 / self.n as f64;
        buf.iter_mut().for_each(|z| *z *= s);
    }
}

#[inline]
pub(crate) fn signed_index(idx: usize, n: usize) -> i64 {
    if idx < n / 2 {
        idx as i64
    } else {
        idx as i64 - n as i64
    }
}

/// Angular wavenumber of FFT bin `idx` on a lattice of spacing `eta`.
#[inline]
pub(crate) fn wavenumber(idx: usize, n: usize, eta: f64) -> f64 {
    2.0 * PI * signed_index(idx, n) as f64 / (n as f64 * eta)
}

pub(crate) fn transpose(src: &[C64], n: usize) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); n * n];
    const B: usize = 32;
    for ib in (0..n).step_by(B) {
        for jb in (0..n).step_by(B) {
            for i in ib..(ib + B).min(n) {
                for j in jb..(jb + B).min(n) {
                    out[j * n + i] = src[i * n + j];
                }
            }
        }
    }
    out
}

pub(crate) fn adjoint(src: &[C64], n: usize) -> Vec<C64> {
    let mut out = transpose(src, n);
    out.iter_mut().for_each(|z| *z = z.conj());
    out
}

/// Spectral derivative along contiguous rows (second matrix index).
pub(crate) fn derivative_rows(sp: &Spectral, m: &mut [C64], n: usize, eta: f64) {
    sp.forward(m);
    for row in m.chunks_mut(n) {
        for (idx, z) in row.iter_mut().enumerate() {
            *z *= C64::new(0.0, wavenumber(idx, n, eta));
        }
    }
    sp.inverse(m);
}

/// `D M`: spectral derivative acting on the first matrix index.
pub(crate) fn derivative_left(sp: &Spectral, m: &[C64], n: usize, eta: f64) -> Vec<C64> {
    let mut t = transpose(m, n);
    derivative_rows(sp, &mut t, n, eta);
    transpose(&t, n)
}

/// `M D†`, computed as `(D M†)†`.
pub(crate) fn derivative_right_adj(sp: &Spectral, m: &[C64], n: usize, eta: f64) -> Vec<C64> {
    let left = derivative_left(sp, &adjoint(m, n), n, eta);
    adjoint(&left, n)
}

/// Wrapped lattice separation `(i - j)` mapped to `[-n/2, n/2)`.
#[inline]
pub(crate) fn wrapped_offset(i: usize, j: usize, n: usize) -> i64 {
    let d = (i + n - j) % n;
    signed_index(d, n)
}
