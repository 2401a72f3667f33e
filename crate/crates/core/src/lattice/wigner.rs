//! Discrete Wigner transform on the rotated lattice.
//!
//! For column `s` and separation index `d` in `[-n/2, n/2)` the pair
//! `(i, j) = (s + ceil(d/2), s - floor(d/2))` (mod `n`) is sampled, so that
//! `xi = d * eta` and `X = x_s` (even `d`) or `x_s + eta/2` (odd `d`). The map
//! `(s, d) -> (i, j)` is a bijection of the periodic lattice, and
//!
//! `W(p_k, X_s) = (eta / 2 pi hbar) sum_d exp(-i p_k xi_d / hbar) rho(s, d)`.
//!
//! The `d = -n/2` row has no Hermitian partner in the same column; its
//! imaginary part is folded into `W` with a `(-1)^k` weight so the transform
//! stays real and exactly invertible.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::{DensityMatrix, Grid1D};
use crate::error::{Result, ZenoError};
use crate::spectral::{signed_index, Spectral};

/// Real Wigner function sampled at `(p_k, X_s)`; rows are momenta in
/// ascending order, columns positions.
#[derive(Debug, Clone, PartialEq)]
pub struct WignerFunction {
    x_grid: Grid1D,
    p_grid: Grid1D,
    hbar: f64,
    values: Vec<f64>,
    time: f64,
}

impl WignerFunction {
    pub fn new(x_grid: Grid1D, hbar: f64, values: Vec<f64>, time: f64) -> Result<Self> {
        x_grid.require_even()?;
        let n = x_grid.n_points();
        if values.len() != n * n {
            return Err(ZenoError::Config(format!(
                "Wigner function needs {} values, got {}",
                n * n,
                values.len()
            )));
        }
        Ok(Self {
            x_grid,
            p_grid: x_grid.momentum_grid(hbar),
            hbar,
            values,
            time,
        })
    }

    pub fn zeros(x_grid: Grid1D, hbar: f64) -> Result<Self> {
        let n = x_grid.n_points();
        Self::new(x_grid, hbar, vec![0.0; n * n], 0.0)
    }

    pub fn x_grid(&self) -> &Grid1D {
        &self.x_grid
    }

    pub fn p_grid(&self) -> &Grid1D {
        &self.p_grid
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn with_time(mut self, time: f64) -> Self {
        self.time = time;
        self
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Value at momentum row `k` (ascending) and position column `s`.
    #[inline]
    pub fn get(&self, k: usize, s: usize) -> f64 {
        self.values[k * self.x_grid.n_points() + s]
    }

    fn cell(&self) -> f64 {
        self.x_grid.spacing() * self.p_grid.spacing()
    }

    /// `sum W dp dX`.
    pub fn total(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.cell()
    }

    /// `int W dp` at each lattice position.
    pub fn position_marginal(&self) -> Vec<f64> {
        let n = self.x_grid.n_points();
        let dp = self.p_grid.spacing();
        (0..n)
            .map(|s| (0..n).map(|k| self.get(k, s)).sum::<f64>() * dp)
            .collect()
    }

    /// `int W dX` at each lattice momentum.
    pub fn momentum_marginal(&self) -> Vec<f64> {
        let n = self.x_grid.n_points();
        let dx = self.x_grid.spacing();
        self.values
            .chunks(n)
            .map(|row| row.iter().sum::<f64>() * dx)
            .collect()
    }

    /// Unnormalized phase-space average of `f(p, X)`.
    pub fn integrate(&self, f: impl Fn(f64, f64) -> f64) -> f64 {
        let n = self.x_grid.n_points();
        let mut acc = 0.0;
        for k in 0..n {
            let p = self.p_grid.coord(k);
            for s in 0..n {
                acc += f(p, self.x_grid.coord(s)) * self.get(k, s);
            }
        }
        acc * self.cell()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &WignerFunction) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Lattice pair sampled at column `s`, signed separation `d`.
#[inline]
pub(crate) fn rotated_pair(s: usize, d: i64, n: usize) -> (usize, usize) {
    let lo = d.div_euclid(2);
    let hi = d - lo;
    let ni = n as i64;
    let i = (s as i64 + hi).rem_euclid(ni) as usize;
    let j = (s as i64 - lo).rem_euclid(ni) as usize;
    (i, j)
}

/// Wigner transform; see the module docs for the lattice convention.
pub fn wigner_transform(rho: &DensityMatrix, hbar: f64) -> Result<WignerFunction> {
    wigner_transform_detailed(rho, hbar).map(|(w, _)| w)
}

/// Wigner transform plus the largest imaginary part of the raw sum before it
/// is discarded (zero up to round-off for Hermitian input with negligible
/// weight at separation `n eta / 2`).
pub fn wigner_transform_detailed(rho: &DensityMatrix, hbar: f64) -> Result<(WignerFunction, f64)> {
    let grid = *rho.grid();
    grid.require_even()?;
    let n = grid.n_points();
    let mut buf = vec![Complex64::new(0.0, 0.0); n * n];
    for s in 0..n {
        for d_idx in 0..n {
            let (i, j) = rotated_pair(s, signed_index(d_idx, n), n);
            buf[s * n + d_idx] = rho.get(i, j);
        }
    }
    let (values, max_imag) = samples_to_wigner(buf, n, grid.spacing(), hbar);
    Ok((
        WignerFunction {
            x_grid: grid,
            p_grid: grid.momentum_grid(hbar),
            hbar,
            values,
            time: rho.time(),
        },
        max_imag,
    ))
}

/// Rotated samples `buf[s * n + d_idx]` to sorted Wigner values, plus the
/// largest discarded imaginary part.
pub(crate) fn samples_to_wigner(mut buf: Vec<Complex64>, n: usize, eta: f64, hbar: f64) -> (Vec<f64>, f64) {
    let c = eta / (2.0 * PI * hbar);
    let nyquist: Vec<f64> = (0..n).map(|s| buf[s * n + n / 2].im).collect();
    Spectral::new(n).forward(&mut buf);
    let mut values = vec![0.0; n * n];
    let mut max_imag: f64 = 0.0;
    for s in 0..n {
        for k_idx in 0..n {
            let z = buf[s * n + k_idx];
            max_imag = max_imag.max(z.im.abs());
            let sign = if k_idx % 2 == 0 { 1.0 } else { -1.0 };
            let row = (signed_index(k_idx, n) + (n / 2) as i64) as usize;
            values[row * n + s] = c * (z.re + sign * nyquist[s]);
        }
    }
    (values, c * max_imag)
}

/// Inverse of [`samples_to_wigner`]: rotated samples `[s * n + d_idx]`.
pub(crate) fn wigner_to_samples(w: &WignerFunction) -> Vec<Complex64> {
    let n = w.x_grid().n_points();
    let c = w.x_grid().spacing() / (2.0 * PI * w.hbar());
    let mut buf = vec![Complex64::new(0.0, 0.0); n * n];
    for s in 0..n {
        for k_idx in 0..n {
            let row = (signed_index(k_idx, n) + (n / 2) as i64) as usize;
            buf[s * n + k_idx] = Complex64::new(w.get(row, s) / c, 0.0);
        }
    }
    Spectral::new(n).inverse(&mut buf);
    let half = n / 2;
    let nyq: Vec<Complex64> = (0..n)
        .map(|s| {
            let a = buf[s * n + half].re;
            let b = buf[((s + half) % n) * n + half].re;
            Complex64::new(0.5 * (a + b), 0.5 * (a - b))
        })
        .collect();
    for (s, z) in nyq.into_iter().enumerate() {
        buf[s * n + half] = z;
    }
    buf
}

/// Inverse of [`wigner_transform`]; always returns a Hermitian matrix.
pub fn inverse_wigner(w: &WignerFunction) -> Result<DensityMatrix> {
    let grid = *w.x_grid();
    grid.require_even()?;
    let n = grid.n_points();
    let buf = wigner_to_samples(w);
    let mut values = vec![Complex64::new(0.0, 0.0); n * n];
    for s in 0..n {
        for d_idx in 0..n {
            let (i, j) = rotated_pair(s, signed_index(d_idx, n), n);
            values[i * n + j] = buf[s * n + d_idx];
        }
    }
    DensityMatrix::new(grid, values, w.time())
}
