use num_complex::Complex64;

use super::DensityMatrix;
use crate::error::{Result, ZenoError};
use crate::spectral::{derivative_left, wavenumber, Spectral};

/// Normalized second moments of a state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    /// Trace before normalization.
    pub norm: f64,
    pub x2: f64,
    pub p2: f64,
    /// `<xp + px>`.
    pub xp_sym: f64,
}

/// Momentum probabilities (not normalized) at the FFT bins, paired with the
/// bin momentum `hbar k`. Sums to the trace.
pub fn momentum_distribution(rho: &DensityMatrix, hbar: f64) -> Vec<(f64, f64)> {
    let n = rho.n();
    let eta = rho.grid().spacing();
    let sp = Spectral::new(n);
    // f(d) = eta sum_i rho(i, i - d): the separation profile
    let mut f: Vec<Complex64> = (0..n)
        .map(|d| {
            (0..n)
                .map(|i| rho.get(i, (i + n - d) % n))
                .sum::<Complex64>()
                * eta
        })
        .collect();
    sp.forward(&mut f);
    (0..n)
        .map(|k| (hbar * wavenumber(k, n, eta), f[k].re / n as f64))
        .collect()
}

fn checked_norm(rho: &DensityMatrix) -> Result<f64> {
    let norm = rho.trace();
    if !(norm > 1e-12) {
        return Err(ZenoError::Depleted {
            trace: norm,
            floor: 1e-12,
        });
    }
    Ok(norm)
}

/// `<x^2>`, `<p^2>`, `<xp+px>` with spectral derivatives.
pub fn moments(rho: &DensityMatrix, hbar: f64) -> Result<Moments> {
    let norm = checked_norm(rho)?;
    let n = rho.n();
    let eta = rho.grid().spacing();
    let xs = rho.grid().coords();
    let diag = rho.diagonal();

    let x2 = eta * xs.iter().zip(&diag).map(|(x, r)| x * x * r).sum::<f64>() / norm;
    let p2 = momentum_distribution(rho, hbar)
        .iter()
        .map(|(p, w)| p * p * w)
        .sum::<f64>()
        / norm;

    let sp = Spectral::new(n);
    let d_rho = derivative_left(&sp, rho.values(), n, eta);
    let xp_sym = 2.0 * hbar * eta
        * (0..n).map(|i| xs[i] * d_rho[i * n + i].im).sum::<f64>()
        / norm;

    Ok(Moments {
        norm,
        x2,
        p2,
        xp_sym,
    })
}

/// `<p^2>` from a fourth-order centred stencil of `-hbar^2 d^2/dx^2` applied
/// to the first index. A cross-check on the spectral value; it underestimates
/// content close to the momentum cutoff.
pub fn p2_finite_difference(rho: &DensityMatrix, hbar: f64) -> Result<f64> {
    let norm = checked_norm(rho)?;
    let n = rho.n();
    let eta = rho.grid().spacing();
    let at = |i: i64, j: usize| rho.get(i.rem_euclid(n as i64) as usize, j);
    let mut acc = 0.0;
    for i in 0..n {
        let ii = i as i64;
        let lap = (-at(ii + 2, i) + 16.0 * at(ii + 1, i) - 30.0 * at(ii, i) + 16.0 * at(ii - 1, i)
            - at(ii - 2, i))
            / (12.0 * eta * eta);
        acc -= lap.re;
    }
    Ok(hbar * hbar * eta * acc / norm)
}
