//! Oracles shared by the integration tests.
#![allow(dead_code)]

use nalgebra::DMatrix;
use num_complex::Complex64;
use std::f64::consts::PI;
use zeno_core::lattice::DensityMatrix;
use zeno_core::propagators::QBMParams;

/// Dense generator of the lattice master equation acting on vec(rho)
/// (row-major), with the kinetic operator built from an explicit DFT.
pub fn dense_generator(n: usize, eta: f64, p: &QBMParams) -> DMatrix<Complex64> {
    let ks: Vec<f64> = (0..n)
        .map(|k| {
            let s = if k < n / 2 { k as f64 } else { k as f64 - n as f64 };
            2.0 * PI * s / (n as f64 * eta)
        })
        .collect();
    // H_ab = (1/n) sum_k e^{i k (x_a - x_b)} hbar^2 k^2 / 2m
    let mut h = DMatrix::<Complex64>::zeros(n, n);
    for a in 0..n {
        for b in 0..n {
            let mut acc = Complex64::new(0.0, 0.0);
            for &k in &ks {
                acc += Complex64::from_polar(1.0, k * (a as f64 - b as f64) * eta)
                    * (p.hbar * p.hbar * k * k / (2.0 * p.mass));
            }
            h[(a, b)] = acc / n as f64;
        }
    }
    let i = Complex64::new(0.0, 1.0);
    let mut l = DMatrix::<Complex64>::zeros(n * n, n * n);
    for a in 0..n {
        for b in 0..n {
            let row = a * n + b;
            for c in 0..n {
                // -(i/hbar) (H rho - rho H)
                l[(row, c * n + b)] += -i / p.hbar * h[(a, c)];
                l[(row, a * n + c)] += i / p.hbar * h[(c, b)];
            }
            let mut d = (a + n - b) % n;
            if d >= n / 2 {
                d = n - d;
            }
            let xi = if (a + n - b) % n == n / 2 { (n / 2) as f64 * eta } else { d as f64 * eta };
            l[(row, row)] += Complex64::new(-p.diffusion * xi * xi / (p.hbar * p.hbar), 0.0);
        }
    }
    l
}

pub fn dense_evolve(rho: &DensityMatrix, p: &QBMParams, t: f64) -> Vec<Complex64> {
    let n = rho.n();
    let l = dense_generator(n, rho.grid().spacing(), p) * Complex64::new(t, 0.0);
    let u = l.exp();
    let v = nalgebra::DVector::from_iterator(n * n, rho.values().iter().cloned());
    (u * v).iter().cloned().collect()
}

pub fn max_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Return probability `<psi|rho_t|psi>` of a minimum-uncertainty Gaussian
/// from its phase-space covariance: free flow plus momentum diffusion map
/// `S0` to `F S0 F^T + Q`, and the overlap of two Gaussian Wigner functions
/// is `hbar / sqrt(det(S0 + S_t))`.
pub fn gaussian_return_oracle(sigma: f64, diffusion: f64, mass: f64, hbar: f64, t: f64) -> f64 {
    use nalgebra::Matrix2;
    let s0 = Matrix2::new(sigma * sigma, 0.0, 0.0, hbar * hbar / (4.0 * sigma * sigma));
    let f = Matrix2::new(1.0, t / mass, 0.0, 1.0);
    let q = Matrix2::new(t.powi(3) / (3.0 * mass * mass), t * t / (2.0 * mass), t * t / (2.0 * mass), t) * (2.0 * diffusion);
    let st = f * s0 * f.transpose() + q;
    hbar / (s0 + st).determinant().sqrt()
}
