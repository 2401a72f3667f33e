use std::f64::consts::PI;

use num_complex::Complex64;

use super::Grid1D;
use crate::error::{Result, ZenoError};

/// Density matrix `rho(x_i, y_j)` on a square position lattice, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    grid: Grid1D,
    values: Vec<Complex64>,
    time: f64,
}

impl DensityMatrix {
    pub fn new(grid: Grid1D, values: Vec<Complex64>, time: f64) -> Result<Self> {
        let n = grid.n_points();
        if values.len() != n * n {
            return Err(ZenoError::Config(format!(
                "density matrix needs {} values, got {}",
                n * n,
                values.len()
            )));
        }
        Ok(Self { grid, values, time })
    }

    pub fn zeros(grid: Grid1D) -> Self {
        let n = grid.n_points();
        Self {
            grid,
            values: vec![Complex64::new(0.0, 0.0); n * n],
            time: 0.0,
        }
    }

    /// Pure state `|psi><psi|` from wavefunction samples.
    pub fn from_wavefunction(grid: Grid1D, psi: &[Complex64]) -> Result<Self> {
        let n = grid.n_points();
        if psi.len() != n {
            return Err(ZenoError::Config(format!(
                "wavefunction needs {n} samples, got {}",
                psi.len()
            )));
        }
        let mut values = Vec::with_capacity(n * n);
        for a in psi {
            for b in psi {
                values.push(a * b.conj());
            }
        }
        Ok(Self {
            grid,
            values,
            time: 0.0,
        })
    }

    /// Centred Gaussian pure state of position width `sigma`:
    /// `rho(x, y) = exp(-(x^2 + y^2) / 4 sigma^2) / sqrt(2 pi sigma^2)`.
    pub fn gaussian(grid: Grid1D, sigma: f64) -> Result<Self> {
        Self::gaussian_packet(grid, sigma, 0.0, 0.0)
    }

    /// Gaussian packet centred at `center` carrying wavenumber `k0`.
    pub fn gaussian_packet(grid: Grid1D, sigma: f64, center: f64, k0: f64) -> Result<Self> {
        if !(sigma > 0.0) {
            return Err(ZenoError::Config(format!("sigma must be positive, got {sigma}")));
        }
        let norm = (2.0 * PI * sigma * sigma).powf(-0.25);
        let psi: Vec<Complex64> = grid
            .coords()
            .iter()
            .map(|&x| {
                let amp = norm * (-(x - center).powi(2) / (4.0 * sigma * sigma)).exp();
                Complex64::from_polar(amp, k0 * x)
            })
            .collect();
        Self::from_wavefunction(grid, &psi)
    }

    /// Mixed Gaussian state with position width `sigma_x` and momentum spread
    /// `p_rms`, `rho(X, xi) ~ exp(-X^2 / 2 sigma_x^2 - p_rms^2 xi^2 / 2 hbar^2)`.
    /// Requires `sigma_x * p_rms >= hbar / 2`.
    pub fn gaussian_mixed(grid: Grid1D, sigma_x: f64, p_rms: f64, hbar: f64) -> Result<Self> {
        if sigma_x * p_rms < 0.5 * hbar * (1.0 - 1e-12) {
            return Err(ZenoError::Config(format!(
                "sigma_x * p_rms = {} violates the uncertainty bound hbar/2",
                sigma_x * p_rms
            )));
        }
        let n = grid.n_points();
        let xs = grid.coords();
        let norm = 1.0 / (2.0 * PI * sigma_x * sigma_x).sqrt();
        let mut values = Vec::with_capacity(n * n);
        for &x in &xs {
            for &y in &xs {
                let big_x = 0.5 * (x + y);
                let xi = x - y;
                let v = norm
                    * (-big_x * big_x / (2.0 * sigma_x * sigma_x)
                        - p_rms * p_rms * xi * xi / (2.0 * hbar * hbar))
                        .exp();
                values.push(Complex64::new(v, 0.0));
            }
        }
        Ok(Self {
            grid,
            values,
            time: 0.0,
        })
    }

    #[inline]
    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.grid.n_points()
    }

    #[inline]
    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    #[inline]
    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn with_time(mut self, time: f64) -> Self {
        self.time = time;
        self
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.values[i * self.n() + j]
    }

    /// `eta * sum_i rho(x_i, x_i)`, complex so callers can check the imaginary part.
    pub fn trace_complex(&self) -> Complex64 {
        let n = self.n();
        let s: Complex64 = (0..n).map(|i| self.values[i * n + i]).sum();
        s * self.grid.spacing()
    }

    pub fn trace(&self) -> f64 {
        self.trace_complex().re
    }

    /// Real diagonal `rho(x_i, x_i)`.
    pub fn diagonal(&self) -> Vec<f64> {
        let n = self.n();
        (0..n).map(|i| self.values[i * n + i].re).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `max |rho_ij - conj(rho_ji)| / max |rho|`; zero for an exactly Hermitian matrix.
    pub fn hermiticity_defect(&self) -> f64 {
        let n = self.n();
        let scale = self.max_abs();
        if scale == 0.0 {
            return 0.0;
        }
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                let d = (self.values[i * n + j] - self.values[j * n + i].conj()).norm();
                worst = worst.max(d);
            }
        }
        worst / scale
    }

    /// Replace the matrix by its Hermitian part.
    pub fn hermitize(&mut self) {
        let n = self.n();
        for i in 0..n {
            for j in i..n {
                let a = self.values[i * n + j];
                let b = self.values[j * n + i];
                let h = 0.5 * (a + b.conj());
                self.values[i * n + j] = h;
                self.values[j * n + i] = h.conj();
            }
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|z| z * factor).collect(),
            time: self.time,
        }
    }

    /// Copy with unit trace.
    pub fn renormalized(&self) -> Result<Self> {
        let tr = self.trace();
        if !(tr > 1e-12) {
            return Err(ZenoError::Depleted {
                trace: tr,
                floor: 1e-12,
            });
        }
        Ok(self.scaled(1.0 / tr))
    }

    /// Largest elementwise difference.
    pub fn max_abs_diff(&self, other: &DensityMatrix) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Largest magnitude on the outermost rows and columns, relative to the
    /// overall maximum. Periodic transforms assume this stays below ~1e-8.
    pub fn edge_leakage(&self) -> f64 {
        let n = self.n();
        let scale = self.max_abs();
        if scale == 0.0 {
            return 0.0;
        }
        let mut worst: f64 = 0.0;
        for k in 0..n {
            for &(i, j) in &[(0, k), (n - 1, k), (k, 0), (k, n - 1)] {
                worst = worst.max(self.values[i * n + j].norm());
            }
        }
        worst / scale
    }

    /// Matrix-vector product with the discretized operator (`eta` included).
    fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        let n = self.n();
        let eta = self.grid.spacing();
        (0..n)
            .map(|i| {
                let row = &self.values[i * n..(i + 1) * n];
                row.iter().zip(v).map(|(a, b)| a * b).sum::<Complex64>() * eta
            })
            .collect()
    }

    /// Estimates of the largest and smallest eigenvalue of the discretized
    /// operator by power iteration. Diagnostic only.
    pub fn extreme_eigenvalues(&self, iterations: usize) -> (f64, f64) {
        let n = self.n();
        let start: Vec<Complex64> = (0..n)
            .map(|i| Complex64::new(1.0 + 0.1 * ((i * 7919) % 13) as f64, 0.0))
            .collect();
        let rayleigh = |op: &dyn Fn(&[Complex64]) -> Vec<Complex64>| -> f64 {
            let mut v = start.clone();
            let mut lambda = 0.0;
            for _ in 0..iterations {
                let w = op(&v);
                let norm = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
                if norm == 0.0 {
                    return 0.0;
                }
                let vv: f64 = v.iter().map(|z| z.norm_sqr()).sum();
                lambda = v.iter().zip(&w).map(|(a, b)| (a.conj() * b).re).sum::<f64>() / vv;
                v = w.into_iter().map(|z| z / norm).collect();
            }
            lambda
        };
        let top = rayleigh(&|v| self.apply(v));
        let shift = top.abs();
        let shifted = rayleigh(&|v| {
            let w = self.apply(v);
            v.iter().zip(w).map(|(a, b)| a * shift - b).collect()
        });
        (top, shift - shifted)
    }
}
