//! Evolution under the quantum Brownian motion master equation between
//! projections.
//!
//! Three routes, all periodic on the lattice:
//! - [`evolve_kernel`]: the exact Gaussian propagator, factorized into free
//!   evolution and a Gaussian damping factor in the (centre wavenumber,
//!   separation) representation;
//! - [`evolve_stepper`]: Strang splitting of the kinetic commutator and the
//!   pointwise damping/absorption terms;
//! - [`evolve_wigner`]: the phase-space kernel, applied as its characteristic
//!   function.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Result, ZenoError};
use crate::lattice::{samples_to_wigner, wigner_to_samples, DensityMatrix, WignerFunction};
use crate::potential::ComplexPotential;
use crate::spectral::{signed_index, transpose, wavenumber, wrapped_offset, Spectral};

/// Physical constants of the master equation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QBMParams {
    pub mass: f64,
    /// Momentum diffusion constant.
    pub diffusion: f64,
    pub hbar: f64,
}

impl Default for QBMParams {
    fn default() -> Self {
        Self {
            mass: 1.0,
            diffusion: 0.0,
            hbar: 1.0,
        }
    }
}

impl QBMParams {
    pub fn new(mass: f64, diffusion: f64, hbar: f64) -> Result<Self> {
        let p = Self {
            mass,
            diffusion,
            hbar,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mass > 0.0 && self.mass.is_finite()) {
            return Err(ZenoError::Config(format!("qbm.m must be positive, got {}", self.mass)));
        }
        if !(self.hbar > 0.0 && self.hbar.is_finite()) {
            return Err(ZenoError::Config(format!("qbm.hbar must be positive, got {}", self.hbar)));
        }
        if !(self.diffusion >= 0.0 && self.diffusion.is_finite()) {
            return Err(ZenoError::Config(format!(
                "qbm.D must be non-negative, got {}",
                self.diffusion
            )));
        }
        Ok(())
    }

    pub fn with_diffusion(mut self, d: f64) -> Self {
        self.diffusion = d;
        self
    }

    /// Off-diagonal damping `exp(-D t xi^2 / hbar^2)` of the separation `xi`
    /// when kinetic motion is negligible.
    pub fn coherence_factor(&self, xi: f64, t: f64) -> f64 {
        (-self.diffusion * t * xi * xi / (self.hbar * self.hbar)).exp()
    }
}

/// Coefficients of the Gaussian phase-space kernel after elapsed time `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WignerKernelCoeffs {
    pub alpha: f64,
    pub beta: f64,
    pub eps_cross: f64,
    /// Normalization making the kernel integrate to one over `(p, X)`.
    pub norm: f64,
}

impl WignerKernelCoeffs {
    pub fn new(params: &QBMParams, t: f64) -> Result<Self> {
        let (d, m) = (params.diffusion, params.mass);
        if !(t > 0.0) || !(d > 0.0) {
            return Err(ZenoError::Argument(format!(
                "kernel coefficients need t > 0 and D > 0 (t = {t}, D = {d})"
            )));
        }
        let alpha = 1.0 / (d * t);
        let beta = 3.0 * m * m / (d * t.powi(3));
        let eps_cross = -3.0 * m / (d * t * t);
        let det = alpha * beta - 0.25 * eps_cross * eps_cross;
        Ok(Self {
            alpha,
            beta,
            eps_cross,
            norm: det.sqrt() / PI,
        })
    }

    /// Kernel value at displacement `(dp, dx)` from the classical endpoint.
    pub fn kernel(&self, dp: f64, dx: f64) -> f64 {
        self.norm * (-self.alpha * dp * dp - self.beta * dx * dx - self.eps_cross * dp * dx).exp()
    }

    /// Fourier transform of the kernel, `int K exp(-i (u dp + k dx))`, which is
    /// real because the kernel is centred.
    pub fn characteristic(&self, u: f64, k: f64) -> f64 {
        let det = self.alpha * self.beta - 0.25 * self.eps_cross * self.eps_cross;
        let q = self.beta * u * u - self.eps_cross * u * k + self.alpha * k * k;
        (-q / (4.0 * det)).exp()
    }
}

fn check_duration(t: f64) -> Result<()> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(ZenoError::Argument(format!("evolution time must be positive, got {t}")));
    }
    Ok(())
}

/// Exact free evolution `U rho U^+` for time `t`: phases
/// `exp(-i hbar t (k_x^2 - k_y^2) / 2m)` in the two-index Fourier basis.
fn free_evolution(m: &mut Vec<Complex64>, n: usize, phases: &[Complex64], sp: &Spectral) {
    sp.forward(m);
    let mut t = transpose(m, n);
    sp.forward(&mut t);
    // t is indexed [k_y][k_x] and the phase table [k_x][k_y]; swapping the
    // two wavenumbers conjugates the phase
    t.iter_mut().zip(phases).for_each(|(z, ph)| *z *= ph.conj());
    sp.inverse(&mut t);
    *m = transpose(&t, n);
    sp.inverse(m);
}

fn kinetic_phases(n: usize, eta: f64, params: &QBMParams, t: f64) -> Vec<Complex64> {
    let ks: Vec<f64> = (0..n).map(|k| wavenumber(k, n, eta)).collect();
    (0..n * n)
        .map(|idx| {
            let (a, b) = (ks[idx / n], ks[idx % n]);
            Complex64::from_polar(1.0, -params.hbar * t * (a * a - b * b) / (2.0 * params.mass))
        })
        .collect()
}

/// Exact evolution for time `t` with the Gaussian density-matrix propagator.
///
/// The propagator factorizes into free evolution followed by a damping
/// factor that is diagonal in the centre wavenumber `k` (conjugate to
/// `(x + y)/2`) and the separation `xi = x - y`:
/// `exp(-(D t / hbar^2) [(xi - v t / 2)^2 + (v t)^2 / 12])`, `v = hbar k / m`.
/// Free evolution is done in the two-index Fourier basis, the damping in the
/// representation `rho(x_i, x_i - xi_d)` Fourier-transformed over `i`.
pub fn evolve_kernel(rho: &DensityMatrix, params: &QBMParams, t: f64) -> Result<DensityMatrix> {
    check_duration(t)?;
    params.validate()?;
    let n = rho.n();
    let eta = rho.grid().spacing();
    let sp = Spectral::new(n);

    let mut m = rho.values().to_vec();
    free_evolution(&mut m, n, &kinetic_phases(n, eta, params, t), &sp);

    let rate = params.diffusion / (params.hbar * params.hbar);
    if rate > 0.0 {
        let mut rows = vec![Complex64::new(0.0, 0.0); n * n];
        for d in 0..n {
            for i in 0..n {
                rows[d * n + i] = m[i * n + (i + n - d) % n];
            }
        }
        sp.forward(&mut rows);
        for d in 0..n {
            let xi = signed_index(d, n) as f64 * eta;
            for k in 0..n {
                let shift = params.hbar * wavenumber(k, n, eta) * t / params.mass;
                let c = xi - 0.5 * shift;
                rows[d * n + k] *= (-rate * t * (c * c + shift * shift / 12.0)).exp();
            }
        }
        sp.inverse(&mut rows);
        for d in 0..n {
            for i in 0..n {
                m[i * n + (i + n - d) % n] = rows[d * n + i];
            }
        }
    }
    let mut out = DensityMatrix::new(*rho.grid(), m, rho.time() + t)?;
    out.hermitize();
    Ok(out)
}

/// Time-stepping integrator with optional absorbing potential.
///
/// Strang splitting: a half step of the pointwise factor
/// `exp(-(dt/2)[(D/hbar^2) xi^2 + (V(x) + V(y))/hbar])`, a full kinetic step
/// done exactly in the two-index Fourier basis, another half step. Interior
/// half steps are merged.
pub fn evolve_stepper(
    rho: &DensityMatrix,
    params: &QBMParams,
    potential: Option<&ComplexPotential>,
    dt: f64,
    steps: usize,
) -> Result<DensityMatrix> {
    params.validate()?;
    if steps == 0 {
        return Ok(rho.clone());
    }
    check_duration(dt)?;
    let grid = *rho.grid();
    let n = grid.n_points();
    let eta = grid.spacing();
    let hb = params.hbar;
    let sp = Spectral::new(n);

    let v: Vec<f64> = match potential {
        Some(p) => p.profile(&grid),
        None => vec![0.0; n],
    };
    let absorbing = v.iter().any(|&x| x != 0.0);
    let rate = params.diffusion / (hb * hb);
    let pointwise = |h: f64| -> Vec<f64> {
        let mut f = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                let xi = wrapped_offset(i, j, n) as f64 * eta;
                f[i * n + j] = (-h * (rate * xi * xi + (v[i] + v[j]) / hb)).exp();
            }
        }
        f
    };
    let half = pointwise(0.5 * dt);
    let full = pointwise(dt);
    let kin = kinetic_phases(n, eta, params, dt);

    let norm0 = rho.trace();
    let mut m: Vec<Complex64> = rho.values().to_vec();
    let apply = |m: &mut [Complex64], f: &[f64]| m.iter_mut().zip(f).for_each(|(z, s)| *z *= s);
    apply(&mut m, &half);
    for step in 0..steps {
        free_evolution(&mut m, n, &kin, &sp);
        apply(&mut m, if step + 1 == steps { &half } else { &full });

        let tr: f64 = (0..n).map(|i| m[i * n + i].re).sum::<f64>() * eta;
        if !tr.is_finite() {
            return Err(ZenoError::NumericalStability(format!(
                "non-finite trace after step {}",
                step + 1
            )));
        }
        let limit = if absorbing { 1e-9 } else { 1e-3 };
        if tr > norm0 * (1.0 + limit) + 1e-15 {
            return Err(ZenoError::NumericalStability(format!(
                "trace grew from {norm0} to {tr} at step {}",
                step + 1
            )));
        }
    }
    let mut out = DensityMatrix::new(grid, m, rho.time() + dt * steps as f64)?;
    out.hermitize();
    Ok(out)
}

/// Evolve a Wigner function for time `t`: classical shear `X -> X + p t / m`
/// convolved with the Gaussian phase-space kernel. The convolution is done
/// as a product with the kernel's characteristic function in the variables
/// conjugate to `(p, X)`. Below `D = 1e-8` only the shear is applied.
pub fn evolve_wigner(w: &WignerFunction, params: &QBMParams, t: f64) -> Result<WignerFunction> {
    check_duration(t)?;
    params.validate()?;
    let grid = *w.x_grid();
    let n = grid.n_points();
    let eta = grid.spacing();
    let hb = params.hbar;
    let sp = Spectral::new(n);
    let coeffs = if params.diffusion >= 1e-8 {
        Some(WignerKernelCoeffs::new(params, t)?)
    } else {
        None
    };

    // samples[s][d] -> [d][s] -> Fourier over the centre coordinate
    let samples = wigner_to_samples(w);
    let mut m = transpose(&samples, n);
    sp.forward(&mut m);
    // odd separations sit half a cell off the column centre
    let offset = |d: usize, k: usize, sign: f64| {
        if signed_index(d, n).rem_euclid(2) == 1 {
            Complex64::from_polar(1.0, sign * 0.5 * wavenumber(k, n, eta) * eta)
        } else {
            Complex64::new(1.0, 0.0)
        }
    };
    for d in 0..n {
        for k in 0..n {
            m[d * n + k] *= offset(d, k, -1.0);
        }
    }
    let mut g = transpose(&m, n);
    for (k_idx, row) in g.chunks_mut(n).enumerate() {
        let k = wavenumber(k_idx, n, eta);
        // shear: in the separation picture a translation by hbar k t / m
        let shift = hb * k * t / params.mass;
        sp.forward(row);
        for (q_idx, z) in row.iter_mut().enumerate() {
            *z *= Complex64::from_polar(1.0, -wavenumber(q_idx, n, eta) * shift);
        }
        sp.inverse(row);
        if let Some(c) = &coeffs {
            for (d_idx, z) in row.iter_mut().enumerate() {
                let xi = signed_index(d_idx, n) as f64 * eta;
                *z *= c.characteristic(xi / hb, -k);
            }
        }
    }
    let mut m = transpose(&g, n);
    for d in 0..n {
        for k in 0..n {
            m[d * n + k] *= offset(d, k, 1.0);
        }
    }
    sp.inverse(&mut m);
    let samples = transpose(&m, n);
    let (values, _) = samples_to_wigner(samples, n, eta, hb);
    WignerFunction::new(grid, hb, values, w.time() + t)
}
