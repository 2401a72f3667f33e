//! Window projectors onto `[-L/2, L/2]` and the momentum bookkeeping of a
//! projection.

use std::f64::consts::PI;

use num_complex::Complex64;
use statrs::function::erf::erf;

use crate::error::{Result, ZenoError};
use crate::lattice::{
    rotated_pair, samples_to_wigner, wigner_to_samples, DensityMatrix, Grid1D, WignerFunction,
};
use crate::spectral::{derivative_left, derivative_right_adj, signed_index, Spectral};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProjectorKind {
    Sharp,
    /// Indicator convolved with a Gaussian of width `a`.
    Smeared,
}

impl std::str::FromStr for ProjectorKind {
    type Err = ZenoError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sharp" => Ok(Self::Sharp),
            "smeared" | "gaussian" | "gaussian-smeared" => Ok(Self::Smeared),
            other => Err(ZenoError::Config(format!(
                "proj.kind must be sharp or smeared, got {other:?}"
            ))),
        }
    }
}

impl std::fmt::Display for ProjectorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Sharp => "sharp",
            Self::Smeared => "smeared",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projector {
    length: f64,
    smearing: f64,
    kind: ProjectorKind,
}

impl Projector {
    pub fn new(length: f64, smearing: f64, kind: ProjectorKind) -> Result<Self> {
        if !(length > 0.0 && length.is_finite()) {
            return Err(ZenoError::Config(format!("proj.L must be positive, got {length}")));
        }
        if !(smearing >= 0.0) {
            return Err(ZenoError::Config(format!("proj.a must be non-negative, got {smearing}")));
        }
        if smearing >= 0.25 * length {
            return Err(ZenoError::Config(format!(
                "proj.a = {smearing} must be below L/4 = {}",
                0.25 * length
            )));
        }
        if kind == ProjectorKind::Smeared && smearing == 0.0 {
            return Self::sharp(length);
        }
        Ok(Self {
            length,
            smearing,
            kind,
        })
    }

    pub fn sharp(length: f64) -> Result<Self> {
        if !(length > 0.0 && length.is_finite()) {
            return Err(ZenoError::Config(format!("proj.L must be positive, got {length}")));
        }
        Ok(Self {
            length,
            smearing: 0.0,
            kind: ProjectorKind::Sharp,
        })
    }

    pub fn smeared(length: f64, smearing: f64) -> Result<Self> {
        Self::new(length, smearing, ProjectorKind::Smeared)
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn smearing(&self) -> f64 {
        self.smearing
    }

    pub fn kind(&self) -> ProjectorKind {
        self.kind
    }

    /// Window value in `[0, 1]`.
    pub fn window(&self, x: f64) -> f64 {
        let h = 0.5 * self.length;
        match self.kind {
            ProjectorKind::Sharp => {
                if x.abs() <= h {
                    1.0
                } else {
                    0.0
                }
            }
            ProjectorKind::Smeared => {
                let s = std::f64::consts::SQRT_2 * self.smearing;
                0.5 * (erf((x + h) / s) - erf((x - h) / s))
            }
        }
    }

    pub fn window_on(&self, grid: &Grid1D) -> Vec<f64> {
        grid.coords().iter().map(|&x| self.window(x)).collect()
    }

    /// Analytic momentum-space kernel of the projection at centre `x_c`:
    /// the Wigner function changes as `W'(p) = int dp0 K(p - p0) W(p0)`.
    /// Sharp windows give the sinc `sin(l u / hbar) / (pi u)` with
    /// `l = L - 2|x_c|`; smeared windows average it over a Gaussian of width
    /// `a / sqrt(2)` and damp it by `exp(-a^2 u^2 / hbar^2)`. The smeared form
    /// is the small-`a` approximation; [`project_wigner`] is exact.
    pub fn momentum_kernel(&self, u: f64, x_c: f64, hbar: f64) -> f64 {
        let sinc = |l: f64| {
            if l <= 0.0 {
                0.0
            } else if u.abs() * l < 1e-8 * hbar {
                l / (PI * hbar)
            } else {
                (l * u / hbar).sin() / (PI * u)
            }
        };
        match self.kind {
            ProjectorKind::Sharp => sinc(self.length - 2.0 * x_c.abs()),
            ProjectorKind::Smeared => {
                let a = self.smearing;
                let h = 0.5 * self.length;
                // Simpson over [-h, 0] and [0, h]
                let m = 400;
                let f = |xb: f64| {
                    (-(x_c - xb).powi(2) / (a * a)).exp() / (PI.sqrt() * a)
                        * sinc(self.length - 2.0 * xb.abs())
                };
                let simpson = |lo: f64, hi: f64| {
                    let step = (hi - lo) / m as f64;
                    let mut acc = f(lo) + f(hi);
                    for i in 1..m {
                        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
                        acc += w * f(lo + i as f64 * step);
                    }
                    acc * step / 3.0
                };
                (simpson(-h, 0.0) + simpson(0.0, h)) * (-(a * u / hbar).powi(2)).exp()
            }
        }
    }
}

/// Momentum bookkeeping of one projection. Momentum terms are normalized by
/// the post-projection trace and sum to the post-projection `<p^2>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectionReport {
    pub norm_before: f64,
    pub norm_after: f64,
    /// `<p^2>` of the projected state.
    pub p2_after: f64,
    /// Part of `<p^2>` reduced only by probability removal.
    pub p2_red: f64,
    /// Cross term between the state gradient and the window gradient.
    pub delta_term: f64,
    /// Window-gradient term, the boundary contribution.
    pub sigma_term: f64,
    /// Mean of the interpolated diagonal density at `x = +-L/2` before
    /// projection.
    pub boundary_density: f64,
}

/// Diagonal density at `x`, linearly interpolated between lattice points.
pub fn density_at(rho: &DensityMatrix, x: f64) -> f64 {
    let g = rho.grid();
    let n = g.n_points();
    let f = x / g.spacing() + (n / 2) as f64;
    if f <= 0.0 {
        return rho.get(0, 0).re;
    }
    if f >= (n - 1) as f64 {
        return rho.get(n - 1, n - 1).re;
    }
    let i = f.floor() as usize;
    let w = f - i as f64;
    (1.0 - w) * rho.get(i, i).re + w * rho.get(i + 1, i + 1).re
}

/// `rho'(x, y) = g(x) g(y) rho(x, y)` without diagnostics.
pub fn project(rho: &DensityMatrix, proj: &Projector) -> DensityMatrix {
    let n = rho.n();
    let g = proj.window_on(rho.grid());
    let values: Vec<Complex64> = rho
        .values()
        .iter()
        .enumerate()
        .map(|(idx, z)| z * (g[idx / n] * g[idx % n]))
        .collect();
    DensityMatrix::new(*rho.grid(), values, rho.time()).expect("same lattice")
}

/// Project and decompose the resulting `<p^2>`.
///
/// Writing the window as the diagonal operator `G` and the spectral
/// derivative as `D`, `D G = G D + C` with `C = [D, G]`, so
/// `hbar^2 Tr(D G rho G D^+)` splits exactly into
/// `hbar^2 Tr(G D rho D^+ G)` (reduced), `2 hbar^2 Re Tr(G D rho C^+)` (cross)
/// and `hbar^2 Tr(C rho C^+)` (boundary).
pub fn apply_projection(rho: &DensityMatrix, proj: &Projector, hbar: f64) -> Result<(DensityMatrix, ProjectionReport)> {
    let grid = *rho.grid();
    let n = grid.n_points();
    let eta = grid.spacing();
    let norm_before = rho.trace();
    let out = project(rho, proj);
    let norm_after = out.trace();
    if !(norm_after > 1e-12) {
        return Err(ZenoError::Depleted {
            trace: norm_after,
            floor: 1e-12,
        });
    }
    let g = proj.window_on(&grid);
    let sp = Spectral::new(n);

    let d_rho = derivative_left(&sp, rho.values(), n, eta);
    // D rho D^+
    let a = derivative_right_adj(&sp, &d_rho, n, eta);
    // D rho G D^+
    let d_rho_g: Vec<Complex64> = d_rho
        .iter()
        .enumerate()
        .map(|(idx, z)| z * g[idx % n])
        .collect();
    let b = derivative_right_adj(&sp, &d_rho_g, n, eta);
    // D G rho G D^+
    let d_out = derivative_left(&sp, out.values(), n, eta);
    let c = derivative_right_adj(&sp, &d_out, n, eta);

    // C rho = D (G rho) - G (D rho), then C rho C^+ = (C (C rho)^+)^+
    let commute = |m: &[Complex64]| -> Vec<Complex64> {
        let gm: Vec<Complex64> = m.iter().enumerate().map(|(idx, z)| z * g[idx / n]).collect();
        let mut out = derivative_left(&sp, &gm, n, eta);
        let dm = derivative_left(&sp, m, n, eta);
        out.iter_mut()
            .zip(&dm)
            .enumerate()
            .for_each(|(idx, (z, w))| *z -= w * g[idx / n]);
        out
    };
    let c_rho = commute(rho.values());
    let c_rho_c = commute(&crate::spectral::adjoint(&c_rho, n));

    let (mut red, mut cross, mut bound, mut full) = (0.0, 0.0, 0.0, 0.0);
    for i in 0..n {
        let ii = i * n + i;
        red += g[i] * g[i] * a[ii].re;
        // (G D rho C^+)_ii = g_i (D rho G D^+)_ii - g_i^2 (D rho D^+)_ii
        cross += 2.0 * (g[i] * b[ii].re - g[i] * g[i] * a[ii].re);
        bound += c_rho_c[ii].re;
        full += c[ii].re;
    }
    let scale = hbar * hbar * eta / norm_after;
    let p2_red = red * scale;
    let delta_term = cross * scale;
    let sigma_term = bound * scale;
    let p2_after = full * scale;

    let h = 0.5 * proj.length();
    let boundary_density = 0.5 * (density_at(rho, h) + density_at(rho, -h));
    Ok((
        out,
        ProjectionReport {
            norm_before,
            norm_after,
            p2_after,
            p2_red,
            delta_term,
            sigma_term,
            boundary_density,
        },
    ))
}

/// Projection applied to a Wigner function. The momentum convolution with
/// the window kernel is done exactly, as a product with `g(X + xi/2) g(X - xi/2)`
/// in the separation variable conjugate to `p`.
pub fn project_wigner(w: &WignerFunction, proj: &Projector) -> Result<WignerFunction> {
    let grid = *w.x_grid();
    grid.require_even()?;
    let n = grid.n_points();
    let g = proj.window_on(&grid);
    let mut samples = wigner_to_samples(w);
    for s in 0..n {
        for d_idx in 0..n {
            let (i, j) = rotated_pair(s, signed_index(d_idx, n), n);
            samples[s * n + d_idx] *= g[i] * g[j];
        }
    }
    let (values, _) = samples_to_wigner(samples, n, grid.spacing(), w.hbar());
    WignerFunction::new(grid, w.hbar(), values, w.time())
}

/// Physical momentum cut-off `m L / eps` and the matching smearing
/// `hbar / p_c`.
pub fn momentum_cutoff(mass: f64, length: f64, eps: f64, hbar: f64) -> Result<(f64, f64)> {
    if !(eps > 0.0) {
        return Err(ZenoError::Argument(format!("eps must be positive, got {eps}")));
    }
    let pc = mass * length / eps;
    Ok((pc, hbar / pc))
}
