//! Absorbing potential outside the region, the continuous counterpart of a
//! projection string.

use crate::error::{Result, ZenoError};
use crate::lattice::{DensityMatrix, Grid1D, WignerFunction};
use crate::projectors::{Projector, ProjectorKind};
use crate::propagators::{evolve_stepper, QBMParams};

/// Imaginary potential `-i V(x)` with `V = V0 (1 - g(x))`, where `g` is the
/// projector window (sharp or smeared).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexPotential {
    v0: f64,
    window: Projector,
}

impl ComplexPotential {
    pub fn new(v0: f64, length: f64, smearing: f64) -> Result<Self> {
        if !(v0 >= 0.0 && v0.is_finite()) {
            return Err(ZenoError::Config(format!("V0 must be non-negative, got {v0}")));
        }
        let kind = if smearing > 0.0 {
            ProjectorKind::Smeared
        } else {
            ProjectorKind::Sharp
        };
        Ok(Self {
            v0,
            window: Projector::new(length, smearing, kind)?,
        })
    }

    /// Potential matched to projections every `eps`.
    pub fn for_projector(proj: &Projector, eps: f64, hbar: f64) -> Result<Self> {
        Ok(Self {
            v0: v0_from_eps(eps, hbar)?,
            window: *proj,
        })
    }

    pub fn v0(&self) -> f64 {
        self.v0
    }

    pub fn smearing(&self) -> f64 {
        self.window.smearing()
    }

    pub fn length(&self) -> f64 {
        self.window.length()
    }

    pub fn value(&self, x: f64) -> f64 {
        self.v0 * (1.0 - self.window.window(x))
    }

    pub fn profile(&self, grid: &Grid1D) -> Vec<f64> {
        grid.coords().iter().map(|&x| self.value(x)).collect()
    }

    /// Second derivative of the profile, analytic for the smeared window.
    pub fn curvature(&self, x: f64) -> f64 {
        let a = self.window.smearing();
        if a == 0.0 {
            return 0.0;
        }
        let h = 0.5 * self.window.length();
        // g'' = delta_a'(x + h) - delta_a'(x - h), delta_a' = -u/a^2 delta_a
        let da = |u: f64| {
            -u / (a * a) * (-u * u / (2.0 * a * a)).exp() / ((2.0 * std::f64::consts::PI).sqrt() * a)
        };
        -self.v0 * (da(x + h) - da(x - h))
    }
}

/// `V0 = hbar / eps`.
pub fn v0_from_eps(eps: f64, hbar: f64) -> Result<f64> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(ZenoError::Argument(format!("eps must be positive, got {eps}")));
    }
    Ok(hbar / eps)
}

/// Evolve for time `t` with the absorbing potential, using steps of at most
/// `dt`.
pub fn evolve_with_potential(
    rho: &DensityMatrix,
    pot: &ComplexPotential,
    params: &QBMParams,
    t: f64,
    dt: f64,
) -> Result<DensityMatrix> {
    if !(t >= 0.0) || !(dt > 0.0) {
        return Err(ZenoError::Argument(format!(
            "need t >= 0 and dt > 0 (t = {t}, dt = {dt})"
        )));
    }
    let steps = (t / dt - 1e-9).ceil().max(0.0) as usize;
    if steps == 0 {
        return Ok(rho.clone());
    }
    evolve_stepper(rho, params, Some(pot), t / steps as f64, steps)
}

/// Order-of-magnitude reflection probability from a smeared absorbing step,
/// `(V0/E)^2 exp(-4 a^2 p^2 / hbar^2)`, dropping prefactors of order one.
pub fn reflection_estimate(pot: &ComplexPotential, p: f64, energy: f64, hbar: f64) -> f64 {
    let a = pot.smearing();
    (pot.v0() / energy).powi(2) * (-4.0 * a * a * p * p / (hbar * hbar)).exp()
}

/// Size of the leading quantum correction to the absorbing term in the
/// phase-space equation relative to the classical one:
/// `sum |hbar^2 V'' d^2W/dp^2| / sum |V W|`. Momentum derivatives are centred
/// differences; the boundary rows are skipped.
pub fn quantum_term_ratio(w: &WignerFunction, pot: &ComplexPotential) -> f64 {
    let n = w.x_grid().n_points();
    let dp = w.p_grid().spacing();
    let hb = w.hbar();
    let (mut num, mut den) = (0.0, 0.0);
    for s in 0..n {
        let x = w.x_grid().coord(s);
        let (v, vpp) = (pot.value(x), pot.curvature(x));
        for k in 1..n - 1 {
            let d2 = (w.get(k + 1, s) - 2.0 * w.get(k, s) + w.get(k - 1, s)) / (dp * dp);
            num += (hb * hb * vpp * d2).abs();
            den += (v * w.get(k, s)).abs();
        }
    }
    if den == 0.0 {
        return f64::INFINITY;
    }
    num / den
}
