//! Closed-form toy models used as oracles: a monitored two-level system and
//! a particle repeatedly projected onto a Gaussian state.

use crate::error::{Result, ZenoError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LindbladAxis {
    X,
    Y,
}

/// Two-level system with `H = omega sigma_x` and a single Lindblad operator
/// `sqrt(D) sigma_axis`, monitored for spin up along z.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpinModelParams {
    pub omega: f64,
    pub diffusion: f64,
    pub axis: LindbladAxis,
}

impl SpinModelParams {
    pub fn new(omega: f64, diffusion: f64, axis: LindbladAxis) -> Result<Self> {
        if !(omega > 0.0) || !(diffusion >= 0.0) {
            return Err(ZenoError::Config(format!(
                "spin model needs omega > 0 and D >= 0 (omega = {omega}, D = {diffusion})"
            )));
        }
        Ok(Self {
            omega,
            diffusion,
            axis,
        })
    }
}

/// `<sigma_z>(t)` starting from spin up.
fn sz(params: &SpinModelParams, t: f64) -> f64 {
    let (w, d) = (params.omega, params.diffusion);
    match params.axis {
        LindbladAxis::X => (-4.0 * d * t).exp() * (2.0 * w * t).cos(),
        LindbladAxis::Y => {
            // z'' + 4D z' + 4 w^2 z = 0, z(0) = 1, z'(0) = -4D
            let gap = w * w - d * d;
            let osc = if gap > 0.0 {
                let om = gap.sqrt();
                (2.0 * om * t).cos() - d / om * (2.0 * om * t).sin()
            } else if gap < 0.0 {
                let k = (-gap).sqrt();
                (2.0 * k * t).cosh() - d / k * (2.0 * k * t).sinh()
            } else {
                1.0 - 2.0 * d * t
            };
            (-2.0 * d * t).exp() * osc
        }
    }
}

/// Probability of still finding spin up after free Lindblad evolution for `t`.
pub fn spin_survival_single(params: &SpinModelParams, t: f64) -> f64 {
    0.5 * (1.0 + sz(params, t))
}

/// Survival after `n` projections spaced by `eps`.
pub fn spin_zeno_sequence(params: &SpinModelParams, eps: f64, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(ZenoError::Argument("need at least one projection".into()));
    }
    Ok(spin_survival_single(params, eps).powi(n as i32))
}

/// 2x2 density matrix as `[[rho_uu, rho_ud], [rho_du, rho_dd]]` with complex
/// entries stored as `(re, im)`.
pub type SpinState = [[(f64, f64); 2]; 2];

/// Integrate the Bloch equations with classical RK4 and return the density
/// matrix at time `t`.
pub fn spin_lindblad_numeric(params: &SpinModelParams, t: f64, dt: f64) -> Result<SpinState> {
    if !(dt > 0.0) || !(t >= 0.0) {
        return Err(ZenoError::Argument(format!("need t >= 0, dt > 0 (t = {t}, dt = {dt})")));
    }
    let (w, d) = (params.omega, params.diffusion);
    let (gx, gy, gz) = match params.axis {
        LindbladAxis::X => (0.0, 4.0 * d, 4.0 * d),
        LindbladAxis::Y => (4.0 * d, 0.0, 4.0 * d),
    };
    // precession about x at angular frequency 2 omega, plus dephasing
    let f = |s: [f64; 3]| -> [f64; 3] { [-gx * s[0], -2.0 * w * s[2] - gy * s[1], 2.0 * w * s[1] - gz * s[2]] };
    let mut s = [0.0, 0.0, 1.0];
    let steps = (t / dt).ceil() as usize;
    let h = if steps > 0 { t / steps as f64 } else { 0.0 };
    for _ in 0..steps {
        let k1 = f(s);
        let k2 = f(add(s, k1, 0.5 * h));
        let k3 = f(add(s, k2, 0.5 * h));
        let k4 = f(add(s, k3, h));
        for i in 0..3 {
            s[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    let [x, y, z] = s;
    Ok([
        [(0.5 * (1.0 + z), 0.0), (0.5 * x, -0.5 * y)],
        [(0.5 * x, 0.5 * y), (0.5 * (1.0 - z), 0.0)],
    ])
}

fn add(a: [f64; 3], b: [f64; 3], h: f64) -> [f64; 3] {
    [a[0] + h * b[0], a[1] + h * b[1], a[2] + h * b[2]]
}

/// Free particle with momentum diffusion, repeatedly projected onto the
/// Gaussian state of width `sigma`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianModelParams {
    pub sigma: f64,
    pub diffusion: f64,
    pub mass: f64,
    pub hbar: f64,
}

impl GaussianModelParams {
    pub fn new(sigma: f64, diffusion: f64, mass: f64, hbar: f64) -> Result<Self> {
        if !(sigma > 0.0 && mass > 0.0 && hbar > 0.0 && diffusion >= 0.0) {
            return Err(ZenoError::Config(format!(
                "invalid Gaussian model (sigma {sigma}, D {diffusion}, m {mass}, hbar {hbar})"
            )));
        }
        Ok(Self {
            sigma,
            diffusion,
            mass,
            hbar,
        })
    }

    /// Spreading (Zeno) time `m sigma^2 / hbar`.
    pub fn zeno_time(&self) -> f64 {
        self.mass * self.sigma * self.sigma / self.hbar
    }

    /// Decoherence time `hbar^2 / (D sigma^2)`; infinite when `D = 0`.
    pub fn decoherence_time(&self) -> f64 {
        if self.diffusion == 0.0 {
            f64::INFINITY
        } else {
            self.hbar * self.hbar / (self.diffusion * self.sigma * self.sigma)
        }
    }

    pub fn localization_time(&self) -> f64 {
        if self.diffusion == 0.0 {
            f64::INFINITY
        } else {
            (self.mass * self.hbar / self.diffusion).sqrt()
        }
    }
}

/// `<psi| rho_t |psi>` for the Gaussian initial state evolved for `t`.
/// Short times: `1 - 2t/t_d - t^2/(32 t_z^2)`.
pub fn gaussian_overlap(params: &GaussianModelParams, t: f64) -> f64 {
    let tz = params.zeno_time();
    let td = params.decoherence_time();
    let a = 1.0 + 4.0 * t / td;
    let b = 1.0 + t * t / (16.0 * tz * tz) * (1.0 + 4.0 * t / (3.0 * td));
    1.0 / (a * b).sqrt()
}
