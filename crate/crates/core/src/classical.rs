//! Classical phase-space dynamics with momentum diffusion and an absorbing
//! region boundary: a finite-volume Fokker-Planck solver, extraction of the
//! slowest decay mode, and a Langevin Monte Carlo cross-check.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Result, ZenoError};
use crate::lattice::Grid1D;
use crate::propagators::QBMParams;

/// `w(p, x)` on a `p`-major lattice: `values[k * n_x + i]` is the cell
/// average around `(p_k, x_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSpaceDistribution {
    x_grid: Grid1D,
    p_grid: Grid1D,
    values: Vec<f64>,
    time: f64,
}

/// Normalized moments; `xp_sym` is `<xp + px> = 2<xp>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassicalMoments {
    pub mass: f64,
    pub x2: f64,
    pub p2: f64,
    pub xp_sym: f64,
}

/// Lattices whose cell faces fall exactly on `x = +-length/2`: `half_cells`
/// cells on each side of the central one, `pad` extra cells beyond the
/// boundary, and `n_p` momentum cells spanning `[-p_max, p_max)`.
pub fn classical_grids(length: f64, half_cells: usize, pad: usize, p_max: f64, n_p: usize) -> Result<(Grid1D, Grid1D)> {
    if !(length > 0.0 && p_max > 0.0) {
        return Err(ZenoError::Config(format!(
            "classical lattice needs L > 0 and p_max > 0 (L = {length}, p_max = {p_max})"
        )));
    }
    let dx = length / (2 * half_cells + 1) as f64;
    let n_x = 2 * (half_cells + pad + 1);
    let x = Grid1D::new(n_x, dx)?;
    let p = Grid1D::new(n_p, 2.0 * p_max / n_p as f64)?;
    Ok((x, p))
}

impl PhaseSpaceDistribution {
    pub fn new(x_grid: Grid1D, p_grid: Grid1D, values: Vec<f64>, time: f64) -> Result<Self> {
        if values.len() != x_grid.n_points() * p_grid.n_points() {
            return Err(ZenoError::Config(format!(
                "phase-space values have length {}, expected {}",
                values.len(),
                x_grid.n_points() * p_grid.n_points()
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite() || **v < -1e-12) {
            return Err(ZenoError::NumericalStability(format!(
                "phase-space density must be finite and non-negative, found {v}"
            )));
        }
        Ok(Self {
            x_grid,
            p_grid,
            values,
            time,
        })
    }

    fn from_fn(x_grid: Grid1D, p_grid: Grid1D, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let xs = x_grid.coords();
        let mut values = Vec::with_capacity(xs.len() * p_grid.n_points());
        for k in 0..p_grid.n_points() {
            let p = p_grid.coord(k);
            values.extend(xs.iter().map(|&x| f(p, x)));
        }
        Self::new(x_grid, p_grid, values, 0.0)?.normalized()
    }

    /// Product Gaussian, unit mass.
    pub fn gaussian(x_grid: Grid1D, p_grid: Grid1D, sigma_x: f64, sigma_p: f64) -> Result<Self> {
        Self::from_fn(x_grid, p_grid, |p, x| {
            (-x * x / (2.0 * sigma_x * sigma_x) - p * p / (2.0 * sigma_p * sigma_p)).exp()
        })
    }

    /// Uniform in `|x| < length/2`, Gaussian in `p`, unit mass.
    pub fn uniform(x_grid: Grid1D, p_grid: Grid1D, length: f64, sigma_p: f64) -> Result<Self> {
        Self::from_fn(x_grid, p_grid, |p, x| {
            if x.abs() < 0.5 * length {
                (-p * p / (2.0 * sigma_p * sigma_p)).exp()
            } else {
                0.0
            }
        })
    }

    /// `cos(pi x / L)` inside the region, Gaussian in `p`, unit mass.
    pub fn cosine(x_grid: Grid1D, p_grid: Grid1D, length: f64, sigma_p: f64) -> Result<Self> {
        Self::from_fn(x_grid, p_grid, |p, x| {
            if x.abs() < 0.5 * length {
                (std::f64::consts::PI * x / length).cos() * (-p * p / (2.0 * sigma_p * sigma_p)).exp()
            } else {
                0.0
            }
        })
    }

    pub fn x_grid(&self) -> &Grid1D {
        &self.x_grid
    }

    pub fn p_grid(&self) -> &Grid1D {
        &self.p_grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn get(&self, k: usize, i: usize) -> f64 {
        self.values[k * self.x_grid.n_points() + i]
    }

    fn cell(&self) -> f64 {
        self.x_grid.spacing() * self.p_grid.spacing()
    }

    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.cell()
    }

    pub fn normalized(&self) -> Result<Self> {
        let m = self.mass();
        if !(m > 0.0) {
            return Err(ZenoError::Depleted { trace: m, floor: 0.0 });
        }
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v /= m);
        Ok(out)
    }

    pub fn moments(&self) -> Result<ClassicalMoments> {
        let nx = self.x_grid.n_points();
        let xs = self.x_grid.coords();
        let (mut m0, mut x2, mut p2, mut xp) = (0.0, 0.0, 0.0, 0.0);
        for (k, row) in self.values.chunks(nx).enumerate() {
            let p = self.p_grid.coord(k);
            for (&w, &x) in row.iter().zip(&xs) {
                m0 += w;
                x2 += w * x * x;
                p2 += w * p * p;
                xp += w * x * p;
            }
        }
        if !(m0 > 0.0) {
            return Err(ZenoError::Depleted { trace: m0 * self.cell(), floor: 0.0 });
        }
        Ok(ClassicalMoments {
            mass: m0 * self.cell(),
            x2: x2 / m0,
            p2: p2 / m0,
            xp_sym: 2.0 * xp / m0,
        })
    }

    /// Position marginal `int w dp`.
    pub fn position_marginal(&self) -> Vec<f64> {
        let nx = self.x_grid.n_points();
        let dp = self.p_grid.spacing();
        let mut out = vec![0.0; nx];
        for row in self.values.chunks(nx) {
            out.iter_mut().zip(row).for_each(|(o, w)| *o += w * dp);
        }
        out
    }

    /// Largest pointwise difference after normalizing both to unit mass.
    pub fn shape_difference(&self, other: &Self) -> f64 {
        let (ma, mb) = (self.mass(), other.mass());
        let peak = self.values.iter().fold(0.0f64, |a, v| a.max(v.abs())) / ma;
        let diff = self
            .values
            .iter()
            .zip(&other.values)
            .fold(0.0f64, |a, (x, y)| a.max((x / ma - y / mb).abs()));
        diff / peak
    }

    fn zero_outside(&mut self, length: f64) {
        let nx = self.x_grid.n_points();
        let outside: Vec<usize> = (0..nx).filter(|&i| self.x_grid.coord(i).abs() > 0.5 * length).collect();
        for row in self.values.chunks_mut(nx) {
            for &i in &outside {
                row[i] = 0.0;
            }
        }
    }
}

/// How probability leaving the region is removed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Absorber {
    None,
    /// Removed at every internal step.
    Continuous,
    /// Removed only at multiples of the gate period.
    Gates(f64),
}

/// Integrate `w_t = -(p/m) w_x + D w_pp` for time `t` with continuous
/// absorption outside `|x| < length/2` (or none).
pub fn evolve_classical(
    w: &PhaseSpaceDistribution,
    params: &QBMParams,
    length: f64,
    t: f64,
    absorbing: bool,
) -> Result<PhaseSpaceDistribution> {
    let absorber = if absorbing { Absorber::Continuous } else { Absorber::None };
    evolve_classical_with(w, params, length, t, absorber)
}

/// As [`evolve_classical`] with an explicit absorber. Gates are placed at
/// multiples of the period measured from `t = 0` of the distribution's clock.
pub fn evolve_classical_with(
    w: &PhaseSpaceDistribution,
    params: &QBMParams,
    length: f64,
    t: f64,
    absorber: Absorber,
) -> Result<PhaseSpaceDistribution> {
    params.validate()?;
    if !(t >= 0.0) {
        return Err(ZenoError::Argument(format!("evolution time must be non-negative, got {t}")));
    }
    let mut out = w.clone();
    if t == 0.0 {
        return Ok(out);
    }
    match absorber {
        Absorber::Gates(period) => {
            if !(period > 0.0) {
                return Err(ZenoError::Argument(format!("gate period must be positive, got {period}")));
            }
            let end = w.time + t;
            let mut next = ((w.time / period + 1e-9).floor() + 1.0) * period;
            while next <= end + 1e-12 {
                out = integrate(&out, params, next - out.time, false, length)?;
                out.time = next;
                out.zero_outside(length);
                next += period;
            }
            if end > out.time + 1e-12 {
                out = integrate(&out, params, end - out.time, false, length)?;
            }
            out.time = end;
        }
        Absorber::Continuous => out = integrate(&out, params, t, true, length)?,
        Absorber::None => out = integrate(&out, params, t, false, length)?,
    }
    Ok(out)
}

/// Internal step: half the advection CFL limit, and diffusion number at most
/// one for accuracy of the implicit step.
fn stable_step(w: &PhaseSpaceDistribution, params: &QBMParams) -> f64 {
    let (dx, dp) = (w.x_grid.spacing(), w.p_grid.spacing());
    let vmax = w.p_grid.coord(0).abs().max(w.p_grid.coord(w.p_grid.n_points() - 1).abs()) / params.mass;
    let mut dt = 0.5 * dx / vmax;
    if params.diffusion > 0.0 {
        dt = dt.min(dp * dp / params.diffusion);
    }
    dt
}

fn integrate(w: &PhaseSpaceDistribution, params: &QBMParams, t: f64, absorbing: bool, length: f64) -> Result<PhaseSpaceDistribution> {
    let steps = (t / stable_step(w, params)).ceil().max(1.0) as usize;
    let h = t / steps as f64;
    let nx = w.x_grid.n_points();
    let np = w.p_grid.n_points();
    let dx = w.x_grid.spacing();
    let mu = params.diffusion * 0.5 * h / (w.p_grid.spacing() * w.p_grid.spacing());
    let courant: Vec<f64> = (0..np).map(|k| w.p_grid.coord(k) / params.mass * h / dx).collect();

    let mut out = w.clone();
    let mut cols = vec![0.0; nx * np];
    for _ in 0..steps {
        if mu > 0.0 {
            diffuse(&mut out.values, &mut cols, nx, np, mu);
        }
        out.values
            .par_chunks_mut(nx)
            .zip(courant.par_iter())
            .for_each(|(row, &c)| advect_row(row, c));
        if mu > 0.0 {
            diffuse(&mut out.values, &mut cols, nx, np, mu);
        }
        if absorbing {
            out.zero_outside(length);
        }
    }
    out.time = w.time + t;
    let m = out.mass();
    if !m.is_finite() || m < -1e-12 {
        return Err(ZenoError::NumericalStability(format!("classical mass became {m}")));
    }
    out.values.iter_mut().for_each(|v| {
        if *v < 0.0 && *v > -1e-12 {
            *v = 0.0;
        }
    });
    Ok(out)
}

/// One MUSCL-Hancock step with van Leer slopes on a periodic row.
fn advect_row(row: &mut [f64], c: f64) {
    let n = row.len();
    let slope = |i: usize| {
        let a = row[i] - row[(i + n - 1) % n];
        let b = row[(i + 1) % n] - row[i];
        if a * b > 0.0 {
            2.0 * a * b / (a + b)
        } else {
            0.0
        }
    };
    let s: Vec<f64> = (0..n).map(slope).collect();
    // flux through the face between i and i+1
    let flux: Vec<f64> = (0..n)
        .map(|i| {
            if c >= 0.0 {
                c * (row[i] + 0.5 * (1.0 - c) * s[i])
            } else {
                let j = (i + 1) % n;
                c * (row[j] - 0.5 * (1.0 + c) * s[j])
            }
        })
        .collect();
    for i in 0..n {
        row[i] -= flux[i] - flux[(i + n - 1) % n];
    }
}

/// Backward-Euler diffusion in `p` with zero-flux ends, `mu = D h / dp^2`.
fn diffuse(values: &mut [f64], cols: &mut [f64], nx: usize, np: usize, mu: f64) {
    for k in 0..np {
        for i in 0..nx {
            cols[i * np + k] = values[k * nx + i];
        }
    }
    cols.par_chunks_mut(np).for_each(|col| {
        // Thomas algorithm for the symmetric tridiagonal system
        let diag = |k: usize| if k == 0 || k == np - 1 { 1.0 + mu } else { 1.0 + 2.0 * mu };
        let mut cp = vec![0.0; np];
        let mut b0 = diag(0);
        cp[0] = -mu / b0;
        col[0] /= b0;
        for k in 1..np {
            b0 = diag(k) + mu * cp[k - 1];
            cp[k] = -mu / b0;
            col[k] = (col[k] + mu * col[k - 1]) / b0;
        }
        for k in (0..np - 1).rev() {
            col[k] -= cp[k] * col[k + 1];
        }
    });
    for k in 0..np {
        for i in 0..nx {
            values[k * nx + i] = cols[i * np + k];
        }
    }
}

/// Initial shapes for the steady-mode search.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitialShape {
    Uniform,
    Gaussian,
    Cosine,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyModeOptions {
    /// Cells on each side of the central one inside the region.
    pub half_cells: usize,
    pub p_max: f64,
    pub n_p: usize,
    pub initial: InitialShape,
    /// Relative shape change per unit time at which the search stops.
    pub tolerance: f64,
    pub max_time: f64,
    /// Remove probability at these intervals instead of continuously.
    pub gate_period: Option<f64>,
}

impl Default for SteadyModeOptions {
    fn default() -> Self {
        Self {
            half_cells: 50,
            p_max: 6.0,
            n_p: 240,
            initial: InitialShape::Uniform,
            tolerance: 1e-6,
            max_time: 60.0,
            gate_period: None,
        }
    }
}

/// Slowest decay mode in dimensionless variables (`x/L`, `p/p_s`, `t lambda`).
#[derive(Debug, Clone)]
pub struct SteadyMode {
    pub lambda: f64,
    /// Unit-mass shape.
    pub shape: PhaseSpaceDistribution,
    pub x2: f64,
    pub p2: f64,
    /// `2 <x p>`.
    pub xp_sym: f64,
    /// Dimensionless time at which the shape stopped changing.
    pub settled_at: f64,
}

/// Moments and decay rate of a dimensionless mode in physical units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledMode {
    pub lambda: f64,
    pub x2: f64,
    pub p2: f64,
    pub xp_sym: f64,
}

impl SteadyMode {
    /// Rescale with `L`, `p_s = (m L D)^(1/3)` and `lambda = (D / m^2 L^2)^(1/3)`.
    pub fn rescale(&self, params: &QBMParams, length: f64) -> ScaledMode {
        let (m, d) = (params.mass, params.diffusion);
        let ps = (m * length * d).cbrt();
        let rate = (d / (m * m * length * length)).cbrt();
        ScaledMode {
            lambda: self.lambda * rate,
            x2: self.x2 * length * length,
            p2: self.p2 * ps * ps,
            xp_sym: self.xp_sym * length * ps,
        }
    }

    pub fn half_life(&self) -> f64 {
        std::f64::consts::LN_2 / self.lambda
    }
}

/// Evolve from the chosen initial shape until the normalized distribution
/// stops changing, in units with `m = D = L = 1`.
pub fn find_steady_mode(opts: &SteadyModeOptions) -> Result<SteadyMode> {
    let unit = QBMParams::new(1.0, 1.0, 1.0)?;
    let (xg, pg) = classical_grids(1.0, opts.half_cells, 4, opts.p_max, opts.n_p)?;
    let mut w = match opts.initial {
        InitialShape::Uniform => PhaseSpaceDistribution::uniform(xg, pg, 1.0, 1.0)?,
        InitialShape::Gaussian => PhaseSpaceDistribution::gaussian(xg, pg, 0.15, 1.0)?,
        InitialShape::Cosine => PhaseSpaceDistribution::cosine(xg, pg, 1.0, 1.0)?,
    };
    w.zero_outside(1.0);
    let absorber = opts.gate_period.map_or(Absorber::Continuous, Absorber::Gates);
    let chunk = match opts.gate_period {
        Some(g) => g * (0.25 / g).ceil(),
        None => 0.25,
    };
    let mut change = f64::INFINITY;
    while w.time() < opts.max_time {
        let next = evolve_classical_with(&w, &unit, 1.0, chunk, absorber)?;
        let decay = next.mass() / w.mass();
        change = next.shape_difference(&w) / chunk;
        let renorm = next.normalized()?;
        w = PhaseSpaceDistribution { time: next.time, ..renorm };
        if change < opts.tolerance {
            let m = w.moments()?;
            return Ok(SteadyMode {
                lambda: -decay.ln() / chunk,
                x2: m.x2,
                p2: m.p2,
                xp_sym: m.xp_sym,
                settled_at: w.time,
                shape: w,
            });
        }
    }
    Err(ZenoError::Convergence {
        iterations: (opts.max_time / chunk).ceil() as usize,
        last_change: change,
        context: "classical steady mode".into(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LangevinOptions {
    pub n_particles: usize,
    pub t_end: f64,
    pub dt: f64,
    pub seed: u64,
    pub absorbing: bool,
    /// Replace each absorbed particle by a copy of a random survivor
    /// (Fleming-Viot), which samples the conditioned ensemble.
    pub resample: bool,
    /// Initial momenta are Gaussian with this width.
    pub init_p_sigma: f64,
    /// Initial positions are Gaussian with this width, or uniform over the
    /// region when `None`.
    pub init_x_sigma: Option<f64>,
    /// Survival is recorded every this many steps.
    pub record_every: usize,
}

#[derive(Debug, Clone)]
pub struct LangevinResult {
    /// Probability of not having been absorbed.
    pub survival: Vec<(f64, f64)>,
    /// Moments of the surviving (or resampled) ensemble at `t_end`.
    pub moments: ClassicalMoments,
    /// Mean absorption rate over the second half of the run.
    pub decay_rate: f64,
}

/// Euler-Maruyama for `dx = (p/m) dt`, `dp = sqrt(2D) dW`, each particle on
/// its own ChaCha stream derived from the seed.
pub fn langevin_oracle(params: &QBMParams, length: f64, opts: &LangevinOptions) -> Result<LangevinResult> {
    params.validate()?;
    if opts.n_particles == 0 || !(opts.dt > 0.0) || !(opts.t_end > 0.0) || !(length > 0.0) {
        return Err(ZenoError::Argument(
            "Langevin run needs particles, dt > 0, t_end > 0 and L > 0".into(),
        ));
    }
    let steps = (opts.t_end / opts.dt).round().max(1.0) as usize;
    let dt = opts.t_end / steps as f64;
    let kick = (2.0 * params.diffusion * dt).sqrt();
    let half = 0.5 * length;
    let every = opts.record_every.max(1);

    struct Particle {
        x: f64,
        p: f64,
        alive: bool,
        rng: ChaCha8Rng,
    }
    let mut ps: Vec<Particle> = (0..opts.n_particles)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            rng.set_stream(i as u64 + 1);
            let x = match opts.init_x_sigma {
                Some(sx) => sx * rng.sample::<f64, _>(StandardNormal),
                None => (rng.random::<f64>() - 0.5) * length,
            };
            let z: f64 = rng.sample(StandardNormal);
            Particle {
                x,
                p: opts.init_p_sigma * z,
                alive: true,
                rng,
            }
        })
        .collect();
    let mut master = ChaCha8Rng::seed_from_u64(opts.seed);
    master.set_stream(0);

    let n = opts.n_particles as f64;
    let mut survival = vec![(0.0, 1.0)];
    let mut s = 1.0;
    let mut log_s_mid = None;
    for step in 1..=steps {
        ps.par_iter_mut().filter(|q| q.alive).for_each(|q| {
            q.x += q.p / params.mass * dt;
            let z: f64 = q.rng.sample(StandardNormal);
            q.p += kick * z;
            if opts.absorbing && q.x.abs() > half {
                q.alive = false;
            }
        });
        if opts.absorbing {
            if opts.resample {
                let dead: Vec<usize> = (0..ps.len()).filter(|&i| !ps[i].alive).collect();
                s *= 1.0 - dead.len() as f64 / n;
                let alive: Vec<usize> = (0..ps.len()).filter(|&i| ps[i].alive).collect();
                if alive.is_empty() {
                    return Err(ZenoError::Depleted { trace: 0.0, floor: 1.0 / n });
                }
                for i in dead {
                    let j = alive[master.random_range(0..alive.len())];
                    let (x, p) = (ps[j].x, ps[j].p);
                    ps[i].x = x;
                    ps[i].p = p;
                    ps[i].alive = true;
                }
            } else {
                s = ps.iter().filter(|q| q.alive).count() as f64 / n;
            }
        }
        if step == steps / 2 {
            log_s_mid = Some((step as f64 * dt, s.ln()));
        }
        if step % every == 0 || step == steps {
            survival.push((step as f64 * dt, s));
        }
    }

    let alive: Vec<&Particle> = ps.iter().filter(|q| q.alive).collect();
    if alive.is_empty() {
        return Err(ZenoError::Depleted { trace: 0.0, floor: 1.0 / n });
    }
    let k = alive.len() as f64;
    let moments = ClassicalMoments {
        mass: k / n,
        x2: alive.iter().map(|q| q.x * q.x).sum::<f64>() / k,
        p2: alive.iter().map(|q| q.p * q.p).sum::<f64>() / k,
        xp_sym: 2.0 * alive.iter().map(|q| q.x * q.p).sum::<f64>() / k,
    };
    let decay_rate = match log_s_mid {
        Some((tm, lm)) if opts.t_end > tm => (lm - s.ln()) / (opts.t_end - tm),
        _ => 0.0,
    };
    Ok(LangevinResult {
        survival,
        moments,
        decay_rate,
    })
}

/// Mean and standard error of Langevin estimates over independent batches.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatchEstimate {
    pub mean: ScaledMode,
    pub stderr: ScaledMode,
    pub batches: usize,
}

/// Repeat [`langevin_oracle`] with seeds `seed, seed + 1, ...`.
pub fn langevin_batches(params: &QBMParams, length: f64, opts: &LangevinOptions, batches: usize) -> Result<BatchEstimate> {
    if batches < 2 {
        return Err(ZenoError::Argument("need at least two batches for an error estimate".into()));
    }
    let runs = (0..batches)
        .map(|b| {
            let o = LangevinOptions {
                seed: opts.seed.wrapping_add(b as u64),
                ..*opts
            };
            langevin_oracle(params, length, &o).map(|r| [r.decay_rate, r.moments.x2, r.moments.p2, r.moments.xp_sym])
        })
        .collect::<Result<Vec<_>>>()?;
    let nb = batches as f64;
    let mut mean = [0.0; 4];
    let mut err = [0.0; 4];
    for j in 0..4 {
        mean[j] = runs.iter().map(|r| r[j]).sum::<f64>() / nb;
        let var = runs.iter().map(|r| (r[j] - mean[j]).powi(2)).sum::<f64>() / (nb - 1.0);
        err[j] = (var / nb).sqrt();
    }
    let mode = |a: [f64; 4]| ScaledMode {
        lambda: a[0],
        x2: a[1],
        p2: a[2],
        xp_sym: a[3],
    };
    Ok(BatchEstimate {
        mean: mode(mean),
        stderr: mode(err),
        batches,
    })
}
