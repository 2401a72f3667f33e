//! Probability current, the velocity field it induces, and flux lines traced
//! through piecewise evolution and projection.

use rayon::prelude::*;

use crate::error::{Result, ZenoError};
use crate::lattice::{DensityMatrix, Grid1D};
use crate::projectors::project;
use crate::propagators::{evolve_kernel, QBMParams};
use crate::runner::{evolve_segment, initial_state, ExperimentConfig, InitialState};
use crate::spectral::{derivative_left, derivative_rows, Spectral, C64};

/// Velocities below `DENSITY_FLOOR * max density` are masked.
pub const DENSITY_FLOOR: f64 = 1e-10;

/// `J(x) = (hbar/m) Im (d_x rho)(x, x)`, spectral derivative.
pub fn current(rho: &DensityMatrix, params: &QBMParams) -> Vec<f64> {
    let n = rho.n();
    let sp = Spectral::new(n);
    let d = derivative_left(&sp, rho.values(), n, rho.grid().spacing());
    (0..n).map(|i| params.hbar / params.mass * d[i * n + i].im).collect()
}

/// `v = J / rho(x, x)`, `None` where the density is below the floor.
pub fn velocity(rho: &DensityMatrix, params: &QBMParams) -> Vec<Option<f64>> {
    let j = current(rho, params);
    let diag = rho.diagonal();
    let floor = DENSITY_FLOOR * diag.iter().fold(0.0f64, |a, &b| a.max(b));
    diag.iter()
        .zip(j)
        .map(|(&r, j)| if r > floor { Some(j / r) } else { None })
        .collect()
}

/// Spectral `d/dx` of a real lattice function.
fn derivative_1d(f: &[f64], eta: f64) -> Vec<f64> {
    let n = f.len();
    let sp = Spectral::new(n);
    let mut buf: Vec<C64> = f.iter().map(|&v| C64::new(v, 0.0)).collect();
    derivative_rows(&sp, &mut buf, n, eta);
    buf.iter().map(|z| z.re).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContinuityResidual {
    /// `sqrt(eta sum r^2)` of `d_t rho(x,x) + d_x J`.
    pub rms: f64,
    /// The same divided by the norm of `d_t rho(x,x)`.
    pub relative: f64,
    /// Time at which it was evaluated.
    pub t: f64,
}

/// Continuity-equation residual at `rho.time() + h`, with the time
/// derivative taken by central differences of exact evolutions.
pub fn continuity_residual(rho: &DensityMatrix, params: &QBMParams, h: f64) -> Result<ContinuityResidual> {
    let mid = evolve_kernel(rho, params, h)?;
    let end = evolve_kernel(rho, params, 2.0 * h)?;
    let eta = rho.grid().spacing();
    let dj = derivative_1d(&current(&mid, params), eta);
    let (a, b) = (rho.diagonal(), end.diagonal());
    let (mut r2, mut d2) = (0.0, 0.0);
    for i in 0..rho.n() {
        let dt = (b[i] - a[i]) / (2.0 * h);
        r2 += (dt + dj[i]).powi(2);
        d2 += dt * dt;
    }
    let rms = (eta * r2).sqrt();
    let scale = (eta * d2).sqrt();
    Ok(ContinuityResidual {
        rms,
        relative: if scale > 0.0 { rms / scale } else { rms },
        t: rho.time() + h,
    })
}

/// Cumulative distribution of the normalized diagonal, linear between
/// lattice points.
#[derive(Debug, Clone)]
pub struct DensityCdf {
    xs: Vec<f64>,
    c: Vec<f64>,
}

impl DensityCdf {
    pub fn new(rho: &DensityMatrix) -> Result<Self> {
        let diag = rho.diagonal();
        let total: f64 = diag.iter().map(|v| v.max(0.0)).sum();
        if !(total > 0.0) {
            return Err(ZenoError::Depleted { trace: total, floor: 0.0 });
        }
        let mut acc = 0.0;
        let c = diag
            .iter()
            .map(|&v| {
                let v = v.max(0.0) / total;
                let mid = acc + 0.5 * v;
                acc += v;
                mid
            })
            .collect();
        Ok(Self { xs: rho.grid().coords(), c })
    }

    /// Fraction of probability to the left of `x`.
    pub fn at(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x <= self.xs[0] {
            return 0.0;
        }
        if x >= self.xs[n - 1] {
            return 1.0;
        }
        let eta = self.xs[1] - self.xs[0];
        let i = (((x - self.xs[0]) / eta).floor() as usize).min(n - 2);
        let f = (x - self.xs[i]) / eta;
        self.c[i] + f * (self.c[i + 1] - self.c[i])
    }

    /// Position below which a fraction `q` of the probability lies.
    pub fn quantile(&self, q: f64) -> f64 {
        let n = self.xs.len();
        let k = self.c.partition_point(|&v| v < q);
        if k == 0 {
            return self.xs[0];
        }
        if k >= n {
            return self.xs[n - 1];
        }
        let (c0, c1) = (self.c[k - 1], self.c[k]);
        let f = if c1 > c0 { (q - c0) / (c1 - c0) } else { 0.0 };
        self.xs[k - 1] + f * (self.xs[k] - self.xs[k - 1])
    }
}

/// Velocity snapshots. Two snapshots may share a time: the one before and
/// the one after a projection.
#[derive(Debug, Clone)]
pub struct VelocityField {
    pub x_grid: Grid1D,
    pub times: Vec<f64>,
    pub values: Vec<Vec<Option<f64>>>,
}

/// Velocity at `x` by linear interpolation; a masked neighbour is replaced
/// by the nearest finite value within two cells.
fn sample_at(grid: &Grid1D, v: &[Option<f64>], x: f64) -> Option<f64> {
    let n = v.len();
    let eta = grid.spacing();
    let s = (x - grid.coord(0)) / eta;
    if s < 0.0 || s >= (n - 1) as f64 {
        return None;
    }
    let i = s.floor() as usize;
    let f = s - i as f64;
    let pick = |j: usize| -> Option<f64> {
        if let Some(val) = v[j] {
            return Some(val);
        }
        (1..=2).find_map(|d| {
            let lo = j.checked_sub(d).and_then(|k| v[k]);
            let hi = v.get(j + d).copied().flatten();
            lo.or(hi)
        })
    };
    Some((1.0 - f) * pick(i)? + f * pick(i + 1)?)
}

#[derive(Debug, Clone)]
pub struct FluxLine {
    /// Quantile of the initial density the line starts on.
    pub quantile: f64,
    /// `(t, x)` at every snapshot time (both sides of a projection).
    pub samples: Vec<(f64, f64)>,
    /// Time at which the line left the lattice or hit a masked region.
    pub terminated_at: Option<f64>,
    /// Largest deviation of the density fraction to the left of the line
    /// from its value right after the preceding projection.
    pub max_quantile_drift: f64,
}

#[derive(Debug, Clone)]
pub struct FluxLineSet {
    pub seeds: Vec<f64>,
    pub lines: Vec<FluxLine>,
    pub projection_times: Vec<f64>,
    pub field: VelocityField,
    /// `(t, Tr rho)` after each projection.
    pub survival: Vec<(f64, f64)>,
}

impl FluxLineSet {
    pub fn max_quantile_drift(&self) -> f64 {
        self.lines.iter().fold(0.0, |a, l| a.max(l.max_quantile_drift))
    }

    /// `(t, x_b - x_a)` for two lines at their common sample times.
    pub fn spread(&self, a: usize, b: usize) -> Vec<(f64, f64)> {
        self.lines[a]
            .samples
            .iter()
            .zip(&self.lines[b].samples)
            .map(|(&(t, xa), &(_, xb))| (t, xb - xa))
            .collect()
    }

    /// Pairs of lines that swapped order, with the time it happened.
    pub fn crossings(&self, tol: f64) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        for a in 0..self.lines.len().saturating_sub(1) {
            for (&(t, xa), &(_, xb)) in self.lines[a].samples.iter().zip(&self.lines[a + 1].samples) {
                if xb < xa - tol {
                    out.push((a, a + 1, t));
                    break;
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluxOptions {
    pub n_lines: usize,
    /// Apply the configured projections; `false` gives free evolution.
    pub project: bool,
    /// Spacing of velocity snapshots; defaults to the config's `dt`.
    pub sample_dt: Option<f64>,
    pub rtol: f64,
    pub atol: f64,
}

impl Default for FluxOptions {
    fn default() -> Self {
        Self {
            n_lines: 9,
            project: true,
            sample_dt: None,
            rtol: 1e-8,
            atol: 1e-10,
        }
    }
}

/// Evolve the configured experiment, store the velocity field at every
/// snapshot, and integrate `dx/dt = v(x, t)` from the quantiles of the
/// initial density.
pub fn trace_flux_lines(config: &ExperimentConfig, opts: &FluxOptions) -> Result<FluxLineSet> {
    config.validate()?;
    if opts.n_lines < 2 {
        return Err(ZenoError::Argument(format!("need at least two flux lines, got {}", opts.n_lines)));
    }
    let sample_dt = opts.sample_dt.unwrap_or(config.dt);
    let per_interval = (config.eps / sample_dt).round().max(1.0) as usize;
    let h = config.eps / per_interval as f64;
    let grid = config.grid;
    let qbm = config.qbm;

    let mut rho = initial_state(config)?.with_time(0.0);
    if opts.project && matches!(config.initial, InitialState::Gaussian { .. }) {
        rho = project(&rho, &config.proj);
    }
    let cdf0 = DensityCdf::new(&rho)?;
    let seeds: Vec<f64> = (1..=opts.n_lines)
        .map(|k| cdf0.quantile(k as f64 / (opts.n_lines + 1) as f64))
        .collect();

    // snapshots and the CDF at each, with interval boundaries
    let mut times = vec![0.0];
    let mut values = vec![velocity(&rho, &qbm)];
    let mut cdfs = vec![cdf0];
    let mut baseline = vec![0usize];
    let mut projection_times = Vec::new();
    let mut survival = vec![(0.0, rho.trace())];

    let n_steps = (config.total_time / h + 1e-9).floor() as usize;
    for s in 1..=n_steps {
        let t = s as f64 * h;
        rho = evolve_segment(&rho, &qbm, config.env_on, h)?.with_time(t);
        times.push(t);
        values.push(velocity(&rho, &qbm));
        cdfs.push(DensityCdf::new(&rho)?);
        if opts.project && s % per_interval == 0 {
            rho = project(&rho, &config.proj).with_time(t);
            if rho.trace() < 1e-12 {
                break;
            }
            survival.push((t, rho.trace()));
            projection_times.push(t);
            times.push(t);
            values.push(velocity(&rho, &qbm));
            cdfs.push(DensityCdf::new(&rho)?);
            baseline.push(times.len() - 1);
        }
    }
    let field = VelocityField {
        x_grid: grid,
        times,
        values,
    };

    let lines = seeds
        .par_iter()
        .enumerate()
        .map(|(k, &x0)| {
            integrate_line(&field, &cdfs, &baseline, x0, opts).map(|(samples, term, drift)| FluxLine {
                quantile: (k + 1) as f64 / (opts.n_lines + 1) as f64,
                samples,
                terminated_at: term,
                max_quantile_drift: drift,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(FluxLineSet {
        seeds,
        lines,
        projection_times,
        field,
        survival,
    })
}

type LineTrace = (Vec<(f64, f64)>, Option<f64>, f64);

fn integrate_line(field: &VelocityField, cdfs: &[DensityCdf], baseline: &[usize], x0: f64, opts: &FluxOptions) -> Result<LineTrace> {
    let mut x = x0;
    let mut samples = vec![(field.times[0], x)];
    let mut q_ref = cdfs[0].at(x);
    let mut drift: f64 = 0.0;
    for s in 1..field.times.len() {
        let (ta, tb) = (field.times[s - 1], field.times[s]);
        if tb > ta {
            let va = &field.values[s - 1];
            let vb = &field.values[s];
            let rhs = |t: f64, x: f64| -> Option<f64> {
                let f = (t - ta) / (tb - ta);
                Some((1.0 - f) * sample_at(&field.x_grid, va, x)? + f * sample_at(&field.x_grid, vb, x)?)
            };
            match rk45(rhs, ta, tb, x, opts.rtol, opts.atol) {
                Some(xn) => x = xn,
                None => return Ok((samples, Some(ta), drift)),
            }
        }
        samples.push((tb, x));
        if baseline.contains(&s) {
            q_ref = cdfs[s].at(x);
        } else {
            drift = drift.max((cdfs[s].at(x) - q_ref).abs());
        }
    }
    Ok((samples, None, drift))
}

/// Dormand-Prince 5(4) with step control; `None` when the right-hand side
/// becomes unavailable.
fn rk45(f: impl Fn(f64, f64) -> Option<f64>, t0: f64, t1: f64, mut x: f64, rtol: f64, atol: f64) -> Option<f64> {
    const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
    const A: [[f64; 6]; 7] = [
        [0.0; 6],
        [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
        [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
        [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
        [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
        [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
    ];
    const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
    const B4: [f64; 7] = [
        5179.0 / 57600.0,
        0.0,
        7571.0 / 16695.0,
        393.0 / 640.0,
        -92097.0 / 339200.0,
        187.0 / 2100.0,
        1.0 / 40.0,
    ];
    let mut t = t0;
    let mut h = t1 - t0;
    let mut guard = 0;
    while t1 - t > 1e-15 * t1.abs().max(1.0) {
        guard += 1;
        if guard > 100_000 {
            return None;
        }
        h = h.min(t1 - t);
        let mut k = [0.0; 7];
        for i in 0..7 {
            let xi = x + h * (0..i).map(|j| A[i][j] * k[j]).sum::<f64>();
            k[i] = f(t + C[i] * h, xi)?;
        }
        let x5 = x + h * (0..7).map(|i| B5[i] * k[i]).sum::<f64>();
        let x4 = x + h * (0..7).map(|i| B4[i] * k[i]).sum::<f64>();
        let err = (x5 - x4).abs() / (atol + rtol * x5.abs().max(x.abs()));
        if err <= 1.0 {
            t += h;
            x = x5;
        }
        let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h *= factor;
    }
    Some(x)
}

/// Turning points of a sampled curve with hysteresis: an extremum counts
/// only once the curve has moved away from it by `rel` of its value.
/// Returns `(maxima, minima)` as times.
pub fn turning_points(series: &[(f64, f64)], rel: f64) -> (Vec<f64>, Vec<f64>) {
    let (mut maxima, mut minima) = (Vec::new(), Vec::new());
    let Some(&(t0, v0)) = series.first() else {
        return (maxima, minima);
    };
    // rising: looking for a maximum
    let mut rising = true;
    let mut best = (t0, v0);
    for &(t, v) in &series[1..] {
        if rising {
            if v > best.1 {
                best = (t, v);
            } else if v < best.1 * (1.0 - rel) {
                maxima.push(best.0);
                rising = false;
                best = (t, v);
            }
        } else if v < best.1 {
            best = (t, v);
        } else if v > best.1 * (1.0 + rel) {
            minima.push(best.0);
            rising = true;
            best = (t, v);
        }
    }
    (maxima, minima)
}
