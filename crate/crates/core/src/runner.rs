//! Projection/evolution sequences, steady states, survival curves and the
//! timescale ledger.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{Result, ZenoError};
use crate::lattice::{moments, DensityMatrix, Grid1D, MomentRecord, MomentSeries, RecordKind};
use crate::projectors::{apply_projection, project, Projector};
use crate::propagators::{evolve_kernel, QBMParams};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialState {
    /// Centred Gaussian pure state of the given width.
    Gaussian { sigma: f64 },
    /// Stationary state of projected free evolution, prepared from the
    /// Gaussian of the given width with the environment off.
    SteadyState { sigma: f64 },
}

/// Everything needed to reproduce one run.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub grid: Grid1D,
    pub qbm: QBMParams,
    pub proj: Projector,
    /// Time between projections.
    pub eps: f64,
    pub total_time: f64,
    /// Step of the time lattice; `eps` must be a multiple of it.
    pub dt: f64,
    pub initial: InitialState,
    /// The environment acts only for `t >= env_on`.
    pub env_on: f64,
    pub seed: u64,
    /// Compute the `<p^2>` decomposition at every projection.
    pub decompose: bool,
    /// Split each interval into this many pieces and record moments at the
    /// inner boundaries (0 = no interior samples).
    pub samples_per_interval: usize,
    /// Cycle budget for steady-state preparation.
    pub max_prep_cycles: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            grid: Grid1D::new(256, 0.02).expect("valid default lattice"),
            qbm: QBMParams::default(),
            proj: Projector::smeared(1.0, 0.02).expect("valid default projector"),
            eps: 0.01,
            total_time: 0.1,
            dt: 0.001,
            initial: InitialState::Gaussian { sigma: 0.1 },
            env_on: 0.0,
            seed: 0,
            decompose: true,
            samples_per_interval: 0,
            max_prep_cycles: 5000,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.qbm.validate()?;
        if !(self.dt > 0.0) {
            return Err(ZenoError::Config(format!("run.dt must be positive, got {}", self.dt)));
        }
        if !(self.eps > 0.0) {
            return Err(ZenoError::Config(format!("run.eps must be positive, got {}", self.eps)));
        }
        let k = self.eps / self.dt;
        if (k - k.round()).abs() > 1e-6 * k.max(1.0) || k.round() < 1.0 {
            return Err(ZenoError::Config(format!(
                "run.eps = {} must be a positive multiple of run.dt = {}",
                self.eps, self.dt
            )));
        }
        if !(self.total_time > 0.0) {
            return Err(ZenoError::Config(format!(
                "run.total_time must be positive, got {}",
                self.total_time
            )));
        }
        let sigma = match self.initial {
            InitialState::Gaussian { sigma } | InitialState::SteadyState { sigma } => sigma,
        };
        if !(sigma > 0.0) {
            return Err(ZenoError::Config(format!("init.sigma must be positive, got {sigma}")));
        }
        Ok(())
    }

    /// Number of projections after the initial one.
    pub fn n_projections(&self) -> usize {
        (self.total_time / self.eps + 1e-9).floor() as usize
    }
}

/// Output of [`run_sequence`].
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub series: MomentSeries,
    /// `(t, Tr rho)` right after each projection, unnormalized.
    pub survival: Vec<(f64, f64)>,
    /// Unnormalized state at the end (zero trace if depleted).
    pub final_state: DensityMatrix,
    pub depleted_at: Option<f64>,
}

fn projection_record(
    t: f64,
    rho: &DensityMatrix,
    proj: &Projector,
    hbar: f64,
    decompose: bool,
) -> Result<(DensityMatrix, MomentRecord)> {
    let pre = moments(rho, hbar).ok().map(|m| m.p2);
    let (out, report) = if decompose {
        let (out, rep) = apply_projection(rho, proj, hbar)?;
        (out, Some(rep))
    } else {
        (project(rho, proj), None)
    };
    let m = moments(&out, hbar)?;
    Ok((
        out,
        MomentRecord {
            t,
            norm: m.norm,
            x2: m.x2,
            p2: m.p2,
            xp_sym: m.xp_sym,
            p2_pre: pre,
            p2_red: report.map(|r| r.p2_red),
            delta_term: report.map(|r| r.delta_term),
            sigma_term: report.map(|r| r.sigma_term),
            kind: RecordKind::Projection,
        },
    ))
}

/// Evolve for `t`, switching the environment on at `env_on` (absolute time).
pub(crate) fn evolve_segment(rho: &DensityMatrix, qbm: &QBMParams, env_on: f64, t: f64) -> Result<DensityMatrix> {
    let start = rho.time();
    let end = start + t;
    if qbm.diffusion == 0.0 || start >= env_on {
        return evolve_kernel(rho, qbm, t);
    }
    let free = qbm.with_diffusion(0.0);
    if end <= env_on {
        return evolve_kernel(rho, &free, t);
    }
    let mid = evolve_kernel(rho, &free, env_on - start)?;
    evolve_kernel(&mid, qbm, end - env_on)
}

/// Placeholder row once nothing is left inside the region.
fn depleted_record(t: f64) -> MomentRecord {
    MomentRecord {
        kind: RecordKind::Projection,
        ..MomentRecord::evolution(t, 0.0, 0.0, 0.0, 0.0)
    }
}

/// Build the initial state the config asks for (steady states are prepared
/// with the environment off and returned renormalized at `t = 0`).
pub fn initial_state(config: &ExperimentConfig) -> Result<DensityMatrix> {
    match config.initial {
        InitialState::Gaussian { sigma } => DensityMatrix::gaussian(config.grid, sigma),
        InitialState::SteadyState { .. } => Ok(prepare_steady_state(config)?.state),
    }
}

/// Alternate free/open evolution for `eps` and projection, starting with a
/// projection at `t = 0`.
pub fn run_sequence(config: &ExperimentConfig) -> Result<RunOutput> {
    config.validate()?;
    let rho0 = initial_state(config)?;
    let project_first = matches!(config.initial, InitialState::Gaussian { .. });
    run_inner(config, rho0, project_first)
}

/// As [`run_sequence`], from a given state, which is taken to be already
/// projected: the first projection happens at `t = eps`.
pub fn run_sequence_from(config: &ExperimentConfig, rho0: DensityMatrix) -> Result<RunOutput> {
    config.validate()?;
    run_inner(config, rho0, false)
}

fn run_inner(config: &ExperimentConfig, rho0: DensityMatrix, project_first: bool) -> Result<RunOutput> {
    let hbar = config.qbm.hbar;
    let mut series = MomentSeries::new();
    let mut survival = Vec::new();
    let rho0 = rho0.with_time(0.0);

    let (mut rho, rec) = if project_first {
        projection_record(0.0, &rho0, &config.proj, hbar, config.decompose)?
    } else {
        let m = moments(&rho0, hbar)?;
        let rec = MomentRecord {
            kind: RecordKind::Projection,
            ..MomentRecord::evolution(0.0, m.norm, m.x2, m.p2, m.xp_sym)
        };
        (rho0, rec)
    };
    survival.push((0.0, rec.norm));
    series.push(rec)?;

    let n = config.n_projections();
    let sub = config.samples_per_interval.max(1);
    for k in 1..=n {
        let t_k = k as f64 * config.eps;
        for j in 1..=sub {
            let target = (k - 1) as f64 * config.eps + j as f64 * config.eps / sub as f64;
            let step = target - rho.time();
            rho = evolve_segment(&rho, &config.qbm, config.env_on, step)?;
            rho = rho.with_time(target);
            if config.samples_per_interval > 0 && j < sub {
                if let Ok(m) = moments(&rho, hbar) {
                    series.push(MomentRecord::evolution(target, m.norm, m.x2, m.p2, m.xp_sym))?;
                }
            }
        }
        match projection_record(t_k, &rho, &config.proj, hbar, config.decompose) {
            Ok((out, rec)) => {
                survival.push((t_k, rec.norm));
                series.push(rec)?;
                rho = out.with_time(t_k);
            }
            Err(ZenoError::Depleted { .. }) => {
                for kk in k..=n {
                    let t = kk as f64 * config.eps;
                    survival.push((t, 0.0));
                    series.push(depleted_record(t))?;
                }
                return Ok(RunOutput {
                    series,
                    survival,
                    final_state: DensityMatrix::zeros(config.grid).with_time(t_k),
                    depleted_at: Some(t_k),
                });
            }
            Err(e) => return Err(e),
        }
    }
    Ok(RunOutput {
        series,
        survival,
        final_state: rho,
        depleted_at: None,
    })
}

/// Independent runs in parallel; results in input order.
pub fn run_many(configs: &[ExperimentConfig]) -> Vec<Result<RunOutput>> {
    configs.par_iter().map(run_sequence).collect()
}

#[derive(Debug, Clone)]
pub struct SteadyState {
    /// Renormalized state at `t = 0`.
    pub state: DensityMatrix,
    pub cycles: usize,
    /// Relative change of `<p^2>` over the last cycle.
    pub last_change: f64,
    /// Survival probability per cycle at convergence.
    pub cycle_survival: f64,
}

/// Run projection cycles with the environment off until the post-projection
/// `<p^2>` changes by less than `1e-4` (relative) between cycles.
pub fn prepare_steady_state(config: &ExperimentConfig) -> Result<SteadyState> {
    let sigma = match config.initial {
        InitialState::Gaussian { sigma } | InitialState::SteadyState { sigma } => sigma,
    };
    let start = DensityMatrix::gaussian(config.grid, sigma)?;
    prepare_steady_state_from(config, start, 1e-4)
}

/// Steady-state preparation from an arbitrary state and threshold.
pub fn prepare_steady_state_from(config: &ExperimentConfig, start: DensityMatrix, threshold: f64) -> Result<SteadyState> {
    let free = config.qbm.with_diffusion(0.0);
    let hbar = free.hbar;
    let mut rho = project(&start.with_time(0.0), &config.proj).renormalized()?;
    let mut last_p2 = moments(&rho, hbar)?.p2;
    let mut change = f64::INFINITY;
    for cycle in 1..=config.max_prep_cycles {
        let evolved = evolve_kernel(&rho, &free, config.eps)?;
        let projected = project(&evolved, &config.proj);
        let surv = projected.trace();
        rho = projected.renormalized()?.with_time(0.0);
        let p2 = moments(&rho, hbar)?.p2;
        change = ((p2 - last_p2) / p2).abs();
        last_p2 = p2;
        if change < threshold {
            return Ok(SteadyState {
                state: rho,
                cycles: cycle,
                last_change: change,
                cycle_survival: surv,
            });
        }
    }
    Err(ZenoError::Convergence {
        iterations: config.max_prep_cycles,
        last_change: change,
        context: format!("steady state with eps = {}", config.eps),
    })
}

/// Normalized L2 overlap of the diagonal density with `cos^2(pi x / L)` on
/// the region.
pub fn cosine_profile_overlap(rho: &DensityMatrix, length: f64) -> f64 {
    let g = rho.grid();
    let (mut ab, mut aa, mut bb) = (0.0, 0.0, 0.0);
    for (i, &x) in g.coords().iter().enumerate() {
        if x.abs() > 0.5 * length {
            continue;
        }
        let a = rho.get(i, i).re;
        let b = (PI * x / length).cos().powi(2);
        ab += a * b;
        aa += a * a;
        bb += b * b;
    }
    if aa == 0.0 {
        return 0.0;
    }
    ab / (aa * bb).sqrt()
}

/// Time of the first crossing of 0.5, linearly interpolated; `None` if the
/// curve never gets there.
pub fn half_life(survival: &[(f64, f64)]) -> Option<f64> {
    survival.windows(2).find_map(|w| {
        let ((t0, p0), (t1, p1)) = (w[0], w[1]);
        if p0 >= 0.5 && p1 < 0.5 {
            Some(t0 + (p0 - 0.5) / (p0 - p1) * (t1 - t0))
        } else {
            None
        }
    })
}

/// Characteristic times and momenta of a configuration. D-dependent entries
/// are infinite when `D = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Timescales {
    /// Energy time `hbar m / <p^2>`.
    pub t_energy: f64,
    pub t_loc: f64,
    /// Time for diffusion to leave the Zeno regime, `m hbar / (D eps)`.
    pub tau_suppress: f64,
    /// Classical decay time `(m^2 L^2 / D)^(1/3)`.
    pub lambda_inv: f64,
    /// Stationary momentum scale `(m L D)^(1/3)`.
    pub p_stationary: f64,
    /// Energy time of the stationary classical state.
    pub t_energy_final: f64,
    /// Physical cut-off `m L / eps`.
    pub p_cutoff: f64,
}

pub fn timescales(qbm: &QBMParams, length: f64, eps: f64, p2_current: f64) -> Timescales {
    let (m, d, hb, l) = (qbm.mass, qbm.diffusion, qbm.hbar, length);
    let inf = f64::INFINITY;
    let dd = |v: f64| if d > 0.0 { v } else { inf };
    Timescales {
        t_energy: if p2_current > 0.0 { hb * m / p2_current } else { inf },
        t_loc: dd((m * hb / d).sqrt()),
        tau_suppress: dd(m * hb / (d * eps)),
        lambda_inv: dd((m * m * l * l / d).cbrt()),
        p_stationary: (m * l * d).cbrt(),
        t_energy_final: dd(hb * m.cbrt() / (l * d).powf(2.0 / 3.0)),
        p_cutoff: m * l / eps,
    }
}

pub fn config_timescales(config: &ExperimentConfig, p2_current: f64) -> Timescales {
    timescales(&config.qbm, config.proj.length(), config.eps, p2_current)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    Zeno,
    Classical,
    TrivialClassical,
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Regime::Zeno => "zeno",
            Regime::Classical => "classical",
            Regime::TrivialClassical => "trivial-classical",
        })
    }
}

/// Decoherence within half a projection interval is the trivial case;
/// otherwise the stationary classical state's energy time decides.
pub fn classify_regime(ts: &Timescales, eps: f64) -> Regime {
    if ts.t_loc <= 0.5 * eps {
        Regime::TrivialClassical
    } else if ts.t_energy_final < eps {
        Regime::Classical
    } else {
        Regime::Zeno
    }
}
