//! Named recipes: each one runs a family of experiments and returns CSV
//! tables. `run_recipe` adds the config echo and writes the manifest.

use std::f64::consts::LN_2;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;

use crate::analytic::{self, GaussianModelParams, LindbladAxis, SpinModelParams};
use crate::classical::{find_steady_mode, langevin_batches, LangevinOptions, SteadyModeOptions};
use crate::config::Config;
use crate::error::{Result, ZenoError};
use crate::flux::{trace_flux_lines, turning_points, FluxLineSet, FluxOptions};
use crate::io::{write_run, RunManifest, Table};
use crate::lattice::{wigner_transform, DensityMatrix, RecordKind};
use crate::potential::{evolve_with_potential, ComplexPotential};
use crate::projectors::Projector;
use crate::propagators::{evolve_kernel, QBMParams};
use crate::runner::{
    classify_regime, config_timescales, half_life, run_sequence, ExperimentConfig, InitialState, Regime,
};

type RecipeFn = fn(&Config) -> Result<Vec<Table>>;

pub struct Recipe {
    pub name: &'static str,
    pub description: &'static str,
    /// Recipe-specific keys: `(key, default, description)`.
    pub params: &'static [(&'static str, &'static str, &'static str)],
    /// Defaults for base keys that differ from the global ones.
    pub base_defaults: &'static [(&'static str, &'static str)],
    run: RecipeFn,
}

impl std::fmt::Debug for Recipe {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Recipe").field("name", &self.name).finish()
    }
}

pub static RECIPES: &[Recipe] = &[
    Recipe {
        name: "p2-decomposition",
        description: "<p^2> and its post-projection parts after the environment is switched on in the steady state",
        params: &[("sweep.D", "100,4000,20000", "diffusion constants")],
        base_defaults: &[("init.kind", "steady"), ("run.samples", "5")],
        run: p2_decomposition,
    },
    Recipe {
        name: "steady-moments",
        description: "post-projection moments at strong diffusion with the classical steady-mode values",
        params: &[("classical.half_cells", "50", "phase-space cells per half region")],
        base_defaults: &[("qbm.D", "20000")],
        run: steady_moments,
    },
    Recipe {
        name: "steady-wigner",
        description: "Wigner function right after the last projection",
        params: &[],
        base_defaults: &[("qbm.D", "20000")],
        run: steady_wigner,
    },
    Recipe {
        name: "spatial-profiles",
        description: "rho(x,x) right after the last projection for several environments",
        params: &[("sweep.D", "0,100,4000,20000", "diffusion constants")],
        base_defaults: &[],
        run: spatial_profiles,
    },
    Recipe {
        name: "regime-surface",
        description: "half-life minus classical decay time over (D, eps), with the t_E^f = eps boundary",
        params: &[
            ("sweep.D", "30,300,3000,30000,300000", "diffusion constants"),
            ("sweep.eps", "0.0003125,0.00125,0.005,0.01,0.02", "projection spacings"),
            ("regime.span", "2", "run length in units of the classical decay time"),
        ],
        base_defaults: &[("init.kind", "steady")],
        run: regime_surface,
    },
    Recipe {
        name: "classical-sweeps",
        description: "half-life and <p^2> against D (fixed L) and L (fixed D), quantum and classical",
        params: &[
            ("sweep.D", "2000,5000,10000,20000,50000", "diffusion constants at the configured L"),
            ("sweep.L", "0.6,0.8,1,1.2", "region widths at fixed D"),
            ("sweep.fixed_D", "10000", "diffusion constant for the L sweep"),
            ("regime.span", "3", "run length in units of the classical decay time"),
            ("classical.half_cells", "50", "phase-space cells per half region"),
        ],
        base_defaults: &[("init.kind", "steady")],
        run: classical_sweeps,
    },
    Recipe {
        name: "flux-free",
        description: "flux lines of the freely spreading packet",
        params: &[("flux.lines", "21", "number of flux lines")],
        base_defaults: &[],
        run: flux_free,
    },
    Recipe {
        name: "flux-projected",
        description: "flux lines under repeated projection",
        params: &[("flux.lines", "21", "number of flux lines")],
        base_defaults: &[("run.total_time", "0.4")],
        run: flux_projected,
    },
    Recipe {
        name: "flux-environment",
        description: "flux lines under repeated projection with an environment",
        params: &[
            ("flux.lines", "21", "number of flux lines"),
            ("sweep.D", "100,4000", "diffusion constants"),
        ],
        base_defaults: &[("run.total_time", "0.4")],
        run: flux_environment,
    },
    Recipe {
        name: "spin-model",
        description: "monitored two-level system: closed forms, RK4 and Zeno sequences",
        params: &[
            ("spin.omega", "1", "precession frequency"),
            ("spin.D", "0.1", "Lindblad strength"),
            ("spin.t_max", "3", "end of the single-interval curve"),
            ("spin.tau", "1", "total time of the projection sequences"),
        ],
        base_defaults: &[],
        run: spin_model,
    },
    Recipe {
        name: "gaussian-model",
        description: "return probability to the initial Gaussian: closed form against the lattice",
        params: &[("gm.t_max", "0.05", "end of the curve"), ("gm.points", "50", "number of times")],
        base_defaults: &[("qbm.D", "100")],
        run: gaussian_model,
    },
    Recipe {
        name: "potential-equivalence",
        description: "survival under projections against the matched absorbing potential",
        params: &[
            ("sweep.D", "0,100", "diffusion constants"),
            ("pot.windows", "5", "number of projection intervals compared"),
            ("pot.dt", "0.0001", "stepper time step"),
        ],
        base_defaults: &[],
        run: potential_equivalence,
    },
    Recipe {
        name: "classical-mode",
        description: "slowest decay mode of the absorbing Fokker-Planck problem with a Langevin check",
        params: &[
            ("classical.half_cells", "50", "phase-space cells per half region"),
            ("classical.n_p", "240", "momentum cells"),
            ("classical.p_max", "6", "momentum extent in units of p_s"),
            ("langevin.particles", "5000", "particles per batch"),
            ("langevin.batches", "8", "independent batches"),
            ("langevin.t_end", "4", "run length in units of 1/lambda"),
            ("langevin.dt", "0.001", "time step in units of 1/lambda"),
        ],
        base_defaults: &[],
        run: classical_mode,
    },
];

pub fn find_recipe(name: &str) -> Result<&'static Recipe> {
    RECIPES.iter().find(|r| r.name == name).ok_or_else(|| {
        let names: Vec<&str> = RECIPES.iter().map(|r| r.name).collect();
        ZenoError::Config(format!("unknown recipe {name:?}; available: {}", names.join(", ")))
    })
}

impl Recipe {
    /// Config with this recipe's defaults filled in and its keys checked.
    pub fn resolve(&self, config: &Config) -> Result<Config> {
        let keys: Vec<&str> = self.params.iter().map(|(k, _, _)| *k).collect();
        config.check_keys(&keys)?;
        let defaults: Vec<(&str, &str)> = self.params.iter().map(|(k, d, _)| (*k, *d)).collect();
        Ok(config.clone().with_defaults(self.base_defaults).with_defaults(&defaults))
    }

    /// Tables without writing anything.
    pub fn tables(&self, config: &Config) -> Result<Vec<Table>> {
        let cfg = self.resolve(config)?;
        cfg.experiment()?;
        (self.run)(&cfg)
    }
}

/// Run a recipe and write its tables plus manifest under `out_dir`.
pub fn run_recipe(name: &str, config: &Config, out_dir: &Path) -> Result<RunManifest> {
    let recipe = find_recipe(name)?;
    let cfg = recipe.resolve(config)?;
    let seed = cfg.experiment()?.seed;
    let start = Instant::now();
    let tables = (recipe.run)(&cfg)?;
    let extra: Vec<(&str, &str)> = recipe.params.iter().map(|(k, d, _)| (*k, *d)).collect();
    let (manifest, _) = write_run(out_dir, name, seed, &cfg.echo(&extra), &tables, start.elapsed().as_secs_f64())?;
    Ok(manifest)
}

/// One recipe run per value of `key`, in parallel, each in its own
/// subdirectory `key=value`.
pub fn run_sweep(name: &str, config: &Config, key: &str, values: &[String], out_dir: &Path) -> Result<Vec<RunManifest>> {
    let recipe = find_recipe(name)?;
    if values.is_empty() {
        return Err(ZenoError::Config(format!("sweep over {key} needs at least one value")));
    }
    // validate every point before starting work
    let configs = values
        .iter()
        .map(|v| {
            let c = config.clone().with_overrides(&[format!("{key}={v}")])?;
            recipe.resolve(&c)?.experiment()?;
            Ok(c)
        })
        .collect::<Result<Vec<_>>>()?;
    let manifests = configs
        .par_iter()
        .zip(values.par_iter())
        .map(|(c, v)| run_recipe(name, c, &out_dir.join(format!("{key}={v}"))))
        .collect::<Result<Vec<_>>>()?;
    // single writer, after every point has finished
    let summary = serde_json::json!({
        "recipe": name,
        "parameter": key,
        "values": values,
        "runs": manifests,
    });
    let text = serde_json::to_string_pretty(&summary)
        .map_err(|e| ZenoError::Argument(format!("sweep manifest serialization: {e}")))?;
    std::fs::write(out_dir.join("sweep.json"), text)?;
    Ok(manifests)
}

/// Largest step not above `max_dt` that divides `eps`.
pub fn fitted_dt(eps: f64, max_dt: f64) -> f64 {
    eps / (eps / max_dt - 1e-9).ceil().max(1.0)
}

fn tag(v: f64) -> String {
    format!("{v}").replace('.', "p")
}

fn moment_table(name: &str, description: &str, cfg: &ExperimentConfig) -> Result<Table> {
    let out = run_sequence(cfg)?;
    let nan = f64::NAN;
    let mut t = Table::new(
        name,
        description,
        &[
            ("t", "time"),
            ("projection", ""),
            ("norm", ""),
            ("x2", "length^2"),
            ("p2", "momentum^2"),
            ("xp_sym", "length*momentum"),
            ("p2_pre", "momentum^2"),
            ("p2_red", "momentum^2"),
            ("delta", "momentum^2"),
            ("sigma", "momentum^2"),
        ],
    );
    for r in out.series.records() {
        t.push(vec![
            r.t,
            if r.kind == RecordKind::Projection { 1.0 } else { 0.0 },
            r.norm,
            r.x2,
            r.p2,
            r.xp_sym,
            r.p2_pre.unwrap_or(nan),
            r.p2_red.unwrap_or(nan),
            r.delta_term.unwrap_or(nan),
            r.sigma_term.unwrap_or(nan),
        ])?;
    }
    Ok(t)
}

fn p2_decomposition(c: &Config) -> Result<Vec<Table>> {
    let base = c.experiment()?;
    let ds: Vec<f64> = c.list("sweep.D", "")?;
    ds.par_iter()
        .map(|&d| {
            let cfg = ExperimentConfig {
                qbm: base.qbm.with_diffusion(d),
                ..base.clone()
            };
            Ok(moment_table(&format!("p2_D{}", tag(d)), "moments; decomposition at projections", &cfg)?.meta("qbm.D", d))
        })
        .collect()
}

fn steady_moments(c: &Config) -> Result<Vec<Table>> {
    let cfg = c.experiment()?;
    let series = moment_table("moments", "moments; projection rows are post-projection", &cfg)?;
    let mode = find_steady_mode(&SteadyModeOptions {
        half_cells: c.value("classical.half_cells", "50")?,
        ..Default::default()
    })?;
    let s = mode.rescale(&cfg.qbm, cfg.proj.length());
    let mut cl = Table::new(
        "classical_reference",
        "classical steady mode rescaled to this configuration",
        &[("lambda", "1/time"), ("x2", "length^2"), ("p2", "momentum^2"), ("xp_sym", "length*momentum"), ("half_life", "time")],
    );
    cl.push(vec![s.lambda, s.x2, s.p2, s.xp_sym, LN_2 / s.lambda])?;
    Ok(vec![series, cl])
}

/// Coefficient of variation of a sampled profile over `|x| <= half_width`.
pub fn profile_cv(xs: &[f64], values: &[f64], half_width: f64) -> f64 {
    let inside: Vec<f64> = xs
        .iter()
        .zip(values)
        .filter(|(x, _)| x.abs() <= half_width)
        .map(|(_, &v)| v)
        .collect();
    let n = inside.len() as f64;
    let mean = inside.iter().sum::<f64>() / n;
    let var = inside.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    var.sqrt() / mean
}

/// Standardized third and fourth moments (skewness, excess kurtosis).
pub fn shape_moments(xs: &[f64], weights: &[f64]) -> (f64, f64) {
    let w: f64 = weights.iter().sum();
    let mean = xs.iter().zip(weights).map(|(x, p)| x * p).sum::<f64>() / w;
    let m = |k: i32| xs.iter().zip(weights).map(|(x, p)| (x - mean).powi(k) * p).sum::<f64>() / w;
    let var = m(2);
    (m(3) / var.powf(1.5), m(4) / (var * var) - 3.0)
}

fn steady_wigner(c: &Config) -> Result<Vec<Table>> {
    let cfg = c.experiment()?;
    let out = run_sequence(&cfg)?;
    let rho = out.final_state.renormalized()?;
    let w = wigner_transform(&rho, cfg.qbm.hbar)?;
    let (xg, pg) = (*w.x_grid(), *w.p_grid());
    let mut surface = Table::new("wigner", "W(x, p) of the renormalized final state", &[("x", "length"), ("p", "momentum"), ("W", "1/(length*momentum)")]);
    for k in 0..pg.n_points() {
        for s in 0..xg.n_points() {
            surface.push(vec![xg.coord(s), pg.coord(k), w.get(k, s)])?;
        }
    }
    let xs = xg.coords();
    let ps = pg.coords();
    let xm = w.position_marginal();
    let pm = w.momentum_marginal();
    let cv = profile_cv(&xs, &xm, 0.4 * cfg.proj.length());
    let (skew, kurt) = shape_moments(&ps, &pm);
    let mut marg = Table::new("marginals", "position and momentum marginals", &[("index", ""), ("x", "length"), ("rho_x", "1/length"), ("p", "momentum"), ("rho_p", "1/momentum")]);
    for i in 0..xs.len() {
        marg.push(vec![i as f64, xs[i], xm[i], ps[i], pm[i]])?;
    }
    let m = crate::lattice::moments(&rho, cfg.qbm.hbar)?;
    Ok(vec![
        surface,
        marg.meta("position_cv_central80", cv)
            .meta("momentum_skewness", skew)
            .meta("momentum_excess_kurtosis", kurt)
            .meta("xp_sym", m.xp_sym),
    ])
}

fn spatial_profiles(c: &Config) -> Result<Vec<Table>> {
    let base = c.experiment()?;
    let ds: Vec<f64> = c.list("sweep.D", "")?;
    let states = ds
        .par_iter()
        .map(|&d| {
            let cfg = ExperimentConfig {
                qbm: base.qbm.with_diffusion(d),
                ..base.clone()
            };
            run_sequence(&cfg)?.final_state.renormalized()
        })
        .collect::<Result<Vec<DensityMatrix>>>()?;
    let mut cols: Vec<(String, String)> = vec![("x".into(), "length".into())];
    cols.extend(ds.iter().map(|d| (format!("rho_D{}", tag(*d)), "1/length".to_string())));
    let col_refs: Vec<(&str, &str)> = cols.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
    let mut t = Table::new("profiles", "renormalized rho(x,x) right after the last projection", &col_refs);
    let xs = base.grid.coords();
    let diags: Vec<Vec<f64>> = states.iter().map(DensityMatrix::diagonal).collect();
    for (i, &x) in xs.iter().enumerate() {
        let mut row = vec![x];
        row.extend(diags.iter().map(|d| d[i]));
        t.push(row)?;
    }
    for (d, diag) in ds.iter().zip(&diags) {
        t = t.meta(&format!("position_cv_central80_D{}", tag(*d)), profile_cv(&xs, diag, 0.4 * base.proj.length()));
    }
    Ok(vec![t])
}

/// Half-life of one `(D, eps)` point relative to the classical decay time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegimePoint {
    pub diffusion: f64,
    pub eps: f64,
    pub lambda_inv: f64,
    pub t_energy_final: f64,
    pub regime: Regime,
    /// `None` when the survival stayed above one half for the whole run.
    pub tau_half: Option<f64>,
    pub run_length: f64,
    /// Post-projection `<p^2>` at the end of the run.
    pub p2_final: f64,
}

impl RegimePoint {
    /// `tau_half - 1/lambda`, or a lower bound when the half-life was not
    /// reached.
    pub fn excess(&self) -> f64 {
        self.tau_half.unwrap_or(self.run_length) - self.lambda_inv
    }
}

/// Run `base` with the given `D` and `eps` for `span / lambda` and measure the
/// half-life.
pub fn regime_point(base: &ExperimentConfig, diffusion: f64, eps: f64, span: f64) -> Result<RegimePoint> {
    let qbm = base.qbm.with_diffusion(diffusion);
    let mut cfg = ExperimentConfig {
        qbm,
        eps,
        dt: fitted_dt(eps, base.dt),
        decompose: false,
        samples_per_interval: 0,
        ..base.clone()
    };
    let ts = config_timescales(&cfg, 0.0);
    if !ts.lambda_inv.is_finite() {
        return Err(ZenoError::Config("regime sweep needs qbm.D > 0".into()));
    }
    cfg.total_time = (span * ts.lambda_inv / eps).ceil().max(1.0) * eps;
    let out = run_sequence(&cfg)?;
    let p2_final = out.series.projections().last().map_or(f64::NAN, |r| r.p2);
    Ok(RegimePoint {
        diffusion,
        eps,
        lambda_inv: ts.lambda_inv,
        t_energy_final: ts.t_energy_final,
        regime: classify_regime(&ts, eps),
        tau_half: half_life(&out.survival),
        run_length: cfg.total_time,
        p2_final,
    })
}

/// Diffusion constant on the `t_E^f = eps` line.
pub fn boundary_diffusion(qbm: &QBMParams, length: f64, eps: f64) -> f64 {
    (qbm.hbar * qbm.mass.cbrt() / eps).powf(1.5) / length
}

fn regime_code(r: Regime) -> f64 {
    match r {
        Regime::Zeno => 0.0,
        Regime::Classical => 1.0,
        Regime::TrivialClassical => 2.0,
    }
}

fn regime_surface(c: &Config) -> Result<Vec<Table>> {
    let base = c.experiment()?;
    let ds: Vec<f64> = c.list("sweep.D", "")?;
    let epss: Vec<f64> = c.list("sweep.eps", "")?;
    let span: f64 = c.value("regime.span", "2")?;
    let grid: Vec<(f64, f64)> = ds.iter().flat_map(|&d| epss.iter().map(move |&e| (d, e))).collect();
    let points = grid
        .par_iter()
        .map(|&(d, e)| regime_point(&base, d, e, span))
        .collect::<Result<Vec<_>>>()?;
    let mut surf = Table::new(
        "surface",
        "regime: 0 zeno, 1 classical, 2 trivial-classical; reached = 0 means tau_half is a lower bound",
        &[
            ("D", "momentum^2/time"),
            ("eps", "time"),
            ("t_energy_final", "time"),
            ("lambda_inv", "time"),
            ("tau_half", "time"),
            ("reached", ""),
            ("excess", "time"),
            ("regime", ""),
        ],
    );
    for p in &points {
        surf.push(vec![
            p.diffusion,
            p.eps,
            p.t_energy_final,
            p.lambda_inv,
            p.tau_half.unwrap_or(p.run_length),
            if p.tau_half.is_some() { 1.0 } else { 0.0 },
            p.excess(),
            regime_code(p.regime),
        ])?;
    }
    let mut line = Table::new("boundary", "t_E^f = eps", &[("eps", "time"), ("D", "momentum^2/time")]);
    let (lo, hi) = epss.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &e| (a.min(e), b.max(e)));
    for k in 0..=50 {
        let e = lo * (hi / lo).powf(k as f64 / 50.0);
        line.push(vec![e, boundary_diffusion(&base.qbm, base.proj.length(), e)])?;
    }
    Ok(vec![surf, line])
}

fn classical_sweeps(c: &Config) -> Result<Vec<Table>> {
    let base = c.experiment()?;
    let span: f64 = c.value("regime.span", "3")?;
    let ds: Vec<f64> = c.list("sweep.D", "")?;
    let ls: Vec<f64> = c.list("sweep.L", "")?;
    let fixed_d: f64 = c.value("sweep.fixed_D", "10000")?;
    let mode = find_steady_mode(&SteadyModeOptions {
        half_cells: c.value("classical.half_cells", "50")?,
        ..Default::default()
    })?;
    let mut jobs: Vec<(f64, f64)> = ds.iter().map(|&d| (d, base.proj.length())).collect();
    jobs.extend(ls.iter().map(|&l| (fixed_d, l)));
    let points = jobs
        .par_iter()
        .map(|&(d, l)| {
            let proj = Projector::new(l, base.proj.smearing(), base.proj.kind())?;
            let cfg = ExperimentConfig { proj, ..base.clone() };
            regime_point(&cfg, d, base.eps, span)
        })
        .collect::<Result<Vec<_>>>()?;
    let cols = [
        ("D", "momentum^2/time"),
        ("L", "length"),
        ("tau_half", "time"),
        ("reached", ""),
        ("tau_half_classical", "time"),
        ("p2", "momentum^2"),
        ("p2_classical", "momentum^2"),
    ];
    let mut by_d = Table::new("vs_D", "fixed L", &cols);
    let mut by_l = Table::new("vs_L", "fixed D", &cols);
    for (k, (&(d, l), p)) in jobs.iter().zip(&points).enumerate() {
        let s = mode.rescale(&base.qbm.with_diffusion(d), l);
        let row = vec![
            d,
            l,
            p.tau_half.unwrap_or(p.run_length),
            if p.tau_half.is_some() { 1.0 } else { 0.0 },
            LN_2 / s.lambda,
            p.p2_final,
            s.p2,
        ];
        if k < ds.len() {
            by_d.push(row)?;
        } else {
            by_l.push(row)?;
        }
    }
    Ok(vec![by_d, by_l])
}

fn flux_table(name: &str, description: &str, set: &FluxLineSet) -> Result<Table> {
    let names: Vec<String> = set.lines.iter().map(|l| format!("q{:.4}", l.quantile)).collect();
    let mut cols: Vec<(&str, &str)> = vec![("t", "time")];
    cols.extend(names.iter().map(|n| (n.as_str(), "length")));
    let mut t = Table::new(name, description, &cols);
    let len = set.lines.iter().map(|l| l.samples.len()).max().unwrap_or(0);
    let times = &set.field.times;
    for s in 0..len.min(times.len()) {
        let mut row = vec![times[s]];
        row.extend(set.lines.iter().map(|l| l.samples.get(s).map_or(f64::NAN, |p| p.1)));
        t.push(row)?;
    }
    let mid = set.lines.len() / 2;
    let (maxima, minima) = if mid >= 1 && mid + 1 < set.lines.len() {
        turning_points(&set.spread(mid - 1, mid + 1), 0.1)
    } else {
        (Vec::new(), Vec::new())
    };
    let list = |v: &[f64]| v.iter().map(|x| format!("{x}")).collect::<Vec<_>>().join(";");
    Ok(t.meta("max_quantile_drift", set.max_quantile_drift())
        .meta("central_spread_maxima", list(&maxima))
        .meta("central_spread_minima", list(&minima))
        .meta("projections", set.projection_times.len()))
}

fn flux_run(c: &Config, project: bool) -> Result<FluxLineSet> {
    let cfg = c.experiment()?;
    trace_flux_lines(
        &cfg,
        &FluxOptions {
            n_lines: c.value("flux.lines", "21")?,
            project,
            ..Default::default()
        },
    )
}

fn flux_free(c: &Config) -> Result<Vec<Table>> {
    Ok(vec![flux_table("lines", "flux-line positions; no projections", &flux_run(c, false)?)?])
}

fn flux_projected(c: &Config) -> Result<Vec<Table>> {
    Ok(vec![flux_table("lines", "flux-line positions; projections every run.eps", &flux_run(c, true)?)?])
}

fn flux_environment(c: &Config) -> Result<Vec<Table>> {
    let ds: Vec<f64> = c.list("sweep.D", "")?;
    ds.par_iter()
        .map(|&d| {
            let cc = c.clone().with_overrides(&[format!("qbm.D={d}")])?;
            flux_table(&format!("lines_D{}", tag(d)), "flux-line positions; projections every run.eps", &flux_run(&cc, true)?)
        })
        .collect()
}

fn spin_model(c: &Config) -> Result<Vec<Table>> {
    let omega: f64 = c.value("spin.omega", "1")?;
    let d: f64 = c.value("spin.D", "0.1")?;
    let t_max: f64 = c.value("spin.t_max", "3")?;
    let tau: f64 = c.value("spin.tau", "1")?;
    let px = SpinModelParams::new(omega, d, LindbladAxis::X)?;
    let py = SpinModelParams::new(omega, d, LindbladAxis::Y)?;
    let mut single = Table::new(
        "single_interval",
        "probability of spin up after free evolution",
        &[("t", "time"), ("closed_x", ""), ("rk4_x", ""), ("closed_y", ""), ("rk4_y", "")],
    );
    for k in 0..=100 {
        let t = t_max * k as f64 / 100.0;
        let nx = analytic::spin_lindblad_numeric(&px, t, 1e-4)?;
        let ny = analytic::spin_lindblad_numeric(&py, t, 1e-4)?;
        single.push(vec![
            t,
            analytic::spin_survival_single(&px, t),
            nx[0][0].0,
            analytic::spin_survival_single(&py, t),
            ny[0][0].0,
        ])?;
    }
    let mut seq = Table::new("sequence", "survival after n projections over spin.tau", &[("n", ""), ("eps", "time"), ("p_x", ""), ("p_y", "")]);
    for n in [1usize, 2, 5, 10, 20, 50, 100, 200, 500, 1000, 10000] {
        let eps = tau / n as f64;
        seq.push(vec![
            n as f64,
            eps,
            analytic::spin_zeno_sequence(&px, eps, n)?,
            analytic::spin_zeno_sequence(&py, eps, n)?,
        ])?;
    }
    Ok(vec![single, seq.meta("long_run_limit", (-2.0 * d * tau).exp())])
}

/// `<psi| rho |psi>` on the lattice for a pure `psi` given as a density matrix.
pub fn lattice_overlap(psi: &DensityMatrix, rho: &DensityMatrix) -> f64 {
    let n = psi.n();
    let eta = psi.grid().spacing();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            s += (psi.get(j, i) * rho.get(i, j)).re;
        }
    }
    s * eta * eta
}

fn gaussian_model(c: &Config) -> Result<Vec<Table>> {
    let cfg = c.experiment()?;
    let sigma = match cfg.initial {
        InitialState::Gaussian { sigma } | InitialState::SteadyState { sigma } => sigma,
    };
    let q = cfg.qbm;
    let model = GaussianModelParams::new(sigma, q.diffusion, q.mass, q.hbar)?;
    let t_max: f64 = c.value("gm.t_max", "0.05")?;
    let points: usize = c.value("gm.points", "50")?;
    let psi = DensityMatrix::gaussian(cfg.grid, sigma)?;
    let rows = (0..=points)
        .into_par_iter()
        .map(|k| {
            let t = t_max * k as f64 / points.max(1) as f64;
            let rho = if t > 0.0 { evolve_kernel(&psi, &q, t)? } else { psi.clone() };
            Ok(vec![t, analytic::gaussian_overlap(&model, t), lattice_overlap(&psi, &rho)])
        })
        .collect::<Result<Vec<_>>>()?;
    let mut t = Table::new("overlap", "probability of finding the initial Gaussian", &[("t", "time"), ("closed", ""), ("lattice", "")]);
    for r in rows {
        t.push(r)?;
    }
    Ok(vec![t.meta("t_zeno", model.zeno_time()).meta("t_decoherence", model.decoherence_time())])
}

/// Survival of a projection string and of the matched absorbing potential
/// at the projection times: `(t, projector, potential)`.
pub fn potential_comparison(cfg: &ExperimentConfig, windows: usize, dt: f64) -> Result<Vec<(f64, f64, f64)>> {
    let sigma = match cfg.initial {
        InitialState::Gaussian { sigma } | InitialState::SteadyState { sigma } => sigma,
    };
    let run_cfg = ExperimentConfig {
        total_time: cfg.eps * windows as f64,
        decompose: false,
        initial: InitialState::Gaussian { sigma },
        ..cfg.clone()
    };
    let out = run_sequence(&run_cfg)?;
    let pot = ComplexPotential::for_projector(&cfg.proj, cfg.eps, cfg.qbm.hbar)?;
    let mut rho = DensityMatrix::gaussian(cfg.grid, sigma)?;
    let mut rows = Vec::with_capacity(windows);
    for k in 1..=windows {
        rho = evolve_with_potential(&rho, &pot, &cfg.qbm, cfg.eps, dt)?;
        let t = k as f64 * cfg.eps;
        let p = out
            .survival
            .iter()
            .find(|(s, _)| (s - t).abs() < 1e-9 * t.max(1.0))
            .map_or(0.0, |s| s.1);
        rows.push((t, p, rho.trace()));
    }
    Ok(rows)
}

fn potential_equivalence(c: &Config) -> Result<Vec<Table>> {
    let base = c.experiment()?;
    let ds: Vec<f64> = c.list("sweep.D", "")?;
    let windows: usize = c.value("pot.windows", "5")?;
    let dt: f64 = c.value("pot.dt", "0.0001")?;
    let results = ds
        .par_iter()
        .map(|&d| {
            let cfg = ExperimentConfig {
                qbm: base.qbm.with_diffusion(d),
                ..base.clone()
            };
            potential_comparison(&cfg, windows, dt)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut t = Table::new(
        "survival",
        "projector string against V0 = hbar/eps",
        &[("D", "momentum^2/time"), ("t", "time"), ("projector", ""), ("potential", ""), ("relative_difference", "")],
    );
    for (d, rows) in ds.iter().zip(results) {
        for (time, p, v) in rows {
            t.push(vec![*d, time, p, v, (v - p) / p])?;
        }
    }
    Ok(vec![t])
}

fn classical_mode(c: &Config) -> Result<Vec<Table>> {
    let opts = SteadyModeOptions {
        half_cells: c.value("classical.half_cells", "50")?,
        n_p: c.value("classical.n_p", "240")?,
        p_max: c.value("classical.p_max", "6")?,
        ..Default::default()
    };
    let mode = find_steady_mode(&opts)?;
    let unit = QBMParams::new(1.0, 1.0, 1.0)?;
    let seed = c.experiment()?.seed;
    let lv = LangevinOptions {
        n_particles: c.value("langevin.particles", "5000")?,
        t_end: c.value("langevin.t_end", "4")?,
        dt: c.value("langevin.dt", "0.001")?,
        seed,
        absorbing: true,
        resample: true,
        init_p_sigma: 1.0,
        init_x_sigma: None,
        record_every: 100,
    };
    let est = langevin_batches(&unit, 1.0, &lv, c.value("langevin.batches", "8")?)?;
    let mut m = Table::new(
        "moments",
        "dimensionless steady-mode moments; source 0 = Fokker-Planck, 1 = Langevin (second row: standard errors)",
        &[("source", ""), ("lambda", ""), ("x2", ""), ("p2", ""), ("xp_sym", "")],
    );
    m.push(vec![0.0, mode.lambda, mode.x2, mode.p2, mode.xp_sym])?;
    m.push(vec![1.0, est.mean.lambda, est.mean.x2, est.mean.p2, est.mean.xp_sym])?;
    m.push(vec![1.0, est.stderr.lambda, est.stderr.x2, est.stderr.p2, est.stderr.xp_sym])?;
    let shape = &mode.shape;
    let mut marg = Table::new("position_marginal", "steady-mode position marginal", &[("x", ""), ("density", "")]);
    for (x, v) in shape.x_grid().coords().into_iter().zip(shape.position_marginal()) {
        marg.push(vec![x, v])?;
    }
    Ok(vec![m.meta("settled_at", mode.settled_at), marg])
}
