//! Acceptance criteria, one summary line each. Built without the libtest
//! harness so the lines are printed on every run; the process fails if any
//! criterion fails. An optional argument selects criteria by number or by a
//! substring of their name.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::process::ExitCode;
use std::time::Instant;

use zeno_core::analytic::{self, GaussianModelParams, LindbladAxis, SpinModelParams};
use zeno_core::classical::{find_steady_mode, langevin_batches, LangevinOptions, SteadyModeOptions};
use zeno_core::config::Config;
use zeno_core::flux::{continuity_residual, trace_flux_lines, turning_points, FluxOptions};
use zeno_core::lattice::{moments, momentum_distribution, DensityMatrix, Grid1D, RecordKind};
use zeno_core::projectors::{apply_projection, project, Projector};
use zeno_core::propagators::{evolve_kernel, evolve_stepper, QBMParams};
use zeno_core::recipes::{find_recipe, lattice_overlap, potential_comparison};
use zeno_core::runner::{
    config_timescales, half_life, prepare_steady_state, run_sequence, run_sequence_from, ExperimentConfig,
};
use zeno_core::Result;

struct Outcome {
    passed: bool,
    detail: String,
    notes: Vec<String>,
}

impl Outcome {
    fn new(passed: bool, detail: String) -> Self {
        Self {
            passed,
            detail,
            notes: Vec::new(),
        }
    }

    fn note(mut self, s: String) -> Self {
        self.notes.push(s);
        self
    }
}

type Criterion = (&'static str, &'static str, fn() -> Result<Outcome>);

const CRITERIA: &[Criterion] = &[
    ("1", "toy-model oracles", toy_models),
    ("2", "propagator correctness", propagators),
    ("3", "momentum diffusion law", diffusion_law),
    ("4", "p2 decomposition", decomposition),
    ("5", "zeno scaling", zeno_scaling),
    ("6", "classical steady mode", classical_mode),
    ("7", "quantum-classical correspondence", correspondence),
    ("8", "regime boundary", regime_boundary),
    ("9", "suppression timescale", suppression),
    ("10", "complex-potential equivalence", complex_potential),
    ("11", "flux-line properties", flux_lines),
];

fn qbm(d: f64) -> QBMParams {
    QBMParams::new(1.0, d, 1.0).expect("valid parameters")
}

fn with_d(d: f64) -> ExperimentConfig {
    ExperimentConfig {
        qbm: qbm(d),
        ..ExperimentConfig::default()
    }
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

fn toy_models() -> Result<Outcome> {
    let mut spin_err = 0.0f64;
    for axis in [LindbladAxis::X, LindbladAxis::Y] {
        // under-, near- and over-damped
        for d in [0.0, 0.3, 0.9, 1.5] {
            let p = SpinModelParams::new(1.0, d, axis)?;
            for t in [0.1, 0.5, 1.0, 2.0, 3.0] {
                let n = analytic::spin_lindblad_numeric(&p, t, 1e-3)?;
                spin_err = spin_err.max((n[0][0].0 - analytic::spin_survival_single(&p, t)).abs());
            }
        }
    }

    let grid = Grid1D::new(256, 0.02)?;
    let psi = DensityMatrix::gaussian(grid, 0.1)?;
    let q = qbm(100.0);
    let model = GaussianModelParams::new(0.1, 100.0, 1.0, 1.0)?;
    let (td, tz) = (model.decoherence_time(), model.zeno_time());
    let printed = |t: f64| ((1.0 + t / td) * (1.0 + t * t / (16.0 * tz * tz) * (1.0 + 4.0 * t / (3.0 * td)))).powf(-0.5);
    let (mut closed_err, mut oracle_err, mut printed_gap) = (0.0f64, 0.0f64, 0.0f64);
    for k in 1..=50 {
        let t = k as f64 * 1e-3;
        let ov = lattice_overlap(&psi, &evolve_kernel(&psi, &q, t)?);
        closed_err = closed_err.max((ov - analytic::gaussian_overlap(&model, t)).abs());
        oracle_err = oracle_err.max((ov - common::gaussian_return_oracle(0.1, 100.0, 1.0, 1.0, t)).abs());
        printed_gap = printed_gap.max((ov - printed(t)).abs());
    }
    Ok(Outcome::new(
        spin_err < 1e-8 && closed_err < 1e-4,
        format!("spin RK4 vs closed {spin_err:.1e} (< 1e-8); Gaussian return lattice vs closed {closed_err:.1e} (< 1e-4, t <= 0.05)"),
    )
    .note(format!(
        "phase-space covariance oracle {oracle_err:.1e}; distance to the (1 + t/t_d)^(-1/2) variant {printed_gap:.3}"
    )))
}

fn propagators() -> Result<Outcome> {
    let grid = Grid1D::new(256, 0.02)?;
    let rho = DensityMatrix::gaussian(grid, 0.1)?;
    let q = qbm(100.0);
    let mut ks = 0.0f64;
    for t in [0.01, 0.02, 0.05, 0.1] {
        let steps = (t / 1e-3f64).round() as usize;
        ks = ks.max(evolve_kernel(&rho, &q, t)?.max_abs_diff(&evolve_stepper(&rho, &q, None, 1e-3, steps)?));
    }

    let small = Grid1D::new(16, 0.05)?;
    let rho = DensityMatrix::gaussian(small, 0.055)?;
    let (mut dk, mut ds) = (0.0f64, 0.0f64);
    for (d, t) in [(0.0, 0.01), (100.0, 2e-4), (100.0, 3e-4), (1000.0, 1e-4), (1000.0, 1.5e-4)] {
        let p = qbm(d);
        let exact = common::dense_evolve(&rho, &p, t);
        dk = dk.max(common::max_diff(evolve_kernel(&rho, &p, t)?.values(), &exact));
        ds = ds.max(common::max_diff(evolve_stepper(&rho, &p, None, t / 50.0, 50)?.values(), &exact));
    }
    Ok(Outcome::new(
        ks < 1e-4 && dk < 1e-6 && ds < 1e-6,
        format!("kernel vs stepper {ks:.1e} (< 1e-4, t <= 0.1); 16-point dense: kernel {dk:.1e}, stepper {ds:.1e} (< 1e-6)"),
    ))
}

fn diffusion_law() -> Result<Outcome> {
    let grid = Grid1D::new(256, 0.02)?;
    let start = project(&DensityMatrix::gaussian(grid, 0.1)?, &Projector::smeared(1.0, 0.02)?);
    let p0 = moments(&start, 1.0)?.p2;
    let mut worst = 0.0f64;
    for d in [100.0, 4000.0] {
        for t in [0.001, 0.005, 0.01] {
            let p = moments(&evolve_kernel(&start, &qbm(d), t)?, 1.0)?.p2;
            worst = worst.max(rel((p - p0) / t, 2.0 * d));
        }
    }
    // inside projection sequences: growth since the latest projection
    let (mut in_run, mut checked) = (Vec::new(), 0);
    let mut edge = 0.0;
    for d in [100.0, 4000.0] {
        let out = run_sequence(&ExperimentConfig {
            samples_per_interval: 4,
            decompose: false,
            ..with_d(d)
        })?;
        let mut last = None;
        let mut dev = 0.0f64;
        for r in out.series.records() {
            match r.kind {
                RecordKind::Projection => last = Some((r.t, r.p2)),
                RecordKind::Evolution => {
                    if let Some((t0, p0)) = last.filter(|&(t0, _)| r.t > t0) {
                        dev = dev.max(rel((r.p2 - p0) / (r.t - t0), 2.0 * d));
                        checked += 1;
                    }
                }
            }
        }
        in_run.push(dev);
        // the lattice rate falls short of 2D by the weight in the zone-edge bin
        let fin = &out.final_state;
        let md = momentum_distribution(fin, 1.0);
        let top = md.iter().map(|m| m.0.abs()).fold(0.0, f64::max);
        edge = md.iter().filter(|m| m.0.abs() == top).map(|m| m.1).sum::<f64>() * fin.n() as f64 / fin.trace();
    }
    let worst_all = in_run.iter().fold(worst, |a, &b| a.max(b));
    Ok(Outcome::new(
        worst_all < 1e-6 && checked > 0,
        format!(
            "relative deviation of d<p^2>/dt from 2D: after one projection {worst:.1e}; in runs to t = 0.1 D = 100 {:.1e}, D = 4000 {:.1e} (< 1e-6)",
            in_run[0], in_run[1]
        ),
    )
    .note(format!("n x zone-edge momentum weight at the end of the D = 4000 run {edge:.1e}")))
}

fn decomposition() -> Result<Outcome> {
    let out = run_sequence(&ExperimentConfig {
        total_time: 0.05,
        ..with_d(4000.0)
    })?;
    let mut identity = 0.0f64;
    for r in out.series.projections() {
        if let (Some(a), Some(b), Some(c)) = (r.p2_red, r.delta_term, r.sigma_term) {
            identity = identity.max(rel(a + b + c, r.p2));
        }
    }

    let base = ExperimentConfig::default();
    let steady = prepare_steady_state(&base)?;
    let evolved = evolve_kernel(&steady.state, &base.qbm, base.eps)?;
    let (_, rep) = apply_projection(&evolved, &base.proj, 1.0)?;
    let target = 1.0 / (base.grid.spacing() * base.proj.length());
    let sigma_ok = rep.sigma_term >= 0.5 * target && rep.sigma_term <= 2.0 * target;

    let mut plateaus = Vec::new();
    for d in [4000.0, 20000.0] {
        let run = run_sequence_from(
            &ExperimentConfig {
                total_time: 0.15,
                ..with_d(d)
            },
            steady.state.clone(),
        )?;
        let s = run.series.projections().last().and_then(|r| r.sigma_term).unwrap_or(f64::NAN);
        plateaus.push(format!("D = {d}: {s:.1}"));
    }
    Ok(Outcome::new(
        identity < 1e-9 && sigma_ok,
        format!(
            "identity {identity:.1e} (< 1e-9); Sigma at the prepared steady state {:.2} vs hbar^2/(eta L) = {target} (factor-2 window)",
            rep.sigma_term
        ),
    )
    .note(format!(
        "boundary density {:.4}; Sigma after the state has spread (t = 0.15) {}",
        rep.boundary_density,
        plateaus.join(", ")
    )))
}

fn zeno_scaling() -> Result<Outcome> {
    let tau = 0.05;
    let mut pts = Vec::new();
    for eps in [2e-3, 1e-3, 5e-4, 2.5e-4, 1.25e-4, 6.25e-5] {
        let out = run_sequence(&ExperimentConfig {
            eps,
            dt: eps,
            total_time: tau,
            decompose: false,
            proj: Projector::sharp(1.0)?,
            ..ExperimentConfig::default()
        })?;
        let p0 = out.survival[0].1;
        let p = out.survival.last().map_or(0.0, |s| s.1);
        pts.push((eps, p, 1.0 - p / p0));
    }
    let monotone = pts.windows(2).all(|w| w[1].1 > w[0].1);
    // least-squares slope of ln(loss) against ln(eps) for eps <= 2.5e-4
    let fit: Vec<(f64, f64)> = pts.iter().filter(|p| p.0 <= 2.5e-4 + 1e-12).map(|p| (p.0.ln(), p.2.ln())).collect();
    let n = fit.len() as f64;
    let (mx, my) = (fit.iter().map(|p| p.0).sum::<f64>() / n, fit.iter().map(|p| p.1).sum::<f64>() / n);
    let slope = fit.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / fit.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    let losses: Vec<String> = pts.iter().map(|p| format!("{:.2e}", p.2)).collect();
    Ok(Outcome::new(
        monotone && (slope - 1.0).abs() <= 0.2,
        format!("eps exponent {slope:.3} (1 +- 0.2, tau = {tau}, sharp projector); p(tau) monotone in eps: {monotone}"),
    )
    .note(format!("1 - p(tau)/p(0) for eps = 2e-3 ... 6.25e-5: {}", losses.join(", "))))
}

fn classical_mode() -> Result<Outcome> {
    let mode = find_steady_mode(&SteadyModeOptions::default())?;
    let moments_ok = rel(mode.x2, 0.076) < 0.1 && rel(mode.p2, 0.78) < 0.1 && rel(mode.xp_sym, 0.24) < 0.1;
    let mc = langevin_batches(
        &qbm(1.0),
        1.0,
        &LangevinOptions {
            n_particles: 20000,
            t_end: 4.0,
            dt: 1e-3,
            seed: 11,
            absorbing: true,
            resample: true,
            init_p_sigma: 1.0,
            init_x_sigma: None,
            record_every: 100,
        },
        10,
    )?;
    let z = |fp: f64, m: f64, s: f64| (fp - m).abs() / s;
    let zs = [
        z(mode.x2, mc.mean.x2, mc.stderr.x2),
        z(mode.p2, mc.mean.p2, mc.stderr.p2),
        z(mode.xp_sym, mc.mean.xp_sym, mc.stderr.xp_sym),
    ];
    Ok(Outcome::new(
        moments_ok && zs.iter().all(|&z| z < 3.0),
        format!(
            "x2 {:.4} p2 {:.4} 2xp {:.4} (0.076, 0.78, 0.24 within 10%); Langevin distance {:.1}, {:.1}, {:.1} sigma (< 3)",
            mode.x2, mode.p2, mode.xp_sym, zs[0], zs[1], zs[2]
        ),
    )
    .note(format!(
        "Langevin 10 x 20000: x2 {:.4}+-{:.4} p2 {:.4}+-{:.4} 2xp {:.4}+-{:.4}",
        mc.mean.x2, mc.stderr.x2, mc.mean.p2, mc.stderr.p2, mc.mean.xp_sym, mc.stderr.xp_sym
    )))
}

fn correspondence() -> Result<Outcome> {
    let cfg = ExperimentConfig {
        total_time: 0.15,
        decompose: false,
        ..with_d(20000.0)
    };
    let out = run_sequence(&cfg)?;
    let last = out.series.projections().last().copied().expect("projections recorded");
    let moments_ok = rel(last.x2, 0.076) < 0.15 && rel(last.p2, 570.0) < 0.15 && rel(last.xp_sym, 6.5) < 0.15;
    let lambda_inv = config_timescales(&cfg, last.p2).lambda_inv;
    let hl = half_life(&out.survival).unwrap_or(f64::NAN);
    let ratio = hl / lambda_inv;
    Ok(Outcome::new(
        moments_ok && rel(hl, 0.03) < 0.25 && ratio > 0.1 && ratio < 10.0,
        format!(
            "x2 {:.4} p2 {:.0} <xp+px> {:.2} (0.076, 570, 6.5 within 15%); half-life {hl:.4} (0.03 within 25%), lambda^-1 {lambda_inv:.4}",
            last.x2, last.p2, last.xp_sym
        ),
    ))
}

fn regime_boundary() -> Result<Outcome> {
    let tables = find_recipe("regime-surface")?.tables(&Config::new())?;
    let surface = tables.iter().find(|t| t.name == "surface").expect("surface table");
    let col = |name: &str| surface.column(name).expect("column present");
    let (ds, eps, tef, lam, excess) = (col("D"), col("eps"), col("t_energy_final"), col("lambda_inv"), col("excess"));
    let (mut classical, mut zeno) = ((0, 0), (0, 0));
    let mut misses = Vec::new();
    for i in 0..ds.len() {
        let r = excess[i] / lam[i];
        if tef[i] < eps[i] {
            classical.1 += 1;
            if r.abs() <= 0.25 {
                classical.0 += 1;
            } else {
                misses.push(format!("D={} eps={} ({:+.0}%)", ds[i], eps[i], 100.0 * r));
            }
        } else {
            zeno.1 += 1;
            if r > 0.0 {
                zeno.0 += 1;
            } else {
                misses.push(format!("D={} eps={} ({:+.0}%)", ds[i], eps[i], 100.0 * r));
            }
        }
    }
    let mut o = Outcome::new(
        classical.0 == classical.1 && zeno.0 == zeno.1,
        format!(
            "t_E^f < eps: {}/{} points with |tau_half - 1/lambda| <= 25%; other side: {}/{} points with tau_half > 1/lambda",
            classical.0, classical.1, zeno.0, zeno.1
        ),
    );
    if !misses.is_empty() {
        o = o.note(format!("missed: {}", misses.join(", ")));
    }
    Ok(o)
}

fn suppression() -> Result<Outcome> {
    let base = ExperimentConfig::default();
    let steady = prepare_steady_state(&base)?;
    let d = 4000.0;
    let out = run_sequence_from(
        &ExperimentConfig {
            total_time: 0.03,
            samples_per_interval: 5,
            ..with_d(d)
        },
        steady.state,
    )?;
    let recs = out.series.records();
    let p20 = recs[0].p2;
    let tau = 0.025;
    let mut worst = 0.0f64;
    for r in recs.iter().filter(|r| r.t > 0.0 && r.t <= tau + 1e-12) {
        worst = worst.max(rel(r.p2 - p20, 2.0 * d * r.t));
    }
    let ratio = out
        .series
        .projections()
        .filter(|r| r.t <= tau + 1e-12)
        .last()
        .and_then(|r| r.sigma_term.map(|s| s / r.p2))
        .unwrap_or(f64::NAN);
    Ok(Outcome::new(
        worst < 0.15 && ratio < 0.5,
        format!("growth of <p^2> vs 2Dt within {:.1}% (< 15%, t <= {tau}); Sigma/<p^2> at the last projection {ratio:.3} (< 0.5)", 100.0 * worst),
    ))
}

fn complex_potential() -> Result<Outcome> {
    let mut worst = 0.0f64;
    let mut finals = Vec::new();
    for d in [0.0, 100.0] {
        let rows = potential_comparison(&with_d(d), 5, 1e-4)?;
        for &(_, p, v) in &rows {
            worst = worst.max(rel(v, p));
        }
        let (t, p, v) = rows[rows.len() - 1];
        finals.push(format!("D = {d}, t = {t:.2}: {p:.4} vs {v:.4}"));
    }
    Ok(Outcome::new(
        worst < 0.1,
        format!("projector string vs complex potential, worst relative difference {:.1}% (< 10%, 5 windows)", 100.0 * worst),
    )
    .note(finals.join("; ")))
}

fn flux_lines() -> Result<Outcome> {
    let grid = Grid1D::new(256, 0.02)?;
    let free = QBMParams::default();
    let residual = continuity_residual(&evolve_kernel(&DensityMatrix::gaussian(grid, 0.1)?, &free, 0.005)?, &free, 1e-6)?;

    let run = |d: f64| {
        trace_flux_lines(
            &ExperimentConfig {
                total_time: 0.4,
                ..with_d(d)
            },
            &FluxOptions::default(),
        )
    };
    let (pure, noisy) = (run(0.0)?, run(4000.0)?);
    let drift = pure.max_quantile_drift().max(noisy.max_quantile_drift());

    // central pair of lines, quantiles 0.4 and 0.6
    let mid = pure.lines.len() / 2;
    let (max0, min0) = turning_points(&pure.spread(mid - 1, mid + 1), 0.1);
    let spreading = 0.1 * 1.0 * 1.0; // m sigma L / hbar
    let first_max = max0.first().copied();
    let recondenses = match first_max {
        Some(t) => rel(t, spreading) <= 0.2 && min0.iter().any(|&m| m > t),
        None => false,
    };
    let (_, min1) = turning_points(&noisy.spread(mid - 1, mid + 1), 0.1);
    let cycle = if max0.len() >= 2 { max0[1] - max0[0] } else { f64::NAN };
    Ok(Outcome::new(
        residual.rms < 1e-4 && drift < 0.02 && recondenses && min1.is_empty(),
        format!(
            "continuity residual {:.1e} (< 1e-4); quantile drift {drift:.4} (< 0.02); D = 0 central spread peaks at {:.3} and recondenses at {:.3}; D = 4000 recondensations: {}",
            residual.rms,
            first_max.unwrap_or(f64::NAN),
            min0.first().copied().unwrap_or(f64::NAN),
            min1.len()
        ),
    )
    .note(format!("D = 0 full spreading/recondensation cycle {cycle:.3}")))
}

fn main() -> ExitCode {
    // `cargo test -- --list` probes every target; there are no libtest tests here
    if std::env::args().any(|a| a == "--list") {
        return ExitCode::SUCCESS;
    }
    let filter = std::env::args().skip(1).find(|a| !a.starts_with('-'));
    let (mut ran, mut failed) = (0, 0);
    for (id, name, check) in CRITERIA {
        if let Some(f) = &filter {
            if f != id && !name.contains(f.as_str()) {
                continue;
            }
        }
        let start = Instant::now();
        let outcome = check().unwrap_or_else(|e| Outcome::new(false, format!("error: {e}")));
        ran += 1;
        if !outcome.passed {
            failed += 1;
        }
        println!(
            "[{}] {id:>2} {name}: {} ({:.1} s)",
            if outcome.passed { "PASS" } else { "FAIL" },
            outcome.detail,
            start.elapsed().as_secs_f64()
        );
        for n in &outcome.notes {
            println!("        {n}");
        }
    }
    println!("acceptance: {ran} criteria, {} passed, {failed} failed", ran - failed);
    if failed > 0 {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
