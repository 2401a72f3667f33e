use zeno_core::classical::{
    classical_grids, evolve_classical, find_steady_mode, langevin_batches, langevin_oracle, InitialShape,
    LangevinOptions, PhaseSpaceDistribution, SteadyModeOptions,
};
use zeno_core::propagators::QBMParams;
use zeno_core::ZenoError;

fn params(d: f64) -> QBMParams {
    QBMParams::new(1.0, d, 1.0).unwrap()
}

fn free_opts(n: usize, seed: u64) -> LangevinOptions {
    LangevinOptions {
        n_particles: n,
        t_end: 0.5,
        dt: 0.005,
        seed,
        absorbing: false,
        resample: false,
        init_p_sigma: 1.0,
        init_x_sigma: Some(0.1),
        record_every: 10,
    }
}

#[test]
fn free_streaming_shears_the_distribution() {
    // D = 0: x -> x + p t, so <x^2> = sx^2 + sp^2 t^2 and <xp + px> = 2 sp^2 t
    let (xg, pg) = classical_grids(1.0, 60, 100, 5.0, 200).unwrap();
    let (sx, sp, t) = (0.1, 1.0, 0.2);
    let w = PhaseSpaceDistribution::gaussian(xg, pg, sx, sp).unwrap();
    let m0 = w.moments().unwrap();
    let out = evolve_classical(&w, &params(0.0), 1.0, t, false).unwrap();
    let m = out.moments().unwrap();
    assert!((out.mass() - 1.0).abs() < 1e-10);
    assert!((m.p2 - m0.p2).abs() < 1e-10);
    let x2 = m0.x2 + m0.p2 * t * t;
    assert!((m.x2 - x2).abs() < 0.01 * x2, "{} vs {x2}", m.x2);
    let xp = 2.0 * m0.p2 * t;
    assert!((m.xp_sym - xp).abs() < 0.01 * xp, "{} vs {xp}", m.xp_sym);
}

#[test]
fn diffusion_and_streaming_together() {
    // <p^2> grows by 2 D t exactly; <xp + px> picks up D t^2 on top of the shear
    let (xg, pg) = classical_grids(1.0, 60, 100, 8.0, 320).unwrap();
    let (d, t) = (1.5, 0.2);
    let w = PhaseSpaceDistribution::gaussian(xg, pg, 0.1, 1.0).unwrap();
    let m0 = w.moments().unwrap();
    let m = evolve_classical(&w, &params(d), 1.0, t, false).unwrap().moments().unwrap();
    assert!((m.p2 - (m0.p2 + 2.0 * d * t)).abs() < 1e-6 * m.p2);
    let xp = 2.0 * (m0.p2 * t + d * t * t);
    assert!((m.xp_sym - xp).abs() < 0.01 * xp, "{} vs {xp}", m.xp_sym);
    let x2 = m0.x2 + m0.p2 * t * t + 2.0 * d * t.powi(3) / 3.0;
    assert!((m.x2 - x2).abs() < 0.01 * x2, "{} vs {x2}", m.x2);
}

#[test]
fn langevin_free_diffusion_statistics() {
    let (d, sx, sp, t) = (2.0, 0.1, 1.0, 0.5);
    let r = langevin_oracle(&params(d), 1.0, &free_opts(40000, 5)).unwrap();
    let m = r.moments;
    assert_eq!(m.mass, 1.0);
    let p2 = sp * sp + 2.0 * d * t;
    let x2 = sx * sx + sp * sp * t * t + 2.0 * d * t.powi(3) / 3.0;
    let xp = 2.0 * (sp * sp * t + d * t * t);
    // Gaussian sample moments fluctuate by sqrt(2/N) relative; the Euler
    // scheme is exact for p and biased by O(dt) in x
    assert!((m.p2 / p2 - 1.0).abs() < 0.03, "{} vs {p2}", m.p2);
    assert!((m.x2 / x2 - 1.0).abs() < 0.04, "{} vs {x2}", m.x2);
    assert!((m.xp_sym / xp - 1.0).abs() < 0.04, "{} vs {xp}", m.xp_sym);
    assert!(r.survival.iter().all(|s| s.1 == 1.0));
}

#[test]
fn langevin_seeds_select_streams() {
    let q = params(1.0);
    let a = langevin_oracle(&q, 1.0, &free_opts(300, 1)).unwrap();
    let b = langevin_oracle(&q, 1.0, &free_opts(300, 1)).unwrap();
    let c = langevin_oracle(&q, 1.0, &free_opts(300, 2)).unwrap();
    assert_eq!(a.moments, b.moments);
    assert_ne!(a.moments, c.moments);
}

#[test]
fn langevin_rejects_bad_options() {
    let q = params(1.0);
    let e = langevin_oracle(&q, 1.0, &free_opts(0, 1)).unwrap_err();
    assert!(matches!(e, ZenoError::Argument(_)));
    assert!(langevin_oracle(&q, 0.0, &free_opts(10, 1)).is_err());
    assert!(langevin_batches(&q, 1.0, &free_opts(10, 1), 1).is_err());
}

#[test]
fn absorbing_survival_decreases() {
    let opts = LangevinOptions {
        absorbing: true,
        init_x_sigma: None,
        t_end: 1.0,
        ..free_opts(4000, 9)
    };
    let r = langevin_oracle(&params(1.0), 1.0, &opts).unwrap();
    for w in r.survival.windows(2) {
        assert!(w[1].1 <= w[0].1);
    }
    assert!(r.survival.last().unwrap().1 < 0.9);
    assert!(r.decay_rate > 0.0);
    assert!(r.moments.x2 < 0.25 / 3.0 + 0.01);
}

#[test]
fn steady_mode_forgets_its_start() {
    let opts = SteadyModeOptions {
        half_cells: 20,
        n_p: 120,
        tolerance: 1e-5,
        ..Default::default()
    };
    let a = find_steady_mode(&opts).unwrap();
    let b = find_steady_mode(&SteadyModeOptions {
        initial: InitialShape::Cosine,
        ..opts
    })
    .unwrap();
    assert!((a.lambda - b.lambda).abs() < 1e-3 * a.lambda, "{} vs {}", a.lambda, b.lambda);
    assert!((a.p2 - b.p2).abs() < 1e-3 * a.p2);
    assert!(a.shape.shape_difference(&b.shape) < 1e-2);
    // outward movers leave first, so x and p end up correlated
    assert!(a.xp_sym.abs() > 0.05);
    assert!((a.xp_sym - b.xp_sym).abs() < 1e-2 * a.xp_sym.abs());
    assert!((a.shape.mass() - 1.0).abs() < 1e-12);
}

#[test]
fn steady_mode_rescaling() {
    let opts = SteadyModeOptions {
        half_cells: 15,
        n_p: 96,
        tolerance: 1e-4,
        ..Default::default()
    };
    let mode = find_steady_mode(&opts).unwrap();
    // m = 2, L = 0.5, D = 8000: p_s = 20, rate = (8000 / 1)^(1/3) = 20
    let q = QBMParams::new(2.0, 8000.0, 1.0).unwrap();
    let s = mode.rescale(&q, 0.5);
    assert!((s.lambda - 20.0 * mode.lambda).abs() < 1e-9 * s.lambda);
    assert!((s.p2 - 400.0 * mode.p2).abs() < 1e-9 * s.p2);
    assert!((s.x2 - 0.25 * mode.x2).abs() < 1e-12);
    assert!((s.xp_sym - 10.0 * mode.xp_sym).abs() < 1e-9);
    assert!((mode.half_life() * mode.lambda - std::f64::consts::LN_2).abs() < 1e-12);
}
