mod common;

use common::{dense_evolve, max_diff};
use num_complex::Complex64;
use zeno_core::lattice::{DensityMatrix, Grid1D};
use zeno_core::propagators::{evolve_kernel, evolve_stepper, QBMParams};

#[test]
fn both_evolvers_match_the_dense_exponential() {
    // width ~1.1 lattice cells keeps the state small both at the separation
    // wrap and at the momentum alias of this tiny lattice
    let g = Grid1D::new(16, 0.05).unwrap();
    let rho = DensityMatrix::gaussian(g, 0.055).unwrap();
    for (d, t) in [(0.0, 0.01), (100.0, 2e-4), (100.0, 3e-4), (1000.0, 1e-4), (1000.0, 1.5e-4)] {
        let p = QBMParams::new(1.0, d, 1.0).unwrap();
        let exact = dense_evolve(&rho, &p, t);
        let k = evolve_kernel(&rho, &p, t).unwrap();
        let steps = 50;
        let s = evolve_stepper(&rho, &p, None, t / steps as f64, steps).unwrap();
        let (dk, ds) = (max_diff(k.values(), &exact), max_diff(s.values(), &exact));
        assert!(dk < 1e-6, "kernel D={d} t={t}: {dk:.2e}");
        assert!(ds < 1e-6, "stepper D={d} t={t}: {ds:.2e}");
        if d > 0.0 {
            // the environment's effect is far above the tolerance
            let free = dense_evolve(&rho, &QBMParams::default(), t);
            assert!(max_diff(&free, &exact) > 5e-4);
        }
    }
}

#[test]
fn kernel_and_stepper_agree_on_default_lattice() {
    let g = Grid1D::new(256, 0.02).unwrap();
    let rho = DensityMatrix::gaussian(g, 0.1).unwrap();
    let p = QBMParams::new(1.0, 100.0, 1.0).unwrap();
    for t in [0.01, 0.05, 0.1] {
        let k = evolve_kernel(&rho, &p, t).unwrap();
        let steps = (t / 0.001f64).round() as usize;
        let s = evolve_stepper(&rho, &p, None, 0.001, steps).unwrap();
        let diff = k.max_abs_diff(&s);
        assert!(diff < 1e-4, "t={t}: {diff:.3e}");
        assert!((s.trace() - rho.trace()).abs() < 1e-9);
        assert!(s.hermiticity_defect() < 1e-12);
    }
}

#[test]
fn stepper_reports_non_finite_states() {
    let g = Grid1D::new(16, 0.05).unwrap();
    let mut v = DensityMatrix::gaussian(g, 0.1).unwrap().into_values();
    v[17] = Complex64::new(f64::NAN, 0.0);
    let bad = DensityMatrix::new(g, v, 0.0).unwrap();
    let err = evolve_stepper(&bad, &QBMParams::default(), None, 1e-3, 3).unwrap_err();
    assert_eq!(err.exit_code(), 3);
}

#[test]
fn kernel_composes_over_subintervals() {
    let g = Grid1D::new(256, 0.02).unwrap();
    let rho = DensityMatrix::gaussian_packet(g, 0.1, 0.1, 4.0).unwrap();
    let p = QBMParams::new(1.0, 400.0, 1.0).unwrap();
    let once = evolve_kernel(&rho, &p, 0.02).unwrap();
    let twice = evolve_kernel(&evolve_kernel(&rho, &p, 0.01).unwrap(), &p, 0.01).unwrap();
    assert!(once.max_abs_diff(&twice) < 1e-9);
}
