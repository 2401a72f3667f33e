use num_complex::Complex64;
use proptest::prelude::*;
use std::f64::consts::PI;
use zeno_core::lattice::{
    inverse_wigner, momentum_distribution, moments, p2_finite_difference, wigner_transform, DensityMatrix, Grid1D,
};

fn default_grid() -> Grid1D {
    Grid1D::new(256, 0.02).unwrap()
}

#[test]
fn grid_rejects_bad_parameters() {
    assert!(Grid1D::new(4, 0.02).is_err());
    assert!(Grid1D::new(256, 0.0).is_err());
    assert!(Grid1D::new(256, -1.0).is_err());
    let g = default_grid();
    assert_eq!(g.coord(128), 0.0);
    assert_eq!(g.coords().len(), 256);
}

#[test]
fn gaussian_moments_match_minimum_uncertainty() {
    for sigma in [0.08, 0.1, 0.15] {
        let rho = DensityMatrix::gaussian(default_grid(), sigma).unwrap();
        let m = moments(&rho, 1.0).unwrap();
        assert!((m.norm - 1.0).abs() < 1e-10);
        assert!((m.x2 - sigma * sigma).abs() < 1e-9 * sigma * sigma, "x2 {}", m.x2);
        let p2 = 1.0 / (4.0 * sigma * sigma);
        assert!((m.p2 - p2).abs() < 1e-8 * p2, "p2 {} vs {p2}", m.p2);
        assert!(m.xp_sym.abs() < 1e-10);
    }
}

#[test]
fn boosted_packet_carries_its_momentum() {
    let (sigma, k0, hbar) = (0.1, 12.0, 1.0);
    let rho = DensityMatrix::gaussian_packet(default_grid(), sigma, 0.0, k0).unwrap();
    let m = moments(&rho, hbar).unwrap();
    let expect = hbar * hbar * (k0 * k0 + 1.0 / (4.0 * sigma * sigma));
    assert!((m.p2 - expect).abs() < 1e-8 * expect);
    let dist = momentum_distribution(&rho, hbar);
    let mean: f64 = dist.iter().map(|(p, w)| p * w).sum::<f64>() / rho.trace();
    assert!((mean - hbar * k0).abs() < 1e-8);
}

#[test]
fn spectral_and_finite_difference_p2_agree_for_smooth_states() {
    let rho = DensityMatrix::gaussian(default_grid(), 0.1).unwrap();
    let a = moments(&rho, 1.0).unwrap().p2;
    let b = p2_finite_difference(&rho, 1.0).unwrap();
    assert!((a - b).abs() < 1e-3 * a, "{a} vs {b}");
}

#[test]
fn wigner_of_gaussian_matches_its_defining_sum() {
    let sigma = 0.1;
    let g = default_grid();
    let (n, eta) = (g.n_points() as i64, g.spacing());
    let rho = DensityMatrix::gaussian(g, sigma).unwrap();
    let w = wigner_transform(&rho, 1.0).unwrap();
    assert!((w.total() - 1.0).abs() < 1e-9);
    let amp = |x: f64| (-x * x / (4.0 * sigma * sigma)).exp() / (2.0 * PI * sigma * sigma).sqrt().sqrt();
    let pg = *w.p_grid();
    let mut worst = 0.0f64;
    for s in (0..n).step_by(5) {
        for k in (0..pg.n_points()).step_by(3) {
            let p = pg.coord(k);
            // W(p, X) = (eta / 2 pi hbar) sum_d e^{-i p xi} rho(x_s + ceil(d/2) eta, x_s - floor(d/2) eta)
            let mut acc = 0.0;
            for d in -n / 2..n / 2 {
                let (i, j) = (s + (d + 1).div_euclid(2), s - d.div_euclid(2));
                let (xi, xj) = (g.coord(i.rem_euclid(n) as usize), g.coord(j.rem_euclid(n) as usize));
                acc += (p * d as f64 * eta).cos() * amp(xi) * amp(xj);
            }
            let expect = eta / (2.0 * PI) * acc;
            worst = worst.max((w.get(k, s as usize) - expect).abs());
        }
    }
    assert!(worst < 1e-12, "{worst}");

    // against the continuum: odd separations sit half a cell off, which
    // blurs W by O(eta / sigma)
    let peak = 1.0 / PI;
    let exact = |x: f64, p: f64| peak * (-x * x / (2.0 * sigma * sigma) - 2.0 * sigma * sigma * p * p).exp();
    let mut cont = 0.0f64;
    for k in 0..pg.n_points() {
        for s in 0..g.n_points() {
            cont = cont.max((w.get(k, s) - exact(g.coord(s), pg.coord(k))).abs());
        }
    }
    assert!(cont < 0.04 * peak, "{cont}");
    assert!((w.integrate(|_, x| x * x) - sigma * sigma).abs() < 1e-6);
    assert!((w.integrate(|p, _| p * p) - 25.0).abs() < 1e-3);
}

#[test]
fn wigner_marginal_is_the_diagonal() {
    let rho = DensityMatrix::gaussian_packet(default_grid(), 0.12, 0.2, -5.0).unwrap();
    let w = wigner_transform(&rho, 1.0).unwrap();
    let marg = w.position_marginal();
    let diag = rho.diagonal();
    // both are densities in x; compare coarse-grained mass in blocks of two
    // cells since the odd separations sit half a cell off
    for b in (0..256).step_by(2) {
        let (a, c) = (marg[b] + marg[b + 1], diag[b] + diag[b + 1]);
        assert!((a - c).abs() < 2e-2 * diag.iter().cloned().fold(0.0, f64::max));
    }
}

#[test]
fn gaussian_is_well_inside_the_box() {
    let rho = DensityMatrix::gaussian(default_grid(), 0.1).unwrap();
    assert!(rho.edge_leakage() < 1e-12);
    // pure and normalized: eigenvalues 1 and 0
    let (top, bottom) = rho.extreme_eigenvalues(200);
    assert!((top - 1.0).abs() < 1e-9, "{top}");
    assert!(bottom.abs() < 1e-6, "{bottom}");
}

fn random_state(re: &[f64], im: &[f64]) -> DensityMatrix {
    let g = Grid1D::new(16, 0.05).unwrap();
    let psi: Vec<Complex64> = re.iter().zip(im).map(|(&a, &b)| Complex64::new(a, b)).collect();
    DensityMatrix::from_wavefunction(g, &psi).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn wigner_round_trip_is_exact(
        re in prop::collection::vec(-1.0f64..1.0, 16),
        im in prop::collection::vec(-1.0f64..1.0, 16),
    ) {
        let rho = random_state(&re, &im);
        prop_assume!(rho.trace() > 1e-3);
        let w = wigner_transform(&rho, 1.0).unwrap();
        prop_assert!((w.total() - rho.trace()).abs() < 1e-10 * rho.trace().max(1.0));
        let back = inverse_wigner(&w).unwrap();
        prop_assert!(back.max_abs_diff(&rho) < 1e-10 * rho.max_abs().max(1.0));
    }

    #[test]
    fn momentum_distribution_is_a_distribution(
        re in prop::collection::vec(-1.0f64..1.0, 16),
        im in prop::collection::vec(-1.0f64..1.0, 16),
    ) {
        let rho = random_state(&re, &im);
        prop_assume!(rho.trace() > 1e-3);
        let dist = momentum_distribution(&rho, 1.0);
        let total: f64 = dist.iter().map(|d| d.1).sum();
        prop_assert!((total - rho.trace()).abs() < 1e-10 * rho.trace().max(1.0));
        prop_assert!(dist.iter().all(|d| d.1 > -1e-12));
        prop_assert!(rho.hermiticity_defect() < 1e-12);
    }
}
