//! Quick invariant suite behind `zeno validate`: each check is cheap and
//! reports the measured quantity next to its bound.

use crate::analytic::{self, GaussianModelParams, LindbladAxis, SpinModelParams};
use crate::error::Result;
use crate::flux::continuity_residual;
use crate::lattice::{inverse_wigner, moments, wigner_transform, DensityMatrix, Grid1D};
use crate::potential::v0_from_eps;
use crate::projectors::{apply_projection, project, Projector};
use crate::propagators::{evolve_kernel, evolve_stepper, QBMParams};
use crate::recipes::lattice_overlap;
use crate::runner::{run_sequence, ExperimentConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub value: f64,
    pub bound: f64,
    pub passed: bool,
}

impl std::fmt::Display for Check {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "[{}] {:<40} {:.3e} (bound {:.1e})",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.value,
            self.bound
        )
    }
}

fn below(name: &'static str, value: f64, bound: f64) -> Check {
    Check {
        name,
        value,
        bound,
        passed: value.is_finite() && value < bound,
    }
}

/// Run every check. Errors are numerical failures inside a check.
pub fn invariant_suite() -> Result<Vec<Check>> {
    let grid = Grid1D::new(256, 0.02)?;
    let psi = DensityMatrix::gaussian(grid, 0.1)?;
    let q100 = QBMParams::new(1.0, 100.0, 1.0)?;
    let q4000 = QBMParams::new(1.0, 4000.0, 1.0)?;
    let proj = Projector::smeared(1.0, 0.02)?;
    let mut out = Vec::new();

    out.push(below("initial trace", (psi.trace() - 1.0).abs(), 1e-9));

    let k = evolve_kernel(&psi, &q100, 0.01)?;
    let s = evolve_stepper(&psi, &q100, None, 1e-4, 100)?;
    out.push(below("kernel vs stepper (D=100, t=0.01)", k.max_abs_diff(&s), 1e-4));

    let e = evolve_kernel(&psi, &q4000, 0.01)?;
    out.push(below("trace conserved by evolution", (e.trace() - 1.0).abs(), 1e-9));
    out.push(below("hermiticity after evolution", e.hermiticity_defect(), 1e-10));

    let p0 = project(&psi, &proj);
    let m0 = moments(&p0, 1.0)?;
    let m1 = moments(&evolve_kernel(&p0, &q4000, 0.005)?, 1.0)?;
    let rate = (m1.p2 - m0.p2) / (2.0 * 4000.0 * 0.005);
    out.push(below("d<p^2>/dt = 2D", (rate - 1.0).abs(), 1e-6));

    let (_, rep) = apply_projection(&e, &proj, 1.0)?;
    let sum = rep.p2_red + rep.delta_term + rep.sigma_term;
    out.push(below("p^2 decomposition identity", ((sum - rep.p2_after) / rep.p2_after).abs(), 1e-9));

    let sharp = Projector::sharp(1.0)?;
    let once = project(&e, &sharp);
    out.push(below("sharp projector idempotent", once.max_abs_diff(&project(&once, &sharp)), 1e-14));

    let w = wigner_transform(&e, 1.0)?;
    out.push(below("Wigner normalization", (w.total() - e.trace()).abs(), 1e-9));
    out.push(below("Wigner round trip", inverse_wigner(&w)?.max_abs_diff(&e), 1e-10));

    let mut spin = 0.0f64;
    for axis in [LindbladAxis::X, LindbladAxis::Y] {
        let p = SpinModelParams::new(1.0, 0.3, axis)?;
        for t in [0.1, 0.5, 1.0, 2.0] {
            let n = analytic::spin_lindblad_numeric(&p, t, 1e-3)?;
            spin = spin.max((n[0][0].0 - analytic::spin_survival_single(&p, t)).abs());
        }
    }
    out.push(below("spin closed forms vs RK4", spin, 1e-8));

    let model = GaussianModelParams::new(0.1, 100.0, 1.0, 1.0)?;
    let ov = lattice_overlap(&psi, &evolve_kernel(&psi, &q100, 0.02)?);
    out.push(below("Gaussian return probability", (ov - analytic::gaussian_overlap(&model, 0.02)).abs(), 1e-4));

    let free = QBMParams::default();
    let r = continuity_residual(&evolve_kernel(&psi, &free, 0.005)?, &free, 1e-6)?;
    out.push(below("continuity residual", r.rms, 1e-4));

    let run = run_sequence(&ExperimentConfig {
        qbm: q100,
        total_time: 0.05,
        decompose: false,
        ..Default::default()
    })?;
    let rise = run.survival.windows(2).map(|w| w[1].1 - w[0].1).fold(f64::NEG_INFINITY, f64::max);
    out.push(below("survival non-increasing", rise.max(0.0), 1e-15));

    out.push(below("V0 = hbar/eps", (v0_from_eps(0.01, 1.0)? - 100.0).abs(), 1e-12));
    Ok(out)
}
