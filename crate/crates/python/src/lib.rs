//! Python module `zeno_sim`: thin wrappers over zeno-core.
//!
//! Configuration-style entry points take a dict of dotted keys, e.g.
//! `{"qbm.D": 100, "run.eps": 0.01}`; values are converted with `str()`.

use std::path::PathBuf;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use zeno_core::analytic::{self, GaussianModelParams, LindbladAxis, SpinModelParams};
use zeno_core::classical::{find_steady_mode, SteadyModeOptions};
use zeno_core::config::Config;
use zeno_core::flux::{self, FluxOptions};
use zeno_core::lattice::{moments, wigner_transform, DensityMatrix, Grid1D};
use zeno_core::projectors::{apply_projection, project, Projector, ProjectorKind};
use zeno_core::propagators::{evolve_kernel, evolve_stepper, QBMParams};
use zeno_core::runner::{classify_regime, config_timescales, initial_state, run_sequence as core_run_sequence};
use zeno_core::{invariants, recipes, ZenoError};

fn to_py(e: ZenoError) -> PyErr {
    match e {
        ZenoError::Config(_) | ZenoError::Argument(_) => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn config_from(overrides: Option<&Bound<'_, PyDict>>) -> PyResult<Config> {
    let mut cfg = Config::new();
    if let Some(d) = overrides {
        for (k, v) in d.iter() {
            let key: String = k.extract()?;
            cfg.set(&key, &v.str()?.to_string()).map_err(to_py)?;
        }
    }
    Ok(cfg)
}

#[pyclass(name = "Grid", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyGrid(Grid1D);

#[pymethods]
impl PyGrid {
    #[new]
    #[pyo3(signature = (n=256, eta=0.02))]
    fn new(n: usize, eta: f64) -> PyResult<Self> {
        Grid1D::new(n, eta).map(Self).map_err(to_py)
    }

    #[getter]
    fn n(&self) -> usize {
        self.0.n_points()
    }

    #[getter]
    fn eta(&self) -> f64 {
        self.0.spacing()
    }

    fn coords(&self) -> Vec<f64> {
        self.0.coords()
    }

    fn __repr__(&self) -> String {
        format!("Grid(n={}, eta={})", self.0.n_points(), self.0.spacing())
    }
}

#[pyclass(name = "QBMParams", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyQbm(QBMParams);

#[pymethods]
impl PyQbm {
    #[new]
    #[pyo3(signature = (mass=1.0, diffusion=0.0, hbar=1.0))]
    fn new(mass: f64, diffusion: f64, hbar: f64) -> PyResult<Self> {
        QBMParams::new(mass, diffusion, hbar).map(Self).map_err(to_py)
    }

    #[getter]
    fn mass(&self) -> f64 {
        self.0.mass
    }

    #[getter]
    fn diffusion(&self) -> f64 {
        self.0.diffusion
    }

    #[getter]
    fn hbar(&self) -> f64 {
        self.0.hbar
    }

    fn __repr__(&self) -> String {
        format!("QBMParams(mass={}, diffusion={}, hbar={})", self.0.mass, self.0.diffusion, self.0.hbar)
    }
}

#[pyclass(name = "Projector", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyProjector(Projector);

#[pymethods]
impl PyProjector {
    /// `kind` is "sharp" or "smeared".
    #[new]
    #[pyo3(signature = (length=1.0, smearing=0.02, kind="smeared"))]
    fn new(length: f64, smearing: f64, kind: &str) -> PyResult<Self> {
        let kind: ProjectorKind = kind.parse().map_err(to_py)?;
        let p = match kind {
            ProjectorKind::Sharp => Projector::sharp(length),
            ProjectorKind::Smeared => Projector::smeared(length, smearing),
        };
        p.map(Self).map_err(to_py)
    }

    fn window(&self, x: f64) -> f64 {
        self.0.window(x)
    }

    fn __repr__(&self) -> String {
        format!("Projector(length={}, smearing={}, kind={:?})", self.0.length(), self.0.smearing(), self.0.kind().to_string())
    }
}

#[pyclass(name = "DensityMatrix", frozen, skip_from_py_object)]
struct PyDensity(DensityMatrix);

#[pymethods]
impl PyDensity {
    /// Pure Gaussian packet `exp(-(x-center)^2/(4 sigma^2) + i k0 x)`.
    #[staticmethod]
    #[pyo3(signature = (grid, sigma=0.1, center=0.0, k0=0.0))]
    fn gaussian(grid: PyRef<'_, PyGrid>, sigma: f64, center: f64, k0: f64) -> PyResult<Self> {
        DensityMatrix::gaussian_packet(grid.0, sigma, center, k0).map(Self).map_err(to_py)
    }

    #[getter]
    fn n(&self) -> usize {
        self.0.n()
    }

    #[getter]
    fn time(&self) -> f64 {
        self.0.time()
    }

    fn trace(&self) -> f64 {
        self.0.trace()
    }

    fn diagonal(&self) -> Vec<f64> {
        self.0.diagonal()
    }

    /// Element `(i, j)` as a Python complex.
    fn get(&self, i: usize, j: usize) -> PyResult<(f64, f64)> {
        if i >= self.0.n() || j >= self.0.n() {
            return Err(PyValueError::new_err("index out of range"));
        }
        let z = self.0.get(i, j);
        Ok((z.re, z.im))
    }

    fn hermiticity_defect(&self) -> f64 {
        self.0.hermiticity_defect()
    }

    fn max_abs_diff(&self, other: PyRef<'_, PyDensity>) -> f64 {
        self.0.max_abs_diff(&other.0)
    }

    /// Normalized `x2`, `p2`, `xp_sym` and the raw `norm`.
    #[pyo3(signature = (hbar=1.0))]
    fn moments<'py>(&self, py: Python<'py>, hbar: f64) -> PyResult<Bound<'py, PyDict>> {
        let m = moments(&self.0, hbar).map_err(to_py)?;
        let d = PyDict::new(py);
        d.set_item("norm", m.norm)?;
        d.set_item("x2", m.x2)?;
        d.set_item("p2", m.p2)?;
        d.set_item("xp_sym", m.xp_sym)?;
        Ok(d)
    }

    /// Exact evolution over `t`.
    fn evolve(&self, params: PyRef<'_, PyQbm>, t: f64) -> PyResult<Self> {
        evolve_kernel(&self.0, &params.0, t).map(Self).map_err(to_py)
    }

    fn evolve_stepper(&self, params: PyRef<'_, PyQbm>, dt: f64, steps: usize) -> PyResult<Self> {
        evolve_stepper(&self.0, &params.0, None, dt, steps).map(Self).map_err(to_py)
    }

    fn project(&self, proj: PyRef<'_, PyProjector>) -> Self {
        Self(project(&self.0, &proj.0))
    }

    /// Projected state plus the momentum bookkeeping of the projection.
    #[pyo3(signature = (proj, hbar=1.0))]
    fn apply_projection<'py>(&self, py: Python<'py>, proj: PyRef<'_, PyProjector>, hbar: f64) -> PyResult<(Self, Bound<'py, PyDict>)> {
        let (out, r) = apply_projection(&self.0, &proj.0, hbar).map_err(to_py)?;
        let d = PyDict::new(py);
        d.set_item("norm_before", r.norm_before)?;
        d.set_item("norm_after", r.norm_after)?;
        d.set_item("p2_after", r.p2_after)?;
        d.set_item("p2_red", r.p2_red)?;
        d.set_item("delta_term", r.delta_term)?;
        d.set_item("sigma_term", r.sigma_term)?;
        d.set_item("boundary_density", r.boundary_density)?;
        Ok((Self(out), d))
    }

    /// `(x, p, rows)` with `rows[k][i] = W(x_i, p_k)`.
    #[pyo3(signature = (hbar=1.0))]
    fn wigner(&self, hbar: f64) -> PyResult<(Vec<f64>, Vec<f64>, Vec<Vec<f64>>)> {
        let w = wigner_transform(&self.0, hbar).map_err(to_py)?;
        let n = w.x_grid().n_points();
        let rows = w.values().chunks(n).map(<[f64]>::to_vec).collect();
        Ok((w.x_grid().coords(), w.p_grid().coords(), rows))
    }

    fn current(&self, params: PyRef<'_, PyQbm>) -> Vec<f64> {
        flux::current(&self.0, &params.0)
    }

    /// Velocity field; `None` where the density is negligible.
    fn velocity(&self, params: PyRef<'_, PyQbm>) -> Vec<Option<f64>> {
        flux::velocity(&self.0, &params.0)
    }

    fn __repr__(&self) -> String {
        format!("DensityMatrix(n={}, t={}, trace={:.6})", self.0.n(), self.0.time(), self.0.trace())
    }
}

/// Run a projection sequence. Returns survival, moment records and the
/// depletion time (or None).
#[pyfunction]
#[pyo3(signature = (overrides=None))]
fn run_sequence<'py>(py: Python<'py>, overrides: Option<&Bound<'py, PyDict>>) -> PyResult<Bound<'py, PyDict>> {
    let cfg = config_from(overrides)?;
    cfg.check_keys(&[]).map_err(to_py)?;
    let exp = cfg.experiment().map_err(to_py)?;
    let out = py.detach(|| core_run_sequence(&exp)).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("survival", out.survival)?;
    let records: Vec<Bound<'py, PyDict>> = out
        .series
        .records()
        .iter()
        .map(|r| {
            let rec = PyDict::new(py);
            rec.set_item("t", r.t)?;
            rec.set_item("norm", r.norm)?;
            rec.set_item("x2", r.x2)?;
            rec.set_item("p2", r.p2)?;
            rec.set_item("xp_sym", r.xp_sym)?;
            rec.set_item("p2_pre", r.p2_pre)?;
            rec.set_item("p2_red", r.p2_red)?;
            rec.set_item("delta_term", r.delta_term)?;
            rec.set_item("sigma_term", r.sigma_term)?;
            rec.set_item("projection", r.kind == zeno_core::lattice::RecordKind::Projection)?;
            Ok(rec)
        })
        .collect::<PyResult<_>>()?;
    d.set_item("records", records)?;
    d.set_item("depleted_at", out.depleted_at)?;
    Ok(d)
}

/// Characteristic times of a configuration and its regime.
#[pyfunction]
#[pyo3(signature = (overrides=None))]
fn timescales<'py>(py: Python<'py>, overrides: Option<&Bound<'py, PyDict>>) -> PyResult<Bound<'py, PyDict>> {
    let exp = config_from(overrides)?.experiment().map_err(to_py)?;
    let rho = project(&initial_state(&exp).map_err(to_py)?, &exp.proj);
    let p2 = moments(&rho, exp.qbm.hbar).map_err(to_py)?.p2;
    let ts = config_timescales(&exp, p2);
    let d = PyDict::new(py);
    d.set_item("p2_initial", p2)?;
    d.set_item("t_energy", ts.t_energy)?;
    d.set_item("t_loc", ts.t_loc)?;
    d.set_item("tau_suppress", ts.tau_suppress)?;
    d.set_item("lambda_inv", ts.lambda_inv)?;
    d.set_item("p_stationary", ts.p_stationary)?;
    d.set_item("t_energy_final", ts.t_energy_final)?;
    d.set_item("p_cutoff", ts.p_cutoff)?;
    d.set_item("regime", classify_regime(&ts, exp.eps).to_string())?;
    Ok(d)
}

#[pyfunction]
fn recipe_names() -> Vec<&'static str> {
    recipes::RECIPES.iter().map(|r| r.name).collect()
}

/// Run a recipe into `out_dir`; returns `{file: sha256}`.
#[pyfunction]
#[pyo3(signature = (name, out_dir, overrides=None))]
fn run_recipe(py: Python<'_>, name: &str, out_dir: PathBuf, overrides: Option<&Bound<'_, PyDict>>) -> PyResult<Vec<(String, String)>> {
    let cfg = config_from(overrides)?;
    let m = py.detach(|| recipes::run_recipe(name, &cfg, &out_dir)).map_err(to_py)?;
    Ok(m.outputs.into_iter().map(|o| (o.path, o.sha256)).collect())
}

/// `(name, value, bound, passed)` for every invariant check.
#[pyfunction]
fn validate(py: Python<'_>) -> PyResult<Vec<(String, f64, f64, bool)>> {
    let checks = py.detach(invariants::invariant_suite).map_err(to_py)?;
    Ok(checks.into_iter().map(|c| (c.name.to_string(), c.value, c.bound, c.passed)).collect())
}

fn spin_params(omega: f64, diffusion: f64, axis: &str) -> PyResult<SpinModelParams> {
    let axis = match axis {
        "x" | "X" => LindbladAxis::X,
        "y" | "Y" => LindbladAxis::Y,
        other => return Err(PyValueError::new_err(format!("axis must be 'x' or 'y', got {other:?}"))),
    };
    SpinModelParams::new(omega, diffusion, axis).map_err(to_py)
}

/// Probability of spin up after free evolution for `t` (no projections).
#[pyfunction]
#[pyo3(signature = (omega, diffusion, t, axis="x"))]
fn spin_survival(omega: f64, diffusion: f64, t: f64, axis: &str) -> PyResult<f64> {
    Ok(analytic::spin_survival_single(&spin_params(omega, diffusion, axis)?, t))
}

/// Survival after `n` projections spaced by `eps`.
#[pyfunction]
#[pyo3(signature = (omega, diffusion, eps, n, axis="x"))]
fn spin_zeno_sequence(omega: f64, diffusion: f64, eps: f64, n: usize, axis: &str) -> PyResult<f64> {
    analytic::spin_zeno_sequence(&spin_params(omega, diffusion, axis)?, eps, n).map_err(to_py)
}

/// Return probability of a Gaussian packet after time `t`.
#[pyfunction]
#[pyo3(signature = (sigma, diffusion, t, mass=1.0, hbar=1.0))]
fn gaussian_overlap(sigma: f64, diffusion: f64, t: f64, mass: f64, hbar: f64) -> PyResult<f64> {
    let p = GaussianModelParams::new(sigma, diffusion, mass, hbar).map_err(to_py)?;
    Ok(analytic::gaussian_overlap(&p, t))
}

/// Trace flux lines; returns seeds, `(t, x)` samples per line, projection
/// times and the largest quantile drift.
#[pyfunction]
#[pyo3(signature = (overrides=None, n_lines=9, project=true))]
fn flux_lines<'py>(
    py: Python<'py>,
    overrides: Option<&Bound<'py, PyDict>>,
    n_lines: usize,
    project: bool,
) -> PyResult<Bound<'py, PyDict>> {
    let exp = config_from(overrides)?.experiment().map_err(to_py)?;
    let opts = FluxOptions {
        n_lines,
        project,
        ..FluxOptions::default()
    };
    let set = py.detach(|| flux::trace_flux_lines(&exp, &opts)).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("seeds", &set.seeds)?;
    d.set_item("lines", set.lines.iter().map(|l| l.samples.clone()).collect::<Vec<_>>())?;
    d.set_item("projection_times", &set.projection_times)?;
    d.set_item("max_quantile_drift", set.max_quantile_drift())?;
    d.set_item("survival", &set.survival)?;
    Ok(d)
}

/// Slowest classical decay mode in units `m = D = L = 1`.
#[pyfunction]
#[pyo3(signature = (half_cells=50))]
fn classical_mode<'py>(py: Python<'py>, half_cells: usize) -> PyResult<Bound<'py, PyDict>> {
    let opts = SteadyModeOptions {
        half_cells,
        ..SteadyModeOptions::default()
    };
    let mode = py.detach(|| find_steady_mode(&opts)).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("lambda", mode.lambda)?;
    d.set_item("x2", mode.x2)?;
    d.set_item("p2", mode.p2)?;
    d.set_item("xp_sym", mode.xp_sym)?;
    Ok(d)
}

#[pymodule]
pub fn zeno_sim(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGrid>()?;
    m.add_class::<PyQbm>()?;
    m.add_class::<PyProjector>()?;
    m.add_class::<PyDensity>()?;
    m.add_function(wrap_pyfunction!(run_sequence, m)?)?;
    m.add_function(wrap_pyfunction!(timescales, m)?)?;
    m.add_function(wrap_pyfunction!(recipe_names, m)?)?;
    m.add_function(wrap_pyfunction!(run_recipe, m)?)?;
    m.add_function(wrap_pyfunction!(validate, m)?)?;
    m.add_function(wrap_pyfunction!(spin_survival, m)?)?;
    m.add_function(wrap_pyfunction!(spin_zeno_sequence, m)?)?;
    m.add_function(wrap_pyfunction!(gaussian_overlap, m)?)?;
    m.add_function(wrap_pyfunction!(flux_lines, m)?)?;
    m.add_function(wrap_pyfunction!(classical_mode, m)?)?;
    Ok(())
}
