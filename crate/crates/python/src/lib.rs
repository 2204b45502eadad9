//! Python bindings for the qflow core: grids, wavefunctions, potentials,
//! evolution, the four local mean-momentum routes, trajectories, path sums
//! and the scenario runner.

use std::path::PathBuf;

use num_complex::Complex64;
use pyo3::exceptions::{PyIndexError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use qflow::feynman::{
    free_propagator as core_free_propagator, lattice_propagator as core_lattice_propagator, roughness_exponent,
    PathLattice, SumMode,
};
use qflow::polar::{self, FieldOnGrid, FieldOptions};
use qflow::run::{run_file, RunError, Subcommand};
use qflow::schrodinger::{self, EdgeProfile, EvolutionSeries, InitialState};
use qflow::stencil::DifferenceOrder;
use qflow::trajectories::{integrate_ensemble, seed_ensemble as core_seed_ensemble, VelocityField};
use qflow::weak::{weak_flow_lines, weak_momentum_profile as core_weak_profile};
use qflow::wigner::{equivalence_report as core_equivalence, wigner_transform};
use qflow::{Grid1D, QflowError};

fn err(e: QflowError) -> PyErr {
    match e {
        QflowError::MaskedRegion { .. }
        | QflowError::Node { .. }
        | QflowError::LeftGrid { .. }
        | QflowError::TimeOutOfRange { .. }
        | QflowError::MonteCarloVariance { .. } => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn options(eta: f64, node_pad: usize, fd_order: u8) -> PyResult<FieldOptions> {
    Ok(FieldOptions { eta, node_pad, order: DifferenceOrder::new(fd_order).map_err(err)? })
}

/// Values with NaN at masked points.
fn masked(f: FieldOnGrid) -> Vec<f64> {
    f.values.iter().zip(&f.valid).map(|(v, ok)| if *ok { *v } else { f64::NAN }).collect()
}

/// Uniform periodic grid.
#[pyclass(name = "Grid", module = "qflow_py")]
#[derive(Clone, Copy)]
struct PyGrid(Grid1D);

#[pymethods]
impl PyGrid {
    #[new]
    fn new(x_min: f64, x_max: f64, n: usize) -> PyResult<Self> {
        Grid1D::new(x_min, x_max, n).map(Self).map_err(err)
    }

    #[getter]
    fn x_min(&self) -> f64 {
        self.0.x_min()
    }

    #[getter]
    fn x_max(&self) -> f64 {
        self.0.x_max()
    }

    #[getter]
    fn n(&self) -> usize {
        self.0.n()
    }

    #[getter]
    fn dx(&self) -> f64 {
        self.0.dx()
    }

    fn xs(&self) -> Vec<f64> {
        self.0.xs()
    }

    fn __repr__(&self) -> String {
        format!("Grid(x_min={}, x_max={}, n={})", self.0.x_min(), self.0.x_max(), self.0.n())
    }
}

#[pyclass(name = "Potential", module = "qflow_py")]
#[derive(Clone, Copy)]
struct PyPotential(schrodinger::Potential);

fn edge(edge_width: Option<f64>) -> EdgeProfile {
    match edge_width {
        Some(width) => EdgeProfile::Tanh { width },
        None => EdgeProfile::LinearRamp,
    }
}

#[pymethods]
impl PyPotential {
    #[staticmethod]
    fn free() -> Self {
        Self(schrodinger::Potential::Free)
    }

    #[staticmethod]
    #[pyo3(signature = (omega, center = 0.0))]
    fn harmonic(omega: f64, center: f64) -> Self {
        Self(schrodinger::Potential::Harmonic { omega, center })
    }

    /// Linear edge ramp over two grid spacings, or tanh edges of `edge_width`.
    #[staticmethod]
    #[pyo3(signature = (height, left, right, edge_width = None))]
    fn square_barrier(height: f64, left: f64, right: f64, edge_width: Option<f64>) -> Self {
        Self(schrodinger::Potential::SquareBarrier { height, left, right, edge: edge(edge_width) })
    }

    #[staticmethod]
    #[pyo3(signature = (depth, left, right, edge_width = None))]
    fn square_well(depth: f64, left: f64, right: f64, edge_width: Option<f64>) -> Self {
        Self(schrodinger::Potential::SquareWell { depth, left, right, edge: edge(edge_width) })
    }

    #[staticmethod]
    fn two_slit(separation: f64, slit_width: f64, k_forward: f64) -> Self {
        Self(schrodinger::Potential::TwoGaussianSlit { separation, slit_width, k_forward })
    }

    #[pyo3(signature = (grid, mass = 1.0))]
    fn sample(&self, grid: &PyGrid, mass: f64) -> Vec<f64> {
        self.0.sample(&grid.0, mass)
    }

    fn __repr__(&self) -> String {
        format!("{:?}", self.0)
    }
}

#[pyclass(name = "WaveFunction", module = "qflow_py")]
#[derive(Clone)]
struct PyWaveFunction(qflow::WaveFunction);

impl PyWaveFunction {
    fn build(spec: InitialState, grid: &PyGrid, hbar: f64, mass: f64) -> PyResult<Self> {
        schrodinger::initial_state(&spec, grid.0, hbar, mass).map(Self).map_err(err)
    }
}

#[pymethods]
impl PyWaveFunction {
    /// Wraps explicit complex amplitudes without normalizing them.
    #[new]
    #[pyo3(signature = (grid, amplitudes, hbar = 1.0, mass = 1.0))]
    fn new(grid: &PyGrid, amplitudes: Vec<Complex64>, hbar: f64, mass: f64) -> PyResult<Self> {
        qflow::WaveFunction::new(grid.0, amplitudes, hbar, mass).map(Self).map_err(err)
    }

    #[staticmethod]
    #[pyo3(signature = (grid, x0, sigma, k0 = 0.0, hbar = 1.0, mass = 1.0))]
    fn gaussian(grid: &PyGrid, x0: f64, sigma: f64, k0: f64, hbar: f64, mass: f64) -> PyResult<Self> {
        Self::build(InitialState::Gaussian { x0, sigma, k0 }, grid, hbar, mass)
    }

    #[staticmethod]
    #[pyo3(signature = (grid, center, separation, sigma, k0 = 0.0, hbar = 1.0, mass = 1.0))]
    fn two_gaussian(
        grid: &PyGrid,
        center: f64,
        separation: f64,
        sigma: f64,
        k0: f64,
        hbar: f64,
        mass: f64,
    ) -> PyResult<Self> {
        Self::build(InitialState::TwoGaussian { center, separation, sigma, k0 }, grid, hbar, mass)
    }

    #[staticmethod]
    #[pyo3(signature = (grid, k0, hbar = 1.0, mass = 1.0))]
    fn plane_wave(grid: &PyGrid, k0: f64, hbar: f64, mass: f64) -> PyResult<Self> {
        Self::build(InitialState::PlaneWave { k0 }, grid, hbar, mass)
    }

    #[staticmethod]
    #[pyo3(signature = (grid, omega, center = 0.0, hbar = 1.0, mass = 1.0))]
    fn harmonic_ground(grid: &PyGrid, omega: f64, center: f64, hbar: f64, mass: f64) -> PyResult<Self> {
        Self::build(InitialState::HarmonicGround { omega, center }, grid, hbar, mass)
    }

    #[getter]
    fn grid(&self) -> PyGrid {
        PyGrid(*self.0.grid())
    }

    #[getter]
    fn hbar(&self) -> f64 {
        self.0.hbar()
    }

    #[getter]
    fn mass(&self) -> f64 {
        self.0.mass()
    }

    fn amplitudes(&self) -> Vec<Complex64> {
        self.0.amplitudes().to_vec()
    }

    fn density(&self) -> Vec<f64> {
        self.0.density()
    }

    fn norm_sqr(&self) -> f64 {
        self.0.norm_sqr()
    }

    fn mean_position(&self) -> f64 {
        self.0.mean_position()
    }

    fn mean_momentum(&self) -> f64 {
        self.0.mean_momentum()
    }

    fn position_width(&self) -> f64 {
        self.0.position_width()
    }

    /// Multiplies by `exp(i k x)`.
    fn boost(&self, k: f64) -> Self {
        Self(self.0.boost(k))
    }

    fn total_energy(&self, potential: &PyPotential) -> f64 {
        schrodinger::total_energy(&self.0, &potential.0)
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }
}

/// Stored snapshots of an evolution.
#[pyclass(name = "Series", module = "qflow_py")]
struct PySeries(EvolutionSeries);

#[pymethods]
impl PySeries {
    #[getter]
    fn times(&self) -> Vec<f64> {
        self.0.times.clone()
    }

    #[getter]
    fn dt(&self) -> f64 {
        self.0.dt
    }

    fn state(&self, k: usize) -> PyResult<PyWaveFunction> {
        self.0
            .states
            .get(k)
            .cloned()
            .map(PyWaveFunction)
            .ok_or_else(|| PyIndexError::new_err(format!("state {k} out of range 0..{}", self.0.len())))
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }
}

/// Split-operator evolution to `t_final`, keeping every `save_every`-th step.
#[pyfunction]
#[pyo3(signature = (psi, potential, t_final, dt, save_every = 1))]
fn evolve(psi: &PyWaveFunction, potential: &PyPotential, t_final: f64, dt: f64, save_every: usize) -> PyResult<PySeries> {
    schrodinger::evolve_sampled(&psi.0, &potential.0, t_final, dt, save_every).map(PySeries).map_err(err)
}

/// Returns `(R, S)` with `S` unwrapped from the density maximum.
#[pyfunction]
#[pyo3(signature = (psi, eta = 1e-8, node_pad = 2, fd_order = 8))]
fn polar_decompose(psi: &PyWaveFunction, eta: f64, node_pad: usize, fd_order: u8) -> PyResult<(Vec<f64>, Vec<f64>)> {
    let pf = polar::polar_decompose(&psi.0, &options(eta, node_pad, fd_order)?);
    Ok((pf.amplitude().to_vec(), pf.action().to_vec()))
}

/// `grad S` on the grid, NaN inside node regions.
#[pyfunction]
#[pyo3(signature = (psi, eta = 1e-8, node_pad = 2, fd_order = 8))]
fn bohm_momentum(psi: &PyWaveFunction, eta: f64, node_pad: usize, fd_order: u8) -> PyResult<Vec<f64>> {
    Ok(masked(polar::bohm_momentum(&polar::polar_decompose(&psi.0, &options(eta, node_pad, fd_order)?))))
}

#[pyfunction]
#[pyo3(signature = (psi, eta = 1e-8, node_pad = 2, fd_order = 8))]
fn quantum_potential(psi: &PyWaveFunction, eta: f64, node_pad: usize, fd_order: u8) -> PyResult<Vec<f64>> {
    Ok(masked(polar::quantum_potential(&polar::polar_decompose(&psi.0, &options(eta, node_pad, fd_order)?))))
}

#[pyfunction]
#[pyo3(signature = (psi, eta = 1e-8, node_pad = 2, fd_order = 8))]
fn osmotic_momentum(psi: &PyWaveFunction, eta: f64, node_pad: usize, fd_order: u8) -> PyResult<Vec<f64>> {
    Ok(masked(polar::osmotic_momentum(&polar::polar_decompose(&psi.0, &options(eta, node_pad, fd_order)?))))
}

/// Real and imaginary parts of `-i hbar psi'/psi`, NaN inside node regions.
#[pyfunction]
#[pyo3(signature = (psi, eta = 1e-8, node_pad = 2, fd_order = 8))]
fn weak_momentum_profile(
    psi: &PyWaveFunction,
    eta: f64,
    node_pad: usize,
    fd_order: u8,
) -> PyResult<(Vec<f64>, Vec<f64>)> {
    let p = core_weak_profile(&psi.0, &options(eta, node_pad, fd_order)?);
    Ok((masked(p.real), masked(p.imag)))
}

/// `(momenta, rows)` of the Wigner function, one row per grid point.
#[pyfunction]
fn wigner(psi: &PyWaveFunction) -> (Vec<f64>, Vec<Vec<f64>>) {
    let w = wigner_transform(&psi.0);
    let rows = (0..psi.0.len()).map(|j| w.row(j).to_vec()).collect();
    (w.momenta().to_vec(), rows)
}

/// Five-way conditional momentum comparison as a dict.
#[pyfunction]
#[pyo3(signature = (psi, tolerance = 1e-5, eta = 1e-8, node_pad = 2, fd_order = 8))]
fn equivalence_report<'py>(
    py: Python<'py>,
    psi: &PyWaveFunction,
    tolerance: f64,
    eta: f64,
    node_pad: usize,
    fd_order: u8,
) -> PyResult<Bound<'py, PyDict>> {
    let r = core_equivalence(&psi.0, &options(eta, node_pad, fd_order)?, tolerance).map_err(err)?;
    let d = PyDict::new_bound(py);
    d.set_item("routes", r.routes)?;
    d.set_item("deviations", r.deviations)?;
    d.set_item("max_deviation", r.max_deviation)?;
    d.set_item("worst_pair", r.worst_pair)?;
    d.set_item("worst_x", r.worst_x)?;
    d.set_item("points", r.points)?;
    d.set_item("tolerance", r.tolerance)?;
    d.set_item("passed", r.passed)?;
    Ok(d)
}

/// Seeds at the quantiles of `|psi|^2`.
#[pyfunction]
fn seed_ensemble(psi: &PyWaveFunction, count: usize) -> PyResult<Vec<f64>> {
    let g = *psi.0.grid();
    core_seed_ensemble(&FieldOnGrid::new(g, psi.0.density(), vec![true; g.n()]), count).map_err(err)
}

fn ensemble_positions(
    result: std::result::Result<qflow::trajectories::TrajectoryEnsemble, qflow::trajectories::SeedFailure>,
) -> PyResult<Vec<Vec<f64>>> {
    result.map(|e| e.positions).map_err(|f| PyRuntimeError::new_err(f.to_string()))
}

/// Positions of each seed at every series time, integrated through `grad S / m`.
#[pyfunction]
#[pyo3(signature = (series, seeds, eta = 1e-8, node_pad = 2, fd_order = 8))]
fn bohm_trajectories(
    series: &PySeries,
    seeds: Vec<f64>,
    eta: f64,
    node_pad: usize,
    fd_order: u8,
) -> PyResult<Vec<Vec<f64>>> {
    let field = VelocityField::bohm(&series.0, &options(eta, node_pad, fd_order)?);
    ensemble_positions(integrate_ensemble(&field, &seeds, "python"))
}

/// As [`bohm_trajectories`] through the real part of the weak momentum.
#[pyfunction]
#[pyo3(signature = (series, seeds, eta = 1e-8, node_pad = 2, fd_order = 8))]
fn weak_trajectories(
    series: &PySeries,
    seeds: Vec<f64>,
    eta: f64,
    node_pad: usize,
    fd_order: u8,
) -> PyResult<Vec<Vec<f64>>> {
    ensemble_positions(weak_flow_lines(&series.0, &seeds, &options(eta, node_pad, fd_order)?))
}

#[pyfunction]
#[pyo3(signature = (x_end, x_start, t, mass = 1.0, hbar = 1.0))]
fn free_propagator(x_end: f64, x_start: f64, t: f64, mass: f64, hbar: f64) -> Complex64 {
    core_free_propagator(x_end, x_start, t, mass, hbar)
}

/// Exhaustive lattice path sum over `slices` time slices of length `eps`.
#[pyfunction]
#[pyo3(signature = (x_start, x_end, grid, slices, eps, mass = 1.0, hbar = 1.0))]
fn lattice_propagator(
    x_start: f64,
    x_end: f64,
    grid: &PyGrid,
    slices: usize,
    eps: f64,
    mass: f64,
    hbar: f64,
) -> PyResult<Complex64> {
    let lattice = PathLattice::new(grid.0, slices, eps, mass, hbar).map_err(err)?;
    core_lattice_propagator(x_start, x_end, &lattice, SumMode::Exhaustive).map(|e| e.value()).map_err(err)
}

/// Exponent of `mean |p_X| ~ eps^(-exponent)` over the given slice lengths.
#[pyfunction]
#[pyo3(signature = (eps, samples = 20000, seed = 0, mass = 1.0, hbar = 1.0))]
fn path_roughness(eps: Vec<f64>, samples: usize, seed: u64, mass: f64, hbar: f64) -> PyResult<f64> {
    roughness_exponent(&eps, mass, hbar, samples, seed).map(|r| r.exponent).map_err(err)
}

/// Runs a CLI subcommand; returns `{"passed", "checks", "files"}`.
#[pyfunction]
#[pyo3(signature = (subcommand, config, out, seed = None, tolerance_scale = 1.0))]
fn run<'py>(
    py: Python<'py>,
    subcommand: &str,
    config: PathBuf,
    out: PathBuf,
    seed: Option<u64>,
    tolerance_scale: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let cmd: Subcommand = subcommand.parse().map_err(PyValueError::new_err)?;
    let outcome = run_file(cmd, &config, &out, seed, tolerance_scale).map_err(|e| match e {
        RunError::Numerical(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    })?;
    let d = PyDict::new_bound(py);
    d.set_item("passed", outcome.passed())?;
    let checks: Vec<(String, f64, f64, bool)> =
        outcome.checks.iter().map(|c| (c.name.clone(), c.value, c.tolerance, c.passed)).collect();
    d.set_item("checks", checks)?;
    d.set_item("files", outcome.files.iter().map(|p| p.display().to_string()).collect::<Vec<_>>())?;
    Ok(d)
}

#[pymodule]
pub fn qflow_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGrid>()?;
    m.add_class::<PyPotential>()?;
    m.add_class::<PyWaveFunction>()?;
    m.add_class::<PySeries>()?;
    m.add_function(wrap_pyfunction!(evolve, m)?)?;
    m.add_function(wrap_pyfunction!(polar_decompose, m)?)?;
    m.add_function(wrap_pyfunction!(bohm_momentum, m)?)?;
    m.add_function(wrap_pyfunction!(quantum_potential, m)?)?;
    m.add_function(wrap_pyfunction!(osmotic_momentum, m)?)?;
    m.add_function(wrap_pyfunction!(weak_momentum_profile, m)?)?;
    m.add_function(wrap_pyfunction!(wigner, m)?)?;
    m.add_function(wrap_pyfunction!(equivalence_report, m)?)?;
    m.add_function(wrap_pyfunction!(seed_ensemble, m)?)?;
    m.add_function(wrap_pyfunction!(bohm_trajectories, m)?)?;
    m.add_function(wrap_pyfunction!(weak_trajectories, m)?)?;
    m.add_function(wrap_pyfunction!(free_propagator, m)?)?;
    m.add_function(wrap_pyfunction!(lattice_propagator, m)?)?;
    m.add_function(wrap_pyfunction!(path_roughness, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    Ok(())
}
