//! Scenario orchestration and file export behind the `qflow` subcommands.
//!
//! Each subcommand evolves the configured scenario, writes CSV tables and a
//! JSON report into the output directory and returns the checks it made.
//! Every file starts with a header block carrying the configuration hash,
//! units, grid and tolerances. On error every file written by the run is
//! removed again.

use std::fmt;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;
use serde_json::json;

use crate::config::{load_config, ConfigError, PathMode, ScenarioConfig, Tolerances};
use crate::error::QflowError;
use crate::feynman::{
    compose, free_propagator, lattice_propagator, lattice_propagator_row, roughness_exponent, sample_paths,
    spray_mean_momentum, write_paths_csv, write_propagator_csv, PathLattice, PropagatorComparison, PropagatorRow,
    SumMode,
};
use crate::grid::{make_grid, Grid1D, WaveFunction};
use crate::polar::{
    bohm_momentum, continuity_residual, energy_momentum_components, kinetic_trace_check, osmotic_momentum,
    polar_decompose, qhj_residual, quantum_potential, FieldOnGrid, ResidualReport,
};
use crate::schrodinger::{
    default_dt, edge_tail_mass, evolve_with_limit, initial_state, total_energy, EvolutionSeries, InitialState,
    Potential,
};
use crate::trajectories::{
    integrate_ensemble, kolmogorov_distance, non_crossing_check, seed_ensemble, SeedFailure, TrajectoryEnsemble,
    VelocityField,
};
use crate::weak::{weak_momentum_profile, weak_velocity_field};
use crate::wigner::{
    conditional_momentum_derivative_profile, conditional_momentum_integral_profile, equivalence_report,
    momentum_density_on_wigner_axis, topology_of, wigner_marginals, write_wigner_csv, Topology,
};

/// Largest `|phi(p_Nyquist)|^2 dp` accepted for any state.
pub const NYQUIST_LIMIT: f64 = 1e-20;
/// Band for the measured path roughness exponent.
pub const ROUGHNESS_BAND: (f64, f64) = (0.4, 0.6);
/// Ensembles at least this large get an equivariance check.
pub const EQUIVARIANCE_MIN_SEEDS: usize = 200;
pub const EQUIVARIANCE_TOLERANCE: f64 = 0.05;
pub const NORM_DRIFT_TOLERANCE: f64 = 1e-9;
pub const ENERGY_DRIFT_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subcommand {
    Evolve,
    Fields,
    Trajectories,
    Weak,
    Wigner,
    Paths,
    Verify,
}

impl Subcommand {
    pub const ALL: [Subcommand; 7] = [
        Subcommand::Evolve,
        Subcommand::Fields,
        Subcommand::Trajectories,
        Subcommand::Weak,
        Subcommand::Wigner,
        Subcommand::Paths,
        Subcommand::Verify,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Subcommand::Evolve => "evolve",
            Subcommand::Fields => "fields",
            Subcommand::Trajectories => "trajectories",
            Subcommand::Weak => "weak",
            Subcommand::Wigner => "wigner",
            Subcommand::Paths => "paths",
            Subcommand::Verify => "verify",
        }
    }
}

impl FromStr for Subcommand {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Subcommand::ALL.into_iter().find(|c| c.name() == s).ok_or_else(|| format!("unknown subcommand `{s}`"))
    }
}

/// Failure of a run, classified by exit status.
#[derive(Debug, Clone, PartialEq)]
pub enum RunError {
    Config(ConfigError),
    Numerical(String),
    Io(String),
}

impl RunError {
    /// 2 for configuration and output-directory problems, 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) | RunError::Io(_) => 2,
            RunError::Numerical(_) => 3,
        }
    }

    fn in_scenario(self, name: &str) -> Self {
        match self {
            RunError::Config(mut e) => {
                e.message = format!("scenario `{name}`: {}", e.message);
                RunError::Config(e)
            }
            RunError::Numerical(m) => RunError::Numerical(format!("scenario `{name}`: {m}")),
            RunError::Io(m) => RunError::Io(format!("scenario `{name}`: {m}")),
        }
    }
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunError::Config(e) => write!(f, "configuration error: {e}"),
            RunError::Numerical(m) => write!(f, "numerical failure: {m}"),
            RunError::Io(m) => write!(f, "output error: {m}"),
        }
    }
}

impl std::error::Error for RunError {}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> Self {
        RunError::Config(e)
    }
}

impl From<io::Error> for RunError {
    fn from(e: io::Error) -> Self {
        RunError::Io(e.to_string())
    }
}

impl From<SeedFailure> for RunError {
    fn from(e: SeedFailure) -> Self {
        RunError::Numerical(e.to_string())
    }
}

impl From<QflowError> for RunError {
    fn from(e: QflowError) -> Self {
        match e {
            QflowError::MaskedRegion { .. }
            | QflowError::Node { .. }
            | QflowError::LeftGrid { .. }
            | QflowError::TimeOutOfRange { .. }
            | QflowError::ZeroNorm
            | QflowError::MonteCarloVariance { .. }
            | QflowError::GridMismatch
            | QflowError::LengthMismatch { .. }
            | QflowError::NotInSeries => RunError::Numerical(e.to_string()),
            other => RunError::Config(other.into()),
        }
    }
}

pub type RunResult<T> = std::result::Result<T, RunError>;

/// One gated quantity of a report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    /// Upper bound, or the band `[lower, upper]` when `lower` is set.
    pub tolerance: f64,
    pub lower: Option<f64>,
    pub passed: bool,
}

impl Check {
    fn below(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self { name: name.into(), value, tolerance, lower: None, passed: value < tolerance }
    }

    fn band(name: impl Into<String>, value: f64, lower: f64, upper: f64) -> Self {
        Self { name: name.into(), value, tolerance: upper, lower: Some(lower), passed: value >= lower && value <= upper }
    }
}

/// Files and checks produced by a successful run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub subcommand: Subcommand,
    pub scenario: String,
    pub files: Vec<PathBuf>,
    pub checks: Vec<Check>,
}

impl RunOutcome {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }

    /// 0 when every check passed, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.passed() {
            0
        } else {
            1
        }
    }
}

/// Metadata written at the top of every output file.
#[derive(Debug, Clone, Serialize)]
pub struct Header {
    pub program: String,
    pub version: String,
    pub subcommand: String,
    pub scenario: String,
    pub config_sha256: String,
    pub units: Units,
    pub grid: GridHeader,
    pub potential: Potential,
    pub edge_ramp_width: Option<f64>,
    pub step_dt: Option<f64>,
    pub snapshot_dt: Option<f64>,
    pub tolerances: Tolerances,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Units {
    pub hbar: f64,
    pub mass: f64,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct GridHeader {
    pub x_min: f64,
    pub x_max: f64,
    pub n: usize,
    pub dx: f64,
}

impl Header {
    pub fn new(cfg: &ScenarioConfig, subcommand: Subcommand) -> Self {
        Self {
            program: "qflow".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            subcommand: subcommand.name().into(),
            scenario: cfg.name.clone(),
            config_sha256: cfg.hash(),
            units: Units { hbar: cfg.hbar, mass: cfg.mass },
            grid: GridHeader { x_min: cfg.grid.x_min(), x_max: cfg.grid.x_max(), n: cfg.grid.n(), dx: cfg.grid.dx() },
            potential: cfg.potential,
            edge_ramp_width: cfg.potential.ramp_width(&cfg.grid),
            step_dt: None,
            snapshot_dt: None,
            tolerances: cfg.tolerances,
            seed: cfg.seed,
        }
    }

    /// `# key: value` comment lines for CSV files.
    pub fn comment_lines(&self) -> Vec<String> {
        let t = &self.tolerances;
        let mut lines = vec![
            format!("# program: {} {}", self.program, self.version),
            format!("# subcommand: {}", self.subcommand),
            format!("# scenario: {}", self.scenario),
            format!("# config_sha256: {}", self.config_sha256),
            format!("# units: hbar = {}, mass = {}", self.units.hbar, self.units.mass),
            format!(
                "# grid: x_min = {}, x_max = {}, n = {}, dx = {}",
                self.grid.x_min, self.grid.x_max, self.grid.n, self.grid.dx
            ),
            format!("# potential: {}", serde_json::to_string(&self.potential).unwrap_or_default()),
        ];
        if let Some(w) = self.edge_ramp_width {
            lines.push(format!("# edge_ramp_width: {w}"));
        }
        if let (Some(step), Some(snap)) = (self.step_dt, self.snapshot_dt) {
            lines.push(format!("# time_step: dt = {step}, snapshot_dt = {snap}"));
        }
        lines.push(format!(
            "# tolerances: equivalence = {}, residual = {}, trace = {}, marginal = {}, flow = {}, propagator = {}, mirror = {}",
            t.equivalence, t.residual, t.trace, t.marginal, t.flow, t.propagator, t.mirror
        ));
        lines.push(format!("# seed: {}", self.seed));
        lines
    }
}

/// Files written by one run, removed again unless the run completes.
struct Outputs {
    dir: PathBuf,
    header: Header,
    written: Vec<PathBuf>,
    created_dir: bool,
}

impl Outputs {
    fn open(dir: &Path, header: Header) -> RunResult<Self> {
        let created_dir = !dir.exists();
        fs::create_dir_all(dir).map_err(|e| RunError::Io(format!("cannot create {}: {e}", dir.display())))?;
        Ok(Self { dir: dir.to_path_buf(), header, written: Vec::new(), created_dir })
    }

    fn create(&mut self, name: &str) -> RunResult<BufWriter<File>> {
        let path = self.dir.join(name);
        let file = File::create(&path).map_err(|e| RunError::Io(format!("cannot write {}: {e}", path.display())))?;
        self.written.push(path);
        Ok(BufWriter::new(file))
    }

    fn csv(&mut self, name: &str, body: impl FnOnce(&mut BufWriter<File>) -> io::Result<()>) -> RunResult<()> {
        let mut w = self.create(name)?;
        for line in self.header.comment_lines() {
            writeln!(w, "{line}")?;
        }
        body(&mut w)?;
        w.flush()?;
        Ok(())
    }

    fn json(&mut self, name: &str, report: serde_json::Value, checks: &[Check]) -> RunResult<()> {
        let doc = json!({
            "header": &self.header,
            "passed": checks.iter().all(|c| c.passed),
            "checks": checks,
            "report": report,
        });
        let mut w = self.create(name)?;
        serde_json::to_writer_pretty(&mut w, &doc).map_err(|e| RunError::Io(e.to_string()))?;
        writeln!(w)?;
        w.flush()?;
        Ok(())
    }

    fn discard(&self) {
        for p in &self.written {
            let _ = fs::remove_file(p);
        }
        if self.created_dir {
            let _ = fs::remove_dir(&self.dir);
        }
    }
}

fn num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.15e}")
    } else {
        "nan".into()
    }
}

/// Evolved scenario shared by all subcommands.
pub struct Prepared {
    pub psi0: WaveFunction,
    pub series: EvolutionSeries,
    pub step_dt: f64,
    /// Series indices of the output slices.
    pub slices: Vec<usize>,
}

/// Time step from the configuration, or the largest step within the phase
/// bound that divides `t_final` into a multiple of `save_every` steps.
pub fn step_size(cfg: &ScenarioConfig, psi0: &WaveFunction) -> f64 {
    match cfg.dt {
        Some(dt) => dt,
        None => {
            let bound = default_dt(psi0, &cfg.potential, cfg.max_phase);
            let every = cfg.save_every as f64;
            let blocks = (cfg.t_final / (bound * every)).ceil().max(1.0);
            cfg.t_final / (blocks * every)
        }
    }
}

/// Evenly spaced indices into a series of `len` states, first and last included.
pub fn slice_indices(len: usize, count: usize) -> Vec<usize> {
    if len <= 1 || count <= 1 {
        return vec![0];
    }
    let count = count.min(len);
    let mut out: Vec<usize> =
        (0..count).map(|i| ((i as f64) * (len - 1) as f64 / (count - 1) as f64).round() as usize).collect();
    out.dedup();
    out
}

pub fn initial_wavefunction(cfg: &ScenarioConfig) -> RunResult<WaveFunction> {
    let psi0 = initial_state(&cfg.state, cfg.grid, cfg.hbar, cfg.mass)?;
    let nyq = psi0.nyquist_content();
    if nyq > NYQUIST_LIMIT {
        return Err(QflowError::NyquistContent(nyq).into());
    }
    Ok(psi0)
}

pub fn prepare(cfg: &ScenarioConfig) -> RunResult<Prepared> {
    let psi0 = initial_wavefunction(cfg)?;
    let step_dt = step_size(cfg, &psi0);
    let series = evolve_with_limit(&psi0, &cfg.potential, cfg.t_final, step_dt, cfg.save_every, cfg.max_phase)?;
    for (t, psi) in series.times.iter().zip(&series.states) {
        let norm = psi.norm_sqr();
        if !norm.is_finite() || (norm - 1.0).abs() > 1e-6 {
            return Err(RunError::Numerical(format!("evolution diverged at t = {t}: norm {norm}")));
        }
    }
    let slices = slice_indices(series.len(), cfg.output_slices);
    Ok(Prepared { psi0, series, step_dt, slices })
}

/// Loads `path`, applies `--seed` and `--tolerance-scale`, and runs `cmd`.
pub fn run_file(
    cmd: Subcommand,
    path: &Path,
    out_dir: &Path,
    seed: Option<u64>,
    tolerance_scale: f64,
) -> RunResult<RunOutcome> {
    let overrides: Vec<(&str, String)> = seed.map(|s| vec![("run.seed", s.to_string())]).unwrap_or_default();
    let cfg = load_config(path, &overrides)?.with_tolerance_scale(tolerance_scale)?;
    run_subcommand(cmd, &cfg, out_dir)
}

/// Runs one subcommand on a validated scenario, writing into `out_dir`.
pub fn run_subcommand(cmd: Subcommand, cfg: &ScenarioConfig, out_dir: &Path) -> RunResult<RunOutcome> {
    let mut out = Outputs::open(out_dir, Header::new(cfg, cmd))?;
    let result = match cmd {
        Subcommand::Paths => run_paths(cfg, &mut out),
        _ => prepare(cfg).and_then(|p| {
            out.header.step_dt = Some(p.step_dt);
            out.header.snapshot_dt = Some(p.series.dt);
            match cmd {
                Subcommand::Evolve => run_evolve(cfg, &p, &mut out),
                Subcommand::Fields => run_fields(cfg, &p, &mut out),
                Subcommand::Trajectories => run_trajectories(cfg, &p, &mut out),
                Subcommand::Weak => run_weak(cfg, &p, &mut out),
                Subcommand::Wigner => run_wigner(cfg, &p, &mut out),
                Subcommand::Verify => run_verify(cfg, &p, &mut out),
                Subcommand::Paths => unreachable!(),
            }
        }),
    };
    match result {
        Ok(checks) => Ok(RunOutcome { subcommand: cmd, scenario: cfg.name.clone(), files: out.written.clone(), checks }),
        Err(e) => {
            out.discard();
            Err(e.in_scenario(&cfg.name))
        }
    }
}

fn run_evolve(cfg: &ScenarioConfig, p: &Prepared, out: &mut Outputs) -> RunResult<Vec<Check>> {
    let s = &p.series;
    out.csv("states.csv", |w| {
        writeln!(w, "t,x,re,im")?;
        for &k in &p.slices {
            for (i, a) in s.states[k].amplitudes().iter().enumerate() {
                writeln!(w, "{},{},{},{}", num(s.times[k]), num(cfg.grid.x(i)), num(a.re), num(a.im))?;
            }
        }
        Ok(())
    })?;
    let e0 = total_energy(&p.psi0, &cfg.potential);
    let (mut norm_drift, mut energy_drift, mut nyquist): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for psi in &s.states {
        norm_drift = norm_drift.max((psi.norm_sqr() - 1.0).abs());
        energy_drift = energy_drift.max((total_energy(psi, &cfg.potential) - e0).abs() / e0.abs().max(f64::MIN_POSITIVE));
        nyquist = nyquist.max(psi.nyquist_content());
    }
    let last = s.states.last().unwrap();
    let checks = vec![
        Check::below("norm_drift", norm_drift, NORM_DRIFT_TOLERANCE),
        Check::below("energy_drift", energy_drift, ENERGY_DRIFT_TOLERANCE),
        Check::below("nyquist_content", nyquist, NYQUIST_LIMIT),
    ];
    let report = json!({
        "steps": (cfg.t_final / p.step_dt).round() as u64,
        "stored_states": s.len(),
        "slice_times": p.slices.iter().map(|k| s.times[*k]).collect::<Vec<_>>(),
        "energy_initial": e0,
        "energy_final": total_energy(last, &cfg.potential),
        "mean_position_final": last.mean_position(),
        "width_final": last.position_width(),
        "edge_tail_mass_final": edge_tail_mass(last),
    });
    out.json("evolve.json", report, &checks)?;
    Ok(checks)
}

fn run_fields(cfg: &ScenarioConfig, p: &Prepared, out: &mut Outputs) -> RunResult<Vec<Check>> {
    let s = &p.series;
    let opts = &cfg.fields;
    let mut slices = Vec::new();
    let mut worst_trace: f64 = 0.0;
    for &k in &p.slices {
        let psi = &s.states[k];
        let pf = polar_decompose(psi, opts);
        let grad_s = bohm_momentum(&pf);
        let q = quantum_potential(&pf);
        let osm = osmotic_momentum(&pf);
        let em = energy_momentum_components(psi, s, opts)?;
        out.csv(&format!("fields_{k:05}.csv"), |w| {
            writeln!(w, "x,R,S,grad_s,Q,osmotic,T00,T0j,masked")?;
            for i in 0..cfg.grid.n() {
                writeln!(
                    w,
                    "{},{},{},{},{},{},{},{},{}",
                    num(cfg.grid.x(i)),
                    num(pf.amplitude()[i]),
                    num(pf.action()[i]),
                    num(grad_s.values[i]),
                    num(q.values[i]),
                    num(osm.values[i]),
                    num(em.t00.values[i]),
                    num(em.t0j.values[i]),
                    !pf.derivative_valid()[i]
                )?;
            }
            Ok(())
        })?;
        let tr = kinetic_trace_check(psi, &cfg.potential, opts);
        worst_trace = worst_trace.max(tr.relative_error);
        slices.push(json!({
            "index": k,
            "t": s.times[k],
            "bohm_integral": tr.bohm_integral,
            "osmotic_integral": tr.osmotic_integral,
            "potential_integral": tr.potential_integral,
            "trace_total": tr.trace_total,
            "total_energy": tr.total_energy,
            "relative_error": tr.relative_error,
        }));
    }
    let (cont, qhj) = stepwise_residuals(cfg, &p.psi0, p.step_dt)?;
    let checks = vec![
        Check::below("continuity_residual", cont.linf, cfg.tolerances.residual),
        Check::below("qhj_residual", qhj.linf, cfg.tolerances.residual),
        Check::below("trace_relative_error", worst_trace, cfg.tolerances.trace),
    ];
    let report = json!({ "continuity": cont, "qhj": qhj, "trace": slices });
    out.json("fields.json", report, &checks)?;
    Ok(checks)
}

/// States re-evolved per chunk when residuals are taken on every step.
const RESIDUAL_CHUNK: usize = 256;

/// Continuity and quantum Hamilton-Jacobi residuals with time differences
/// over single steps, re-evolving the run in overlapping chunks so the
/// stored snapshot spacing does not enter.
pub fn stepwise_residuals(
    cfg: &ScenarioConfig,
    psi0: &WaveFunction,
    step_dt: f64,
) -> RunResult<(ResidualReport, ResidualReport)> {
    let steps = (cfg.t_final / step_dt).round() as usize;
    if steps < 2 {
        return Err(QflowError::TooFewStates { got: steps + 1, need: 3 }.into());
    }
    let (mut cont, mut qhj) = (ResidualReport::empty(), ResidualReport::empty());
    let mut start = psi0.clone();
    let mut first = 0;
    while first + 1 < steps {
        let len = RESIDUAL_CHUNK.min(steps - first);
        let mut chunk = evolve_with_limit(&start, &cfg.potential, len as f64 * step_dt, step_dt, 1, cfg.max_phase)?;
        for t in chunk.times.iter_mut() {
            *t += first as f64 * step_dt;
        }
        cont.merge(&continuity_residual(&chunk, &cfg.fields)?);
        qhj.merge(&qhj_residual(&chunk, &cfg.potential, &cfg.fields)?);
        start = chunk.states.swap_remove(len - 1);
        first += len - 1;
    }
    Ok((cont, qhj))
}

/// Seeds from the configuration list, or quantiles of the initial density.
pub fn seeds_for(cfg: &ScenarioConfig, psi0: &WaveFunction) -> RunResult<(Vec<f64>, &'static str)> {
    if let Some(list) = &cfg.seed_positions {
        for (i, x) in list.iter().enumerate() {
            if !cfg.grid.contains(*x) {
                return Err(RunError::Config(ConfigError {
                    key: Some("trajectories.positions".into()),
                    line: None,
                    message: format!("seed {i} at x0 = {x} lies outside the grid"),
                }));
            }
        }
        return Ok((list.clone(), "configured positions"));
    }
    let rho = FieldOnGrid::new(cfg.grid, psi0.density(), vec![true; cfg.grid.n()]);
    Ok((seed_ensemble(&rho, cfg.seeds)?, "quantiles of the initial density"))
}

/// Mirror centre of a symmetric scenario, if any.
fn mirror_center(cfg: &ScenarioConfig) -> Option<f64> {
    let symmetric_potential = matches!(cfg.potential, Potential::Free | Potential::TwoGaussianSlit { .. });
    match cfg.state {
        InitialState::TwoGaussian { center, k0, .. } if k0 == 0.0 && symmetric_potential => Some(center),
        _ => None,
    }
}

/// Largest `|x_i + x_{N-1-i} - 2c|` and the deepest crossing of the axis.
pub fn mirror_deviation(ens: &TrajectoryEnsemble, center: f64) -> (f64, f64) {
    let n = ens.len();
    let (mut dev, mut overshoot): (f64, f64) = (0.0, 0.0);
    for i in 0..n {
        let (a, b) = (&ens.positions[i], &ens.positions[n - 1 - i]);
        let side = (ens.seeds[i] - center).signum();
        for (xa, xb) in a.iter().zip(b) {
            dev = dev.max((xa + xb - 2.0 * center).abs());
            overshoot = overshoot.max(-(xa - center) * side);
        }
    }
    (dev, overshoot)
}

fn equivariance(ens: &TrajectoryEnsemble, series: &EvolutionSeries, slices: &[usize]) -> Vec<(f64, f64)> {
    slices
        .iter()
        .map(|&k| {
            let rho = FieldOnGrid::new(*series.grid(), series.states[k].density(), vec![true; series.grid().n()]);
            (series.times[k], kolmogorov_distance(&ens.at_step(k), &rho))
        })
        .collect()
}

fn write_ensemble(out: &mut Outputs, name: &str, ens: &TrajectoryEnsemble) -> RunResult<()> {
    out.csv(name, |w| ens.write_csv(w))
}

fn run_trajectories(cfg: &ScenarioConfig, p: &Prepared, out: &mut Outputs) -> RunResult<Vec<Check>> {
    let (seeds, how) = seeds_for(cfg, &p.psi0)?;
    let field = VelocityField::bohm(&p.series, &cfg.fields);
    let ens = integrate_ensemble(&field, &seeds, how)?;
    write_ensemble(out, "trajectories.csv", &ens)?;
    let crossing = non_crossing_check(&ens)?;
    let mut checks = vec![Check::below("crossings", crossing.crossings as f64, 0.5)];
    let ks = equivariance(&ens, &p.series, &p.slices);
    if seeds.len() >= EQUIVARIANCE_MIN_SEEDS {
        let worst = ks.iter().map(|(_, d)| *d).fold(0.0, f64::max);
        checks.push(Check::below("kolmogorov_distance", worst, EQUIVARIANCE_TOLERANCE));
    }
    let mut mirror = serde_json::Value::Null;
    if let (Some(c), None) = (mirror_center(cfg), &cfg.seed_positions) {
        let (dev, overshoot) = mirror_deviation(&ens, c);
        checks.push(Check::below("mirror_deviation", dev, cfg.tolerances.mirror));
        checks.push(Check::below("axis_overshoot", overshoot, cfg.grid.dx()));
        mirror = json!({ "center": c, "deviation": dev, "axis_overshoot": overshoot });
    }
    let report = json!({
        "seeding": how,
        "seeds": seeds,
        "non_crossing": crossing,
        "kolmogorov_distance": ks.iter().map(|(t, d)| json!({"t": t, "distance": d})).collect::<Vec<_>>(),
        "mirror": mirror,
    });
    out.json("trajectories.json", report, &checks)?;
    Ok(checks)
}

fn run_weak(cfg: &ScenarioConfig, p: &Prepared, out: &mut Outputs) -> RunResult<Vec<Check>> {
    let s = &p.series;
    let (mut re_dev, mut im_dev): (f64, f64) = (0.0, 0.0);
    for &k in &p.slices {
        let profile = weak_momentum_profile(&s.states[k], &cfg.fields);
        let pf = polar_decompose(&s.states[k], &cfg.fields);
        re_dev = re_dev.max(profile.real.max_abs_diff(&bohm_momentum(&pf)));
        im_dev = im_dev.max(profile.imag.map(|_, v| -v).max_abs_diff(&osmotic_momentum(&pf)));
        out.csv(&format!("weak_{k:05}.csv"), |w| {
            writeln!(w, "# t: {}", s.times[k])?;
            profile.write_csv(w)
        })?;
    }
    let (seeds, how) = seeds_for(cfg, &p.psi0)?;
    let weak = integrate_ensemble(&weak_velocity_field(s, &cfg.fields), &seeds, how)?;
    let bohm = integrate_ensemble(&VelocityField::bohm(s, &cfg.fields), &seeds, how)?;
    write_ensemble(out, "weak_flow.csv", &weak)?;
    let distance = weak.max_distance(&bohm);
    let checks = vec![
        Check::below("re_weak_minus_grad_s", re_dev, cfg.tolerances.flow),
        Check::below("im_weak_plus_osmotic", im_dev, cfg.tolerances.flow),
        Check::below("flow_line_distance", distance, cfg.tolerances.flow),
    ];
    let report = json!({
        "overlap_floor": cfg.overlap_floor,
        "slice_times": p.slices.iter().map(|k| s.times[*k]).collect::<Vec<_>>(),
        "re_weak_minus_grad_s": re_dev,
        "im_weak_plus_osmotic": im_dev,
        "flow_line_distance": distance,
        "seeds": seeds.len(),
    });
    out.json("weak.json", report, &checks)?;
    Ok(checks)
}

fn run_wigner(cfg: &ScenarioConfig, p: &Prepared, out: &mut Outputs) -> RunResult<Vec<Check>> {
    let s = &p.series;
    let mut per_slice = Vec::new();
    let mut worst: f64 = 0.0;
    let (first, last) = (p.slices[0], *p.slices.last().unwrap());
    for &k in &p.slices {
        let psi = &s.states[k];
        if k == first || k == last {
            out.csv(&format!("wigner_{k:05}.csv"), |w| {
                writeln!(w, "# t: {}", s.times[k])?;
                write_wigner_csv(psi, w, cfg.wigner_stride)
            })?;
        }
        let integral = conditional_momentum_integral_profile(psi, &cfg.fields)?;
        let split = conditional_momentum_derivative_profile(psi, &cfg.fields);
        let grad_s = bohm_momentum(&polar_decompose(psi, &cfg.fields));
        out.csv(&format!("conditional_{k:05}.csv"), |w| {
            writeln!(w, "# t: {}", s.times[k])?;
            writeln!(w, "x,pair_integral,point_split,grad_s,masked")?;
            for i in 0..cfg.grid.n() {
                writeln!(
                    w,
                    "{},{},{},{},{}",
                    num(cfg.grid.x(i)),
                    num(integral.values[i]),
                    num(split.values[i]),
                    num(grad_s.values[i]),
                    !grad_s.valid[i]
                )?;
            }
            Ok(())
        })?;
        let m = wigner_marginals(psi);
        let rho = psi.density();
        let reference = momentum_density_on_wigner_axis(psi);
        let pos_err = m.position.iter().zip(&rho).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let mom_err = m.momentum.iter().zip(&reference).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        worst = worst.max(pos_err).max(mom_err);
        per_slice.push(json!({
            "index": k,
            "t": s.times[k],
            "topology": match topology_of(psi) { Topology::Line => "line", Topology::Ring => "ring" },
            "position_marginal_error": pos_err,
            "momentum_marginal_error": mom_err,
            "imaginary_residue": m.imaginary_residue,
            "pair_integral_vs_grad_s": integral.max_abs_diff(&grad_s),
            "point_split_vs_grad_s": split.max_abs_diff(&grad_s),
        }));
    }
    let checks = vec![Check::below("marginal_error", worst, cfg.tolerances.marginal)];
    out.json("wigner.json", json!({ "wigner_stride": cfg.wigner_stride, "slices": per_slice }), &checks)?;
    Ok(checks)
}

fn run_verify(cfg: &ScenarioConfig, p: &Prepared, out: &mut Outputs) -> RunResult<Vec<Check>> {
    let s = &p.series;
    let mut reports = Vec::new();
    let mut worst: f64 = 0.0;
    let mut nyquist: f64 = 0.0;
    for &k in &p.slices {
        let psi = &s.states[k];
        nyquist = nyquist.max(psi.nyquist_content());
        let r = equivalence_report(psi, &cfg.fields, cfg.tolerances.equivalence)?;
        worst = worst.max(r.max_deviation);
        reports.push(json!({ "index": k, "t": s.times[k], "equivalence": r }));
    }
    let checks = vec![
        Check::below("five_way_max_deviation", worst, cfg.tolerances.equivalence),
        Check::below("nyquist_content", nyquist, NYQUIST_LIMIT),
    ];
    out.json("verify.json", json!({ "max_deviation": worst, "slices": reports }), &checks)?;
    Ok(checks)
}

fn run_paths(cfg: &ScenarioConfig, out: &mut Outputs) -> RunResult<Vec<Check>> {
    let ps = &cfg.paths;
    let (m, h) = (cfg.mass, cfg.hbar);
    let grid: Grid1D = make_grid(ps.x_min, ps.x_max, ps.n)?;
    let mode = match ps.mode {
        PathMode::Exhaustive => SumMode::Exhaustive,
        PathMode::MonteCarlo => SumMode::MonteCarlo { samples: ps.samples, seed: cfg.seed, tolerance: ps.mc_tolerance },
    };
    let mut rows = Vec::new();
    let mut final_cmp = None;
    for slices in 1..=ps.slices {
        let lattice = PathLattice::new(grid, slices, ps.eps, m, h)?;
        let est = lattice_propagator(ps.x_start, ps.x_end, &lattice, mode)?;
        let exact = free_propagator(ps.x_end, ps.x_start, lattice.total_time(), m, h);
        rows.push(PropagatorRow {
            slices,
            n: ps.n,
            eps: ps.eps,
            re: est.re,
            im: est.im,
            analytic_re: exact.re,
            analytic_im: exact.im,
        });
        final_cmp = Some((PropagatorComparison::new(est.value(), exact), est));
    }
    let (cmp, est) = final_cmp.expect("at least one slice");
    out.csv("propagator.csv", |w| write_propagator_csv(&rows, w))?;

    let full = PathLattice::new(grid, ps.slices, ps.eps, m, h)?;
    let half = PathLattice::new(grid, ps.slices, ps.eps / 2.0, m, h)?;
    let direct = lattice_propagator_row(ps.x_start, &full)[grid.nearest_index(ps.x_end)];
    let composed = compose(&grid, &lattice_propagator_row(ps.x_end, &half), &lattice_propagator_row(ps.x_start, &half));
    let composition = PropagatorComparison::new(composed, direct);

    let rough = roughness_exponent(&ps.roughness_eps, m, h, ps.roughness_samples, cfg.seed)?;
    out.csv("px_table.csv", |w| {
        writeln!(w, "eps,mean_abs_px,stderr")?;
        for i in 0..rough.eps.len() {
            writeln!(w, "{},{},{}", num(rough.eps[i]), num(rough.mean_abs_px[i]), num(rough.stderr[i]))?;
        }
        Ok(())
    })?;
    let paths = sample_paths(ps.x_start, ps.slices.max(2), ps.eps, m, h, ps.dump_count, cfg.seed)?;
    out.csv("paths.csv", |w| write_paths_csv(&paths, w))?;

    let psi0 = initial_wavefunction(cfg)?;
    let pf = polar_decompose(&psi0, &cfg.fields);
    let grad_s = bohm_momentum(&pf);
    let n = cfg.grid.n();
    let points: Vec<usize> = (0..16).map(|j| j * n / 16 + n / 32).filter(|i| grad_s.valid[*i]).collect();
    let mut spray = Vec::new();
    let mut spray_dev: f64 = 0.0;
    for &i in &points {
        let v = spray_mean_momentum(&psi0, cfg.grid.x(i), ps.eps, &cfg.fields)?;
        spray_dev = spray_dev.max((v - grad_s.values[i]).abs());
        spray.push((cfg.grid.x(i), v, grad_s.values[i]));
    }
    out.csv("spray.csv", |w| {
        writeln!(w, "x,spray_mean_momentum,grad_s")?;
        for (x, v, g) in &spray {
            writeln!(w, "{},{},{}", num(*x), num(*v), num(*g))?;
        }
        Ok(())
    })?;

    let tol = cfg.tolerances.propagator;
    let mut checks = vec![
        Check::below("propagator_modulus_error", cmp.modulus_error, tol),
        Check::below("propagator_phase_error", cmp.phase_error, tol),
        Check::below("composition_modulus_error", composition.modulus_error, tol),
        Check::below("composition_phase_error", composition.phase_error, tol),
        Check::band("roughness_exponent", rough.exponent, ROUGHNESS_BAND.0, ROUGHNESS_BAND.1),
    ];
    if !spray.is_empty() {
        checks.push(Check::below("spray_vs_grad_s", spray_dev, cfg.tolerances.equivalence));
    }
    let report = json!({
        "lattice": { "x_min": ps.x_min, "x_max": ps.x_max, "n": ps.n, "eps": ps.eps, "slices": ps.slices },
        "mode": ps.mode,
        "propagator": { "estimate": est, "comparison": cmp },
        "composition": {
            "composed": [composed.re, composed.im],
            "direct": [direct.re, direct.im],
            "comparison": composition,
        },
        "roughness": rough,
        "spray_max_deviation": spray_dev,
    });
    out.json("paths.json", report, &checks)?;
    Ok(checks)
}

/// Outcome of one scenario in a catalog verification.
#[derive(Debug, Clone, PartialEq)]
pub struct CatalogEntry {
    pub config: PathBuf,
    pub result: std::result::Result<RunOutcome, RunError>,
}

/// Runs `verify` on every `*.cfg` file in `dir` in name order, each into
/// its own subdirectory of `out_dir`, and writes a summary report.
pub fn verify_catalog(
    dir: &Path,
    out_dir: &Path,
    seed: Option<u64>,
    tolerance_scale: f64,
) -> RunResult<(Vec<CatalogEntry>, PathBuf)> {
    let mut configs: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| RunError::Io(format!("cannot read {}: {e}", dir.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "cfg"))
        .collect();
    configs.sort();
    if configs.is_empty() {
        return Err(RunError::Config(ConfigError {
            key: None,
            line: None,
            message: format!("no .cfg files in {}", dir.display()),
        }));
    }
    fs::create_dir_all(out_dir)?;
    let mut entries = Vec::new();
    for path in configs {
        let stem = path.file_stem().unwrap().to_string_lossy().to_string();
        let result = run_file(Subcommand::Verify, &path, &out_dir.join(&stem), seed, tolerance_scale);
        entries.push(CatalogEntry { config: path, result });
    }
    let summary: Vec<serde_json::Value> = entries
        .iter()
        .map(|e| match &e.result {
            Ok(o) => json!({
                "config": e.config.display().to_string(),
                "scenario": o.scenario,
                "passed": o.passed(),
                "checks": o.checks,
            }),
            Err(err) => json!({
                "config": e.config.display().to_string(),
                "passed": false,
                "error": err.to_string(),
                "exit_code": err.exit_code(),
            }),
        })
        .collect();
    let all = entries.iter().all(|e| e.result.as_ref().is_ok_and(|o| o.passed()));
    let path = out_dir.join("catalog_verify.json");
    let doc = json!({ "program": "qflow", "version": env!("CARGO_PKG_VERSION"), "passed": all, "scenarios": summary });
    let mut w = BufWriter::new(File::create(&path)?);
    serde_json::to_writer_pretty(&mut w, &doc).map_err(|e| RunError::Io(e.to_string()))?;
    writeln!(w)?;
    w.flush()?;
    Ok((entries, path))
}
