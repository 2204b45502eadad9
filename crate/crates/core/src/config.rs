//! Scenario configuration in a flat `section.key = value` text format.
//!
//! Grammar: one assignment per line, `#` starts a comment, blank lines are
//! ignored, keys are case-sensitive, values are numbers, words, or
//! comma-separated number lists. Every key must be known and every key that
//! is set must be used by the selected state and potential kinds.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::QflowError;
use crate::grid::{make_grid, Grid1D};
use crate::polar::FieldOptions;
use crate::schrodinger::{EdgeProfile, InitialState, Potential, DEFAULT_MAX_PHASE_PER_STEP};
use crate::stencil::DifferenceOrder;

/// Invalid or unreadable configuration, naming the offending key when known.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub key: Option<String>,
    pub line: Option<usize>,
    pub message: String,
}

impl ConfigError {
    fn key(key: &str, message: impl Into<String>) -> Self {
        Self { key: Some(key.to_string()), line: None, message: message.into() }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (&self.key, self.line) {
            (Some(k), Some(l)) => write!(f, "line {l}, key `{k}`: {}", self.message),
            (Some(k), None) => write!(f, "key `{k}`: {}", self.message),
            (None, Some(l)) => write!(f, "line {l}: {}", self.message),
            (None, None) => write!(f, "{}", self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

impl From<QflowError> for ConfigError {
    fn from(e: QflowError) -> Self {
        match &e {
            QflowError::InvalidParameter { name, .. } => {
                let key = match *name {
                    "hbar" | "units" => "units.hbar",
                    "mass" => "units.mass",
                    other => other,
                };
                ConfigError::key(key, e.to_string())
            }
            QflowError::GridSize(_) => ConfigError::key("grid.n", e.to_string()),
            QflowError::DegenerateInterval { .. } => ConfigError::key("grid.x_max", e.to_string()),
            QflowError::NonIntegerSteps { .. } => ConfigError::key("evolve.t_final", e.to_string()),
            QflowError::PacketTooWide { .. } => ConfigError::key("state.sigma", e.to_string()),
            QflowError::TooFewStates { .. } => ConfigError::key("evolve.t_final", e.to_string()),
            QflowError::NyquistContent(_) => ConfigError::key("grid.n", e.to_string()),
            QflowError::ExhaustiveTooLarge { .. } => ConfigError::key("paths.slices", e.to_string()),
            _ => ConfigError { key: None, line: None, message: e.to_string() },
        }
    }
}

type CResult<T> = std::result::Result<T, ConfigError>;

/// Every accepted key with its default, `None` when required or optional
/// without default.
const SCHEMA: &[(&str, Option<&str>)] = &[
    ("scenario.name", Some("unnamed")),
    ("units.hbar", Some("1")),
    ("units.mass", Some("1")),
    ("grid.x_min", None),
    ("grid.x_max", None),
    ("grid.n", None),
    ("state.kind", None),
    ("state.x0", None),
    ("state.sigma", None),
    ("state.k0", Some("0")),
    ("state.center", Some("0")),
    ("state.separation", None),
    ("state.omega", None),
    ("potential.kind", Some("free")),
    ("potential.omega", None),
    ("potential.center", Some("0")),
    ("potential.height", None),
    ("potential.depth", None),
    ("potential.left", None),
    ("potential.right", None),
    ("potential.edge", Some("linear")),
    ("potential.edge_width", None),
    ("potential.separation", None),
    ("potential.slit_width", None),
    ("potential.k_forward", None),
    ("evolve.dt", None),
    ("evolve.t_final", Some("1")),
    ("evolve.save_every", Some("1")),
    ("evolve.max_phase", None),
    ("fields.eta", Some("1e-8")),
    ("fields.node_pad", Some("2")),
    ("fields.fd_order", Some("8")),
    ("output.slices", Some("5")),
    ("output.wigner_stride", Some("4")),
    ("trajectories.seeds", Some("50")),
    ("trajectories.positions", None),
    ("weak.overlap_floor", Some("1e-10")),
    ("paths.slices", Some("2")),
    ("paths.n", Some("32768")),
    ("paths.x_min", Some("-20")),
    ("paths.x_max", Some("20")),
    ("paths.eps", Some("0.05")),
    ("paths.x_start", Some("0")),
    ("paths.x_end", Some("1")),
    ("paths.mode", Some("exhaustive")),
    ("paths.samples", Some("100000")),
    ("paths.mc_tolerance", Some("0.01")),
    ("paths.roughness_eps_min", Some("1e-4")),
    ("paths.roughness_eps_max", Some("1e-3")),
    ("paths.roughness_points", Some("5")),
    ("paths.roughness_samples", Some("20000")),
    ("paths.dump_count", Some("10")),
    ("tolerance.equivalence", Some("1e-5")),
    ("tolerance.residual", Some("1e-3")),
    ("tolerance.trace", Some("5e-3")),
    ("tolerance.marginal", Some("1e-6")),
    ("tolerance.flow", Some("1e-6")),
    ("tolerance.propagator", Some("1e-2")),
    ("tolerance.mirror", Some("1e-6")),
    ("run.seed", Some("0")),
];

/// Parsed `key = value` pairs with their source lines.
#[derive(Debug, Clone, Default)]
pub struct RawConfig {
    entries: BTreeMap<String, (String, usize)>,
}

impl RawConfig {
    pub fn parse(text: &str) -> CResult<Self> {
        let known: BTreeSet<&str> = SCHEMA.iter().map(|(k, _)| *k).collect();
        let mut entries = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| ConfigError {
                key: None,
                line: Some(line),
                message: format!("expected `key = value`, found `{content}`"),
            })?;
            let (key, value) = (key.trim(), value.trim());
            let err = |message: String| ConfigError { key: Some(key.to_string()), line: Some(line), message };
            if !known.contains(key) {
                return Err(err("unknown key".into()));
            }
            if value.is_empty() {
                return Err(err("missing value".into()));
            }
            if entries.insert(key.to_string(), (value.to_string(), line)).is_some() {
                return Err(err("duplicate key".into()));
            }
        }
        Ok(Self { entries })
    }

    pub fn set(&mut self, key: &str, value: &str) -> CResult<()> {
        if !SCHEMA.iter().any(|(k, _)| *k == key) {
            return Err(ConfigError::key(key, "unknown key"));
        }
        self.entries.insert(key.to_string(), (value.to_string(), 0));
        Ok(())
    }
}

/// Tracks which keys were consumed while building a [`ScenarioConfig`].
struct Reader<'a> {
    raw: &'a RawConfig,
    used: BTreeSet<String>,
}

impl<'a> Reader<'a> {
    fn text(&mut self, key: &str) -> Option<(String, Option<usize>)> {
        self.used.insert(key.to_string());
        if let Some((v, l)) = self.raw.entries.get(key) {
            return Some((v.clone(), (*l > 0).then_some(*l)));
        }
        SCHEMA.iter().find(|(k, _)| *k == key).and_then(|(_, d)| d.map(|d| (d.to_string(), None)))
    }

    fn err(key: &str, line: Option<usize>, message: String) -> ConfigError {
        ConfigError { key: Some(key.to_string()), line, message }
    }

    fn opt_f64(&mut self, key: &str) -> CResult<Option<f64>> {
        match self.text(key) {
            None => Ok(None),
            Some((v, line)) => {
                let x: f64 = v.parse().map_err(|_| Self::err(key, line, format!("`{v}` is not a number")))?;
                if !x.is_finite() {
                    return Err(Self::err(key, line, format!("`{v}` is not finite")));
                }
                Ok(Some(x))
            }
        }
    }

    fn f64(&mut self, key: &str) -> CResult<f64> {
        self.opt_f64(key)?.ok_or_else(|| ConfigError::key(key, "required key is missing"))
    }

    fn positive(&mut self, key: &str) -> CResult<f64> {
        let v = self.f64(key)?;
        if v > 0.0 {
            Ok(v)
        } else {
            Err(ConfigError::key(key, format!("{v} must be > 0")))
        }
    }

    fn usize(&mut self, key: &str) -> CResult<usize> {
        let (v, line) = self.text(key).ok_or_else(|| ConfigError::key(key, "required key is missing"))?;
        v.parse().map_err(|_| Self::err(key, line, format!("`{v}` is not a non-negative integer")))
    }

    fn word(&mut self, key: &str) -> CResult<String> {
        self.text(key).map(|(v, _)| v).ok_or_else(|| ConfigError::key(key, "required key is missing"))
    }

    fn list(&mut self, key: &str) -> CResult<Option<Vec<f64>>> {
        match self.text(key) {
            None => Ok(None),
            Some((v, line)) => v
                .split(',')
                .map(|s| s.trim().parse::<f64>().map_err(|_| Self::err(key, line, format!("`{s}` is not a number"))))
                .collect::<CResult<Vec<_>>>()
                .map(Some),
        }
    }
}

/// Tolerances applied by the verification reports.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tolerances {
    pub equivalence: f64,
    pub residual: f64,
    pub trace: f64,
    pub marginal: f64,
    pub flow: f64,
    pub propagator: f64,
    pub mirror: f64,
}

impl Tolerances {
    pub fn scaled(&self, s: f64) -> Self {
        Self {
            equivalence: self.equivalence * s,
            residual: self.residual * s,
            trace: self.trace * s,
            marginal: self.marginal * s,
            flow: self.flow * s,
            propagator: self.propagator * s,
            mirror: self.mirror * s,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PathMode {
    Exhaustive,
    MonteCarlo,
}

/// Parameters of the `paths` subcommand.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathSettings {
    pub slices: usize,
    pub n: usize,
    pub x_min: f64,
    pub x_max: f64,
    pub eps: f64,
    pub x_start: f64,
    pub x_end: f64,
    pub mode: PathMode,
    pub samples: usize,
    pub mc_tolerance: f64,
    pub roughness_eps: Vec<f64>,
    pub roughness_samples: usize,
    pub dump_count: usize,
}

/// Fully validated scenario with defaults applied.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioConfig {
    pub name: String,
    pub hbar: f64,
    pub mass: f64,
    pub grid: Grid1D,
    pub state: InitialState,
    pub potential: Potential,
    /// `None` selects the step from the phase-advance bound.
    pub dt: Option<f64>,
    pub t_final: f64,
    pub save_every: usize,
    pub max_phase: f64,
    pub fields: FieldOptions,
    pub output_slices: usize,
    pub wigner_stride: usize,
    pub seeds: usize,
    pub seed_positions: Option<Vec<f64>>,
    pub overlap_floor: f64,
    pub paths: PathSettings,
    pub tolerances: Tolerances,
    pub seed: u64,
    /// `key = value` lines of every effective setting, sorted by key.
    pub canonical: String,
}

impl ScenarioConfig {
    /// Multiplies every tolerance by `scale`, recording it in the canonical text.
    pub fn with_tolerance_scale(mut self, scale: f64) -> CResult<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(ConfigError::key("--tolerance-scale", format!("{scale} must be a positive number")));
        }
        if scale != 1.0 {
            self.tolerances = self.tolerances.scaled(scale);
            self.canonical.push_str(&format!("run.tolerance_scale = {scale}\n"));
        }
        Ok(self)
    }

    /// Hex SHA-256 of the canonical rendering.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

fn state_from(r: &mut Reader) -> CResult<InitialState> {
    let kind = r.word("state.kind")?;
    Ok(match kind.as_str() {
        "gaussian" => InitialState::Gaussian { x0: r.f64("state.x0")?, sigma: r.positive("state.sigma")?, k0: r.f64("state.k0")? },
        "two_gaussian" => InitialState::TwoGaussian {
            center: r.f64("state.center")?,
            separation: r.positive("state.separation")?,
            sigma: r.positive("state.sigma")?,
            k0: r.f64("state.k0")?,
        },
        "plane_wave" => InitialState::PlaneWave { k0: r.f64("state.k0")? },
        "harmonic_ground" => InitialState::HarmonicGround { omega: r.positive("state.omega")?, center: r.f64("state.center")? },
        other => {
            return Err(ConfigError::key(
                "state.kind",
                format!("`{other}` is not one of gaussian, two_gaussian, plane_wave, harmonic_ground"),
            ))
        }
    })
}

fn edge_from(r: &mut Reader) -> CResult<EdgeProfile> {
    match r.word("potential.edge")?.as_str() {
        "linear" => Ok(EdgeProfile::LinearRamp),
        "tanh" => Ok(EdgeProfile::Tanh { width: r.positive("potential.edge_width")? }),
        other => Err(ConfigError::key("potential.edge", format!("`{other}` is not one of linear, tanh"))),
    }
}

fn potential_from(r: &mut Reader) -> CResult<Potential> {
    let kind = r.word("potential.kind")?;
    Ok(match kind.as_str() {
        "free" => Potential::Free,
        "harmonic" => Potential::Harmonic { omega: r.positive("potential.omega")?, center: r.f64("potential.center")? },
        "square_barrier" => Potential::SquareBarrier {
            height: r.f64("potential.height")?,
            left: r.f64("potential.left")?,
            right: r.f64("potential.right")?,
            edge: edge_from(r)?,
        },
        "square_well" => Potential::SquareWell {
            depth: r.f64("potential.depth")?,
            left: r.f64("potential.left")?,
            right: r.f64("potential.right")?,
            edge: edge_from(r)?,
        },
        "two_slit" => Potential::TwoGaussianSlit {
            separation: r.positive("potential.separation")?,
            slit_width: r.positive("potential.slit_width")?,
            k_forward: r.positive("potential.k_forward")?,
        },
        other => {
            return Err(ConfigError::key(
                "potential.kind",
                format!("`{other}` is not one of free, harmonic, square_barrier, square_well, two_slit"),
            ))
        }
    })
}

fn paths_from(r: &mut Reader) -> CResult<PathSettings> {
    let mode = match r.word("paths.mode")?.as_str() {
        "exhaustive" => PathMode::Exhaustive,
        "monte_carlo" => PathMode::MonteCarlo,
        other => return Err(ConfigError::key("paths.mode", format!("`{other}` is not one of exhaustive, monte_carlo"))),
    };
    let slices = r.usize("paths.slices")?;
    if slices < 1 {
        return Err(ConfigError::key("paths.slices", "need at least one slice"));
    }
    let n = r.usize("paths.n")?;
    let (x_min, x_max) = (r.f64("paths.x_min")?, r.f64("paths.x_max")?);
    let lo = r.positive("paths.roughness_eps_min")?;
    let hi = r.positive("paths.roughness_eps_max")?;
    let points = r.usize("paths.roughness_points")?;
    if !(hi > lo) {
        return Err(ConfigError::key("paths.roughness_eps_max", format!("{hi} must exceed roughness_eps_min {lo}")));
    }
    if points < 2 {
        return Err(ConfigError::key("paths.roughness_points", "need at least 2"));
    }
    let roughness_eps = (0..points).map(|k| lo * (hi / lo).powf(k as f64 / (points - 1) as f64)).collect();
    let settings = PathSettings {
        slices,
        n,
        x_min,
        x_max,
        eps: r.positive("paths.eps")?,
        x_start: r.f64("paths.x_start")?,
        x_end: r.f64("paths.x_end")?,
        mode,
        samples: r.usize("paths.samples")?,
        mc_tolerance: r.positive("paths.mc_tolerance")?,
        roughness_eps,
        roughness_samples: r.usize("paths.roughness_samples")?,
        dump_count: r.usize("paths.dump_count")?,
    };
    make_grid(x_min, x_max, n).map_err(|e| match e {
        QflowError::GridSize(_) => ConfigError::key("paths.n", e.to_string()),
        _ => ConfigError::key("paths.x_max", e.to_string()),
    })?;
    Ok(settings)
}

/// Builds a validated scenario from parsed pairs.
pub fn build_config(raw: &RawConfig) -> CResult<ScenarioConfig> {
    let mut r = Reader { raw, used: BTreeSet::new() };
    let name = r.word("scenario.name")?;
    let hbar = r.positive("units.hbar")?;
    let mass = r.positive("units.mass")?;
    let n = r.usize("grid.n")?;
    if n < 16 || !n.is_power_of_two() {
        return Err(ConfigError::key("grid.n", format!("{n} must be a power of two and at least 16")));
    }
    let (x_min, x_max) = (r.f64("grid.x_min")?, r.f64("grid.x_max")?);
    if !(x_max > x_min) {
        return Err(ConfigError::key("grid.x_max", format!("{x_max} must exceed grid.x_min = {x_min}")));
    }
    let grid = make_grid(x_min, x_max, n)?;
    let state = state_from(&mut r)?;
    let potential = potential_from(&mut r)?;
    potential.validate(&grid)?;
    let dt = r.opt_f64("evolve.dt")?;
    if let Some(d) = dt {
        if !(d > 0.0) {
            return Err(ConfigError::key("evolve.dt", format!("{d} must be > 0")));
        }
    }
    let t_final = r.f64("evolve.t_final")?;
    if !(t_final > 0.0) {
        return Err(ConfigError::key("evolve.t_final", format!("{t_final} must be > 0")));
    }
    let save_every = r.usize("evolve.save_every")?;
    if save_every == 0 {
        return Err(ConfigError::key("evolve.save_every", "must be >= 1"));
    }
    let max_phase = r.opt_f64("evolve.max_phase")?.unwrap_or(DEFAULT_MAX_PHASE_PER_STEP);
    let eta = r.positive("fields.eta")?;
    if eta >= 1.0 {
        return Err(ConfigError::key("fields.eta", format!("{eta} must be < 1")));
    }
    let node_pad = r.usize("fields.node_pad")?;
    let order_raw = r.usize("fields.fd_order")?;
    let order = DifferenceOrder::new(u8::try_from(order_raw).unwrap_or(0))?;
    let output_slices = r.usize("output.slices")?;
    if output_slices < 1 {
        return Err(ConfigError::key("output.slices", "need at least 1"));
    }
    let wigner_stride = r.usize("output.wigner_stride")?.max(1);
    let seeds = r.usize("trajectories.seeds")?;
    if seeds < 2 {
        return Err(ConfigError::key("trajectories.seeds", format!("{seeds} must be at least 2")));
    }
    let seed_positions = r.list("trajectories.positions")?;
    let overlap_floor = r.positive("weak.overlap_floor")?;
    let paths = paths_from(&mut r)?;
    let tolerances = Tolerances {
        equivalence: r.positive("tolerance.equivalence")?,
        residual: r.positive("tolerance.residual")?,
        trace: r.positive("tolerance.trace")?,
        marginal: r.positive("tolerance.marginal")?,
        flow: r.positive("tolerance.flow")?,
        propagator: r.positive("tolerance.propagator")?,
        mirror: r.positive("tolerance.mirror")?,
    };
    let seed_text = r.word("run.seed")?;
    let seed: u64 = seed_text.parse().map_err(|_| ConfigError::key("run.seed", format!("`{seed_text}` is not an unsigned integer")))?;

    for (key, (_, line)) in &raw.entries {
        if !r.used.contains(key) {
            return Err(ConfigError {
                key: Some(key.clone()),
                line: (*line > 0).then_some(*line),
                message: "key is not used by the selected state or potential kind".into(),
            });
        }
    }
    let canonical = r
        .used
        .iter()
        .filter_map(|k| {
            raw.entries
                .get(k)
                .map(|(v, _)| v.clone())
                .or_else(|| SCHEMA.iter().find(|(s, _)| s == k).and_then(|(_, d)| d.map(str::to_string)))
                .map(|v| format!("{k} = {v}\n"))
        })
        .collect();

    Ok(ScenarioConfig {
        name,
        hbar,
        mass,
        grid,
        state,
        potential,
        dt,
        t_final,
        save_every,
        max_phase,
        fields: FieldOptions { eta, node_pad, order },
        output_slices,
        wigner_stride,
        seeds,
        seed_positions,
        overlap_floor,
        paths,
        tolerances,
        seed,
        canonical,
    })
}

pub fn parse_config(text: &str) -> CResult<ScenarioConfig> {
    build_config(&RawConfig::parse(text)?)
}

/// Reads and validates a configuration file. `overrides` are applied after
/// parsing, as if they had been written in the file.
pub fn load_config(path: &Path, overrides: &[(&str, String)]) -> CResult<ScenarioConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
        key: None,
        line: None,
        message: format!("cannot read {}: {e}", path.display()),
    })?;
    let mut raw = RawConfig::parse(&text)?;
    for (k, v) in overrides {
        raw.set(k, v)?;
    }
    build_config(&raw)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "\
grid.x_min = -10
grid.x_max = 10
grid.n = 256
state.kind = gaussian
state.x0 = 0
state.sigma = 1
";

    #[test]
    fn minimal_config_gets_defaults() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!((c.hbar, c.mass), (1.0, 1.0));
        assert_eq!(c.fields.eta, 1e-8);
        assert_eq!(c.potential, Potential::Free);
        assert_eq!(c.state, InitialState::Gaussian { x0: 0.0, sigma: 1.0, k0: 0.0 });
        assert_eq!(c.tolerances.equivalence, 1e-5);
        assert_eq!(c.hash().len(), 64);
        assert!(c.canonical.contains("units.hbar = 1\n"));
    }

    #[test]
    fn grid_size_must_be_power_of_two() {
        let e = parse_config(&MINIMAL.replace("grid.n = 256", "grid.n = 100")).unwrap_err();
        assert_eq!(e.key.as_deref(), Some("grid.n"));
        assert!(e.to_string().contains("power of two"));
    }

    #[test]
    fn unknown_and_unused_keys_are_rejected() {
        let e = parse_config(&format!("{MINIMAL}qpotential.mode = bohm\n")).unwrap_err();
        assert_eq!(e.key.as_deref(), Some("qpotential.mode"));
        assert_eq!(e.line, Some(7));
        assert!(e.to_string().contains("unknown key"));
        let e = parse_config(&format!("{MINIMAL}state.omega = 2\n")).unwrap_err();
        assert_eq!(e.key.as_deref(), Some("state.omega"));
        let e = parse_config(&format!("{MINIMAL}grid.n = 512\n")).unwrap_err();
        assert!(e.to_string().contains("duplicate"));
    }

    #[test]
    fn value_errors_name_the_key() {
        let e = parse_config(&MINIMAL.replace("state.sigma = 1", "state.sigma = wide")).unwrap_err();
        assert_eq!(e.key.as_deref(), Some("state.sigma"));
        let e = parse_config(&MINIMAL.replace("state.sigma = 1", "state.sigma = -1")).unwrap_err();
        assert_eq!(e.key.as_deref(), Some("state.sigma"));
        let e = parse_config(&format!("{MINIMAL}fields.fd_order = 5\n")).unwrap_err();
        assert_eq!(e.key.as_deref(), Some("fields.fd_order"));
        let e = parse_config("grid.n 256\n").unwrap_err();
        assert_eq!(e.line, Some(1));
        let e = parse_config(&MINIMAL.replace("state.kind = gaussian", "state.kind = soliton")).unwrap_err();
        assert_eq!(e.key.as_deref(), Some("state.kind"));
    }

    #[test]
    fn comments_and_potentials() {
        let text = format!(
            "{MINIMAL}# barrier\npotential.kind = square_barrier  # trailing\npotential.height = 1\npotential.left = -1\npotential.right = 1\npotential.edge = tanh\npotential.edge_width = 0.5\n"
        );
        let c = parse_config(&text).unwrap();
        assert_eq!(
            c.potential,
            Potential::SquareBarrier { height: 1.0, left: -1.0, right: 1.0, edge: EdgeProfile::Tanh { width: 0.5 } }
        );
        let e = parse_config(&text.replace("potential.right = 1", "potential.right = 20")).unwrap_err();
        assert_eq!(e.key.as_deref(), Some("potential.left"));
    }

    #[test]
    fn hash_tracks_effective_values() {
        let a = parse_config(MINIMAL).unwrap();
        let b = parse_config(&format!("# comment only\n{MINIMAL}")).unwrap();
        assert_eq!(a.hash(), b.hash());
        let c = parse_config(&format!("{MINIMAL}units.mass = 2\n")).unwrap();
        assert_ne!(a.hash(), c.hash());
    }
}
