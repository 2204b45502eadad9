//! Potentials, initial states and Strang split-operator propagation.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{QflowError, Result};
use crate::grid::{fft, ifft, to_momentum_space, Grid1D, WaveFunction};

/// Fraction of probability allowed in the outer sixteenths of the grid for a
/// localized initial packet.
pub const EDGE_TAIL_LIMIT: f64 = 1e-10;

/// Default cap on the phase a single step may accumulate from `T` or `V`.
pub const DEFAULT_MAX_PHASE_PER_STEP: f64 = 0.5;

/// How the discontinuous edges of square barriers and wells are smoothed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EdgeProfile {
    /// Linear ramp spanning `2 dx`, centred on each edge.
    LinearRamp,
    /// `tanh((x - edge) / width)` step of the given physical width.
    Tanh { width: f64 },
}

impl EdgeProfile {
    /// Smoothed indicator of `[left, right]`.
    fn window(&self, x: f64, left: f64, right: f64, dx: f64) -> f64 {
        match *self {
            EdgeProfile::LinearRamp => {
                let rise = ((x - (left - dx)) / (2.0 * dx)).clamp(0.0, 1.0);
                let fall = ((right + dx - x) / (2.0 * dx)).clamp(0.0, 1.0);
                rise.min(fall)
            }
            EdgeProfile::Tanh { width } => 0.5 * (((x - left) / width).tanh() - ((x - right) / width).tanh()),
        }
    }

    /// Physical width of the smoothing region on `grid`.
    pub fn ramp_width(&self, grid: &Grid1D) -> f64 {
        match *self {
            EdgeProfile::LinearRamp => 2.0 * grid.dx(),
            EdgeProfile::Tanh { width } => width,
        }
    }
}

/// Time-independent external potential.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Potential {
    Free,
    Harmonic { omega: f64, center: f64 },
    SquareBarrier { height: f64, left: f64, right: f64, edge: EdgeProfile },
    SquareWell { depth: f64, left: f64, right: f64, edge: EdgeProfile },
    /// Paraxial two-slit: the transverse coordinate evolves freely after the
    /// slits, and longitudinal distance is `hbar k_forward t / m`.
    TwoGaussianSlit { separation: f64, slit_width: f64, k_forward: f64 },
}

impl Potential {
    pub fn validate(&self, grid: &Grid1D) -> Result<()> {
        let inside = |name: &'static str, left: f64, right: f64| {
            if !(left < right) {
                return Err(QflowError::InvalidParameter { name, reason: format!("left {left} must be < right {right}") });
            }
            if !(left > grid.x_min() && right < grid.x_max()) {
                return Err(QflowError::InvalidParameter {
                    name,
                    reason: format!("edges [{left}, {right}] must lie strictly inside the grid"),
                });
            }
            Ok(())
        };
        let edge_ok = |edge: &EdgeProfile| match edge {
            EdgeProfile::Tanh { width } if !(*width > 0.0) => {
                Err(QflowError::InvalidParameter { name: "potential.edge_width", reason: format!("{width} must be > 0") })
            }
            _ => Ok(()),
        };
        match self {
            Potential::Free => Ok(()),
            Potential::Harmonic { omega, .. } => {
                if *omega > 0.0 {
                    Ok(())
                } else {
                    Err(QflowError::InvalidParameter { name: "potential.omega", reason: format!("{omega} must be > 0") })
                }
            }
            Potential::SquareBarrier { left, right, edge, .. } => {
                inside("potential.left", *left, *right)?;
                edge_ok(edge)
            }
            Potential::SquareWell { left, right, edge, .. } => {
                inside("potential.left", *left, *right)?;
                edge_ok(edge)
            }
            Potential::TwoGaussianSlit { separation, slit_width, .. } => {
                if !(*slit_width > 0.0) {
                    return Err(QflowError::InvalidParameter {
                        name: "potential.slit_width",
                        reason: format!("{slit_width} must be > 0"),
                    });
                }
                if !(*separation > 2.0 * slit_width) {
                    return Err(QflowError::InvalidParameter {
                        name: "potential.separation",
                        reason: format!("{separation} must exceed 2 * slit_width"),
                    });
                }
                Ok(())
            }
        }
    }

    pub fn value(&self, x: f64, grid: &Grid1D, mass: f64) -> f64 {
        match *self {
            Potential::Free | Potential::TwoGaussianSlit { .. } => 0.0,
            Potential::Harmonic { omega, center } => 0.5 * mass * omega * omega * (x - center).powi(2),
            Potential::SquareBarrier { height, left, right, edge } => height * edge.window(x, left, right, grid.dx()),
            Potential::SquareWell { depth, left, right, edge } => -depth * edge.window(x, left, right, grid.dx()),
        }
    }

    pub fn sample(&self, grid: &Grid1D, mass: f64) -> Vec<f64> {
        grid.xs().into_iter().map(|x| self.value(x, grid, mass)).collect()
    }

    /// Smoothing width of barrier or well edges, if any.
    pub fn ramp_width(&self, grid: &Grid1D) -> Option<f64> {
        match self {
            Potential::SquareBarrier { edge, .. } | Potential::SquareWell { edge, .. } => Some(edge.ramp_width(grid)),
            _ => None,
        }
    }

    /// Longitudinal distance travelled after time `t` in the paraxial picture.
    pub fn longitudinal_distance(&self, t: f64, hbar: f64, mass: f64) -> Option<f64> {
        match *self {
            Potential::TwoGaussianSlit { k_forward, .. } => Some(hbar * k_forward * t / mass),
            _ => None,
        }
    }
}

/// Initial wavefunction recipes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialState {
    Gaussian { x0: f64, sigma: f64, k0: f64 },
    /// Equal-weight Gaussians at `center +- separation / 2`.
    TwoGaussian { center: f64, separation: f64, sigma: f64, k0: f64 },
    PlaneWave { k0: f64 },
    /// Ground state of `Potential::Harmonic { omega, center }`.
    HarmonicGround { omega: f64, center: f64 },
}

fn gaussian_amp(x: f64, x0: f64, sigma: f64) -> f64 {
    (-(x - x0).powi(2) / (4.0 * sigma * sigma)).exp()
}

/// Builds and normalizes the requested initial state.
pub fn initial_state(spec: &InitialState, grid: Grid1D, hbar: f64, mass: f64) -> Result<WaveFunction> {
    let positive = |name: &'static str, v: f64| {
        if v > 0.0 {
            Ok(())
        } else {
            Err(QflowError::InvalidParameter { name, reason: format!("{v} must be > 0") })
        }
    };
    let psi = match *spec {
        InitialState::Gaussian { x0, sigma, k0 } => {
            positive("state.sigma", sigma)?;
            WaveFunction::from_fn(grid, hbar, mass, |x| Complex64::from_polar(gaussian_amp(x, x0, sigma), k0 * x))?
        }
        InitialState::TwoGaussian { center, separation, sigma, k0 } => {
            positive("state.sigma", sigma)?;
            let (a, b) = (center - 0.5 * separation, center + 0.5 * separation);
            WaveFunction::from_fn(grid, hbar, mass, |x| {
                Complex64::from_polar(gaussian_amp(x, a, sigma) + gaussian_amp(x, b, sigma), k0 * x)
            })?
        }
        InitialState::HarmonicGround { omega, center } => {
            positive("state.omega", omega)?;
            let sigma = (hbar / (2.0 * mass * omega)).sqrt();
            WaveFunction::from_fn(grid, hbar, mass, |x| Complex64::new(gaussian_amp(x, center, sigma), 0.0))?
        }
        InitialState::PlaneWave { k0 } => {
            let cycles = k0 * grid.length() / (2.0 * PI);
            if (cycles - cycles.round()).abs() > 1e-9 {
                return Err(QflowError::InvalidParameter {
                    name: "state.k0",
                    reason: format!("plane wave must be periodic on the grid; k0 L / 2pi = {cycles}"),
                });
            }
            WaveFunction::from_fn(grid, hbar, mass, |x| Complex64::from_polar(1.0, k0 * x))?
        }
    };
    let psi = psi.normalize()?;
    if !matches!(spec, InitialState::PlaneWave { .. }) {
        let tail = edge_tail_mass(&psi);
        if tail > EDGE_TAIL_LIMIT {
            return Err(QflowError::PacketTooWide { tail, limit: EDGE_TAIL_LIMIT });
        }
    }
    Ok(psi)
}

/// Probability in the outer `n/16` points at each end of the grid.
pub fn edge_tail_mass(psi: &WaveFunction) -> f64 {
    let n = psi.len();
    let band = n / 16;
    let rho = psi.density();
    let tail: f64 = rho[..band].iter().chain(&rho[n - band..]).sum();
    tail * psi.grid().dx() / psi.norm_sqr()
}

/// Precomputed split-operator factors for one `(grid, V, dt)` combination.
#[derive(Debug, Clone)]
pub struct Propagator {
    half_potential: Vec<Complex64>,
    kinetic: Vec<Complex64>,
    dt: f64,
}

impl Propagator {
    pub fn new(grid: &Grid1D, potential: &Potential, dt: f64, hbar: f64, mass: f64) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(QflowError::InvalidParameter { name: "evolve.dt", reason: format!("{dt} must be > 0") });
        }
        let half_potential =
            potential.sample(grid, mass).into_iter().map(|v| Complex64::from_polar(1.0, -v * dt / (2.0 * hbar))).collect();
        let kinetic = grid
            .wavenumbers()
            .into_iter()
            .map(|k| Complex64::from_polar(1.0, -hbar * k * k * dt / (2.0 * mass)))
            .collect();
        Ok(Self { half_potential, kinetic, dt })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// One Strang step `e^{-iV dt/2} e^{-iT dt} e^{-iV dt/2}`.
    pub fn step(&self, amplitudes: &mut [Complex64]) {
        for (a, h) in amplitudes.iter_mut().zip(&self.half_potential) {
            *a *= h;
        }
        fft(amplitudes);
        for (a, k) in amplitudes.iter_mut().zip(&self.kinetic) {
            *a *= k;
        }
        ifft(amplitudes);
        for (a, h) in amplitudes.iter_mut().zip(&self.half_potential) {
            *a *= h;
        }
    }
}

/// Advances `psi` by a single Strang step.
pub fn evolve_step(psi: &WaveFunction, potential: &Potential, dt: f64) -> Result<WaveFunction> {
    let prop = Propagator::new(psi.grid(), potential, dt, psi.hbar(), psi.mass())?;
    let mut amps = psi.amplitudes().to_vec();
    prop.step(&mut amps);
    psi.with_amplitudes(amps)
}

/// Uniformly spaced snapshots of an evolving state.
#[derive(Debug, Clone)]
pub struct EvolutionSeries {
    pub times: Vec<f64>,
    pub states: Vec<WaveFunction>,
    /// Spacing between stored snapshots.
    pub dt: f64,
    pub potential: Potential,
}

impl EvolutionSeries {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn grid(&self) -> &Grid1D {
        self.states[0].grid()
    }

    pub fn t0(&self) -> f64 {
        self.times[0]
    }

    pub fn t_end(&self) -> f64 {
        *self.times.last().unwrap()
    }

    /// Index of a state that is bitwise-equal to `psi`.
    pub fn index_of(&self, psi: &WaveFunction) -> Option<usize> {
        self.states.iter().position(|s| s == psi)
    }
}

/// Largest phase a step of size `dt` accumulates from `T` or `V` over the
/// region where the state carries probability (`rho > 1e-10 max rho`, or
/// momentum weight above the same relative floor).
pub fn max_phase_advance(psi: &WaveFunction, potential: &Potential, dt: f64) -> f64 {
    let grid = psi.grid();
    let rho = psi.density();
    let rho_max = rho.iter().cloned().fold(0.0, f64::max);
    let v = potential.sample(grid, psi.mass());
    let v_max = rho.iter().zip(&v).filter(|(r, _)| **r > 1e-10 * rho_max).map(|(_, v)| v.abs()).fold(0.0, f64::max);
    let phi = to_momentum_space(psi);
    let weights: Vec<f64> = phi.amplitudes().iter().map(|a| a.norm_sqr()).collect();
    let w_max = weights.iter().cloned().fold(0.0, f64::max);
    let p_max =
        phi.momenta().iter().zip(&weights).filter(|(_, w)| **w > 1e-10 * w_max).map(|(p, _)| p.abs()).fold(0.0, f64::max);
    let t_max = p_max * p_max / (2.0 * psi.mass());
    v_max.max(t_max) * dt / psi.hbar()
}

/// Step size giving a phase advance of `max_phase` per step.
pub fn default_dt(psi: &WaveFunction, potential: &Potential, max_phase: f64) -> f64 {
    let per_unit = max_phase_advance(psi, potential, 1.0);
    if per_unit > 0.0 {
        max_phase / per_unit
    } else {
        0.01
    }
}

/// Evolves to `t_final`, storing every state.
pub fn evolve(psi0: &WaveFunction, potential: &Potential, t_final: f64, dt: f64) -> Result<EvolutionSeries> {
    evolve_sampled(psi0, potential, t_final, dt, 1)
}

/// Evolves to `t_final` in steps of `dt`, storing every `stride`-th state.
/// The stored series has spacing `stride * dt`.
pub fn evolve_sampled(
    psi0: &WaveFunction,
    potential: &Potential,
    t_final: f64,
    dt: f64,
    stride: usize,
) -> Result<EvolutionSeries> {
    evolve_with_limit(psi0, potential, t_final, dt, stride, DEFAULT_MAX_PHASE_PER_STEP)
}

pub fn evolve_with_limit(
    psi0: &WaveFunction,
    potential: &Potential,
    t_final: f64,
    dt: f64,
    stride: usize,
    max_phase: f64,
) -> Result<EvolutionSeries> {
    potential.validate(psi0.grid())?;
    if !(dt > 0.0) {
        return Err(QflowError::InvalidParameter { name: "evolve.dt", reason: format!("{dt} must be > 0") });
    }
    if stride == 0 {
        return Err(QflowError::InvalidParameter { name: "evolve.save_every", reason: "must be >= 1".into() });
    }
    let ratio = t_final / dt;
    let steps = ratio.round();
    if !(t_final >= 0.0) || (ratio - steps).abs() > 1e-6 * ratio.max(1.0) {
        return Err(QflowError::NonIntegerSteps { ratio });
    }
    let steps = steps as usize;
    if steps % stride != 0 {
        return Err(QflowError::InvalidParameter {
            name: "evolve.save_every",
            reason: format!("{steps} steps are not a multiple of save_every = {stride}"),
        });
    }
    let advance = max_phase_advance(psi0, potential, dt);
    if advance > max_phase {
        return Err(QflowError::InvalidParameter {
            name: "evolve.dt",
            reason: format!("phase advance {advance:.3} rad per step exceeds the bound {max_phase}"),
        });
    }
    let prop = Propagator::new(psi0.grid(), potential, dt, psi0.hbar(), psi0.mass())?;
    let mut times = Vec::with_capacity(steps / stride + 1);
    let mut states = Vec::with_capacity(steps / stride + 1);
    times.push(0.0);
    states.push(psi0.clone());
    let mut amps = psi0.amplitudes().to_vec();
    for step in 1..=steps {
        prop.step(&mut amps);
        if step % stride == 0 {
            times.push(step as f64 * dt);
            states.push(psi0.with_amplitudes(amps.clone())?);
        }
    }
    Ok(EvolutionSeries { times, states, dt: dt * stride as f64, potential: *potential })
}

/// `<T> + <V>` with the kinetic part evaluated in momentum space.
pub fn total_energy(psi: &WaveFunction, potential: &Potential) -> f64 {
    let (kinetic, pot) = energy_parts(psi, potential);
    kinetic + pot
}

/// `(<T>, <V>)`.
pub fn energy_parts(psi: &WaveFunction, potential: &Potential) -> (f64, f64) {
    let norm = psi.norm_sqr();
    let phi = to_momentum_space(psi);
    let dp = phi.dp();
    let m = psi.mass();
    let kinetic: f64 =
        phi.momenta().iter().zip(phi.amplitudes()).map(|(p, a)| p * p / (2.0 * m) * a.norm_sqr()).sum::<f64>() * dp;
    let v = potential.sample(psi.grid(), m);
    let pot: f64 = psi.density().iter().zip(&v).map(|(r, v)| r * v).sum::<f64>() * psi.grid().dx();
    (kinetic / norm, pot / norm)
}
