//! Flow lines `dx/dt = p(x, t) / m` through a stored evolution series.
//!
//! With `p = grad S` these are Bohm trajectories. They trace the mean
//! momentum flow of the ensemble at each point, not the motion of an
//! individual particle. The same integrator runs through the real part of
//! the weak momentum in [`crate::weak`].

use std::io::{self, Write};

use serde::Serialize;

use crate::error::{QflowError, Result};
use crate::grid::Grid1D;
use crate::polar::{bohm_momentum, polar_decompose, FieldOnGrid, FieldOptions};
use crate::schrodinger::EvolutionSeries;

/// Seeds at the quantiles `(i + 1/2) / count` of the distribution `rho0`.
///
/// The cumulative distribution is the trapezoid rule through the grid
/// points and the periodic image at `x_max`; quantiles are read off by
/// linear interpolation.
pub fn seed_ensemble(rho0: &FieldOnGrid, count: usize) -> Result<Vec<f64>> {
    if count < 2 {
        return Err(QflowError::InvalidParameter {
            name: "trajectories.seeds",
            reason: format!("need at least 2 seeds, got {count}"),
        });
    }
    let g = rho0.grid;
    let n = g.n();
    let dx = g.dx();
    let value = |i: usize| {
        let v = rho0.values[i % n];
        if v.is_finite() { v.max(0.0) } else { 0.0 }
    };
    let mut cdf = Vec::with_capacity(n + 1);
    cdf.push(0.0);
    for i in 0..n {
        let next = cdf[i] + 0.5 * (value(i) + value(i + 1)) * dx;
        cdf.push(next);
    }
    let total = cdf[n];
    if total <= 0.0 {
        return Err(QflowError::ZeroNorm);
    }
    let mut seeds = Vec::with_capacity(count);
    let mut seg = 0;
    for i in 0..count {
        let target = total * (i as f64 + 0.5) / count as f64;
        while seg + 1 < n && cdf[seg + 1] < target {
            seg += 1;
        }
        let (c0, c1) = (cdf[seg], cdf[seg + 1]);
        let frac = if c1 > c0 { (target - c0) / (c1 - c0) } else { 0.5 };
        seeds.push(g.x_min() + (seg as f64 + frac) * dx);
    }
    Ok(seeds)
}

/// Kolmogorov distance between the empirical distribution of `positions`
/// and the trapezoid-rule distribution of `rho`.
pub fn kolmogorov_distance(positions: &[f64], rho: &FieldOnGrid) -> f64 {
    let g = rho.grid;
    let n = g.n();
    let dx = g.dx();
    let value = |i: usize| rho.values[i % n].max(0.0);
    let mut cdf = vec![0.0; n + 1];
    for i in 0..n {
        cdf[i + 1] = cdf[i] + 0.5 * (value(i) + value(i + 1)) * dx;
    }
    let total = cdf[n];
    let model = |x: f64| {
        let u = ((x - g.x_min()) / dx).clamp(0.0, n as f64);
        let i = (u.floor() as usize).min(n - 1);
        let f = u - i as f64;
        (cdf[i] + f * (cdf[i + 1] - cdf[i])) / total
    };
    let mut xs = positions.to_vec();
    xs.sort_by(f64::total_cmp);
    let count = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, x)| {
            let c = model(*x);
            (c - i as f64 / count).abs().max((c - (i + 1) as f64 / count).abs())
        })
        .fold(0.0, f64::max)
}

/// Velocity samples on every slice of a series. Masked points hold NaN.
#[derive(Debug, Clone)]
pub struct VelocityField {
    grid: Grid1D,
    t0: f64,
    dt: f64,
    slices: Vec<Vec<f64>>,
}

impl VelocityField {
    /// Builds the field from per-slice momentum samples.
    pub fn from_momenta(series: &EvolutionSeries, momenta: impl Fn(usize) -> FieldOnGrid) -> Self {
        let slices = (0..series.len())
            .map(|k| {
                let m = series.states[k].mass();
                let p = momenta(k);
                p.values.iter().zip(&p.valid).map(|(v, ok)| if *ok { v / m } else { f64::NAN }).collect()
            })
            .collect();
        Self { grid: *series.grid(), t0: series.t0(), dt: series.dt, slices }
    }

    /// `grad S / m`.
    pub fn bohm(series: &EvolutionSeries, options: &FieldOptions) -> Self {
        Self::from_momenta(series, |k| bohm_momentum(&polar_decompose(&series.states[k], options)))
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.slices.len()).map(|k| self.t0 + k as f64 * self.dt).collect()
    }

    pub fn t_end(&self) -> f64 {
        self.t0 + (self.slices.len() - 1) as f64 * self.dt
    }

    /// Bilinear interpolation in `x` and `t`.
    pub fn velocity_at(&self, x: f64, t: f64) -> Result<f64> {
        let g = &self.grid;
        let t_end = self.t_end();
        let slack = 1e-9 * self.dt;
        if t < self.t0 - slack || t > t_end + slack {
            return Err(QflowError::TimeOutOfRange { t, t0: self.t0, t1: t_end });
        }
        if !(x >= g.x_min() && x < g.x_max()) {
            return Err(QflowError::LeftGrid { x, t });
        }
        let u = (x - g.x_min()) / g.dx();
        let i = (u.floor() as usize).min(g.n() - 1);
        let fx = u - i as f64;
        let j = (i + 1) % g.n();

        let last = self.slices.len() - 1;
        let s = ((t - self.t0) / self.dt).clamp(0.0, last as f64);
        let k = (s.floor() as usize).min(last.saturating_sub(1));
        let ft = if last == 0 { 0.0 } else { s - k as f64 };
        let k1 = (k + 1).min(last);

        let at = |slice: &Vec<f64>| slice[i] + fx * (slice[j] - slice[i]);
        let (a, b) = (at(&self.slices[k]), at(&self.slices[k1]));
        let corners = [self.slices[k][i], self.slices[k][j], self.slices[k1][i], self.slices[k1][j]];
        if corners.iter().any(|c| !c.is_finite()) {
            return Err(QflowError::MaskedRegion { x, t });
        }
        Ok(a + ft * (b - a))
    }
}

/// Convenience wrapper computing `grad S / m` on the two slices around `t` only.
pub fn velocity_at(series: &EvolutionSeries, x: f64, t: f64, options: &FieldOptions) -> Result<f64> {
    let (t0, t1) = (series.t0(), series.t_end());
    if t < t0 - 1e-9 * series.dt || t > t1 + 1e-9 * series.dt {
        return Err(QflowError::TimeOutOfRange { t, t0, t1 });
    }
    let last = series.len() - 1;
    let k = (((t - t0) / series.dt).floor().max(0.0) as usize).min(last.saturating_sub(1));
    let k1 = (k + 1).min(last);
    let sub = EvolutionSeries {
        times: vec![series.times[k], series.times[k1]],
        states: vec![series.states[k].clone(), series.states[k1].clone()],
        dt: if k1 > k { series.dt } else { 1.0 },
        potential: series.potential.clone(),
    };
    VelocityField::bohm(&sub, options).velocity_at(x, t.min(sub.times[1]).max(sub.times[0]))
}

/// Positions of one flow line on the shared time axis.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub positions: Vec<f64>,
}

/// Classical fourth-order Runge-Kutta with the slice spacing as step.
pub fn integrate_trajectory(field: &VelocityField, x0: f64) -> Result<Trajectory> {
    let times = field.times();
    let h = field.dt;
    let mut positions = Vec::with_capacity(times.len());
    let mut x = x0;
    positions.push(x);
    field.velocity_at(x, times[0])?;
    for w in times.windows(2) {
        let t = w[0];
        let k1 = field.velocity_at(x, t)?;
        let k2 = field.velocity_at(x + 0.5 * h * k1, t + 0.5 * h)?;
        let k3 = field.velocity_at(x + 0.5 * h * k2, t + 0.5 * h)?;
        let k4 = field.velocity_at(x + h * k3, w[1])?;
        x += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if !x.is_finite() || !field.grid.contains(x) {
            return Err(QflowError::LeftGrid { x, t: w[1] });
        }
        positions.push(x);
    }
    Ok(Trajectory { times, positions })
}

/// A set of flow lines sharing one time axis.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryEnsemble {
    pub times: Vec<f64>,
    pub seeds: Vec<f64>,
    /// How the seeds were chosen.
    pub seeding: String,
    pub positions: Vec<Vec<f64>>,
}

/// Failure of one member of an ensemble integration.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedFailure {
    pub index: usize,
    pub seed: f64,
    pub error: QflowError,
}

impl std::fmt::Display for SeedFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "seed {} at x0 = {}: {}", self.index, self.seed, self.error)
    }
}

pub fn integrate_ensemble(
    field: &VelocityField,
    seeds: &[f64],
    seeding: &str,
) -> std::result::Result<TrajectoryEnsemble, SeedFailure> {
    let positions = seeds
        .iter()
        .enumerate()
        .map(|(index, &seed)| {
            integrate_trajectory(field, seed).map(|t| t.positions).map_err(|error| SeedFailure { index, seed, error })
        })
        .collect::<std::result::Result<Vec<_>, _>>()?;
    Ok(TrajectoryEnsemble { times: field.times(), seeds: seeds.to_vec(), seeding: seeding.to_string(), positions })
}

impl TrajectoryEnsemble {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn trajectory(&self, i: usize) -> Trajectory {
        Trajectory { times: self.times.clone(), positions: self.positions[i].clone() }
    }

    /// Positions of all members at step `k`.
    pub fn at_step(&self, k: usize) -> Vec<f64> {
        self.positions.iter().map(|p| p[k]).collect()
    }

    /// Largest pointwise distance to another ensemble with the same layout.
    pub fn max_distance(&self, other: &TrajectoryEnsemble) -> f64 {
        self.positions
            .iter()
            .zip(&other.positions)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max)
    }

    /// Writes `trajectory_id,t,x` rows.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> io::Result<()> {
        writeln!(out, "trajectory_id,t,x")?;
        for (id, p) in self.positions.iter().enumerate() {
            for (t, x) in self.times.iter().zip(p) {
                writeln!(out, "{id},{t:.17e},{x:.17e}")?;
            }
        }
        Ok(())
    }
}

/// First step at which two members swap order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CrossingViolation {
    pub step: usize,
    pub time: f64,
    pub lower: usize,
    pub upper: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrossingReport {
    pub trajectories: usize,
    pub steps: usize,
    pub crossings: usize,
    pub first_violation: Option<CrossingViolation>,
}

impl CrossingReport {
    pub fn passed(&self) -> bool {
        self.crossings == 0
    }
}

/// Checks that the position ordering at every step equals the initial one.
pub fn non_crossing_check(ensemble: &TrajectoryEnsemble) -> Result<CrossingReport> {
    if ensemble.len() < 2 {
        return Err(QflowError::TooFewStates { got: ensemble.len(), need: 2 });
    }
    let mut order: Vec<usize> = (0..ensemble.len()).collect();
    order.sort_by(|a, b| ensemble.positions[*a][0].total_cmp(&ensemble.positions[*b][0]));
    let mut crossings = 0;
    let mut first = None;
    for k in 0..ensemble.times.len() {
        for w in order.windows(2) {
            if ensemble.positions[w[0]][k] > ensemble.positions[w[1]][k] {
                crossings += 1;
                first.get_or_insert(CrossingViolation {
                    step: k,
                    time: ensemble.times[k],
                    lower: w[0],
                    upper: w[1],
                });
            }
        }
    }
    Ok(CrossingReport { trajectories: ensemble.len(), steps: ensemble.times.len(), crossings, first_violation: first })
}
