//! Polar decomposition `psi = R e^{iS/hbar}` and the hydrodynamic fields
//! built from it: Bohm momentum `grad S`, quantum potential, osmotic
//! momentum, the `T^{0mu}` components, and residuals of the continuity and
//! quantum Hamilton-Jacobi equations along an evolution series.
//!
//! Derivatives of `S` and `R` use central finite differences of
//! configurable order. Everything is masked near nodes, where `rho` falls
//! below `eta * max rho`: a derivative is only reported when no node lies
//! within `max(node_pad, stencil half-width)` points.

use std::f64::consts::PI;
use std::io::{self, Write};

use serde::Serialize;

use crate::error::{QflowError, Result};
use crate::grid::{Grid1D, WaveFunction};
use crate::schrodinger::{total_energy, EvolutionSeries, Potential};
use crate::stencil::{first_at, second_at, DifferenceOrder};

/// Masking and differencing parameters shared by the field computations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FieldOptions {
    /// Node threshold relative to the density maximum.
    pub eta: f64,
    /// Minimum number of grid points masked on each side of a node.
    pub node_pad: usize,
    pub order: DifferenceOrder,
}

impl Default for FieldOptions {
    fn default() -> Self {
        Self { eta: 1e-8, node_pad: 2, order: DifferenceOrder::default() }
    }
}

/// `arg(a conj(b))` in `(-pi, pi]`.
fn phase_step(a: num_complex::Complex64, b: num_complex::Complex64) -> f64 {
    (a * b.conj()).arg()
}

/// Amplitude, unwrapped action and node mask of a wavefunction.
#[derive(Debug, Clone)]
pub struct PolarFields {
    grid: Grid1D,
    hbar: f64,
    mass: f64,
    options: FieldOptions,
    r: Vec<f64>,
    s: Vec<f64>,
    rho: Vec<f64>,
    node_mask: Vec<bool>,
    valid: Vec<bool>,
    anchor: usize,
    winding: f64,
}

/// Splits `psi` into `R` and `S`. The phase is unwrapped outward from the
/// density maximum in both directions.
pub fn polar_decompose(psi: &WaveFunction, options: &FieldOptions) -> PolarFields {
    let grid = *psi.grid();
    let n = grid.n();
    let hbar = psi.hbar();
    let a = psi.amplitudes();
    let rho = psi.density();
    let r: Vec<f64> = a.iter().map(|z| z.norm()).collect();
    let (anchor, rho_max) =
        rho.iter().enumerate().fold((0, f64::MIN), |(bi, bv), (i, v)| if *v > bv { (i, *v) } else { (bi, bv) });

    let mut s = vec![0.0; n];
    s[anchor] = hbar * a[anchor].arg();
    for i in anchor + 1..n {
        s[i] = s[i - 1] + hbar * phase_step(a[i], a[i - 1]);
    }
    for i in (0..anchor).rev() {
        s[i] = s[i + 1] + hbar * phase_step(a[i], a[i + 1]);
    }
    let winding = s[n - 1] + hbar * phase_step(a[0], a[n - 1]) - s[0];

    let node_mask: Vec<bool> = rho.iter().map(|v| *v < options.eta * rho_max).collect();
    let reach = options.node_pad.max(options.order.half_width()) as i64;
    let valid = (0..n as i64)
        .map(|i| (-reach..=reach).all(|j| !node_mask[(i + j).rem_euclid(n as i64) as usize]))
        .collect();

    PolarFields { grid, hbar, mass: psi.mass(), options: *options, r, s, rho, node_mask, valid, anchor, winding }
}

impl PolarFields {
    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn options(&self) -> &FieldOptions {
        &self.options
    }

    pub fn amplitude(&self) -> &[f64] {
        &self.r
    }

    /// Unwrapped phase in action units.
    pub fn action(&self) -> &[f64] {
        &self.s
    }

    pub fn density(&self) -> &[f64] {
        &self.rho
    }

    pub fn node_mask(&self) -> &[bool] {
        &self.node_mask
    }

    /// True where derivative fields are defined.
    pub fn derivative_valid(&self) -> &[bool] {
        &self.valid
    }

    /// Index of the density maximum the unwrapping started from.
    pub fn anchor(&self) -> usize {
        self.anchor
    }

    fn r_at(&self, i: i64) -> f64 {
        self.r[i.rem_euclid(self.grid.n() as i64) as usize]
    }

    /// `S` continued across the periodic seam.
    fn s_at(&self, i: i64) -> f64 {
        let n = self.grid.n() as i64;
        self.s[i.rem_euclid(n) as usize] + self.winding * i.div_euclid(n) as f64
    }

    /// `R e^{iS/hbar}`.
    pub fn reconstruct(&self) -> Vec<num_complex::Complex64> {
        self.r.iter().zip(&self.s).map(|(r, s)| num_complex::Complex64::from_polar(*r, s / self.hbar)).collect()
    }

    /// Shifts `S` by a multiple of `2 pi hbar` so that its value at this
    /// state's density maximum is within `pi hbar` of `previous` there.
    pub fn align_to(&mut self, previous: &PolarFields) {
        let a = self.anchor;
        let d = self.s[a] - previous.s[a];
        let turns = (d / (2.0 * PI * self.hbar)).round();
        if turns != 0.0 {
            let shift = turns * 2.0 * PI * self.hbar;
            for v in self.s.iter_mut() {
                *v -= shift;
            }
        }
    }

    fn derived(&self, f: impl Fn(usize) -> f64) -> FieldOnGrid {
        let values = (0..self.grid.n()).map(|i| if self.valid[i] { f(i) } else { f64::NAN }).collect();
        FieldOnGrid { grid: self.grid, values, valid: self.valid.clone() }
    }

    fn grad_s(&self, i: usize) -> f64 {
        first_at(self.options.order, self.grid.dx(), i as i64, |j| self.s_at(j))
    }

    fn grad_r(&self, i: usize) -> f64 {
        first_at(self.options.order, self.grid.dx(), i as i64, |j| self.r_at(j))
    }

    fn laplacian_r(&self, i: usize) -> f64 {
        second_at(self.options.order, self.grid.dx(), i as i64, |j| self.r_at(j))
    }
}

/// Real field sampled on the grid with a validity mask. Masked entries hold NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldOnGrid {
    pub grid: Grid1D,
    pub values: Vec<f64>,
    pub valid: Vec<bool>,
}

impl FieldOnGrid {
    pub fn new(grid: Grid1D, values: Vec<f64>, valid: Vec<bool>) -> Self {
        Self { grid, values, valid }
    }

    pub fn get(&self, i: usize) -> Option<f64> {
        self.valid[i].then_some(self.values[i])
    }

    pub fn map(&self, f: impl Fn(usize, f64) -> f64) -> Self {
        let values =
            self.values.iter().enumerate().map(|(i, v)| if self.valid[i] { f(i, *v) } else { f64::NAN }).collect();
        Self { grid: self.grid, values, valid: self.valid.clone() }
    }

    /// Largest `|self - other|` over points valid in both.
    pub fn max_abs_diff(&self, other: &FieldOnGrid) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .zip(self.valid.iter().zip(&other.valid))
            .filter(|(_, (a, b))| **a && **b)
            .map(|((x, y), _)| (x - y).abs())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().zip(&self.valid).filter(|(_, v)| **v).map(|(x, _)| x.abs()).fold(0.0, f64::max)
    }

    /// Writes `x,value,masked` rows.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> io::Result<()> {
        writeln!(out, "x,value,masked")?;
        for i in 0..self.values.len() {
            writeln!(out, "{:.17e},{:.17e},{}", self.grid.x(i), self.values[i], !self.valid[i])?;
        }
        Ok(())
    }
}

/// `grad S`.
pub fn bohm_momentum(pf: &PolarFields) -> FieldOnGrid {
    pf.derived(|i| pf.grad_s(i))
}

/// `Q = -(hbar^2 / 2m) laplacian(R) / R`.
pub fn quantum_potential(pf: &PolarFields) -> FieldOnGrid {
    let c = -pf.hbar * pf.hbar / (2.0 * pf.mass);
    pf.derived(|i| c * pf.laplacian_r(i) / pf.r[i])
}

/// `hbar grad(R) / R`.
pub fn osmotic_momentum(pf: &PolarFields) -> FieldOnGrid {
    pf.derived(|i| pf.hbar * pf.grad_r(i) / pf.r[i])
}

/// `T^{0j} = hbar Im(conj(psi) dpsi/dx)`, spectral derivative. Signs are
/// fixed so that `T^{0j} / rho = grad S` is positive for a right-moving wave.
pub fn momentum_density(psi: &WaveFunction) -> Vec<f64> {
    let h = psi.hbar();
    psi.amplitudes().iter().zip(psi.derivative()).map(|(a, d)| h * (a.conj() * d).im).collect()
}

/// `T^{00}` and `T^{0j}` of one member of an evolution series.
#[derive(Debug, Clone)]
pub struct EnergyMomentum {
    /// `-rho dS/dt`.
    pub t00: FieldOnGrid,
    pub t0j: FieldOnGrid,
}

/// Phases of consecutive states made time-consistent: returns polar fields
/// for `indices`, each aligned to its predecessor in the list.
fn aligned_window(series: &EvolutionSeries, indices: &[usize], options: &FieldOptions) -> Vec<PolarFields> {
    let mut out: Vec<PolarFields> = Vec::with_capacity(indices.len());
    for &k in indices {
        let mut pf = polar_decompose(&series.states[k], options);
        if let Some(prev) = out.last() {
            pf.align_to(prev);
        }
        out.push(pf);
    }
    out
}

/// `dS/dt` at member `k`, centred in the interior and second-order one-sided
/// at the ends.
fn phase_rate(series: &EvolutionSeries, k: usize, options: &FieldOptions) -> (PolarFields, Vec<f64>) {
    let dt = series.dt;
    let last = series.len() - 1;
    let (idx, weights): (Vec<usize>, [f64; 3]) = if k == 0 {
        (vec![0, 1, 2], [-1.5, 2.0, -0.5])
    } else if k == last {
        (vec![last - 2, last - 1, last], [0.5, -2.0, 1.5])
    } else {
        (vec![k - 1, k, k + 1], [-0.5, 0.0, 0.5])
    };
    let window = aligned_window(series, &idx, options);
    let n = series.grid().n();
    let rate = (0..n).map(|i| window.iter().zip(weights).map(|(pf, w)| w * pf.s[i]).sum::<f64>() / dt).collect();
    let centre = idx.iter().position(|j| *j == k).unwrap();
    (window[centre].clone(), rate)
}

pub fn energy_momentum_components(
    psi: &WaveFunction,
    series: &EvolutionSeries,
    options: &FieldOptions,
) -> Result<EnergyMomentum> {
    if series.len() < 3 {
        return Err(QflowError::TooFewStates { got: series.len(), need: 3 });
    }
    let k = series.index_of(psi).ok_or(QflowError::NotInSeries)?;
    let (pf, rate) = phase_rate(series, k, options);
    let t00 = pf.derived(|i| -pf.rho[i] * rate[i]);
    let t0j = FieldOnGrid::new(
        pf.grid,
        momentum_density(psi).into_iter().zip(&pf.valid).map(|(v, ok)| if *ok { v } else { f64::NAN }).collect(),
        pf.valid.clone(),
    );
    Ok(EnergyMomentum { t00, t0j })
}

/// Largest residual of a field equation over interior times and valid points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResidualReport {
    pub linf: f64,
    pub time: f64,
    pub x: f64,
    pub points: usize,
}

impl ResidualReport {
    pub fn empty() -> Self {
        Self { linf: 0.0, time: f64::NAN, x: f64::NAN, points: 0 }
    }

    /// Combines reports over disjoint sets of points.
    pub fn merge(&mut self, other: &ResidualReport) {
        self.points += other.points;
        if other.linf > self.linf {
            self.linf = other.linf;
            self.time = other.time;
            self.x = other.x;
        }
    }

    fn update(&mut self, value: f64, time: f64, x: f64) {
        self.points += 1;
        if value.abs() > self.linf {
            self.linf = value.abs();
            self.time = time;
            self.x = x;
        }
    }
}

/// Runs `f(prev, cur, next, k)` over every interior member with phases aligned.
fn sweep_interior(
    series: &EvolutionSeries,
    options: &FieldOptions,
    mut f: impl FnMut(&PolarFields, &PolarFields, &PolarFields, usize),
) -> Result<()> {
    if series.len() < 3 {
        return Err(QflowError::TooFewStates { got: series.len(), need: 3 });
    }
    let mut prev = polar_decompose(&series.states[0], options);
    let mut cur = polar_decompose(&series.states[1], options);
    cur.align_to(&prev);
    for k in 1..series.len() - 1 {
        let mut next = polar_decompose(&series.states[k + 1], options);
        next.align_to(&cur);
        f(&prev, &cur, &next, k);
        prev = cur;
        cur = next;
    }
    Ok(())
}

/// L-infinity residual of `d rho/dt + d(rho grad S / m)/dx = 0` using centred
/// differences in time and space.
pub fn continuity_residual(series: &EvolutionSeries, options: &FieldOptions) -> Result<ResidualReport> {
    let mut report = ResidualReport::empty();
    let grid = *series.grid();
    let n = grid.n();
    let (dt, dx) = (series.dt, grid.dx());
    sweep_interior(series, options, |prev, cur, next, k| {
        let grad = bohm_momentum(cur);
        let flux: Vec<f64> = grad.values.iter().zip(&cur.rho).map(|(g, r)| r * g / cur.mass).collect();
        for i in 0..n {
            let (l, r) = ((i + n - 1) % n, (i + 1) % n);
            if !(cur.valid[i] && cur.valid[l] && cur.valid[r]) {
                continue;
            }
            let res = (next.rho[i] - prev.rho[i]) / (2.0 * dt) + (flux[r] - flux[l]) / (2.0 * dx);
            report.update(res, series.times[k], grid.x(i));
        }
    })?;
    Ok(report)
}

/// L-infinity residual of `dS/dt + (grad S)^2 / 2m + Q + V = 0`.
pub fn qhj_residual(series: &EvolutionSeries, potential: &Potential, options: &FieldOptions) -> Result<ResidualReport> {
    let mut report = ResidualReport::empty();
    let grid = *series.grid();
    let dt = series.dt;
    sweep_interior(series, options, |prev, cur, next, k| {
        let v = potential.sample(&grid, cur.mass);
        let grad = bohm_momentum(cur);
        let q = quantum_potential(cur);
        for i in 0..grid.n() {
            if !cur.valid[i] {
                continue;
            }
            let ds = (next.s[i] - prev.s[i]) / (2.0 * dt);
            let res = ds + grad.values[i].powi(2) / (2.0 * cur.mass) + q.values[i] + v[i];
            report.update(res, series.times[k], grid.x(i));
        }
    })?;
    Ok(report)
}

/// `log2(coarse / fine)` for one refinement doubling.
pub fn convergence_order(coarse: f64, fine: f64) -> f64 {
    (coarse / fine).log2()
}

/// Pointwise Bohm and osmotic kinetic energies and the trace identity
/// `int rho (KE_B + KE_O + V) dx = <H>`.
#[derive(Debug, Clone)]
pub struct TraceReport {
    /// `(grad S)^2 / 2m`.
    pub ke_bohm: FieldOnGrid,
    /// `hbar^2 (grad R)^2 / (2m R^2)`.
    pub ke_osmotic: FieldOnGrid,
    pub bohm_integral: f64,
    pub osmotic_integral: f64,
    pub potential_integral: f64,
    pub trace_total: f64,
    pub total_energy: f64,
    pub relative_error: f64,
}

pub fn kinetic_trace_check(psi: &WaveFunction, potential: &Potential, options: &FieldOptions) -> TraceReport {
    let pf = polar_decompose(psi, options);
    let m = pf.mass;
    let ke_bohm = bohm_momentum(&pf).map(|_, p| p * p / (2.0 * m));
    let ke_osmotic = osmotic_momentum(&pf).map(|_, u| u * u / (2.0 * m));
    let v = potential.sample(&pf.grid, m);
    let dx = pf.grid.dx();
    let norm = psi.norm_sqr();
    let integrate = |f: &dyn Fn(usize) -> f64| {
        (0..pf.grid.n()).filter(|i| pf.valid[*i]).map(|i| pf.rho[i] * f(i)).sum::<f64>() * dx / norm
    };
    let bohm_integral = integrate(&|i| ke_bohm.values[i]);
    let osmotic_integral = integrate(&|i| ke_osmotic.values[i]);
    let potential_integral = integrate(&|i| v[i]);
    let trace_total = bohm_integral + osmotic_integral + potential_integral;
    let energy = total_energy(psi, potential);
    TraceReport {
        ke_bohm,
        ke_osmotic,
        bohm_integral,
        osmotic_integral,
        potential_integral,
        trace_total,
        total_energy: energy,
        relative_error: (trace_total - energy).abs() / energy.abs(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use crate::schrodinger::{evolve, initial_state, InitialState};
    use num_complex::Complex64;

    const OPTS: FieldOptions = FieldOptions { eta: 1e-8, node_pad: 2, order: DifferenceOrder::EIGHTH };

    fn plane(k_cycles: f64) -> (WaveFunction, f64) {
        let g = make_grid(-10.0, 10.0, 256).unwrap();
        let k0 = 2.0 * PI * k_cycles / 20.0;
        (initial_state(&InitialState::PlaneWave { k0 }, g, 1.0, 1.0).unwrap(), k0)
    }

    fn gauss(sigma: f64) -> WaveFunction {
        let g = make_grid(-20.0, 20.0, 1024).unwrap();
        initial_state(&InitialState::Gaussian { x0: 0.0, sigma, k0: 0.0 }, g, 1.0, 1.0).unwrap()
    }

    #[test]
    fn plane_wave_phase_is_linear() {
        let (psi, k0) = plane(4.0);
        let pf = polar_decompose(&psi, &OPTS);
        let r0 = pf.amplitude()[0];
        assert!(pf.amplitude().iter().all(|r| (r - r0).abs() < 1e-12));
        for w in pf.action().windows(2) {
            assert!((w[1] - w[0] - k0 * psi.grid().dx()).abs() < 1e-12);
        }
        assert!(pf.node_mask().iter().all(|m| !m));
        let p = bohm_momentum(&pf);
        assert!(p.values.iter().all(|v| (v - k0).abs() < 1e-8));
        assert!(quantum_potential(&pf).max_abs() < 1e-8);
        assert!(osmotic_momentum(&pf).max_abs() < 1e-8);
    }

    #[test]
    fn real_gaussian_has_constant_phase() {
        let psi = gauss(1.0);
        let pf = polar_decompose(&psi, &OPTS);
        assert!(pf.action().iter().all(|s| s.abs() < 1e-14));
        assert!(bohm_momentum(&pf).max_abs() < 1e-12);
        let rec = pf.reconstruct();
        let dev = rec.iter().zip(psi.amplitudes()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(dev < 1e-10);
    }

    #[test]
    fn gaussian_quantum_potential_and_osmotic_momentum() {
        // Oracle: R ~ exp(-x^2 / 4 sigma^2) gives Q = hbar^2/(4 m sigma^2) (1 - x^2 / 2 sigma^2)
        // and hbar R'/R = -hbar x / (2 sigma^2).
        let sigma = 1.0;
        let psi = gauss(sigma);
        let pf = polar_decompose(&psi, &OPTS);
        let g = *psi.grid();
        let q = quantum_potential(&pf);
        let i0 = g.nearest_index(0.0);
        let q0 = 1.0 / (4.0 * sigma * sigma);
        assert!((q.values[i0] - q0).abs() / q0 < 0.01);
        let crossing = (i0..g.n() - 1).find(|i| q.values[*i] > 0.0 && q.values[i + 1] <= 0.0).unwrap();
        assert!((g.x(crossing) - sigma * 2f64.sqrt()).abs() <= 2.0 * g.dx());

        let u = osmotic_momentum(&pf);
        for i in (0..g.n()).step_by(37) {
            if let Some(v) = u.get(i) {
                let x = g.x(i);
                if x.abs() > 0.5 && x.abs() < 5.0 {
                    let expected = -x / (2.0 * sigma * sigma);
                    assert!((v - expected).abs() / expected.abs() < 0.01);
                }
            }
        }
        let trace = kinetic_trace_check(&psi, &Potential::Free, &OPTS);
        let expected = 1.0 / (8.0 * sigma * sigma);
        assert!((trace.osmotic_integral - expected).abs() / expected < 0.01);
        assert!(trace.bohm_integral.abs() < 1e-20);
        assert!((trace.total_energy - expected).abs() / expected < 0.01);
    }

    #[test]
    fn nodes_are_masked() {
        // Interference minima located by a direct scan of rho.
        let g = make_grid(-20.0, 20.0, 1024).unwrap();
        let psi = WaveFunction::from_fn(g, 1.0, 1.0, |x| {
            let env = (-x * x / 16.0).exp();
            Complex64::new(env * (2.0 * x).cos(), 0.0)
        })
        .unwrap()
        .normalize()
        .unwrap();
        let pf = polar_decompose(&psi, &OPTS);
        let rho = psi.density();
        let max = rho.iter().cloned().fold(0.0, f64::max);
        let mut flagged = 0;
        for i in 1..g.n() - 1 {
            if rho[i] <= rho[i - 1] && rho[i] <= rho[i + 1] && rho[i] < 1e-8 * max {
                assert!(pf.node_mask()[i]);
                for j in i - 2..=i + 2 {
                    assert!(!pf.derivative_valid()[j]);
                }
                flagged += 1;
            }
        }
        assert!(flagged > 0);
        assert!(bohm_momentum(&pf).values.iter().zip(pf.derivative_valid()).all(|(v, ok)| *ok == v.is_finite()));
    }

    #[test]
    fn spreading_gaussian_momentum_matches_analytic_phase() {
        // Oracle: free Gaussian phase gives grad S = m x (d sigma/dt) / sigma.
        let sigma0 = 0.7;
        let g = make_grid(-20.0, 20.0, 1024).unwrap();
        let psi = initial_state(&InitialState::Gaussian { x0: 0.0, sigma: sigma0, k0: 0.0 }, g, 1.0, 1.0).unwrap();
        let series = evolve(&psi, &Potential::Free, 1.0, 0.01).unwrap();
        let t = 1.0;
        let tau = t / (2.0 * sigma0 * sigma0);
        let pf = polar_decompose(series.states.last().unwrap(), &OPTS);
        let p = bohm_momentum(&pf);
        let rate = tau / (2.0 * sigma0 * sigma0 * (1.0 + tau * tau));
        for i in (0..g.n()).step_by(29) {
            let x = g.x(i);
            if x.abs() > 0.3 && x.abs() < 4.0 {
                let expected = x * rate;
                assert!((p.values[i] - expected).abs() / expected.abs() < 0.005, "x={x} got {} want {expected}", p.values[i]);
            }
        }
    }

    #[test]
    fn residuals_vanish_for_eigenstates() {
        let (psi, k0) = plane(4.0);
        let series = evolve(&psi, &Potential::Free, 0.5, 0.01).unwrap();
        assert!(continuity_residual(&series, &OPTS).unwrap().linf < 1e-10);
        assert!(qhj_residual(&series, &Potential::Free, &OPTS).unwrap().linf < 1e-8);
        let em = energy_momentum_components(&series.states[3], &series, &OPTS).unwrap();
        let pf = polar_decompose(&series.states[3], &OPTS);
        for i in 0..pf.grid().n() {
            assert!((em.t0j.values[i] / pf.density()[i] - k0).abs() < 1e-8);
            assert!((em.t00.values[i] / pf.density()[i] - k0 * k0 / 2.0).abs() < 1e-8);
        }

        let g = make_grid(-10.0, 10.0, 256).unwrap();
        let v = Potential::Harmonic { omega: 1.0, center: 0.0 };
        let gs = initial_state(&InitialState::HarmonicGround { omega: 1.0, center: 0.0 }, g, 1.0, 1.0).unwrap();
        let series = evolve(&gs, &v, 0.02, 0.0005).unwrap();
        assert!(continuity_residual(&series, &OPTS).unwrap().linf < 1e-8);
        let q = qhj_residual(&series, &v, &OPTS).unwrap();
        assert!(q.linf < 1e-6, "{q:?}");
    }

    #[test]
    fn too_few_states_and_foreign_state() {
        let (psi, _) = plane(2.0);
        let series = evolve(&psi, &Potential::Free, 0.01, 0.01).unwrap();
        assert!(matches!(continuity_residual(&series, &OPTS), Err(QflowError::TooFewStates { .. })));
        let longer = evolve(&psi, &Potential::Free, 0.05, 0.01).unwrap();
        let stranger = psi.boost(2.0 * PI / 20.0);
        assert!(matches!(energy_momentum_components(&stranger, &longer, &OPTS), Err(QflowError::NotInSeries)));
    }

    #[test]
    fn csv_export_has_header_and_rows() {
        let (psi, _) = plane(1.0);
        let pf = polar_decompose(&psi, &OPTS);
        let mut buf = Vec::new();
        bohm_momentum(&pf).write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("x,value,masked\n"));
        assert_eq!(text.lines().count(), 257);
    }
}
