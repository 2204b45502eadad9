//! Short-time transition amplitudes, the kinked-path momentum `p_X`, and
//! lattice path sums for the free particle.
//!
//! Each slice carries the normalization `A(eps) = sqrt(m / (2 pi i hbar eps))`
//! (principal branch) so that the sum over paths reproduces the propagator.

use std::f64::consts::PI;
use std::io::{self, Write};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;

use crate::error::{QflowError, Result};
use crate::grid::{fft, ifft, to_momentum_space, Grid1D, WaveFunction};
use crate::polar::FieldOptions;

/// Largest number of interior configurations summed in exhaustive mode.
pub const EXHAUSTIVE_LIMIT: f64 = 1e7;

/// `m (x - x')^2 / (2 eps)`.
pub fn short_time_action(x: f64, x_prev: f64, eps: f64, mass: f64) -> f64 {
    mass * (x - x_prev).powi(2) / (2.0 * eps)
}

/// `sqrt(m / (2 pi i hbar eps))` on the principal branch.
pub fn slice_normalization(eps: f64, mass: f64, hbar: f64) -> Complex64 {
    (Complex64::new(mass, 0.0) / Complex64::new(0.0, 2.0 * PI * hbar * eps)).sqrt()
}

/// `<x| x'>` over one slice: `A(eps) exp(i S(x, x') / hbar)`.
pub fn transition_amplitude(x: f64, x_prev: f64, eps: f64, mass: f64, hbar: f64) -> Complex64 {
    slice_normalization(eps, mass, hbar) * Complex64::from_polar(1.0, short_time_action(x, x_prev, eps, mass) / hbar)
}

/// Backward and forward difference momenta at the middle point of a kinked
/// path `x' -> X -> x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentumTpa {
    /// `m (X - x') / eps`.
    pub backward: f64,
    /// `m (x - X) / eps`.
    pub forward: f64,
    /// `backward - forward`.
    pub p_x: f64,
}

pub fn momentum_tpa(x_prev: f64, x_mid: f64, x_next: f64, eps: f64, mass: f64) -> Result<MomentumTpa> {
    check_eps(eps)?;
    let backward = mass * (x_mid - x_prev) / eps;
    let forward = mass * (x_next - x_mid) / eps;
    Ok(MomentumTpa { backward, forward, p_x: backward - forward })
}

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps.is_finite() {
        Ok(())
    } else {
        Err(QflowError::InvalidParameter { name: "paths.eps", reason: format!("{eps} must be positive") })
    }
}

/// Spatial lattice and time slicing of a path sum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PathLattice {
    pub grid: Grid1D,
    pub slices: usize,
    pub eps: f64,
    pub mass: f64,
    pub hbar: f64,
}

impl PathLattice {
    pub fn new(grid: Grid1D, slices: usize, eps: f64, mass: f64, hbar: f64) -> Result<Self> {
        check_eps(eps)?;
        if slices < 1 {
            return Err(QflowError::InvalidParameter { name: "paths.slices", reason: "need at least one slice".into() });
        }
        if !(mass > 0.0 && hbar > 0.0) {
            return Err(QflowError::InvalidParameter { name: "units", reason: "mass and hbar must be positive".into() });
        }
        Ok(Self { grid, slices, eps, mass, hbar })
    }

    pub fn total_time(&self) -> f64 {
        self.slices as f64 * self.eps
    }

    /// Number of interior configurations, `n^(N-1)`.
    pub fn configurations(&self) -> f64 {
        (self.grid.n() as f64).powi(self.slices as i32 - 1)
    }

    fn amp(&self, x: f64, x_prev: f64) -> Complex64 {
        transition_amplitude(x, x_prev, self.eps, self.mass, self.hbar)
    }
}

/// Positions `x_0 .. x_N`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscretePath {
    pub positions: Vec<f64>,
}

/// Product of the `N` slice amplitudes along `path`.
pub fn path_amplitude(path: &DiscretePath, lattice: &PathLattice) -> Result<Complex64> {
    if path.positions.len() != lattice.slices + 1 {
        return Err(QflowError::LengthMismatch { expected: lattice.slices + 1, got: path.positions.len() });
    }
    Ok(path.positions.windows(2).map(|w| lattice.amp(w[1], w[0])).product())
}

/// Free-particle propagator `sqrt(m / (2 pi i hbar T)) exp(i m (x - x')^2 / (2 hbar T))`.
pub fn free_propagator(x_end: f64, x_start: f64, t: f64, mass: f64, hbar: f64) -> Complex64 {
    transition_amplitude(x_end, x_start, t, mass, hbar)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum SumMode {
    Exhaustive,
    /// Flat sampling of interior lattice points with the amplitude as weight.
    MonteCarlo { samples: usize, seed: u64, tolerance: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PropagatorEstimate {
    pub re: f64,
    pub im: f64,
    /// Standard error of a Monte Carlo estimate, zero when exhaustive.
    pub stderr: f64,
    pub paths: u64,
}

impl PropagatorEstimate {
    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }
}

/// Sum over interior lattice assignments of the path amplitude times `dx^(N-1)`.
pub fn lattice_propagator(x_start: f64, x_end: f64, lattice: &PathLattice, mode: SumMode) -> Result<PropagatorEstimate> {
    let n = lattice.grid.n();
    let dx = lattice.grid.dx();
    let interior = lattice.slices - 1;
    let xs = lattice.grid.xs();
    match mode {
        SumMode::Exhaustive => {
            let configs = lattice.configurations();
            if configs > EXHAUSTIVE_LIMIT {
                return Err(QflowError::ExhaustiveTooLarge { configs, limit: EXHAUSTIVE_LIMIT });
            }
            let mut idx = vec![0usize; interior];
            let mut path = vec![0.0; lattice.slices + 1];
            path[0] = x_start;
            path[lattice.slices] = x_end;
            let mut total = Complex64::new(0.0, 0.0);
            let mut count = 0u64;
            loop {
                for (k, i) in idx.iter().enumerate() {
                    path[k + 1] = xs[*i];
                }
                total += path.windows(2).map(|w| lattice.amp(w[1], w[0])).product::<Complex64>();
                count += 1;
                let mut k = 0;
                while k < interior {
                    idx[k] += 1;
                    if idx[k] < n {
                        break;
                    }
                    idx[k] = 0;
                    k += 1;
                }
                if k == interior {
                    break;
                }
            }
            let value = total * dx.powi(interior as i32);
            Ok(PropagatorEstimate { re: value.re, im: value.im, stderr: 0.0, paths: count })
        }
        SumMode::MonteCarlo { samples, seed, tolerance } => {
            if samples < 2 {
                return Err(QflowError::InvalidParameter { name: "paths.samples", reason: "need at least 2".into() });
            }
            let volume = (n as f64 * dx).powi(interior as i32);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut path = vec![0.0; lattice.slices + 1];
            path[0] = x_start;
            path[lattice.slices] = x_end;
            let (mut sum, mut sum_sq) = (Complex64::new(0.0, 0.0), 0.0);
            for _ in 0..samples {
                for slot in path.iter_mut().take(lattice.slices).skip(1) {
                    *slot = xs[rng.gen_range(0..n)];
                }
                let a: Complex64 = path.windows(2).map(|w| lattice.amp(w[1], w[0])).product::<Complex64>() * volume;
                sum += a;
                sum_sq += a.norm_sqr();
            }
            let count = samples as f64;
            let mean = sum / count;
            let variance = (sum_sq / count - mean.norm_sqr()).max(0.0) * count / (count - 1.0);
            let stderr = (variance / count).sqrt();
            if stderr > tolerance {
                return Err(QflowError::MonteCarloVariance { stderr, tolerance });
            }
            Ok(PropagatorEstimate { re: mean.re, im: mean.im, stderr, paths: samples as u64 })
        }
    }
}

/// Lattice propagator from `x_start` to every lattice point, evaluated slice by
/// slice as repeated discrete convolutions with the short-time kernel. This
/// is the same sum as [`lattice_propagator`] in exhaustive mode.
pub fn lattice_propagator_row(x_start: f64, lattice: &PathLattice) -> Vec<Complex64> {
    let n = lattice.grid.n();
    let dx = lattice.grid.dx();
    let xs = lattice.grid.xs();
    let mut row: Vec<Complex64> = xs.iter().map(|y| lattice.amp(*y, x_start)).collect();
    if lattice.slices == 1 {
        return row;
    }
    let mut kernel = vec![Complex64::new(0.0, 0.0); 2 * n];
    for d in -(n as i64 - 1)..n as i64 {
        kernel[d.rem_euclid(2 * n as i64) as usize] = lattice.amp(d as f64 * dx, 0.0) * dx;
    }
    fft(&mut kernel);
    for _ in 1..lattice.slices {
        let mut padded = row.clone();
        padded.resize(2 * n, Complex64::new(0.0, 0.0));
        fft(&mut padded);
        for (a, k) in padded.iter_mut().zip(&kernel) {
            *a *= k;
        }
        ifft(&mut padded);
        padded.truncate(n);
        row = padded;
    }
    row
}

/// Modulus ratio and phase difference of `value` against `reference`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PropagatorComparison {
    pub modulus_error: f64,
    pub phase_error: f64,
}

impl PropagatorComparison {
    pub fn new(value: Complex64, reference: Complex64) -> Self {
        Self {
            modulus_error: (value.norm() / reference.norm() - 1.0).abs(),
            phase_error: (value / reference).arg().abs(),
        }
    }

    pub fn within(&self, tol: f64) -> bool {
        self.modulus_error < tol && self.phase_error < tol
    }
}

/// Quadrature `int K_b(x_end, y) K_a(y, x_start) dy` of two propagator rows
/// sampled on the lattice points.
pub fn compose(grid: &Grid1D, to_end: &[Complex64], from_start: &[Complex64]) -> Complex64 {
    to_end.iter().zip(from_start).map(|(a, b)| a * b).sum::<Complex64>() * grid.dx()
}

/// One row of the propagator comparison table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PropagatorRow {
    pub slices: usize,
    pub n: usize,
    pub eps: f64,
    pub re: f64,
    pub im: f64,
    pub analytic_re: f64,
    pub analytic_im: f64,
}

pub fn write_propagator_csv<W: Write>(rows: &[PropagatorRow], out: &mut W) -> io::Result<()> {
    writeln!(out, "N,n,eps,re,im,analytic_re,analytic_im")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}",
            r.slices, r.n, r.eps, r.re, r.im, r.analytic_re, r.analytic_im
        )?;
    }
    Ok(())
}

pub fn write_paths_csv<W: Write>(paths: &[DiscretePath], out: &mut W) -> io::Result<()> {
    writeln!(out, "path_id,slice,x")?;
    for (id, p) in paths.iter().enumerate() {
        for (k, x) in p.positions.iter().enumerate() {
            writeln!(out, "{id},{k},{x:.17e}")?;
        }
    }
    Ok(())
}

/// Mean momentum at `x` from the pair sum over incoming `phi(p')` and
/// outgoing `conj(phi(p))` momenta, each pair weighted by its midpoint
/// `(p + p') / 2`. The result is the `eps -> 0` limit and does not depend
/// on `eps`, which is validated only.
pub fn spray_mean_momentum(psi: &WaveFunction, x: f64, eps: f64, options: &FieldOptions) -> Result<f64> {
    check_eps(eps)?;
    let g = psi.grid();
    if !g.contains(x) {
        return Err(QflowError::LeftGrid { x, t: f64::NAN });
    }
    let hbar = psi.hbar();
    let phi = to_momentum_space(psi);
    let amps = phi.amplitudes();
    let p = phi.momenta();
    let w_max = amps.iter().map(|a| a.norm_sqr()).fold(0.0, f64::max);
    let active: Vec<usize> = (0..amps.len()).filter(|k| amps[*k].norm_sqr() > 1e-24 * w_max).collect();
    let waves: Vec<Complex64> = active.iter().map(|k| amps[*k] * Complex64::from_polar(1.0, p[*k] * x / hbar)).collect();
    let (mut flux, mut rho) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
    for (a, out) in active.iter().zip(&waves) {
        for (b, inc) in active.iter().zip(&waves) {
            let pair = out.conj() * inc;
            flux += pair * (0.5 * (p[*a] + p[*b]));
            rho += pair;
        }
    }
    let rho_max = psi.density().into_iter().fold(0.0, f64::max);
    let scale = phi.dp() * phi.dp() / (2.0 * PI * hbar);
    if rho.re * scale < options.eta * rho_max {
        return Err(QflowError::Node { x });
    }
    Ok(flux.re / rho.re)
}

/// Mean `|p_X|` for three-point path segments drawn from the imaginary-time
/// free kernel, whose increments are normal with variance `hbar eps / m`.
pub fn sample_mean_abs_px(eps: f64, mass: f64, hbar: f64, samples: usize, rng: &mut impl Rng) -> Result<(f64, f64)> {
    check_eps(eps)?;
    if samples < 2 {
        return Err(QflowError::InvalidParameter { name: "paths.samples", reason: "need at least 2".into() });
    }
    let normal = Normal::new(0.0, (hbar * eps / mass).sqrt())
        .map_err(|e| QflowError::InvalidParameter { name: "paths.eps", reason: e.to_string() })?;
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for _ in 0..samples {
        let x_mid = normal.sample(rng);
        let x_next = x_mid + normal.sample(rng);
        let v = momentum_tpa(0.0, x_mid, x_next, eps, mass)?.p_x.abs();
        sum += v;
        sum_sq += v * v;
    }
    let count = samples as f64;
    let mean = sum / count;
    let stderr = ((sum_sq / count - mean * mean).max(0.0) / (count - 1.0)).sqrt();
    Ok((mean, stderr))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoughnessReport {
    pub eps: Vec<f64>,
    pub mean_abs_px: Vec<f64>,
    pub stderr: Vec<f64>,
    /// Negated log-log slope of mean `|p_X|` against `eps`.
    pub exponent: f64,
}

/// Least-squares exponent of `mean |p_X| ~ eps^(-exponent)`.
pub fn roughness_exponent(eps: &[f64], mass: f64, hbar: f64, samples: usize, seed: u64) -> Result<RoughnessReport> {
    if eps.len() < 2 {
        return Err(QflowError::InvalidParameter { name: "paths.roughness_eps", reason: "need at least two values".into() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mean_abs_px = Vec::with_capacity(eps.len());
    let mut stderr = Vec::with_capacity(eps.len());
    for e in eps {
        let (m, s) = sample_mean_abs_px(*e, mass, hbar, samples, &mut rng)?;
        mean_abs_px.push(m);
        stderr.push(s);
    }
    let lx: Vec<f64> = eps.iter().map(|e| e.ln()).collect();
    let ly: Vec<f64> = mean_abs_px.iter().map(|v| v.ln()).collect();
    let k = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / k, ly.iter().sum::<f64>() / k);
    let cov: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let var: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    Ok(RoughnessReport { eps: eps.to_vec(), mean_abs_px, stderr, exponent: -cov / var })
}

/// Draws `count` paths of `slices` steps from the imaginary-time kernel
/// starting at `x0`.
pub fn sample_paths(
    x0: f64,
    slices: usize,
    eps: f64,
    mass: f64,
    hbar: f64,
    count: usize,
    seed: u64,
) -> Result<Vec<DiscretePath>> {
    check_eps(eps)?;
    let normal = Normal::new(0.0, (hbar * eps / mass).sqrt())
        .map_err(|e| QflowError::InvalidParameter { name: "paths.eps", reason: e.to_string() })?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..count)
        .map(|_| {
            let mut x = x0;
            let mut positions = vec![x];
            for _ in 0..slices {
                x += normal.sample(&mut rng);
                positions.push(x);
            }
            DiscretePath { positions }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use crate::polar::{bohm_momentum, polar_decompose};
    use crate::schrodinger::{evolve, initial_state, InitialState, Potential};

    #[test]
    fn action_examples() {
        assert_eq!(short_time_action(1.0, 0.0, 1.0, 1.0), 0.5);
        assert_eq!(short_time_action(2.5, 2.5, 0.3, 1.0), 0.0);
        assert_eq!(short_time_action(3.0, 1.0, 0.5, 2.0), 8.0);
    }

    #[test]
    fn amplitude_modulus_and_phase() {
        let eps = 0.37;
        let modulus = (1.0 / (2.0 * PI * eps)).sqrt();
        for (x, y) in [(0.0, 0.0), (1.0, -2.0), (5.0, 0.1)] {
            assert!((transition_amplitude(x, y, eps, 1.0, 1.0).norm() - modulus).abs() < 1e-14);
        }
        assert!((transition_amplitude(0.4, 0.4, eps, 1.0, 1.0).arg() + PI / 4.0).abs() < 1e-14);
        // m (x - x')^2 / (2 eps hbar) = pi.
        let d = (2.0 * PI * eps).sqrt();
        let rel = transition_amplitude(d, 0.0, eps, 1.0, 1.0) / transition_amplitude(0.0, 0.0, eps, 1.0, 1.0);
        assert!((rel - Complex64::new(-1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn kinked_path_momenta() {
        let straight = momentum_tpa(0.0, 1.0, 2.0, 1.0, 1.0).unwrap();
        assert_eq!((straight.backward, straight.forward, straight.p_x), (1.0, 1.0, 0.0));
        let kink = momentum_tpa(0.0, 1.0, 3.0, 1.0, 1.0).unwrap();
        assert_eq!((kink.backward, kink.forward, kink.p_x), (1.0, 2.0, -1.0));
        let heavy = momentum_tpa(0.0, 1.0, 3.0, 1.0, 2.0).unwrap();
        assert_eq!((heavy.backward, heavy.forward, heavy.p_x), (2.0, 4.0, -2.0));
        assert!(momentum_tpa(0.0, 1.0, 2.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn path_amplitude_products() {
        let g = make_grid(-5.0, 5.0, 16).unwrap();
        let one = PathLattice::new(g, 1, 0.2, 1.0, 1.0).unwrap();
        let p = DiscretePath { positions: vec![0.3, -0.7] };
        assert_eq!(path_amplitude(&p, &one).unwrap(), transition_amplitude(-0.7, 0.3, 0.2, 1.0, 1.0));
        let four = PathLattice::new(g, 4, 0.2, 1.0, 1.0).unwrap();
        let wiggly = DiscretePath { positions: vec![0.0, 1.0, -2.0, 0.5, 0.25] };
        let a = path_amplitude(&wiggly, &four).unwrap();
        assert!((a.norm() - slice_normalization(0.2, 1.0, 1.0).norm().powi(4)).abs() < 1e-12);
        let straight = DiscretePath { positions: vec![0.0, 0.5, 1.0, 1.5, 2.0] };
        let a = path_amplitude(&straight, &four).unwrap();
        let expected = 4.0 * short_time_action(0.5, 0.0, 0.2, 1.0) - PI;
        assert!((Complex64::from_polar(1.0, expected) - a / a.norm()).norm() < 1e-12);
        assert!(path_amplitude(&p, &four).is_err());
    }

    fn lattice(n: usize, slices: usize, eps: f64) -> PathLattice {
        PathLattice::new(make_grid(-10.0, 10.0, n).unwrap(), slices, eps, 1.0, 1.0).unwrap()
    }

    #[test]
    fn single_slice_is_the_transition_amplitude() {
        let l = lattice(64, 1, 0.3);
        let k = lattice_propagator(0.2, 1.1, &l, SumMode::Exhaustive).unwrap();
        assert_eq!(k.value(), transition_amplitude(1.1, 0.2, 0.3, 1.0, 1.0));
        assert_eq!(k.paths, 1);
    }

    #[test]
    fn two_slice_sum_matches_free_propagator() {
        let l = lattice(1024, 2, 0.5);
        let k = lattice_propagator(0.0, 1.0, &l, SumMode::Exhaustive).unwrap();
        let c = PropagatorComparison::new(k.value(), free_propagator(1.0, 0.0, 1.0, 1.0, 1.0));
        assert!(c.within(0.01), "{c:?}");
        let back = lattice_propagator(1.0, 0.0, &l, SumMode::Exhaustive).unwrap();
        assert!((back.value() - k.value()).norm() < 1e-10);
    }

    #[test]
    fn transfer_row_matches_exhaustive_sum() {
        let l = lattice(64, 3, 0.4);
        let row = lattice_propagator_row(0.3, &l);
        for j in [0, 17, 40, 63] {
            let direct = lattice_propagator(0.3, l.grid.x(j), &l, SumMode::Exhaustive).unwrap().value();
            assert!((row[j] - direct).norm() < 1e-10 * direct.norm().max(1.0));
        }
    }

    #[test]
    fn composition_of_half_time_sums() {
        // Truncation of the oscillatory sums costs about 1 / (2 L sqrt(pi m / hbar eps)).
        let g = make_grid(-20.0, 20.0, 32768).unwrap();
        let (t, x0, x1) = (0.1, 0.0, 1.0);
        let full = PathLattice::new(g, 2, t / 2.0, 1.0, 1.0).unwrap();
        let half = PathLattice::new(g, 2, t / 4.0, 1.0, 1.0).unwrap();
        let direct = lattice_propagator(x0, x1, &full, SumMode::Exhaustive).unwrap().value();
        let exact = free_propagator(x1, x0, t, 1.0, 1.0);
        assert!(PropagatorComparison::new(direct, exact).within(0.01));
        let from = lattice_propagator_row(x0, &half);
        let to = lattice_propagator_row(x1, &half);
        // The free kernel is symmetric, so the row from x1 also gives K(x1 <- y).
        let composed = compose(&g, &to, &from);
        let c = PropagatorComparison::new(composed, direct);
        assert!(c.within(0.01), "{c:?}");
    }

    #[test]
    fn exhaustive_limit() {
        let l = lattice(1024, 4, 0.1);
        assert!(matches!(lattice_propagator(0.0, 1.0, &l, SumMode::Exhaustive), Err(QflowError::ExhaustiveTooLarge { .. })));
    }

    #[test]
    fn monte_carlo_agrees_with_exhaustive() {
        let l = lattice(64, 2, 0.5);
        let exact = lattice_propagator(0.0, 1.0, &l, SumMode::Exhaustive).unwrap().value();
        let mc = lattice_propagator(0.0, 1.0, &l, SumMode::MonteCarlo { samples: 200_000, seed: 7, tolerance: 1.0 }).unwrap();
        assert!((mc.value() - exact).norm() < 4.0 * mc.stderr, "{mc:?} {exact}");
        let again = lattice_propagator(0.0, 1.0, &l, SumMode::MonteCarlo { samples: 200_000, seed: 7, tolerance: 1.0 }).unwrap();
        assert_eq!(mc, again);
        assert!(matches!(
            lattice_propagator(0.0, 1.0, &l, SumMode::MonteCarlo { samples: 100, seed: 7, tolerance: 1e-6 }),
            Err(QflowError::MonteCarloVariance { .. })
        ));
    }

    #[test]
    fn spray_mean_matches_phase_gradient() {
        let g = make_grid(-10.0, 10.0, 256).unwrap();
        let k0 = 2.0 * PI * 3.0 / 20.0;
        let pw = initial_state(&InitialState::PlaneWave { k0 }, g, 1.0, 1.0).unwrap();
        let opts = FieldOptions::default();
        for eps in [1e-3, 0.1] {
            assert!((spray_mean_momentum(&pw, 0.77, eps, &opts).unwrap() - k0).abs() < 1e-10);
        }
        let psi = initial_state(&InitialState::Gaussian { x0: 0.0, sigma: 1.0, k0: 0.0 }, g, 1.0, 1.0).unwrap();
        assert!(spray_mean_momentum(&psi, 0.5, 0.01, &opts).unwrap().abs() < 1e-10);
        let series = evolve(&psi, &Potential::Free, 1.0, 0.01).unwrap();
        let state = series.states.last().unwrap();
        let gs = bohm_momentum(&polar_decompose(state, &opts));
        for i in [100, 120, 128, 140, 160] {
            let v = spray_mean_momentum(state, g.x(i), 0.01, &opts).unwrap();
            assert!((v - gs.values[i]).abs() < 1e-6);
        }
        assert!(spray_mean_momentum(&psi, 0.0, -1.0, &opts).is_err());
    }

    #[test]
    fn roughness_grows_like_inverse_root_eps() {
        let eps: Vec<f64> = (0..5).map(|k| 1e-2 * 10f64.powf(-k as f64 / 4.0)).collect();
        let r = roughness_exponent(&eps, 1.0, 1.0, 20_000, 3).unwrap();
        assert!((0.45..0.55).contains(&r.exponent), "{r:?}");
        // Oracle: E|p_X| = sqrt(2 m hbar / eps) sqrt(2 / pi).
        let expected = (2.0 / eps[0]).sqrt() * (2.0 / PI).sqrt();
        assert!((r.mean_abs_px[0] - expected).abs() < 5.0 * r.stderr[0]);
    }

    #[test]
    fn sampled_paths_are_reproducible() {
        let a = sample_paths(0.0, 5, 0.01, 1.0, 1.0, 3, 11).unwrap();
        assert_eq!(a, sample_paths(0.0, 5, 0.01, 1.0, 1.0, 3, 11).unwrap());
        let mut buf = Vec::new();
        write_paths_csv(&a, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 1 + 18);
    }
}
