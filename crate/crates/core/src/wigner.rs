//! Wigner transform and the conditional mean momentum at a point, both as
//! the midpoint-constrained double sum over momentum pairs and in the
//! point-split derivative form, plus a five-way equivalence report against
//! `grad S`, the weak momentum and `T^{0j} / rho`.
//!
//! The discrete Wigner function is built on the spectrally refined grid
//! `y_r = x_min + r dx / 2`, so that with `sigma = l dx`
//!
//! `W(x_j, p_m) = (dx / 2 pi hbar) sum_l conj(psi(x_j - l dx/2)) psi(x_j + l dx/2) e^{-i p_m l dx / hbar}`
//!
//! on the momentum axis `p_m = m dp / 2`, `m = -n .. n`. For a localized
//! state, point pairs that straddle the periodic seam are dropped so the
//! result is the Wigner function on the line; a state with weight at the
//! edges is treated as periodic and keeps them.

use std::f64::consts::PI;
use std::io::{self, Write};

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{QflowError, Result};
use crate::grid::{fft, ifft, to_momentum_space, Grid1D, WaveFunction};
use crate::schrodinger::edge_tail_mass;
use crate::polar::{bohm_momentum, momentum_density, polar_decompose, FieldOnGrid, FieldOptions};
use crate::weak::weak_momentum_profile;

/// Relative size of the imaginary part tolerated before it is discarded.
const IMAGINARY_TOLERANCE: f64 = 1e-8;

/// Phase-space quasi-distribution sampled on `x_j` and `p_m`.
#[derive(Debug, Clone)]
pub struct WignerFunction {
    grid: Grid1D,
    momenta: Vec<f64>,
    /// Row-major, `values[j * n + m]`.
    values: Vec<f64>,
    imaginary_residue: f64,
    topology: Topology,
}

/// Momentum axis of the discrete Wigner function, ascending, `2n` entries.
pub fn wigner_momenta(grid: &Grid1D, hbar: f64) -> Vec<f64> {
    let n = grid.n() as i64;
    let half_dp = grid.dp(hbar) / 2.0;
    (-n..n).map(|m| m as f64 * half_dp).collect()
}

/// Band-limited interpolation of `psi` onto the `2n` points `x_min + r dx / 2`.
pub fn refine(psi: &WaveFunction) -> Vec<Complex64> {
    let n = psi.len();
    let mut spec = psi.amplitudes().to_vec();
    fft(&mut spec);
    let mut padded = vec![Complex64::new(0.0, 0.0); 2 * n];
    // The Nyquist bin is kept on the negative side, matching the derivative.
    for k in 0..n {
        let signed = if k >= n / 2 { k as i64 - n as i64 } else { k as i64 };
        padded[signed.rem_euclid(2 * n as i64) as usize] = spec[k];
    }
    ifft(&mut padded);
    padded.iter().map(|v| v * 2.0).collect()
}

/// Whether point pairs may wrap around the periodic seam.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Topology {
    Line,
    Ring,
}

/// Edge tail mass above which a state is treated as periodic.
pub const RING_EDGE_MASS: f64 = 1e-3;

/// Line for localized states, ring for states spread over the whole cell.
pub fn topology_of(psi: &WaveFunction) -> Topology {
    if edge_tail_mass(psi) < RING_EDGE_MASS { Topology::Line } else { Topology::Ring }
}

fn row_from_refined(refined: &[Complex64], j: usize, dx: f64, hbar: f64, topology: Topology) -> (Vec<f64>, f64) {
    let len = refined.len() as i64;
    let centre = 2 * j as i64;
    let mut f: Vec<Complex64> = (0..len)
        .map(|l| {
            let l = if l >= len / 2 { l - len } else { l };
            let (lo, hi) = (centre - l, centre + l);
            if topology == Topology::Line && (lo < 0 || hi < 0 || lo >= len || hi >= len) {
                return Complex64::new(0.0, 0.0);
            }
            refined[lo.rem_euclid(len) as usize].conj() * refined[hi.rem_euclid(len) as usize]
        })
        .collect();
    fft(&mut f);
    let scale = dx / (2.0 * PI * hbar);
    let half = (len / 2) as usize;
    let mut imag: f64 = 0.0;
    let row = (0..len as usize)
        .map(|m| {
            let v = f[(m + half) % len as usize] * scale;
            imag = imag.max(v.im.abs());
            v.re
        })
        .collect();
    (row, imag)
}

/// One `x` row of the Wigner function in ascending `p`, and the largest
/// imaginary part encountered.
pub fn wigner_row(psi: &WaveFunction, j: usize) -> (Vec<f64>, f64) {
    row_from_refined(&refine(psi), j, psi.grid().dx(), psi.hbar(), topology_of(psi))
}

/// Full table, `n x 2n` values. Use [`wigner_marginals`] or
/// [`write_wigner_csv`] for large grids.
pub fn wigner_transform(psi: &WaveFunction) -> WignerFunction {
    let n = psi.len();
    let refined = refine(psi);
    let topology = topology_of(psi);
    let mut values = Vec::with_capacity(2 * n * n);
    let mut imaginary_residue: f64 = 0.0;
    for j in 0..n {
        let (row, imag) = row_from_refined(&refined, j, psi.grid().dx(), psi.hbar(), topology);
        values.extend(row);
        imaginary_residue = imaginary_residue.max(imag);
    }
    WignerFunction {
        grid: *psi.grid(),
        momenta: wigner_momenta(psi.grid(), psi.hbar()),
        values,
        imaginary_residue,
        topology,
    }
}

impl WignerFunction {
    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn momenta(&self) -> &[f64] {
        &self.momenta
    }

    pub fn dp(&self) -> f64 {
        self.momenta[1] - self.momenta[0]
    }

    pub fn value(&self, j: usize, m: usize) -> f64 {
        self.values[j * self.momenta.len() + m]
    }

    pub fn row(&self, j: usize) -> &[f64] {
        let w = self.momenta.len();
        &self.values[j * w..(j + 1) * w]
    }

    pub fn topology(&self) -> Topology {
        self.topology
    }

    /// Largest discarded imaginary part.
    pub fn imaginary_residue(&self) -> f64 {
        self.imaginary_residue
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// `sum_p W dp`, one entry per `x_j`.
    pub fn position_marginal(&self) -> Vec<f64> {
        let dp = self.dp();
        (0..self.grid.n()).map(|j| self.row(j).iter().sum::<f64>() * dp).collect()
    }

    /// `sum_x W dx`, one entry per `p_m`.
    pub fn momentum_marginal(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.momenta.len()];
        for j in 0..self.grid.n() {
            for (o, w) in out.iter_mut().zip(self.row(j)) {
                *o += w;
            }
        }
        out.iter().map(|v| v * self.grid.dx()).collect()
    }

    /// `sum_p p W dp`, one entry per `x_j`.
    pub fn first_moment(&self) -> Vec<f64> {
        let dp = self.dp();
        (0..self.grid.n())
            .map(|j| self.row(j).iter().zip(&self.momenta).map(|(w, p)| w * p).sum::<f64>() * dp)
            .collect()
    }

    /// Writes `x,p,W` rows, keeping every `stride`-th point on both axes.
    pub fn write_csv<W: Write>(&self, out: &mut W, stride: usize) -> io::Result<()> {
        let stride = stride.max(1);
        writeln!(out, "x,p,W")?;
        for j in (0..self.grid.n()).step_by(stride) {
            let x = self.grid.x(j);
            for m in (0..self.momenta.len()).step_by(stride) {
                writeln!(out, "{:.17e},{:.17e},{:.17e}", x, self.momenta[m], self.value(j, m))?;
            }
        }
        Ok(())
    }
}

/// Streams `x,p,W` rows for `psi` without storing the table.
pub fn write_wigner_csv<W: Write>(psi: &WaveFunction, out: &mut W, stride: usize) -> io::Result<()> {
    let stride = stride.max(1);
    let refined = refine(psi);
    let topology = topology_of(psi);
    let g = psi.grid();
    let momenta = wigner_momenta(g, psi.hbar());
    writeln!(out, "x,p,W")?;
    for j in (0..g.n()).step_by(stride) {
        let (row, _) = row_from_refined(&refined, j, g.dx(), psi.hbar(), topology);
        for m in (0..momenta.len()).step_by(stride) {
            writeln!(out, "{:.17e},{:.17e},{:.17e}", g.x(j), momenta[m], row[m])?;
        }
    }
    Ok(())
}

/// Marginals and first moment computed row by row without storing the table.
#[derive(Debug, Clone)]
pub struct WignerMarginals {
    pub momenta: Vec<f64>,
    pub position: Vec<f64>,
    pub momentum: Vec<f64>,
    pub first_moment: Vec<f64>,
    pub imaginary_residue: f64,
}

pub fn wigner_marginals(psi: &WaveFunction) -> WignerMarginals {
    let n = psi.len();
    let momenta = wigner_momenta(psi.grid(), psi.hbar());
    let dp = momenta[1] - momenta[0];
    let dx = psi.grid().dx();
    let mut position = Vec::with_capacity(n);
    let mut first_moment = Vec::with_capacity(n);
    let mut momentum = vec![0.0; 2 * n];
    let refined = refine(psi);
    let topology = topology_of(psi);
    let mut imaginary_residue: f64 = 0.0;
    for j in 0..n {
        let (row, imag) = row_from_refined(&refined, j, dx, psi.hbar(), topology);
        imaginary_residue = imaginary_residue.max(imag);
        position.push(row.iter().sum::<f64>() * dp);
        first_moment.push(row.iter().zip(&momenta).map(|(w, p)| w * p).sum::<f64>() * dp);
        for (o, w) in momentum.iter_mut().zip(&row) {
            *o += w * dx;
        }
    }
    WignerMarginals { momenta, position, momentum, first_moment, imaginary_residue }
}

/// Momentum density on the Wigner momentum axis, the reference for the
/// `x` marginal. On the line this is `|phi(p)|^2` from the continuous
/// transform of the grid samples, and every second entry coincides with a
/// lattice momentum of [`to_momentum_space`]. On the ring the distribution
/// is a comb on the lattice momenta with weight `|phi_k|^2 dp` per tooth.
pub fn momentum_density_on_wigner_axis(psi: &WaveFunction) -> Vec<f64> {
    let g = psi.grid();
    let n = g.n();
    let hbar = psi.hbar();
    if topology_of(psi) == Topology::Ring {
        let phi = to_momentum_space(psi);
        return (0..2 * n).map(|m| if m % 2 == 0 { 2.0 * phi.amplitudes()[m / 2].norm_sqr() } else { 0.0 }).collect();
    }
    let mut padded = psi.amplitudes().to_vec();
    padded.resize(2 * n, Complex64::new(0.0, 0.0));
    fft(&mut padded);
    let scale = g.dx() * g.dx() / (2.0 * PI * hbar);
    (0..2 * n)
        .map(|m| {
            let k = (m as i64 - n as i64).rem_euclid(2 * n as i64) as usize;
            padded[k].norm_sqr() * scale
        })
        .collect()
}

/// Pair sums of the midpoint-constrained double integral, reorganized by the
/// momentum difference `d`: `G(d) = sum_k w(p_k, p_{k-d}) conj(phi_k) phi_{k-d}`.
struct PairSums {
    /// `d = -(n-1) ..= n-1` stored at `d + n - 1`.
    weighted: Vec<Complex64>,
    plain: Vec<Complex64>,
    dp: f64,
    hbar: f64,
    x_min: f64,
    n: usize,
}

/// `c(d) = sum_k conj(u_k) v_{k-d}` for all `d` via zero-padded transforms.
fn correlate(u: &[Complex64], v: &[Complex64]) -> Vec<Complex64> {
    let n = u.len();
    let mut uu = u.to_vec();
    uu.resize(2 * n, Complex64::new(0.0, 0.0));
    let mut vv = v.to_vec();
    vv.resize(2 * n, Complex64::new(0.0, 0.0));
    fft(&mut uu);
    fft(&mut vv);
    let mut prod: Vec<Complex64> = uu.iter().zip(&vv).map(|(a, b)| a.conj() * b).collect();
    ifft(&mut prod);
    // prod[s] = sum_k conj(u_k) v_{k+s}; d = -s.
    (0..2 * n - 1)
        .map(|idx| {
            let d = idx as i64 - (n as i64 - 1);
            prod[(-d).rem_euclid(2 * n as i64) as usize]
        })
        .collect()
}

fn pair_sums(psi: &WaveFunction) -> PairSums {
    let phi = to_momentum_space(psi);
    let a = phi.amplitudes();
    let p = phi.momenta();
    let pa: Vec<Complex64> = a.iter().zip(&p).map(|(z, p)| z * p).collect();
    let c1 = correlate(&pa, a);
    let c2 = correlate(a, &pa);
    let weighted = c1.iter().zip(&c2).map(|(x, y)| 0.5 * (x + y)).collect();
    let plain = correlate(a, a);
    PairSums { weighted, plain, dp: phi.dp(), hbar: psi.hbar(), x_min: psi.grid().x_min(), n: psi.len() }
}

impl PairSums {
    fn at(&self, sums: &[Complex64], x: f64) -> Complex64 {
        let n = self.n as i64;
        let c = self.dp * self.dp / (2.0 * PI * self.hbar);
        sums.iter()
            .enumerate()
            .map(|(idx, g)| {
                let d = idx as i64 - (n - 1);
                g * Complex64::from_polar(1.0, -(d as f64) * self.dp * x / self.hbar)
            })
            .sum::<Complex64>()
            * c
    }

    /// Values on every grid point by folding `d` modulo `n`.
    fn profile(&self, sums: &[Complex64]) -> Vec<Complex64> {
        let n = self.n;
        let mut h = vec![Complex64::new(0.0, 0.0); n];
        for (idx, g) in sums.iter().enumerate() {
            let d = idx as i64 - (n as i64 - 1);
            h[d.rem_euclid(n as i64) as usize] += g * Complex64::from_polar(1.0, -(d as f64) * self.dp * self.x_min / self.hbar);
        }
        fft(&mut h);
        let c = self.dp * self.dp / (2.0 * PI * self.hbar);
        h.into_iter().map(|v| v * c).collect()
    }
}

fn check_real(v: Complex64, scale: f64) -> Result<f64> {
    if v.im.abs() > IMAGINARY_TOLERANCE * scale {
        return Err(QflowError::InvalidParameter {
            name: "wigner.imaginary_residue",
            reason: format!("imaginary part {:.3e} exceeds {:.1e} relative", v.im, IMAGINARY_TOLERANCE),
        });
    }
    Ok(v.re)
}

/// Conditional mean momentum at `x` from the double sum over momentum pairs
/// with the midpoint constraint `P = (p + p') / 2`. `x` need not be a grid point.
pub fn conditional_momentum_integral(psi: &WaveFunction, x: f64, options: &FieldOptions) -> Result<f64> {
    let rho_max = psi.density().into_iter().fold(0.0, f64::max);
    let sums = pair_sums(psi);
    let rho = check_real(sums.at(&sums.plain, x), rho_max)?;
    if rho < options.eta * rho_max {
        return Err(QflowError::Node { x });
    }
    let flux = check_real(sums.at(&sums.weighted, x), rho_max * (1.0 + psi.grid().dp(psi.hbar()) * psi.len() as f64))?;
    Ok(flux / rho)
}

/// [`conditional_momentum_integral`] on every grid point, masked like the
/// polar derivative fields.
pub fn conditional_momentum_integral_profile(psi: &WaveFunction, options: &FieldOptions) -> Result<FieldOnGrid> {
    let pf = polar_decompose(psi, options);
    let sums = pair_sums(psi);
    let rho = sums.profile(&sums.plain);
    let flux = sums.profile(&sums.weighted);
    let rho_max = psi.density().into_iter().fold(0.0, f64::max);
    let p_scale = psi.grid().dp(psi.hbar()) * psi.len() as f64;
    let valid = pf.derivative_valid().to_vec();
    let mut values = Vec::with_capacity(psi.len());
    for i in 0..psi.len() {
        let r = check_real(rho[i], rho_max)?;
        let f = check_real(flux[i], rho_max * (1.0 + p_scale))?;
        values.push(if valid[i] { f / r } else { f64::NAN });
    }
    Ok(FieldOnGrid::new(*psi.grid(), values, valid))
}

/// Point-split form `hbar Im(conj(psi) psi') / rho` at grid point `x`.
pub fn conditional_momentum_derivative(psi: &WaveFunction, x: f64, options: &FieldOptions) -> Result<f64> {
    let g = psi.grid();
    let i = g.nearest_index(x);
    if !g.contains(x) || (g.x(i) - x).abs() > 1e-9 * g.dx() {
        return Err(QflowError::InvalidParameter { name: "wigner.x", reason: format!("{x} is not a grid point") });
    }
    let rho = psi.density();
    let rho_max = rho.iter().cloned().fold(0.0, f64::max);
    if rho[i] < options.eta * rho_max {
        return Err(QflowError::Node { x });
    }
    let a = psi.amplitudes()[i];
    let d = psi.derivative()[i];
    Ok(psi.hbar() * (a.conj() * d).im / rho[i])
}

pub fn conditional_momentum_derivative_profile(psi: &WaveFunction, options: &FieldOptions) -> FieldOnGrid {
    let pf = polar_decompose(psi, options);
    let valid = pf.derivative_valid().to_vec();
    let rho = psi.density();
    let h = psi.hbar();
    let values = psi
        .amplitudes()
        .iter()
        .zip(psi.derivative())
        .enumerate()
        .map(|(i, (a, d))| if valid[i] { h * (a.conj() * d).im / rho[i] } else { f64::NAN })
        .collect();
    FieldOnGrid::new(*psi.grid(), values, valid)
}

/// Names of the five routes in report order.
pub const ROUTES: [&str; 5] = ["pair_integral", "point_split", "grad_s", "weak_real", "t0j_over_rho"];

/// Pairwise deviations among the five conditional-momentum routes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquivalenceReport {
    pub routes: Vec<String>,
    /// `deviations[a][b]` is the largest `|route_a - route_b|` off-mask.
    pub deviations: Vec<Vec<f64>>,
    pub max_deviation: f64,
    pub worst_pair: (String, String),
    pub worst_x: f64,
    pub points: usize,
    pub tolerance: f64,
    pub passed: bool,
}

pub fn equivalence_report(psi: &WaveFunction, options: &FieldOptions, tolerance: f64) -> Result<EquivalenceReport> {
    let pf = polar_decompose(psi, options);
    let rho = psi.density();
    let t0j = momentum_density(psi);
    let fields = [
        conditional_momentum_integral_profile(psi, options)?.values,
        conditional_momentum_derivative_profile(psi, options).values,
        bohm_momentum(&pf).values,
        weak_momentum_profile(psi, options).real.values,
        t0j.iter().zip(&rho).map(|(j, r)| j / r).collect(),
    ];
    let valid = pf.derivative_valid();
    let mut deviations = vec![vec![0.0; 5]; 5];
    let (mut max_deviation, mut worst_pair, mut worst_x) = (0.0, (0, 1), f64::NAN);
    let mut points = 0;
    for i in (0..psi.len()).filter(|i| valid[*i]) {
        points += 1;
        for a in 0..5 {
            for b in a + 1..5 {
                let d = (fields[a][i] - fields[b][i]).abs();
                if d > deviations[a][b] {
                    deviations[a][b] = d;
                    deviations[b][a] = d;
                }
                if d > max_deviation {
                    max_deviation = d;
                    worst_pair = (a, b);
                    worst_x = psi.grid().x(i);
                }
            }
        }
    }
    Ok(EquivalenceReport {
        routes: ROUTES.iter().map(|s| s.to_string()).collect(),
        deviations,
        max_deviation,
        worst_pair: (ROUTES[worst_pair.0].to_string(), ROUTES[worst_pair.1].to_string()),
        worst_x,
        points,
        tolerance,
        passed: points > 0 && max_deviation < tolerance,
    })
}
