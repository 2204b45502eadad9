//! Uniform periodic grid, wavefunction container and the position/momentum
//! spectral transforms everything else is built on.
//!
//! Conventions: `x_i = x_min + i dx` for `i = 0..n`, periodic with period
//! `n dx`. Momentum amplitudes follow
//! `psi(x) = (2 pi hbar)^(-1/2) sum_p phi(p) e^{i p x / hbar} dp`, so a grid
//! plane wave `e^{i k0 x}` lands on the single bin `p = hbar k0`.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{QflowError, Result};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn forward_plan(n: usize) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft_forward(n))
}

fn inverse_plan(n: usize) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(n))
}

/// Unnormalized forward DFT, `X_k = sum_j x_j e^{-2 pi i jk/n}`.
pub(crate) fn fft(data: &mut [Complex64]) {
    forward_plan(data.len()).process(data);
}

/// Normalized inverse DFT, so that `ifft(fft(x)) == x`.
pub(crate) fn ifft(data: &mut [Complex64]) {
    let n = data.len();
    inverse_plan(n).process(data);
    let scale = 1.0 / n as f64;
    for v in data.iter_mut() {
        *v *= scale;
    }
}

/// Uniform 1D grid with periodic boundaries.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Grid1D {
    x_min: f64,
    x_max: f64,
    n: usize,
    dx: f64,
}

impl Grid1D {
    /// Builds a grid of `n` points covering `[x_min, x_max)`.
    pub fn new(x_min: f64, x_max: f64, n: usize) -> Result<Self> {
        if n < 16 || !n.is_power_of_two() {
            return Err(QflowError::GridSize(n));
        }
        if !(x_max > x_min) || !x_min.is_finite() || !x_max.is_finite() {
            return Err(QflowError::DegenerateInterval { x_min, x_max });
        }
        Ok(Self { x_min, x_max, n, dx: (x_max - x_min) / n as f64 })
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn length(&self) -> f64 {
        self.x_max - self.x_min
    }

    /// Momentum spacing `2 pi hbar / (n dx)`.
    pub fn dp(&self, hbar: f64) -> f64 {
        2.0 * PI * hbar / self.length()
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.dx
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.x(i)).collect()
    }

    /// Signed integer frequency of FFT bin `k`, in `[-n/2, n/2)`.
    pub fn signed_index(&self, k: usize) -> i64 {
        let n = self.n as i64;
        let k = k as i64;
        if k < n / 2 {
            k
        } else {
            k - n
        }
    }

    /// Wavenumbers in FFT order.
    pub fn wavenumbers(&self) -> Vec<f64> {
        let dk = 2.0 * PI / self.length();
        (0..self.n).map(|k| dk * self.signed_index(k) as f64).collect()
    }

    /// Nearest grid index to `x`, wrapping periodically.
    pub fn nearest_index(&self, x: f64) -> usize {
        let r = ((x - self.x_min) / self.dx).round() as i64;
        r.rem_euclid(self.n as i64) as usize
    }

    /// True if `x` lies in `[x_min, x_max)`.
    pub fn contains(&self, x: f64) -> bool {
        x >= self.x_min && x < self.x_max
    }

    pub fn same_as(&self, other: &Grid1D) -> bool {
        self.n == other.n
            && (self.x_min - other.x_min).abs() <= 1e-12 * self.length()
            && (self.x_max - other.x_max).abs() <= 1e-12 * self.length()
    }
}

/// Convenience wrapper matching the operation name used in docs and configs.
pub fn make_grid(x_min: f64, x_max: f64, n: usize) -> Result<Grid1D> {
    Grid1D::new(x_min, x_max, n)
}

/// Complex amplitudes on a [`Grid1D`] together with the units they live in.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveFunction {
    grid: Grid1D,
    amplitudes: Vec<Complex64>,
    hbar: f64,
    mass: f64,
}

impl WaveFunction {
    pub fn new(grid: Grid1D, amplitudes: Vec<Complex64>, hbar: f64, mass: f64) -> Result<Self> {
        if amplitudes.len() != grid.n() {
            return Err(QflowError::LengthMismatch { expected: grid.n(), got: amplitudes.len() });
        }
        if !(hbar > 0.0) {
            return Err(QflowError::InvalidParameter { name: "hbar", reason: format!("{hbar} must be > 0") });
        }
        if !(mass > 0.0) {
            return Err(QflowError::InvalidParameter { name: "mass", reason: format!("{mass} must be > 0") });
        }
        Ok(Self { grid, amplitudes, hbar, mass })
    }

    /// Samples `f(x)` on the grid.
    pub fn from_fn(grid: Grid1D, hbar: f64, mass: f64, f: impl Fn(f64) -> Complex64) -> Result<Self> {
        let amps = grid.xs().into_iter().map(f).collect();
        Self::new(grid, amps, hbar, mass)
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    /// Same grid and units, new amplitudes.
    pub fn with_amplitudes(&self, amplitudes: Vec<Complex64>) -> Result<Self> {
        Self::new(self.grid, amplitudes, self.hbar, self.mass)
    }

    pub fn density(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    /// `sum |psi_i|^2 dx`.
    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>() * self.grid.dx()
    }

    pub fn normalize(&self) -> Result<Self> {
        let norm = self.norm_sqr();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(QflowError::ZeroNorm);
        }
        let s = 1.0 / norm.sqrt();
        self.with_amplitudes(self.amplitudes.iter().map(|a| a * s).collect())
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self { amplitudes: self.amplitudes.iter().map(|a| a * c).collect(), ..self.clone() }
    }

    /// Multiplies by `e^{i k x}`, a Galilean momentum boost by `hbar k`.
    pub fn boost(&self, k: f64) -> Self {
        let amplitudes = self
            .amplitudes
            .iter()
            .enumerate()
            .map(|(i, a)| a * Complex64::from_polar(1.0, k * self.grid.x(i)))
            .collect();
        Self { amplitudes, ..self.clone() }
    }

    /// `<x>` by quadrature.
    pub fn mean_position(&self) -> f64 {
        let dx = self.grid.dx();
        self.amplitudes.iter().enumerate().map(|(i, a)| a.norm_sqr() * self.grid.x(i)).sum::<f64>() * dx
            / self.norm_sqr()
    }

    /// Position spread `sqrt(<x^2> - <x>^2)`.
    pub fn position_width(&self) -> f64 {
        let mean = self.mean_position();
        let dx = self.grid.dx();
        let var = self
            .amplitudes
            .iter()
            .enumerate()
            .map(|(i, a)| a.norm_sqr() * (self.grid.x(i) - mean).powi(2))
            .sum::<f64>()
            * dx
            / self.norm_sqr();
        var.sqrt()
    }

    /// `<p>` computed in momentum space.
    pub fn mean_momentum(&self) -> f64 {
        let phi = to_momentum_space(self);
        let dp = phi.dp();
        phi.momenta().iter().zip(phi.amplitudes()).map(|(p, a)| p * a.norm_sqr()).sum::<f64>() * dp
            / self.norm_sqr()
    }

    /// Spectral first derivative `d psi / dx`.
    pub fn derivative(&self) -> Vec<Complex64> {
        let k = self.grid.wavenumbers();
        let mut data = self.amplitudes.clone();
        fft(&mut data);
        for (d, kk) in data.iter_mut().zip(&k) {
            *d *= Complex64::new(0.0, *kk);
        }
        ifft(&mut data);
        data
    }

    /// Action of the momentum operator, `-i hbar d psi / dx`, evaluated spectrally.
    pub fn momentum_action(&self) -> Self {
        let h = self.hbar;
        let amplitudes = self.derivative().into_iter().map(|d| Complex64::new(0.0, -h) * d).collect();
        Self { amplitudes, ..self.clone() }
    }

    /// Relative weight of the Nyquist momentum bin, `|phi(p_nyq)|^2 dp`.
    pub fn nyquist_content(&self) -> f64 {
        let phi = to_momentum_space(self);
        phi.amplitudes()[0].norm_sqr() * phi.dp()
    }
}

/// `sum conj(phi_i) psi_i dx`.
pub fn inner_product(phi: &WaveFunction, psi: &WaveFunction) -> Result<Complex64> {
    if !phi.grid.same_as(&psi.grid) {
        return Err(QflowError::GridMismatch);
    }
    let s: Complex64 = phi.amplitudes.iter().zip(&psi.amplitudes).map(|(a, b)| a.conj() * b).sum();
    Ok(s * phi.grid.dx())
}

/// Momentum-space amplitudes on the conjugate axis, stored in ascending `p`
/// from `-n/2 dp` to `(n/2 - 1) dp`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentumAmplitudes {
    grid: Grid1D,
    hbar: f64,
    mass: f64,
    amplitudes: Vec<Complex64>,
}

impl MomentumAmplitudes {
    pub fn dp(&self) -> f64 {
        self.grid.dp(self.hbar)
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn momentum(&self, m: usize) -> f64 {
        (m as f64 - (self.grid.n() / 2) as f64) * self.dp()
    }

    pub fn momenta(&self) -> Vec<f64> {
        (0..self.amplitudes.len()).map(|m| self.momentum(m)).collect()
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    /// `sum |phi|^2 dp`.
    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>() * self.dp()
    }

    /// Inverse of [`to_momentum_space`].
    pub fn to_position_space(&self) -> WaveFunction {
        let n = self.grid.n();
        let half = n / 2;
        let dx = self.grid.dx();
        let scale = (2.0 * PI * self.hbar).sqrt() / dx;
        let x_min = self.grid.x_min();
        let mut data = vec![Complex64::new(0.0, 0.0); n];
        for (m, a) in self.amplitudes.iter().enumerate() {
            let k = (m + half) % n;
            let p = self.momentum(m);
            data[k] = a * Complex64::from_polar(scale, p * x_min / self.hbar);
        }
        ifft(&mut data);
        WaveFunction { grid: self.grid, amplitudes: data, hbar: self.hbar, mass: self.mass }
    }
}

/// Discrete Fourier transform to momentum space with the module conventions.
pub fn to_momentum_space(psi: &WaveFunction) -> MomentumAmplitudes {
    let grid = psi.grid;
    let n = grid.n();
    let half = n / 2;
    let hbar = psi.hbar;
    let dp = grid.dp(hbar);
    let scale = grid.dx() / (2.0 * PI * hbar).sqrt();
    let mut data = psi.amplitudes.clone();
    fft(&mut data);
    let amplitudes = (0..n)
        .map(|m| {
            let k = (m + half) % n;
            let p = (m as f64 - half as f64) * dp;
            data[k] * Complex64::from_polar(scale, -p * grid.x_min() / hbar)
        })
        .collect();
    MomentumAmplitudes { grid, hbar, mass: psi.mass, amplitudes }
}
