//! Weak values `<phi|A psi> / <phi|psi>` and the position-post-selected weak
//! momentum `-i hbar psi'(X) / psi(X)`, whose real part is `grad S` and whose
//! imaginary part is `-hbar grad R / R`.

use std::io::{self, Write};

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{QflowError, Result};
use crate::grid::{inner_product, WaveFunction};
use crate::polar::{polar_decompose, FieldOnGrid, FieldOptions};
use crate::schrodinger::EvolutionSeries;
use crate::trajectories::{integrate_ensemble, SeedFailure, TrajectoryEnsemble, VelocityField};

/// Relative overlap below which a weak value is reported as ill-conditioned.
pub const DEFAULT_OVERLAP_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeakValueResult {
    /// `None` when the overlap is below the floor.
    #[serde(serialize_with = "serialize_complex")]
    pub value: Option<Complex64>,
    /// Post-selected position, if the post-selection is a position bra.
    pub postselection: Option<f64>,
    pub overlap_magnitude: f64,
    pub ill_conditioned: bool,
}

fn serialize_complex<S: serde::Serializer>(v: &Option<Complex64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match v {
        Some(z) => [z.re, z.im].serialize(s),
        None => s.serialize_none(),
    }
}

impl WeakValueResult {
    pub fn is_ill_conditioned(&self) -> bool {
        self.ill_conditioned
    }
}

/// `<phi|A psi> / <phi|psi>` by quadrature. The overlap floor is relative to
/// `|phi| |psi|`.
pub fn weak_value(
    op_apply: impl Fn(&WaveFunction) -> WaveFunction,
    phi_post: &WaveFunction,
    psi_pre: &WaveFunction,
    floor: f64,
) -> Result<WeakValueResult> {
    let overlap = inner_product(phi_post, psi_pre)?;
    let scale = (phi_post.norm_sqr() * psi_pre.norm_sqr()).sqrt();
    let overlap_magnitude = overlap.norm();
    if overlap_magnitude <= floor * scale {
        return Ok(WeakValueResult { value: None, postselection: None, overlap_magnitude, ill_conditioned: true });
    }
    let numerator = inner_product(phi_post, &op_apply(psi_pre))?;
    Ok(WeakValueResult {
        value: Some(numerator / overlap),
        postselection: None,
        overlap_magnitude,
        ill_conditioned: false,
    })
}

/// `-i hbar d/dx` with the spectral derivative.
pub fn momentum_operator(psi: &WaveFunction) -> WaveFunction {
    psi.momentum_action()
}

fn grid_point(psi: &WaveFunction, x: f64) -> Result<usize> {
    let g = psi.grid();
    let i = g.nearest_index(x);
    if !g.contains(x) || (g.x(i) - x).abs() > 1e-9 * g.dx() {
        return Err(QflowError::InvalidParameter { name: "weak.x", reason: format!("{x} is not a grid point") });
    }
    Ok(i)
}

/// Weak momentum post-selected on the position eigenstate at grid point `x`.
pub fn weak_momentum_at(psi: &WaveFunction, x: f64, options: &FieldOptions) -> Result<WeakValueResult> {
    let i = grid_point(psi, x)?;
    let rho = psi.density();
    let rho_max = rho.iter().cloned().fold(0.0, f64::max);
    if rho[i] < options.eta * rho_max {
        return Err(QflowError::Node { x });
    }
    let a = psi.amplitudes()[i];
    let d = psi.derivative()[i];
    let value = Complex64::new(0.0, -psi.hbar()) * d / a;
    Ok(WeakValueResult { value: Some(value), postselection: Some(x), overlap_magnitude: a.norm(), ill_conditioned: false })
}

/// Finite-width variant: post-selection on a normalized Gaussian of width
/// `width` centred at `x`. Recovers [`weak_momentum_at`] as `width -> 0`.
pub fn weak_momentum_gaussian(psi: &WaveFunction, x: f64, width: f64) -> Result<WeakValueResult> {
    if width <= 0.0 {
        return Err(QflowError::InvalidParameter { name: "weak.width", reason: format!("{width} must be positive") });
    }
    let phi = WaveFunction::from_fn(*psi.grid(), psi.hbar(), psi.mass(), |y| {
        Complex64::new((-(y - x).powi(2) / (4.0 * width * width)).exp(), 0.0)
    })?
    .normalize()?;
    let mut r = weak_value(momentum_operator, &phi, psi, DEFAULT_OVERLAP_FLOOR)?;
    r.postselection = Some(x);
    Ok(r)
}

/// Weak momentum profile over the grid.
#[derive(Debug, Clone)]
pub struct WeakMomentumProfile {
    pub real: FieldOnGrid,
    pub imag: FieldOnGrid,
    /// `|psi(X)|`.
    pub overlap: Vec<f64>,
}

/// Evaluates the weak momentum at every grid point, masked like the polar
/// derivative fields.
pub fn weak_momentum_profile(psi: &WaveFunction, options: &FieldOptions) -> WeakMomentumProfile {
    let pf = polar_decompose(psi, options);
    let valid = pf.derivative_valid().to_vec();
    let h = psi.hbar();
    let (mut re, mut im) = (Vec::with_capacity(psi.len()), Vec::with_capacity(psi.len()));
    for ((a, d), ok) in psi.amplitudes().iter().zip(psi.derivative()).zip(&valid) {
        if *ok {
            let w = Complex64::new(0.0, -h) * d / a;
            re.push(w.re);
            im.push(w.im);
        } else {
            re.push(f64::NAN);
            im.push(f64::NAN);
        }
    }
    let g = *psi.grid();
    WeakMomentumProfile {
        real: FieldOnGrid::new(g, re, valid.clone()),
        imag: FieldOnGrid::new(g, im, valid),
        overlap: psi.amplitudes().iter().map(|a| a.norm()).collect(),
    }
}

impl WeakMomentumProfile {
    /// Writes `X,Re,Im,overlap_magnitude` rows; masked points are omitted.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> io::Result<()> {
        writeln!(out, "X,Re,Im,overlap_magnitude")?;
        for i in 0..self.overlap.len() {
            if self.real.valid[i] {
                writeln!(
                    out,
                    "{:.17e},{:.17e},{:.17e},{:.17e}",
                    self.real.grid.x(i),
                    self.real.values[i],
                    self.imag.values[i],
                    self.overlap[i]
                )?;
            }
        }
        Ok(())
    }
}

/// `Re(weak momentum) / m` on every slice.
pub fn weak_velocity_field(series: &EvolutionSeries, options: &FieldOptions) -> VelocityField {
    VelocityField::from_momenta(series, |k| weak_momentum_profile(&series.states[k], options).real)
}

/// Flow lines through the real part of the weak momentum.
pub fn weak_flow_lines(
    series: &EvolutionSeries,
    seeds: &[f64],
    options: &FieldOptions,
) -> std::result::Result<TrajectoryEnsemble, SeedFailure> {
    integrate_ensemble(&weak_velocity_field(series, options), seeds, "weak momentum flow")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use crate::polar::{bohm_momentum, osmotic_momentum};
    use crate::schrodinger::{evolve, initial_state, InitialState, Potential};
    use std::f64::consts::PI;

    fn gaussian(sigma: f64, k0: f64) -> WaveFunction {
        let g = make_grid(-20.0, 20.0, 1024).unwrap();
        initial_state(&InitialState::Gaussian { x0: 0.0, sigma, k0 }, g, 1.0, 1.0).unwrap()
    }

    #[test]
    fn identity_and_eigenstate() {
        let psi = gaussian(1.0, 0.5);
        let r = weak_value(|p| p.clone(), &psi, &psi, DEFAULT_OVERLAP_FLOOR).unwrap();
        assert_eq!(r.value.unwrap(), Complex64::new(1.0, 0.0));

        let g = make_grid(-10.0, 10.0, 256).unwrap();
        let k0 = 2.0 * PI * 5.0 / 20.0;
        let pw = initial_state(&InitialState::PlaneWave { k0 }, g, 1.0, 1.0).unwrap();
        let r = weak_value(momentum_operator, &pw, &pw, DEFAULT_OVERLAP_FLOOR).unwrap();
        let v = r.value.unwrap();
        assert!((v.re - k0).abs() < 1e-8 && v.im.abs() < 1e-8);
        let at = weak_momentum_at(&pw, g.x(17), &FieldOptions::default()).unwrap().value.unwrap();
        assert!((at.re - k0).abs() < 1e-8 && at.im.abs() < 1e-8);
    }

    #[test]
    fn orthogonal_postselection_is_flagged() {
        let g = make_grid(-10.0, 10.0, 256).unwrap();
        let a = initial_state(&InitialState::PlaneWave { k0: 2.0 * PI / 20.0 }, g, 1.0, 1.0).unwrap();
        let b = initial_state(&InitialState::PlaneWave { k0: 4.0 * PI / 20.0 }, g, 1.0, 1.0).unwrap();
        let r = weak_value(momentum_operator, &a, &b, DEFAULT_OVERLAP_FLOOR).unwrap();
        assert!(r.is_ill_conditioned());
        assert!(r.value.is_none());
    }

    #[test]
    fn static_gaussian_weak_momentum_is_imaginary() {
        // Oracle: -i hbar psi'/psi = i hbar X / (2 sigma^2) for a real Gaussian.
        let sigma = 1.0;
        let psi = gaussian(sigma, 0.0);
        let g = *psi.grid();
        for i in [400, 480, 512, 530, 600] {
            let x = g.x(i);
            let w = weak_momentum_at(&psi, x, &FieldOptions::default()).unwrap().value.unwrap();
            assert!(w.re.abs() < 1e-10);
            assert!((w.im - x / (2.0 * sigma * sigma)).abs() < 1e-8);
        }
        assert!(weak_momentum_at(&psi, 0.123, &FieldOptions::default()).is_err());
        assert!(matches!(weak_momentum_at(&psi, g.x(0), &FieldOptions::default()), Err(QflowError::Node { .. })));
    }

    #[test]
    fn profile_matches_polar_fields() {
        let psi = gaussian(0.7, 0.0);
        let series = evolve(&psi, &Potential::Free, 1.0, 0.01).unwrap();
        let opts = FieldOptions::default();
        let state = series.states.last().unwrap();
        let pf = polar_decompose(state, &opts);
        let prof = weak_momentum_profile(state, &opts);
        assert!(prof.real.max_abs_diff(&bohm_momentum(&pf)) < 1e-6);
        let osm = osmotic_momentum(&pf);
        let neg = prof.imag.map(|_, v| -v);
        assert!(neg.max_abs_diff(&osm) < 1e-6);
    }

    #[test]
    fn expectation_and_global_phase() {
        let psi = gaussian(0.8, 1.3);
        let r = weak_value(momentum_operator, &psi, &psi, DEFAULT_OVERLAP_FLOOR).unwrap().value.unwrap();
        assert!((r.re - psi.mean_momentum()).abs() < 1e-8 && r.im.abs() < 1e-8);
        let phi = gaussian(2.0, -0.4);
        let base = weak_value(momentum_operator, &phi, &psi, DEFAULT_OVERLAP_FLOOR).unwrap().value.unwrap();
        let c = Complex64::from_polar(1.0, 0.77);
        let rot = weak_value(momentum_operator, &phi.scale(c), &psi.scale(c), DEFAULT_OVERLAP_FLOOR)
            .unwrap()
            .value
            .unwrap();
        assert!((base - rot).norm() < 1e-12);
    }

    #[test]
    fn narrow_gaussian_postselection_converges() {
        let psi = gaussian(1.0, 0.9);
        let g = *psi.grid();
        let x = g.x(530);
        let exact = weak_momentum_at(&psi, x, &FieldOptions::default()).unwrap().value.unwrap();
        let wide = weak_momentum_gaussian(&psi, x, 0.2).unwrap().value.unwrap();
        let narrow = weak_momentum_gaussian(&psi, x, 0.05).unwrap().value.unwrap();
        assert!((narrow - exact).norm() < (wide - exact).norm());
        assert!((narrow - exact).norm() < 1e-2);
    }

    #[test]
    fn flow_lines_follow_spreading_law() {
        let sigma0 = 1.0;
        let psi = gaussian(sigma0, 0.0);
        let series = evolve(&psi, &Potential::Free, 1.5, 0.01).unwrap();
        let ens = weak_flow_lines(&series, &[-1.0, 0.5, 2.0], &FieldOptions::default()).unwrap();
        for (x0, p) in ens.seeds.iter().zip(&ens.positions) {
            for (t, x) in ens.times.iter().zip(p) {
                let expected = x0 * (1.0 + (t / (2.0 * sigma0 * sigma0)).powi(2)).sqrt();
                assert!((x - expected).abs() / expected.abs() < 0.005);
            }
        }
        let mut buf = Vec::new();
        weak_momentum_profile(&psi, &FieldOptions::default()).write_csv(&mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("X,Re,Im,overlap_magnitude\n"));
    }
}
