//! Acceptance criteria over the shipped scenario catalog. Prints one
//! PASS/FAIL line per criterion and exits non-zero if any fails.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use qflow::config::{load_config, ScenarioConfig};
use qflow::feynman::{
    compose, free_propagator, lattice_propagator, lattice_propagator_row, roughness_exponent, PathLattice,
    PropagatorComparison, SumMode,
};
use qflow::grid::make_grid;
use qflow::polar::{
    bohm_momentum, kinetic_trace_check, momentum_density, polar_decompose, quantum_potential, FieldOnGrid,
};
use qflow::run::{mirror_deviation, prepare, stepwise_residuals, Prepared};
use qflow::schrodinger::initial_state;
use qflow::trajectories::{integrate_ensemble, non_crossing_check, seed_ensemble, VelocityField};
use qflow::weak::{weak_flow_lines, weak_momentum_profile};
use qflow::wigner::{
    conditional_momentum_derivative_profile, conditional_momentum_integral_profile, equivalence_report,
    momentum_density_on_wigner_axis, wigner_marginals,
};
use qflow::WaveFunction;

const CATALOG: [&str; 7] =
    ["plane_wave", "static_gaussian", "spreading_gaussian", "harmonic_ground", "barrier", "square_well", "two_slit"];

type Outcome = Result<String, String>;

fn scenario(name: &str) -> ScenarioConfig {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(format!("{name}.cfg"));
    load_config(&path, &[]).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn prepared(name: &str) -> (ScenarioConfig, Prepared) {
    let cfg = scenario(name);
    let p = prepare(&cfg).unwrap_or_else(|e| panic!("{name}: {e}"));
    (cfg, p)
}

fn verdict(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn five_way_equivalence() -> Outcome {
    let start = Instant::now();
    let mut worst = (0.0f64, "");
    let mut lines = Vec::new();
    for name in CATALOG {
        let (cfg, p) = prepared(name);
        if p.slices.len() < 5 {
            return Err(format!("{name}: only {} time slices", p.slices.len()));
        }
        let mut dev: f64 = 0.0;
        for &k in &p.slices {
            let r = equivalence_report(&p.series.states[k], &cfg.fields, 1e-5).map_err(|e| format!("{name}: {e}"))?;
            dev = dev.max(r.max_deviation);
        }
        lines.push(format!("{name} {dev:.1e}"));
        if dev > worst.0 {
            worst = (dev, name);
        }
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        worst.0 < 1e-5 && secs < 60.0,
        format!("max deviation {:.2e} ({}) < 1e-5 in {secs:.1}s; {}", worst.0, worst.1, lines.join(", ")),
    )
}

fn free_gaussian_suite() -> Outcome {
    let start = Instant::now();
    let (cfg, p) = prepared("spreading_gaussian");
    let (hbar, m) = (cfg.hbar, cfg.mass);
    let sigma0 = p.psi0.position_width();
    let sigma = |t: f64| sigma0 * (1.0 + (hbar * t / (2.0 * m * sigma0 * sigma0)).powi(2)).sqrt();
    let width_err = p
        .series
        .times
        .iter()
        .zip(&p.series.states)
        .map(|(t, s)| (s.position_width() / sigma(*t) - 1.0).abs())
        .fold(0.0, f64::max);

    let rho0 = FieldOnGrid::new(cfg.grid, p.psi0.density(), vec![true; cfg.grid.n()]);
    let seeds = seed_ensemble(&rho0, 50).map_err(|e| e.to_string())?;
    let ens = integrate_ensemble(&VelocityField::bohm(&p.series, &cfg.fields), &seeds, "quantiles")
        .map_err(|e| e.to_string())?;
    let mut traj_err: f64 = 0.0;
    for (x0, path) in seeds.iter().zip(&ens.positions) {
        for (t, x) in ens.times.iter().zip(path) {
            let exact = x0 * sigma(*t) / sigma0;
            traj_err = traj_err.max((x - exact).abs() / exact.abs());
        }
    }

    let pf = polar_decompose(&p.psi0, &cfg.fields);
    let q = quantum_potential(&pf);
    let centre = cfg.grid.nearest_index(0.0);
    let q_exact = hbar * hbar / (4.0 * m * sigma0 * sigma0);
    let q_err = (q.values[centre] / q_exact - 1.0).abs();
    let secs = start.elapsed().as_secs_f64();
    verdict(
        width_err < 1e-3 && traj_err < 5e-3 && q_err < 1e-2 && secs < 10.0,
        format!(
            "width {width_err:.1e} < 1e-3, trajectories {traj_err:.1e} < 5e-3, Q(0) {q_err:.1e} < 1e-2 in {secs:.1}s"
        ),
    )
}

fn equation_residuals() -> Outcome {
    let start = Instant::now();
    let mut worst = (0.0f64, "");
    for name in CATALOG {
        let (cfg, p) = prepared(name);
        let (c, q) = stepwise_residuals(&cfg, &p.psi0, p.step_dt).map_err(|e| format!("{name}: {e}"))?;
        for v in [c.linf, q.linf] {
            if v > worst.0 {
                worst = (v, name);
            }
        }
    }
    let coarse = scenario("spreading_gaussian");
    let mut fine = coarse.clone();
    fine.grid = make_grid(coarse.grid.x_min(), coarse.grid.x_max(), 2 * coarse.grid.n()).unwrap();
    fine.dt = coarse.dt.map(|d| d / 2.0);
    let residuals = |cfg: &ScenarioConfig| {
        let psi0 = initial_state(&cfg.state, cfg.grid, cfg.hbar, cfg.mass).unwrap();
        stepwise_residuals(cfg, &psi0, cfg.dt.unwrap()).unwrap()
    };
    let (c0, q0) = residuals(&coarse);
    let (c1, q1) = residuals(&fine);
    let order_c = (c0.linf / c1.linf).log2();
    let order_q = (q0.linf / q1.linf).log2();
    let in_band = |o: f64| (1.7..=2.3).contains(&o);
    let secs = start.elapsed().as_secs_f64();
    verdict(
        worst.0 < 1e-3 && in_band(order_c) && in_band(order_q) && secs < 30.0,
        format!(
            "max residual {:.2e} ({}) < 1e-3; refinement orders continuity {order_c:.2}, QHJ {order_q:.2} in [1.7, 2.3] in {secs:.1}s",
            worst.0, worst.1
        ),
    )
}

fn trace_identity() -> Outcome {
    let mut worst = (0.0f64, "");
    let mut states = 0;
    for name in CATALOG {
        let (cfg, p) = prepared(name);
        for &k in &p.slices {
            let r = kinetic_trace_check(&p.series.states[k], &cfg.potential, &cfg.fields);
            states += 1;
            if r.relative_error > worst.0 {
                worst = (r.relative_error, name);
            }
        }
    }
    verdict(worst.0 < 5e-3, format!("max relative error {:.2e} ({}) < 5e-3 over {states} states", worst.0, worst.1))
}

fn path_sum() -> Outcome {
    let start = Instant::now();
    let ps = scenario("plane_wave").paths;
    let grid = make_grid(ps.x_min, ps.x_max, ps.n).unwrap();
    let t = 2.0 * ps.eps;
    let full = PathLattice::new(grid, 2, ps.eps, 1.0, 1.0).unwrap();
    let direct = lattice_propagator(ps.x_start, ps.x_end, &full, SumMode::Exhaustive).map_err(|e| e.to_string())?;
    let exact = free_propagator(ps.x_end, ps.x_start, t, 1.0, 1.0);
    let cmp = PropagatorComparison::new(direct.value(), exact);
    let half = PathLattice::new(grid, 2, ps.eps / 2.0, 1.0, 1.0).unwrap();
    let composed =
        compose(&grid, &lattice_propagator_row(ps.x_end, &half), &lattice_propagator_row(ps.x_start, &half));
    let semigroup = PropagatorComparison::new(composed, direct.value());
    let secs = start.elapsed().as_secs_f64();
    verdict(
        cmp.within(0.01) && semigroup.within(0.01) && secs < 30.0,
        format!(
            "N=2 modulus {:.1e}, phase {:.1e}; composition modulus {:.1e}, phase {:.1e}; all < 1e-2 in {secs:.1}s",
            cmp.modulus_error, cmp.phase_error, semigroup.modulus_error, semigroup.phase_error
        ),
    )
}

fn two_slit_properties() -> Outcome {
    let (cfg, p) = prepared("two_slit");
    let rho0 = FieldOnGrid::new(cfg.grid, p.psi0.density(), vec![true; cfg.grid.n()]);
    let seeds = seed_ensemble(&rho0, 50).map_err(|e| e.to_string())?;
    let bohm = integrate_ensemble(&VelocityField::bohm(&p.series, &cfg.fields), &seeds, "quantiles")
        .map_err(|e| e.to_string())?;
    let crossings = non_crossing_check(&bohm).map_err(|e| e.to_string())?.crossings;
    let (mirror, overshoot) = mirror_deviation(&bohm, 0.0);
    let weak = weak_flow_lines(&p.series, &seeds, &cfg.fields).map_err(|e| e.to_string())?;
    let distance = weak.max_distance(&bohm);
    verdict(
        crossings == 0 && mirror < 1e-6 && overshoot < cfg.grid.dx() && distance < 1e-6,
        format!(
            "{crossings} crossings over {} seeds, mirror {mirror:.1e} < 1e-6, axis overshoot {overshoot:.1e} < dx, weak vs Bohm {distance:.1e} < 1e-6",
            seeds.len()
        ),
    )
}

/// Five conditional-momentum profiles of `psi`.
fn routes(psi: &WaveFunction, cfg: &ScenarioConfig) -> Vec<FieldOnGrid> {
    let pf = polar_decompose(psi, &cfg.fields);
    let rho = psi.density();
    let flux = momentum_density(psi);
    let grad_s = bohm_momentum(&pf);
    let t0j = grad_s.map(|i, _| flux[i] / rho[i]);
    vec![
        conditional_momentum_integral_profile(psi, &cfg.fields).unwrap(),
        conditional_momentum_derivative_profile(psi, &cfg.fields),
        grad_s,
        weak_momentum_profile(psi, &cfg.fields).real,
        t0j,
    ]
}

fn wigner_and_boost() -> Outcome {
    let mut marginal: (f64, &str) = (0.0, "");
    for name in CATALOG {
        let (_, p) = prepared(name);
        for &k in &p.slices {
            let psi = &p.series.states[k];
            let m = wigner_marginals(psi);
            let rho = psi.density();
            let reference = momentum_density_on_wigner_axis(psi);
            let e = m
                .position
                .iter()
                .zip(&rho)
                .chain(m.momentum.iter().zip(&reference))
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            if e > marginal.0 {
                marginal = (e, name);
            }
        }
    }
    let mut boost: f64 = 0.0;
    for name in ["static_gaussian", "spreading_gaussian", "two_slit"] {
        let (cfg, p) = prepared(name);
        let kb = 2.0 * std::f64::consts::PI * 3.0 / cfg.grid.length();
        for &k in &p.slices {
            let psi = &p.series.states[k];
            let moved = psi.boost(kb);
            for (a, b) in routes(psi, &cfg).iter().zip(routes(&moved, &cfg)) {
                let shifted = a.map(|_, v| v + cfg.hbar * kb);
                boost = boost.max(shifted.max_abs_diff(&b));
            }
        }
    }
    verdict(
        marginal.0 < 1e-6 && boost < 1e-7,
        format!("marginal error {:.1e} ({}) < 1e-6, boost shift error {boost:.1e} < 1e-7", marginal.0, marginal.1),
    )
}

fn path_roughness() -> Outcome {
    let ps = scenario("plane_wave").paths;
    let r = roughness_exponent(&ps.roughness_eps, 1.0, 1.0, ps.roughness_samples, 0).map_err(|e| e.to_string())?;
    let decade = ps.roughness_eps.last().unwrap() / ps.roughness_eps[0];
    verdict(
        (0.4..=0.6).contains(&r.exponent) && decade >= 10.0 - 1e-9,
        format!("exponent {:.3} in [0.4, 0.6] over eps {:.0e}..{:.0e}", r.exponent, ps.roughness_eps[0], ps.roughness_eps.last().unwrap()),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("five-way equivalence", five_way_equivalence),
        ("analytic free Gaussian", free_gaussian_suite),
        ("equation residuals", equation_residuals),
        ("trace identity", trace_identity),
        ("path-sum propagator", path_sum),
        ("two-slit properties", two_slit_properties),
        ("Wigner marginals and boost", wigner_and_boost),
        ("path roughness", path_roughness),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let result = std::panic::catch_unwind(run).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        match result {
            Ok(d) => println!("criterion {} {name}: PASS ({d})", i + 1),
            Err(d) => {
                failed += 1;
                println!("criterion {} {name}: FAIL ({d})", i + 1);
            }
        }
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
