use pyo3::prelude::*;
use pyo3::types::PyDict;

const SCRIPT: &str = r#"
import math
import qflow_py as q

g = q.Grid(-20.0, 20.0, 512)
psi = q.WaveFunction.gaussian(g, 0.0, 1.0, 0.5)
assert abs(psi.norm_sqr() - 1.0) < 1e-12
assert abs(psi.mean_momentum() - 0.5) < 1e-9

series = q.evolve(psi, q.Potential.free(), 1.0, 0.005, 20)
s0 = series.state(0).position_width()
s1 = series.state(len(series) - 1).position_width()
assert abs(s1 / (s0 * math.sqrt(1.0 + (1.0 / (2.0 * s0 * s0)) ** 2)) - 1.0) < 1e-6

report = q.equivalence_report(psi)
assert report["max_deviation"] < 1e-5

p, rows = q.wigner(psi)
assert len(rows) == 512 and len(rows[0]) == len(p)

bohm = q.bohm_trajectories(series, q.seed_ensemble(psi, 10))
weak = q.weak_trajectories(series, q.seed_ensemble(psi, 10))
assert max(abs(a - b) for ra, rb in zip(bohm, weak) for a, b in zip(ra, rb)) < 1e-6

try:
    q.Grid(1.0, 0.0, 64)
    raise AssertionError("grid accepted")
except ValueError as e:
    assert "x_max" in str(e) or "interval" in str(e), str(e)
"#;

#[test]
fn python_module_round_trip() {
    use qflow_py::qflow_py;
    pyo3::append_to_inittab!(qflow_py);
    Python::with_gil(|py| {
        let globals = PyDict::new_bound(py);
        if let Err(e) = py.run_bound(SCRIPT, Some(&globals), None) {
            e.print(py);
            panic!("python script failed: {e}");
        }
    });
}
