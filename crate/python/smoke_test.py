"""Smoke test for the qflow_py extension.

Build and install first:
    pip install maturin
    pip install ./crates/python
Then run:
    python python/smoke_test.py
"""

import cmath
import math
import pathlib
import tempfile

import qflow_py as q

ROOT = pathlib.Path(__file__).resolve().parent.parent


def close(a, b, tol):
    assert abs(a - b) < tol, f"{a} vs {b} (tol {tol})"


def main():
    grid = q.Grid(-20.0, 20.0, 1024)
    assert grid.n == 1024 and len(grid.xs()) == 1024

    psi = q.WaveFunction.gaussian(grid, 0.0, 0.5, k0=1.0)
    close(psi.norm_sqr(), 1.0, 1e-12)
    close(psi.mean_momentum(), 1.0, 1e-8)

    free = q.Potential.free()
    series = q.evolve(psi, free, 1.0, 0.0025, save_every=4)
    assert len(series) == 101
    sigma_t = 0.5 * math.sqrt(1.0 + (1.0 / (2 * 0.25)) ** 2)
    close(series.state(100).position_width(), sigma_t, 1e-3 * sigma_t)

    last = series.state(100)
    grad_s = q.bohm_momentum(last)
    re, im = q.weak_momentum_profile(last)
    i = grid.n // 2 + 10
    close(re[i], grad_s[i], 1e-6)
    close(-im[i], q.osmotic_momentum(last)[i], 1e-6)

    report = q.equivalence_report(last)
    assert report["passed"], report
    assert len(report["routes"]) == 5

    momenta, rows = q.wigner(q.WaveFunction.gaussian(q.Grid(-10.0, 10.0, 128), 0.0, 1.0))
    assert len(momenta) == 256 and len(rows) == 128

    seeds = q.seed_ensemble(psi, 10)
    paths = q.bohm_trajectories(series, seeds)
    weak = q.weak_trajectories(series, seeds)
    worst = max(abs(a - b) for p, w in zip(paths, weak) for a, b in zip(p, w))
    assert worst < 1e-6, worst

    lat = q.Grid(-10.0, 10.0, 1024)
    k = q.lattice_propagator(0.0, 1.0, lat, 2, 0.5)
    exact = q.free_propagator(1.0, 0.0, 1.0)
    close(abs(k) / abs(exact), 1.0, 0.01)
    close(cmath.phase(k / exact), 0.0, 0.01)

    exponent = q.path_roughness([1e-4, 3e-4, 1e-3], samples=20000, seed=1)
    assert 0.4 <= exponent <= 0.6, exponent

    with tempfile.TemporaryDirectory() as out:
        result = q.run("verify", ROOT / "scenarios" / "plane_wave.cfg", out)
        assert result["passed"], result
        bad = pathlib.Path(out) / "bad.cfg"
        bad.write_text("grid.n = 256\nqpotential.mode = bohm\n")
        try:
            q.run("verify", bad, pathlib.Path(out) / "bad")
        except ValueError as e:
            assert "qpotential.mode" in str(e), e
        else:
            raise AssertionError("bad config accepted")

    print("qflow_py smoke test passed")


if __name__ == "__main__":
    main()
