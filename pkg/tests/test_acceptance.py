"""Acceptance gate: one test per release criterion, at stated tolerances.

Heavy artifacts (Lyapunov spectra, trajectory ensembles) are built once in
module-scoped fixtures and shared by the criteria that examine them, so the
wall-clock assertions time the compute itself.
"""

import math
import time
import warnings

import numpy as np
import pytest
from scipy.optimize import bisect

from trapped_pressure import pressure as pr
from trapped_pressure import trapped as tr
from trapped_pressure.cli import EXIT_OK, main
from trapped_pressure.flow import IntegratorConfig, integrate, top_lyapunov
from trapped_pressure.fixtures import CAT_ENTROPY, analytic_pressure
from trapped_pressure.spacetime import (
    IDX_PR,
    SpacetimeParams,
    conserved_state,
    horizon_roots,
)

CFG = IntegratorConfig()

KERR_EPS = [0.05, 0.1, 0.2]
KERR_T = [10.0, 20.0, 30.0, 40.0, 60.0]


def _quiet(fn, *args, **kwargs):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        return fn(*args, **kwargs)


@pytest.fixture(scope="module")
def spectra_run(kerr09_spectra):
    """The shared 50-sample spectra run with its build time (criteria 4, 5)."""
    return kerr09_spectra


@pytest.fixture(scope="module")
def schw_ensemble(schw_system):
    samples = schw_system.trapped_sampler(360, 0)
    t0 = time.perf_counter()
    ens = _quiet(pr.build_ensemble, schw_system, samples, KERR_T, CFG)
    return ens, time.perf_counter() - t0


def _kerr_estimates(system, n_samples, s_values):
    """Ensemble, separated and variational estimates for one Kerr system."""
    samples = system.trapped_sampler(n_samples, 0)
    ens = _quiet(pr.build_ensemble, system, samples, KERR_T, CFG)
    packs = pr.pack_all(system, ens, KERR_EPS, KERR_T)
    sep = {s: _quiet(pr.pressure_separated, system, s, KERR_EPS, KERR_T,
                     ensemble=ens, packs=packs) for s in s_values}
    var = {s: pr.pressure_variational(system, s, ensemble=ens)
           for s in s_values}
    return sep, var


def test_criterion_01_horizon_structure():
    t0 = time.perf_counter()
    schw = horizon_roots(SpacetimeParams(1.0, 0.0, 0.0))
    assert schw.r_event == pytest.approx(2.0, abs=1e-12)

    params = SpacetimeParams(1.0, 0.5, 0.03)
    roots = horizon_roots(params)
    ordered = [roots.r_minus, roots.r_cauchy, roots.r_event, roots.r_cosmo]
    assert all(np.isfinite(ordered))
    assert np.all(np.diff(ordered) > 0)
    # independent oracle: bisection on the horizon quartic over a sign grid
    lam, a = params.lam, params.spin
    quartic = lambda r: (r * r + a * a) * (1 - lam * r * r / 3) - 2 * r
    grid = np.linspace(-30.0, 30.0, 24001)
    vals = quartic(grid)
    flips = np.nonzero(np.sign(vals[:-1]) != np.sign(vals[1:]))[0]
    oracle = sorted(bisect(quartic, grid[i], grid[i + 1], xtol=1e-13)
                    for i in flips)
    assert len(oracle) == 4
    assert np.allclose(ordered, oracle, atol=1e-10)
    assert time.perf_counter() - t0 < 1.0


def test_criterion_02_photon_sphere_invariance(schw_system):
    t0 = time.perf_counter()
    sample = np.asarray(schw_system.trapped_sampler(4, 0)[0])
    traj = integrate(schw_system, sample, 200.0, CFG, sample_dt=1.0)
    assert not traj.escaped
    assert np.max(np.abs(traj.states[:, 1] - 3.0)) < 1e-6
    # conserved vector: (energy, angular momentum, Carter, dual metric)
    ref = conserved_state(schw_system.metadata["params"], sample)
    for state in traj.states[::20]:
        now = conserved_state(schw_system.metadata["params"], state)
        assert np.max(np.abs(now - ref)) < 1e-8
    assert time.perf_counter() - t0 < 5.0


def test_criterion_03_unstable_rate_oracle(schw_system):
    t0 = time.perf_counter()
    target = 1.0 / math.sqrt(3.0)
    sample = np.asarray(schw_system.trapped_sampler(4, 0)[0])
    rate = top_lyapunov(schw_system, sample, 300.0, CFG)
    assert rate == pytest.approx(target, abs=1e-3)
    # independent oracle: two nearby trajectories separate at the same rate
    kicked = sample.copy()
    kicked[IDX_PR] += 1e-9
    ta = integrate(schw_system, sample, 40.0, CFG, sample_dt=0.5)
    tb = integrate(schw_system, kicked, 40.0, CFG, sample_dt=0.5)
    gap = np.log(np.linalg.norm(ta.states - tb.states, axis=1))
    mask = (ta.times >= 5.0) & (ta.times <= 30.0)   # post-transient, pre-saturation
    slope = np.polynomial.polynomial.polyfit(ta.times[mask], gap[mask], 1)[1]
    assert slope == pytest.approx(target, abs=5e-3)
    assert abs(rate - slope) < 5e-3
    assert time.perf_counter() - t0 < 10.0


def test_criterion_04_zero_tangent_exponents(spectra_run):
    _, spectra, elapsed = spectra_run
    assert len(spectra) == 50
    worst = max(np.max(np.abs(s.tangent_exponents)) for s in spectra)
    assert worst < 0.01
    assert elapsed < 300.0


def test_criterion_05_infinity_nh_inequality(kerr09_system, cat_system,
                                             spectra_run):
    samples, spectra, _ = spectra_run
    report = pr.nh_check(kerr09_system, np.stack(samples), r_cap=10,
                         T=200.0, config=CFG, spectra=spectra)
    assert report.r_star == report.r_cap == 10

    cat_samples = np.stack(cat_system.trapped_sampler(12, 0))
    contrast = pr.nh_check(cat_system, cat_samples, r_cap=10, T=40.0,
                           config=CFG)
    assert contrast.r_star == 0


def test_criterion_06_toy_pressure_exactness(toy_system):
    t0 = time.perf_counter()
    samples = toy_system.trapped_sampler(400, 0)
    T_grid = [2.0, 4.0, 6.0, 8.0]
    eps_grid = [0.2, 0.3, 0.45]
    ens = pr.build_ensemble(toy_system, samples, T_grid, CFG, t_align=8.0)
    packs = pr.pack_all(toy_system, ens, eps_grid, T_grid)
    for s in (0.0, 0.5, 1.0, 2.0):
        exact = analytic_pressure(toy_system, s)
        est = _quiet(pr.pressure_separated, toy_system, s, eps_grid, T_grid,
                     ensemble=ens, packs=packs)
        assert abs(est.pressure - exact) < max(0.05, 0.1 * abs(exact))
        var = pr.pressure_variational(toy_system, s, ensemble=ens)
        assert abs(var["pressure"] - exact) < 1e-6
    assert time.perf_counter() - t0 < 60.0


def test_criterion_07_entropy_calibration(cat_system):
    t0 = time.perf_counter()
    samples = cat_system.trapped_sampler(64000, 0)
    T_grid = [0.5, 0.75, 1.0, 1.25, 1.5]
    eps_grid = [0.15, 0.2, 0.3]
    ens = pr.build_ensemble(cat_system, samples, T_grid, CFG,
                            h_sep=0.25, t_align=8.0)
    packs = pr.pack_all(cat_system, ens, eps_grid, T_grid)
    est0 = _quiet(pr.pressure_separated, cat_system, 0.0, eps_grid, T_grid,
                  ensemble=ens, packs=packs)
    assert est0.pressure == pytest.approx(CAT_ENTROPY, rel=0.10)
    est1 = _quiet(pr.pressure_separated, cat_system, 1.0, eps_grid, T_grid,
                  ensemble=ens, packs=packs)
    assert abs(est1.pressure) < 0.05
    assert time.perf_counter() - t0 < 120.0


def test_criterion_08_schwarzschild_pressure(schw_system, schw_ensemble):
    ens, build_time = schw_ensemble
    t0 = time.perf_counter()
    target = -0.5 / math.sqrt(3.0)                  # -0.28868
    packs = pr.pack_all(schw_system, ens, KERR_EPS, KERR_T)
    sep = _quiet(pr.pressure_separated, schw_system, 0.5, KERR_EPS, KERR_T,
                 ensemble=ens, packs=packs)
    assert sep.pressure == pytest.approx(target, rel=0.10)
    var = pr.pressure_variational(schw_system, 0.5, ensemble=ens)
    assert var["pressure"] == pytest.approx(target, abs=1e-3)
    assert build_time + (time.perf_counter() - t0) < 300.0


def test_criterion_09_main_theorem_desk_scale(kerr09_system):
    t0 = time.perf_counter()
    kds09 = tr.kerr_system(SpacetimeParams(1.0, 0.9, 0.02))
    for system in (kerr09_system, kds09):
        sep, var = _kerr_estimates(system, 500, (0.0, 0.25, 0.5, 1.0))
        # P(0) = 0 within 0.05
        assert abs(sep[0.0].pressure) < 0.05
        for s in (0.25, 0.5, 1.0):
            est = sep[s]
            # strictly negative with >= 3x fit-residual margin
            assert est.pressure < -3.0 * est.extrapolation_residual
            assert var[s]["pressure"] < 0.0
            # estimator cross-agreement within combined tolerances
            combined = 0.05 + 3.0 * est.extrapolation_residual
            assert abs(est.pressure - var[s]["pressure"]) < combined
    assert time.perf_counter() - t0 < 1800.0


def test_criterion_10_telescoping_cocycle(kerr09_system, toy_system):
    samples = [np.asarray(s) for s in kerr09_system.trapped_sampler(20, 0)][:20]
    assert len(samples) == 20
    for sample in samples:
        assert abs(pr.telescoping_check(kerr09_system, sample, 10, CFG)) < 1e-6
    toy_sample = toy_system.trapped_sampler(4, 0)[0]
    for k in (2, 5, 10):
        assert abs(pr.telescoping_check(toy_system, toy_sample, k, CFG)) < 1e-12


def test_criterion_11_byte_identical_json(tmp_path, monkeypatch):
    argv = ["pressure", "--system", "toy", "--samples", "100",
            "--T-grid", "2 4 6 8", "--eps", "0.2 0.3 0.45", "--s", "0.0 0.5"]
    d1, d2 = tmp_path / "w1", tmp_path / "w2"
    assert main(argv + ["--workers", "1", "--out-dir", str(d1)]) == EXIT_OK
    monkeypatch.setenv("TRAPPED_PRESSURE_WORKERS", "4")
    assert main(argv + ["--out-dir", str(d2)]) == EXIT_OK
    names = sorted(p.name for p in d1.glob("*.json"))
    assert names and names == sorted(p.name for p in d2.glob("*.json"))
    for name in names:
        assert (d1 / name).read_bytes() == (d2 / name).read_bytes()
