import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from trapped_pressure.flow import (
    IntegratorConfig,
    Trajectory,
    flow_with_tangent,
    integrate,
    top_lyapunov,
    trajectory_to_csv,
)

# hyperbolic coordinates small enough that nothing escapes within T <= 8
torus_states = st.tuples(
    st.floats(-0.005, 0.005), st.floats(-0.005, 0.005),
    st.floats(0.0, 6.28), st.floats(0.0, 6.28),
).map(np.array)


def _generic(system):
    """Strip all closed-form shortcuts: force the adaptive RK path."""
    return dataclasses.replace(system, exact_flow=None, exact_tangent=None,
                               orbit_run_hook=None, tangent_run_hook=None,
                               ensemble_hook=None)


def test_integrator_config_validation():
    with pytest.raises(ValueError):
        IntegratorConfig(rel_tol=0.0)
    with pytest.raises(ValueError):
        IntegratorConfig(abs_tol=1.0)
    with pytest.raises(ValueError):
        IntegratorConfig(max_step=-0.1)


def test_trajectory_requires_monotone_times():
    with pytest.raises(ValueError):
        Trajectory(np.array([0.0, 1.0, 0.5]), np.zeros((3, 2)), {})
    with pytest.raises(ValueError):
        Trajectory(np.array([0.0, 1.0]), np.zeros((3, 2)), {})


@given(torus_states, st.floats(0.5, 8.0))
@settings(max_examples=20, deadline=None)
def test_generic_integrator_matches_exact_toy_flow(toy_state, T):
    from trapped_pressure.fixtures import make_toy

    system = make_toy(nu=0.5)
    exact = system.exact_flow(toy_state, T)
    traj = integrate(_generic(system), toy_state, T,
                     IntegratorConfig(rel_tol=1e-11, abs_tol=1e-11))
    got = traj.final_state
    # compare angles on the circle
    np.testing.assert_allclose(got[:2], exact[:2], atol=1e-7)
    np.testing.assert_allclose(np.exp(1j * got[2:]), np.exp(1j * exact[2:]),
                               atol=1e-7)


def test_escape_event_is_located(toy_system):
    # margin 1 - (|x| + |y|) hits zero when 0.05 e^{t/2} + 0.05 e^{-t/2} = 1
    state = np.array([0.05, 0.05, 0.0, 0.0])
    traj = integrate(_generic(toy_system), state, 20.0, sample_dt=0.1)
    assert traj.escaped
    u = (1.0 + math.sqrt(1.0 - 4 * 0.05 * 0.05)) / (2 * 0.05)
    assert traj.escape_time == pytest.approx(2.0 * math.log(u), abs=1e-3)


def test_exact_path_used_when_available(toy_system):
    state = np.array([0.0, 0.0, 1.0, 2.0])
    traj = integrate(toy_system, state, 3.0)
    exact = np.stack([toy_system.exact_flow(state, t) for t in traj.times])
    np.testing.assert_array_equal(traj.states, exact)


def test_backward_integration(toy_system):
    state = np.array([0.0, 0.0, 1.0, 2.0])
    traj = integrate(toy_system, state, -4.0)
    assert traj.times[-1] == -4.0
    roundtrip = integrate(toy_system, traj.final_state, 4.0)
    np.testing.assert_allclose(roundtrip.final_state, state, atol=1e-9)


def test_tangent_growth_matches_toy_rates(toy_system):
    state = np.array([0.0, 0.0, 1.0, 2.0])
    frame = np.eye(4)
    tb = flow_with_tangent(toy_system, state, frame, 10.0,
                           record_times=(5.0,))
    # diag propagator e^{nu t}, e^{-nu t}, 1, 1 -> log growths nu*t, ...
    np.testing.assert_allclose(
        sorted(tb.log_growth), sorted([5.0, -5.0, 0.0, 0.0]), atol=1e-9)
    np.testing.assert_allclose(
        sorted(tb.growth_at(5.0)), sorted([2.5, -2.5, 0.0, 0.0]), atol=1e-9)


def test_tangent_generic_path_agrees_with_exact(toy_system):
    state = np.array([0.0, 0.0, 0.7, 1.3])
    frame = np.eye(4)
    tb_exact = flow_with_tangent(toy_system, state, frame, 6.0)
    tb_rk = flow_with_tangent(_generic(toy_system), state, frame, 6.0)
    np.testing.assert_allclose(sorted(tb_exact.log_growth),
                               sorted(tb_rk.log_growth), atol=1e-7)


def test_top_lyapunov_toy_is_nu(toy_system):
    lam = top_lyapunov(toy_system, np.array([0.0, 0.0, 1.0, 2.0]), 40.0)
    assert lam == pytest.approx(0.5, abs=1e-9)


def test_trajectory_csv_roundtrip(tmp_path, toy_system):
    traj = integrate(toy_system, np.array([0.0, 0.0, 1.0, 2.0]), 2.0)
    path = tmp_path / "traj.csv"
    trajectory_to_csv(traj, path)
    data = np.genfromtxt(path, delimiter=",", names=True)
    np.testing.assert_array_equal(data["s"], traj.times)
    np.testing.assert_array_equal(data["y2"], traj.states[:, 2])


def test_kerr_drift_reported_against_kernel(schw_system):
    state = np.asarray(schw_system.trapped_sampler(1, 0)[0])
    traj = integrate(schw_system, state, 50.0)
    assert set(traj.drifts) == {"energy", "angular_momentum", "carter",
                                "dual_metric"}
    assert all(v < 1e-9 for v in traj.drifts.values())
    assert not traj.escaped
