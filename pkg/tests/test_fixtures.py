import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from trapped_pressure import pressure as pr
from trapped_pressure.fixtures import (
    CAT_ENTROPY,
    CAT_MATRIX,
    analytic_pressure,
    make_cat_suspension,
    make_toy,
)
from trapped_pressure.flow import top_lyapunov

cat_states = st.tuples(
    st.floats(0.0, 0.999), st.floats(0.0, 0.999), st.floats(0.0, 0.999),
).map(np.array)

toy_safe_states = st.tuples(
    st.floats(-0.01, 0.01), st.floats(-0.01, 0.01),
    st.floats(0.0, 6.28), st.floats(0.0, 6.28),
).map(np.array)


def test_cat_entropy_is_log_leading_eigenvalue():
    lams = np.linalg.eigvals(CAT_MATRIX.astype(float))
    assert CAT_ENTROPY == pytest.approx(math.log(max(abs(lams))), abs=1e-14)
    assert abs(np.linalg.det(CAT_MATRIX.astype(float))) == pytest.approx(1.0)


@given(cat_states, st.floats(0.0, 5.0), st.floats(0.0, 5.0))
@settings(max_examples=60, deadline=None)
def test_cat_flow_group_property(state, t1, t2):
    system = make_cat_suspension()
    one = system.exact_flow(system.exact_flow(state, t1), t2)
    two = system.exact_flow(state, t1 + t2)
    # compare in the quotient metric (chart wrap at s = 1 is an identification)
    d = system.distance(one, two)
    assert d < 1e-7


@given(cat_states)
@settings(max_examples=40, deadline=None)
def test_cat_quotient_distance_axioms(state):
    system = make_cat_suspension()
    other = system.exact_flow(state, 0.37)
    assert system.distance(state, state) < 1e-12
    assert system.distance(state, other) == pytest.approx(
        system.distance(other, state), abs=1e-12)


def test_cat_gluing_identification():
    system = make_cat_suspension()
    z = np.array([0.3, 0.8])
    below = np.array([z[0], z[1], 1.0 - 1e-9])
    above = system.exact_flow(below, 2e-9)   # crosses the roof: z -> A z
    np.testing.assert_allclose(above[:2], (CAT_MATRIX @ z) % 1.0, atol=1e-8)
    assert system.distance(below, above) < 1e-6


def test_cat_top_lyapunov_is_entropy():
    system = make_cat_suspension()
    lam = top_lyapunov(system, np.array([0.21, 0.34, 0.0]), 60.0)
    assert lam == pytest.approx(CAT_ENTROPY, rel=1e-6)


def test_cat_ensemble_hook_matches_generic_path(cat_system):
    samples = [np.asarray(s) for s in cat_system.trapped_sampler(20, 3)]
    T_grid = [1.0, 2.0, 3.0]
    ens_hook = pr.build_ensemble(cat_system, samples, T_grid, h_sep=0.25,
                                 t_align=8.0)
    generic = dataclasses.replace(cat_system, ensemble_hook=None)
    ens_gen = pr.build_ensemble(generic, samples, T_grid, h_sep=0.25,
                                t_align=8.0)
    # generic alignment carries an e^{-2 h t_align} transient; the hook is exact
    np.testing.assert_allclose(ens_hook.lam_u, ens_gen.lam_u, atol=1e-4)
    for k in range(len(samples)):
        d = cat_system.pairwise_traj_distance(
            ens_hook.trajectories[k], ens_gen.trajectories[k][None])
        assert float(d.max()) < 1e-6


@given(toy_safe_states, st.floats(0.1, 6.0))
@settings(max_examples=40, deadline=None)
def test_toy_flow_closed_form(state, t):
    system = make_toy(nu=0.5)
    out = system.exact_flow(state, t)
    assert out[0] == pytest.approx(state[0] * math.exp(0.5 * t), rel=1e-12)
    assert out[1] == pytest.approx(state[1] * math.exp(-0.5 * t), rel=1e-12)
    w2 = math.sqrt(2.0)
    np.testing.assert_allclose(
        np.exp(1j * out[2:]),
        np.exp(1j * (state[2:] + t * np.array([1.0, w2]))), atol=1e-12)


def test_toy_ensemble_hook_matches_generic_path(toy_system):
    samples = [np.asarray(s) for s in toy_system.trapped_sampler(16, 1)]
    T_grid = [5.0, 10.0]
    ens_hook = pr.build_ensemble(toy_system, samples, T_grid, t_align=30.0)
    generic = dataclasses.replace(toy_system, ensemble_hook=None)
    ens_gen = pr.build_ensemble(generic, samples, T_grid, t_align=30.0)
    np.testing.assert_allclose(ens_hook.lam_u, ens_gen.lam_u, atol=1e-6)


def test_toy_jacobian_is_exactly_nu_T(toy_system):
    rec = pr.log_unstable_jacobian(toy_system, np.array([0, 0, 1.0, 2.0]), 8.0)
    assert rec.lam_u == pytest.approx(4.0, abs=1e-6)


def test_analytic_pressure_values(toy_system, cat_system):
    assert analytic_pressure(toy_system, 2.0) == -1.0
    assert analytic_pressure(cat_system, 0.0) == pytest.approx(0.9624236501192069)
    assert analytic_pressure(cat_system, 1.0) == 0.0
    with pytest.raises(ValueError):
        analytic_pressure(dataclasses.replace(toy_system, metadata={}), 1.0)


def test_nothing_escapes_the_suspension(cat_system):
    for s in cat_system.trapped_sampler(10, 0):
        assert cat_system.escape_margin(np.asarray(s)) > 0.0
