"""Abstract flow systems and their tangent (variational) integration.

A FlowSystem bundles everything the estimators need: the vector field and
its Jacobian, a phase-space metric (through an embedding), an escape test,
and a sampler of candidate trapped states.  Systems with closed-form flows
(the analytic fixtures) bypass the ODE solver entirely; the Kerr system
installs fast compiled hooks for the heavy tangent runs.

Integrations are independent per initial condition and hold no shared
mutable state.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.integrate import solve_ivp

__all__ = [
    "FlowSystem",
    "IntegratorConfig",
    "Trajectory",
    "TangentBundleState",
    "integrate",
    "flow_with_tangent",
    "top_lyapunov",
    "trajectory_to_csv",
]


@dataclass(frozen=True)
class IntegratorConfig:
    rel_tol: float = 1e-10
    abs_tol: float = 1e-10
    max_step: float = 0.1
    renorm_interval: float = 1.0

    def __post_init__(self):
        for name in ("rel_tol", "abs_tol"):
            v = getattr(self, name)
            if not (0.0 < v <= 1e-2):
                raise ValueError(f"{name} must lie in (0, 1e-2], got {v}")
        if self.max_step <= 0.0 or self.renorm_interval <= 0.0:
            raise ValueError("max_step and renorm_interval must be positive")


@dataclass
class FlowSystem:
    """Flow plus the geometric data the pressure estimators need."""

    dimension: int
    vector_field: Callable[[np.ndarray], np.ndarray]
    jacobian: Callable[[np.ndarray], np.ndarray]
    escape_margin: Callable[[np.ndarray], float]
    trapped_sampler: Callable[[int, int], list]
    embed: Callable[[np.ndarray], np.ndarray]
    invariants_list: Sequence[tuple] = ()  # (name, fn state -> float)
    name: str = ""
    metadata: dict = field(default_factory=dict)

    # closed-form flow, when available: state, dt -> state; tangent version
    # additionally returns the dt-propagator matrix
    exact_flow: Optional[Callable] = None
    exact_tangent: Optional[Callable] = None

    # fast compiled hooks (installed by the Kerr module); signatures match
    # the generic fallbacks in this module
    orbit_run_hook: Optional[Callable] = None
    tangent_run_hook: Optional[Callable] = None
    # closed-form batch ensembles (fixtures):
    # (samples (N,n), times (K,), T_grid (J,), t_align)
    #   -> aligned samples (N,n), trajectories (N,K,n), lambda^u (N,J)
    ensemble_hook: Optional[Callable] = None

    # vectorized trajectory distance override: (K,n), (M,K,n) -> (M,K);
    # default is the Euclidean metric of `embed`
    traj_distance: Optional[Callable] = None
    # extra KDTree insertion representatives for quotient metrics:
    # (N, n) states -> (P, m) embeds, (P,) owner indices
    tree_points: Optional[Callable] = None

    distance_scale: float = 1.0

    def escape_test(self, state: np.ndarray) -> bool:
        return self.escape_margin(np.asarray(state, dtype=float)) < 0.0

    def distance(self, s1: np.ndarray, s2: np.ndarray) -> float:
        s1 = np.asarray(s1, dtype=float)
        s2 = np.asarray(s2, dtype=float)
        if self.traj_distance is not None:
            d = self.traj_distance(s1[None, :], s2[None, None, :])
            return self.distance_scale * float(d[0, 0])
        return self.distance_scale * float(
            np.linalg.norm(self.embed(s1) - self.embed(s2))
        )

    def pairwise_traj_distance(self, traj: np.ndarray, trajs: np.ndarray) -> np.ndarray:
        """Distances between one trajectory (K,n) and a stack (M,K,n)."""
        if self.traj_distance is not None:
            return self.distance_scale * np.asarray(self.traj_distance(traj, trajs))
        e1 = self.embed(traj)
        e2 = self.embed(trajs)
        return self.distance_scale * np.linalg.norm(e2 - e1[None, :, :], axis=-1)


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    drifts: dict
    escaped: bool = False
    escape_time: Optional[float] = None
    status: str = "ok"

    def __post_init__(self):
        if len(self.times) != len(self.states):
            raise ValueError("time and state counts differ")
        dt = np.diff(self.times)
        if len(dt) and not (np.all(dt > 0) or np.all(dt < 0)):
            raise ValueError("sample times must be strictly monotone")

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]


@dataclass
class TangentBundleState:
    base: np.ndarray
    frame: np.ndarray          # n x k, unit columns after the last renormalization
    log_growth: np.ndarray     # accumulated unnormalized log growth per direction
    history_times: np.ndarray
    history_logs: np.ndarray   # len(history_times) x k

    def growth_at(self, t: float) -> np.ndarray:
        """Accumulated log growth at time t, linearly interpolated per direction."""
        out = np.array(
            [np.interp(t, self.history_times, self.history_logs[:, j])
             for j in range(self.history_logs.shape[1])]
        )
        return out


def _drift_report(system: FlowSystem, times, states) -> dict:
    drifts = {}
    for name, fn in system.invariants_list:
        vals = np.array([fn(s) for s in states])
        drifts[name] = float(np.max(np.abs(vals - vals[0]))) if len(vals) else 0.0
    return drifts


def _sample_times(T: float, sample_dt: float) -> np.ndarray:
    if T == 0.0:
        return np.array([0.0])
    n = max(1, int(round(abs(T) / sample_dt)))
    return np.linspace(0.0, T, n + 1)


def integrate(
    system: FlowSystem,
    state: np.ndarray,
    T: float,
    config: IntegratorConfig = IntegratorConfig(),
    sample_dt: float = 0.5,
) -> Trajectory:
    """Flow a state for (signed) time T, sampling every `sample_dt`.

    Adaptive embedded Runge-Kutta 5(4) pair with dense output unless the
    system carries a closed-form flow.  Escape (margin crossing zero) stops
    nothing but is located by bisection to 1e-8 in time and recorded.
    """
    state = np.asarray(state, dtype=float)
    if not np.isfinite(T):
        raise ValueError("horizon time must be finite")
    times = _sample_times(T, sample_dt)
    if T == 0.0:
        return Trajectory(times, state[None, :].copy(), _drift_report(system, times, [state]))

    if system.orbit_run_hook is not None:
        states = system.orbit_run_hook(state, times, config)
        if states is not None:
            traj = Trajectory(times, states, _drift_report(system, times, states))
            return _mark_escape(system, traj, None)

    if system.exact_flow is not None:
        states = np.stack([system.exact_flow(state, t) for t in times])
        traj = Trajectory(times, states, _drift_report(system, times, states))
        return _mark_escape(system, traj, None)

    def rhs(t, y):
        return system.vector_field(y)

    def escape_event(t, y):
        return system.escape_margin(y)

    escape_event.terminal = True

    sol = solve_ivp(
        rhs,
        (0.0, T),
        state,
        method="RK45",
        rtol=config.rel_tol,
        atol=config.abs_tol,
        max_step=config.max_step,
        dense_output=True,
        events=[escape_event],
    )
    if sol.status == -1:
        # step-size underflow near a chart boundary: return what we have
        good = times[np.abs(times) <= abs(sol.t[-1])]
        if len(good) == 0:
            good = np.array([0.0])
        states = sol.sol(good).T if sol.sol is not None else state[None, :]
        return Trajectory(good, states, _drift_report(system, good, states),
                          escaped=True, escape_time=float(sol.t[-1]),
                          status="step_underflow")

    escape_time = None
    if sol.t_events[0].size:
        escape_time = _refine_escape(system, sol.sol, float(sol.t_events[0][0]))
        times = times[np.abs(times) <= abs(escape_time)]
        if len(times) == 0:
            times = np.array([0.0])
    states = sol.sol(times).T
    traj = Trajectory(times, states, _drift_report(system, times, states))
    return _mark_escape(system, traj, escape_time)


def _refine_escape(system, dense, t_hit: float) -> float:
    """Bisect the escape predicate along the dense output to 1e-8 in time."""
    lo, hi = 0.0, t_hit
    if system.escape_margin(dense(lo)) < 0.0:
        return 0.0
    while abs(hi - lo) > 1e-8:
        mid = 0.5 * (lo + hi)
        if system.escape_margin(dense(mid)) < 0.0:
            hi = mid
        else:
            lo = mid
    return hi


def _mark_escape(system, traj: Trajectory, escape_time) -> Trajectory:
    if escape_time is None:
        margins = np.array([system.escape_margin(s) for s in traj.states])
        if np.any(margins < 0.0):
            idx = int(np.argmax(margins < 0.0))
            escape_time = float(traj.times[idx])
    if escape_time is not None:
        traj.escaped = True
        traj.escape_time = escape_time
    return traj


def _renorm_events(T: float, interval: float, extra=()) -> np.ndarray:
    sign = 1.0 if T >= 0 else -1.0
    n = int(abs(T) / interval)
    ts = {sign * interval * j for j in range(1, n + 1)}
    ts.update(float(t) for t in extra if 0.0 < abs(t) <= abs(T))
    ts.add(T)
    return np.array(sorted(ts, key=abs))


def flow_with_tangent(
    system: FlowSystem,
    state: np.ndarray,
    directions: np.ndarray,
    T: float,
    config: IntegratorConfig = IntegratorConfig(),
    record_times: Sequence[float] = (),
) -> TangentBundleState:
    """Jointly integrate the flow and its variational equation.

    The tangent frame is re-orthonormalized every `renorm_interval` (and at
    each requested record time); per-direction log growth accumulates the
    log of the R-diagonal, so the total is the unnormalized log growth of
    the initial frame.
    """
    state = np.asarray(state, dtype=float)
    frame = np.atleast_2d(np.asarray(directions, dtype=float))
    if frame.shape[0] != system.dimension:
        frame = frame.T
    n, k = frame.shape
    if np.linalg.matrix_rank(frame) < k:
        raise ValueError("tangent directions must be linearly independent")

    if system.tangent_run_hook is not None:
        result = system.tangent_run_hook(state, frame, T, config, record_times)
        if result is not None:
            return result

    # initial QR: fold the initial norms into the accumulated growth so
    # scaling a direction by c shifts its growth by log c exactly
    frame, acc = _qr_accumulate(frame, np.zeros(k))
    hist_t = [0.0]
    hist_logs = [acc.copy()]

    events = _renorm_events(T, config.renorm_interval, record_times)
    t_prev = 0.0
    for t_ev in events:
        dt = t_ev - t_prev
        if dt != 0.0:
            state, frame = _advance_tangent(system, state, frame, dt, config)
        cond = _frame_condition(frame)
        if cond > 1e12:
            warnings.warn(
                f"tangent frame condition number {cond:.2e} exceeds 1e12 "
                "between renormalizations", RuntimeWarning)
        frame, acc = _qr_accumulate(frame, acc)
        hist_t.append(t_ev)
        hist_logs.append(acc.copy())
        t_prev = t_ev

    return TangentBundleState(
        base=state,
        frame=frame,
        log_growth=acc,
        history_times=np.array(hist_t),
        history_logs=np.array(hist_logs),
    )


def _frame_condition(frame: np.ndarray) -> float:
    s = np.linalg.svd(frame, compute_uv=False)
    return float(s[0] / s[-1]) if s[-1] > 0 else np.inf


def _qr_accumulate(frame, acc):
    q, r = np.linalg.qr(frame)
    diag = np.diag(r).copy()
    signs = np.where(diag < 0, -1.0, 1.0)
    q = q * signs[None, :]
    diag = np.abs(diag)
    return q, acc + np.log(diag)


def _advance_tangent(system, state, frame, dt, config):
    n, k = frame.shape
    if system.exact_tangent is not None:
        new_state, prop = system.exact_tangent(state, dt)
        return new_state, prop @ frame

    def rhs(t, y):
        s = y[:n]
        fr = y[n:].reshape(n, k)
        ds = system.vector_field(s)
        dfr = system.jacobian(s) @ fr
        return np.concatenate([ds, dfr.ravel()])

    y0 = np.concatenate([state, frame.ravel()])
    sol = solve_ivp(
        rhs, (0.0, dt), y0, method="RK45",
        rtol=config.rel_tol, atol=config.abs_tol, max_step=config.max_step,
    )
    if not sol.success:
        raise RuntimeError(f"tangent integration failed: {sol.message}")
    y = sol.y[:, -1]
    return y[:n], y[n:].reshape(n, k)


def top_lyapunov(
    system: FlowSystem,
    state: np.ndarray,
    T: float,
    config: IntegratorConfig = IntegratorConfig(),
    t_align: Optional[float] = None,
    seed: int = 0,
) -> float:
    """Largest Lyapunov exponent by renormalized power iteration.

    The exponent is the least-squares slope of the accumulated log growth
    over the trailing window [max(t_align, T/2), T]: both the alignment
    transient and the bounded oscillation of the growth die out of the
    slope as the inverse cube of the window length, versus 1/T for the
    naive growth/T quotient.
    """
    if t_align is None:
        t_align = T / 5.0
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(system.dimension)
    v /= np.linalg.norm(v)
    record = np.arange(1.0, T + 0.5, 1.0)
    tb = flow_with_tangent(system, state, v[:, None], T, config,
                           record_times=record)
    t0 = max(float(t_align), T / 2.0)
    mask = (tb.history_times >= t0) & (tb.history_times <= T)
    ts = tb.history_times[mask]
    gs = tb.history_logs[mask, 0]
    slope = np.polynomial.polynomial.polyfit(ts, gs, 1)[1]
    return float(slope)


def trajectory_to_csv(traj: Trajectory, path, state_labels=None) -> None:
    """Write a trajectory as CSV with IEEE round-trip decimal formatting."""
    n = traj.states.shape[1]
    if state_labels is None:
        state_labels = [f"y{i}" for i in range(n)]
    drift_names = sorted(traj.drifts)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["s", *state_labels, *[f"drift_{d}" for d in drift_names]])
        for t, s in zip(traj.times, traj.states):
            w.writerow([repr(float(t)), *[repr(float(x)) for x in s],
                        *[repr(float(traj.drifts[d])) for d in drift_names]])
