"""Analytic flows with exactly known topological pressure.

Two ground-truth systems for the estimators:

* ToyNHFlow — a linear saddle crossed with torus rotations.  The trapped
  set {x = y = 0} carries zero entropy and a constant unstable rate nu,
  so P(s) = -s nu exactly.  Normally hyperbolic to every order.
* CatSuspension — suspension of the hyperbolic torus automorphism
  [[2,1],[1,1]] under a unit roof.  The whole (compact) space is trapped,
  entropy h = log((3+sqrt(5))/2), unstable rate h, so P(s) = (1-s) h.
  All expansion is tangent to the trapped set: hyperbolic but not
  normally hyperbolic — the contrast case.
"""

from __future__ import annotations

import math

import numpy as np

from .flow import FlowSystem

__all__ = [
    "CAT_MATRIX",
    "CAT_ENTROPY",
    "make_toy",
    "make_cat_suspension",
    "analytic_pressure",
]

CAT_MATRIX = np.array([[2, 1], [1, 1]], dtype=np.int64)
CAT_ENTROPY = math.log((3.0 + math.sqrt(5.0)) / 2.0)

TWO_PI = 2.0 * math.pi


# ---------------------------------------------------------------------------
# ToyNHFlow: state (x, y, theta1, theta2)


def make_toy(nu: float = 0.5, w1: float = 1.0, w2: float = math.sqrt(2.0)) -> FlowSystem:
    """Linear saddle times torus rotation; trapped set {x = y = 0} x T^2."""
    if nu <= 0.0:
        raise ValueError(f"normal rate must be positive, got {nu}")

    def vector_field(s):
        x, y, t1, t2 = s
        return np.array([nu * x, -nu * y, w1, w2])

    jac = np.diag([nu, -nu, 0.0, 0.0])

    def exact_flow(s, dt):
        x, y, t1, t2 = s
        return np.array([
            x * math.exp(nu * dt),
            y * math.exp(-nu * dt),
            (t1 + w1 * dt) % TWO_PI,
            (t2 + w2 * dt) % TWO_PI,
        ])

    def exact_tangent(s, dt):
        prop = np.diag([math.exp(nu * dt), math.exp(-nu * dt), 1.0, 1.0])
        return exact_flow(s, dt), prop

    def escape_margin(s):
        return 1.0 - (abs(s[0]) + abs(s[1]))

    def embed(states):
        states = np.asarray(states, dtype=float)
        out = np.empty(states.shape[:-1] + (6,))
        out[..., 0] = states[..., 0]
        out[..., 1] = states[..., 1]
        out[..., 2] = np.cos(states[..., 2])
        out[..., 3] = np.sin(states[..., 2])
        out[..., 4] = np.cos(states[..., 3])
        out[..., 5] = np.sin(states[..., 3])
        return out

    def traj_distance(traj, trajs):
        """Flat product metric with arc distance on the torus factors."""
        traj = np.asarray(traj, dtype=float)
        trajs = np.asarray(trajs, dtype=float)
        d_lin = trajs[..., :2] - traj[None, :, :2]
        d_ang = np.abs(trajs[..., 2:] - traj[None, :, 2:]) % TWO_PI
        d_ang = np.minimum(d_ang, TWO_PI - d_ang)
        return np.sqrt((d_lin ** 2).sum(-1) + (d_ang ** 2).sum(-1))

    def trapped_sampler(n, seed):
        rng = np.random.default_rng(seed)
        off = rng.random(2)
        k = max(1, int(round(math.sqrt(n))))
        g1 = (np.arange(k) + off[0]) / k * TWO_PI
        g2 = (np.arange(max(1, n // k)) + off[1]) / max(1, n // k) * TWO_PI
        return [np.array([0.0, 0.0, a, b]) for a in g1 for b in g2]

    def ensemble_hook(samples, times, T_grid, t_align):
        samples = np.asarray(samples, dtype=float)
        aligned = samples.copy()
        aligned[:, 0] *= math.exp(nu * t_align)     # 0 on the trapped set
        aligned[:, 1] *= math.exp(-nu * t_align)
        aligned[:, 2] = (aligned[:, 2] + w1 * t_align) % TWO_PI
        aligned[:, 3] = (aligned[:, 3] + w2 * t_align) % TWO_PI
        traj = np.empty((len(samples), len(times), 4))
        traj[..., 0] = aligned[:, None, 0] * np.exp(nu * times)[None, :]
        traj[..., 1] = aligned[:, None, 1] * np.exp(-nu * times)[None, :]
        traj[..., 2] = (aligned[:, None, 2] + w1 * times[None, :]) % TWO_PI
        traj[..., 3] = (aligned[:, None, 3] + w2 * times[None, :]) % TWO_PI
        lam = np.broadcast_to(nu * np.asarray(T_grid, dtype=float),
                              (len(samples), len(T_grid))).copy()
        return aligned, traj, lam

    return FlowSystem(
        dimension=4,
        vector_field=vector_field,
        jacobian=lambda s: jac,
        escape_margin=escape_margin,
        trapped_sampler=trapped_sampler,
        embed=embed,
        invariants_list=[("saddle_product", lambda s: float(s[0] * s[1]))],
        name=f"toy_nh(nu={nu}, w=({w1}, {w2}))",
        metadata={"fixture": "toy", "nu": nu, "w1": w1, "w2": w2},
        exact_flow=exact_flow,
        exact_tangent=exact_tangent,
        ensemble_hook=ensemble_hook,
        traj_distance=traj_distance,
    )


# ---------------------------------------------------------------------------
# CatSuspension: state (z1, z2, s) in T^2 x [0, 1), gluing (z, 1) ~ (A z, 0)


def _cat_advance(state, dt):
    z = np.asarray(state[:2], dtype=float)
    total = state[2] + dt
    k = int(math.floor(total))
    if k != 0:
        ak = np.linalg.matrix_power(CAT_MATRIX.astype(float), k)
        z = ak @ z
    return np.array([z[0] % 1.0, z[1] % 1.0, total - k]), k


def _torus_dist_sq(a, b):
    d = np.abs(a - b) % 1.0
    d = np.minimum(d, 1.0 - d)
    return (d ** 2).sum(-1)


def make_cat_suspension() -> FlowSystem:
    """Unit-roof suspension of the cat map; compact, nothing escapes."""

    def exact_flow(state, dt):
        return _cat_advance(state, dt)[0]

    def exact_tangent(state, dt):
        new, k = _cat_advance(state, dt)
        prop = np.eye(3)
        if k != 0:
            prop[:2, :2] = np.linalg.matrix_power(CAT_MATRIX.astype(float), k)
        return new, prop

    def embed(states):
        """Chordal torus embedding scaled so chart distances are never
        overestimated (circle radius 1/(2 pi) <= arc/chord ratio bound)."""
        states = np.asarray(states, dtype=float)
        r = 1.0 / TWO_PI
        out = np.empty(states.shape[:-1] + (5,))
        out[..., 0] = r * np.cos(TWO_PI * states[..., 0])
        out[..., 1] = r * np.sin(TWO_PI * states[..., 0])
        out[..., 2] = r * np.cos(TWO_PI * states[..., 1])
        out[..., 3] = r * np.sin(TWO_PI * states[..., 1])
        out[..., 4] = states[..., 2]
        return out

    def traj_distance(traj, trajs):
        """Quotient metric of the suspension: minimum over the identity
        and the two seam identifications (z,1) ~ (A z, 0)."""
        traj = np.asarray(traj, dtype=float)
        trajs = np.asarray(trajs, dtype=float)
        z1, s1 = traj[None, :, :2], traj[None, :, 2]
        z2, s2 = trajs[..., :2], trajs[..., 2]
        a_fwd = CAT_MATRIX.astype(float)
        a_bwd = np.linalg.inv(a_fwd)
        d0 = _torus_dist_sq(z1, z2) + (s1 - s2) ** 2
        dp = _torus_dist_sq(z1, z2 @ a_fwd.T) + (s1 - s2 + 1.0) ** 2
        dm = _torus_dist_sq(z1, z2 @ a_bwd.T) + (s1 - s2 - 1.0) ** 2
        return np.sqrt(np.minimum(d0, np.minimum(dp, dm)))

    def tree_points(states):
        """Embeds plus seam representatives so the prefilter never misses
        a quotient-close pair across the roof identification."""
        states = np.asarray(states, dtype=float)
        owners = [np.arange(len(states))]
        embeds = [embed(states)]
        a_fwd = CAT_MATRIX.astype(float)
        a_bwd = np.linalg.inv(a_fwd)
        hi = np.nonzero(states[:, 2] > 0.7)[0]
        if len(hi):
            shifted = states[hi].copy()
            shifted[:, :2] = (shifted[:, :2] @ a_fwd.T) % 1.0
            emb = embed(shifted)
            emb[:, 4] = states[hi, 2] - 1.0
            embeds.append(emb)
            owners.append(hi)
        lo = np.nonzero(states[:, 2] < 0.3)[0]
        if len(lo):
            shifted = states[lo].copy()
            shifted[:, :2] = (shifted[:, :2] @ a_bwd.T) % 1.0
            emb = embed(shifted)
            emb[:, 4] = states[lo, 2] + 1.0
            embeds.append(emb)
            owners.append(lo)
        return np.vstack(embeds), np.concatenate(owners)

    def trapped_sampler(n, seed):
        # low-discrepancy rather than a lattice: packing counts against a
        # regular grid carry resonance artifacts at grid-commensurate eps
        from scipy.stats import qmc

        pts = qmc.Halton(3, scramble=True, seed=seed).random(n)
        return list(pts)

    def _batch_flow(states, dt):
        """Vectorized exact flow of (N,3) suspension states by time dt."""
        tot = states[:, 2] + dt
        k = np.floor(tot).astype(np.int64)
        z = states[:, :2].copy()
        for kk in np.unique(k):
            mask = k == kk
            ak = np.linalg.matrix_power(CAT_MATRIX.astype(float), int(kk))
            z[mask] = (z[mask] @ ak.T) % 1.0
        out = np.empty_like(states)
        out[:, :2] = z
        out[:, 2] = tot - k
        return out

    def ensemble_hook(samples, times, T_grid, t_align):
        samples = np.asarray(samples, dtype=float)
        aligned = _batch_flow(samples, t_align)
        traj = np.empty((len(samples), len(times), 3))
        for j, t in enumerate(times):
            traj[:, j, :] = _batch_flow(aligned, float(t))
        # the unstable direction grows by one factor of the cat matrix per
        # seam crossing: lambda^u_T = h * (#crossings in (0, T])
        s0 = aligned[:, 2]
        lam = np.stack(
            [CAT_ENTROPY * np.floor(s0 + T) for T in np.asarray(T_grid, float)],
            axis=1)
        return aligned, traj, lam

    return FlowSystem(
        dimension=3,
        vector_field=lambda s: np.array([0.0, 0.0, 1.0]),
        jacobian=lambda s: np.zeros((3, 3)),
        escape_margin=lambda s: 1.0,
        trapped_sampler=trapped_sampler,
        embed=embed,
        invariants_list=[],
        name="cat_suspension",
        metadata={"fixture": "cat", "entropy": CAT_ENTROPY},
        exact_flow=exact_flow,
        exact_tangent=exact_tangent,
        ensemble_hook=ensemble_hook,
        traj_distance=traj_distance,
        tree_points=tree_points,
    )


def analytic_pressure(system: FlowSystem, s: float) -> float:
    """Closed-form pressure of a fixture at weight exponent s."""
    kind = system.metadata.get("fixture")
    if kind == "toy":
        return -s * system.metadata["nu"]
    if kind == "cat":
        return (1.0 - s) * CAT_ENTROPY
    raise ValueError(f"no analytic pressure for system {system.name!r}")
