"""Trapped set of the Kerr(-de Sitter) null geodesic flow.

The trapped set projects to the photon region: the band of radii carrying
spherical photon orbits.  We sample its compact section {G = 0, E = 1}
(exponents scale linearly in the energy, so nothing is lost) and decide
trappedness by finite-horizon escape from the horizon-bounded r-band.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from . import _kerr_fast as fast
from .flow import FlowSystem, IntegratorConfig, TangentBundleState, integrate
from .spacetime import (
    IDX_R, IDX_PR, IDX_THETA,
    ChartError,
    PhasePoint,
    SpacetimeParams,
    conserved_state,
    delta,
    delta_prime,
    delta_theta,
    dual_metric_state,
    hamiltonian_field_state,
)

__all__ = [
    "PhotonOrbitParams",
    "TrappedSample",
    "NoSolutionError",
    "spherical_orbit_constants",
    "photon_region_bounds",
    "sample_trapped_set",
    "samples_to_csv",
    "is_trapped",
    "kerr_system",
]

AXIS_MARGIN = 1e-6   # Boyer-Lindquist axis neighborhood excluded from sampling
SPIN_FLOOR = 1e-9    # below this (in units of mass) the photon region is
# narrower than root-finding precision; use the non-rotating branch
IMPACT_MARGIN = 0.05  # skip orbit families with |L_z/E| below this: they
# thread the axis neighborhood, where the chart degenerates


class NoSolutionError(ValueError):
    """No spherical photon orbit with the requested radius."""


@dataclass(frozen=True)
class PhotonOrbitParams:
    """Constants of a spherical photon orbit (energy-normalized)."""

    r_sphere: float
    impact: float           # L_z / E
    carter_ratio: float     # Q / E^2

    @property
    def separation_constant(self) -> float:
        return self.carter_ratio  # alias; see latitude_constant for the shifted form


def _latitude_constant(params: SpacetimeParams, orbit: PhotonOrbitParams) -> float:
    d0 = params.delta0
    return orbit.carter_ratio + d0 * d0 * (orbit.impact - params.spin) ** 2


def radial_potential(params: SpacetimeParams, orbit: PhotonOrbitParams, r: float) -> float:
    """Potential whose double zero marks a spherical orbit: Delta^2 p_r^2 = R(r)."""
    a, d0 = params.spin, params.delta0
    kc = _latitude_constant(params, orbit)
    w = (r * r + a * a) - a * orbit.impact
    return d0 * d0 * w * w - delta(params, r) * kc


def _photon_sphere_radius(params: SpacetimeParams) -> float:
    """Non-rotating photon sphere: root of 4 Delta(r) - r Delta'(r)."""
    f = lambda r: 4.0 * delta(params, r) - r * delta_prime(params, r)
    lo = params.roots.r_event * (1.0 + 1e-9)
    hi = _scan_upper(params)
    return brentq(f, lo, hi, xtol=1e-13)


def _scan_upper(params: SpacetimeParams) -> float:
    """Upper end of the radius scan: below the maximum of Delta (where the
    spherical-orbit elimination degenerates) and below the cosmological horizon."""
    m = params.mass
    if params.lam == 0.0:
        return 6.0 * m
    # Delta' has a single positive root beyond which Delta decreases to r_c
    lo = params.roots.r_event
    hi = params.roots.r_cosmo
    f = lambda r: delta_prime(params, r)
    if f(lo) <= 0.0:
        raise NoSolutionError("horizon polynomial not increasing above the event horizon")
    r_peak = brentq(f, lo, hi, xtol=1e-12)
    return r_peak * (1.0 - 1e-9)


def spherical_orbit_constants(params: SpacetimeParams, r: float) -> PhotonOrbitParams:
    """Impact parameter and Carter ratio of the spherical photon orbit at r.

    Derived by eliminating the separation constant from the simultaneous
    vanishing of the radial potential and its derivative; closed form for
    every cosmological constant.
    """
    a, d0 = params.spin, params.delta0
    m = params.mass
    if not (params.roots.r_event < r < params.roots.r_cosmo):
        raise NoSolutionError(f"radius {r} not between the horizons")
    if abs(a) < SPIN_FLOOR * m:
        # the region is narrower than root-finding precision; treat as
        # non-rotating (the impact parameter is then a free family label)
        r_ph = _photon_sphere_radius(params)
        if abs(r - r_ph) > 1e-8 * m:
            raise NoSolutionError(
                f"zero spin admits spherical photon orbits only at r={r_ph:.12g}"
            )
        kc = d0 * d0 * r ** 4 / delta(params, r)
        return PhotonOrbitParams(r, 0.0, kc - d0 * d0 * a * a)
    dlt = delta(params, r)
    dlt_p = delta_prime(params, r)
    if dlt_p <= 0.0:
        raise NoSolutionError(f"radius {r} beyond the increasing branch of Delta")
    w = 4.0 * r * dlt / dlt_p
    impact = ((r * r + a * a) - w) / a
    kc = d0 * d0 * w * w / dlt
    eta = kc - d0 * d0 * (impact - a) ** 2
    orbit = PhotonOrbitParams(r, impact, eta)
    if eta < -1e-12 * max(1.0, kc):
        raise NoSolutionError(f"radius {r} outside the photon region (eta={eta:.3g})")
    return orbit


def _eta_of_r(params: SpacetimeParams, r: float) -> float:
    a, d0 = params.spin, params.delta0
    dlt = delta(params, r)
    dlt_p = delta_prime(params, r)
    w = 4.0 * r * dlt / dlt_p
    impact = ((r * r + a * a) - w) / a
    return d0 * d0 * w * w / dlt - d0 * d0 * (impact - a) ** 2


def photon_region_bounds(params: SpacetimeParams) -> tuple:
    """Radial interval admitting spherical photon orbits with Q >= 0."""
    if abs(params.spin) < SPIN_FLOOR * params.mass:
        r_ph = _photon_sphere_radius(params)
        return (r_ph, r_ph)
    lo = params.roots.r_event * (1.0 + 1e-7)
    hi = _scan_upper(params)
    # eta < 0 at both scan ends (w -> 0 at the horizon, w -> inf at the
    # Delta peak) and eta > 0 at the non-rotating photon-sphere radius,
    # which always lies inside the region -- two safe brackets, robust
    # even when the region is O(spin) narrow
    r_mid = _photon_sphere_radius(params)
    f = lambda r: _eta_of_r(params, r)
    if not (f(lo) < 0.0 < f(r_mid) and f(hi) < 0.0):
        raise NoSolutionError("photon region boundaries not bracketed")
    r1 = brentq(f, lo, r_mid, xtol=1e-13)
    r2 = brentq(f, r_mid, hi, xtol=1e-13)
    return (r1, r2)


def latitude_potential(params: SpacetimeParams, orbit: PhotonOrbitParams, theta: float) -> float:
    """p_theta^2 as a function of latitude on the given spherical orbit (E = 1)."""
    a, d0 = params.spin, params.delta0
    dth = delta_theta(params, theta)
    sin = math.sin(theta)
    kc = _latitude_constant(params, orbit)
    azi = orbit.impact - a * sin * sin
    return (kc - d0 * d0 * azi * azi / (dth * sin * sin)) / dth


def _latitude_band(params: SpacetimeParams, orbit: PhotonOrbitParams) -> tuple:
    """[theta_min, pi - theta_min] band where the latitude potential is >= 0."""
    f = lambda th: latitude_potential(params, orbit, th)
    lo = AXIS_MARGIN
    if f(lo) >= 0.0:
        return (lo, math.pi - lo)
    th_min = brentq(f, lo, math.pi / 2.0, xtol=1e-13)
    return (th_min, math.pi - th_min)


@dataclass(frozen=True)
class TrappedSample:
    """Point of the trapped set on the section {G = 0, E = 1}."""

    point: PhasePoint
    r_sphere: float
    theta: float
    phi: float
    sign_p_theta: int

    def to_array(self) -> np.ndarray:
        return self.point.to_array()


def _orbit_grid(params: SpacetimeParams, n: int, seed: int):
    """Deterministic low-discrepancy layout over (orbit family, theta, sign, phi)."""
    rng = np.random.default_rng(seed)
    off = rng.random(3)
    n_phi = 4
    n_signs = 2
    cells = max(1, math.ceil(n / (n_phi * n_signs)))
    n_fam = max(1, int(round(math.sqrt(2.0 * cells))))
    n_th = max(1, math.ceil(cells / n_fam))
    phis = (np.arange(n_phi) + off[2]) * (2.0 * math.pi / n_phi) % (2.0 * math.pi)

    if abs(params.spin) < SPIN_FLOOR * params.mass:
        r_ph = _photon_sphere_radius(params)
        base = spherical_orbit_constants(params, r_ph)
        kc = _latitude_constant(params, base)
        lmax = math.sqrt(kc) / params.delta0
        u = (np.arange(n_fam) + off[0]) / n_fam
        impacts = (2.0 * u - 1.0) * lmax * 0.999
        orbits = [
            PhotonOrbitParams(r_ph, float(L), kc - params.delta0 ** 2 * L * L)
            for L in impacts if abs(L) >= IMPACT_MARGIN
        ]
    else:
        r1, r2 = photon_region_bounds(params)
        u = (np.arange(n_fam) + off[0]) / n_fam
        radii = r1 + (r2 - r1) * (0.002 + 0.996 * u)
        orbits = [spherical_orbit_constants(params, float(r)) for r in radii]
        orbits = [o for o in orbits if abs(o.impact) >= IMPACT_MARGIN]
    return orbits, n_th, phis, off[1]


def sample_trapped_set(params: SpacetimeParams, n: int, seed: int = 0) -> list:
    """Deterministic covering of the trapped-set section by TrappedSamples."""
    if n < 1:
        raise ValueError("need at least one sample")
    orbits, n_th, phis, th_off = _orbit_grid(params, n, seed)
    samples = []
    for orbit in orbits:
        th_lo, th_hi = _latitude_band(params, orbit)
        # stay strictly inside the band so the latitude potential is positive
        pad = 1e-9 * (th_hi - th_lo)
        thetas = th_lo + pad + (th_hi - th_lo - 2 * pad) * ((np.arange(n_th) + th_off) / n_th)
        for theta in thetas:
            pot = latitude_potential(params, orbit, float(theta))
            if pot < 0.0:
                continue  # infeasible cell (can occur from the grid offset)
            p_th_mag = math.sqrt(pot)
            for sign in (1, -1):
                for phi in phis:
                    point = PhasePoint(
                        t=0.0, r=orbit.r_sphere, theta=float(theta), phi=float(phi),
                        p_t=-1.0, p_r=0.0, p_theta=sign * p_th_mag, p_phi=orbit.impact,
                    )
                    g_val = dual_metric_state(params, point.to_array())
                    if abs(g_val) > 1e-10:
                        continue
                    samples.append(TrappedSample(point, orbit.r_sphere, float(theta),
                                                 float(phi), sign))
    return samples


def samples_to_csv(samples, path) -> None:
    """Write trapped samples as CSV: provenance plus the 8 phase coordinates."""
    import csv

    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["r_sphere", "theta", "phi", "sign_p_theta",
                    "t", "r", "theta_c", "phi_c", "p_t", "p_r", "p_theta", "p_phi"])
        for s in samples:
            w.writerow([repr(s.r_sphere), repr(s.theta), repr(s.phi), s.sign_p_theta,
                        *[repr(float(x)) for x in s.to_array()]])


def is_trapped(
    system: FlowSystem,
    state: np.ndarray,
    T_max: float = 150.0,
    delta_margin: float = None,
    config: IntegratorConfig = IntegratorConfig(),
) -> tuple:
    """(backward-trapped, forward-trapped, trapped) by finite-horizon escape.

    Points recognized as lying on an analytically invariant set are flowed
    on it; everything else is integrated with the full field until the
    escape margin trips or the horizon time is exhausted.
    """
    state = np.asarray(state, dtype=float)
    margin_fn = system.escape_margin
    if delta_margin is not None and "margin_with_delta" in system.metadata:
        margin_fn = system.metadata["margin_with_delta"](delta_margin)
    if system.metadata.get("on_invariant_set") is not None and \
            system.metadata["on_invariant_set"](state):
        traj_f = integrate(system, state, T_max, config, sample_dt=1.0)
        traj_b = integrate(system, state, -T_max, config, sample_dt=1.0)
        fwd = all(margin_fn(s) > 0.0 for s in traj_f.states)
        bwd = all(margin_fn(s) > 0.0 for s in traj_b.states)
        return (bwd, fwd, bwd and fwd)

    escape_hook = system.metadata.get("escape_run")
    if escape_hook is not None:
        esc_f, _ = escape_hook(state, T_max, delta_margin)
        esc_b, _ = escape_hook(state, -T_max, delta_margin)
    else:
        sys_local = system
        if margin_fn is not system.escape_margin:
            import dataclasses
            sys_local = dataclasses.replace(system, escape_margin=margin_fn)
        esc_f = integrate(sys_local, state, T_max, config, sample_dt=1.0).escaped
        esc_b = integrate(sys_local, state, -T_max, config, sample_dt=1.0).escaped
    return (not esc_b, not esc_f, not (esc_f or esc_b))


def _kerr_embed(states: np.ndarray) -> np.ndarray:
    """Metric embedding of phase points: t dropped (stationarity quotient),
    phi on the unit circle (axisymmetry-compatible covering metric)."""
    states = np.asarray(states, dtype=float)
    out = np.empty(states.shape[:-1] + (9,))
    out[..., 0] = states[..., 1]                 # r
    out[..., 1] = states[..., 2]                 # theta
    out[..., 2] = np.cos(states[..., 3])
    out[..., 3] = np.sin(states[..., 3])
    out[..., 4] = states[..., 4]                 # p_t
    out[..., 5] = states[..., 5]                 # p_r
    out[..., 6] = states[..., 6]                 # p_theta
    out[..., 7] = states[..., 7]                 # p_phi
    out[..., 8] = 0.0
    return out[..., :8]


def kerr_system(
    params: SpacetimeParams,
    delta_margin: float = 0.1,
    r_out: float = None,
    distance_scale: float = 1.0,
) -> FlowSystem:
    """FlowSystem for the affine-normalized null geodesic flow."""
    m, a, lam = params.mass, params.spin, params.lam
    r_event = params.roots.r_event
    r_cosmo = params.roots.r_cosmo
    if r_out is None:
        r_out = 50.0 * m

    def bounds_for(dm):
        return (r_event + dm, min(r_cosmo - dm, r_out) if np.isfinite(r_cosmo)
                else r_out)

    r_min, r_max = bounds_for(delta_margin)

    def vector_field(y):
        return fast.field8(np.asarray(y, dtype=float), m, a, lam)

    def jacobian(y):
        return fast.jac8(np.asarray(y, dtype=float), m, a, lam)

    def escape_margin(y):
        return float(min(y[IDX_R] - r_min, r_max - y[IDX_R]))

    def margin_with_delta(dm):
        lo, hi = bounds_for(dm)
        return lambda y: float(min(y[IDX_R] - lo, hi - y[IDX_R]))

    def trapped_sampler(n, seed):
        return [s.to_array() for s in sample_trapped_set(params, n, seed)]

    def on_invariant_set(state):
        if abs(state[IDX_PR]) > 1e-10:
            return False
        f = hamiltonian_field_state(params, state)
        # relative test: near the axis the theta components blow up and
        # roundoff in the exactly-zero radial pair scales with them
        tol = 1e-8 * max(1.0, float(np.max(np.abs(f))))
        return abs(f[IDX_R]) < tol and abs(f[IDX_PR]) < tol

    def orbit_run_hook(state, times, config):
        if not on_invariant_set(state):
            return None
        return fast.orbit_run(
            np.asarray(state, dtype=float), m, a, lam,
            np.asarray(times, dtype=float),
            config.rel_tol, config.abs_tol, config.max_step, True,
        )

    def tangent_run_hook(state, frame, T, config, record_times):
        if not on_invariant_set(state):
            return None
        events = _tangent_events(T, config.renorm_interval, record_times)
        acc_hist, base_hist, final_frame = fast.tangent_run(
            np.asarray(state, dtype=float), np.asarray(frame, dtype=float),
            m, a, lam, events,
            config.rel_tol, config.abs_tol, config.max_step,
            config.renorm_interval,
        )
        k = frame.shape[1]
        hist_t = np.concatenate([[0.0], events])
        # fold in the initial norms exactly as the generic path does
        _, r0 = np.linalg.qr(np.asarray(frame, dtype=float))
        acc0 = np.log(np.abs(np.diag(r0)))
        hist_logs = np.vstack([acc0, acc_hist + acc0[None, :]])
        return TangentBundleState(
            base=base_hist[-1] if len(base_hist) else np.asarray(state, float),
            frame=final_frame,
            log_growth=hist_logs[-1],
            history_times=hist_t,
            history_logs=hist_logs,
        )

    def escape_run(state, T, dm=None):
        lo, hi = bounds_for(delta_margin if dm is None else dm)
        cfg = IntegratorConfig(rel_tol=1e-9, abs_tol=1e-9, max_step=0.5)
        return fast.escape_run(np.asarray(state, dtype=float), m, a, lam, float(T),
                               lo, hi, cfg.rel_tol, cfg.abs_tol, cfg.max_step)

    def invariant(idx):
        return lambda y: float(conserved_state(params, y)[idx])

    return FlowSystem(
        dimension=8,
        vector_field=vector_field,
        jacobian=jacobian,
        escape_margin=escape_margin,
        trapped_sampler=trapped_sampler,
        embed=_kerr_embed,
        invariants_list=[
            ("energy", invariant(0)),
            ("angular_momentum", invariant(1)),
            ("carter", invariant(2)),
            ("dual_metric", invariant(3)),
        ],
        name=f"kerr(m={m}, a={a}, lam={lam})",
        metadata={
            "params": params,
            "delta_margin": delta_margin,
            "margin_with_delta": margin_with_delta,
            "on_invariant_set": on_invariant_set,
            "escape_run": escape_run,
        },
        orbit_run_hook=orbit_run_hook,
        tangent_run_hook=tangent_run_hook,
        distance_scale=distance_scale,
    )


def _tangent_events(T, interval, record_times):
    sign = 1.0 if T >= 0 else -1.0
    n = int(abs(T) / interval)
    ts = {round(sign * interval * j, 12) for j in range(1, n + 1)}
    ts.update(round(float(t), 12) for t in record_times if 0.0 < abs(t) <= abs(T))
    ts.add(round(float(T), 12))
    return np.array(sorted(ts, key=abs))
