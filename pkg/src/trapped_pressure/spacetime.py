"""Kerr(-de Sitter) spacetime in Boyer-Lindquist coordinates.

Geometric units G = c = 1.  State vectors are ordered
(t, r, theta, phi, p_t, p_r, p_theta, p_phi); momenta are duals of the
coordinate basis.  Everything here is a pure function of immutable
inputs and safe to call from any number of workers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

__all__ = [
    "SpacetimeParams",
    "PhasePoint",
    "HorizonRoots",
    "ConservedSet",
    "ChartError",
    "ParameterError",
    "delta",
    "delta_prime",
    "horizon_roots",
    "metric",
    "inverse_metric",
    "dual_metric",
    "hamiltonian_field",
    "conserved",
]

# indices into the 8-component phase-space state
IDX_T, IDX_R, IDX_THETA, IDX_PHI = 0, 1, 2, 3
IDX_PT, IDX_PR, IDX_PTHETA, IDX_PPHI = 4, 5, 6, 7


class ParameterError(ValueError):
    """Black-hole parameters outside the admissible (subextremal) family."""


class ChartError(ValueError):
    """Point outside the Boyer-Lindquist chart (axis or beyond horizons)."""


def _delta_poly(mass: float, spin: float, lam: float, r):
    return (r * r + spin * spin) * (1.0 - lam * r * r / 3.0) - 2.0 * mass * r


@dataclass(frozen=True)
class HorizonRoots:
    """Real roots of the horizon polynomial, sorted.

    For lam == 0 the quartic degenerates to a quadratic; the two lost
    roots are reported as -inf (r_minus) and +inf (r_cosmo).
    """

    r_minus: float
    r_cauchy: float
    r_event: float
    r_cosmo: float

    def as_dict(self) -> dict:
        return {
            "r_minus": self.r_minus,
            "r_cauchy": self.r_cauchy,
            "r_event": self.r_event,
            "r_cosmo": self.r_cosmo,
        }


@dataclass(frozen=True)
class SpacetimeParams:
    """Subextremal Kerr(-de Sitter) parameters: mass, spin, cosmological constant."""

    mass: float = 1.0
    spin: float = 0.0
    lam: float = 0.0

    def __post_init__(self):
        if not (self.mass > 0.0):
            raise ParameterError(f"mass must be positive, got {self.mass}")
        if self.lam < 0.0:
            raise ParameterError(f"cosmological constant must be >= 0, got {self.lam}")
        if abs(self.spin) >= self.mass:
            raise ParameterError(
                f"subextremality violated: |spin|={abs(self.spin)} >= mass={self.mass}"
            )
        # for lam > 0 the quartic must have four distinct real roots;
        # horizon_roots raises otherwise
        object.__setattr__(self, "_roots", horizon_roots_raw(self.mass, self.spin, self.lam))

    @property
    def roots(self) -> HorizonRoots:
        return self._roots

    @property
    def delta_theta_coeff(self) -> float:
        return self.lam * self.spin * self.spin / 3.0

    @property
    def delta0(self) -> float:
        return 1.0 + self.lam * self.spin * self.spin / 3.0


def delta(params: SpacetimeParams, r: float) -> float:
    """Horizon polynomial (r^2 + a^2)(1 - lam r^2/3) - 2 m r."""
    return _delta_poly(params.mass, params.spin, params.lam, r)


def delta_prime(params: SpacetimeParams, r: float) -> float:
    """d/dr of the horizon polynomial."""
    m, a, lam = params.mass, params.spin, params.lam
    return 2.0 * r * (1.0 - lam * r * r / 3.0) - (r * r + a * a) * 2.0 * lam * r / 3.0 - 2.0 * m


def delta_theta(params: SpacetimeParams, theta: float) -> float:
    c = math.cos(theta)
    return 1.0 + params.delta_theta_coeff * c * c


def horizon_roots_raw(mass: float, spin: float, lam: float) -> HorizonRoots:
    """Root structure of the horizon polynomial (no SpacetimeParams needed)."""
    if lam * mass * mass < 1e-12:
        # quadratic r^2 - 2 m r + a^2; below machine-scale lam the outer
        # quartic roots (+-sqrt(3/lam)) sit beyond any computational domain
        # and the inner pair matches the quadratic to O(lam m^2)
        disc = mass * mass - spin * spin
        if disc <= 0.0:
            raise ParameterError("no real horizon roots: |spin| >= mass")
        s = math.sqrt(disc)
        return HorizonRoots(-math.inf, mass - s, mass + s, math.inf)

    # quartic -(lam/3) r^4 + (1 - lam a^2/3) r^2 - 2 m r + a^2: companion
    # matrix roots, polished by one Newton step each (numerically safe for
    # any lam > 0; the outer roots run off to +-sqrt(3/lam) as lam -> 0)
    coeffs = [-lam / 3.0, 0.0, 1.0 - lam * spin * spin / 3.0, -2.0 * mass,
              spin * spin]
    raw = np.roots(coeffs)
    roots = []
    for z in raw:
        if abs(z.imag) > 1e-8 * max(1.0, abs(z.real)):
            continue
        r = float(z.real)
        dp = (2.0 * r * (1.0 - lam * r * r / 3.0)
              - (r * r + spin * spin) * 2.0 * lam * r / 3.0 - 2.0 * mass)
        if dp != 0.0:
            r -= _delta_poly(mass, spin, lam, r) / dp
        roots.append(r)
    roots = sorted(roots)
    if len(roots) != 4 or len(set(roots)) != 4:
        raise ParameterError(
            f"horizon polynomial needs 4 distinct real roots, found "
            f"{sorted(set(roots))} (mass={mass}, spin={spin}, lam={lam})"
        )
    rts = HorizonRoots(*roots)
    for root in roots:
        if abs(_delta_poly(mass, spin, lam, root)) >= 1e-9 * max(1.0, root**4):
            raise ParameterError(f"horizon root {root} failed residual check")
    return rts


def horizon_roots(params: SpacetimeParams) -> HorizonRoots:
    """Sorted horizon radii; r_cosmo = +inf when lam = 0."""
    return params.roots


@dataclass(frozen=True)
class PhasePoint:
    """Point of the cotangent bundle in Boyer-Lindquist coordinates."""

    t: float
    r: float
    theta: float
    phi: float
    p_t: float
    p_r: float
    p_theta: float
    p_phi: float

    def to_array(self) -> np.ndarray:
        return np.array(
            [self.t, self.r, self.theta, self.phi,
             self.p_t, self.p_r, self.p_theta, self.p_phi]
        )

    @staticmethod
    def from_array(state: np.ndarray) -> "PhasePoint":
        return PhasePoint(*(float(x) for x in state))

    def validate(self, params: SpacetimeParams) -> None:
        rts = params.roots
        if not (rts.r_event < self.r < rts.r_cosmo):
            raise ChartError(
                f"r={self.r} outside ({rts.r_event}, {rts.r_cosmo})"
            )
        if math.sin(self.theta) == 0.0:
            raise ChartError(f"axis point theta={self.theta} excluded from chart")


def _check_chart(params: SpacetimeParams, r: float, theta: float) -> None:
    if math.sin(theta) == 0.0:
        raise ChartError(f"axis point theta={theta} excluded from chart")
    if _delta_poly(params.mass, params.spin, params.lam, r) <= 0.0:
        raise ChartError(f"horizon polynomial non-positive at r={r}")


def metric(params: SpacetimeParams, point: PhasePoint) -> np.ndarray:
    """Forward metric components in the (t, r, theta, phi) basis."""
    a, lam = params.spin, params.lam
    r, th = point.r, point.theta
    _check_chart(params, r, th)
    dlt = delta(params, r)
    dth = delta_theta(params, th)
    d0 = params.delta0
    s2 = math.sin(th) ** 2
    rho2 = r * r + a * a * math.cos(th) ** 2
    ra2 = r * r + a * a

    g = np.zeros((4, 4))
    g[1, 1] = rho2 / dlt
    g[2, 2] = rho2 / dth
    pref = 1.0 / (d0 * d0 * rho2)
    g[0, 0] = pref * (dth * s2 * a * a - dlt)
    g[0, 3] = g[3, 0] = pref * (-dth * s2 * a * ra2 + dlt * a * s2)
    g[3, 3] = pref * (dth * s2 * ra2 * ra2 - dlt * a * a * s2 * s2)
    return g


def inverse_metric(params: SpacetimeParams, point: PhasePoint) -> np.ndarray:
    """Inverse metric components; g^{rr} = Delta(r)/(r^2 + a^2 cos^2 theta)."""
    a = params.spin
    r, th = point.r, point.theta
    _check_chart(params, r, th)
    dlt = delta(params, r)
    dth = delta_theta(params, th)
    d0 = params.delta0
    s2 = math.sin(th) ** 2
    rho2 = r * r + a * a * math.cos(th) ** 2
    ra2 = r * r + a * a

    gi = np.zeros((4, 4))
    gi[1, 1] = dlt / rho2
    gi[2, 2] = dth / rho2
    pref = d0 * d0 / rho2
    gi[0, 0] = pref * (a * a * s2 / dth - ra2 * ra2 / dlt)
    gi[0, 3] = gi[3, 0] = pref * (a / dth - a * ra2 / dlt)
    gi[3, 3] = pref * (1.0 / (dth * s2) - a * a / dlt)
    return gi


def dual_metric(params: SpacetimeParams, point: PhasePoint) -> float:
    """Dual metric function: the squared momentum norm under the inverse metric.

    Degree-2 homogeneous in the momenta; vanishes on null covectors.
    """
    return dual_metric_state(params, point.to_array())


def dual_metric_state(params: SpacetimeParams, state: np.ndarray) -> float:
    a = params.spin
    r, th = state[IDX_R], state[IDX_THETA]
    _check_chart(params, float(r), float(th))
    p_t, p_r, p_th, p_ph = state[IDX_PT], state[IDX_PR], state[IDX_PTHETA], state[IDX_PPHI]
    dlt = delta(params, r)
    dth = delta_theta(params, th)
    d0 = params.delta0
    s2 = np.sin(th) ** 2
    rho2 = r * r + a * a * np.cos(th) ** 2
    pol = (r * r + a * a) * p_t + a * p_ph
    azi = a * s2 * p_t + p_ph
    q = (
        dlt * p_r * p_r
        + dth * p_th * p_th
        + d0 * d0 * azi * azi / (dth * s2)
        - d0 * d0 * pol * pol / dlt
    )
    return float(q / rho2)


def hamiltonian_field(params: SpacetimeParams, point: PhasePoint) -> np.ndarray:
    """Hamilton vector field of the dual metric function.

    Returns (dG/dp_mu, -dG/dx^mu) in state ordering; closed-form partials.
    Note the geodesic flow with unit affine normalization is half of this
    field (the dual metric is |p|^2 rather than |p|^2/2).
    """
    return hamiltonian_field_state(params, point.to_array())


def hamiltonian_field_state(params, state):
    """Closed-form Hamilton field on a raw 8-component state.

    Accepts real or complex entries (complex-step differentiation of the
    field is used for the variational flow's Jacobian).
    """
    a, lam = params.spin, params.lam
    r, th = state[IDX_R], state[IDX_THETA]
    p_t, p_r = state[IDX_PT], state[IDX_PR]
    p_th, p_ph = state[IDX_PTHETA], state[IDX_PPHI]

    sin = np.sin(th)
    cos = np.cos(th)
    s2 = sin * sin
    dlt = (r * r + a * a) * (1.0 - lam * r * r / 3.0) - 2.0 * params.mass * r
    dlt_p = 2.0 * r * (1.0 - lam * r * r / 3.0) - (r * r + a * a) * 2.0 * lam * r / 3.0 - 2.0 * params.mass
    cth = lam * a * a / 3.0
    dth = 1.0 + cth * cos * cos
    dth_p = -2.0 * cth * cos * sin
    d0 = 1.0 + lam * a * a / 3.0
    d02 = d0 * d0
    rho2 = r * r + a * a * cos * cos
    ra2 = r * r + a * a
    pol = ra2 * p_t + a * p_ph          # polar combination, multiplies 1/Delta
    azi = a * s2 * p_t + p_ph           # azimuthal combination, multiplies 1/(Delta_theta sin^2)

    q = (
        dlt * p_r * p_r
        + dth * p_th * p_th
        + d02 * azi * azi / (dth * s2)
        - d02 * pol * pol / dlt
    )
    g_val = q / rho2

    dG_dpt = (2.0 * d02 / rho2) * (a * azi / dth - ra2 * pol / dlt)
    dG_dpr = 2.0 * dlt * p_r / rho2
    dG_dpth = 2.0 * dth * p_th / rho2
    dG_dpph = (2.0 * d02 / rho2) * (azi / (dth * s2) - a * pol / dlt)

    dG_dr = (
        dlt_p * p_r * p_r
        - 4.0 * r * d02 * p_t * pol / dlt
        + d02 * pol * pol * dlt_p / (dlt * dlt)
    ) / rho2 - 2.0 * r * g_val / rho2

    w = dth * s2
    w_p = dth_p * s2 + dth * 2.0 * sin * cos
    dG_dth = (
        dth_p * p_th * p_th
        + d02 * (4.0 * a * sin * cos * p_t * azi / w - azi * azi * w_p / (w * w))
    ) / rho2 + 2.0 * a * a * cos * sin * g_val / rho2

    out = np.empty(8, dtype=np.result_type(state, float))
    out[0] = dG_dpt
    out[1] = dG_dpr
    out[2] = dG_dpth
    out[3] = dG_dpph
    out[4] = 0.0
    out[5] = -dG_dr
    out[6] = -dG_dth
    out[7] = 0.0
    return out


@dataclass(frozen=True)
class ConservedSet:
    """Constants of the geodesic motion used as integration diagnostics."""

    energy: float
    angular_momentum: float
    carter: float
    dual_metric: float

    def to_array(self) -> np.ndarray:
        return np.array([self.energy, self.angular_momentum, self.carter, self.dual_metric])


def conserved(params: SpacetimeParams, point: PhasePoint) -> ConservedSet:
    """Energy, axial angular momentum, Carter-type constant and momentum norm."""
    arr = conserved_state(params, point.to_array())
    return ConservedSet(*(float(x) for x in arr))


def conserved_state(params: SpacetimeParams, state: np.ndarray) -> np.ndarray:
    a = params.spin
    th = state[IDX_THETA]
    energy = -state[IDX_PT]
    ang = state[IDX_PPHI]
    g_val = dual_metric_state(params, state)
    dth = delta_theta(params, float(th))
    d0 = params.delta0
    sin = np.sin(th)
    cos = np.cos(th)
    azi = ang - a * energy * sin * sin
    # Hamilton-Jacobi separation constant of the latitude motion, shifted so
    # that it reduces to p_theta^2 + cos^2(L^2/sin^2 - a^2 E^2) on null
    # geodesics at lam = 0
    carter = (
        dth * state[IDX_PTHETA] ** 2
        + d0 * d0 * azi * azi / (dth * sin * sin)
        - g_val * a * a * cos * cos
        - d0 * d0 * (ang - a * energy) ** 2
    )
    return np.array([energy, ang, float(carter), g_val])
