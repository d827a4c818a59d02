"""Compiled kernels for the Kerr(-de Sitter) geodesic and variational flow.

The geodesic vector field here is the affine-normalized one, i.e. half the
Hamilton field of the squared-momentum function, so that dx^mu/ds equals
g^{mu nu} p_nu.  The Jacobian of the field is obtained by complex-step
differentiation (machine precision, no subtractive cancellation).

Spherical-photon-orbit initial data lies on an invariant set on which the
radial pair (r, p_r) is constant; the "pinned" integrators exploit this by
freezing that pair, which is what makes long-horizon tangent runs along
trapped orbits numerically stable despite the normal instability.
"""

import numpy as np
from numba import njit

# state ordering: (t, r, theta, phi, p_t, p_r, p_theta, p_phi)

# Dormand-Prince 5(4) coefficients
_A21 = 1.0 / 5.0
_A31, _A32 = 3.0 / 40.0, 9.0 / 40.0
_A41, _A42, _A43 = 44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0
_A51, _A52, _A53, _A54 = 19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0
_A61, _A62, _A63, _A64, _A65 = (9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0,
                                49.0 / 176.0, -5103.0 / 18656.0)
_B1, _B3, _B4, _B5, _B6 = 35.0 / 384.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0
_E1, _E3, _E4, _E5, _E6, _E7 = (71.0 / 57600.0, -71.0 / 16695.0, 71.0 / 1920.0,
                                -17253.0 / 339200.0, 22.0 / 525.0, -1.0 / 40.0)


@njit(cache=True)
def field8(y, m, a, lam):
    """Affine-normalized geodesic field; works on float64 or complex128 states."""
    r = y[1]
    th = y[2]
    p_t = y[4]
    p_r = y[5]
    p_th = y[6]
    p_ph = y[7]

    sin = np.sin(th)
    cos = np.cos(th)
    s2 = sin * sin
    dlt = (r * r + a * a) * (1.0 - lam * r * r / 3.0) - 2.0 * m * r
    dlt_p = 2.0 * r * (1.0 - lam * r * r / 3.0) - (r * r + a * a) * 2.0 * lam * r / 3.0 - 2.0 * m
    cth = lam * a * a / 3.0
    dth = 1.0 + cth * cos * cos
    dth_p = -2.0 * cth * cos * sin
    d0 = 1.0 + lam * a * a / 3.0
    d02 = d0 * d0
    rho2 = r * r + a * a * cos * cos
    ra2 = r * r + a * a
    pol = ra2 * p_t + a * p_ph
    azi = a * s2 * p_t + p_ph

    q = (dlt * p_r * p_r + dth * p_th * p_th
         + d02 * azi * azi / (dth * s2) - d02 * pol * pol / dlt)
    g_val = q / rho2

    dG_dpt = (2.0 * d02 / rho2) * (a * azi / dth - ra2 * pol / dlt)
    dG_dpr = 2.0 * dlt * p_r / rho2
    dG_dpth = 2.0 * dth * p_th / rho2
    dG_dpph = (2.0 * d02 / rho2) * (azi / (dth * s2) - a * pol / dlt)

    dG_dr = (dlt_p * p_r * p_r
             - 4.0 * r * d02 * p_t * pol / dlt
             + d02 * pol * pol * dlt_p / (dlt * dlt)) / rho2 - 2.0 * r * g_val / rho2

    w = dth * s2
    w_p = dth_p * s2 + dth * 2.0 * sin * cos
    dG_dth = (dth_p * p_th * p_th
              + d02 * (4.0 * a * sin * cos * p_t * azi / w - azi * azi * w_p / (w * w))
              ) / rho2 + 2.0 * a * a * cos * sin * g_val / rho2

    out = np.empty(8, dtype=y.dtype)
    out[0] = 0.5 * dG_dpt
    out[1] = 0.5 * dG_dpr
    out[2] = 0.5 * dG_dpth
    out[3] = 0.5 * dG_dpph
    out[4] = 0.0
    out[5] = -0.5 * dG_dr
    out[6] = -0.5 * dG_dth
    out[7] = 0.0
    return out


@njit(cache=True)
def jac8(y, m, a, lam):
    """Complex-step Jacobian of the geodesic field, 8x8."""
    h = 1e-200
    J = np.empty((8, 8))
    yc = y.astype(np.complex128)
    for j in range(8):
        orig = yc[j]
        yc[j] = orig + 1j * h
        f = field8(yc, m, a, lam)
        for i in range(8):
            J[i, j] = f[i].imag / h
        yc[j] = orig
    return J


@njit(cache=True)
def _rhs(y, m, a, lam, k, pinned):
    """Base flow (optionally with (r, p_r) frozen) plus variational frame."""
    dy = np.empty(8 + 8 * k)
    base = y[:8]
    f = field8(base, m, a, lam)
    if pinned:
        f[1] = 0.0
        f[5] = 0.0
    dy[:8] = f
    if k > 0:
        J = jac8(base, m, a, lam)
        fr = np.ascontiguousarray(y[8:]).reshape(8, k)
        dfr = J @ fr
        dy[8:] = dfr.ravel()
    return dy


@njit(cache=True)
def _step(y, h, m, a, lam, k, pinned):
    """One Dormand-Prince 5(4) step; returns (y5, scaled-error input vector)."""
    k1 = _rhs(y, m, a, lam, k, pinned)
    k2 = _rhs(y + h * (_A21 * k1), m, a, lam, k, pinned)
    k3 = _rhs(y + h * (_A31 * k1 + _A32 * k2), m, a, lam, k, pinned)
    k4 = _rhs(y + h * (_A41 * k1 + _A42 * k2 + _A43 * k3), m, a, lam, k, pinned)
    k5 = _rhs(y + h * (_A51 * k1 + _A52 * k2 + _A53 * k3 + _A54 * k4), m, a, lam, k, pinned)
    k6 = _rhs(y + h * (_A61 * k1 + _A62 * k2 + _A63 * k3 + _A64 * k4 + _A65 * k5),
              m, a, lam, k, pinned)
    y5 = y + h * (_B1 * k1 + _B3 * k3 + _B4 * k4 + _B5 * k5 + _B6 * k6)
    k7 = _rhs(y5, m, a, lam, k, pinned)
    err = h * (_E1 * k1 + _E3 * k3 + _E4 * k4 + _E5 * k5 + _E6 * k6 + _E7 * k7)
    return y5, err


@njit(cache=True)
def _advance(y, t, t_target, m, a, lam, k, pinned, rtol, atol, hmax, h0):
    """Adaptive stepping from t to t_target (either direction).

    Callers pre-scale rtol/atol below the user-facing tolerance so that
    conserved-quantity drift over long horizons stays near the tolerance
    itself rather than N_steps times it.
    """
    direction = 1.0 if t_target >= t else -1.0
    h = direction * min(abs(h0), hmax)
    while direction * (t_target - t) > 1e-14:
        if direction * (t + h - t_target) > 0.0:
            h = t_target - t
        y_new, err = _step(y, h, m, a, lam, k, pinned)
        # RMS of componentwise scaled error
        acc = 0.0
        for i in range(y.shape[0]):
            sc = atol + rtol * max(abs(y[i]), abs(y_new[i]))
            e = err[i] / sc
            acc += e * e
        enorm = np.sqrt(acc / y.shape[0])
        if enorm <= 1.0:
            t = t + h
            y = y_new
            fac = 10.0 if enorm == 0.0 else min(10.0, max(0.2, 0.9 * enorm ** -0.2))
        else:
            fac = max(0.2, 0.9 * enorm ** -0.2)
        h = direction * min(abs(h * fac), hmax)
        if abs(h) < 1e-15:
            # step-size underflow; bail with current state
            break
    return y, t, h


@njit(cache=True)
def orbit_run(y0, m, a, lam, t_record, rtol, atol, hmax, pinned):
    """Integrate the base flow, recording states at the given times."""
    nrec = t_record.shape[0]
    out = np.empty((nrec, 8))
    y = y0.copy()
    t = 0.0
    h0 = 0.01
    # trajectories are judged on conserved-quantity drift over hundreds of
    # time units; base-flow steps are cheap, so aim three decades below
    rtol = 0.001 * rtol
    atol = 0.001 * atol
    for i in range(nrec):
        tt = t_record[i]
        if tt != t:
            y, t, h = _advance(y, t, tt, m, a, lam, 0, pinned, rtol, atol, hmax, h0)
            h0 = abs(h)
        out[i] = y
    return out


@njit(cache=True)
def _qr_accumulate(frame, acc):
    q, r = np.linalg.qr(frame)
    for j in range(frame.shape[1]):
        d = r[j, j]
        if d < 0.0:
            d = -d
            for i in range(frame.shape[0]):
                q[i, j] = -q[i, j]
        acc[j] += np.log(d)
    return q, acc


@njit(cache=True)
def tangent_run(y0, frame0, m, a, lam, t_events, rtol, atol, hmax, renorm_hint):
    """Variational flow along a pinned orbit with QR renormalization.

    t_events must be monotone in |t| starting after 0; the frame is
    re-orthonormalized at every event and the accumulated per-direction log
    growth is recorded there.  Returns (acc at each event, base state at
    each event, final frame).
    """
    k = frame0.shape[1]
    acc = np.zeros(k)
    frame, acc = _qr_accumulate(frame0.copy(), acc)

    nev = t_events.shape[0]
    acc_hist = np.empty((nev, k))
    base_hist = np.empty((nev, 8))

    y = np.empty(8 + 8 * k)
    y[:8] = y0
    y[8:] = frame.ravel()
    t = 0.0
    h0 = 0.01
    # growth accumulation tolerates more local error than drift monitoring
    rtol = 0.1 * rtol
    atol = 0.1 * atol
    for e in range(nev):
        tt = t_events[e]
        if tt != t:
            y, t, h = _advance(y, t, tt, m, a, lam, k, True, rtol, atol, hmax, h0)
            h0 = abs(h)
        frame = np.ascontiguousarray(y[8:]).reshape(8, k).copy()
        frame, acc = _qr_accumulate(frame, acc)
        y[8:] = frame.ravel()
        acc_hist[e] = acc
        base_hist[e] = y[:8]
    return acc_hist, base_hist, frame


@njit(cache=True)
def escape_run(y0, m, a, lam, T, r_min, r_max, rtol, atol, hmax):
    """Integrate the full field until |t| = |T| or the r-band is left.

    Returns (escaped, t_exit): t_exit is the crossing time bisected to 1e-8
    when an escape occurs, else T.
    """
    y = y0.copy()
    t = 0.0
    direction = 1.0 if T >= 0 else -1.0
    h = direction * min(0.01, hmax)
    while direction * (T - t) > 1e-14:
        if direction * (t + h - T) > 0.0:
            h = T - t
        y_new, err = _step(y, h, m, a, lam, 0, False)
        acc = 0.0
        for i in range(8):
            sc = atol + rtol * max(abs(y[i]), abs(y_new[i]))
            e = err[i] / sc
            acc += e * e
        enorm = np.sqrt(acc / 8.0)
        if enorm <= 1.0:
            r = y_new[1]
            if r < r_min or r > r_max or not np.isfinite(r):
                # bisect the crossing inside this step
                lo = 0.0
                hi = h
                while abs(hi - lo) > 1e-8:
                    mid = 0.5 * (lo + hi)
                    y_mid, _ = _step(y, mid, m, a, lam, 0, False)
                    rm = y_mid[1]
                    if rm < r_min or rm > r_max or not np.isfinite(rm):
                        hi = mid
                    else:
                        lo = mid
                return True, t + hi
            t = t + h
            y = y_new
            fac = 10.0 if enorm == 0.0 else min(10.0, max(0.2, 0.9 * enorm ** -0.2))
        else:
            fac = max(0.2, 0.9 * enorm ** -0.2)
        h = direction * min(abs(h * fac), hmax)
        if abs(h) < 1e-15:
            return True, t
    return False, T
