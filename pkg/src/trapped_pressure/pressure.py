"""Topological pressure of trapped sets, two ways.

Separated-set estimator: greedy (eps,T)-packings of sampled trapped
trajectories weighted by exp(-s * lambda^u_T), pressure as the T-growth
rate of the weighted sums, extrapolated eps -> 0.

Variational estimator: for systems certified normally hyperbolic to high
order the tangent entropy vanishes, and the pressure reduces to
-s * inf over the trapped set of the asymptotic unstable rate.

Per-sample work (alignment, tangent growth, trajectories) is embarrassingly
parallel; packings and fits are single-threaded reductions in fixed sample
order so results are independent of the worker count.
"""

from __future__ import annotations

import json
import math
import multiprocessing
import os
import warnings
from dataclasses import dataclass, field, asdict

import numpy as np
from scipy.spatial import cKDTree

from .flow import FlowSystem, IntegratorConfig, flow_with_tangent, integrate

__all__ = [
    "JacobianRecord",
    "SpectrumResult",
    "NHReport",
    "PressureEstimate",
    "Ensemble",
    "AlignmentError",
    "NotNormallyHyperbolicError",
    "log_unstable_jacobian",
    "telescoping_check",
    "tangent_spectrum",
    "nh_check",
    "greedy_separated_set",
    "build_ensemble",
    "pack_all",
    "pressure_separated",
    "pressure_variational",
    "estimate_to_json",
    "estimate_to_csv",
    "nh_report_to_json",
]

DEFAULT_H_SEP = 0.5                # trajectory sampling step for packings


class AlignmentError(RuntimeError):
    """Unstable-direction alignment did not converge."""


class NotNormallyHyperbolicError(RuntimeError):
    """Zero-entropy reduction requested on a system that is not NH."""


@dataclass(frozen=True)
class JacobianRecord:
    """Accumulated log unstable Jacobian of one sample over one horizon."""

    sample_id: int
    T: float
    lam_u: float

    @property
    def rate(self) -> float:
        return self.lam_u / self.T


@dataclass
class SpectrumResult:
    exponents: np.ndarray       # sorted descending
    half_widths: np.ndarray     # confidence half-widths, same order
    top_is_normal: bool         # expansion transverse to the trapped set?
    tangent_exponents: np.ndarray
    tangent_half_widths: np.ndarray
    mu_max: float               # max |tangent exponent| + its half-width
    splitting_ambiguous: bool


@dataclass
class NHReport:
    nu_min: float
    nu_s: float
    mu_max: float
    mu_half_width: float
    r_star: int
    r_cap: int
    n_samples: int
    degenerate: bool = False


@dataclass
class PressureEstimate:
    s: float
    eps_grid: list
    T_grid: list
    Z: np.ndarray               # len(eps) x len(T)
    counts: np.ndarray          # selected-set sizes, same shape
    slopes: np.ndarray          # per-eps pressure (top-half-T slope)
    slope_residuals: np.ndarray  # rms residual of each per-eps fit
    pressure: float             # eps -> 0 extrapolation
    extrapolation_residual: float
    warnings_list: list = field(default_factory=list)

    @property
    def residual(self) -> float:
        """Single fit-quality figure: extrapolation plus worst slope residual."""
        return float(self.extrapolation_residual + np.max(self.slope_residuals))


@dataclass
class Ensemble:
    """Per-sample trajectories and unstable-growth records on a common grid."""

    system_name: str
    samples: np.ndarray         # (N, n) section states (post-alignment)
    times: np.ndarray           # (K,) trajectory sample times, step h_sep
    trajectories: np.ndarray    # (N, K, n)
    T_grid: np.ndarray          # (J,)
    lam_u: np.ndarray           # (N, J): lambda^u_T per sample per horizon
    rates: np.ndarray           # (N,) asymptotic unstable rates (LSQ slope);
    # lam_u/T carries a bounded oscillatory term that the slope filters out
    t_align: float


# ---------------------------------------------------------------------------
# unstable Jacobians


def _aligned_run(system, sample, T, t_align, config, seed, rate_horizon=None):
    """Unstable growth and asymptotic rate from a backward-shifted base.

    The base point is flowed backward by t_align, a seeded random direction
    is carried forward, and growth is recorded at t_align (alignment cutoff)
    and at t_align + T for every requested horizon T.  The rate is the
    least-squares slope over the trailing half of the measurement window,
    which filters the bounded oscillatory part of the growth.
    """
    back = integrate(system, sample, -t_align, config, sample_dt=max(t_align, 1e-3))
    if back.escaped:
        raise AlignmentError("sample escapes during backward alignment")
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(system.dimension)
    v /= np.linalg.norm(v)
    T_arr = np.atleast_1d(np.asarray(T, dtype=float))
    T_run = max(float(T_arr[-1]), float(rate_horizon or 0.0))
    records = [t_align] + [t_align + t for t in T_arr]
    tb = flow_with_tangent(system, back.final_state, v[:, None],
                           t_align + T_run, config, record_times=records)
    g0 = tb.growth_at(t_align)[0]
    lam = np.array([tb.growth_at(t_align + t)[0] - g0 for t in T_arr])
    # a long, late window: the growth carries a bounded oscillation whose
    # leakage into the fitted slope falls off fast with window length
    rate = float(_window_slope(
        tb.history_times, tb.history_logs,
        t_align + 0.5 * T_run, t_align + T_run)[0])
    return lam, rate


def _aligned_growth(system, sample, T, t_align, config, seed):
    lam, _ = _aligned_run(system, sample, T, t_align, config, seed)
    return lam if np.ndim(T) else float(lam[0])


def log_unstable_jacobian(
    system: FlowSystem,
    sample: np.ndarray,
    T: float,
    sample_id: int = 0,
    config: IntegratorConfig = IntegratorConfig(),
    t_align: float = None,
) -> JacobianRecord:
    """lambda^u_T: log growth of the unstable direction over [0, T].

    The direction is converged by carrying a random vector from an
    alignment window upstream of the sample; two independent seeds must
    agree in rate to 1e-4 or an AlignmentError is raised.
    """
    if t_align is None:
        t_align = max(0.5 * T, 20.0)
    lam_a = _aligned_growth(system, sample, T, t_align, config, seed=1)
    lam_b = _aligned_growth(system, sample, T, t_align, config, seed=2)
    if abs(lam_a - lam_b) / T > 1e-4:
        raise AlignmentError(
            f"unstable rates from independent directions differ: "
            f"{lam_a / T:.6g} vs {lam_b / T:.6g}")
    return JacobianRecord(sample_id=sample_id, T=float(T), lam_u=float(lam_a))


def telescoping_check(
    system: FlowSystem,
    sample: np.ndarray,
    k: int,
    config: IntegratorConfig = IntegratorConfig(),
    t_align: float = 40.0,
) -> float:
    """|lambda^u_k(p) - sum_j lambda^u_1(phi^j p)| with independent per-j runs.

    The k-window value comes from one continuous tangent run; each unit
    summand is recomputed from a fresh alignment at the shifted base point,
    so the identity is tested across runs rather than within one.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    lam_k = _aligned_growth(system, sample, float(k), t_align, config, seed=1)
    total = 0.0
    state = np.asarray(sample, dtype=float)
    for j in range(k):
        total += _aligned_growth(system, state, 1.0, t_align, config, seed=1)
        if j < k - 1:
            state = integrate(system, state, 1.0, config, sample_dt=1.0).final_state
    return abs(lam_k - total)


# ---------------------------------------------------------------------------
# spectra and normal hyperbolicity


def _window_slope(times, logs, t0, t1):
    """Least-squares slope of accumulated log growth over [t0, t1]."""
    mask = (times >= t0 - 1e-9) & (times <= t1 + 1e-9)
    t = times[mask]
    if len(t) < 2:
        return np.zeros(logs.shape[1])
    x = t - t.mean()
    denom = float(x @ x)
    return (x[:, None] * (logs[mask] - logs[mask].mean(axis=0))).sum(axis=0) / denom


def tangent_spectrum(
    system: FlowSystem,
    sample: np.ndarray,
    T: float,
    config: IntegratorConfig = IntegratorConfig(),
    seed: int = 0,
    t_align: float = None,
) -> SpectrumResult:
    """Full Lyapunov spectrum along one trapped orbit.

    The frame is first carried over an alignment window (default: another
    T); exponents are then least-squares slopes of the per-direction
    accumulated log growth over [t_align, t_align + T].  Neutral
    directions shear polynomially, so their log growth is c*log(t) and
    any slope estimate sees ~c/t averaged over its window -- pushing the
    window out doubles the averaging time without inflating the claimed
    horizon T.  Half-widths are half the spread between the two
    half-window slopes.
    """
    if t_align is None:
        t_align = float(T)
    n = system.dimension
    rng = np.random.default_rng(seed)
    frame = rng.standard_normal((n, n))
    t_end = t_align + T
    record = np.arange(1.0, t_end + 0.5, 1.0)
    tb = flow_with_tangent(system, np.asarray(sample, dtype=float), frame,
                           t_end, config, record_times=record)
    times, logs = tb.history_times, tb.history_logs
    slopes = _window_slope(times, logs, t_align, t_end)
    s_lo = _window_slope(times, logs, t_align, t_align + T / 2.0)
    s_hi = _window_slope(times, logs, t_align + T / 2.0, t_end)
    widths = 0.5 * np.abs(s_hi - s_lo)
    order = np.argsort(slopes)[::-1]
    exps, hw = slopes[order], widths[order]

    # probe at the final base point: that is where the converged frame lives
    top_is_normal = _expansion_is_normal(system, tb.base, tb.frame[:, order[0]], config)
    if top_is_normal and n >= 3 and exps[0] > 0:
        tangent = exps[1:-1]
        tangent_hw = hw[1:-1]
    else:
        tangent, tangent_hw = exps, hw
    if len(tangent):
        i = int(np.argmax(np.abs(tangent)))
        mu_max = float(abs(tangent[i]) + tangent_hw[i])
    else:
        mu_max = 0.0
    ambiguous = bool(
        len(exps) > 1 and top_is_normal
        and (exps[0] - exps[1]) < 3.0 * (hw[0] + hw[1])
    )
    return SpectrumResult(
        exponents=exps, half_widths=hw, top_is_normal=top_is_normal,
        tangent_exponents=np.asarray(tangent),
        tangent_half_widths=np.asarray(tangent_hw),
        mu_max=mu_max, splitting_ambiguous=ambiguous,
    )


def _expansion_is_normal(system, sample, direction, config,
                         delta: float = 1e-4, T_probe: float = 100.0) -> bool:
    """Does the fastest-growing direction point off the trapped set?

    Perturbing along it escapes the trapping region iff the expansion is
    normal; expansion tangent to a compact invariant set never escapes.
    Both orientations of the line are probed (one may exit much faster).
    """
    hook = system.metadata.get("escape_run")
    for sign in (1.0, -1.0):
        perturbed = np.asarray(sample, dtype=float) \
            + sign * delta * np.asarray(direction)
        if hook is not None:
            escaped, _ = hook(perturbed, T_probe)
        else:
            escaped = integrate(system, perturbed, T_probe, config,
                                sample_dt=1.0).escaped
        if escaped:
            return True
    return False


def nh_check(
    system: FlowSystem,
    samples,
    r_cap: int = 10,
    T: float = 200.0,
    config: IntegratorConfig = IntegratorConfig(),
    spectra: list = None,
) -> NHReport:
    """Estimate the rate inequality nu_min > r * mu_max over the samples.

    nu_min is the worst normal expansion rate, nu_s its backward-time
    (contraction) counterpart, mu_max the largest tangent rate including
    its confidence half-width.  r_star is the largest order r <= r_cap
    at which the domination holds; r_star = 0 means not even 1-normally
    hyperbolic (all expansion tangent, as for the suspension fixture).
    """
    if r_cap < 1:
        raise ValueError("r_cap must be >= 1")
    samples = [np.asarray(s, dtype=float) for s in samples]
    if spectra is None:
        spectra = [tangent_spectrum(system, s, T, config, seed=i)
                   for i, s in enumerate(samples)]
    nu_min = math.inf
    nu_s = math.inf
    mu_max = 0.0
    mu_hw = 0.0
    any_normal = False
    for spec in spectra:
        if spec.top_is_normal:
            any_normal = True
            nu_min = min(nu_min, float(spec.exponents[0]))
            nu_s = min(nu_s, float(-spec.exponents[-1]))
        if spec.mu_max >= mu_max:
            mu_max = float(spec.mu_max)
            if len(spec.tangent_exponents):
                i = int(np.argmax(np.abs(spec.tangent_exponents)))
                mu_hw = float(spec.tangent_half_widths[i])
    if not any_normal:
        # every expanding direction is tangent: nu is the expansion itself
        nu_min = max((float(s.exponents[0]) for s in spectra), default=0.0)
        nu_s = nu_min
    degenerate = not (nu_min > 0.0) or not any_normal
    if degenerate and any_normal:
        r_star = 0
    elif not any_normal:
        r_star = 0
    else:
        r_star = 0
        for r in range(1, r_cap + 1):
            if nu_min > r * mu_max:
                r_star = r
            else:
                break
    return NHReport(
        nu_min=float(nu_min), nu_s=float(nu_s), mu_max=mu_max,
        mu_half_width=mu_hw, r_star=r_star, r_cap=int(r_cap),
        n_samples=len(spectra), degenerate=bool(degenerate and any_normal),
    )


# ---------------------------------------------------------------------------
# separated sets


def greedy_separated_set(
    system: FlowSystem,
    trajectories: np.ndarray,
    eps: float,
    n_times: int,
    rebuild_every: int = 512,
) -> np.ndarray:
    """Greedy maximal (eps,T)-packing of trajectories in fixed order.

    trajectories: (N, K, n) states on a common time grid; the first
    `n_times` columns span [0, T].  A candidate is admitted iff against
    every admitted member some sampled time has distance >= eps.  Members
    that could reject the candidate must be within eps at time zero, so a
    KD-tree on the time-zero embeddings (plus any quotient-seam
    representatives) prefilters the exact trajectory-distance checks.
    """
    trajs = np.asarray(trajectories, dtype=float)[:, :n_times, :]
    n = len(trajs)
    if n == 0:
        return np.array([], dtype=int)
    states0 = trajs[:, 0, :]
    if system.tree_points is not None:
        embeds0, owners0 = system.tree_points(states0)
    else:
        embeds0, owners0 = system.embed(states0), np.arange(n)
    embeds0 = np.asarray(embeds0, dtype=float)
    owners0 = np.asarray(owners0, dtype=int)
    query_r = eps / system.distance_scale + 1e-12

    # rows of the t=0 embedding grouped by owning trajectory
    order = np.argsort(owners0, kind="stable")
    starts = np.searchsorted(owners0[order], np.arange(n + 1))

    def rows_of(i):
        return order[starts[i]:starts[i + 1]]

    selected: list = []
    tree = None
    tree_owner = None
    buf_rows: list = []     # selected rows not yet in the tree
    for i in range(n):
        cand = embeds0[rows_of(i)]
        near = set()
        if tree is not None:
            for row_emb in cand:
                for j in tree.query_ball_point(row_emb, query_r):
                    near.add(int(tree_owner[j]))
        if buf_rows:
            rows = np.concatenate(buf_rows)
            d = np.linalg.norm(embeds0[rows][:, None, :] - cand[None, :, :], axis=-1)
            near.update(int(o) for o in owners0[rows[np.min(d, axis=1) < query_r]])
        near.discard(i)
        if near:
            members = np.fromiter(sorted(near), dtype=int)
            d = system.pairwise_traj_distance(trajs[i], trajs[members])
            # rejection: some member stays closer than eps at every time
            if np.any(np.max(d, axis=1) < eps):
                continue
        selected.append(i)
        buf_rows.append(rows_of(i))
        if len(buf_rows) >= rebuild_every:
            sel_rows = np.concatenate(
                [tree_rows, *buf_rows]) if tree is not None else np.concatenate(buf_rows)
            tree = cKDTree(embeds0[sel_rows])
            tree_owner = owners0[sel_rows]
            tree_rows = sel_rows
            buf_rows = []
    return np.array(selected, dtype=int)


# ---------------------------------------------------------------------------
# ensembles (the per-sample parallel stage)

_WORKER_CTX: dict = {}


def _ensemble_task(args):
    (i, sample) = args
    sys_ = _WORKER_CTX["system"]
    cfg = _WORKER_CTX["config"]
    t_align = _WORKER_CTX["t_align"]
    times = _WORKER_CTX["times"]
    T_grid = _WORKER_CTX["T_grid"]
    traj = integrate(sys_, sample, t_align + float(times[-1]), cfg,
                     sample_dt=_WORKER_CTX["h_sep"])
    if traj.escaped or len(traj.times) < len(times):
        return i, None, None, None
    # trajectory of the aligned sample p' = phi^{t_align}(sample)
    k0 = int(round(t_align / _WORKER_CTX["h_sep"]))
    states = traj.states[k0:k0 + len(times)]
    lam, rate = _aligned_run(sys_, traj.states[k0], T_grid, t_align, cfg,
                             seed=_WORKER_CTX["seed_base"] + i,
                             rate_horizon=_WORKER_CTX["rate_horizon"])
    return i, states, lam, rate


def build_ensemble(
    system: FlowSystem,
    samples,
    T_grid,
    config: IntegratorConfig = IntegratorConfig(),
    h_sep: float = DEFAULT_H_SEP,
    t_align: float = None,
    rate_horizon: float = 250.0,
    workers: int = 1,
    seed_base: int = 10_000,
) -> Ensemble:
    """Trajectories plus lambda^u_T records for every sample.

    Each task is independent; results are reduced in sample order, so the
    ensemble is identical for any worker count.  Escaping samples (bad
    cells of the sampling grid) are dropped with a warning.
    """
    samples = [np.asarray(s, dtype=float) for s in samples]
    T_grid = np.asarray(sorted(float(t) for t in T_grid))
    if t_align is None:
        # long transient: the pressure takes a min over many samples, and
        # the min statistic is sensitive to the worst-aligned seed
        t_align = max(0.5 * float(T_grid[-1]), 20.0)
    t_align = round(t_align / h_sep) * h_sep
    times = np.arange(0.0, float(T_grid[-1]) + 0.5 * h_sep, h_sep)

    if system.ensemble_hook is not None:
        aligned, traj, lam = system.ensemble_hook(
            np.stack(samples), times, T_grid, t_align)
        return Ensemble(
            system_name=system.name, samples=aligned, times=times,
            trajectories=traj, T_grid=T_grid, lam_u=lam,
            rates=lam[:, -1] / float(T_grid[-1]), t_align=t_align,
        )

    ctx = dict(system=system, config=config, t_align=t_align, times=times,
               T_grid=T_grid, h_sep=h_sep, seed_base=seed_base,
               rate_horizon=rate_horizon)
    tasks = list(enumerate(samples))
    global _WORKER_CTX
    old_ctx = _WORKER_CTX
    _WORKER_CTX = ctx
    try:
        if workers > 1:
            # fork inherits the context; no pickling of the system needed
            with multiprocessing.get_context("fork").Pool(workers) as pool:
                results = pool.map(_ensemble_task, tasks, chunksize=16)
        else:
            results = [_ensemble_task(t) for t in tasks]
    finally:
        _WORKER_CTX = old_ctx

    kept_states, kept_lam, kept_rates, kept_samples, dropped = [], [], [], [], 0
    for i, states, lam, rate in results:
        if states is None:
            dropped += 1
            continue
        kept_samples.append(states[0])
        kept_states.append(states)
        kept_lam.append(lam)
        kept_rates.append(rate)
    if dropped:
        warnings.warn(f"{dropped} of {len(samples)} samples escaped during "
                      "ensemble construction and were dropped", RuntimeWarning)
    if not kept_states:
        raise RuntimeError("every sample escaped; nothing to estimate on")
    return Ensemble(
        system_name=system.name,
        samples=np.stack(kept_samples),
        times=times,
        trajectories=np.stack(kept_states),
        T_grid=T_grid,
        lam_u=np.stack(kept_lam),
        rates=np.array(kept_rates),
        t_align=t_align,
    )


def pack_all(system: FlowSystem, ensemble: Ensemble, eps_grid, T_grid) -> dict:
    """Greedy packings for every (eps, T); shared by all weight exponents."""
    packs = {}
    for eps in eps_grid:
        for T in T_grid:
            n_times = int(round(T / (ensemble.times[1] - ensemble.times[0]))) + 1
            packs[(eps, T)] = greedy_separated_set(
                system, ensemble.trajectories, eps, n_times)
    return packs


# ---------------------------------------------------------------------------
# pressure estimators


def _lsq_fit(x, y):
    """Slope, intercept, rms residual of a least-squares line."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    A = np.vstack([x, np.ones_like(x)]).T
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ coef
    rms = float(np.sqrt(np.mean(resid ** 2)))
    return float(coef[0]), float(coef[1]), rms


def pressure_separated(
    system: FlowSystem,
    s: float,
    eps_grid,
    T_grid,
    samples=None,
    config: IntegratorConfig = IntegratorConfig(),
    ensemble: Ensemble = None,
    packs: dict = None,
    h_sep: float = DEFAULT_H_SEP,
    workers: int = 1,
) -> PressureEstimate:
    """P_hat(s) from weighted separated-set sums.

    Z_T(eps, s) = sum over the greedy (eps,T)-packing of exp(-s lambda^u_T);
    per-eps pressure is the least-squares slope of log Z against T over the
    top half of the T grid, and the estimate extrapolates those slopes
    linearly to eps = 0.
    """
    eps_grid = sorted(float(e) for e in eps_grid)
    T_grid = sorted(float(t) for t in T_grid)
    if len(eps_grid) < 3:
        raise ValueError("need at least 3 eps values for the eps->0 fit")
    if ensemble is None:
        if samples is None:
            raise ValueError("provide samples or a prebuilt ensemble")
        ensemble = build_ensemble(system, samples, T_grid, config,
                                  h_sep=h_sep, workers=workers)
    if packs is None:
        packs = pack_all(system, ensemble, eps_grid, T_grid)

    j_of_T = {float(t): j for j, t in enumerate(ensemble.T_grid)}
    Z = np.zeros((len(eps_grid), len(T_grid)))
    counts = np.zeros_like(Z, dtype=int)
    for a, eps in enumerate(eps_grid):
        for b, T in enumerate(T_grid):
            sel = packs[(eps, T)]
            lam = ensemble.lam_u[sel, j_of_T[T]]
            Z[a, b] = float(np.sum(np.exp(-s * lam)))
            counts[a, b] = len(sel)

    n_top = max(2, (len(T_grid) + 1) // 2)
    Tw = np.array(T_grid[-n_top:])
    slopes = np.empty(len(eps_grid))
    slope_res = np.empty(len(eps_grid))
    for a in range(len(eps_grid)):
        slopes[a], _, slope_res[a] = _lsq_fit(Tw, np.log(Z[a, -n_top:]))
    # eps -> 0 extrapolation, linear in eps
    _, p_hat, ext_res = _lsq_fit(np.array(eps_grid), slopes)

    warn_list = []
    if counts[0, -1] < 10 * counts[-1, -1]:
        warn_list.append(
            "coverage: selected count at the smallest eps "
            f"({counts[0, -1]}) is below 10x the largest-eps count "
            f"({counts[-1, -1]}); entropy growth may be unresolved")
    for w in warn_list:
        warnings.warn(w, RuntimeWarning)
    return PressureEstimate(
        s=float(s), eps_grid=list(eps_grid), T_grid=list(T_grid),
        Z=Z, counts=counts, slopes=slopes, slope_residuals=slope_res,
        pressure=float(p_hat), extrapolation_residual=float(ext_res),
        warnings_list=warn_list,
    )


def pressure_variational(
    system: FlowSystem,
    s: float,
    samples=None,
    config: IntegratorConfig = IntegratorConfig(),
    ensemble: Ensemble = None,
    nh_report: NHReport = None,
    nh_samples: int = 12,
    nh_T: float = 120.0,
    workers: int = 1,
) -> dict:
    """-s * inf of the unstable rate, valid only under certified NH trapping.

    Zero tangent entropy reduces the variational pressure to the rate
    infimum; on systems whose expansion is tangent (r_star = 0) that
    reduction is wrong and the call refuses.
    """
    if ensemble is None:
        if samples is None:
            raise ValueError("provide samples or a prebuilt ensemble")
        ensemble = build_ensemble(system, samples, [60.0], config, workers=workers)
    if nh_report is None:
        take = np.linspace(0, len(ensemble.samples) - 1,
                           min(nh_samples, len(ensemble.samples))).astype(int)
        nh_report = nh_check(system, ensemble.samples[take], r_cap=10,
                             T=nh_T, config=config)
    if nh_report.r_star < 1:
        raise NotNormallyHyperbolicError(
            "tangent expansion rate matches the normal rate "
            f"(mu_max={nh_report.mu_max:.4g}, nu_min={nh_report.nu_min:.4g}); "
            "the zero-entropy reduction does not apply")
    rates = ensemble.rates
    i_min = int(np.argmin(rates))
    return {
        "s": float(s),
        "pressure": float(-s * rates[i_min]),
        "min_rate": float(rates[i_min]),
        "minimizer_state": ensemble.samples[i_min].tolist(),
        "T": float(ensemble.T_grid[-1]),
        "nh": asdict(nh_report),
    }


# ---------------------------------------------------------------------------
# exports


def estimate_to_json(est: PressureEstimate, config_echo: dict = None) -> str:
    payload = {
        "s": est.s,
        "eps_grid": est.eps_grid,
        "T_grid": est.T_grid,
        "Z": est.Z.tolist(),
        "counts": est.counts.tolist(),
        "slopes": est.slopes.tolist(),
        "slope_residuals": est.slope_residuals.tolist(),
        "pressure": est.pressure,
        "extrapolation_residual": est.extrapolation_residual,
        "residual": est.residual,
        "warnings": est.warnings_list,
        "config": config_echo or {},
    }
    return json.dumps(payload, sort_keys=True, indent=2)


def estimate_to_csv(est: PressureEstimate, path) -> None:
    import csv

    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["s", "eps", "T", "count", "Z", "log_Z"])
        for a, eps in enumerate(est.eps_grid):
            for b, T in enumerate(est.T_grid):
                w.writerow([repr(est.s), repr(eps), repr(T),
                            int(est.counts[a, b]), repr(float(est.Z[a, b])),
                            repr(float(np.log(est.Z[a, b])))])


def nh_report_to_json(report: NHReport, config_echo: dict = None) -> str:
    payload = asdict(report)
    payload["config"] = config_echo or {}
    return json.dumps(payload, sort_keys=True, indent=2)
