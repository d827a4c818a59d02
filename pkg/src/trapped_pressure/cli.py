"""Command-line front end.

Every subcommand resolves a RunConfig (defaults <- config file <- flags),
echoes the resolved physics/estimator config inside its JSON output, and
obeys one exit-code convention: 0 success, 2 invalid input, 3 quality-gate
failure, 4 internal numerical failure.  Execution details (worker count,
output directory) are deliberately left out of the echo so that results
are byte-identical across machines and pool sizes.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import warnings

import numpy as np

from .config import ConfigError, RunConfig, parse_assignments, \
    parse_config_file, resolve_config
from .fixtures import CAT_ENTROPY, CAT_MATRIX, make_cat_suspension, make_toy
from .flow import IntegratorConfig, integrate, top_lyapunov, trajectory_to_csv
from .pressure import AlignmentError, NotNormallyHyperbolicError, \
    build_ensemble, estimate_to_csv, estimate_to_json, nh_check, \
    nh_report_to_json, pack_all, pressure_separated, pressure_variational, \
    tangent_spectrum
from .spacetime import ParameterError, SpacetimeParams, horizon_roots
from .trapped import NoSolutionError, kerr_system, photon_region_bounds, \
    spherical_orbit_constants

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_QUALITY = 3
EXIT_NUMERICAL = 4

STATE_LABELS = ["t", "r", "theta", "phi", "p_t", "p_r", "p_theta", "p_phi"]


def _jsonable(obj):
    """JSON-safe copy: non-finite floats become strings ("inf", "nan")."""
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (float, np.floating)):
        return float(obj) if math.isfinite(obj) else repr(float(obj))
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    return obj


def _dump(payload: dict) -> str:
    return json.dumps(_jsonable(payload), sort_keys=True, indent=2)


def _echo(cfg: RunConfig) -> dict:
    out = cfg.as_dict()
    out.pop("workers", None)
    out.pop("out_dir", None)
    out.pop("strict", None)
    return out


def _slug(cfg: RunConfig) -> str:
    if cfg.system == "toy":
        return f"toy_nu{cfg.nu:g}"
    if cfg.system == "cat":
        return "cat"
    return f"{cfg.system}_a{cfg.spin:g}_l{cfg.lam:g}"


def _spacetime(cfg: RunConfig) -> SpacetimeParams:
    spin = 0.0 if cfg.system == "schwarzschild" else cfg.spin
    return SpacetimeParams(mass=cfg.mass, spin=spin, lam=cfg.lam)


def _build_system(cfg: RunConfig):
    if cfg.system == "toy":
        return make_toy(nu=cfg.nu)
    if cfg.system == "cat":
        return make_cat_suspension()
    return kerr_system(_spacetime(cfg))


def _integrator(cfg: RunConfig) -> IntegratorConfig:
    return IntegratorConfig(rel_tol=cfg.rel_tol, abs_tol=cfg.abs_tol,
                            max_step=cfg.max_step)


def _out_path(cfg: RunConfig, name: str) -> str:
    os.makedirs(cfg.out_dir, exist_ok=True)
    return os.path.join(cfg.out_dir, f"{name}_{_slug(cfg)}_seed{cfg.seed}")


# ---------------------------------------------------------------------------
# subcommands


def cmd_horizons(cfg: RunConfig, args) -> int:
    roots = horizon_roots(_spacetime(cfg))
    print(_dump({"roots": roots.as_dict(), "config": _echo(cfg)}))
    return EXIT_OK


def cmd_photon_region(cfg: RunConfig, args) -> int:
    params = _spacetime(cfg)
    lo, hi = photon_region_bounds(params)
    if hi - lo < 1e-12:
        radii = [lo]
    else:
        # keep clear of the endpoints, where eta -> 0 and the orbit family
        # degenerates to the equatorial circular photon orbits
        pad = 1e-9 * max(1.0, hi - lo)
        radii = np.linspace(lo + pad, hi - pad, args.rows)
    rows = []
    for r in radii:
        orbit = spherical_orbit_constants(params, float(r))
        rows.append({"r": float(r), "impact": orbit.impact,
                     "carter_ratio": orbit.carter_ratio})
    print(_dump({"bounds": [lo, hi], "rows": rows, "config": _echo(cfg)}))
    return EXIT_OK


def cmd_orbit(cfg: RunConfig, args) -> int:
    system = _build_system(cfg)
    samples = system.trapped_sampler(max(args.count, 1), cfg.seed)
    if cfg.system in ("schwarzschild", "kerr") and args.r is not None:
        idx = int(np.argmin([abs(s[1] - args.r) for s in samples]))
    else:
        idx = min(args.index, len(samples) - 1)
    state = np.asarray(samples[idx], dtype=float)
    traj = integrate(system, state, args.T, _integrator(cfg), sample_dt=0.5)
    path = _out_path(cfg, "orbit") + ".csv"
    labels = STATE_LABELS if system.dimension == 8 else None
    trajectory_to_csv(traj, path, state_labels=labels)
    print(_dump({
        "initial_state": state.tolist(),
        "T": args.T,
        "escaped": traj.escaped,
        "drifts": traj.drifts,
        "csv": path,
        "config": _echo(cfg),
    }))
    return EXIT_OK


def cmd_lyapunov(cfg: RunConfig, args) -> int:
    system = _build_system(cfg)
    samples = system.trapped_sampler(args.count, cfg.seed)
    rows = []
    for i, s in enumerate(samples):
        spec = tangent_spectrum(system, np.asarray(s, dtype=float), args.T,
                                _integrator(cfg), seed=i)
        rows.append({
            "sample": i,
            "exponents": spec.exponents.tolist(),
            "half_widths": spec.half_widths.tolist(),
            "top_is_normal": bool(spec.top_is_normal),
            "mu_max": spec.mu_max,
        })
    print(_dump({"T": args.T, "spectra": rows, "config": _echo(cfg)}))
    return EXIT_OK


def cmd_nh_check(cfg: RunConfig, args) -> int:
    system = _build_system(cfg)
    samples = system.trapped_sampler(args.count, cfg.seed)
    report = nh_check(system, samples, r_cap=args.r_cap, T=args.T,
                      config=_integrator(cfg))
    text = nh_report_to_json(report, config_echo=_echo(cfg))
    path = _out_path(cfg, "nh_check") + ".json"
    with open(path, "w") as fh:
        fh.write(text + "\n")
    print(text)
    return EXIT_OK


def cmd_pressure(cfg: RunConfig, args) -> int:
    system = _build_system(cfg)
    samples = system.trapped_sampler(cfg.n_samples, cfg.seed)
    ensemble = build_ensemble(
        system, samples, cfg.T_grid, _integrator(cfg), h_sep=cfg.h_sep,
        t_align=cfg.t_align, workers=cfg.workers,
        seed_base=10_000 + cfg.seed)
    packs = pack_all(system, ensemble, cfg.eps_grid, cfg.T_grid)
    any_warning = False
    for s in cfg.s_values:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            est = pressure_separated(system, s, cfg.eps_grid, cfg.T_grid,
                                     ensemble=ensemble, packs=packs)
        any_warning = any_warning or bool(est.warnings_list)
        base = _out_path(cfg, f"pressure_s{s:g}")
        with open(base + ".json", "w") as fh:
            fh.write(estimate_to_json(est, config_echo=_echo(cfg)) + "\n")
        estimate_to_csv(est, base + ".csv")
        margin = abs(est.pressure) / est.residual if est.residual > 0 else math.inf
        print(f"P({s:g}) = {est.pressure:+.6f}  residual {est.residual:.2e}"
              f"  margin {margin:.1f}x  -> {base}.json")
        for w in est.warnings_list:
            print(f"  warning: {w}", file=sys.stderr)
    if any_warning and cfg.strict:
        print("coverage warnings escalated by run.strict", file=sys.stderr)
        return EXIT_QUALITY
    return EXIT_OK


def _validate_checks():
    """(name, default tolerance, value function); a check passes iff
    value <= tolerance."""

    def horizon_schwarzschild():
        return abs(horizon_roots(SpacetimeParams(1.0, 0.0, 0.0)).r_event - 2.0)

    def horizon_kds_order():
        r = horizon_roots(SpacetimeParams(1.0, 0.5, 0.03))
        vals = [r.r_minus, r.r_cauchy, r.r_event, r.r_cosmo]
        ok = all(math.isfinite(v) for v in vals) and \
            all(a < b for a, b in zip(vals, vals[1:]))
        return 0.0 if ok else 1.0

    def photon_orbit_constants():
        orbit = spherical_orbit_constants(SpacetimeParams(1.0, 0.9, 0.0), 3.0)
        return max(abs(orbit.impact + 1.8), abs(orbit.carter_ratio - 27.0))

    def conserved_drift():
        params = SpacetimeParams(1.0, 0.0, 0.0)
        system = kerr_system(params)
        state = system.trapped_sampler(1, 0)[0]
        traj = integrate(system, state, 20.0, IntegratorConfig())
        return max(traj.drifts.values())

    def toy_rate_exact():
        system = make_toy(nu=0.5)
        samples = system.trapped_sampler(50, 0)
        ens = build_ensemble(system, samples, [10.0, 20.0])
        return float(np.max(np.abs(ens.rates - 0.5)))

    def cat_entropy_constant():
        lam_max = max(abs(np.linalg.eigvals(CAT_MATRIX.astype(float))))
        return abs(CAT_ENTROPY - math.log(lam_max))

    def schwarzschild_top_exponent():
        system = kerr_system(SpacetimeParams(1.0, 0.0, 0.0))
        state = system.trapped_sampler(1, 0)[0]
        lam = top_lyapunov(system, state, 300.0)
        return abs(lam - 1.0 / math.sqrt(3.0))

    def json_determinism():
        texts = []
        for _ in range(2):
            system = make_toy(nu=0.5)
            samples = system.trapped_sampler(30, 7)
            ens = build_ensemble(system, samples, [5.0, 10.0])
            packs = pack_all(system, ens, [0.05, 0.1, 0.2], [5.0, 10.0])
            est = pressure_separated(system, 1.0, [0.05, 0.1, 0.2],
                                     [5.0, 10.0], ensemble=ens, packs=packs)
            texts.append(estimate_to_json(est))
        return 0.0 if texts[0] == texts[1] else 1.0

    return [
        ("horizon_schwarzschild", 1e-12, horizon_schwarzschild),
        ("horizon_kds_order", 0.5, horizon_kds_order),
        ("photon_orbit_constants", 1e-10, photon_orbit_constants),
        ("conserved_drift", 1e-9, conserved_drift),
        ("toy_rate_exact", 1e-9, toy_rate_exact),
        ("cat_entropy_constant", 1e-12, cat_entropy_constant),
        ("schwarzschild_top_exponent", 1e-3, schwarzschild_top_exponent),
        ("json_determinism", 0.5, json_determinism),
    ]


def cmd_validate(cfg: RunConfig, args) -> int:
    failures = 0
    print(f"{'check':<28} {'value':>12} {'tol':>10}  status")
    for name, tol, fn in _validate_checks():
        env = os.environ.get(f"TRAPPED_PRESSURE_TOL_{name.upper()}")
        if env is not None:
            tol = float(env)
        try:
            value = float(fn())
        except Exception as exc:  # a crashed check is a failed check
            print(f"{name:<28} {'error':>12} {tol:>10.1e}  FAIL ({exc})")
            failures += 1
            continue
        ok = value <= tol
        failures += 0 if ok else 1
        print(f"{name:<28} {value:>12.3e} {tol:>10.1e}  "
              f"{'pass' if ok else 'FAIL'}")
    if failures:
        print(f"{failures} check(s) failed", file=sys.stderr)
        return EXIT_QUALITY
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing


_FLAG_KEYS = {
    "system": "system",
    "mass": "spacetime.mass",
    "spin": "spacetime.spin",
    "lam": "spacetime.lambda",
    "nu": "toy.nu",
    "seed": "sampling.seed",
    "samples": "sampling.count",
    "eps": "pressure.eps",
    "T_grid": "pressure.T",
    "s": "pressure.s",
    "out_dir": "output.dir",
    "workers": "run.workers",
}


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", metavar="FILE",
                   help="key = value configuration file")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override a single dotted config key (repeatable)")
    p.add_argument("--system", choices=("toy", "cat", "schwarzschild", "kerr"))
    p.add_argument("--mass", type=str)
    p.add_argument("--spin", type=str)
    p.add_argument("--lambda", type=str, dest="lam")
    p.add_argument("--nu", type=str, help="toy fixture normal rate")
    p.add_argument("--seed", type=str)
    p.add_argument("--samples", type=str, help="trapped-set sample count")
    p.add_argument("--eps", type=str, help="comma-separated eps grid")
    p.add_argument("--T-grid", type=str, dest="T_grid",
                   help="comma-separated T grid")
    p.add_argument("--s", type=str, help="comma-separated s values")
    p.add_argument("--out-dir", type=str, dest="out_dir")
    p.add_argument("--workers", type=str)
    p.add_argument("--strict", action="store_true",
                   help="escalate coverage warnings to exit code 3")


def _flag_overrides(args) -> dict:
    pairs = []
    for attr, key in _FLAG_KEYS.items():
        val = getattr(args, attr, None)
        if val is not None:
            pairs.append(f"{key}={val}")
    if args.strict:
        pairs.append("run.strict=true")
    pairs.extend(args.set)
    return parse_assignments(pairs)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="trapped-pressure",
        description="Topological pressure on trapped sets of Kerr(-de Sitter) "
                    "null geodesic flows and contrast fixtures.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("horizons", help="horizon radii from the quartic")
    _add_common(p)
    p.set_defaults(fn=cmd_horizons)

    p = sub.add_parser("photon-region",
                       help="spherical-photon-orbit radii and constants")
    _add_common(p)
    p.add_argument("--rows", type=int, default=21)
    p.set_defaults(fn=cmd_photon_region)

    p = sub.add_parser("orbit", help="integrate one trapped orbit to CSV")
    _add_common(p)
    p.add_argument("--T", type=float, default=200.0)
    p.add_argument("--r", type=float, default=None,
                   help="pick the sampled orbit closest to this radius")
    p.add_argument("--index", type=int, default=0)
    p.add_argument("--count", type=int, default=16,
                   help="orbit candidates to sample from")
    p.set_defaults(fn=cmd_orbit)

    p = sub.add_parser("lyapunov", help="Lyapunov spectra on trapped samples")
    _add_common(p)
    p.add_argument("--T", type=float, default=100.0)
    p.add_argument("--count", type=int, default=8)
    p.set_defaults(fn=cmd_lyapunov)

    p = sub.add_parser("nh-check",
                       help="normal-hyperbolicity order certificate")
    _add_common(p)
    p.add_argument("--T", type=float, default=120.0)
    p.add_argument("--count", type=int, default=8)
    p.add_argument("--r-cap", type=int, default=10, dest="r_cap")
    p.set_defaults(fn=cmd_nh_check)

    p = sub.add_parser("pressure",
                       help="separated-set pressure estimate (JSON + CSV)")
    _add_common(p)
    p.set_defaults(fn=cmd_pressure)

    p = sub.add_parser("validate", help="fixture and oracle self-checks")
    _add_common(p)
    p.set_defaults(fn=cmd_validate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        file_overrides = parse_config_file(args.config) if args.config else {}
        cfg = resolve_config(file_overrides, _flag_overrides(args))
        return args.fn(cfg, args)
    except (ConfigError, ParameterError, NoSolutionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except NotNormallyHyperbolicError as exc:
        print(f"quality gate: {exc}", file=sys.stderr)
        return EXIT_QUALITY
    except (AlignmentError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
