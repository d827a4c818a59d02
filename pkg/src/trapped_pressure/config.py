"""Run configuration: flat dotted key=value files plus CLI overrides.

The file format is deliberately primitive -- one `section.key = value` per
line, `#` comments, no nesting -- so that any plotting or batch tool can
parse it.  Every field has a default; fixture systems carry their own grid
defaults (the suspension fixture flows at unit speed, so its useful T and
eps ranges are an order of magnitude below the geodesic ones).
"""

from __future__ import annotations

import os
from dataclasses import dataclass, fields

__all__ = ["RunConfig", "ConfigError", "parse_config_file",
           "parse_assignments", "resolve_config"]

SYSTEMS = ("toy", "cat", "schwarzschild", "kerr")


class ConfigError(ValueError):
    """Unknown key, malformed value, or invalid field combination."""


def _float_list(text: str) -> tuple:
    return tuple(float(x) for x in text.replace(",", " ").split())


@dataclass(frozen=True)
class RunConfig:
    system: str = "kerr"
    # spacetime.*
    mass: float = 1.0
    spin: float = 0.0
    lam: float = 0.0
    # toy.*
    nu: float = 0.5
    # integrator.*
    rel_tol: float = 1e-10
    abs_tol: float = 1e-10
    max_step: float = 0.1
    # sampling.*
    n_samples: int = 2000
    seed: int = 0
    # pressure.*
    eps_grid: tuple = (0.05, 0.1, 0.2)
    T_grid: tuple = (10.0, 20.0, 30.0, 40.0, 60.0)
    s_values: tuple = (0.0, 0.25, 0.5, 1.0)
    h_sep: float = 0.5
    t_align: float = None
    # output.* / run.*
    out_dir: str = "."
    workers: int = 1
    strict: bool = False

    def as_dict(self) -> dict:
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            out[f.name] = list(v) if isinstance(v, tuple) else v
        return out


# dotted key -> (field name, parser)
_KEYS = {
    "system": ("system", str),
    "spacetime.mass": ("mass", float),
    "spacetime.spin": ("spin", float),
    "spacetime.lambda": ("lam", float),
    "toy.nu": ("nu", float),
    "integrator.rel_tol": ("rel_tol", float),
    "integrator.abs_tol": ("abs_tol", float),
    "integrator.max_step": ("max_step", float),
    "sampling.count": ("n_samples", int),
    "sampling.seed": ("seed", int),
    "pressure.eps": ("eps_grid", _float_list),
    "pressure.T": ("T_grid", _float_list),
    "pressure.s": ("s_values", _float_list),
    "pressure.h_sep": ("h_sep", float),
    "pressure.t_align": ("t_align", float),
    "output.dir": ("out_dir", str),
    "run.workers": ("workers", int),
    "run.strict": ("strict", lambda t: t.lower() in ("1", "true", "yes")),
}

# the suspension fixture advances the torus map once per unit time, so its
# entropy shows up on T = O(1) windows and sub-unit separation scales
_CAT_DEFAULTS = {
    "n_samples": 64000,
    "eps_grid": (0.15, 0.2, 0.3),
    "T_grid": (0.5, 0.75, 1.0, 1.25, 1.5),
    "h_sep": 0.25,
    "t_align": 8.0,
}
_TOY_DEFAULTS = {
    "n_samples": 400,
    "eps_grid": (0.05, 0.1, 0.2),
    "T_grid": (10.0, 20.0, 30.0, 40.0, 60.0),
}


def parse_assignments(pairs) -> dict:
    """`key=value` strings -> {field: parsed value}; rejects unknown keys."""
    overrides = {}
    for raw in pairs:
        if "=" not in raw:
            raise ConfigError(f"expected key=value, got {raw!r}")
        key, _, val = raw.partition("=")
        key, val = key.strip(), val.strip()
        if key not in _KEYS:
            known = ", ".join(sorted(_KEYS))
            raise ConfigError(f"unknown config key {key!r}; known keys: {known}")
        name, parser = _KEYS[key]
        try:
            overrides[name] = parser(val)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key}: {val!r} ({exc})") from exc
    return overrides


def parse_config_file(path) -> dict:
    lines = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key = value")
            lines.append(line)
    return parse_assignments(lines)


def resolve_config(file_overrides: dict = None, flag_overrides: dict = None,
                   ) -> RunConfig:
    """Defaults <- config file <- CLI flags, with per-system grid defaults."""
    merged = {}
    merged.update(file_overrides or {})
    merged.update(flag_overrides or {})  # flags win

    system = merged.get("system", RunConfig.system)
    if system not in SYSTEMS:
        raise ConfigError(f"unknown system {system!r}; choose from {SYSTEMS}")
    base = {"system": system}
    if system == "cat":
        base.update(_CAT_DEFAULTS)
    elif system == "toy":
        base.update(_TOY_DEFAULTS)
    base.update(merged)

    if "workers" not in merged:
        env = os.environ.get("TRAPPED_PRESSURE_WORKERS")
        if env:
            try:
                base["workers"] = int(env)
            except ValueError as exc:
                raise ConfigError(
                    f"TRAPPED_PRESSURE_WORKERS={env!r} is not an integer"
                ) from exc

    cfg = RunConfig(**base)
    _validate(cfg)
    return cfg


def _validate(cfg: RunConfig) -> None:
    if cfg.mass <= 0.0:
        raise ConfigError(f"spacetime.mass must be positive, got {cfg.mass}")
    if cfg.n_samples < 1:
        raise ConfigError("sampling.count must be >= 1")
    if cfg.workers < 1:
        raise ConfigError("run.workers must be >= 1")
    if cfg.h_sep <= 0.0:
        raise ConfigError("pressure.h_sep must be positive")
    if any(e <= 0.0 for e in cfg.eps_grid):
        raise ConfigError("pressure.eps values must be positive")
    if any(t <= 0.0 for t in cfg.T_grid):
        raise ConfigError("pressure.T values must be positive")
    if any(s < 0.0 for s in cfg.s_values):
        raise ConfigError("pressure.s values must be non-negative")
    if list(cfg.T_grid) != sorted(cfg.T_grid):
        raise ConfigError("pressure.T must be increasing")
