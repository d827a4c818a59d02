"""Config parsing: dotted keys, file/flag precedence, per-system defaults."""

import pytest

from trapped_pressure.config import (
    ConfigError,
    RunConfig,
    parse_assignments,
    parse_config_file,
    resolve_config,
)


def test_defaults():
    cfg = resolve_config()
    assert cfg.system == "kerr"
    assert cfg.mass == 1.0 and cfg.spin == 0.0 and cfg.lam == 0.0
    assert cfg.eps_grid == (0.05, 0.1, 0.2)
    assert cfg.T_grid == (10.0, 20.0, 30.0, 40.0, 60.0)
    assert cfg.workers == 1 and not cfg.strict


def test_parse_assignments_types():
    out = parse_assignments([
        "spacetime.spin=0.9", "spacetime.lambda = 0.02",
        "sampling.count=500", "pressure.eps=0.05, 0.1, 0.2",
        "run.strict=true",
    ])
    assert out == {"spin": 0.9, "lam": 0.02, "n_samples": 500,
                   "eps_grid": (0.05, 0.1, 0.2), "strict": True}


def test_unknown_key_lists_known():
    with pytest.raises(ConfigError, match="spacetime.mass"):
        parse_assignments(["spacetime.masss=2"])


def test_bad_value():
    with pytest.raises(ConfigError, match="bad value"):
        parse_assignments(["spacetime.spin=fast"])
    with pytest.raises(ConfigError, match="key=value"):
        parse_assignments(["spacetime.spin"])


def test_config_file_comments_and_errors(tmp_path):
    p = tmp_path / "run.cfg"
    p.write_text("# a comment\nsystem = kerr\nspacetime.spin = 0.9  # inline\n\n")
    assert parse_config_file(p) == {"system": "kerr", "spin": 0.9}
    p.write_text("spacetime.spin\n")
    with pytest.raises(ConfigError, match="run.cfg:1"):
        parse_config_file(p)


def test_flags_beat_file():
    cfg = resolve_config(file_overrides={"spin": 0.5, "seed": 7},
                         flag_overrides={"spin": 0.9})
    assert cfg.spin == 0.9 and cfg.seed == 7


def test_per_system_defaults_yield_to_overrides():
    cat = resolve_config(flag_overrides={"system": "cat"})
    assert cat.n_samples == 64000
    assert cat.T_grid == (0.5, 0.75, 1.0, 1.25, 1.5)
    assert cat.h_sep == 0.25 and cat.t_align == 8.0
    toy = resolve_config(flag_overrides={"system": "toy"})
    assert toy.n_samples == 400
    custom = resolve_config(file_overrides={"system": "cat", "n_samples": 100})
    assert custom.n_samples == 100 and custom.h_sep == 0.25


def test_workers_env_fallback(monkeypatch):
    monkeypatch.setenv("TRAPPED_PRESSURE_WORKERS", "3")
    assert resolve_config().workers == 3
    # explicit setting wins over the environment
    assert resolve_config(flag_overrides={"workers": 2}).workers == 2
    monkeypatch.setenv("TRAPPED_PRESSURE_WORKERS", "many")
    with pytest.raises(ConfigError, match="not an integer"):
        resolve_config()


@pytest.mark.parametrize("bad", [
    {"system": "minkowski"},
    {"mass": -1.0},
    {"n_samples": 0},
    {"eps_grid": (0.1, -0.2, 0.3)},
    {"T_grid": (30.0, 20.0)},
])
def test_validation_rejects(bad):
    with pytest.raises(ConfigError):
        resolve_config(flag_overrides=bad)


def test_as_dict_round_trips_tuples():
    d = RunConfig().as_dict()
    assert d["eps_grid"] == [0.05, 0.1, 0.2]
    assert d["system"] == "kerr"
