"""Run configuration: schema, defaults, fail-closed parsing.

The configuration file is JSON with four sections (datum, sampling, grid,
time, solver, output, diagnostics).  Unknown keys anywhere are errors: a
silently ignored typo in a tolerance or step key would invalidate a
verification run.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, asdict


_SCHEMA = {
    "datum": {"name": "shell_polynomial", "params": dict},
    "sampling": {"resolution": [32, 32, 32]},
    "grid": {"n_shells": 512, "r_max": None, "margin": 0.25},
    "time": {"dv": None, "v_final": 5.0},
    "solver": {"scheme": "rk4", "picard_iters": 2, "field_off": False,
               "r_floor": 1e-10},
    "output": {"directory": None},
    "diagnostics": {"probe_radii": None},
}

# dv default is 0.01 * R0 (resolves the outward characteristic speed <= 1/2)
DV_R0_FRACTION = 0.01


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    datum_name: str = "shell_polynomial"
    datum_params: dict = field(default_factory=dict)
    resolution: tuple = (32, 32, 32)
    n_shells: int = 512
    r_max: float | None = None
    margin: float = 0.25
    dv: float | None = None
    v_final: float = 5.0
    scheme: str = "rk4"
    picard_iters: int = 2
    field_off: bool = False
    r_floor: float = 1e-10
    output_directory: str | None = None
    probe_radii: tuple | None = None

    def __post_init__(self):
        if self.v_final < 0.0:
            raise ConfigError("time.v_final must be >= 0")
        if self.dv is not None and self.dv <= 0.0:
            raise ConfigError("time.dv must be positive")
        if self.picard_iters < 1:
            raise ConfigError("solver.picard_iters must be >= 1")
        if self.n_shells < 2:
            raise ConfigError("grid.n_shells must be >= 2")
        if self.scheme not in ("rk4", "midpoint"):
            raise ConfigError(f"unknown solver.scheme {self.scheme!r}")

    def to_dict(self) -> dict:
        return {
            "datum": {"name": self.datum_name, "params": self.datum_params},
            "sampling": {"resolution": list(self.resolution)},
            "grid": {"n_shells": self.n_shells, "r_max": self.r_max,
                     "margin": self.margin},
            "time": {"dv": self.dv, "v_final": self.v_final},
            "solver": {"scheme": self.scheme,
                       "picard_iters": self.picard_iters,
                       "field_off": self.field_off,
                       "r_floor": self.r_floor},
            "output": {"directory": self.output_directory},
            "diagnostics": {
                "probe_radii": (None if self.probe_radii is None
                                else list(self.probe_radii))},
        }


def config_from_dict(doc: dict) -> RunConfig:
    if not isinstance(doc, dict):
        raise ConfigError("configuration root must be an object")
    unknown = set(doc) - set(_SCHEMA)
    if unknown:
        raise ConfigError(f"unknown configuration section(s): {sorted(unknown)}")
    for section, keys in _SCHEMA.items():
        sub = doc.get(section, {})
        if not isinstance(sub, dict):
            raise ConfigError(f"section {section!r} must be an object")
        bad = set(sub) - set(keys)
        if bad:
            raise ConfigError(f"unknown key(s) in section {section!r}: {sorted(bad)}")

    def get(section, key, default):
        return doc.get(section, {}).get(key, default)

    try:
        cfg = RunConfig(
            datum_name=str(get("datum", "name", _SCHEMA["datum"]["name"])),
            datum_params=dict(get("datum", "params", {})),
            resolution=tuple(_as_resolution(get("sampling", "resolution",
                                                _SCHEMA["sampling"]["resolution"]))),
            n_shells=int(get("grid", "n_shells", _SCHEMA["grid"]["n_shells"])),
            r_max=_opt_float(get("grid", "r_max", None), "grid.r_max"),
            margin=float(get("grid", "margin", _SCHEMA["grid"]["margin"])),
            dv=_opt_float(get("time", "dv", None), "time.dv"),
            v_final=float(get("time", "v_final", _SCHEMA["time"]["v_final"])),
            scheme=str(get("solver", "scheme", _SCHEMA["solver"]["scheme"])),
            picard_iters=int(get("solver", "picard_iters",
                                 _SCHEMA["solver"]["picard_iters"])),
            field_off=_as_bool(get("solver", "field_off", False)),
            r_floor=float(get("solver", "r_floor",
                              _SCHEMA["solver"]["r_floor"])),
            output_directory=get("output", "directory", None),
            probe_radii=(None if get("diagnostics", "probe_radii", None) is None
                         else tuple(float(x) for x in
                                    get("diagnostics", "probe_radii", None))),
        )
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"malformed configuration value: {exc}") from exc
    return cfg


def _as_resolution(value):
    if isinstance(value, (int, float)):
        return (int(value),) * 3
    if isinstance(value, (list, tuple)) and len(value) == 3:
        return tuple(int(v) for v in value)
    raise ConfigError("sampling.resolution must be an int or a 3-list")


def _as_bool(value):
    if isinstance(value, bool):
        return value
    raise ConfigError("expected a boolean")


def _opt_float(value, key):
    if value is None:
        return None
    try:
        return float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"key {key!r} must be a number or null")


def parse_config(path) -> RunConfig:
    """Load and validate a JSON run configuration; fail-closed."""
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"configuration file not found: {path}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON in {path}: {exc}")
    return config_from_dict(doc)


def emit_config(cfg: RunConfig, path):
    """Write the configuration echo; re-parsing reproduces the RunConfig."""
    with open(path, "w") as fh:
        json.dump(cfg.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
