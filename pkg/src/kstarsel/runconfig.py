"""Sectioned key-value run configuration with a strict schema.

Example::

    [system]
    num_antennas = 32
    tx_power_dbm = 30

    [sweep]
    axis = power_dbm
    values = 10, 20, 30, 40

Unknown sections or keys are rejected.
"""

from __future__ import annotations

import configparser
import dataclasses
from dataclasses import dataclass, field

from .core import SystemConfig
from .errors import ConfigError
from .selection import DEFAULT_ALPHA_GRID
from .sim import SCHEMES, SWEEP_AXES


def _ints(text: str) -> list:
    return [int(v) for v in _items(text)]


def _floats(text: str) -> list:
    return [float(v) for v in _items(text)]


def _items(text: str) -> list:
    return [v.strip() for v in text.replace("\n", ",").split(",") if v.strip()]


def _schemes(text: str) -> list:
    names = [s.lower() for s in _items(text)]
    bad = [s for s in names if s not in SCHEMES]
    if bad:
        raise ConfigError(f"unknown schemes {bad}; expected some of {SCHEMES}")
    return names


def _opt_float(text: str):
    return None if text.strip().lower() in ("", "auto", "none") else float(text)


def _opt_int(text: str):
    return None if text.strip().lower() in ("", "auto", "none") else int(text)


SCHEMA = {
    "run": {"schemes": _schemes, "K": _opt_int, "threads": int, "trials": int},
    "sweep": {"axis": str, "values": _floats},
    "sus": {"alpha": _opt_float, "alpha_grid": _floats, "tune_trials": int},
    "fairness": {"windows": int, "slots_per_window": int},
    "validate": {"antennas": _ints, "k_fraction": float, "trials": int},
    "output": {"path": str},
}


@dataclass
class RunConfig:
    system: SystemConfig = field(default_factory=SystemConfig)
    schemes: list = field(default_factory=lambda: ["kstar-lus", "kstar-rus", "rus", "sus"])
    K: int | None = None
    threads: int | None = None
    trials: int | None = None
    axis: str = "power_dbm"
    values: list = field(default_factory=lambda: [10.0, 20.0, 30.0, 40.0])
    alpha: float | None = None
    alpha_grid: list = field(default_factory=lambda: list(DEFAULT_ALPHA_GRID))
    tune_trials: int = 500
    windows: int = 100
    slots_per_window: int = 100
    antennas: list = field(default_factory=lambda: [32, 64, 128])
    k_fraction: float = 0.25
    validate_trials: int = 2000
    path: str | None = None


def _system_field_types():
    return {f.name: f.type for f in dataclasses.fields(SystemConfig)}


def parse_run_config(text: str) -> RunConfig:
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from exc
    run = RunConfig()
    system_kwargs = {}
    types = _system_field_types()
    for section in parser.sections():
        items = parser[section]
        if section == "system":
            for key, raw in items.items():
                if key not in types:
                    raise ConfigError(f"unknown key [system] {key}")
                cast = float if types[key] == "float" else int
                system_kwargs[key] = _convert(section, key, raw, cast)
            continue
        if section not in SCHEMA:
            raise ConfigError(f"unknown section [{section}]")
        for key, raw in items.items():
            if key not in SCHEMA[section]:
                raise ConfigError(f"unknown key [{section}] {key}")
            value = _convert(section, key, raw, SCHEMA[section][key])
            attr = "validate_trials" if (section, key) == ("validate", "trials") else key
            setattr(run, attr, value)
    if run.axis not in SWEEP_AXES:
        raise ConfigError(f"unknown sweep axis {run.axis!r}")
    run.system = SystemConfig(**system_kwargs)
    return run


def _convert(section, key, raw, cast):
    try:
        return cast(raw)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad value for [{section}] {key}: {raw!r}") from exc


def load_run_config(path) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_run_config(text)
