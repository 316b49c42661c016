"""Run configuration: preset < config file < environment < command-line flag.

Config files are flat ``key=value`` text, ``#`` starts a comment.  Every
key may also come from an environment variable ``PAIRWALK_<KEY>``
(e.g. ``PAIRWALK_N_SITES=201``).  Values are kept as raw strings until
:func:`resolve` parses them, so a malformed value is reported under its
key whatever its source.
"""

from __future__ import annotations

import math
import os
from pathlib import Path
from typing import Any, Callable, Mapping

import numpy as np

from .errors import InputError
from .experiments import PRESETS

ENV_PREFIX = "PAIRWALK_"


def _parse_int(key: str, raw: str) -> int:
    try:
        return int(raw)
    except ValueError:
        raise InputError(f"{key}: expected an integer, got {raw!r}", key) from None


def _parse_float(key: str, raw: str) -> float:
    try:
        val = float(raw)
    except ValueError:
        raise InputError(f"{key}: expected a number, got {raw!r}", key) from None
    if not math.isfinite(val):
        raise InputError(f"{key}: must be finite, got {raw!r}", key)
    return val


def parse_grid(key: str, raw: str) -> tuple[float, ...]:
    """``"a:b:n"`` gives n evenly spaced points, ``"x,y,z"`` an explicit list."""
    raw = raw.strip()
    if raw.count(":") == 2:
        a, b, n = raw.split(":")
        count = _parse_int(key, n)
        if count < 1:
            raise InputError(f"{key}: point count must be >= 1, got {count}", key)
        return tuple(float(x) for x in np.linspace(_parse_float(key, a), _parse_float(key, b), count))
    parts = [p for p in raw.split(",") if p.strip()]
    if not parts:
        raise InputError(f"{key}: empty grid", key)
    return tuple(_parse_float(key, p) for p in parts)


def _parse_theta(key: str, raw: str) -> float | None:
    # "none" selects the unsymmetrized product input
    if raw.strip().lower() == "none":
        return None
    return _parse_float(key, raw)


PARSERS: dict[str, Callable[[str, str], Any]] = {
    "n_sites": _parse_int,
    "j": _parse_float,
    "u": _parse_float,
    "m0": _parse_int,
    "n0": _parse_int,
    "theta": _parse_theta,
    "dt": _parse_float,
    "order": _parse_int,
    "t_final": _parse_float,
    "sample_stride": _parse_int,
    "u_grid": parse_grid,
    "theta_grid": parse_grid,
    "late_window_fraction": _parse_float,
    "out_path": lambda key, raw: raw.strip(),
}
KEYS = tuple(PARSERS)

DEFAULTS = {"j": 1.0, "dt": 0.01, "order": 20, "sample_stride": 50, "late_window_fraction": 0.2}


def read_config_file(path) -> dict[str, str]:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise InputError(f"cannot read config file {path}: {exc.strerror}", "config") from None
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InputError(f"{path}:{lineno}: expected key=value, got {line!r}", "config")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in PARSERS:
            raise InputError(f"{path}:{lineno}: unknown key {key!r}", key)
        out[key] = value
    return out


def read_env(environ: Mapping[str, str] | None = None) -> dict[str, str]:
    environ = os.environ if environ is None else environ
    return {k: environ[ENV_PREFIX + k.upper()] for k in KEYS if ENV_PREFIX + k.upper() in environ}


def preset_values(name: str) -> dict[str, Any]:
    try:
        p = PRESETS[name]
    except KeyError:
        raise InputError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}", "preset") from None
    return {
        "n_sites": p.n_sites, "m0": p.m0, "n0": p.n0, "t_final": p.t_final,
        "dt": p.dt, "order": p.order, "u_grid": p.u_grid(), "theta_grid": p.theta_grid(),
    }


def resolve(
    flags: Mapping[str, str | None],
    config_path=None,
    preset: str | None = None,
    environ: Mapping[str, str] | None = None,
    theta_pi_units: bool = False,
) -> dict[str, Any]:
    """Merged, parsed configuration.

    Preset values are already numeric; string values from the file, the
    environment and the flags go through the key's parser.  With
    ``theta_pi_units`` the parsed ``theta`` and ``theta_grid`` strings are
    read in units of pi.
    """
    merged: dict[str, Any] = dict(DEFAULTS)
    if preset:
        merged.update(preset_values(preset))
    raw: dict[str, str] = {}
    if config_path:
        raw.update(read_config_file(config_path))
    raw.update(read_env(environ))
    raw.update({k: v for k, v in flags.items() if v is not None})
    for key, value in raw.items():
        if key not in PARSERS:
            raise InputError(f"unknown key {key!r}", key)
        parsed = PARSERS[key](key, value)
        if theta_pi_units and parsed is not None:
            if key == "theta":
                parsed *= math.pi
            elif key == "theta_grid":
                parsed = tuple(t * math.pi for t in parsed)
        merged[key] = parsed
    return merged


def require(config: Mapping[str, Any], *keys: str) -> None:
    for key in keys:
        if key not in config:
            raise InputError(
                f"missing required parameter {key!r} (flag, config file or {ENV_PREFIX}{key.upper()})",
                key,
            )
