"""
Flat ``key = value`` experiment configuration.

One assignment per line, ``#`` starts a comment. Numbers accept a unit
suffix separated by whitespace or written directly after the number::

    a_AB = 55 a0
    t_max = 0.5 ms
    D = 2L                 # multiples of the intra-well half separation
    separations = 8L, 16L, 40L

All quantities are converted to SI on parsing.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field, fields, replace
from typing import Optional

import numpy as np

from ..kernels import hybrid_time_grid, linear_time_grid
from ..params import BOHR, PRESETS, ParameterError, PhysicalParams, load_preset

KINDS = ("gamma0-compare", "gamma-pair", "delta", "distance-sweep", "oned-compare",
         "spectral-density", "densmat-demo", "oracle-suite")

UNITS = {
    "a0": BOHR, "m": 1.0, "mm": 1e-3, "um": 1e-6, "nm": 1e-9,
    "s": 1.0, "ms": 1e-3, "us": 1e-6, "ns": 1e-9,
    "K": 1.0, "mK": 1e-3, "uK": 1e-6, "nK": 1e-9,
    "kg": 1.0, "u": 1.66053906660e-27,
}
_NUMBER = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*([A-Za-z0-9]*)\s*$")

PARAM_ALIASES = {"lambda": "lam"}
PARAM_KEYS = set(PhysicalParams.field_names()) | set(PARAM_ALIASES)
GRID_KEYS = ("t_max", "t_min", "t_switch", "n_log", "n_lin", "inset_t_max", "n_inset")
OTHER_KEYS = ("preset", "kind", "figure", "separations", "baths", "rel_tol", "log_x", "title",
              "omega_min", "omega_max", "n_omega", "onset_threshold")
INT_KEYS = {"n_log", "n_lin", "n_inset", "n_omega", "d"}


class ConfigError(ValueError):
    """Invalid configuration; ``field`` names the offending key."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


def parse_quantity(text: str, key: str, L: float | None = None) -> float:
    """Parse ``'55 a0'``, ``'0.5ms'``, ``'2L'`` into an SI float."""
    m = _NUMBER.match(str(text))
    if not m:
        raise ConfigError(key, f"cannot parse number {text!r}")
    value, unit = float(m.group(1)), m.group(2)
    if not unit:
        return value
    if unit == "L":
        if L is None:
            raise ConfigError(key, "the 'L' suffix needs L to be known")
        return value * L
    if unit not in UNITS:
        raise ConfigError(key, f"unknown unit {unit!r}")
    return value * UNITS[unit]


def parse_text(text: str) -> dict[str, str]:
    """Raw ``key -> value`` strings, in file order; later keys win."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}", f"expected 'key = value', got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ConfigError(f"line {lineno}", "empty key")
        out[key] = value
    return out


def parse_overrides(items) -> dict[str, str]:
    out = {}
    for item in items or ():
        if "=" not in item:
            raise ConfigError("--override", f"expected key=value, got {item!r}")
        key, value = (s.strip() for s in item.split("=", 1))
        out[key] = value
    return out


@dataclass(frozen=True)
class TimeGrid:
    t_max: float = 0.5e-3
    t_min: float = 1e-9
    t_switch: float = 1e-6
    n_log: int = 40
    n_lin: int = 200

    def __post_init__(self):
        if self.n_lin < 2:
            raise ConfigError("n_lin", f"time grid needs at least 2 linear points, got {self.n_lin}")
        if self.n_log < 0:
            raise ConfigError("n_log", "must be >= 0")
        if not (0 < self.t_min < self.t_switch < self.t_max):
            raise ConfigError("t_max", "need 0 < t_min < t_switch < t_max")

    def times(self) -> np.ndarray:
        if self.n_log == 0:
            return linear_time_grid(self.t_max, self.n_lin)
        grid = hybrid_time_grid(self.t_max, self.n_log, self.n_lin, self.t_min, self.t_switch)
        if np.any(np.diff(grid) <= 0):
            raise ConfigError("t_max", "time grid is not strictly increasing")
        return grid


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    params: PhysicalParams
    preset: str = "standard-3d"
    figure: str = ""
    grid: TimeGrid = field(default_factory=TimeGrid)
    inset_t_max: Optional[float] = None
    n_inset: int = 101
    separations: tuple[float, ...] = ()
    baths: tuple[str, ...] = ("condensate", "free")
    rel_tol: float = 1e-9
    log_x: bool = False
    title: str = ""
    omega_min: float = 0.0
    omega_max: float = 0.0
    n_omega: int = 200
    onset_threshold: float = 0.02

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError("kind", f"unknown experiment kind {self.kind!r}; known: {', '.join(KINDS)}")
        for b in self.baths:
            if b not in ("condensate", "free"):
                raise ConfigError("baths", f"unknown bath {b!r}")
        if not self.baths:
            raise ConfigError("baths", "at least one bath is required")
        if not (0 < self.rel_tol <= 1e-3):
            raise ConfigError("rel_tol", "must lie in (0, 1e-3]")
        if self.inset_t_max is not None and not self.inset_t_max > 0:
            raise ConfigError("inset_t_max", "must be positive")
        if self.n_inset < 2:
            raise ConfigError("n_inset", "inset grid needs at least 2 points")
        if any(s < 2 * self.params.L for s in self.separations):
            raise ConfigError("separations", "every separation 2D must be >= 2L")
        if self.n_omega < 2:
            raise ConfigError("n_omega", "needs at least 2 frequencies")

    def times(self) -> np.ndarray:
        return self.grid.times()

    def inset_times(self) -> np.ndarray | None:
        if self.inset_t_max is None:
            return None
        return linear_time_grid(self.inset_t_max, self.n_inset)

    def with_param(self, key: str, value: float) -> "ExperimentConfig":
        key = PARAM_ALIASES.get(key, key)
        try:
            return replace(self, params=self.params.with_overrides(**{key: value}))
        except ParameterError as exc:
            raise ConfigError(exc.field, _message(exc)) from None

    def to_text(self) -> str:
        """Round-trippable flat rendering with every value resolved to SI."""
        lines = [f"kind = {self.kind}", f"preset = {self.preset}"]
        if self.figure:
            lines.append(f"figure = {self.figure}")
        for name in PhysicalParams.field_names():
            value = getattr(self.params, name)
            if value is not None:
                lines.append(f"{name} = {value!r}")
        for f in fields(TimeGrid):
            lines.append(f"{f.name} = {getattr(self.grid, f.name)!r}")
        if self.inset_t_max is not None:
            lines.append(f"inset_t_max = {self.inset_t_max!r}")
        lines.append(f"n_inset = {self.n_inset}")
        if self.separations:
            lines.append("separations = " + ", ".join(repr(s) for s in self.separations))
        lines += [f"baths = {', '.join(self.baths)}", f"rel_tol = {self.rel_tol!r}",
                  f"log_x = {str(self.log_x).lower()}", f"n_omega = {self.n_omega}",
                  f"onset_threshold = {self.onset_threshold!r}"]
        if self.omega_min:
            lines.append(f"omega_min = {self.omega_min!r}")
        if self.omega_max:
            lines.append(f"omega_max = {self.omega_max!r}")
        if self.title:
            lines.append(f"title = {self.title}")
        return "\n".join(lines) + "\n"


def _message(exc: Exception) -> str:
    """Message of a :class:`ParameterError` without its ``field: `` prefix."""
    text = str(exc)
    field_name = getattr(exc, "field", None)
    return text[len(field_name) + 2:] if field_name and text.startswith(field_name + ": ") else text


def _bool(text: str, key: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ConfigError(key, f"expected a boolean, got {text!r}")


def build_config(raw: dict[str, str], base: dict[str, str] | None = None) -> ExperimentConfig:
    """Turn raw strings into an :class:`ExperimentConfig`.

    ``base`` supplies defaults (a figure preset); ``raw`` wins.
    """
    merged = dict(base or {})
    merged.update(raw)
    unknown = [k for k in merged if k not in PARAM_KEYS and k not in GRID_KEYS and k not in OTHER_KEYS]
    if unknown:
        raise ConfigError(unknown[0], "unknown configuration key")
    if "kind" not in merged:
        raise ConfigError("kind", "missing experiment kind")
    preset = merged.get("preset", "standard-3d")
    if preset not in PRESETS:
        raise ConfigError("preset", f"unknown parameter preset {preset!r}; known: {sorted(PRESETS)}")
    params = load_preset(preset)

    # L first so that 'D = 2L' and 'separations = 8L' resolve against the final L
    changes = {}
    if "L" in merged:
        changes["L"] = parse_quantity(merged["L"], "L")
    L = changes.get("L", params.L)
    for key, text in merged.items():
        if key not in PARAM_KEYS or key == "L":
            continue
        name = PARAM_ALIASES.get(key, key)
        if text.strip().lower() in ("none", ""):
            changes[name] = None
        elif name in INT_KEYS:
            changes[name] = int(parse_quantity(text, key))
        else:
            changes[name] = parse_quantity(text, key, L)
    try:
        params = params.with_overrides(**changes)
    except (ParameterError, TypeError) as exc:
        raise ConfigError(getattr(exc, "field", "params"), _message(exc)) from None

    grid_kw = {}
    for key in ("t_max", "t_min", "t_switch"):
        if key in merged:
            grid_kw[key] = parse_quantity(merged[key], key)
    for key in ("n_log", "n_lin"):
        if key in merged:
            grid_kw[key] = _int(merged[key], key)
    grid = TimeGrid(**grid_kw)

    kw = {}
    if "inset_t_max" in merged and merged["inset_t_max"].strip().lower() != "none":
        kw["inset_t_max"] = parse_quantity(merged["inset_t_max"], "inset_t_max")
    if "n_inset" in merged:
        kw["n_inset"] = _int(merged["n_inset"], "n_inset")
    if "separations" in merged:
        items = [s for s in merged["separations"].split(",") if s.strip()]
        kw["separations"] = tuple(parse_quantity(s, "separations", params.L) for s in items)
    if "baths" in merged:
        kw["baths"] = tuple(s.strip() for s in merged["baths"].split(",") if s.strip())
    if "rel_tol" in merged:
        kw["rel_tol"] = parse_quantity(merged["rel_tol"], "rel_tol")
    if "log_x" in merged:
        kw["log_x"] = _bool(merged["log_x"], "log_x")
    for key in ("omega_min", "omega_max", "onset_threshold"):
        if key in merged:
            kw[key] = parse_quantity(merged[key], key)
    if "n_omega" in merged:
        kw["n_omega"] = _int(merged["n_omega"], "n_omega")
    return ExperimentConfig(kind=merged["kind"], params=params, preset=preset,
                            figure=merged.get("figure", ""), grid=grid,
                            title=merged.get("title", ""), **kw)


def _int(text: str, key: str) -> int:
    value = parse_quantity(text, key)
    if value != math.floor(value):
        raise ConfigError(key, f"expected an integer, got {text!r}")
    return int(value)


# Figure presets: flat dictionaries in the same format as a config file.
FIGURES: dict[str, dict[str, str]] = {
    "fig2": {"kind": "gamma0-compare", "figure": "fig2", "preset": "standard-3d",
             "t_max": "0.5 ms", "inset_t_max": "2 us", "title": "single impurity, 3D"},
    "fig3": {"kind": "gamma-pair", "figure": "fig3", "preset": "standard-3d", "D": "2L",
             "t_max": "0.5 ms", "title": "impurity pair, 2D = 4L, 3D"},
    "fig4": {"kind": "delta", "figure": "fig4", "preset": "standard-3d", "D": "2L",
             "t_max": "0.5 ms", "inset_t_max": "2 us", "title": "collective deviation, 3D"},
    "fig5": {"kind": "distance-sweep", "figure": "fig5", "preset": "standard-3d",
             "separations": "8L, 16L, 40L", "t_max": "0.5 ms",
             "title": "impurity pair at several separations, 3D"},
    "fig6": {"kind": "oned-compare", "figure": "fig6", "preset": "standard-1d", "D": "2L",
             "t_max": "0.5 ms", "title": "impurity pair, 2D = 4L, 1D"},
    "spectral": {"kind": "spectral-density", "figure": "spectral", "preset": "standard-3d",
                 "title": "spectral density"},
    "densmat": {"kind": "densmat-demo", "figure": "densmat", "preset": "standard-3d", "D": "2L",
                "t_max": "0.2 ms", "n_log": "0", "n_lin": "41", "title": "two-impurity coherences"},
    "oracle": {"kind": "oracle-suite", "figure": "oracle", "preset": "standard-3d",
               "title": "oracle checks"},
}


def figure_preset(name: str) -> dict[str, str]:
    try:
        return dict(FIGURES[name])
    except KeyError:
        raise ConfigError("preset", f"unknown figure preset {name!r}; known: {', '.join(FIGURES)}") from None
