"""Flat ``key = value`` run configuration.

Example::

    # TBP 200 design example
    T = 1.0
    delta_f = 200.0
    K = 32
    seed = 0
    delta = 0.1
    max_evals = 4000
    sample_rate = 3200.0
    output_dir = runs/example
    # z = 0.3, 0.1        (optional; overrides the seeded initialisation)

Blank lines and ``#`` comments are ignored.  Unknown keys are an error.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from .errors import MTFFMError
from .kapteyn import CONSTRAINT_SLACK
from .special_functions import weighted_sum

OUTPUT_DIR_ENV = "MTFFM_OUTPUT_DIR"


class ConfigError(MTFFMError, ValueError):
    """Malformed or inconsistent configuration."""


@dataclass(frozen=True)
class DesignConfig:
    T: float = 1.0
    delta_f: float = 200.0
    K: int = 32
    seed: int = 0
    delta: float = 0.1
    max_evals: int = 4000
    sample_rate: float | None = None
    output_dir: str = "mtffm-out"
    z: tuple[float, ...] | None = None
    margin: float = 0.95
    penalty_weight: float = 100.0
    step_init: float = 0.5

    def __post_init__(self):
        if not self.T > 0:
            raise ConfigError(f"T must be positive, got {self.T}")
        if not self.delta_f > 0:
            raise ConfigError(f"delta_f must be positive, got {self.delta_f}")
        if not 0 < self.delta < 1:
            raise ConfigError(f"delta must lie in (0, 1), got {self.delta}")
        if self.max_evals <= 0:
            raise ConfigError("max_evals must be positive")
        if not 0 < self.margin <= 1:
            raise ConfigError(f"margin must lie in (0, 1], got {self.margin}")
        if self.sample_rate is not None and self.sample_rate < 8 * self.delta_f:
            raise ConfigError(f"sample_rate must be at least 8 * delta_f = {8 * self.delta_f:g} Hz")
        if self.z is not None:
            if len(self.z) == 0:
                raise ConfigError("z must not be empty")
            if len(self.z) != self.K:
                object.__setattr__(self, "K", len(self.z))
            w = weighted_sum(self.z)
            if w > 1.0 + CONSTRAINT_SLACK:
                raise ConfigError(f"explicit z violates sum_k k|z_k| <= 1 (got {w:.6g})")
        elif self.K < 1:
            raise ConfigError(f"K must be >= 1, got {self.K}")

    @property
    def tbp(self) -> float:
        return self.T * self.delta_f

    @property
    def resolved_sample_rate(self) -> float:
        return 16.0 * self.delta_f if self.sample_rate is None else self.sample_rate

    def resolved_output_dir(self) -> Path:
        return Path(os.environ.get(OUTPUT_DIR_ENV) or self.output_dir)

    def to_dict(self) -> dict:
        d = {f.name: getattr(self, f.name) for f in fields(self)}
        d["z"] = None if self.z is None else list(self.z)
        return d


_TYPES = {
    "T": float,
    "delta_f": float,
    "K": int,
    "seed": int,
    "delta": float,
    "max_evals": int,
    "sample_rate": float,
    "output_dir": str,
    "margin": float,
    "penalty_weight": float,
    "step_init": float,
}


def _parse_value(key: str, raw: str):
    if key == "z":
        try:
            vals = tuple(float(v) for v in raw.replace("[", "").replace("]", "").split(",") if v.strip())
        except ValueError as exc:
            raise ConfigError(f"z: {exc}") from None
        if not np.all(np.isfinite(vals)):
            raise ConfigError("z must be finite")
        return vals
    conv = _TYPES[key]
    raw = raw.strip().strip('"').strip("'")
    try:
        if conv is int:
            return int(raw)
        return conv(raw)
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {raw!r} as {conv.__name__}") from None


def parse_config(text: str) -> DesignConfig:
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, raw = (s.strip() for s in line.split("=", 1))
        if key not in _TYPES and key != "z":
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        values[key] = _parse_value(key, raw)
    try:
        return DesignConfig(**values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def load_config(path: str | os.PathLike) -> DesignConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text)
