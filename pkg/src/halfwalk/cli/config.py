"""Run configuration: a flat ``key = value`` text file with a strict schema.

Complex numbers are written ``re,im``; angles are radians and may also be
given as ``pi/4``, ``3*pi/8`` and the like.  Unknown keys are errors.
"""

from __future__ import annotations

import dataclasses
import json
import math
import re
from dataclasses import dataclass
from pathlib import Path

from ..errors import InvalidArgument

SCHEMA_VERSION = 1
MODES = ("density", "flip-global", "flip-per-site", "kraus-sample")
UNRAVELINGS = MODES[1:]


class ConfigError(InvalidArgument):
    def __init__(self, message: str, *, source: str | None = None, line: int | None = None, key: str | None = None):
        self.message, self.source, self.line, self.key = message, source, line, key
        where = ""
        if source:
            where = source + (f":{line}" if line else "") + ": "
        elif line:
            where = f"line {line}: "
        if key:
            where += f"{key}: "
        super().__init__(where + message)


_PI_FORM = re.compile(r"^\s*(?:([0-9.eE+-]+)\s*\*\s*)?pi\s*(?:/\s*([0-9.eE+-]+))?\s*$")


def _angle(text: str) -> float:
    m = _PI_FORM.match(text)
    if m:
        num = float(m.group(1)) if m.group(1) else 1.0
        den = float(m.group(2)) if m.group(2) else 1.0
        return num * math.pi / den
    return _float(text)


def _float(text: str) -> float:
    value = float(text)
    if not math.isfinite(value):
        raise ValueError("must be finite")
    return value


def _int(text: str) -> int:
    if not re.fullmatch(r"\s*[+-]?\d+\s*", text):
        raise ValueError(f"expected an integer, got {text!r}")
    return int(text)


def _complex(text: str) -> complex:
    parts = text.split(",")
    if len(parts) != 2:
        raise ValueError(f"expected 're,im', got {text!r}")
    return complex(_float(parts[0]), _float(parts[1]))


def _float_list(text: str) -> tuple[float, ...]:
    # an empty value is the empty list, which is how an unset p_list serializes
    if not text:
        return ()
    items = [s.strip() for s in text.split(",")]
    if not all(items):
        raise ValueError("expected a comma-separated list of numbers")
    return tuple(_float(t) for t in items)


def _mode_list(text: str) -> tuple[str, ...]:
    items = tuple(s.strip() for s in text.split(",") if s.strip())
    bad = [m for m in items if m not in UNRAVELINGS]
    if bad or not items:
        raise ValueError(f"modes must be drawn from {', '.join(UNRAVELINGS)}")
    return items


def _fmt(value) -> str:
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, complex):
        return f"{value.real!r},{value.imag!r}"
    if isinstance(value, tuple):
        return ",".join(_fmt(v) for v in value)
    return str(value)


@dataclass(frozen=True)
class RunConfig:
    gamma: float = math.pi / 4
    p: float = 0.2
    p_list: tuple[float, ...] = ()
    mode: str = "flip-global"
    steps: int = 2000
    trajectories: int = 100
    seed: int = 1
    initial_position: int = 0
    chirality_L: complex = complex(1 / math.sqrt(2), 0.0)
    chirality_R: complex = complex(0.0, 1 / math.sqrt(2))
    prune_threshold: float = 1e-16
    fit_window: float = 0.5
    tail_fraction: float = 0.5
    positions_every: int = 0
    position_threshold: float = 1e-15
    memory_budget_mb: int = 256
    bootstrap: int = 0
    compare_modes: tuple[str, ...] = UNRAVELINGS

    def __post_init__(self):
        checks = [
            ("p", 0.0 <= self.p <= 1.0, "must lie in [0, 1]"),
            ("p_list", all(0.0 <= v <= 1.0 for v in self.p_list), "entries must lie in [0, 1]"),
            ("mode", self.mode in MODES, f"must be one of {', '.join(MODES)}"),
            ("steps", self.steps >= 0, "must be non-negative"),
            ("trajectories", self.trajectories >= 1, "must be at least 1"),
            ("seed", 0 <= self.seed < 2**64, "must be an unsigned 64-bit integer"),
            ("prune_threshold", self.prune_threshold >= 0, "must be non-negative"),
            ("fit_window", 0 < self.fit_window <= 1, "must lie in (0, 1]"),
            ("tail_fraction", 0 < self.tail_fraction <= 1, "must lie in (0, 1]"),
            ("positions_every", self.positions_every >= 0, "must be non-negative"),
            ("position_threshold", self.position_threshold >= 0, "must be non-negative"),
            ("memory_budget_mb", self.memory_budget_mb > 0, "must be positive"),
            ("bootstrap", self.bootstrap >= 0, "must be non-negative"),
        ]
        for key, ok, message in checks:
            if not ok:
                raise ConfigError(message, key=key)
        norm = abs(self.chirality_L) ** 2 + abs(self.chirality_R) ** 2
        if abs(norm - 1.0) > 1e-12:
            raise ConfigError(f"|chirality_L|^2 + |chirality_R|^2 = {norm!r}, must be 1", key="chirality_L")

    @property
    def memory_budget(self) -> int:
        return self.memory_budget_mb * 2**20

    def to_mapping(self) -> dict[str, str]:
        return {f.name: _fmt(getattr(self, f.name)) for f in dataclasses.fields(self)}

    def to_text(self) -> str:
        return "".join(f"{k} = {v}\n" for k, v in self.to_mapping().items())

    def replace(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, **changes)

    @classmethod
    def from_mapping(cls, mapping: dict[str, str], *, source: str | None = None,
                     lines: dict[str, int] | None = None) -> "RunConfig":
        lines = lines or {}
        values = {}
        for key, text in mapping.items():
            if key not in _PARSERS:
                raise ConfigError(f"unknown key (allowed: {', '.join(_PARSERS)})",
                                  source=source, line=lines.get(key), key=key)
            try:
                values[key] = _PARSERS[key](str(text).strip())
            except ValueError as exc:
                raise ConfigError(str(exc), source=source, line=lines.get(key), key=key) from None
        try:
            return cls(**values)
        except ConfigError as exc:
            raise ConfigError(exc.message, source=source,
                              line=lines.get(exc.key), key=exc.key) from None


_PARSERS = {
    "gamma": _angle,
    "p": _float,
    "p_list": _float_list,
    "mode": str,
    "steps": _int,
    "trajectories": _int,
    "seed": _int,
    "initial_position": _int,
    "chirality_L": _complex,
    "chirality_R": _complex,
    "prune_threshold": _float,
    "fit_window": _float,
    "tail_fraction": _float,
    "positions_every": _int,
    "position_threshold": _float,
    "memory_budget_mb": _int,
    "bootstrap": _int,
    "compare_modes": _mode_list,
}


def parse_config_text(text: str, source: str | None = None) -> RunConfig:
    mapping, lines = {}, {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError("expected 'key = value'", source=source, line=number)
        key, value = (part.strip() for part in line.split("=", 1))
        if key in mapping:
            raise ConfigError(f"duplicate key (first set on line {lines[key]})", source=source, line=number, key=key)
        mapping[key], lines[key] = value, number
    return RunConfig.from_mapping(mapping, source=source, lines=lines)


def load_config(path: str | Path) -> RunConfig:
    """Read a key-value config file, or the config embedded in a manifest.json."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", source=str(path)) from None
    if path.suffix == ".json":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON: {exc.msg}", source=str(path), line=exc.lineno) from None
        if not isinstance(doc, dict) or not isinstance(doc.get("config"), dict):
            raise ConfigError("manifest has no 'config' object", source=str(path))
        return RunConfig.from_mapping(doc["config"], source=str(path))
    return parse_config_text(text, source=str(path))
