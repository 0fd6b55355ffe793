"""The tunable rule space: parameter specs, the playable configuration type,
continuous relaxation, and the deterministic discretization projection."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path


class Precision(Enum):
    INTEGER = "integer"
    TENTH = "tenth"


@dataclass(frozen=True)
class ParamSpec:
    name: str
    lower: float
    upper: float
    precision: Precision

    def __post_init__(self):
        if not self.lower < self.upper:
            raise ValueError(f"{self.name}: lower must be < upper")
        if self.precision is Precision.INTEGER:
            if self.lower != int(self.lower) or self.upper != int(self.upper):
                raise ValueError(f"{self.name}: integer bounds must be whole numbers")

    def cardinality(self) -> int:
        """Number of distinct values after discretization."""
        step = 1.0 if self.precision is Precision.INTEGER else 0.1
        return int(round((self.upper - self.lower) / step)) + 1


# Canonical ordering of the 12 optimized parameters (economy, combat,
# production, scoring).
_SPECS = [
    ParamSpec("initial_resources", 2, 10, Precision.INTEGER),
    ParamSpec("empire_farmer_gather", 1, 5, Precision.INTEGER),
    ParamSpec("nomads_kill_gain", 1, 10, Precision.INTEGER),
    ParamSpec("empire_damage", 1, 5, Precision.INTEGER),
    ParamSpec("nomads_damage", 1, 5, Precision.INTEGER),
    ParamSpec("empire_soldier_hp", 4, 16, Precision.INTEGER),
    ParamSpec("nomads_cavalry_hp", 4, 16, Precision.INTEGER),
    ParamSpec("empire_unit_cost", 2, 10, Precision.INTEGER),
    ParamSpec("nomads_unit_cost", 2, 10, Precision.INTEGER),
    ParamSpec("score_per_resource", 0.1, 0.5, Precision.TENTH),
    ParamSpec("score_per_battle", 1, 5, Precision.INTEGER),
    ParamSpec("score_per_unit", 1, 5, Precision.INTEGER),
]

PARAM_NAMES = [s.name for s in _SPECS]
N_PARAMS = len(_SPECS)

VALID_MAP_SIZES = (5, 7, 9, 11)
# Smaller maps default to a 16-turn limit, larger ones to 32.
DEFAULT_MAX_TURNS = {5: 16, 7: 16, 9: 32, 11: 32}

FARMER_HP = 5.0


def default_space() -> list[ParamSpec]:
    """The 12 optimizable parameters in canonical order."""
    return list(_SPECS)


def space_cardinality() -> int:
    """Total number of distinct discrete rule configurations."""
    return math.prod(s.cardinality() for s in _SPECS)


class ContractViolation(ValueError):
    """Raised when a caller breaks an operation's precondition."""


def _round_half_away(v: float) -> int:
    # round-half-away-from-zero; deterministic and locale-free
    return int(math.floor(v + 0.5)) if v >= 0 else int(math.ceil(v - 0.5))


def _quantize(v: float, spec: ParamSpec) -> float:
    v = min(max(v, spec.lower), spec.upper)
    if spec.precision is Precision.INTEGER:
        return float(_round_half_away(v))
    return _round_half_away(v * 10.0) / 10.0


@dataclass(frozen=True)
class RuleConfig:
    """A valid, discrete game configuration: the 12 optimized parameters plus
    the fixed design settings (map size and turn limit)."""

    initial_resources: float
    empire_farmer_gather: float
    nomads_kill_gain: float
    empire_damage: float
    nomads_damage: float
    empire_soldier_hp: float
    nomads_cavalry_hp: float
    empire_unit_cost: float
    nomads_unit_cost: float
    score_per_resource: float
    score_per_battle: float
    score_per_unit: float
    map_size: int = 7
    max_turns: int = 16

    def __post_init__(self):
        for spec in _SPECS:
            v = getattr(self, spec.name)
            if not (spec.lower - 1e-9 <= v <= spec.upper + 1e-9):
                raise ContractViolation(
                    f"{spec.name}={v} outside [{spec.lower}, {spec.upper}]"
                )
            q = _quantize(v, spec)
            if abs(v - q) > 1e-9:
                raise ContractViolation(
                    f"{spec.name}={v} violates {spec.precision.value} precision"
                )
        if self.map_size not in VALID_MAP_SIZES:
            raise ContractViolation(f"map_size={self.map_size} not in {VALID_MAP_SIZES}")
        if self.max_turns < 1:
            raise ContractViolation("max_turns must be >= 1")

    def values(self) -> list[float]:
        """The 12 optimized values in canonical order."""
        return [getattr(self, name) for name in PARAM_NAMES]

    def to_dict(self) -> dict:
        out = {}
        for spec in _SPECS:
            v = getattr(self, spec.name)
            out[spec.name] = int(v) if spec.precision is Precision.INTEGER else round(v, 1)
        out["map_size"] = self.map_size
        out["max_turns"] = self.max_turns
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "RuleConfig":
        allowed = set(PARAM_NAMES) | {"map_size", "max_turns"}
        unknown = set(data) - allowed
        if unknown:
            raise ContractViolation(f"unknown config keys: {sorted(unknown)}")
        missing = set(PARAM_NAMES) - set(data)
        if missing:
            raise ContractViolation(f"missing config keys: {sorted(missing)}")
        kwargs = {k: data[k] for k in data}
        if "map_size" in kwargs and "max_turns" not in kwargs:
            kwargs["max_turns"] = DEFAULT_MAX_TURNS[int(kwargs["map_size"])]
        return cls(**kwargs)


def default_config(map_size: int = 7, max_turns: int | None = None) -> RuleConfig:
    """A mid-range configuration, useful as a starting point."""
    mids = {s.name: _quantize((s.lower + s.upper) / 2.0, s) for s in _SPECS}
    if max_turns is None:
        max_turns = DEFAULT_MAX_TURNS[map_size]
    return RuleConfig(map_size=map_size, max_turns=max_turns, **mids)


def project(raw: list[float], map_size: int = 7, max_turns: int | None = None) -> RuleConfig:
    """Deterministic discretization: clamp each entry to its range, then round
    to its precision (half away from zero). Total and idempotent for any
    finite input of the right length."""
    if len(raw) != N_PARAMS:
        raise ContractViolation(f"raw vector must have {N_PARAMS} entries, got {len(raw)}")
    vals = {s.name: _quantize(float(v), s) for s, v in zip(_SPECS, raw)}
    if max_turns is None:
        max_turns = DEFAULT_MAX_TURNS[map_size]
    return RuleConfig(map_size=map_size, max_turns=max_turns, **vals)


def normalize(config: RuleConfig) -> list[float]:
    """Affine map of each optimized field onto [0, 1]."""
    return [
        (getattr(config, s.name) - s.lower) / (s.upper - s.lower) for s in _SPECS
    ]


def denormalize(vector: list[float]) -> list[float]:
    """Inverse affine map from the unit cube back to raw parameter units."""
    if len(vector) != N_PARAMS:
        raise ContractViolation(f"vector must have {N_PARAMS} entries, got {len(vector)}")
    for i, v in enumerate(vector):
        if not (0.0 <= v <= 1.0):
            raise ContractViolation(f"entry {i}={v} outside [0, 1]")
    return [s.lower + v * (s.upper - s.lower) for s, v in zip(_SPECS, vector)]


def save_config(config: RuleConfig, path: str | Path) -> None:
    Path(path).write_text(dumps_config(config) + "\n")


def dumps_config(config: RuleConfig) -> str:
    # integers without fractional part, tenth-precision with one decimal
    parts = []
    for key, v in config.to_dict().items():
        if isinstance(v, int):
            parts.append(f'  "{key}": {v}')
        else:
            parts.append(f'  "{key}": {v:.1f}')
    return "{\n" + ",\n".join(parts) + "\n}"


def load_config(path: str | Path) -> RuleConfig:
    data = json.loads(Path(path).read_text())
    if not isinstance(data, dict):
        raise ContractViolation("config file must contain a JSON object")
    return RuleConfig.from_dict(data)


def with_design(config: RuleConfig, map_size: int, max_turns: int | None = None) -> RuleConfig:
    if max_turns is None:
        max_turns = DEFAULT_MAX_TURNS[map_size]
    return replace(config, map_size=map_size, max_turns=max_turns)
