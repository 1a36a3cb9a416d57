"""Result records shared by the norm, operator and verification layers."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np


def _num(x) -> float | None:
    x = float(x)
    return x if math.isfinite(x) else None


@dataclass(frozen=True)
class RatioReport:
    name: str
    per_entry: tuple
    max_ratio: float
    min_ratio: float
    symmetry_drift: float = float("nan")
    params: dict = field(default_factory=dict)
    extras: dict = field(default_factory=dict)

    @property
    def ratios(self) -> np.ndarray:
        return np.array([row[3] for row in self.per_entry])

    @property
    def argmax(self):
        return self.per_entry[int(np.argmax(self.ratios))][0]

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "max_ratio": _num(self.max_ratio),
            "min_ratio": _num(self.min_ratio),
            "symmetry_drift": _num(self.symmetry_drift),
            "per_entry": [{"entry_id": str(e), "lhs": _num(l), "rhs": _num(r), "ratio": _num(q)} for e, l, r, q in self.per_entry],
            "params": self.params,
            "extras": _jsonable(self.extras),
        }

    def csv_rows(self) -> list:
        return [[str(e), f"{l:.17g}", f"{r:.17g}", f"{q:.17g}"] for e, l, r, q in self.per_entry]


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return _num(obj)
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def make_report(name, ids, lhs, rhs, params=None, symmetry_drift=float("nan"), extras=None) -> RatioReport:
    """Assemble per-entry rows; entries with rhs == 0 are dropped and listed in extras['skipped']."""
    rows, skipped = [], []
    for e, l, r in zip(ids, lhs, rhs):
        l, r = float(l), float(r)
        if l < 0 or r < 0:
            raise ValueError("norms must be nonnegative")
        if r > 0:
            rows.append((e, l, r, l / r))
        else:
            skipped.append(e)
    if not rows:
        raise ValueError(f"{name}: no entry with positive right-hand side")
    ratios = [q for *_, q in rows]
    extras = dict(extras or {})
    if skipped:
        extras["skipped"] = skipped
    return RatioReport(name, tuple(rows), max(ratios), min(ratios), float(symmetry_drift), dict(params or {}), extras)


def relative_drift(base: np.ndarray, other: np.ndarray) -> float:
    base, other = np.asarray(base, dtype=float), np.asarray(other, dtype=float)
    return float(np.max(np.abs(other / base - 1.0)))


@dataclass(frozen=True)
class ConvergenceReport:
    t_values: tuple
    sup_errors: tuple
    probe: dict
    monotone_tail: bool
    params: dict = field(default_factory=dict)
    extras: dict = field(default_factory=dict)

    def __post_init__(self):
        t = np.asarray(self.t_values)
        if t.size > 1 and np.any(np.diff(t) <= 0):
            raise ValueError("t_values must be strictly increasing")

    def to_dict(self) -> dict:
        return {
            "t_values": [float(t) for t in self.t_values],
            "sup_errors": [float(e) for e in self.sup_errors],
            "probe": self.probe,
            "monotone_tail": bool(self.monotone_tail),
            "params": self.params,
            "extras": _jsonable(self.extras),
        }

    def csv_rows(self) -> list:
        return [[f"{t:.17g}", f"{e:.17g}"] for t, e in zip(self.t_values, self.sup_errors)]


def dumps(obj) -> str:
    return json.dumps(_jsonable(obj), sort_keys=True, indent=2)
