"""Objective metadata, normalization onto [0, 1] and threshold mapping.

Every normalized value follows the same convention regardless of the
objective's direction: 1 is the best attainable value and 0 the worst.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Any

import numpy as np


class SpecError(ValueError):
    """Raised when an objective specification or its tuning is invalid."""


class Direction(str, Enum):
    MINIMIZE = "minimize"
    MAXIMIZE = "maximize"


@dataclass(frozen=True)
class ObjectiveSpec:
    """Bounds, weight, priority and optional threshold of one objective.

    Construction does not validate; use :func:`validate_spec` or let the
    operations below raise :class:`SpecError` on first use.
    """

    name: str
    direction: Direction
    lower_bound: float
    upper_bound: float
    weight: float = 1.0
    priority: int = 1
    threshold: float | None = None

    @property
    def span(self) -> float:
        return self.upper_bound - self.lower_bound

    def to_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "direction": self.direction.value,
            "lower_bound": self.lower_bound,
            "upper_bound": self.upper_bound,
            "weight": self.weight,
            "priority": self.priority,
            "threshold": self.threshold,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> ObjectiveSpec:
        threshold = data.get("threshold")
        return cls(
            name=str(data["name"]),
            direction=Direction(str(data["direction"]).lower()),
            lower_bound=float(data["lower_bound"]),
            upper_bound=float(data["upper_bound"]),
            weight=float(data.get("weight", 1.0)),
            priority=int(data.get("priority", 1)),
            threshold=None if threshold is None else float(threshold),
        )


@dataclass(frozen=True)
class TunedNormalization:
    """Raw-scale interval of interest and the output share it receives.

    The interval ``[interest_low, interest_high]`` is mapped onto a
    sub-range of length ``inside_share``; the two outer pieces split the
    remaining ``1 - inside_share`` in proportion to their raw lengths.
    """

    interest_low: float
    interest_high: float
    inside_share: float

    def to_dict(self) -> dict[str, float]:
        return {
            "interest_low": self.interest_low,
            "interest_high": self.interest_high,
            "inside_share": self.inside_share,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> TunedNormalization:
        return cls(
            float(data["interest_low"]),
            float(data["interest_high"]),
            float(data["inside_share"]),
        )


def validate_spec(spec: ObjectiveSpec) -> list[str]:
    """Return one message per violated invariant; an empty list means valid."""
    problems: list[str] = []
    if not isinstance(spec.direction, Direction):
        problems.append(f"direction: unknown direction {spec.direction!r}")
    lo, hi = spec.lower_bound, spec.upper_bound
    if not (math.isfinite(lo) and math.isfinite(hi)):
        problems.append("lower_bound/upper_bound: bounds must be finite")
    elif lo == hi:
        problems.append("lower_bound/upper_bound: degenerate bounds")
    elif lo > hi:
        problems.append("lower_bound/upper_bound: lower_bound must be below upper_bound")
    if not math.isfinite(spec.weight) or spec.weight <= 0:
        problems.append("weight: weight must be positive")
    elif spec.weight > 1:
        problems.append("weight: weight must not exceed 1")
    if spec.priority < 1:
        problems.append("priority: priority must be a positive integer")
    if spec.threshold is not None and not 0 < spec.threshold < 1:
        problems.append("threshold: threshold must lie strictly inside (0, 1)")
    return problems


def check_spec(spec: ObjectiveSpec) -> None:
    problems = validate_spec(spec)
    if problems:
        raise SpecError(f"invalid objective {spec.name!r}: " + "; ".join(problems))


def validate_tuning(spec: ObjectiveSpec, tuning: TunedNormalization) -> list[str]:
    problems = []
    if not (spec.lower_bound <= tuning.interest_low < tuning.interest_high <= spec.upper_bound):
        problems.append("interest interval must satisfy lower_bound <= low < high <= upper_bound")
    if not 0 < tuning.inside_share < 1:
        problems.append("inside_share must lie strictly inside (0, 1)")
    return problems


def _linear(value, spec: ObjectiveSpec):
    clamped = np.clip(value, spec.lower_bound, spec.upper_bound)
    if spec.direction is Direction.MINIMIZE:
        return (spec.upper_bound - clamped) / spec.span
    return (clamped - spec.lower_bound) / spec.span


def normalize(value, spec: ObjectiveSpec):
    """Map a raw objective value (or array of values) onto [0, 1].

    Values outside the bounds are clamped first, since bounds are often
    only estimates.

    >>> normalize(7.0, ObjectiveSpec("t", Direction.MINIMIZE, 2.0, 12.0))
    0.5
    """
    check_spec(spec)
    arr = np.asarray(value, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"non-finite value for objective {spec.name!r}: {value!r}")
    out = _linear(arr, spec)
    return float(out) if out.ndim == 0 else out


def _tuned_knots(spec: ObjectiveSpec, tuning: TunedNormalization) -> tuple[np.ndarray, np.ndarray]:
    # knots in ascending raw order with the "maximize" output (0 at lower_bound)
    lo, hi = spec.lower_bound, spec.upper_bound
    a, b = tuning.interest_low, tuning.interest_high
    outside = (a - lo) + (hi - b)
    rest = 1.0 - tuning.inside_share
    if outside > 0:
        low_share = rest * (a - lo) / outside
        high_share = rest * (hi - b) / outside
    else:
        # interest interval covers the whole range
        low_share = high_share = 0.0
    xs = np.array([lo, a, b, hi])
    ys = np.array([0.0, low_share, 1.0 - high_share, 1.0])
    if spec.direction is Direction.MINIMIZE:
        # mirror: share of the segment next to lower_bound now sits at the top
        ys = np.array([1.0, 1.0 - low_share, high_share, 0.0])
    return xs, ys


def tuned_normalize(value, spec: ObjectiveSpec, tuning: TunedNormalization):
    """Three-segment piecewise-linear normalization focused on an interval.

    Agrees with :func:`normalize` at both bounds. Inside the interest
    interval the slope is steep, outside it flattens out.
    """
    check_spec(spec)
    problems = validate_tuning(spec, tuning)
    if problems:
        raise SpecError(f"invalid tuning for {spec.name!r}: " + "; ".join(problems))
    arr = np.asarray(value, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"non-finite value for objective {spec.name!r}: {value!r}")
    xs, ys = _tuned_knots(spec, tuning)
    out = np.interp(np.clip(arr, spec.lower_bound, spec.upper_bound), xs, ys)
    # np.interp is exact at knots, so both bounds map to exactly 0 and 1
    return float(out) if out.ndim == 0 else out


def threshold_to_raw(spec: ObjectiveSpec) -> float:
    """Raw objective value at which the normalized threshold is met.

    For maximized objectives this is ``min + eps * (max - min)``; for
    minimized ones the scale is read from the top, ``max - eps * (max - min)``,
    so that ``normalize(v) >= eps`` holds exactly on the improving side.
    """
    check_spec(spec)
    if spec.threshold is None:
        raise SpecError(f"objective {spec.name!r} has no threshold")
    if spec.direction is Direction.MAXIMIZE:
        return spec.lower_bound + spec.threshold * spec.span
    return spec.upper_bound - spec.threshold * spec.span


def meets_threshold_raw(value: float, spec: ObjectiveSpec) -> bool:
    """Raw-scale view of the satisfaction test ``normalize(value) >= threshold``."""
    t = threshold_to_raw(spec)
    v = min(max(value, spec.lower_bound), spec.upper_bound)
    return v >= t if spec.direction is Direction.MAXIMIZE else v <= t
