"""Shared domain types and small numerical primitives.

Everything here is a pure value or a pure function, so instances can be
shared read-only between threads.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Sequence

import numpy as np

DEFAULT_ALPHA = 0.05
DEFAULT_DELTA = 1e-4


class DetectorKind(str, enum.Enum):
    """The five detectors: three break-point scans and two CUSUM competitors."""

    R = "R"
    S = "S"
    T = "T"
    P = "P"
    Q = "Q"

    @property
    def uses_weight(self) -> bool:
        return self in (DetectorKind.R, DetectorKind.S, DetectorKind.T)


@dataclass(frozen=True)
class MonitorConfig:
    """Parameters of one closed-end monitoring procedure.

    Parameters
    ----------
    m : int
        Size of the learning sample.
    n : int
        Monitoring horizon; monitoring stops after observation ``n``.
    alpha : float
        Probability of false alarm over the whole run, in (0, 1/2).
    p : int
        Number of steps of the threshold function, ``1 <= p <= n - m``.
    detector : DetectorKind
    gamma : float
        Exponent of the weight function, in [0, 1/2].
    delta : float
        Floor of the weight function, in (0, 1).
    dim : int
        Dimension of the observations.
    """

    m: int
    n: int
    alpha: float = DEFAULT_ALPHA
    p: int = 1
    detector: DetectorKind = DetectorKind.T
    gamma: float = 0.0
    delta: float = DEFAULT_DELTA
    dim: int = 1

    def __post_init__(self) -> None:
        object.__setattr__(self, "detector", DetectorKind(self.detector))
        if not (isinstance(self.m, (int, np.integer)) and self.m >= 1):
            raise ValueError(f"m must be a positive integer, got {self.m!r}")
        if not (isinstance(self.n, (int, np.integer)) and self.n > self.m):
            raise ValueError(f"n must be an integer > m, got n={self.n!r}, m={self.m}")
        if not 1 <= self.p <= self.n - self.m:
            raise ValueError(f"p must lie in [1, n - m] = [1, {self.n - self.m}], got {self.p}")
        if not 0.0 < self.alpha < 0.5:
            raise ValueError(f"alpha must lie in (0, 1/2), got {self.alpha}")
        if not 0.0 <= self.gamma <= 0.5:
            raise ValueError(f"gamma must lie in [0, 1/2], got {self.gamma}")
        if not 0.0 < self.delta < 1.0:
            raise ValueError(f"delta must lie in (0, 1), got {self.delta}")
        if self.dim < 1:
            raise ValueError(f"dim must be >= 1, got {self.dim}")

    @property
    def order(self) -> float:
        """Order of the per-interval (conditional) quantiles, ``(1 - alpha)^(1/p)``."""
        return (1.0 - self.alpha) ** (1.0 / self.p)

    @property
    def horizon_ratio(self) -> float:
        """``T + 1 = n / m``."""
        return self.n / self.m

    def with_(self, **changes: Any) -> "MonitorConfig":
        return replace(self, **changes)

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["detector"] = self.detector.value
        return d

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "MonitorConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config field(s): {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def from_json(cls, path: str | Path, **overrides: Any) -> "MonitorConfig":
        with open(path) as fh:
            d = json.load(fh)
        d.update({k: v for k, v in overrides.items() if v is not None})
        return cls.from_dict(d)


@dataclass(frozen=True)
class ThresholdFunction:
    """Piecewise-constant threshold over the monitoring period.

    Level ``levels[i]`` applies to observation indices
    ``boundaries[i] + 1, ..., boundaries[i + 1]``.
    """

    boundaries: tuple[int, ...]
    levels: tuple[float, ...]
    order: float
    meta: dict[str, Any] = field(default_factory=dict, compare=False)

    def __post_init__(self) -> None:
        b = tuple(int(x) for x in self.boundaries)
        lv = tuple(float(x) for x in self.levels)
        object.__setattr__(self, "boundaries", b)
        object.__setattr__(self, "levels", lv)
        if len(b) != len(lv) + 1 or len(lv) < 1:
            raise ValueError("need p + 1 boundaries for p levels")
        if any(b1 <= b0 for b0, b1 in zip(b, b[1:])):
            raise ValueError(f"boundaries must be strictly increasing: {b}")
        if not all(np.isfinite(x) and x > 0 for x in lv):
            raise ValueError(f"threshold levels must be finite and > 0: {lv}")

    @property
    def m(self) -> int:
        return self.boundaries[0]

    @property
    def n(self) -> int:
        return self.boundaries[-1]

    @property
    def p(self) -> int:
        return len(self.levels)

    def interval_of(self, k: int) -> int:
        """0-based interval containing observation index ``k`` (right-closed)."""
        if not self.m < k <= self.n:
            raise ValueError(f"index {k} outside monitoring period ({self.m}, {self.n}]")
        return int(np.searchsorted(self.boundaries, k, side="left")) - 1

    def level_at(self, k: int) -> float:
        return self.levels[self.interval_of(k)]

    def trace(self) -> np.ndarray:
        """Threshold value at every k = m+1, ..., n."""
        counts = np.diff(self.boundaries)
        return np.repeat(np.asarray(self.levels), counts)

    def to_dict(self) -> dict[str, Any]:
        out = {"boundaries": list(self.boundaries), "levels": list(self.levels), "order": self.order}
        out.update(self.meta)
        return out

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "ThresholdFunction":
        meta = {k: v for k, v in d.items() if k not in ("boundaries", "levels", "order")}
        return cls(tuple(d["boundaries"]), tuple(d["levels"]), float(d["order"]), meta)


def quantile(sample: Sequence[float] | np.ndarray, y: float) -> float:
    """Generalised inverse of the empirical d.f.: ``inf{x : G(x) >= y}``.

    The empirical d.f. is evaluated as ``count / N``; the returned value is
    always an element of ``sample``. ``y = 0`` gives the minimum.
    """
    x = np.sort(np.asarray(sample, dtype=float).ravel())
    n = x.size
    if n == 0:
        raise ValueError("empty sample")
    if not 0.0 <= y <= 1.0:
        raise ValueError(f"quantile order must lie in [0, 1], got {y}")
    if y <= 0.0:
        return float(x[0])
    # smallest count c with c / n >= y, evaluated exactly as the d.f. is
    c = min(max(1, math.ceil(y * n)), n)
    while c > 1 and (c - 1) / n >= y:
        c -= 1
    while c < n and c / n < y:
        c += 1
    return float(x[c - 1])


def round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def interval_boundaries(m: int, n: int, p: int) -> list[int]:
    """Split monitoring indices ``m+1..n`` into ``p`` near-equal intervals.

    Returns ``[b_0, ..., b_p]`` with ``b_0 = m``, ``b_p = n`` and
    ``b_i = m + round(i (n - m) / p)`` (half-up).
    """
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    if p > n - m:
        raise ValueError(f"too many steps: p={p} > n - m = {n - m}")
    span = n - m
    # exact rational rounding: floor((2 i span + p) / (2 p))
    return [m + (2 * i * span + p) // (2 * p) for i in range(p + 1)]
