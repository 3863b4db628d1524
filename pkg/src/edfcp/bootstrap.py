"""Dependent multiplier bootstrap replicates of the detector functions.

Replicates are built from the learning sample only, on a rescaled clock in
which ``m' = floor(m^2 / n)`` and ``m`` play the roles of ``m`` and ``n``.
Multiplier sequences are moving averages of i.i.d. standard normals with
Parzen-kernel weights, which makes them ell-dependent with mean 0 and
variance 1 by construction.
"""

from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass
from typing import Any

import numba
import numpy as np

from .core import DetectorKind, MonitorConfig, round_half_up
from .detectors import _as_matrix, prefix_counts, warn_if_ties

# spawn-key tags keeping random streams for different purposes disjoint
STREAM_MULTIPLIERS = 1


class BandwidthRule(str, enum.Enum):
    FIXED = "fixed"
    POWER = "power"


@dataclass(frozen=True)
class MultiplierConfig:
    """Settings of the dependent multiplier bootstrap.

    ``ell`` is only used with ``ell_rule="fixed"``; the default power rule
    picks ``max(1, round(m^(1/3)))``.
    """

    B: int = 2000
    ell: int | None = None
    ell_rule: BandwidthRule = BandwidthRule.POWER
    kernel: str = "parzen"
    seed: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "ell_rule", BandwidthRule(self.ell_rule))
        if self.B < 1:
            raise ValueError(f"B must be >= 1, got {self.B}")
        if self.kernel != "parzen":
            raise ValueError(f"unsupported multiplier kernel {self.kernel!r}")
        if self.ell_rule is BandwidthRule.FIXED and (self.ell is None or self.ell < 1):
            raise ValueError("fixed bandwidth rule needs ell >= 1")

    @classmethod
    def fixed(cls, ell: int, **kw: Any) -> "MultiplierConfig":
        return cls(ell=ell, ell_rule=BandwidthRule.FIXED, **kw)

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["ell_rule"] = self.ell_rule.value
        return d


def parzen_kernel(x: float) -> float:
    """Parzen kernel, supported on [-1, 1] with value 1 at 0."""
    a = abs(x)
    if a <= 0.5:
        return 1.0 - 6.0 * a * a + 6.0 * a**3
    if a <= 1.0:
        return 2.0 * (1.0 - a) ** 3
    return 0.0


def multiplier_weights(ell: int) -> np.ndarray:
    """Moving-average weights ``w_{-h..h}``, ``h = floor(ell / 2)``, with unit sum of squares."""
    if ell < 1:
        raise ValueError("ell must be >= 1")
    h = ell // 2
    w = np.array([parzen_kernel(j / (h + 0.5)) for j in range(-h, h + 1)])
    return w / math.sqrt(float(np.sum(w * w)))


def induced_correlation(ell: int) -> np.ndarray:
    """Autocorrelation ``phi(h) = sum_j w_j w_{j+h}`` for lags ``0..2 floor(ell/2)``."""
    w = multiplier_weights(ell)
    return np.array([float(np.dot(w[: w.size - h], w[h:])) for h in range(w.size)])


def estimate_bandwidth(learning: np.ndarray, mult: MultiplierConfig | None = None) -> int:
    """Bandwidth ``ell_m`` for a learning sample."""
    mult = mult or MultiplierConfig()
    if mult.ell_rule is BandwidthRule.FIXED:
        return int(mult.ell)
    m = _as_matrix(learning).shape[0]
    if m < 4:
        raise ValueError(f"need m >= 4 to estimate a bandwidth, got m={m}")
    return max(1, round_half_up(m ** (1.0 / 3.0)))


def replicate_rng(seed: int, index: int, stream: int = STREAM_MULTIPLIERS) -> np.random.Generator:
    """Counter-based generator keyed on ``(seed, stream, index)``."""
    ss = np.random.SeedSequence(seed, spawn_key=(stream, index))
    return np.random.Generator(np.random.Philox(ss))


def gen_multipliers(m: int, mult: MultiplierConfig, replicate_index: int, ell: int | None = None) -> np.ndarray:
    """Dependent multiplier sequence ``xi_1, ..., xi_m`` for one replicate."""
    if ell is None:
        ell = mult.ell if mult.ell_rule is BandwidthRule.FIXED else max(1, round_half_up(m ** (1.0 / 3.0)))
    if ell >= m:
        raise ValueError(f"bandwidth too large: ell={ell} >= m={m}")
    w = multiplier_weights(ell)
    z = replicate_rng(mult.seed, replicate_index).standard_normal(m + w.size - 1)
    return np.correlate(z, w, mode="valid")


def rescaled_clock(m: int, n: int) -> tuple[int, int]:
    """``(m', k_top)`` with ``m' = floor(m^2 / n)`` and ``k_top = floor(m' n / m)``."""
    mp = (m * m) // n
    return mp, (mp * n) // m


@numba.njit(cache=True)
def _replicate_stats(Y, xi, mp, top, gamma, delta, out):
    # Y[r, i] = 1(X_r <= X_i) - F_{1:m}(X_i); xi has shape (B, >= top)
    # out[b, kk - mp, :] = (R, S, T) replicate values at kk = mp..top
    m = Y.shape[1]
    nb = xi.shape[0]
    scale = 1.0 / np.sqrt(mp)
    Bh = np.empty((top + 1, m))
    maxabs = np.empty(top)
    sumsq = np.empty(top)
    for b in range(nb):
        for i in range(m):
            Bh[0, i] = 0.0
        for r in range(top):
            x = xi[b, r]
            for i in range(m):
                Bh[r + 1, i] = Bh[r, i] + x * Y[r, i]
        for r in range(top + 1):
            for i in range(m):
                Bh[r, i] *= scale
        for c in range(3):
            out[b, 0, c] = 0.0
        for kk in range(mp + 1, top + 1):
            lt = kk / mp
            for j in range(mp, kk):
                ls = j / mp
                mx = 0.0
                acc = 0.0
                for i in range(kk):
                    g = lt * Bh[j, i] - ls * Bh[kk, i]
                    ag = abs(g)
                    if ag > mx:
                        mx = ag
                    acc += g * g
                maxabs[j] = mx
                sumsq[j] = acc
            rr = 0.0
            ss = 0.0
            tt = 0.0
            for j in range(mp, kk):
                ls = j / mp
                qv = ls**gamma * (lt - ls) ** gamma
                if qv < delta:
                    qv = delta
                a = maxabs[j] / qv
                if a > rr:
                    rr = a
                inner = sumsq[j] / (qv * qv) / kk
                if inner > ss:
                    ss = inner
                tt += inner
            out[b, kk - mp, 0] = rr
            out[b, kk - mp, 1] = ss
            out[b, kk - mp, 2] = tt / mp


@dataclass
class ReplicatePaths:
    """``values[b, kk - m_prime]`` is replicate ``b`` at rescaled step ``kk``."""

    values: np.ndarray
    m_prime: int
    top: int
    ell: int

    @property
    def B(self) -> int:
        return self.values.shape[0]


def centered_indicators(learning: np.ndarray) -> np.ndarray:
    """``Y[r, i] = 1(X_r <= X_i) - F_{1:m}(X_i)``, a function of ranks only."""
    P = prefix_counts(learning)
    ind = np.diff(P, axis=1, prepend=0).T.astype(float)  # ind[r, i] = 1(X_r <= X_i)
    return ind - P[:, -1] / P.shape[0]


def replicate_paths(
    learning: np.ndarray,
    cfg: MonitorConfig,
    mult: MultiplierConfig,
    multipliers: np.ndarray | None = None,
    chunk: int = 256,
) -> ReplicatePaths:
    """Multiplier replicates of the detector function selected by ``cfg``.

    ``multipliers`` (shape ``(B, m)``) overrides the generated sequences;
    it exists for testing.
    """
    X = _as_matrix(learning)
    m = X.shape[0]
    if m != cfg.m:
        raise ValueError(f"learning sample has {m} rows, config expects m={cfg.m}")
    kind = DetectorKind(cfg.detector)
    if not kind.uses_weight:
        raise ValueError(f"no multiplier replicate defined for detector {kind.value}")
    mp, top = rescaled_clock(m, cfg.n)
    if mp < 2:
        raise ValueError(f"learning sample too small for horizon: m'={mp} < 2")
    warn_if_ties(X)
    ell = estimate_bandwidth(X, mult)
    if multipliers is None:
        if ell >= m:
            raise ValueError(f"bandwidth too large: ell={ell} >= m={m}")
        B = mult.B
    else:
        multipliers = np.ascontiguousarray(multipliers, dtype=float)
        if multipliers.ndim != 2 or multipliers.shape[1] < top:
            raise ValueError(f"multipliers must have shape (B, >= {top})")
        B = multipliers.shape[0]
    Y = np.ascontiguousarray(centered_indicators(X))
    code = {DetectorKind.R: 0, DetectorKind.S: 1, DetectorKind.T: 2}[kind]
    values = np.empty((B, top - mp + 1))
    buf = np.empty((min(chunk, B), top - mp + 1, 3))
    for lo in range(0, B, chunk):
        hi = min(lo + chunk, B)
        if multipliers is None:
            xi = np.stack([gen_multipliers(m, mult, b, ell=ell) for b in range(lo, hi)])
        else:
            xi = multipliers[lo:hi]
        part = buf[: hi - lo]
        _replicate_stats(Y, xi, mp, top, float(cfg.gamma), float(cfg.delta), part)
        values[lo:hi] = part[:, :, code]
    return ReplicatePaths(values=values, m_prime=mp, top=top, ell=ell)
