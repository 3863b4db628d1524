"""Empirical-d.f. detectors computed from componentwise dominance counts.

All five detectors only depend on the indicators ``1(X_r <= X_i)`` between
observed points, so they are computed from an integer prefix-count matrix

    P[i, r] = #{r' <= r : X_{r'} <= X_i}      (0-based, inclusive)

which makes them margin-free by construction: strictly increasing
transformations of the coordinates leave ``P`` and hence every detector value
unchanged bit-for-bit. The same compiled kernels are used by the streaming
monitor, the batch path computation and the Monte Carlo simulations, so the
three agree exactly.
"""

from __future__ import annotations

import warnings
from typing import Iterable

import numba
import numpy as np

from .core import DetectorKind, MonitorConfig

KIND_CODES = {DetectorKind.R: 0, DetectorKind.S: 1, DetectorKind.T: 2, DetectorKind.P: 3, DetectorKind.Q: 4}


def weight_q(s: float, t: float, gamma: float, delta: float) -> float:
    """Weight ``q(s, t) = max{s^gamma (t - s)^gamma, delta}`` for ``0 <= s <= t``."""
    if s < 0 or s > t:
        raise ValueError(f"invalid arguments: need 0 <= s <= t, got s={s}, t={t}")
    return max(s**gamma * (t - s) ** gamma, delta)


@numba.njit(cache=True)
def _q(s, t, gamma, delta):
    v = s**gamma * (t - s) ** gamma
    return v if v > delta else delta


@numba.njit(cache=True)
def _scan_stats(P, m, k, maxabs, sumsq):
    # For every candidate break j in m..k-1 (slot j - m):
    #   maxabs = max_i |F_{1:j}(X_i) - F_{j+1:k}(X_i)|, sumsq = sum_i (...)^2, i < k
    for j in range(m, k):
        inv_a = 1.0 / j
        inv_b = 1.0 / (k - j)
        mx = 0.0
        acc = 0.0
        for i in range(k):
            c = P[i, j - 1]
            d = c * inv_a - (P[i, k - 1] - c) * inv_b
            ad = abs(d)
            if ad > mx:
                mx = ad
            acc += d * d
        maxabs[j - m] = mx
        sumsq[j - m] = acc


@numba.njit(cache=True)
def _combine(maxabs, sumsq, m, k, gamma, delta, out):
    # out <- (R, S, T, P, Q) at step k from the per-break statistics
    m32 = m**1.5
    tk = k / m
    r = 0.0
    s = 0.0
    tsum = 0.0
    for j in range(m, k):
        w = j * (k - j) / (m32 * _q(j / m, tk, gamma, delta))
        a = w * maxabs[j - m]
        if a > r:
            r = a
        inner = w * w * sumsq[j - m] / k
        if inner > s:
            s = inner
        tsum += inner
    w0 = m * (k - m) / m32
    out[0] = r
    out[1] = s
    out[2] = tsum / m
    out[3] = w0 * maxabs[0]
    out[4] = w0 * w0 * sumsq[0] / k


@numba.njit(cache=True)
def _argmax_break(sumsq, m, k, gamma, delta):
    m32 = m**1.5
    tk = k / m
    best = -1.0
    arg = m
    for j in range(m, k):
        w = j * (k - j) / (m32 * _q(j / m, tk, gamma, delta))
        inner = w * w * sumsq[j - m] / k
        if inner > best:
            best = inner
            arg = j
    return arg


@numba.njit(cache=True)
def _detector_path(P, m, n, gamma, delta, out):
    # out[k - m, :] = (R, S, T, P, Q) at k = m..n; row 0 stays 0 by convention
    maxabs = np.empty(n - m)
    sumsq = np.empty(n - m)
    for k in range(m + 1, n + 1):
        _scan_stats(P, m, k, maxabs, sumsq)
        _combine(maxabs, sumsq, m, k, gamma, delta, out[k - m])


@numba.njit(cache=True)
def _prefix_counts_1d(x, P):
    n = x.shape[0]
    for i in range(n):
        xi = x[i]
        c = 0
        for r in range(n):
            if x[r] <= xi:
                c += 1
            P[i, r] = c


@numba.njit(cache=True)
def _null_paths_1d(U, m, gamma, delta, kind, out):
    # detector paths for a batch of univariate samples (rows of U)
    M, n = U.shape
    P = np.empty((n, n), dtype=np.int32)
    vals = np.zeros((n - m + 1, 5))
    for b in range(M):
        _prefix_counts_1d(U[b], P)
        _detector_path(P, m, n, gamma, delta, vals)
        for k in range(n - m + 1):
            out[b, k] = vals[k, kind]


def prefix_counts(X: np.ndarray) -> np.ndarray:
    """Batch construction of the inclusive prefix-count matrix."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    ind = np.all(X[None, :, :] <= X[:, None, :], axis=2)
    return np.cumsum(ind, axis=1, dtype=np.int32)


def has_within_column_ties(X: np.ndarray) -> bool:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    s = np.sort(X, axis=0)
    return bool(np.any(s[1:] == s[:-1]))


def warn_if_ties(X: np.ndarray, what: str = "learning sample") -> None:
    if has_within_column_ties(X):
        warnings.warn(
            f"within-column ties in the {what}; detectors are no longer guaranteed margin-free",
            RuntimeWarning,
            stacklevel=3,
        )


class DominanceState:
    """Pairwise dominance counts for the observations ingested so far.

    ``extend`` returns a new state and leaves the receiver valid. Consecutive
    extensions share one growing buffer (O(k d) per step); extending a state
    that is no longer the newest one copies the buffers first.
    """

    __slots__ = ("k", "dim", "_X", "_P", "_tip")

    def __init__(self, dim: int, capacity: int = 64):
        if dim < 1:
            raise ValueError("dim must be >= 1")
        self.k = 0
        self.dim = dim
        cap = max(int(capacity), 1)
        self._X = np.empty((cap, dim))
        self._P = np.zeros((cap, cap), dtype=np.int32)
        self._tip = [0]

    @classmethod
    def from_array(cls, X: np.ndarray, capacity: int | None = None) -> "DominanceState":
        X = _as_matrix(X)
        k, d = X.shape
        st = cls(d, capacity=max(capacity or 0, k, 1))
        st._X[:k] = X
        st._P[:k, :k] = prefix_counts(X)
        st.k = k
        st._tip[0] = k
        return st

    @property
    def X(self) -> np.ndarray:
        return self._X[: self.k]

    @property
    def P(self) -> np.ndarray:
        """Inclusive prefix counts ``P[i, r] = sum_{r' <= r} 1(X_r' <= X_i)``."""
        return self._P[: self.k, : self.k]

    def indicator(self) -> np.ndarray:
        """Dominance matrix ``I[i, r] = 1(X_r <= X_i)``."""
        P = self.P
        return np.diff(P, axis=1, prepend=0)

    def _detached(self, cap: int) -> "DominanceState":
        st = DominanceState.__new__(DominanceState)
        st.k = self.k
        st.dim = self.dim
        st._X = np.empty((cap, self.dim))
        st._X[: self.k] = self._X[: self.k]
        st._P = np.zeros((cap, cap), dtype=np.int32)
        st._P[: self.k, : self.k] = self._P[: self.k, : self.k]
        st._tip = [self.k]
        return st

    def extend(self, x: Iterable[float]) -> "DominanceState":
        x = np.asarray(x, dtype=float).ravel()
        if x.shape[0] != self.dim:
            raise ValueError(f"dimension mismatch: expected {self.dim}, got {x.shape[0]}")
        if not np.all(np.isfinite(x)):
            raise ValueError("observation must be finite")
        k = self.k
        base = self
        cap = self._X.shape[0]
        if self._tip[0] != k or k == cap:
            base = self._detached(cap if k < cap else 2 * cap)
        X, P = base._X, base._P
        X[k] = x
        if k:
            below = np.all(X[:k] <= x, axis=1)  # 1(X_r <= x)
            above = np.all(x <= X[:k], axis=1)  # 1(x <= X_i)
            P[:k, k] = P[:k, k - 1] + above
            P[k, :k] = np.cumsum(below)
            P[k, k] = P[k, k - 1] + 1
        else:
            P[0, 0] = 1
        base._tip[0] = k + 1
        new = DominanceState.__new__(DominanceState)
        new.k = k + 1
        new.dim = self.dim
        new._X = X
        new._P = P
        new._tip = base._tip
        return new

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, DominanceState):
            return NotImplemented
        return (
            self.k == other.k
            and self.dim == other.dim
            and np.array_equal(self.X, other.X)
            and np.array_equal(self.P, other.P)
        )

    def __repr__(self) -> str:
        return f"DominanceState(k={self.k}, dim={self.dim})"


def _as_matrix(X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2 or X.shape[0] < 1:
        raise ValueError("expected a non-empty (k, d) observation matrix")
    if not np.all(np.isfinite(X)):
        raise ValueError("observations must be finite")
    return X


def extend(state: DominanceState, x: Iterable[float]) -> DominanceState:
    return state.extend(x)


def ecdf_eval(state: DominanceState, j: int, k: int, i: int) -> float:
    """``F_{j:k}(X_i)`` with 1-based indices; 0 when ``j > k``."""
    if not 1 <= i <= state.k:
        raise ValueError(f"evaluation index {i} outside 1..{state.k}")
    if j < 1 or k < 1:
        raise ValueError("j and k must be >= 1")
    if k > state.k:
        raise ValueError(f"index beyond ingested data: k={k} > {state.k}")
    if j > k:
        return 0.0
    P = state._P
    lo = int(P[i - 1, j - 2]) if j > 1 else 0
    return (int(P[i - 1, k - 1]) - lo) / (k - j + 1)


def _check_step(state: DominanceState, m: int, k: int) -> None:
    if k <= m:
        raise ValueError(f"monitoring not started: k={k} <= m={m}")
    if k > state.k:
        raise ValueError(f"index beyond ingested data: k={k} > {state.k}")


def detector_values(state: DominanceState, m: int, k: int, gamma: float, delta: float) -> np.ndarray:
    """All five detector values ``(R, S, T, P, Q)`` at step ``k``."""
    _check_step(state, m, k)
    maxabs = np.empty(k - m)
    sumsq = np.empty(k - m)
    _scan_stats(state._P, m, k, maxabs, sumsq)
    out = np.empty(5)
    _combine(maxabs, sumsq, m, k, float(gamma), float(delta), out)
    return out


def compute_detector(state: DominanceState, cfg: MonitorConfig, k: int) -> float:
    """Detector value ``D_m(k)`` for the kind selected in ``cfg``."""
    vals = detector_values(state, cfg.m, k, cfg.gamma, cfg.delta)
    return float(vals[KIND_CODES[cfg.detector]])


def estimate_changepoint(state: DominanceState, cfg: MonitorConfig, k: int) -> int:
    """Estimated first post-change index after an exceedance at step ``k``.

    Maximiser over ``j in m..k-1`` of the Cramer-von Mises scan term, plus one;
    ties go to the smallest ``j``.
    """
    m = cfg.m
    _check_step(state, m, k)
    maxabs = np.empty(k - m)
    sumsq = np.empty(k - m)
    _scan_stats(state._P, m, k, maxabs, sumsq)
    return int(_argmax_break(sumsq, m, k, float(cfg.gamma), float(cfg.delta))) + 1


def detector_path_all(X: np.ndarray, m: int, gamma: float = 0.0, delta: float = 1e-4) -> np.ndarray:
    """Batch computation: array of shape ``(k_max - m + 1, 5)`` of all detectors.

    Row ``k - m`` holds ``(R, S, T, P, Q)`` at step ``k``; row 0 is zero.
    """
    X = _as_matrix(X)
    n = X.shape[0]
    if n <= m:
        raise ValueError(f"need more than m={m} observations, got {n}")
    P = prefix_counts(X)
    out = np.zeros((n - m + 1, 5))
    _detector_path(P, m, n, float(gamma), float(delta), out)
    return out


def detector_path(X: np.ndarray, cfg: MonitorConfig) -> np.ndarray:
    """Values ``D_m(k)``, ``k = m..len(X)``, for the detector in ``cfg``."""
    return detector_path_all(X, cfg.m, cfg.gamma, cfg.delta)[:, KIND_CODES[cfg.detector]].copy()


def null_paths_1d(U: np.ndarray, m: int, kind: DetectorKind, gamma: float, delta: float) -> np.ndarray:
    """Detector paths for each row of a ``(M, n)`` array of univariate samples."""
    U = np.ascontiguousarray(U, dtype=float)
    M, n = U.shape
    out = np.zeros((M, n - m + 1))
    _null_paths_1d(U, m, float(gamma), float(delta), KIND_CODES[DetectorKind(kind)], out)
    return out
