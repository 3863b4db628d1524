"""Threshold functions with an approximately constant false-alarm rate.

The monitoring period is cut into ``p`` intervals. The first level is the
quantile of order ``(1 - alpha)^(1/p)`` of the path supremum over the first
interval; each later level is the same-order quantile of the supremum over
its interval among the paths that stayed below all earlier levels.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from .bootstrap import MultiplierConfig, replicate_paths, replicate_rng
from .core import MonitorConfig, ThresholdFunction, interval_boundaries, quantile
from .detectors import null_paths_1d

DEFAULT_M = 100_000
DEFAULT_B = 2000
STREAM_MC = 2

Sampler = Callable[[np.random.Generator, int], np.ndarray]


class DegenerateConditioningError(ValueError):
    pass


def xi_from_alpha(alpha: float, steps: int) -> float:
    """Per-step false-alarm probability ``1 - (1 - alpha)^(1/steps)``."""
    if steps < 1:
        raise ValueError(f"steps must be >= 1, got {steps}")
    return 1.0 - (1.0 - alpha) ** (1.0 / steps)


def conditional_quantiles(sups: np.ndarray, order: float) -> list[float]:
    """Sequential conditional quantiles of the columns of ``sups``.

    Parameters
    ----------
    sups : ndarray, shape (rows, p)
        Per-interval suprema of simulated or resampled detector paths.
    order : float
        Quantile order, usually ``(1 - alpha)^(1/p)``.

    Returns
    -------
    list of float
        ``p`` levels; level ``i`` is computed from the rows whose earlier
        suprema all lie at or below the earlier levels.
    """
    sups = np.asarray(sups, dtype=float)
    if sups.ndim == 1:
        sups = sups[:, None]
    if sups.size == 0:
        raise ValueError("empty sample")
    keep = np.ones(sups.shape[0], dtype=bool)
    levels = []
    for i in range(sups.shape[1]):
        col = sups[keep, i]
        if col.size == 0:
            raise DegenerateConditioningError(
                f"degenerate conditioning: increase replicates (no path survives interval {i})"
            )
        g = quantile(col, order)
        levels.append(g)
        keep &= sups[:, i] <= g
    return levels


def interval_sups(paths: np.ndarray, boundaries: list[int]) -> np.ndarray:
    """Reduce paths indexed from ``boundaries[0]`` to per-interval maxima."""
    paths = np.asarray(paths, dtype=float)
    b0 = boundaries[0]
    cols = [paths[:, lo - b0 + 1 : hi - b0 + 1].max(axis=1) for lo, hi in zip(boundaries, boundaries[1:])]
    return np.column_stack(cols)


def _uniform(rng: np.random.Generator, n: int) -> np.ndarray:
    return rng.random(n)


def simulate_null_paths(
    cfg: MonitorConfig,
    M: int,
    seed: int = 0,
    sampler: Sampler | None = None,
    chunk: int = 1000,
) -> np.ndarray:
    """``(M, n - m + 1)`` detector paths from i.i.d. univariate samples."""
    sampler = sampler or _uniform
    m, n = cfg.m, cfg.n
    out = np.empty((M, n - m + 1))
    for lo in range(0, M, chunk):
        hi = min(lo + chunk, M)
        U = np.stack([sampler(replicate_rng(seed, s, STREAM_MC), n) for s in range(lo, hi)])
        out[lo:hi] = null_paths_1d(U, m, cfg.detector, cfg.gamma, cfg.delta)
    return out


def mc_threshold(
    cfg: MonitorConfig,
    M: int = DEFAULT_M,
    seed: int = 0,
    sampler: Sampler | None = None,
) -> ThresholdFunction:
    """Monte Carlo threshold for univariate serially independent monitoring.

    The detectors are distribution-free in that setting, so the paths are
    simulated from standard uniforms and the learning sample is not used.
    """
    if cfg.dim != 1:
        raise ValueError("Monte Carlo thresholds require univariate i.i.d. mode")
    if M < 1:
        raise ValueError("M must be >= 1")
    paths = simulate_null_paths(cfg, M, seed, sampler)
    bounds = interval_boundaries(cfg.m, cfg.n, cfg.p)
    levels = conditional_quantiles(interval_sups(paths, bounds), cfg.order)
    meta = {
        "mode": "mc",
        "seed": seed,
        "replicates": M,
        "detector": cfg.detector.value,
        "gamma": cfg.gamma,
        "delta": cfg.delta,
        "alpha": cfg.alpha,
    }
    return ThresholdFunction(tuple(bounds), tuple(levels), cfg.order, meta)


def bootstrap_threshold(
    learning: np.ndarray,
    cfg: MonitorConfig,
    mult: MultiplierConfig | None = None,
) -> ThresholdFunction:
    """Threshold estimated from dependent multiplier replicates of the learning sample."""
    mult = mult or MultiplierConfig()
    learning = np.asarray(learning, dtype=float)
    m = learning.shape[0]
    mp = (m * m) // cfg.n
    if cfg.p > m - mp:
        raise ValueError(f"p exceeds m - m': p={cfg.p} > {m - mp}")
    reps = replicate_paths(learning, cfg, mult)
    rep_bounds = interval_boundaries(reps.m_prime, reps.top, cfg.p)
    levels = conditional_quantiles(interval_sups(reps.values, rep_bounds), cfg.order)
    meta = {
        "mode": "bootstrap",
        "seed": mult.seed,
        "replicates": reps.B,
        "detector": cfg.detector.value,
        "gamma": cfg.gamma,
        "delta": cfg.delta,
        "alpha": cfg.alpha,
        "ell": reps.ell,
        "multiplier": mult.to_dict(),
    }
    return ThresholdFunction(tuple(interval_boundaries(cfg.m, cfg.n, cfg.p)), tuple(levels), cfg.order, meta)
