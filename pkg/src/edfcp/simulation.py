"""Scenario generators and Monte Carlo experiment runners."""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, field
from typing import Any, Literal, Union

import numpy as np
from scipy import signal, stats

from .bootstrap import MultiplierConfig, replicate_rng
from .core import MonitorConfig, ThresholdFunction
from .detectors import DominanceState, detector_path, estimate_changepoint
from .monitor import first_exceedance
from .thresholds import DEFAULT_M, bootstrap_threshold, mc_threshold

STREAM_DATA = 3
STREAM_TRIAL_SEEDS = 4
AR_BURN_IN = 100
GARCH_BURN_IN = 500


@dataclass(frozen=True)
class IidUniform:
    dim = 1

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return rng.random((size, 1))


@dataclass(frozen=True)
class IidNormal:
    mean: float = 0.0
    sd: float = 1.0
    dim = 1

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return self.mean + self.sd * rng.standard_normal((size, 1))


@dataclass(frozen=True)
class IidGamma:
    shape: float = 0.5
    rate: float = 0.5
    dim = 1

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return rng.gamma(self.shape, 1.0 / self.rate, (size, 1))


@dataclass(frozen=True)
class AR1:
    """``X_i = beta X_{i-1} + eps_i`` with standard normal innovations."""

    beta: float = 0.0
    dim = 1

    def __post_init__(self) -> None:
        if abs(self.beta) >= 1:
            raise ValueError(f"AR(1) needs |beta| < 1, got {self.beta}")

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        eps = rng.standard_normal(size + AR_BURN_IN)
        x = signal.lfilter([1.0], [1.0, -self.beta], eps)
        return x[AR_BURN_IN:, None]


@dataclass(frozen=True)
class GARCH11:
    """``X_i = sigma_i eps_i``, ``sigma_i^2 = omega + alpha X_{i-1}^2 + beta sigma_{i-1}^2``."""

    omega: float = 0.012
    alpha: float = 0.072
    beta: float = 0.919
    dim = 1

    def __post_init__(self) -> None:
        if self.omega <= 0 or self.alpha < 0 or self.beta < 0:
            raise ValueError("GARCH(1,1) needs omega > 0 and alpha, beta >= 0")
        if self.alpha + self.beta >= 1:
            warnings.warn("GARCH(1,1) with alpha + beta >= 1 has no finite stationary variance", RuntimeWarning)

    @property
    def stationary_variance(self) -> float:
        return self.omega / (1.0 - self.alpha - self.beta)

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        eps = rng.standard_normal(size + GARCH_BURN_IN)
        s2 = self.stationary_variance if self.alpha + self.beta < 1 else self.omega
        x = np.empty_like(eps)
        prev = 0.0
        for i, e in enumerate(eps):
            s2 = self.omega + self.alpha * prev * prev + self.beta * s2
            prev = math.sqrt(s2) * e
            x[i] = prev
        return x[GARCH_BURN_IN:, None]


@dataclass(frozen=True)
class NormalCopula:
    """Equicorrelated Gaussian copula parameterised by Kendall's tau, uniform margins."""

    tau: float = 0.0
    d: int = 2

    def __post_init__(self) -> None:
        if abs(self.tau) >= 1:
            raise ValueError(f"Kendall's tau must lie in (-1, 1), got {self.tau}")
        if self.d < 2:
            raise ValueError("normal copula needs d >= 2")
        rho = self.rho
        if rho < -1.0 / (self.d - 1):
            raise ValueError(f"equicorrelation {rho:.3f} not positive definite for d={self.d}")

    @property
    def dim(self) -> int:
        return self.d

    @property
    def rho(self) -> float:
        return math.sin(math.pi * self.tau / 2.0)

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        corr = np.full((self.d, self.d), self.rho)
        np.fill_diagonal(corr, 1.0)
        z = rng.standard_normal((size, self.d)) @ np.linalg.cholesky(corr).T
        return stats.norm.cdf(z)


Model = Union[IidUniform, IidNormal, IidGamma, AR1, GARCH11, NormalCopula]

MODELS: dict[str, type] = {
    "iid_uniform": IidUniform,
    "iid_normal": IidNormal,
    "iid_gamma": IidGamma,
    "ar1": AR1,
    "garch11": GARCH11,
    "normal_copula": NormalCopula,
}


def model_from_dict(d: dict[str, Any]) -> Model:
    d = dict(d)
    name = d.pop("model")
    try:
        return MODELS[name](**d)
    except KeyError:
        raise ValueError(f"unknown model {name!r}; choose from {sorted(MODELS)}") from None


def model_to_dict(model: Model) -> dict[str, Any]:
    name = next(k for k, v in MODELS.items() if isinstance(model, v))
    return {"model": name, **asdict(model)}


@dataclass(frozen=True)
class Scenario:
    """Data-generating design: a stationary stretch, optionally followed by a
    second stationary stretch from ``post`` starting after index ``change_at``."""

    null: Model
    m: int
    n: int
    change_at: int | None = None
    post: Model | None = None

    def __post_init__(self) -> None:
        if not 1 <= self.m < self.n:
            raise ValueError("need 1 <= m < n")
        if (self.change_at is None) != (self.post is None):
            raise ValueError("change_at and post must be given together")
        if self.change_at is not None:
            if not self.m < self.change_at < self.n:
                raise ValueError(f"change point must satisfy m < k* < n, got {self.change_at}")
            if self.post.dim != self.null.dim:
                raise ValueError("pre- and post-change models differ in dimension")

    @property
    def dim(self) -> int:
        return self.null.dim

    @property
    def has_change(self) -> bool:
        return self.change_at is not None


def generate(scn: Scenario, seed: int, index: int = 0) -> np.ndarray:
    """One ``(n, d)`` sample path; ``index`` selects an independent stream."""
    rng = replicate_rng(seed, index, STREAM_DATA)
    if not scn.has_change:
        return scn.null.sample(rng, scn.n)
    pre = scn.null.sample(rng, scn.change_at)
    post = scn.post.sample(rng, scn.n - scn.change_at)
    return np.vstack([pre, post])


@dataclass
class ExperimentResult:
    n_trials: int
    n_alarms: int
    n_false_alarms: int
    n_missed: int
    rejection_pct: float
    mean_delay: float
    alarm_histogram: list[int]
    alarm_indices: list[int | None] = field(default_factory=list, repr=False)
    changepoints: list[int | None] = field(default_factory=list, repr=False)

    @property
    def n_usable(self) -> int:
        return self.n_alarms - self.n_false_alarms

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


def _trial_seed(seed: int, trial: int) -> int:
    return int(np.random.SeedSequence(seed, spawn_key=(STREAM_TRIAL_SEEDS, trial)).generate_state(1)[0])


def _run(
    scn: Scenario,
    cfg: MonitorConfig,
    threshold_mode: Literal["mc", "bootstrap"],
    trials: int,
    seed: int,
    M: int,
    mult: MultiplierConfig | None,
    locate: bool,
) -> ExperimentResult:
    if trials < 1:
        raise ValueError("no trials")
    if (scn.m, scn.n, scn.dim) != (cfg.m, cfg.n, cfg.dim):
        raise ValueError("scenario and config disagree on (m, n, dim)")
    if threshold_mode not in ("mc", "bootstrap"):
        raise ValueError(f"unknown threshold mode {threshold_mode!r}")
    mult = mult or MultiplierConfig()
    shared: ThresholdFunction | None = mc_threshold(cfg, M, seed) if threshold_mode == "mc" else None
    alarms: list[int | None] = []
    cps: list[int | None] = []
    hist = [0] * cfg.p
    for t in range(trials):
        X = generate(scn, seed, t)
        if shared is None:
            trial_mult = MultiplierConfig(
                B=mult.B, ell=mult.ell, ell_rule=mult.ell_rule, kernel=mult.kernel, seed=_trial_seed(seed, t)
            )
            th = bootstrap_threshold(X[: cfg.m], cfg, trial_mult)
        else:
            th = shared
        k = first_exceedance(detector_path(X, cfg), th)
        alarms.append(k)
        cp = None
        if k is not None:
            hist[th.interval_of(k)] += 1
            if locate:
                cp = estimate_changepoint(DominanceState.from_array(X[:k]), cfg, k)
        cps.append(cp)
    n_alarms = sum(a is not None for a in alarms)
    if scn.has_change:
        kstar = scn.change_at
        delays = [a - kstar for a in alarms if a is not None and a >= kstar]
        n_false = sum(a is not None and a < kstar for a in alarms)
    else:
        delays, n_false = [], n_alarms
    mean_delay = math.fsum(delays) / len(delays) if delays else float("nan")
    return ExperimentResult(
        n_trials=trials,
        n_alarms=n_alarms,
        n_false_alarms=n_false,
        n_missed=trials - n_alarms,
        rejection_pct=100.0 * n_alarms / trials,
        mean_delay=mean_delay,
        alarm_histogram=hist,
        alarm_indices=alarms,
        changepoints=cps,
    )


def run_level_experiment(
    scn: Scenario,
    cfg: MonitorConfig,
    threshold_mode: Literal["mc", "bootstrap"],
    trials: int,
    seed: int = 0,
    M: int = DEFAULT_M,
    mult: MultiplierConfig | None = None,
) -> ExperimentResult:
    """Empirical level (percentage of runs with a false alarm) under a stationary scenario."""
    if scn.has_change:
        raise ValueError("level experiments need a scenario without change")
    return _run(scn, cfg, threshold_mode, trials, seed, M, mult, locate=False)


def run_power_experiment(
    scn: Scenario,
    cfg: MonitorConfig,
    threshold_mode: Literal["mc", "bootstrap"],
    trials: int,
    seed: int = 0,
    M: int = DEFAULT_M,
    mult: MultiplierConfig | None = None,
) -> ExperimentResult:
    """Rejection percentage and mean detection delay under a change scenario.

    The delay is averaged over runs that alarmed at or after the change.
    """
    if not scn.has_change:
        raise ValueError("power experiments need a scenario with a change point")
    return _run(scn, cfg, threshold_mode, trials, seed, M, mult, locate=True)
