"""Online monitoring: ingest observations one by one and raise an alarm on the
first strict exceedance of the threshold function."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Any, Iterable, Union

import numpy as np

from .core import MonitorConfig, ThresholdFunction
from .detectors import DominanceState, _as_matrix, compute_detector, estimate_changepoint, warn_if_ties


class Status(str, enum.Enum):
    READY = "ready"
    RUNNING = "running"
    ALARMED = "alarmed"
    ENDED = "ended_no_alarm"


class MonitoringFinished(RuntimeError):
    pass


@dataclass(frozen=True)
class Continue:
    k: int
    value: float
    threshold: float


@dataclass(frozen=True)
class Alarm:
    k: int
    value: float
    threshold: float
    changepoint: int


@dataclass(frozen=True)
class Ended:
    k: int
    value: float
    threshold: float


Decision = Union[Continue, Alarm, Ended]


@dataclass
class MonitorReport:
    status: Status
    detector_path: list[float]
    threshold_trace: list[float]
    alarm_index: int | None = None
    changepoint: int | None = None
    config: dict[str, Any] = field(default_factory=dict)
    threshold: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {"status": self.status.value}
        if self.alarm_index is not None:
            out["alarm_index"] = self.alarm_index
            out["changepoint"] = self.changepoint
        out["detector_path"] = self.detector_path
        out["threshold_trace"] = self.threshold_trace
        out["config"] = self.config
        out["threshold"] = self.threshold
        return out


class MonitorState:
    """Single-owner monitoring state machine.

    ``path[0]`` is the conventional value 0 at ``k = m``; ``path[k - m]`` is
    the detector at step ``k``.
    """

    def __init__(self, learning: np.ndarray, threshold: ThresholdFunction, cfg: MonitorConfig):
        self.status = Status.READY
        X = _as_matrix(learning)
        if X.shape[0] != cfg.m:
            raise ValueError(f"learning sample has {X.shape[0]} rows, config expects m={cfg.m}")
        if X.shape[1] != cfg.dim:
            raise ValueError(f"learning sample has dimension {X.shape[1]}, config expects {cfg.dim}")
        if threshold.m != cfg.m or threshold.n != cfg.n:
            raise ValueError(
                f"threshold spans ({threshold.m}, {threshold.n}], config monitors ({cfg.m}, {cfg.n}]"
            )
        warn_if_ties(X)
        self.cfg = cfg
        self.threshold = threshold
        self.dominance = DominanceState.from_array(X, capacity=cfg.n)
        self.k = cfg.m
        self.path: list[float] = [0.0]
        self.trace: list[float] = []
        self.alarm_index: int | None = None
        self.changepoint: int | None = None
        self.status = Status.RUNNING

    @property
    def terminal(self) -> bool:
        return self.status in (Status.ALARMED, Status.ENDED)

    def step(self, x: Iterable[float]) -> Decision:
        if self.terminal:
            raise MonitoringFinished("monitoring finished")
        self.dominance = self.dominance.extend(x)
        k = self.k = self.k + 1
        value = compute_detector(self.dominance, self.cfg, k)
        tau = self.threshold.level_at(k)
        self.path.append(value)
        self.trace.append(tau)
        if value > tau:
            cp = estimate_changepoint(self.dominance, self.cfg, k)
            self.status = Status.ALARMED
            self.alarm_index, self.changepoint = k, cp
            return Alarm(k, value, tau, cp)
        if k == self.cfg.n:
            self.status = Status.ENDED
            return Ended(k, value, tau)
        return Continue(k, value, tau)

    def run(self, stream: np.ndarray | Iterable[Iterable[float]]) -> MonitorReport:
        rows = np.asarray(stream, dtype=float)
        if rows.size:
            rows = rows.reshape(len(rows), -1)
            if len(rows) > self.cfg.n - self.k:
                raise ValueError(f"stream of {len(rows)} rows exceeds the remaining horizon {self.cfg.n - self.k}")
        for x in rows:
            if isinstance(self.step(x), (Alarm, Ended)):
                break
        return self.report()

    def report(self) -> MonitorReport:
        return MonitorReport(
            status=self.status,
            detector_path=list(self.path),
            threshold_trace=list(self.trace),
            alarm_index=self.alarm_index,
            changepoint=self.changepoint,
            config=self.cfg.to_dict(),
            threshold=self.threshold.to_dict(),
        )


def init(learning: np.ndarray, threshold: ThresholdFunction, cfg: MonitorConfig) -> MonitorState:
    return MonitorState(learning, threshold, cfg)


def step(state: MonitorState, x: Iterable[float]) -> Decision:
    return state.step(x)


def run(state: MonitorState, stream: np.ndarray) -> MonitorReport:
    return state.run(stream)


def first_exceedance(path: np.ndarray, threshold: ThresholdFunction) -> int | None:
    """Offline alarm index: smallest ``k`` with ``path[k - m] > tau(k)``."""
    vals = np.asarray(path)[1:]
    trace = threshold.trace()[: vals.size]
    hit = np.flatnonzero(vals > trace)
    return int(threshold.m + 1 + hit[0]) if hit.size else None
