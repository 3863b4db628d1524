"""Nonparametric closed-end sequential change-point detection based on
empirical distribution functions."""

from .bootstrap import MultiplierConfig, gen_multipliers, estimate_bandwidth, parzen_kernel, replicate_paths
from .core import DetectorKind, MonitorConfig, ThresholdFunction, interval_boundaries, quantile
from .detectors import (
    DominanceState,
    compute_detector,
    detector_path,
    ecdf_eval,
    estimate_changepoint,
    extend,
    weight_q,
)
from .monitor import Alarm, Continue, Ended, MonitorReport, MonitorState, Status
from .simulation import (
    AR1,
    GARCH11,
    ExperimentResult,
    IidGamma,
    IidNormal,
    IidUniform,
    NormalCopula,
    Scenario,
    generate,
    run_level_experiment,
    run_power_experiment,
)
from .thresholds import bootstrap_threshold, conditional_quantiles, mc_threshold, xi_from_alpha

__all__ = [
    "AR1",
    "Alarm",
    "Continue",
    "DetectorKind",
    "DominanceState",
    "Ended",
    "ExperimentResult",
    "GARCH11",
    "IidGamma",
    "IidNormal",
    "IidUniform",
    "MonitorConfig",
    "MonitorReport",
    "MonitorState",
    "MultiplierConfig",
    "NormalCopula",
    "Scenario",
    "Status",
    "ThresholdFunction",
    "bootstrap_threshold",
    "compute_detector",
    "conditional_quantiles",
    "detector_path",
    "ecdf_eval",
    "estimate_bandwidth",
    "estimate_changepoint",
    "extend",
    "gen_multipliers",
    "generate",
    "interval_boundaries",
    "mc_threshold",
    "parzen_kernel",
    "quantile",
    "replicate_paths",
    "run_level_experiment",
    "run_power_experiment",
    "weight_q",
    "xi_from_alpha",
]
