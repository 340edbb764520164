"""
seqmon: sequential change-point monitoring of regressions with an
autoregressive term.
Exposes the model fit, boundaries, critical values, the monitor and the
Monte Carlo tools.
"""

__version__ = "0.1.0"

from .boundary import BoundaryParams, boundary, boundary_corrected, boundary_raw, detector
from .critical_values import (
    closed_end_critical_value,
    critical_value,
    resolve_critical_value,
    table_value,
)
from .dgp import DgpSpec, make_dgp, simulate, simulate_dataset
from .errors import SeqmonError
from .model import FittedModel, TrainingSample, fit_ols, fit_window
from .monitor import MonitorConfig, StoppingResult, first_crossing, init_monitor, run_stream
from .stationarity import kpss_level

__all__ = [
    "BoundaryParams",
    "DgpSpec",
    "FittedModel",
    "MonitorConfig",
    "SeqmonError",
    "StoppingResult",
    "TrainingSample",
    "boundary",
    "boundary_corrected",
    "boundary_raw",
    "closed_end_critical_value",
    "critical_value",
    "detector",
    "first_crossing",
    "fit_ols",
    "fit_window",
    "init_monitor",
    "kpss_level",
    "make_dgp",
    "resolve_critical_value",
    "run_stream",
    "simulate",
    "simulate_dataset",
    "table_value",
]
