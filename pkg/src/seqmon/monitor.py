"""
Online monitoring: feed post-training observations one at a time, update
the residual CUSUM detector and stop at the first strict boundary crossing.
"""

import enum
import logging
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from .boundary import (
    BoundaryParams,
    CompensatedSum,
    _shape,
    boundary,
    compensated_cumsum,
    detector,
)
from .errors import DegenerateVarianceError, DimensionError, MonitorStateError, ParameterError
from .model import FittedModel, residual

logger = logging.getLogger(__name__)

DEFAULT_CAP_MULTIPLE = 10


@dataclass(frozen=True)
class Horizon:
    """Open-ended monitoring capped at ``steps``, or closed-end with N = ``steps``."""

    closed: bool
    steps: int

    def __post_init__(self):
        if self.steps < 1:
            raise ParameterError(f"monitoring horizon must be at least 1, got {self.steps}")

    @classmethod
    def open_ended(cls, max_steps: int) -> "Horizon":
        return cls(False, int(max_steps))

    @classmethod
    def closed_end(cls, N: int) -> "Horizon":
        return cls(True, int(N))


@dataclass(frozen=True)
class MonitorConfig:
    boundary: BoundaryParams
    horizon: Horizon
    M: int

    @classmethod
    def open_ended(cls, boundary: BoundaryParams, M: int,
                   max_steps: Optional[int] = None) -> "MonitorConfig":
        """Open-ended monitoring, capped at 10 M steps unless told otherwise."""
        cap = DEFAULT_CAP_MULTIPLE * M if max_steps is None else max_steps
        return cls(boundary, Horizon.open_ended(cap), M)

    @classmethod
    def closed_end(cls, boundary: BoundaryParams, M: int, N: int) -> "MonitorConfig":
        return cls(boundary, Horizon.closed_end(N), M)


class Status(enum.Enum):
    RUNNING = "running"
    STOPPED = "stopped"
    CENSORED = "censored"


class Decision(enum.Enum):
    CONTINUE = "continue"
    STOP = "stop"
    CENSORED = "censored"


@dataclass(frozen=True)
class StepDecision:
    decision: Decision
    s: int

    @property
    def stopped(self) -> bool:
        return self.decision is Decision.STOP


@dataclass(frozen=True)
class TrajectoryPoint:
    s: int
    detector: float
    boundary: float
    decision: str


@dataclass(frozen=True)
class StoppingResult:
    """
    Outcome of a monitoring run.

    ``tau`` is set when the detector crossed; otherwise ``censored_at`` holds
    the number of monitored steps. For closed-end runs that reached N,
    ``value`` reports the conventional N + 1.
    """

    stopped: bool
    tau: Optional[int] = None
    censored_at: Optional[int] = None
    closed_end: bool = False
    horizon: Optional[int] = None
    trajectory: Optional[Tuple[TrajectoryPoint, ...]] = None

    @property
    def censored(self) -> bool:
        return not self.stopped

    @property
    def value(self) -> int:
        if self.stopped:
            return self.tau
        if self.closed_end and self.censored_at == self.horizon:
            return self.horizon + 1
        return self.censored_at

    def trajectory_frame(self) -> pd.DataFrame:
        rows = self.trajectory or ()
        return pd.DataFrame(
            [(p.s, p.detector, p.boundary, p.decision) for p in rows],
            columns=["s", "detector", "boundary", "decision"],
        )


class Monitor:
    """
    Single-writer monitoring state for one stream.

    Create with :func:`init_monitor`; call :meth:`step` once per observation.
    """

    def __init__(self, model: FittedModel, config: MonitorConfig, y_M: float,
                 record_trajectory: bool = False):
        if not model.sigma_hat_sq > 0.0:
            raise DegenerateVarianceError(
                "training residual variance is zero; the detector is undefined"
            )
        if config.M != model.M:
            raise ParameterError(
                f"config is for M={config.M} but the model was fitted on M={model.M}"
            )
        self.model = model
        self.config = config
        self.params = config.boundary.with_sigma(model.sigma_hat)
        self.sigma_hat = model.sigma_hat
        self.cum_resid = CompensatedSum()
        self.s = 0
        self.last_y = float(y_M)
        self.status = Status.RUNNING
        self.tau: Optional[int] = None
        self._trajectory: Optional[List[TrajectoryPoint]] = [] if record_trajectory else None

    @property
    def detector_value(self) -> float:
        return detector(self.cum_resid.value, self.sigma_hat)

    def step(self, exog_next: Sequence[float], y_next: float) -> StepDecision:
        """Consume one observation and decide."""
        if self.status is not Status.RUNNING:
            raise MonitorStateError(f"monitor is {self.status.value}; no further input accepted")

        exog_next = np.asarray(exog_next, dtype=float).ravel()
        if exog_next.size != self.model.d - 2:
            raise DimensionError(
                f"expected {self.model.d - 2} exogenous values, got {exog_next.size}"
            )
        row = np.concatenate(([1.0], exog_next, [self.last_y]))
        e = residual(self.model, row, y_next)
        self.cum_resid.add(e)
        self.s += 1
        self.last_y = float(y_next)

        gam = self.detector_value
        bnd = boundary(self.config.M, self.s, self.params)
        if gam > bnd:
            self.status = Status.STOPPED
            self.tau = self.s
            out = StepDecision(Decision.STOP, self.s)
            logger.info("boundary crossed at s=%d (detector %.4f > %.4f)", self.s, gam, bnd)
        elif self.s >= self.config.horizon.steps:
            self.status = Status.CENSORED
            out = StepDecision(Decision.CENSORED, self.s)
            logger.info("no crossing within %d monitored steps", self.s)
        else:
            out = StepDecision(Decision.CONTINUE, self.s)

        if self._trajectory is not None:
            self._trajectory.append(TrajectoryPoint(self.s, gam, float(bnd), out.decision.value))
        return out

    def result(self) -> StoppingResult:
        horizon = self.config.horizon
        traj = tuple(self._trajectory) if self._trajectory is not None else None
        if self.status is Status.STOPPED:
            return StoppingResult(True, tau=self.tau, closed_end=horizon.closed,
                                  horizon=horizon.steps, trajectory=traj)
        return StoppingResult(False, censored_at=self.s, closed_end=horizon.closed,
                              horizon=horizon.steps, trajectory=traj)


def init_monitor(model: FittedModel, config: MonitorConfig, y_M: Optional[float] = None,
                 record_trajectory: bool = False) -> Monitor:
    """Fresh monitoring state; ``y_M`` defaults to the last training response."""
    if y_M is None:
        if model.responses is None:
            raise ParameterError("y_M is required when the model does not carry its responses")
        y_M = float(model.responses[-1])
    return Monitor(model, config, y_M, record_trajectory)


def run_stream(model: FittedModel, config: MonitorConfig,
               stream: Iterable[Tuple[Sequence[float], float]],
               y_M: Optional[float] = None,
               record_trajectory: bool = False) -> StoppingResult:
    """Drive a monitor over ``(exog, y)`` pairs until it stops, censors or the stream ends."""
    mon = init_monitor(model, config, y_M, record_trajectory)
    for exog, y in stream:
        if mon.step(exog, y).decision is not Decision.CONTINUE:
            break
    return mon.result()


def boundary_path(M: int, steps: int, params: BoundaryParams) -> np.ndarray:
    """Boundary at s = 1..steps."""
    return np.asarray(boundary(M, np.arange(1, steps + 1), params), dtype=float)


def first_crossing(resid: np.ndarray, sigma_hat, M: int, params: BoundaryParams,
                   horizon: Optional[int] = None) -> np.ndarray:
    """
    Batch scan: first s with detector > boundary, 0 when there is none.

    Args:
        resid: (T,) or (R, T) post-training residuals
        sigma_hat: scalar or (R,) training standard deviations
        M: training size
        params: boundary parameters; with ``corrected`` the correction uses
            each row's own sigma_hat
        horizon: only the first ``horizon`` steps are scanned

    Returns:
        integer array of shape resid.shape[:-1] (a 0-d array for a single path)
    """
    resid = np.asarray(resid, dtype=float)
    if horizon is not None:
        resid = resid[..., :horizon]
    sigma = np.asarray(sigma_hat, dtype=float)
    if np.any(sigma <= 0.0):
        raise DegenerateVarianceError("sigma_hat must be positive")
    with np.errstate(over="ignore", invalid="ignore"):
        det = np.abs(compensated_cumsum(resid)) / sigma[..., None]
    return first_crossing_from_detector(det, sigma, M, params)


def first_crossing_from_detector(det: np.ndarray, sigma_hat, M: int,
                                 params: BoundaryParams) -> np.ndarray:
    """First crossing for precomputed detector paths (shape (..., T))."""
    T = det.shape[-1]
    shape = _shape(M, np.arange(1, T + 1), params.gamma)
    sigma = np.asarray(sigma_hat, dtype=float)
    if params.corrected:
        factor = 1.0 + (1.0 + params.gamma) * sigma / np.sqrt(M)
    else:
        factor = np.ones_like(sigma)
    bound = factor[..., None] * (params.c * shape)
    with np.errstate(invalid="ignore"):
        cross = det > bound
    hit = cross.any(axis=-1)
    return np.where(hit, np.argmax(cross, axis=-1) + 1, 0)
