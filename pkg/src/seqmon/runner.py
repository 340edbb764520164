"""
Runner: connects parsed configs and CSV data to the monitoring engine.
"""

import logging
import os
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from .boundary import BoundaryParams
from .critical_values import CriticalValue, closed_end_upper, resolve_critical_value
from .errors import DataError, OverlapWarning
from .model import FittedModel, fit_window
from .monitor import MonitorConfig, StoppingResult, run_stream
from .parser import ColumnTransform, MonitorRunConfig
from .stationarity import MIN_OBS, KpssResult, kpss_level
from .utils import ensure_dir, save_json, save_results_csv, write_manifest

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class AlignedDataset:
    """Transformed columns with the leading incomplete rows removed."""

    labels: np.ndarray
    y: np.ndarray
    exog: np.ndarray
    offset: int
    names: Tuple[str, ...]

    def __len__(self) -> int:
        return self.y.size


def _numeric(frame: pd.DataFrame, column: str) -> np.ndarray:
    values = pd.to_numeric(frame[column], errors="coerce").to_numpy(dtype=float)
    bad = np.flatnonzero(~np.isfinite(values))
    if bad.size:
        raise DataError(f"column {column!r} has a missing or non-numeric value "
                        f"{frame[column].iloc[bad[0]]!r}", row=int(bad[0]) + 1)
    return values


def align_frame(frame: pd.DataFrame, response: ColumnTransform,
                exog: Sequence[ColumnTransform] = (),
                date_column: Optional[str] = "date") -> AlignedDataset:
    """
    Apply the transforms and drop as many leading rows as the deepest one consumes.

    Raises:
        DataError: missing column, non-numeric entry, or non-positive value under diff_log
    """
    transforms = (response, *exog)
    needed = [t.source for t in transforms] + ([date_column] if date_column else [])
    missing = [c for c in dict.fromkeys(needed) if c not in frame.columns]
    if missing:
        raise DataError(f"missing column(s) {missing}; file has {list(frame.columns)}")

    cols = [t.apply(_numeric(frame, t.source)) for t in transforms]
    offset = max(t.depth for t in transforms)
    labels = (frame[date_column].astype(str).to_numpy() if date_column
              else np.arange(1, len(frame) + 1).astype(str))
    exog_mat = np.column_stack(cols[1:])[offset:] if exog else np.empty((len(frame) - offset, 0))
    if offset:
        logger.info("dropped %d leading row(s) to align transforms", offset)
    return AlignedDataset(labels[offset:], cols[0][offset:], exog_mat, offset,
                          tuple(t.label for t in transforms))


def ingest_csv(path: Union[str, Path], response: ColumnTransform,
               exog: Sequence[ColumnTransform] = (),
               date_column: Optional[str] = "date") -> AlignedDataset:
    """Read a CSV with a header row and align its transformed columns."""
    try:
        frame = pd.read_csv(path, encoding="utf-8")
    except FileNotFoundError:
        raise DataError(f"data file not found: {path}")
    except pd.errors.EmptyDataError:
        raise DataError(f"{path} is empty")
    except pd.errors.ParserError as e:
        raise DataError(f"ragged or malformed rows in {path}: {e}")
    return align_frame(frame, response, exog, date_column)


def run_critical_value(config: MonitorRunConfig) -> CriticalValue:
    """Critical value for a run: override, or the configured source for the horizon."""
    if config.c is not None:
        return CriticalValue(config.c, config.gamma, config.alpha, "override")
    upper = 1.0 if config.N is None else closed_end_upper(config.N / config.M)
    return resolve_critical_value(config.gamma, config.alpha, config.c_source,
                                  grid_size=config.grid_size, reps=config.reps,
                                  seed=config.seed, upper=upper)


@dataclass(frozen=True)
class MonitorReport:
    config: MonitorRunConfig
    critical: CriticalValue
    model: FittedModel
    result: StoppingResult
    detection_row: Optional[int]
    date: Optional[str]
    before_detection: Optional[FittedModel] = None
    training_kpss: Optional[KpssResult] = None
    paths: Dict[str, str] = field(default_factory=dict)

    def as_dict(self) -> Dict[str, Any]:
        cfg = self.config
        return {
            "tau": self.result.tau,
            "censored": self.result.censored,
            "censored_at": self.result.censored_at,
            "value": self.result.value,
            "date": self.date,
            "detection_row": self.detection_row,
            "start": cfg.start,
            "gamma": cfg.gamma,
            "alpha": cfg.alpha,
            "c": self.critical.value,
            "c_source": self.critical.source,
            "corrected": cfg.corrected,
            "M": cfg.M,
            "horizon": {"closed_end": self.result.closed_end, "steps": self.result.horizon},
            "sigma_hat": self.model.sigma_hat,
            "r_squared": self.model.r_squared,
            "coefficients": {
                "names": ["intercept", *self.config.to_dict()["exog"], "y_lag"],
                "training": self.model.beta_hat.tolist(),
                "before_detection": (None if self.before_detection is None
                                     else self.before_detection.beta_hat.tolist()),
            },
            "training_kpss": None if self.training_kpss is None else self.training_kpss.statistic,
            "trajectory_path": self.paths.get("trajectory"),
            "manifest": self.paths.get("manifest"),
        }


def monitor_command(config: MonitorRunConfig, dataset: AlignedDataset,
                    out_dir: Optional[str] = None) -> MonitorReport:
    """
    Fit on the training rows, monitor every later row and map tau to its label.

    Writes trajectory.csv, report.json and manifest.json when ``out_dir`` is given.

    Raises:
        DataError: fewer rows than the warm-up row plus M training rows
    """
    w, M = config.start, config.M
    if len(dataset) < w + M + 1:
        raise DataError(f"need at least {w + M + 1} aligned rows for start={w} and M={M}, "
                        f"got {len(dataset)}")
    y, x = dataset.y, dataset.exog
    model = fit_window(y, x, w + 1, w + 1 + M)

    kpss = None
    if M >= MIN_OBS:
        kpss = kpss_level(y[w + 1 : w + 1 + M])
        if kpss.reject_5:
            logger.warning("KPSS rejects level stationarity of the training response (%.3f)",
                           kpss.statistic)

    critical = run_critical_value(config)
    params = BoundaryParams(critical.value, config.gamma, config.corrected)
    if config.N is not None:
        mcfg = MonitorConfig.closed_end(params, M, config.N)
    else:
        mcfg = MonitorConfig.open_ended(params, M, config.cap)
    stream = ((x[t], y[t]) for t in range(w + M + 1, len(dataset)))
    result = run_stream(model, mcfg, stream, record_trajectory=True)

    row = date = before = None
    if result.stopped:
        row = w + M + result.tau
        date = str(dataset.labels[row])
        before = fit_window(y, x, w + 1, row + 1)
        logger.info("detection at tau=%d (%s)", result.tau, date)

    report = MonitorReport(config, critical, model, result, row, date, before, kpss)
    if out_dir is None:
        return report

    ensure_dir(out_dir)
    paths = {
        "trajectory": save_results_csv(result.trajectory_frame(),
                                       os.path.join(out_dir, "trajectory.csv")),
        "manifest": write_manifest(out_dir, "monitor", config.to_dict(), seed=config.seed,
                                   reps=config.reps if critical.source == "simulation" else None),
    }
    report = MonitorReport(config, critical, model, result, row, date, before, kpss, paths)
    paths["report"] = save_json(report.as_dict(), os.path.join(out_dir, "report.json"))
    return report


def remonitor_command(config: MonitorRunConfig, dataset: AlignedDataset, new_start: int,
                      previous_detection: Optional[int] = None,
                      out_dir: Optional[str] = None) -> MonitorReport:
    """
    Restart monitoring with the warm-up row moved to ``new_start``, typically
    the row of the previous detection.
    """
    if previous_detection is not None and new_start < previous_detection:
        msg = (f"new training window starts at row {new_start}, before the previous "
               f"detection at row {previous_detection}")
        warnings.warn(msg, OverlapWarning, stacklevel=2)
        logger.warning(msg)
    return monitor_command(config.with_start(new_start), dataset, out_dir)
