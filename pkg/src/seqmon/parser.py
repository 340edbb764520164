"""
Configuration parsing: run configs, experiment plans, DGP specs and column
transforms.

Transforms are written as expressions over a CSV column:
    CSHPI
    diff_log(CSHPI)
    lag(income, 1)
    lag(diff_log(income), 1)

Config files are TOML; a file ending in ``.json`` holding the same tables
is accepted by every loader.
"""

import json
import logging
import re
import sys
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Any, Dict, Iterable, Optional, Tuple, Union

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .critical_values import SOURCES
from .dgp import DgpSpec, make_dgp
from .errors import ConfigError, DataError
from .experiments import ExperimentPlan

logger = logging.getLogger(__name__)

TRANSFORM_OPS = ("identity", "diff_log", "lag", "diff_log_then_lag")

_NAME = r"[A-Za-z_][\w.]*"
_IDENT_RE = re.compile(rf"^({_NAME})$")
_DIFF_LOG_RE = re.compile(rf"^diff_log\(\s*({_NAME})\s*\)$")
_LAG_RE = re.compile(rf"^lag\(\s*({_NAME})\s*,\s*(\d+)\s*\)$")
_LAG_DIFF_LOG_RE = re.compile(rf"^lag\(\s*diff_log\(\s*({_NAME})\s*\)\s*,\s*(\d+)\s*\)$")


@dataclass(frozen=True)
class ColumnTransform:
    """A CSV column and the operation applied to it."""

    source: str
    op: str = "identity"
    k: int = 0

    def __post_init__(self):
        if self.op not in TRANSFORM_OPS:
            raise ConfigError(f"unknown transform {self.op!r}; use one of {TRANSFORM_OPS}")
        if self.op in ("lag", "diff_log_then_lag") and self.k < 1:
            raise ConfigError(f"lag must be at least 1, got {self.k}")
        if self.op in ("identity", "diff_log") and self.k != 0:
            raise ConfigError(f"{self.op} takes no lag")

    @property
    def depth(self) -> int:
        """Leading rows the transform consumes."""
        return {"identity": 0, "diff_log": 1, "lag": self.k,
                "diff_log_then_lag": 1 + self.k}[self.op]

    @property
    def label(self) -> str:
        if self.op == "identity":
            return self.source
        if self.op == "diff_log":
            return f"diff_log({self.source})"
        if self.op == "lag":
            return f"lag({self.source}, {self.k})"
        return f"lag(diff_log({self.source}), {self.k})"

    def apply(self, values) -> np.ndarray:
        """
        Transformed column of the same length; the first :attr:`depth`
        entries are NaN.

        Raises:
            DataError: non-positive input under diff_log (1-based data row)
        """
        v = np.asarray(values, dtype=float)
        out = v
        if self.op in ("diff_log", "diff_log_then_lag"):
            bad = np.flatnonzero(~(v > 0.0))
            if bad.size:
                raise DataError(
                    f"column {self.source!r} must be strictly positive for diff_log, "
                    f"found {v[bad[0]]}", row=int(bad[0]) + 1)
            out = np.full_like(v, np.nan)
            out[1:] = np.diff(np.log(v))
        if self.op in ("lag", "diff_log_then_lag"):
            lagged = np.full_like(out, np.nan)
            if self.k < out.size:
                lagged[self.k:] = out[: out.size - self.k]
            out = lagged
        return out


def parse_transform(text: str) -> ColumnTransform:
    """Parse a transform expression (see the module docstring)."""
    expr = str(text).strip()
    m = _IDENT_RE.match(expr)
    if m and m.group(1) not in ("diff_log", "lag"):
        return ColumnTransform(m.group(1))
    m = _DIFF_LOG_RE.match(expr)
    if m:
        return ColumnTransform(m.group(1), "diff_log")
    m = _LAG_DIFF_LOG_RE.match(expr)
    if m:
        return ColumnTransform(m.group(1), "diff_log_then_lag", int(m.group(2)))
    m = _LAG_RE.match(expr)
    if m:
        return ColumnTransform(m.group(1), "lag", int(m.group(2)))
    raise ConfigError(f"Unsupported transform: {expr}")


def _transform(value: Union[str, Dict[str, Any]]) -> ColumnTransform:
    if isinstance(value, str):
        return parse_transform(value)
    if isinstance(value, dict):
        _reject_unknown(value, {"column", "op", "k"}, "transform")
        if "column" not in value:
            raise ConfigError("a transform table needs 'column'")
        return ColumnTransform(value["column"], value.get("op", "identity"), int(value.get("k", 0)))
    raise ConfigError(f"cannot read a transform from {value!r}")


@dataclass(frozen=True)
class MonitorRunConfig:
    """
    One monitoring run on a CSV file.

    The aligned row ``start`` only supplies the lag of the first training
    observation; rows ``start+1 .. start+M`` are the training sample and
    monitoring begins at row ``start+M+1``.
    """

    response: ColumnTransform
    M: int
    exog: Tuple[ColumnTransform, ...] = ()
    start: int = 0
    gamma: float = 0.0
    alpha: float = 0.05
    c_source: str = "table"
    c: Optional[float] = None
    corrected: bool = True
    N: Optional[int] = None
    cap: Optional[int] = None
    date_column: str = "date"
    reps: int = 50_000
    grid_size: int = 10_000
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "exog", tuple(self.exog))
        if self.M <= self.d:
            raise ConfigError(f"training size M={self.M} must exceed d={self.d}")
        if not (0.0 <= self.gamma < 0.5):
            raise ConfigError(f"gamma must lie in [0, 0.5), got {self.gamma}")
        if not (0.0 < self.alpha < 1.0):
            raise ConfigError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.c_source not in SOURCES:
            raise ConfigError(f"unknown critical value source {self.c_source!r}")
        if self.c is not None and not self.c > 0.0:
            raise ConfigError(f"c must be positive, got {self.c}")
        if self.start < 0:
            raise ConfigError("start must be non-negative")
        if self.N is not None and self.cap is not None:
            raise ConfigError("give either a closed-end N or an open-ended cap, not both")
        for name in ("N", "cap"):
            v = getattr(self, name)
            if v is not None and v < 1:
                raise ConfigError(f"{name} must be at least 1")

    @property
    def d(self) -> int:
        return len(self.exog) + 2

    @property
    def transforms(self) -> Tuple[ColumnTransform, ...]:
        return (self.response,) + self.exog

    def with_start(self, start: int) -> "MonitorRunConfig":
        data = asdict(self)
        data.update(response=self.response, exog=self.exog, start=start)
        return MonitorRunConfig(**data)

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["response"] = self.response.label
        data["exog"] = [t.label for t in self.exog]
        return data


def _reject_unknown(table: Dict[str, Any], allowed: Iterable[str], where: str):
    unknown = sorted(set(table) - set(allowed))
    if unknown:
        raise ConfigError(f"unknown key(s) {unknown} in {where}")


def load_file(path: Union[str, Path]) -> Dict[str, Any]:
    """Read a TOML (or ``.json``) file into a dictionary."""
    path = Path(path)
    try:
        if path.suffix.lower() == ".json":
            with open(path, "r", encoding="utf-8") as f:
                data = json.load(f)
        else:
            with open(path, "rb") as f:
                data = tomllib.load(f)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except (tomllib.TOMLDecodeError, json.JSONDecodeError) as e:
        raise ConfigError(f"cannot parse {path}: {e}")
    if not isinstance(data, dict):
        raise ConfigError(f"{path} must hold a table at the top level")
    return data


_RUN_SECTIONS = {
    "data": {"response", "exog", "date_column"},
    "training": {"start", "M"},
    "boundary": {"gamma", "alpha", "source", "c", "corrected", "reps", "grid_size", "seed"},
    "horizon": {"N", "cap"},
}


def monitor_config_from_dict(data: Dict[str, Any]) -> MonitorRunConfig:
    _reject_unknown(data, _RUN_SECTIONS, "run config")
    for name, keys in _RUN_SECTIONS.items():
        _reject_unknown(data.get(name, {}), keys, f"[{name}]")
    dat = data.get("data", {})
    trn = data.get("training", {})
    bnd = data.get("boundary", {})
    hor = data.get("horizon", {})
    if "response" not in dat:
        raise ConfigError("[data] needs 'response'")
    if "M" not in trn:
        raise ConfigError("[training] needs 'M'")
    try:
        return MonitorRunConfig(
            response=_transform(dat["response"]),
            exog=tuple(_transform(t) for t in dat.get("exog", [])),
            date_column=dat.get("date_column", "date"),
            M=int(trn["M"]),
            start=int(trn.get("start", 0)),
            gamma=float(bnd.get("gamma", 0.0)),
            alpha=float(bnd.get("alpha", 0.05)),
            c_source=bnd.get("source", "table"),
            c=None if bnd.get("c") is None else float(bnd["c"]),
            corrected=bool(bnd.get("corrected", True)),
            reps=int(bnd.get("reps", 50_000)),
            grid_size=int(bnd.get("grid_size", 10_000)),
            seed=int(bnd.get("seed", 0)),
            N=None if hor.get("N") is None else int(hor["N"]),
            cap=None if hor.get("cap") is None else int(hor["cap"]),
        )
    except (TypeError, ValueError) as e:
        raise ConfigError(f"invalid run config: {e}")


def load_monitor_config(path: Union[str, Path]) -> MonitorRunConfig:
    return monitor_config_from_dict(load_file(path))


_PLAN_KEYS = {f for f in ExperimentPlan.__dataclass_fields__}


def plan_from_dict(data: Dict[str, Any]) -> ExperimentPlan:
    table = data.get("plan", data)
    _reject_unknown(table, _PLAN_KEYS, "plan")
    if "dgp_ids" not in table:
        raise ConfigError("a plan needs 'dgp_ids'")
    try:
        return ExperimentPlan(**table)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"invalid plan: {e}")


def load_plan(path: Union[str, Path]) -> ExperimentPlan:
    return plan_from_dict(load_file(path))


_BUILTIN_SPEC_KEYS = {"id", "M", "s_star", "delta_d", "seed", "extra_horizon", "burn_in"}


def dgp_spec_from_dict(data: Dict[str, Any]) -> DgpSpec:
    """
    A built-in world (``id = "v"`` plus M, s_star, delta_d, ...) or a fully
    written-out spec with regressors, errors and change tables.
    """
    table = data.get("dgp", data)
    try:
        if "id" in table:
            _reject_unknown(table, _BUILTIN_SPEC_KEYS, "dgp")
            if "M" not in table:
                raise ConfigError("a built-in DGP needs 'M'")
            kwargs = {k: v for k, v in table.items() if k != "id"}
            return make_dgp(table["id"], **kwargs)
        return DgpSpec.from_dict(table)
    except ConfigError:
        raise
    except (TypeError, ValueError, KeyError) as e:
        raise ConfigError(f"invalid DGP spec: {e}")


def load_dgp_spec(path: Union[str, Path]) -> DgpSpec:
    return dgp_spec_from_dict(load_file(path))
