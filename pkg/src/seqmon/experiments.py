"""
Monte Carlo harness: false-detection rates under the null worlds, power under
the alternatives and the distribution of the stopping time.

Replications of one world cell (DGP, M, s*, delta_d) are generated once and
scanned for every (gamma, alpha) pair, so results for different critical
values are computed from identical data.
"""

import logging
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy import stats

from .boundary import BoundaryParams, compensated_cumsum
from .critical_values import table_value
from .dgp import (
    ALTERNATIVE_IDS,
    DGP_IDS,
    NULL_IDS,
    DgpSpec,
    admissible_deltas,
    generate_batch,
    make_dgp,
)
from .errors import MisuseError, ParameterError
from .model import fit_ols_batch, fitted_values
from .monitor import first_crossing_from_detector
from .rng import chunk_bounds
from .utils import ensure_dir, save_json, save_results_csv, write_manifest

logger = logging.getLogger(__name__)

DEFAULT_CHUNK = 250


@dataclass(frozen=True)
class ExperimentPlan:
    """
    Grid of world cells and boundary settings.

    An empty ``deltas`` means every admissible delta_d of each DGP. ``c`` replaces
    the table critical value in every cell when given.
    """

    dgp_ids: Tuple[str, ...]
    Ms: Tuple[int, ...] = (50, 100, 150, 300)
    gammas: Tuple[float, ...] = (0.0, 0.25, 0.45, 0.49)
    alphas: Tuple[float, ...] = (0.10, 0.05, 0.01)
    s_stars: Tuple[int, ...] = (1, 5, 10)
    deltas: Tuple[float, ...] = ()
    reps: int = 10_000
    horizon_multiple: int = 10
    master_seed: int = 0
    c: Optional[float] = None
    corrected: bool = True
    burn_in: int = 500
    chunk: int = DEFAULT_CHUNK
    workers: int = 1

    def __post_init__(self):
        for name in ("dgp_ids", "Ms", "gammas", "alphas", "s_stars", "deltas"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        object.__setattr__(self, "dgp_ids", tuple(str(i).strip().lower() for i in self.dgp_ids))
        for name in ("dgp_ids", "Ms", "gammas", "alphas", "s_stars"):
            if not getattr(self, name):
                raise ParameterError(f"plan grid {name!r} is empty")
        unknown = [i for i in self.dgp_ids if i not in DGP_IDS]
        if unknown:
            raise ParameterError(f"unknown DGP ids {unknown}; expected ids from {DGP_IDS}")
        if self.reps < 1:
            raise ParameterError("reps must be at least 1")
        if self.horizon_multiple < 1:
            raise ParameterError("horizon_multiple must be at least 1")
        if self.chunk < 1 or self.workers < 1:
            raise ParameterError("chunk and workers must be positive")
        if self.c is not None and not self.c > 0.0:
            raise ParameterError(f"c must be positive, got {self.c}")

    def to_dict(self) -> Dict:
        return asdict(self)


@dataclass(frozen=True)
class CellResult:
    """
    One (world, gamma, alpha) cell.

    ``detections[i]`` counts replications that stopped by ``horizons[i]``;
    ``taus`` holds every stopping time with 0 for no detection and -1 for a
    replication left out because its training fit was singular. Rates are
    taken over the ``reps - excluded`` replications that were monitored.
    """

    dgp: str
    M: int
    gamma: float
    alpha: float
    c: float
    s_star: Optional[int]
    delta_d: Optional[float]
    reps: int
    horizons: Tuple[int, ...]
    detections: Tuple[int, ...]
    taus: np.ndarray = field(repr=False, compare=False)
    excluded: int = 0

    @property
    def monitored(self) -> int:
        return self.reps - self.excluded

    @property
    def rates(self) -> Tuple[float, ...]:
        """Percent stopped by each horizon."""
        n = self.monitored
        return tuple(100.0 * k / n if n else float("nan") for k in self.detections)

    @property
    def rate(self) -> float:
        return self.rates[-1]

    @property
    def standard_error(self) -> float:
        """Monte Carlo standard error of :attr:`rate`, in percentage points."""
        n = self.monitored
        if not n:
            return float("nan")
        p = self.detections[-1] / n
        return 100.0 * math.sqrt(p * (1.0 - p) / n)

    @property
    def stopped(self) -> np.ndarray:
        return self.taus[self.taus > 0]

    def tau_summary(self) -> Dict[str, float]:
        t = self.stopped
        if t.size == 0:
            return {"tau_mean": float("nan"), "tau_q10": float("nan"),
                    "tau_median": float("nan"), "tau_q90": float("nan")}
        q10, q50, q90 = np.quantile(t, [0.1, 0.5, 0.9])
        return {"tau_mean": float(t.mean()), "tau_q10": float(q10),
                "tau_median": float(q50), "tau_q90": float(q90)}

    def as_row(self) -> Dict:
        row = {
            "dgp": self.dgp, "M": self.M, "gamma": self.gamma, "alpha": self.alpha,
            "c": self.c, "s_star": self.s_star, "delta_d": self.delta_d,
            "reps": self.reps, "excluded": self.excluded,
            "rate": self.rate, "se": self.standard_error,
        }
        row.update(self.tau_summary())
        return row


@dataclass(frozen=True)
class ExperimentReport:
    kind: str
    cells: Tuple[CellResult, ...]
    plan: ExperimentPlan
    wall_time: float

    def to_frame(self) -> pd.DataFrame:
        """One row per cell."""
        return pd.DataFrame([cell.as_row() for cell in self.cells])

    def curve_frame(self) -> pd.DataFrame:
        """Plot-ready rate curves: one row per (cell, horizon)."""
        rows = []
        for cell in self.cells:
            for i, (h, r) in enumerate(zip(cell.horizons, cell.rates), start=1):
                rows.append({"dgp": cell.dgp, "M": cell.M, "gamma": cell.gamma,
                             "alpha": cell.alpha, "s_star": cell.s_star,
                             "delta_d": cell.delta_d, "multiple": i, "horizon": h,
                             "rate": r})
        return pd.DataFrame(rows)

    def find(self, **keys) -> CellResult:
        """The unique cell whose fields match ``keys``."""
        hits = [c for c in self.cells
                if all(_same(getattr(c, k), v) for k, v in keys.items())]
        if len(hits) != 1:
            raise KeyError(f"{len(hits)} cells match {keys}")
        return hits[0]

    def summary(self) -> Dict:
        return {
            "kind": self.kind,
            "master_seed": self.plan.master_seed,
            "reps": self.plan.reps,
            "cells": [cell.as_row() for cell in self.cells],
        }


def _same(a, b) -> bool:
    if isinstance(a, float) or isinstance(b, float):
        return a is not None and b is not None and abs(a - b) < 1e-9
    return a == b


# ---------------------------------------------------------------- cell engine

def cell_seed(master_seed: int, dgp_id: str, M: int, s_star: int = 0,
              delta_d: Optional[float] = None) -> int:
    """Seed of a world cell; gamma and alpha are not part of it."""
    keys = [master_seed, DGP_IDS.index(dgp_id), M, s_star,
            0 if delta_d is None else int(round(delta_d * 10_000))]
    return int(np.random.SeedSequence(keys).generate_state(1, np.uint64)[0])


def _design(y: np.ndarray, x: np.ndarray, lo: int, hi: int) -> np.ndarray:
    """Rows (1, x_t, y_{t-1}) for t in [lo, hi), stacked over replications."""
    R = y.shape[0]
    rows = np.empty((R, hi - lo, x.shape[-1] + 2))
    rows[..., 0] = 1.0
    rows[..., 1:-1] = x[:, lo:hi]
    rows[..., -1] = y[:, lo - 1 : hi - 1]
    return rows


def _scan_chunk(spec: DgpSpec, lo: int, hi: int,
                boundaries: Sequence[BoundaryParams]) -> np.ndarray:
    """
    Stopping times (len(boundaries), hi - lo) for replications lo..hi-1;
    -1 marks a replication whose training fit was singular.
    """
    M = spec.M
    data = generate_batch(spec, lo, hi)
    beta, sigma_sq = fit_ols_batch(_design(data.y, data.x, 1, M + 1), data.y[:, 1 : M + 1])
    sigma = np.sqrt(sigma_sq)
    end = data.y.shape[1]
    with np.errstate(over="ignore", invalid="ignore"):
        fitted = fitted_values(_design(data.y, data.x, M + 1, end), beta)
        resid = data.y[:, M + 1 :] - fitted
        det = np.abs(compensated_cumsum(resid)) / sigma[:, None]
    out = np.empty((len(boundaries), hi - lo), dtype=np.int64)
    for i, params in enumerate(boundaries):
        out[i] = first_crossing_from_detector(det, sigma, M, params)
    out[:, ~np.isfinite(sigma)] = -1
    logger.debug("%s M=%d: replications %d..%d scanned", spec.name, M, lo, hi - 1)
    return out


def run_cell(spec: DgpSpec, gammas: Sequence[float], alphas: Sequence[float], reps: int,
             horizons: Optional[Sequence[int]] = None, c: Optional[float] = None,
             corrected: bool = True, chunk: int = DEFAULT_CHUNK,
             workers: int = 1) -> List[CellResult]:
    """
    Monitor ``reps`` replications of one world for every (gamma, alpha) pair.

    Args:
        spec: the world; its seed keys the replication substreams
        gammas, alphas: boundary grid (table critical values unless ``c`` is given)
        reps: number of replications
        horizons: cumulative detection counts are reported at these monitoring
            steps; defaults to the full simulated horizon
        c: critical value override for every cell
        corrected: use the corrected boundary
        chunk: replications generated together
        workers: threads; results do not depend on it

    Returns:
        one CellResult per (gamma, alpha), gamma-major
    """
    if reps < 1:
        raise ParameterError("reps must be at least 1")
    H = spec.extra_horizon
    if H < 1:
        raise ParameterError("this world simulates no monitoring period")
    horizons = (H,) if horizons is None else tuple(int(h) for h in horizons)
    if not horizons or min(horizons) < 1 or max(horizons) > H:
        raise ParameterError(f"horizons must lie in [1, {H}]")

    grid = [(g, a) for g in gammas for a in alphas]
    boundaries = [BoundaryParams(table_value(g, a) if c is None else c, g, corrected)
                  for g, a in grid]
    bounds = chunk_bounds(reps, chunk)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda b: _scan_chunk(spec, b[0], b[1], boundaries), bounds))
    else:
        parts = [_scan_chunk(spec, lo, hi, boundaries) for lo, hi in bounds]
    taus = np.concatenate(parts, axis=1)

    change = spec.change
    results = []
    for (g, a), params, t in zip(grid, boundaries, taus):
        hit = t > 0
        detections = tuple(int(np.count_nonzero(hit & (t <= h))) for h in horizons)
        results.append(CellResult(
            dgp=_short_name(spec), M=spec.M, gamma=g, alpha=a, c=params.c,
            s_star=None if change is None else change.s_star,
            delta_d=None if change is None else change.delta_d,
            reps=reps, horizons=horizons, detections=detections, taus=t,
            excluded=int(np.count_nonzero(t < 0)),
        ))
    return results


def _short_name(spec: DgpSpec) -> str:
    name = spec.name
    if name.startswith("DGP(") and name.endswith(")"):
        return name[4:-1]
    return name


# ---------------------------------------------------------------- studies

def _check_ids(plan: ExperimentPlan, allowed: Tuple[str, ...], what: str):
    wrong = [i for i in plan.dgp_ids if i not in allowed]
    if wrong:
        raise MisuseError(f"{what} accepts DGP {allowed[0]}..{allowed[-1]} only; got {wrong}")


def run_size_study(plan: ExperimentPlan) -> ExperimentReport:
    """
    False-detection rates of the null worlds i-iv at horizons M, 2M, ..., kM
    with k = ``plan.horizon_multiple``.

    Raises:
        MisuseError: the plan names a world with a change
    """
    _check_ids(plan, NULL_IDS, "a size study")
    start = time.perf_counter()
    k = plan.horizon_multiple
    cells: List[CellResult] = []
    for dgp_id in plan.dgp_ids:
        for M in plan.Ms:
            spec = make_dgp(dgp_id, M, seed=cell_seed(plan.master_seed, dgp_id, M),
                            extra_horizon=k * M, burn_in=plan.burn_in)
            t0 = time.perf_counter()
            cells.extend(run_cell(spec, plan.gammas, plan.alphas, plan.reps,
                                  horizons=[i * M for i in range(1, k + 1)], c=plan.c,
                                  corrected=plan.corrected, chunk=plan.chunk,
                                  workers=plan.workers))
            logger.info("size DGP(%s) M=%d done in %.1fs", dgp_id, M, time.perf_counter() - t0)
    return ExperimentReport("size", tuple(cells), plan, time.perf_counter() - start)


def _deltas_for(plan: ExperimentPlan, dgp_id: str) -> Tuple[float, ...]:
    allowed = admissible_deltas(dgp_id)
    if not plan.deltas:
        return allowed
    chosen = tuple(d for d in plan.deltas if any(abs(d - a) < 1e-9 for a in allowed))
    if not chosen:
        raise ParameterError(f"none of {plan.deltas} is admissible for DGP({dgp_id}) {allowed}")
    return chosen


def run_power_study(plan: ExperimentPlan) -> ExperimentReport:
    """
    Percent of replications stopped within ``horizon_multiple * M`` monitoring
    steps under the alternative worlds v-xii. Censored runs are non-detections.

    Raises:
        MisuseError: the plan names a null world
    """
    _check_ids(plan, ALTERNATIVE_IDS, "a power study")
    start = time.perf_counter()
    cells: List[CellResult] = []
    for dgp_id in plan.dgp_ids:
        for delta_d in _deltas_for(plan, dgp_id):
            for M in plan.Ms:
                for s_star in plan.s_stars:
                    seed = cell_seed(plan.master_seed, dgp_id, M, s_star, delta_d)
                    spec = make_dgp(dgp_id, M, s_star=s_star, delta_d=delta_d, seed=seed,
                                    extra_horizon=plan.horizon_multiple * M,
                                    burn_in=plan.burn_in)
                    t0 = time.perf_counter()
                    cells.extend(run_cell(spec, plan.gammas, plan.alphas, plan.reps,
                                          c=plan.c, corrected=plan.corrected,
                                          chunk=plan.chunk, workers=plan.workers))
                    logger.info("power DGP(%s) delta=%.2f M=%d s*=%d done in %.1fs",
                                dgp_id, delta_d, M, s_star, time.perf_counter() - t0)
    return ExperimentReport("power", tuple(cells), plan, time.perf_counter() - start)


@dataclass(frozen=True)
class TauDensity:
    """Histogram and kernel density of the uncensored stopping times."""

    taus: np.ndarray = field(repr=False)
    censored_fraction: float
    edges: np.ndarray = field(repr=False)
    histogram: np.ndarray = field(repr=False)
    grid: np.ndarray = field(repr=False)
    density: np.ndarray = field(repr=False)

    def mass_below(self, tau: float) -> float:
        """Fraction of the uncensored stopping times that are at most ``tau``."""
        if self.taus.size == 0:
            return 0.0
        return float(np.mean(self.taus <= tau))

    def histogram_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"left": self.edges[:-1], "right": self.edges[1:],
                             "density": self.histogram})

    def density_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"tau": self.grid, "density": self.density})


def tau_density(spec: DgpSpec, reps: int, gamma: float = 0.0, alpha: float = 0.05,
                c: Optional[float] = None, corrected: bool = True, bins: int = 50,
                points: int = 200, chunk: int = DEFAULT_CHUNK,
                workers: int = 1) -> TauDensity:
    """
    Empirical distribution of the stopping time under an alternative world.

    Raises:
        MisuseError: ``spec`` has no change
    """
    if spec.change is None:
        raise MisuseError("the stopping-time density needs a world with a change")
    (cell,) = run_cell(spec, [gamma], [alpha], reps, c=c, corrected=corrected,
                       chunk=chunk, workers=workers)
    taus = cell.stopped.astype(float)
    censored = 1.0 - taus.size / cell.monitored if cell.monitored else 1.0
    if taus.size == 0:
        empty = np.empty(0)
        return TauDensity(taus, censored, empty, empty, empty, empty)
    hist, edges = np.histogram(taus, bins=bins, density=True)
    lo, hi = taus.min(), taus.max()
    if hi > lo:
        grid = np.linspace(lo, hi, points)
        density = stats.gaussian_kde(taus)(grid)
    else:
        # every run stopped at the same step: a point mass of probability one
        grid, density = np.array([lo]), np.array([1.0])
    logger.info("tau density %s: %d stopped, %.2f%% censored", spec.name, taus.size,
                100.0 * censored)
    return TauDensity(taus, censored, edges, hist, grid, density)


# ---------------------------------------------------------------- output

def write_report(report: ExperimentReport, out_dir: str) -> Dict[str, str]:
    """cells.csv, curves.csv, summary.json and manifest.json under ``out_dir``."""
    ensure_dir(out_dir)
    paths = {
        "cells": save_results_csv(report.to_frame(), os.path.join(out_dir, "cells.csv")),
        "summary": save_json(report.summary(), os.path.join(out_dir, "summary.json")),
        "manifest": write_manifest(out_dir, f"simulate-{report.kind}", report.plan.to_dict(),
                                   seed=report.plan.master_seed, reps=report.plan.reps),
    }
    if report.kind == "size":
        paths["curves"] = save_results_csv(report.curve_frame(),
                                           os.path.join(out_dir, "curves.csv"))
    return paths


def write_density(result: TauDensity, spec: DgpSpec, reps: int, out_dir: str,
                  settings: Dict) -> Dict[str, str]:
    ensure_dir(out_dir)
    config = {"spec": spec.to_dict(), **settings}
    return {
        "histogram": save_results_csv(result.histogram_frame(),
                                      os.path.join(out_dir, "tau_histogram.csv")),
        "density": save_results_csv(result.density_frame(),
                                    os.path.join(out_dir, "tau_density.csv")),
        "summary": save_json({"stopped": int(result.taus.size), "reps": reps,
                              "censored_fraction": result.censored_fraction},
                             os.path.join(out_dir, "summary.json")),
        "manifest": write_manifest(out_dir, "tau-density", config, seed=spec.seed, reps=reps),
    }
