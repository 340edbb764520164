"""
Critical values c(gamma, alpha): the (1 - alpha) quantile of

    sup_{0 < u <= upper} |W(u)| / u^gamma

from the built-in table, a Monte Carlo simulation of the Wiener functional,
or (gamma = 0 only) the reflection series of sup |W|.
"""

import logging
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Dict, Iterator, Optional, Tuple

import numpy as np
from scipy import optimize, stats

from .errors import GridBiasWarning, ParameterError, TableLookupError
from .rng import chunk_bounds, substream

logger = logging.getLogger(__name__)

TABLE_ALPHAS: Tuple[float, ...] = (0.010, 0.025, 0.050, 0.100, 0.250)

# rows: gamma; columns: TABLE_ALPHAS
CRITICAL_VALUE_TABLE: Dict[float, Tuple[float, ...]] = {
    0.00: (2.7912, 2.4948, 2.2365, 1.9497, 1.5213),
    0.15: (2.8516, 2.5475, 2.2996, 2.0273, 1.6126),
    0.25: (2.9445, 2.6396, 2.3860, 2.1060, 1.7039),
    0.35: (3.0475, 2.7394, 2.5050, 2.2433, 1.8467),
    0.45: (3.3015, 3.0144, 2.7992, 2.5437, 2.1729),
    0.49: (3.5705, 3.2944, 3.0722, 2.8259, 2.4487),
}
TABLE_GAMMAS: Tuple[float, ...] = tuple(CRITICAL_VALUE_TABLE)

BIAS_WARN_GAMMA = 0.47
SOURCES = ("table", "simulation", "analytic")
_CHUNK = 256


def table_rows() -> Iterator[Tuple[float, float, float]]:
    """Yield (gamma, alpha, c) for every entry of the built-in table."""
    for gamma, row in CRITICAL_VALUE_TABLE.items():
        for alpha, c in zip(TABLE_ALPHAS, row):
            yield gamma, alpha, c


def _match(value: float, grid: Tuple[float, ...]) -> Optional[int]:
    for i, g in enumerate(grid):
        if abs(value - g) < 1e-9:
            return i
    return None


def table_value(gamma: float, alpha: float) -> float:
    """Exact table entry; values off the table are refused, never interpolated."""
    gi = _match(gamma, TABLE_GAMMAS)
    ai = _match(alpha, TABLE_ALPHAS)
    if gi is None or ai is None:
        raise TableLookupError(
            f"(gamma={gamma}, alpha={alpha}) is not in the built-in table; "
            f"gamma in {list(TABLE_GAMMAS)}, alpha in {list(TABLE_ALPHAS)}. "
            "Use the simulation source for other values."
        )
    return CRITICAL_VALUE_TABLE[TABLE_GAMMAS[gi]][ai]


@dataclass(frozen=True)
class WienerSupSample:
    """Sorted simulated realisations of sup_{0<u<=upper} |W(u)|/u^gamma."""

    gamma: float
    upper: float
    values: np.ndarray
    grid_size: int
    reps: int
    seed: int

    def quantile(self, p: float) -> float:
        return float(np.quantile(self.values, p))

    def quantile_standard_error(self, p: float) -> float:
        """Monte Carlo standard error of the p-quantile from order statistics."""
        n = self.values.size
        if n < 2:
            return float("nan")
        half = math.sqrt(p * (1.0 - p) / n)
        lo = int(np.clip(math.floor(n * (p - half)), 0, n - 1))
        hi = int(np.clip(math.ceil(n * (p + half)), 0, n - 1))
        return float(self.values[hi] - self.values[lo]) / 2.0


def _check_sim_args(gamma: float, upper: float, grid_size: int, reps: int):
    if not (0.0 <= gamma < 0.5):
        raise ParameterError(f"gamma must lie in [0, 0.5), got {gamma}")
    if not (0.0 < upper <= 1.0):
        raise ParameterError(f"upper must lie in (0, 1], got {upper}")
    if grid_size < 100:
        raise ParameterError(f"grid_size must be at least 100, got {grid_size}")
    if reps < 1:
        raise ParameterError(f"reps must be at least 1, got {reps}")


def _sup_chunk(lo: int, hi: int, gamma: float, upper: float, grid_size: int,
               seed: int) -> np.ndarray:
    dt = upper / grid_size
    u = dt * np.arange(1, grid_size + 1)
    weight = u ** (-gamma)
    out = np.empty(hi - lo)
    increments = np.empty((hi - lo, grid_size))
    for j, r in enumerate(range(lo, hi)):
        increments[j] = substream(seed, r).standard_normal(grid_size)
    w = np.cumsum(increments, axis=1)
    w *= math.sqrt(dt)
    np.abs(w, out=w)
    w *= weight
    out[:] = w.max(axis=1)
    return out


def simulate_sup_wiener(gamma: float, upper: float = 1.0, grid_size: int = 10_000,
                        reps: int = 50_000, seed: int = 0,
                        workers: int = 1) -> WienerSupSample:
    """
    Simulate the Wiener functional on an equispaced grid excluding u = 0.

    Args:
        gamma: boundary curvature in [0, 0.5)
        upper: right end of the sup range, in (0, 1]
        grid_size: number of grid points (first point is upper/grid_size)
        reps: number of realisations; replication r uses substream r
        seed: master seed
        workers: threads used for replication chunks (results do not depend on it)

    Returns:
        WienerSupSample with sorted values
    """
    _check_sim_args(gamma, upper, grid_size, reps)
    if gamma >= BIAS_WARN_GAMMA:
        warnings.warn(
            f"simulated critical values for gamma={gamma} >= {BIAS_WARN_GAMMA} carry a "
            "noticeable discretisation bias; prefer the table source",
            GridBiasWarning,
            stacklevel=2,
        )

    bounds = chunk_bounds(reps, _CHUNK)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(
                lambda b: _sup_chunk(b[0], b[1], gamma, upper, grid_size, seed), bounds
            ))
    else:
        parts = [_sup_chunk(lo, hi, gamma, upper, grid_size, seed) for lo, hi in bounds]
    values = np.sort(np.concatenate(parts))
    values.setflags(write=False)
    logger.debug("simulated %d sup-Wiener values (gamma=%s, upper=%s)", reps, gamma, upper)
    return WienerSupSample(gamma, upper, values, grid_size, reps, seed)


def sup_abs_wiener_cdf(x: float, upper: float = 1.0, terms: int = 60) -> float:
    """
    P(sup_{0<=u<=upper} |W(u)| < x) by the method of images:

        sum_k (-1)^k [Phi((2k+1) y) - Phi((2k-1) y)],  y = x / sqrt(upper)
    """
    if x <= 0.0:
        return 0.0
    y = x / math.sqrt(upper)
    k = np.arange(-terms, terms + 1)
    signs = np.where(k % 2 == 0, 1.0, -1.0)
    val = np.sum(signs * (stats.norm.cdf((2 * k + 1) * y) - stats.norm.cdf((2 * k - 1) * y)))
    return float(np.clip(val, 0.0, 1.0))


def sup_abs_wiener_quantile(p: float, upper: float = 1.0) -> float:
    """Inverse of :func:`sup_abs_wiener_cdf`."""
    if not (0.0 < p < 1.0):
        raise ParameterError(f"probability must lie in (0, 1), got {p}")
    hi = 1.0
    while sup_abs_wiener_cdf(hi, upper) < p:
        hi *= 2.0
    return float(optimize.brentq(lambda x: sup_abs_wiener_cdf(x, upper) - p, 1e-9, hi, xtol=1e-12))


@dataclass(frozen=True)
class CriticalValue:
    """A critical value together with where it came from."""

    value: float
    gamma: float
    alpha: float
    source: str
    upper: float = 1.0
    standard_error: float = 0.0
    reps: int = 0
    grid_size: int = 0
    seed: Optional[int] = None

    def as_dict(self) -> dict:
        return {
            "c": self.value,
            "gamma": self.gamma,
            "alpha": self.alpha,
            "source": self.source,
            "upper": self.upper,
            "standard_error": self.standard_error,
            "reps": self.reps,
            "grid_size": self.grid_size,
            "seed": self.seed,
        }


def resolve_critical_value(gamma: float, alpha: float, source: str = "table",
                           grid_size: int = 10_000, reps: int = 50_000, seed: int = 0,
                           upper: float = 1.0, workers: int = 1) -> CriticalValue:
    """Critical value with provenance, for any of the three sources."""
    if source not in SOURCES:
        raise ParameterError(f"unknown critical value source {source!r}; use one of {SOURCES}")
    if not (0.0 < alpha < 1.0):
        raise ParameterError(f"alpha must lie in (0, 1), got {alpha}")
    if not (0.0 <= gamma < 0.5):
        raise ParameterError(f"gamma must lie in [0, 0.5), got {gamma}")

    if source == "table":
        if upper != 1.0:
            raise TableLookupError("the built-in table covers open-ended monitoring only")
        return CriticalValue(table_value(gamma, alpha), gamma, alpha, "table")
    if source == "analytic":
        if gamma != 0.0:
            raise ParameterError("the analytic source is available for gamma = 0 only")
        return CriticalValue(sup_abs_wiener_quantile(1.0 - alpha, upper), gamma, alpha,
                             "analytic", upper=upper)

    sample = simulate_sup_wiener(gamma, upper, grid_size, reps, seed, workers=workers)
    p = 1.0 - alpha
    return CriticalValue(
        sample.quantile(p), gamma, alpha, "simulation", upper=upper,
        standard_error=sample.quantile_standard_error(p),
        reps=reps, grid_size=grid_size, seed=seed,
    )


def critical_value(gamma: float, alpha: float, source: str = "table",
                   grid_size: int = 10_000, reps: int = 50_000, seed: int = 0,
                   workers: int = 1) -> float:
    """
    c(gamma, alpha) for open-ended monitoring.

    Table mode returns the exact stored entry; simulation mode the empirical
    (1 - alpha) quantile of :func:`simulate_sup_wiener`.
    """
    return resolve_critical_value(gamma, alpha, source, grid_size, reps, seed,
                                  workers=workers).value


def closed_end_upper(c_star: float) -> float:
    if not (c_star > 0.0):
        raise ParameterError(f"c_star must be positive, got {c_star}")
    return c_star / (1.0 + c_star)


def closed_end_critical_value(gamma: float, alpha: float, c_star: float,
                              grid_size: int = 10_000, reps: int = 50_000,
                              seed: int = 0, workers: int = 1) -> float:
    """Critical value when monitoring stops after N ~ c_star * M observations."""
    upper = closed_end_upper(c_star)
    return resolve_critical_value(gamma, alpha, "simulation", grid_size, reps, seed,
                                  upper=upper, workers=workers).value
