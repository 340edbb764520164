"""
Stopping-time asymptotics under the alternatives.

Stationary alternative: (tau - a_M) / b_M -> N(0, 1).
Random walk alternative: c_M, d_M centring/scaling, or the integrated-Wiener
limit law when the regression change is small.
Explosive alternative: threshold location and the argument of 1 - F(.).
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
from scipy import stats

from .dgp import RegressorProcess, gen_regressors
from .errors import ParameterError
from .rng import chunk_bounds, substream
from .stationarity import long_run_variance

logger = logging.getLogger(__name__)

DEFAULT_GRID_PER_UNIT = 10_000
_CHUNK = 128


@dataclass(frozen=True)
class ChangeMagnitude:
    delta: float
    c_A: np.ndarray

    @property
    def ey_A(self) -> float:
        return float(self.c_A[-1])


def delta_measure(beta0: Sequence[float], delta_M: Sequence[float],
                  exog_means: Optional[Sequence[float]] = None) -> ChangeMagnitude:
    """
    Delta = c_A'(beta0 - delta_M) with c_A = (1, E x_2, ..., E x_{d-1}, E y_A)
    and E y_A = E w' delta_bar / (1 - delta_d).

    Raises:
        ParameterError: if |delta_d| >= 1 (not a stationary alternative)
    """
    beta0 = np.asarray(beta0, dtype=float)
    delta_M = np.asarray(delta_M, dtype=float)
    if beta0.shape != delta_M.shape or beta0.size < 2:
        raise ParameterError("beta0 and delta_M must be d-vectors with d >= 2")
    d = beta0.size
    means = np.zeros(d - 2) if exog_means is None else np.asarray(exog_means, dtype=float)
    if means.size != d - 2:
        raise ParameterError(f"expected {d - 2} regressor means, got {means.size}")
    delta_d = delta_M[-1]
    if abs(delta_d) >= 1.0:
        raise ParameterError(f"stationary alternative needs |delta_d| < 1, got {delta_d}")

    ew = np.concatenate(([1.0], means))
    ey_A = float(ew @ delta_M[:-1]) / (1.0 - delta_d)
    c_A = np.concatenate((ew, [ey_A]))
    return ChangeMagnitude(float(c_A @ (beta0 - delta_M)), c_A)


def _check_gamma(gamma: float):
    if not (0.0 <= gamma < 0.5):
        raise ParameterError(f"gamma must lie in [0, 0.5), got {gamma}")


def am_bm(delta: float, M: int, c: float, sigma: float, gamma: float) -> Tuple[float, float]:
    """Centring a_M and scale b_M of the stopping time under a stationary alternative."""
    _check_gamma(gamma)
    if delta == 0.0:
        raise ParameterError("Delta = 0: the stopping time has no finite centre")
    if M < 1:
        raise ParameterError("M must be at least 1")
    ad = abs(delta)
    a_M = (c * sigma * M ** (0.5 - gamma) / ad) ** (1.0 / (1.0 - gamma))
    b_M = sigma * math.sqrt(a_M) / ((1.0 - gamma) * ad)
    return a_M, b_M


def bm_alternative_form(delta: float, M: int, c: float, sigma: float, gamma: float) -> float:
    """b_M written through a_M^gamma; algebraically equal to the form in :func:`am_bm`."""
    a_M, _ = am_bm(delta, M, c, sigma, gamma)
    ad = abs(delta)
    inner = (c ** (0.5 - gamma) * sigma ** (1.5 - 2 * gamma) * M ** ((0.5 - gamma) ** 2)
             / ad ** (1.5 - 2 * gamma))
    return a_M ** gamma / (1.0 - gamma) * inner ** (1.0 / (1.0 - gamma))


@dataclass(frozen=True)
class RandomWalkParams:
    fa1: float
    fb1_sq: float

    @property
    def fb1(self) -> float:
        return math.sqrt(self.fb1_sq)


def _analytic_long_run_variance(weights: np.ndarray, proc: RegressorProcess) -> float:
    if proc.kind == "ar1":
        psi1 = weights / (1.0 - np.asarray(proc.rho))
        if proc.shared_innovations:
            return float(psi1.sum() ** 2)
        return float(psi1 @ psi1)
    if proc.shared_innovations:
        raise ParameterError(
            "no closed form for GARCH regressors with a shared innovation; "
            "use estimation='simulation'"
        )
    # martingale differences: only lag-0 covariances survive
    return float(weights ** 2 @ proc.variances)


def fa1_fb1(delta_bar: Sequence[float], beta0_bar: Sequence[float],
            regressor_proc: RegressorProcess, sigma_sq: float,
            estimation: str = "analytic", n: int = 200_000, seed: int = 0,
            exog_means: Optional[Sequence[float]] = None) -> RandomWalkParams:
    """
    Size of a change to a random walk:

        fa1   = E w_0'(delta_bar - beta0_bar)
        fb1^2 = sigma^2 + sum_s cov(w_0' delta_bar, w_s' delta_bar)

    Args:
        delta_bar, beta0_bar: intercept followed by the regressor weights
        regressor_proc: stationary regressor process
        sigma_sq: error variance
        estimation: "analytic" (AR(1) or independent GARCH) or "simulation"
            (Bartlett long-run variance of a simulated path of length ``n``)
        exog_means: regressor means (zero for the built-in processes)
    """
    delta_bar = np.asarray(delta_bar, dtype=float)
    beta0_bar = np.asarray(beta0_bar, dtype=float)
    k = regressor_proc.k
    if delta_bar.size != k + 1 or beta0_bar.size != k + 1:
        raise ParameterError(f"delta_bar and beta0_bar need {k + 1} entries")
    if sigma_sq < 0.0:
        raise ParameterError("sigma_sq must be non-negative")
    means = np.zeros(k) if exog_means is None else np.asarray(exog_means, dtype=float)
    ew = np.concatenate(([1.0], means))
    fa1 = float(ew @ (delta_bar - beta0_bar))

    weights = delta_bar[1:]
    if estimation == "analytic":
        lrv = _analytic_long_run_variance(weights, regressor_proc)
    elif estimation == "simulation":
        x = gen_regressors(regressor_proc, n, seed=seed)
        lrv = long_run_variance(x @ weights)
    else:
        raise ParameterError(f"unknown estimation mode {estimation!r}")
    return RandomWalkParams(fa1, sigma_sq + lrv)


def cm_dm(fa1: float, fb1: float, M: int, c: float, sigma: float, gamma: float,
          beta0_d: float) -> Tuple[float, float]:
    """
    Centring c_M and scale d_M under a random walk alternative with a larger regression change.

    c_M solves (1 - beta0_d) fa1 s^2 / 2 = c sigma M^{1/2-gamma} s^gamma, so a larger
    drift stops earlier; d_M reduces to 2 fb1 c_M^{1/2} / ((2 - gamma) sqrt(3) |fa1|).
    """
    _check_gamma(gamma)
    if fa1 == 0.0:
        raise ParameterError("fa1 = 0: use the integrated Wiener limit instead")
    if beta0_d >= 1.0:
        raise ParameterError(f"beta0_d must be below 1, got {beta0_d}")
    a1 = abs(fa1)
    g = gamma
    c_M = ((2.0 * c * sigma / (1.0 - beta0_d)) ** (1.0 / (2.0 - g))
           * a1 ** (-1.0 / (2.0 - g))
           * M ** ((1.0 - 2.0 * g) / (4.0 - 2.0 * g)))
    # c and sigma only ever appear as c * sigma
    d_0 = (1.0 / (2.0 - g) * fb1 / math.sqrt(3.0)
           * (c * sigma / (1.0 - beta0_d)) ** ((3.0 - 2.0 * g) / (4.0 - 2.0 * g))
           * 2.0 ** ((7.0 - 4.0 * g) / (4.0 - 2.0 * g)))
    d_M = (d_0 * a1 ** (-(7.0 - 4.0 * g) / (4.0 - 2.0 * g))
           * M ** ((1.0 - 2.0 * g) * (3.0 - 2.0 * g) / (8.0 - 4.0 * g))
           * c_M ** (g - 1.0))
    return c_M, d_M


def rw_time_scale(M: int, gamma: float) -> float:
    """M^{(1-2 gamma)/(3-2 gamma)}, the scale of tau in the integrated Wiener limit."""
    return M ** ((1.0 - 2.0 * gamma) / (3.0 - 2.0 * gamma))


def _grid(x: float, grid: int) -> Tuple[int, float]:
    if not x > 0.0:
        raise ParameterError(f"x must be positive, got {x}")
    if grid < 10:
        raise ParameterError("grid must have at least 10 points per unit")
    n = max(int(math.ceil(grid * x)), 10)
    return n, x / n


def _integrated_paths(lo: int, hi: int, n: int, dt: float, seed: int) -> np.ndarray:
    """Trapezoid integrals of W at the grid points, for replications lo..hi-1."""
    inc = np.empty((hi - lo, n))
    for j, r in enumerate(range(lo, hi)):
        inc[j] = substream(seed, r).standard_normal(n)
    w = np.cumsum(inc, axis=1) * math.sqrt(dt)
    prev = np.concatenate((np.zeros((hi - lo, 1)), w[:, :-1]), axis=1)
    return np.cumsum((prev + w) * (dt / 2.0), axis=1)


def simulate_integrated_wiener(x: float, reps: int = 100_000,
                               grid: int = DEFAULT_GRID_PER_UNIT, seed: int = 0) -> np.ndarray:
    """Realisations of int_0^x W(u) du (variance x^3/3)."""
    n, dt = _grid(x, grid)
    return np.concatenate([
        _integrated_paths(lo, hi, n, dt, seed)[:, -1] for lo, hi in chunk_bounds(reps, _CHUNK)
    ])


def simulate_rw_functional(x: float, gamma: float, beta0_d: float, fb1: float,
                           fa1_bar: float, reps: int = 10_000,
                           grid: int = DEFAULT_GRID_PER_UNIT, seed: int = 0) -> np.ndarray:
    """
    Realisations of max_{0<s<=x} (1 - beta0_d) s^{-gamma} |fb1 int_0^s W + fa1_bar s^2 / 2|.
    """
    _check_gamma(gamma)
    if reps < 1:
        raise ParameterError("reps must be at least 1")
    n, dt = _grid(x, grid)
    s = dt * np.arange(1, n + 1)
    drift = fa1_bar * s * s / 2.0
    weight = (1.0 - beta0_d) * s ** (-gamma)
    out = []
    for lo, hi in chunk_bounds(reps, _CHUNK):
        if fb1 == 0.0:
            integ = np.zeros((hi - lo, n))
        else:
            integ = fb1 * _integrated_paths(lo, hi, n, dt, seed)
        out.append((np.abs(integ + drift) * weight).max(axis=1))
    return np.concatenate(out)


def simulate_rw_limit(x: float, gamma: float, beta0_d: float, fb1: float, fa1_bar: float,
                      c: float, sigma: float, reps: int = 10_000,
                      grid: int = DEFAULT_GRID_PER_UNIT, seed: int = 0) -> float:
    """
    Monte Carlo estimate of lim P{tau_M <= x M^{(1-2 gamma)/(3-2 gamma)}}, i.e. the
    probability that the integrated Wiener functional exceeds c sigma.
    """
    sample = simulate_rw_functional(x, gamma, beta0_d, fb1, fa1_bar, reps, grid, seed)
    return float(np.mean(sample > c * sigma))


@dataclass(frozen=True)
class ExplosiveParams:
    delta_d_bar: float
    beta0_d: float
    s_star: int

    def __post_init__(self):
        if abs(self.delta_d_bar) <= 1.0:
            raise ParameterError(f"explosive alternative needs |delta_d| > 1, got {self.delta_d_bar}")


@dataclass(frozen=True)
class ExplosiveThreshold:
    location: float
    f_argument: float


def explosive_threshold(params: ExplosiveParams, M: int, gamma: float, x: float,
                        c: float, sigma: float) -> ExplosiveThreshold:
    """
    Location s* + x + ((1/2 - gamma) log M + gamma log log M) / log|delta_d| and the
    argument |delta_d|^{-x} c sigma |delta_d - 1| / |delta_d - beta0_d| of 1 - F.
    """
    _check_gamma(gamma)
    if M < 3:
        raise ParameterError("M must be at least 3 so that log log M is defined")
    dd = params.delta_d_bar
    log_d = math.log(abs(dd))
    shift = ((0.5 - gamma) * math.log(M) + gamma * math.log(math.log(M))) / log_d
    arg = abs(dd) ** (-x) * c * sigma * abs(dd - 1.0) / abs(dd - params.beta0_d)
    return ExplosiveThreshold(params.s_star + x + shift, arg)


def explosive_limit_probability(f_argument: float,
                                cdf: Optional[Callable[[float], float]] = None) -> float:
    """1 - F(argument); F defaults to the standard normal distribution function."""
    cdf = stats.norm.cdf if cdf is None else cdf
    return 1.0 - float(cdf(f_argument))
