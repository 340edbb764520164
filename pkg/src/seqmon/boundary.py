"""
Boundary functions and the residual CUSUM detector.

    g(M, s)    = c M^{1/2} (1 + s/M) (s / (M + s))^gamma
    ghat(M, s) = c (1 + (1 + gamma) sigma_hat / M^{1/2}) M^{1/2} (1 + s/M) (s / (M + s))^gamma
    Gamma(M, s) = |sum_{u=M+1}^{M+s} e_u| / sigma_hat
"""

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import DegenerateVarianceError, ParameterError

ArrayLike = Union[int, float, np.ndarray]


@dataclass(frozen=True)
class BoundaryParams:
    """Critical constant, curvature and the optional finite-sample correction."""

    c: float
    gamma: float
    corrected: bool = True
    sigma_hat: float = 0.0

    def __post_init__(self):
        if not (0.0 <= self.gamma < 0.5):
            raise ParameterError(f"gamma must lie in [0, 0.5), got {self.gamma}")
        if not (self.c > 0.0) or not math.isfinite(self.c):
            raise ParameterError(f"critical value c must be positive and finite, got {self.c}")
        if self.sigma_hat < 0.0 or not math.isfinite(self.sigma_hat):
            raise ParameterError(f"sigma_hat must be non-negative, got {self.sigma_hat}")

    def with_sigma(self, sigma_hat: float) -> "BoundaryParams":
        return BoundaryParams(self.c, self.gamma, self.corrected, float(sigma_hat))


def _shape(M: int, s: ArrayLike, gamma: float):
    if M < 1:
        raise ParameterError(f"training size M must be at least 1, got {M}")
    s_arr = np.asarray(s)
    if np.any(s_arr < 0):
        raise ParameterError("monitoring step s must be non-negative")
    # exact integer sums, converted once
    total = np.asarray(s_arr + M, dtype=float)
    s_f = np.asarray(s_arr, dtype=float)
    ratio = s_f / total
    out = math.sqrt(M) * (total / M) * np.power(ratio, gamma)
    return out if out.ndim else float(out)


def boundary_raw(M: int, s: ArrayLike, params: BoundaryParams) -> ArrayLike:
    """c M^{1/2} (1 + s/M) (s/(M+s))^gamma; vectorised over ``s``."""
    return params.c * _shape(M, s, params.gamma)


def correction_factor(M: int, params: BoundaryParams) -> float:
    return 1.0 + (1.0 + params.gamma) * params.sigma_hat / math.sqrt(M)


def boundary_corrected(M: int, s: ArrayLike, params: BoundaryParams) -> ArrayLike:
    """Raw boundary times ``1 + (1 + gamma) sigma_hat / M^{1/2}``."""
    return correction_factor(M, params) * boundary_raw(M, s, params)


def boundary(M: int, s: ArrayLike, params: BoundaryParams) -> ArrayLike:
    """Corrected or raw boundary depending on ``params.corrected``."""
    if params.corrected:
        return boundary_corrected(M, s, params)
    return boundary_raw(M, s, params)


def detector(cum_resid: ArrayLike, sigma_hat: float) -> ArrayLike:
    """|running residual sum| / sigma_hat."""
    if not sigma_hat > 0.0:
        raise DegenerateVarianceError(
            "sigma_hat is zero: training residuals are identically zero"
        )
    out = np.abs(cum_resid) / sigma_hat
    return out if np.ndim(out) else float(out)


class CompensatedSum:
    """Running sum with Neumaier error compensation."""

    __slots__ = ("_sum", "_comp", "count")

    def __init__(self):
        self._sum = 0.0
        self._comp = 0.0
        self.count = 0

    def add(self, value: float) -> float:
        value = float(value)
        t = self._sum + value
        if abs(self._sum) >= abs(value):
            self._comp += (self._sum - t) + value
        else:
            self._comp += (value - t) + self._sum
        self._sum = t
        self.count += 1
        return self.value

    @property
    def value(self) -> float:
        return self._sum + self._comp


def compensated_cumsum(values: np.ndarray) -> np.ndarray:
    """
    Running sums along the last axis with the same Neumaier update as
    :class:`CompensatedSum`, so a batch scan reproduces the online detector
    bit for bit.
    """
    values = np.asarray(values, dtype=float)
    out = np.empty_like(values)
    total = np.zeros(values.shape[:-1])
    comp = np.zeros(values.shape[:-1])
    with np.errstate(over="ignore", invalid="ignore"):
        for j in range(values.shape[-1]):
            v = values[..., j]
            t = total + v
            comp = comp + np.where(np.abs(total) >= np.abs(v), (total - t) + v, (v - t) + total)
            total = t
            out[..., j] = total + comp
    return out
