"""
Regression with an autoregressive term: design rows, least squares fit on
the training window and residuals.

A design row at time t is ``(1, x_{t,2}, ..., x_{t,d-1}, y_{t-1})``.
"""

import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy import linalg

from .errors import DimensionError, ParameterError, SingularityError

logger = logging.getLogger(__name__)

# reciprocal condition number of the column-equilibrated Gram matrix
RCOND_THRESHOLD = 1e-12


def _as_exog(exog, n: int) -> np.ndarray:
    """Coerce exogenous input to an (n, d-2) float array."""
    if exog is None:
        return np.empty((n, 0))
    arr = np.asarray(exog, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(n, -1) if arr.size else np.empty((n, 0))
    if arr.ndim != 2 or arr.shape[0] != n:
        raise DimensionError(
            f"exogenous regressors have shape {arr.shape}, expected ({n}, d-2)"
        )
    return arr


def build_design(y, exog=None, start_index: int = 2) -> Tuple[np.ndarray, np.ndarray]:
    """
    Build design rows ``(1, exog_t, y_{t-1})`` paired with ``y_t``.

    Args:
        y: response series
        exog: (n, d-2) exogenous regressors aligned with ``y``
        start_index: 1-based index of the first emitted row, at least 2

    Returns:
        (rows, responses) with ``len(y) - (start_index - 1)`` entries
        (empty when the series is too short)
    """
    y = np.asarray(y, dtype=float).ravel()
    n = y.size
    if exog is not None and len(exog) != n:
        raise DimensionError(f"y has {n} observations but exog has {len(exog)}")
    x = _as_exog(exog, n)
    if start_index < 2:
        raise ParameterError("start_index must be at least 2 so the lag exists")

    first = start_index - 1  # 0-based position of the first emitted response
    if first >= n:
        return np.empty((0, x.shape[1] + 2)), np.empty(0)

    m = n - first
    rows = np.empty((m, x.shape[1] + 2))
    rows[:, 0] = 1.0
    rows[:, 1:-1] = x[first:]
    rows[:, -1] = y[first - 1 : n - 1]
    return rows, y[first:].copy()


@dataclass(frozen=True)
class TrainingSample:
    """M design rows and their responses."""

    rows: np.ndarray
    responses: np.ndarray

    def __post_init__(self):
        rows = np.atleast_2d(np.asarray(self.rows, dtype=float))
        resp = np.asarray(self.responses, dtype=float).ravel()
        if rows.shape[0] != resp.size:
            raise DimensionError(
                f"{rows.shape[0]} design rows but {resp.size} responses"
            )
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "responses", resp)

    @property
    def M(self) -> int:
        return self.responses.size

    @property
    def d(self) -> int:
        return self.rows.shape[1]

    @classmethod
    def from_series(cls, y, exog=None, y0: Optional[float] = None) -> "TrainingSample":
        """
        Training sample from a response series.

        With ``y0`` given, every observation of ``y`` is a training response and
        ``y0`` is the lag of the first one. Without it the first observation
        is consumed as a warm-up lag.
        """
        y = np.asarray(y, dtype=float).ravel()
        if y0 is None:
            rows, resp = build_design(y, exog, start_index=2)
            return cls(rows, resp)
        n = y.size
        x = _as_exog(exog, n)
        rows = np.empty((n, x.shape[1] + 2))
        rows[:, 0] = 1.0
        rows[:, 1:-1] = x
        rows[:, -1] = np.concatenate(([float(y0)], y[:-1]))
        return cls(rows, y.copy())


@dataclass(frozen=True)
class FittedModel:
    """Least squares output of the training window. Arrays are read-only."""

    beta_hat: np.ndarray
    sigma_hat_sq: float
    gram: np.ndarray
    residuals: np.ndarray
    d: int
    M: int
    responses: np.ndarray = field(repr=False, default=None)

    def __post_init__(self):
        for name in ("beta_hat", "gram", "residuals", "responses"):
            arr = getattr(self, name)
            if arr is not None:
                arr = np.array(arr, dtype=float)
                arr.setflags(write=False)
                object.__setattr__(self, name, arr)

    @property
    def sigma_hat(self) -> float:
        return float(np.sqrt(self.sigma_hat_sq))

    @property
    def r_squared(self) -> float:
        """Centred R^2 of the training fit (nan when the response is constant)."""
        if self.responses is None:
            return float("nan")
        tss = float(np.sum((self.responses - self.responses.mean()) ** 2))
        if tss == 0.0:
            return float("nan")
        return 1.0 - float(self.residuals @ self.residuals) / tss


def _check_conditioning(x: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Pivoted QR of the equilibrated design; raise on near collinearity."""
    scale = np.sqrt(np.sum(x * x, axis=0))
    zero = np.flatnonzero(scale == 0.0)
    if zero.size:
        raise SingularityError(
            f"design column(s) {zero.tolist()} are identically zero",
            columns=zero.tolist(),
        )
    xs = x / scale
    q, r, piv = linalg.qr(xs, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    # rcond of the Gram matrix is the square of the design's
    rcond = (diag[-1] / diag[0]) ** 2 if diag[0] > 0 else 0.0
    if rcond < RCOND_THRESHOLD:
        rel = (diag / diag[0]) ** 2
        bad = sorted(int(piv[k]) for k in np.flatnonzero(rel < RCOND_THRESHOLD))
        raise SingularityError(
            f"Gram matrix is numerically singular (rcond={rcond:.3e}); "
            f"column(s) {bad} are collinear with the others",
            columns=bad,
            rcond=rcond,
        )
    return q, r, piv, scale


def fit_ols(sample: TrainingSample) -> FittedModel:
    """
    Ordinary least squares on the training sample.

    Args:
        sample: training rows and responses, with M > d

    Returns:
        FittedModel with sigma_hat_sq = RSS / (M - d)

    Raises:
        ParameterError: if M <= d
        SingularityError: if the Gram matrix is (nearly) singular
    """
    x, y = sample.rows, sample.responses
    M, d = x.shape
    if M <= d:
        raise ParameterError(f"training sample too short: M={M} must exceed d={d}")

    q, r, piv, scale = _check_conditioning(x)
    coef = linalg.solve_triangular(r, q.T @ y)
    beta = np.empty(d)
    beta[piv] = coef
    beta /= scale

    resid = y - x @ beta
    sigma_sq = float(resid @ resid) / (M - d)
    logger.info("fitted OLS on M=%d rows, d=%d, sigma_hat=%.6g", M, d, np.sqrt(sigma_sq))
    return FittedModel(
        beta_hat=beta,
        sigma_hat_sq=sigma_sq,
        gram=(x.T @ x) / M,
        residuals=resid,
        d=d,
        M=M,
        responses=y,
    )


def fitted_values(rows: np.ndarray, beta: np.ndarray) -> np.ndarray:
    """
    ``rows . beta`` summed column by column in a fixed order.

    ``rows`` is (..., d); ``beta`` is (d,) or, for stacked samples, (R, d)
    against rows of shape (R, T, d). Single rows and blocks get identical bits.
    """
    rows = np.asarray(rows, dtype=float)
    beta = np.asarray(beta, dtype=float)
    if beta.ndim == 2 and rows.ndim == 3:
        beta = beta[:, None, :]
    acc = rows[..., 0] * beta[..., 0]
    for k in range(1, rows.shape[-1]):
        acc = acc + rows[..., k] * beta[..., k]
    return acc


def residual(model: FittedModel, row: Sequence[float], y: float) -> float:
    """Residual ``y - row . beta_hat`` using the training coefficients."""
    row = np.asarray(row, dtype=float).ravel()
    if row.size != model.d:
        raise DimensionError(f"row has {row.size} entries, model expects d={model.d}")
    return float(y) - float(fitted_values(row, model.beta_hat))


def residuals(model: FittedModel, rows: np.ndarray, y) -> np.ndarray:
    """Residuals for a block of rows, never refitting."""
    rows = np.atleast_2d(np.asarray(rows, dtype=float))
    if rows.shape[1] != model.d:
        raise DimensionError(f"rows have {rows.shape[1]} columns, model expects d={model.d}")
    return np.asarray(y, dtype=float).ravel() - fitted_values(rows, model.beta_hat)


def fit_window(y, exog=None, start: int = 0, stop: Optional[int] = None,
               y0: Optional[float] = None) -> FittedModel:
    """
    Fit on observations ``start .. stop-1`` (0-based) of a series.

    The lag of the first observation is ``y[start-1]`` when it exists,
    otherwise ``y0``; with neither, the first observation becomes the warm-up.
    """
    y = np.asarray(y, dtype=float).ravel()
    stop = y.size if stop is None else stop
    x = _as_exog(exog, y.size)
    if start > 0 and y0 is None:
        y0 = y[start - 1]
    sample = TrainingSample.from_series(y[start:stop], x[start:stop], y0=y0)
    return fit_ols(sample)


def fit_ols_batch(rows: np.ndarray, responses: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Least squares for a stack of independent training samples.

    Args:
        rows: (R, M, d) designs
        responses: (R, M) responses

    Returns:
        (beta_hat of shape (R, d), sigma_hat_sq of shape (R,)); samples whose
        Gram matrix is singular get NaN in both and are left to the caller
    """
    rows = np.asarray(rows, dtype=float)
    responses = np.asarray(responses, dtype=float)
    R, M, d = rows.shape
    if M <= d:
        raise ParameterError(f"training sample too short: M={M} must exceed d={d}")
    scale = np.sqrt(np.sum(rows * rows, axis=1))  # (R, d)
    ok = np.all(scale > 0.0, axis=1)
    scale = np.where(scale > 0.0, scale, 1.0)
    q, r = np.linalg.qr(rows / scale[:, None, :])
    diag = np.abs(np.diagonal(r, axis1=1, axis2=2))
    with np.errstate(divide="ignore", invalid="ignore"):
        rcond = (diag.min(axis=1) / diag.max(axis=1)) ** 2
    ok &= rcond >= RCOND_THRESHOLD

    beta = np.full((R, d), np.nan)
    sigma_sq = np.full(R, np.nan)
    if ok.any():
        qty = np.einsum("rmd,rm->rd", q[ok], responses[ok])
        beta[ok] = np.linalg.solve(r[ok], qty[..., None])[..., 0] / scale[ok]
        resid = responses[ok] - np.einsum("rmd,rd->rm", rows[ok], beta[ok])
        sigma_sq[ok] = np.einsum("rm,rm->r", resid, resid) / (M - d)
    if not ok.all():
        logger.warning("%d of %d training samples have a singular Gram matrix; left out",
                       R - int(ok.sum()), R)
    return beta, sigma_sq
