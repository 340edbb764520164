"""
Simulated worlds: AR(1) or GARCH(1,1) regressors, Gaussian or GARCH(1,1)
errors, and a response with an autoregressive term whose coefficients may
change at M + s*.

Index convention for a simulated dataset: position 0 holds y_0 (the lag of
the first training observation), positions 1..M the training sample and
M+1.. the monitoring period.
"""

import logging
from dataclasses import asdict, dataclass
from typing import Dict, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from scipy import signal

from .errors import DimensionError, ParameterError
from .rng import replication_streams

logger = logging.getLogger(__name__)

DEFAULT_BURN_IN = 500
DEFAULT_HORIZON_MULTIPLE = 10

BETA0_BAR = (0.02, 0.20, 0.25, 0.15, -0.20)
BETA0_D = 0.25
DELTA_BAR_ALT = (0.04, 1.60, 0.75, 0.55, 1.20)
AR_RHO = (0.15, 0.20, 0.10, 0.30)
GARCH_X_OMEGA = (0.3, 0.5, 0.4, 0.6)
GARCH_X_PHI = (0.5, 0.3, 0.2, 0.6)
GARCH_X_PSI = (0.2, 0.3, 0.6, 0.2)
GARCH_E = (0.2, 0.3, 0.3)

NEAR_UNIT_DELTAS = (0.90, 0.95, 0.99, 1.00)
EXPLOSIVE_DELTAS = (1.01, 1.05, 1.10, 1.25)

Seed = Union[int, np.random.Generator]


def _rng(seed: Seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def _tuple(values) -> Tuple[float, ...]:
    return tuple(float(v) for v in np.atleast_1d(values))


@dataclass(frozen=True)
class RegressorProcess:
    """AR(1) or GARCH(1,1) regressors, optionally driven by one shared innovation."""

    kind: str
    rho: Tuple[float, ...] = ()
    omega: Tuple[float, ...] = ()
    phi: Tuple[float, ...] = ()
    psi: Tuple[float, ...] = ()
    shared_innovations: bool = False

    def __post_init__(self):
        if self.kind == "ar1":
            rho = _tuple(self.rho)
            object.__setattr__(self, "rho", rho)
            if not rho:
                raise ParameterError("AR(1) regressors need at least one coefficient")
            if any(abs(r) >= 1.0 for r in rho):
                raise ParameterError(f"AR(1) coefficients must satisfy |rho| < 1, got {rho}")
        elif self.kind == "garch":
            om, ph, ps = _tuple(self.omega), _tuple(self.phi), _tuple(self.psi)
            if not (len(om) == len(ph) == len(ps)) or not om:
                raise DimensionError("GARCH omega, phi and psi must have the same length")
            _check_garch(om, ph, ps)
            object.__setattr__(self, "omega", om)
            object.__setattr__(self, "phi", ph)
            object.__setattr__(self, "psi", ps)
        else:
            raise ParameterError(f"unknown regressor process {self.kind!r}")

    @classmethod
    def ar1(cls, rho: Sequence[float], shared_innovations: bool = False) -> "RegressorProcess":
        return cls("ar1", rho=tuple(rho), shared_innovations=shared_innovations)

    @classmethod
    def garch(cls, omega, phi, psi, shared_innovations: bool = False) -> "RegressorProcess":
        return cls("garch", omega=tuple(omega), phi=tuple(phi), psi=tuple(psi),
                   shared_innovations=shared_innovations)

    @property
    def k(self) -> int:
        return len(self.rho) if self.kind == "ar1" else len(self.omega)

    @property
    def variances(self) -> np.ndarray:
        """Unconditional variances of the regressor columns."""
        if self.kind == "ar1":
            rho = np.asarray(self.rho)
            return 1.0 / (1.0 - rho ** 2)
        om, ph, ps = (np.asarray(v) for v in (self.omega, self.phi, self.psi))
        return om / (1.0 - ph - ps)


@dataclass(frozen=True)
class ErrorProcess:
    kind: str
    variance: float = 1.0
    omega: float = 0.0
    phi: float = 0.0
    psi: float = 0.0

    def __post_init__(self):
        if self.kind == "iid_normal":
            if not self.variance > 0.0:
                raise ParameterError(f"error variance must be positive, got {self.variance}")
        elif self.kind == "garch":
            _check_garch((self.omega,), (self.phi,), (self.psi,))
        else:
            raise ParameterError(f"unknown error process {self.kind!r}")

    @classmethod
    def iid_normal(cls, variance: float = 1.0) -> "ErrorProcess":
        return cls("iid_normal", variance=float(variance))

    @classmethod
    def garch(cls, omega: float, phi: float, psi: float) -> "ErrorProcess":
        return cls("garch", omega=float(omega), phi=float(phi), psi=float(psi))

    @property
    def unconditional_variance(self) -> float:
        if self.kind == "iid_normal":
            return self.variance
        return self.omega / (1.0 - self.phi - self.psi)


def _check_garch(omega, phi, psi):
    for o, a, b in zip(omega, phi, psi):
        if o <= 0.0 or a < 0.0 or b < 0.0:
            raise ParameterError(f"GARCH needs omega > 0 and phi, psi >= 0, got ({o}, {a}, {b})")
        if a + b >= 1.0:
            raise ParameterError(f"GARCH needs phi + psi < 1 for a finite variance, got {a + b}")


@dataclass(frozen=True)
class Change:
    """Coefficients switch to (delta_bar, delta_d) after time M + s_star."""

    s_star: int
    delta_bar: Tuple[float, ...]
    delta_d: float

    def __post_init__(self):
        if self.s_star < 1:
            raise ParameterError(f"s_star must be at least 1, got {self.s_star}")
        object.__setattr__(self, "delta_bar", _tuple(self.delta_bar))
        object.__setattr__(self, "delta_d", float(self.delta_d))


@dataclass(frozen=True)
class DgpSpec:
    regressors: RegressorProcess
    errors: ErrorProcess
    beta0_bar: Tuple[float, ...]
    beta0_d: float
    change: Optional[Change]
    M: int
    extra_horizon: int
    burn_in: int = DEFAULT_BURN_IN
    seed: int = 0
    name: str = "custom"

    def __post_init__(self):
        object.__setattr__(self, "beta0_bar", _tuple(self.beta0_bar))
        if abs(self.beta0_d) >= 1.0:
            raise ParameterError(f"|beta0_d| must be below 1 under the null, got {self.beta0_d}")
        if len(self.beta0_bar) != self.regressors.k + 1:
            raise DimensionError(
                f"beta0_bar has {len(self.beta0_bar)} entries; expected intercept plus "
                f"{self.regressors.k} regressors"
            )
        if self.change is not None and len(self.change.delta_bar) != len(self.beta0_bar):
            raise DimensionError("delta_bar and beta0_bar must have the same length")
        if self.M < 1 or self.extra_horizon < 0 or self.burn_in < 0:
            raise ParameterError("M must be positive; extra_horizon and burn_in non-negative")

    @property
    def d(self) -> int:
        return len(self.beta0_bar) + 1

    @property
    def n_obs(self) -> int:
        """y_0, the training sample and the monitoring period."""
        return 1 + self.M + self.extra_horizon

    @property
    def beta0(self) -> np.ndarray:
        return np.append(self.beta0_bar, self.beta0_d)

    @property
    def delta(self) -> Optional[np.ndarray]:
        if self.change is None:
            return None
        return np.append(self.change.delta_bar, self.change.delta_d)

    def with_seed(self, seed: int) -> "DgpSpec":
        return DgpSpec(self.regressors, self.errors, self.beta0_bar, self.beta0_d,
                       self.change, self.M, self.extra_horizon, self.burn_in, seed, self.name)

    def to_dict(self) -> Dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict) -> "DgpSpec":
        data = dict(data)
        change = data.get("change")
        return cls(
            regressors=RegressorProcess(**data.pop("regressors")),
            errors=ErrorProcess(**data.pop("errors")),
            change=Change(**change) if change else None,
            **{k: v for k, v in data.items() if k != "change"},
        )


# ---------------------------------------------------------------- generators

def _draw_regressor_innovations(proc: RegressorProcess, length: int,
                                rng: np.random.Generator) -> np.ndarray:
    if proc.shared_innovations:
        return np.repeat(rng.standard_normal((length, 1)), proc.k, axis=1)
    return rng.standard_normal((length, proc.k))


def _garch_filter(h: np.ndarray, omega, phi, psi) -> np.ndarray:
    """
    x_t = sigma_t h_t with sigma_t^2 = omega + phi x_{t-1}^2 + psi sigma_{t-1}^2,
    started at the unconditional variance. Time runs along axis -2 when the
    parameters are vectors (one per column), otherwise along axis -1.
    """
    omega, phi, psi = (np.asarray(v, dtype=float) for v in (omega, phi, psi))
    time_axis = -2 if omega.ndim else -1
    h = np.moveaxis(h, time_axis, 0)
    v0 = omega / (1.0 - phi - psi)
    out = np.empty_like(h)
    sigma2 = np.broadcast_to(v0, h.shape[1:]).copy()
    prev2 = sigma2.copy()
    for t in range(h.shape[0]):
        sigma2 = omega + phi * prev2 + psi * sigma2
        out[t] = np.sqrt(sigma2) * h[t]
        prev2 = out[t] * out[t]
    return np.moveaxis(out, 0, time_axis)


def _ar1_filter(eta: np.ndarray, rho) -> np.ndarray:
    """x_t = rho_k x_{t-1} + eta_t column by column from a zero start (time on axis -2)."""
    out = np.empty_like(eta)
    for j, r in enumerate(rho):
        out[..., :, j] = signal.lfilter([1.0], [1.0, -r], eta[..., :, j], axis=-1)
    return out


def _filter_regressors(proc: RegressorProcess, eta: np.ndarray, burn_in: int) -> np.ndarray:
    if proc.kind == "ar1":
        x = _ar1_filter(eta, proc.rho)
    else:
        x = _garch_filter(eta, proc.omega, proc.phi, proc.psi)
    return x[..., burn_in:, :]


def _filter_errors(proc: ErrorProcess, h: np.ndarray, burn_in: int) -> np.ndarray:
    if proc.kind == "iid_normal":
        e = np.sqrt(proc.variance) * h
    else:
        e = _garch_filter(h, proc.omega, proc.phi, proc.psi)
    return e[..., burn_in:]


def gen_regressors(proc: RegressorProcess, n: int, burn_in: int = DEFAULT_BURN_IN,
                   seed: Seed = 0) -> np.ndarray:
    """
    n x k regressor matrix after discarding ``burn_in`` steps.

    AR(1) columns start from zero; GARCH columns start at the unconditional
    variance. With shared innovations every column is driven by one stream.
    """
    if n < 0 or burn_in < 0:
        raise ParameterError("n and burn_in must be non-negative")
    eta = _draw_regressor_innovations(proc, n + burn_in, _rng(seed))
    return _filter_regressors(proc, eta, burn_in)


def gen_errors(proc: ErrorProcess, n: int, burn_in: int = DEFAULT_BURN_IN,
               seed: Seed = 0) -> np.ndarray:
    """n error terms: Gaussian draws or a GARCH(1,1) path started at its unconditional variance."""
    if n < 0 or burn_in < 0:
        raise ParameterError("n and burn_in must be non-negative")
    h = _rng(seed).standard_normal(n + burn_in)
    return _filter_errors(proc, h, burn_in)


def gen_response(regressors: np.ndarray, errors: np.ndarray, beta0_bar: Sequence[float],
                 beta0_d: float, change: Optional[Change], M: int,
                 burn_in: int = DEFAULT_BURN_IN) -> Tuple[np.ndarray, Optional[int]]:
    """
    Response path under the pre-change and post-change recursions.

    ``regressors`` (…, n, k) and ``errors`` (…, n) include ``burn_in`` leading
    steps; y starts at zero before them and they are discarded. Position 0 of
    the result is y_0.

    Returns:
        (y of length n - burn_in, index of the last pre-change observation or None)
    """
    x = np.asarray(regressors, dtype=float)
    eps = np.asarray(errors, dtype=float)
    if x.shape[:-1] != eps.shape:
        raise DimensionError(f"regressors {x.shape} and errors {eps.shape} are not aligned")
    beta0_bar = np.asarray(beta0_bar, dtype=float)
    if beta0_bar.size != x.shape[-1] + 1:
        raise DimensionError("beta0_bar must hold an intercept plus one weight per regressor")
    if abs(beta0_d) >= 1.0:
        raise ParameterError(f"|beta0_d| must be below 1, got {beta0_d}")
    n = eps.shape[-1]
    if burn_in >= n:
        raise DimensionError(f"burn_in={burn_in} leaves no observations out of {n}")

    drive = beta0_bar[0] + x @ beta0_bar[1:] + eps
    if change is None:
        y = signal.lfilter([1.0], [1.0, -beta0_d], drive, axis=-1)
        return y[..., burn_in:], None

    cp = burn_in + M + change.s_star  # last pre-change position, burn-in included
    if cp >= n:
        raise DimensionError(f"change at M+s*={M + change.s_star} is past the simulated horizon")
    delta_bar = np.asarray(change.delta_bar, dtype=float)
    y = np.empty_like(drive)
    y[..., : cp + 1] = signal.lfilter([1.0], [1.0, -beta0_d], drive[..., : cp + 1], axis=-1)
    post = delta_bar[0] + x[..., cp + 1 :, :] @ delta_bar[1:] + eps[..., cp + 1 :]
    zi = change.delta_d * y[..., cp : cp + 1]
    with np.errstate(over="ignore", invalid="ignore"):
        y[..., cp + 1 :], _ = signal.lfilter([1.0], [1.0, -change.delta_d], post, axis=-1, zi=zi)
    return y[..., burn_in:], cp - burn_in


@dataclass(frozen=True)
class SimulatedData:
    """One or many simulated paths, aligned so position 0 is y_0."""

    y: np.ndarray
    x: np.ndarray
    eps: np.ndarray
    change_index: Optional[int]

    def to_frame(self, include_eps: bool = True) -> pd.DataFrame:
        if self.y.ndim != 1:
            raise DimensionError("only a single path can be exported")
        frame = pd.DataFrame({"t": np.arange(self.y.size), "y": self.y})
        for j in range(self.x.shape[1]):
            frame[f"x{j + 2}"] = self.x[:, j]
        if include_eps:
            frame["eps"] = self.eps
        return frame


def simulate(spec: DgpSpec, replication: int = 0) -> SimulatedData:
    """One replication of ``spec`` from its own pair of disjoint substreams."""
    streams = replication_streams(spec.seed, replication)
    n = spec.burn_in + spec.n_obs
    x = gen_regressors(spec.regressors, n, spec.burn_in, streams.regressors)
    eps = gen_errors(spec.errors, n, spec.burn_in, streams.errors)
    y, cp = gen_response(x, eps, spec.beta0_bar, spec.beta0_d, spec.change, spec.M, spec.burn_in)
    return SimulatedData(y, x[spec.burn_in :], eps[spec.burn_in :], cp)


def simulate_dataset(spec: DgpSpec, replication: int = 0,
                     include_eps: bool = True) -> pd.DataFrame:
    """Columns t, y, x2.., eps of one replication."""
    return simulate(spec, replication).to_frame(include_eps)


def generate_batch(spec: DgpSpec, start: int, stop: int) -> SimulatedData:
    """
    Replications ``start .. stop-1`` stacked along axis 0.

    Row r equals ``simulate(spec, start + r)`` up to floating point
    evaluation order of the vectorised recursions.
    """
    n = spec.burn_in + spec.n_obs
    reg_len = n + spec.burn_in
    eta = np.empty((stop - start, reg_len, spec.regressors.k))
    h = np.empty((stop - start, reg_len))
    for j, r in enumerate(range(start, stop)):
        streams = replication_streams(spec.seed, r)
        eta[j] = _draw_regressor_innovations(spec.regressors, reg_len, streams.regressors)
        h[j] = streams.errors.standard_normal(reg_len)
    x = _filter_regressors(spec.regressors, eta, spec.burn_in)
    eps = _filter_errors(spec.errors, h, spec.burn_in)
    y, cp = gen_response(x, eps, spec.beta0_bar, spec.beta0_d, spec.change, spec.M, spec.burn_in)
    return SimulatedData(y, x[..., spec.burn_in :, :], eps[..., spec.burn_in :], cp)


# ---------------------------------------------------------------- built-in worlds

DGP_IDS = ("i", "ii", "iii", "iv", "v", "vi", "vii", "viii", "ix", "x", "xi", "xii")
NULL_IDS = DGP_IDS[:4]
ALTERNATIVE_IDS = DGP_IDS[4:]

_AR_INDEPENDENT = RegressorProcess.ar1(AR_RHO)
_AR_SHARED = RegressorProcess.ar1(AR_RHO, shared_innovations=True)
_GARCH_INDEPENDENT = RegressorProcess.garch(GARCH_X_OMEGA, GARCH_X_PHI, GARCH_X_PSI)
_GARCH_SHARED = RegressorProcess.garch(GARCH_X_OMEGA, GARCH_X_PHI, GARCH_X_PSI,
                                       shared_innovations=True)
_IID = ErrorProcess.iid_normal(1.0)
_GARCH_ERR = ErrorProcess.garch(*GARCH_E)

# id -> (regressors, errors, post-change delta_bar, admissible delta_d values)
_WORLDS = {
    "i": (_AR_INDEPENDENT, _GARCH_ERR, None, ()),
    "ii": (_AR_SHARED, _IID, None, ()),
    "iii": (_GARCH_INDEPENDENT, _GARCH_ERR, None, ()),
    "iv": (_GARCH_SHARED, _IID, None, ()),
    "v": (_AR_SHARED, _IID, DELTA_BAR_ALT, (0.60,)),
    "vi": (_AR_SHARED, _GARCH_ERR, DELTA_BAR_ALT, (0.60,)),
    "vii": (_AR_SHARED, _IID, BETA0_BAR, NEAR_UNIT_DELTAS),
    "viii": (_AR_SHARED, _GARCH_ERR, BETA0_BAR, NEAR_UNIT_DELTAS),
    "ix": (_AR_SHARED, _IID, DELTA_BAR_ALT, NEAR_UNIT_DELTAS),
    "x": (_AR_SHARED, _GARCH_ERR, DELTA_BAR_ALT, NEAR_UNIT_DELTAS),
    "xi": (_AR_SHARED, _IID, DELTA_BAR_ALT, EXPLOSIVE_DELTAS),
    "xii": (_AR_SHARED, _GARCH_ERR, DELTA_BAR_ALT, EXPLOSIVE_DELTAS),
}


def admissible_deltas(dgp_id: str) -> Tuple[float, ...]:
    return _WORLDS[_normalise_id(dgp_id)][3]


def _normalise_id(dgp_id: str) -> str:
    key = str(dgp_id).strip().lower()
    if key not in _WORLDS:
        raise ParameterError(f"unknown DGP id {dgp_id!r}; expected one of {DGP_IDS}")
    return key


def make_dgp(dgp_id: str, M: int, s_star: int = 1, delta_d: Optional[float] = None,
             seed: int = 0, extra_horizon: Optional[int] = None,
             burn_in: int = DEFAULT_BURN_IN) -> DgpSpec:
    """
    Built-in world i..xii with its exact parameters.

    Args:
        dgp_id: roman numeral id
        M: training size
        s_star: change time after the training sample (alternatives only)
        delta_d: post-change autoregressive coefficient; required for vii-xii,
            optional for v/vi (fixed at .60), rejected for i-iv
        seed: master seed of the world
        extra_horizon: monitored observations to simulate; 10 M by default
        burn_in: discarded warm-up steps

    Raises:
        ParameterError: unknown id or inadmissible delta_d
    """
    key = _normalise_id(dgp_id)
    regs, errs, delta_bar, deltas = _WORLDS[key]
    extra = DEFAULT_HORIZON_MULTIPLE * M if extra_horizon is None else extra_horizon

    change = None
    if key in NULL_IDS:
        if delta_d is not None:
            raise ParameterError(f"DGP({key}) has no change; delta_d must not be given")
    else:
        if delta_d is None:
            if len(deltas) != 1:
                raise ParameterError(f"DGP({key}) needs delta_d in {deltas}")
            delta_d = deltas[0]
        if not any(abs(delta_d - v) < 1e-9 for v in deltas):
            raise ParameterError(f"DGP({key}) admits delta_d in {deltas}, got {delta_d}")
        change = Change(s_star, delta_bar, delta_d)

    return DgpSpec(regs, errs, BETA0_BAR, BETA0_D, change, M, extra, burn_in, seed,
                   name=f"DGP({key})")
