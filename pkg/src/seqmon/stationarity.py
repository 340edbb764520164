"""
KPSS test for level stationarity (no trend term) and the Bartlett
long-run variance it is built on.
"""

import logging
import math
from dataclasses import dataclass
from typing import Dict, Optional, Union

import numpy as np
import pandas as pd

from .errors import DataError, ParameterError

logger = logging.getLogger(__name__)

# level-stationarity critical values at 10%, 5% and 1%
KPSS_CRITICAL_VALUES: Dict[str, float] = {"10%": 0.347, "5%": 0.463, "1%": 0.739}
MIN_OBS = 8


def auto_bandwidth(n: int) -> int:
    """floor(4 (n/100)^{1/4})."""
    return int(math.floor(4.0 * (n / 100.0) ** 0.25))


def long_run_variance(x, bandwidth: Union[str, int] = "auto", demean: bool = True) -> float:
    """
    Bartlett-kernel estimate gamma_0 + 2 sum_{j<=b} (1 - j/(b+1)) gamma_j.

    Autocovariances use divisor n.
    """
    x = np.asarray(x, dtype=float).ravel()
    n = x.size
    if n < 2:
        raise DataError("need at least two observations for a long-run variance")
    b = auto_bandwidth(n) if bandwidth == "auto" else int(bandwidth)
    if b < 0 or b >= n:
        raise ParameterError(f"bandwidth must lie in [0, {n - 1}], got {b}")
    if demean:
        x = x - x.mean()
    lrv = float(x @ x) / n
    for j in range(1, b + 1):
        lrv += 2.0 * (1.0 - j / (b + 1.0)) * float(x[j:] @ x[:-j]) / n
    return lrv


@dataclass(frozen=True)
class KpssResult:
    statistic: float
    bandwidth: int
    n: int
    reject_10: bool
    reject_5: bool
    reject_1: bool
    degenerate: bool = False

    @property
    def verdicts(self) -> Dict[str, bool]:
        """True means stationarity is rejected at that level."""
        return {"10%": self.reject_10, "5%": self.reject_5, "1%": self.reject_1}

    def stars(self) -> str:
        return "*" * sum(self.verdicts.values())

    def as_dict(self) -> dict:
        return {
            "statistic": self.statistic,
            "bandwidth": self.bandwidth,
            "n": self.n,
            "reject": self.verdicts,
            "critical_values": dict(KPSS_CRITICAL_VALUES),
            "degenerate": self.degenerate,
        }


def kpss_level(series, bandwidth: Union[str, int] = "auto") -> KpssResult:
    """
    KPSS statistic n^{-2} sum S_t^2 / lrv for the demeaned series.

    Args:
        series: at least 8 observations
        bandwidth: "auto" for floor(4 (n/100)^{1/4}) or an integer lag

    Returns:
        KpssResult; a constant series gives statistic 0 flagged degenerate
    """
    x = np.asarray(series, dtype=float).ravel()
    n = x.size
    if n < MIN_OBS:
        raise DataError(f"KPSS needs at least {MIN_OBS} observations, got {n}")
    if not np.all(np.isfinite(x)):
        raise DataError("KPSS input contains non-finite values")
    b = auto_bandwidth(n) if bandwidth == "auto" else int(bandwidth)

    if np.ptp(x) == 0.0:
        return KpssResult(0.0, b, n, False, False, False, degenerate=True)
    resid = x - x.mean()
    lrv = long_run_variance(resid, b, demean=False)
    if lrv <= 0.0:
        return KpssResult(0.0, b, n, False, False, False, degenerate=True)

    partial = np.cumsum(resid)
    stat = float(partial @ partial) / (n * n) / lrv
    cv = KPSS_CRITICAL_VALUES
    return KpssResult(stat, b, n, stat > cv["10%"], stat > cv["5%"], stat > cv["1%"])


def summary_statistics(frame: pd.DataFrame, bandwidth: Union[str, int] = "auto") -> pd.DataFrame:
    """
    Descriptive table of a training window: size, mean, sd, min, max, KPSS.

    Args:
        frame: numeric columns of the window

    Returns:
        one row per column
    """
    rows = []
    for name in frame.columns:
        col = pd.to_numeric(frame[name], errors="coerce").dropna().to_numpy()
        res: Optional[KpssResult] = kpss_level(col, bandwidth) if col.size >= MIN_OBS else None
        rows.append({
            "variable": name,
            "n": int(col.size),
            "mean": float(col.mean()) if col.size else float("nan"),
            "sd": float(col.std(ddof=1)) if col.size > 1 else float("nan"),
            "min": float(col.min()) if col.size else float("nan"),
            "max": float(col.max()) if col.size else float("nan"),
            "kpss": res.statistic if res else float("nan"),
            "kpss_reject": res.stars() if res else "",
        })
        if res is not None and res.reject_5:
            logger.warning("KPSS rejects level stationarity of %s at 5%% (%.3f)", name, res.statistic)
    return pd.DataFrame(rows).set_index("variable")
