"""
Exception and warning types raised by seqmon.
"""

from typing import Optional, Sequence

import numpy as np


class SeqmonError(Exception):
    """Base class for every error raised by the package."""


class ParameterError(SeqmonError, ValueError):
    """A numeric parameter is outside its admissible range."""


class DimensionError(SeqmonError, ValueError):
    """Arrays have incompatible shapes or lengths."""


class SingularityError(SeqmonError, np.linalg.LinAlgError):
    """The Gram matrix of a design is singular or too badly conditioned."""

    def __init__(self, message: str, columns: Sequence[int] = (), rcond: float = 0.0):
        super().__init__(message)
        self.columns = tuple(columns)
        self.rcond = rcond


class DegenerateVarianceError(SeqmonError, ValueError):
    """The training residual variance is zero, so the detector is undefined."""


class MonitorStateError(SeqmonError, RuntimeError):
    """A monitor was stepped after it stopped or was censored."""


class TableLookupError(SeqmonError, KeyError):
    """The requested (gamma, alpha) pair is not in the built-in table."""

    def __str__(self) -> str:
        # KeyError quotes its argument; keep the plain message
        return str(self.args[0]) if self.args else ""


class ConfigError(SeqmonError):
    """A configuration file or command line option is invalid."""


class DataError(SeqmonError):
    """Input data cannot be used (missing columns, bad values, too short)."""

    def __init__(self, message: str, row: Optional[int] = None):
        super().__init__(message if row is None else f"{message} (row {row})")
        self.row = row


class MisuseError(SeqmonError, ValueError):
    """An experiment was asked to run on specs of the wrong kind."""


class GridBiasWarning(UserWarning):
    """Simulated critical values close to gamma = 1/2 carry a visible grid bias."""


class OverlapWarning(UserWarning):
    """A new training window starts before the previous detection."""
