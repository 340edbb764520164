"""
Seeded random streams.

Every simulation derives its generators from a ``SeedSequence`` keyed by the
master seed and integer labels, so a replication draws the same numbers no
matter how the work is split across threads or chunks.

    seed
      └── replication r              SeedSequence([seed, r])
            ├── regressors           spawn(2)[0]
            └── errors               spawn(2)[1]
"""

from dataclasses import dataclass
from typing import Iterable, Tuple

import numpy as np

MASK64 = (1 << 64) - 1


def _entropy(keys: Iterable[int]) -> list:
    out = []
    for k in keys:
        k = int(k)
        if k < 0:
            raise ValueError(f"seed keys must be non-negative, got {k}")
        out.append(k & MASK64)
    return out


def substream(seed: int, *keys: int) -> np.random.Generator:
    """Generator for the substream labelled ``keys`` under ``seed``."""
    return np.random.default_rng(np.random.SeedSequence(_entropy((seed, *keys))))


@dataclass(frozen=True)
class ReplicationStreams:
    regressors: np.random.Generator
    errors: np.random.Generator


def replication_streams(seed: int, *keys: int) -> ReplicationStreams:
    """Disjoint regressor and error generators for one replication."""
    root = np.random.SeedSequence(_entropy((seed, *keys)))
    ss_x, ss_e = root.spawn(2)
    return ReplicationStreams(
        regressors=np.random.default_rng(ss_x),
        errors=np.random.default_rng(ss_e),
    )


def chunk_bounds(total: int, chunk: int) -> Tuple[Tuple[int, int], ...]:
    """Half-open index ranges covering ``range(total)`` in pieces of ``chunk``."""
    if chunk < 1:
        raise ValueError("chunk must be positive")
    return tuple((lo, min(lo + chunk, total)) for lo in range(0, total, chunk))
