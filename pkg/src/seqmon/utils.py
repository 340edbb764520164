"""
Helper utilities: result writers, run manifests and timing.
"""

import json
import logging
import os
import platform
import time
from datetime import datetime, timezone
from typing import Any, Callable, Dict, List, Optional, Tuple, Union

import numpy as np
import pandas as pd

from . import __version__

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"


def timestamp() -> str:
    return datetime.now().strftime("%Y%m%d_%H%M%S")


def run_timed(func: Callable, *args, **kwargs) -> Tuple[Any, float]:
    """Run ``func`` and measure its wall time in seconds."""
    start_time = time.perf_counter()
    result = func(*args, **kwargs)
    elapsed = time.perf_counter() - start_time
    return result, elapsed


def ensure_dir(path: str) -> str:
    os.makedirs(path, exist_ok=True)
    return path


def _jsonable(value):
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (tuple, set)):
        return list(value)
    raise TypeError(f"object of type {type(value).__name__} is not JSON serialisable")


def to_json(data: Any) -> str:
    """Stable JSON text: sorted keys, numpy scalars and arrays converted."""
    return json.dumps(data, indent=2, sort_keys=True, default=_jsonable) + "\n"


def save_json(data: Any, output_file: str) -> str:
    with open(output_file, "w", encoding="utf-8") as f:
        f.write(to_json(data))
    logger.info("wrote %s", output_file)
    return output_file


def save_results_csv(results: Union[pd.DataFrame, List[Dict[str, Any]]],
                     output_file: str) -> str:
    """
    Save result rows to a CSV file.

    Args:
        results: a frame or a list of row dictionaries
        output_file: path of the CSV file
    """
    frame = results if isinstance(results, pd.DataFrame) else pd.DataFrame(results)
    frame.to_csv(output_file, index=False, float_format="%.10g")
    logger.info("wrote %s (%d rows)", output_file, len(frame))
    return output_file


def build_manifest(command: str, config: Dict[str, Any], seed: Optional[int] = None,
                   reps: Optional[int] = None) -> Dict[str, Any]:
    """Everything needed to rerun a command. ``created_at`` is the only volatile field."""
    return {
        "command": command,
        "package": "seqmon",
        "version": __version__,
        "build": {
            "python": platform.python_version(),
            "numpy": np.__version__,
            "pandas": pd.__version__,
        },
        "seed": seed,
        "reps": reps,
        "config": config,
        "created_at": datetime.now(timezone.utc).isoformat(timespec="seconds"),
    }


def write_manifest(out_dir: str, command: str, config: Dict[str, Any],
                   seed: Optional[int] = None, reps: Optional[int] = None) -> str:
    ensure_dir(out_dir)
    return save_json(build_manifest(command, config, seed, reps),
                     os.path.join(out_dir, MANIFEST_NAME))
