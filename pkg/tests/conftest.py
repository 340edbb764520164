import logging

import numpy as np
import pandas as pd
import pytest
from scipy import signal

from seqmon.dgp import make_dgp, simulate, simulate_dataset


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def regression_sample(rng):
    """y_t = 0.5 + 1.5 x_t + 0.3 y_{t-1} + e_t with 120 observations and y_0."""
    n = 121
    x = rng.standard_normal((n, 1))
    e = rng.standard_normal(n)
    y = np.zeros(n)
    for t in range(1, n):
        y[t] = 0.5 + 1.5 * x[t, 0] + 0.3 * y[t - 1] + e[t]
    return y, x


def dgp_frame(dgp_id="v", M=100, s_star=10, seed=0, delta_d=None, replication=0):
    spec = make_dgp(dgp_id, M, s_star=s_star, delta_d=delta_d, seed=seed)
    frame = simulate_dataset(spec, replication, include_eps=False)
    return frame.rename(columns={"t": "date"})


def two_change_frame(M=100, first_at=110, second_at=260, shift=5.0, seed=0):
    """DGP(ii) whose intercept jumps by ``shift`` at ``first_at`` and again at ``second_at``."""
    spec = make_dgp("ii", M, seed=seed)
    data = simulate(spec)
    steps = np.zeros(data.y.size)
    steps[first_at:] += shift
    steps[second_at:] += shift
    # the response is linear in its drive, so the shifts can be filtered separately
    y = data.y + signal.lfilter([1.0], [1.0, -spec.beta0_d], steps)
    frame = pd.DataFrame({"date": [f"r{t}" for t in range(y.size)], "y": y})
    for j in range(data.x.shape[1]):
        frame[f"x{j + 2}"] = data.x[:, j]
    return frame


RUN_TOML = """
[data]
response = "y"
exog = ["x2", "x3", "x4", "x5"]
date_column = "date"

[training]
start = 0
M = {M}

[boundary]
gamma = {gamma}
alpha = {alpha}
source = "table"
"""


@pytest.fixture
def run_toml(tmp_path):
    def write(M=100, gamma=0.0, alpha=0.01, name="run.toml"):
        path = tmp_path / name
        path.write_text(RUN_TOML.format(M=M, gamma=gamma, alpha=alpha))
        return path
    return write


@pytest.fixture(autouse=True)
def _propagating_logger():
    """The CLI detaches the package logger from root; caplog needs it attached."""
    logger = logging.getLogger("seqmon")
    yield
    logger.propagate = True
    logger.handlers.clear()
    logger.setLevel(logging.NOTSET)
