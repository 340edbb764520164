"""
Write a synthetic monthly CSV for trying out `seqmon monitor` and
`seqmon remonitor`.

The series follows a built-in DGP; with --second-after the coefficients
switch back to their pre-change values that many rows after the first
change, so a re-started monitor has something to find.
"""

import argparse
import sys

import numpy as np
import pandas as pd
from scipy import signal

from seqmon.dgp import make_dgp, simulate


def build_frame(dgp_id, M, s_star, delta_d, seed, second_after=None, start="1990-01"):
    spec = make_dgp(dgp_id, M, s_star=s_star, delta_d=delta_d, seed=seed)
    data = simulate(spec)
    y = data.y.copy()
    if second_after is not None:
        if spec.change is None:
            raise ValueError("a second change needs a DGP with a first change")
        cut = data.change_index + second_after + 1
        if cut >= y.size:
            raise ValueError(f"second change at row {cut} is past the {y.size} simulated rows")
        beta = np.asarray(spec.beta0_bar)
        drive = beta[0] + data.x[cut:] @ beta[1:] + data.eps[cut:]
        y[cut:], _ = signal.lfilter([1.0], [1.0, -spec.beta0_d], drive,
                                    zi=[spec.beta0_d * y[cut - 1]])

    dates = pd.period_range(start=start, periods=y.size, freq="M").astype(str)
    frame = pd.DataFrame({"date": dates, "y": y})
    for j in range(data.x.shape[1]):
        frame[f"x{j + 2}"] = data.x[:, j]
    return frame


def main():
    parser = argparse.ArgumentParser(description="Synthetic CSV for the monitor command")
    parser.add_argument("--dgp", default="v")
    parser.add_argument("--M", type=int, default=100)
    parser.add_argument("--s-star", type=int, default=10)
    parser.add_argument("--delta-d", type=float, default=None)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--second-after", type=int, default=None,
                        help="Rows between the first and a second change")
    parser.add_argument("--out", default="synthetic.csv")
    args = parser.parse_args()

    try:
        frame = build_frame(args.dgp, args.M, args.s_star, args.delta_d, args.seed,
                            args.second_after)
    except Exception as e:
        print(f"Error: {e}")
        return 1
    frame.to_csv(args.out, index=False)
    print(f"Wrote {len(frame)} rows to {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
