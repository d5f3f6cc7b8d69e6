"""Continuous stand-in for the eight-variable chest-clinic network, built
so the per-edge walk-through is fully determined by the data.

usage: python scripts/asia_golden.py <seed> <out-dir>   (committed fixture: seed 4)
"""
import pathlib
import sys

import numpy as np
from scipy.stats import norm

N = 2000
EDGES = [
    ("asia", "tub"), ("tub", "either"), ("smoke", "lung"), ("smoke", "bronc"),
    ("lung", "either"), ("bronc", "dysp"), ("either", "xray"), ("either", "dysp"),
]


def sample(seed):
    rng = np.random.default_rng(seed)
    asia = rng.uniform(-2, 2, N)
    tub = np.tanh(1.5 * asia) + 0.25 * rng.uniform(-1, 1, N)
    smoke = rng.normal(0, 1, N)
    lung = 0.8 * smoke + 0.6 * rng.normal(0, 1, N)
    bronc = 0.8 * smoke + 0.6 * rng.normal(0, 1, N)
    # either carries (almost) none of tub and lung: both edges stay out of the skeleton
    either = rng.uniform(0, 1, N)
    xray = np.sin(3 * either) + 0.2 * rng.normal(0, 1, N)
    # probit keeps bronc-dysp jointly Gaussian
    dysp = bronc + norm.ppf(0.001 + 0.998 * either) + 0.5 * rng.normal(0, 1, N)
    cols = dict(asia=asia, tub=tub, smoke=smoke, lung=lung, bronc=bronc,
                either=either, xray=xray, dysp=dysp)
    return cols


def main():
    seed, out = int(sys.argv[1]), pathlib.Path(sys.argv[2])
    cols = sample(seed)
    names = list(cols)
    with open(out / "asia_golden.csv", "w") as f:
        f.write(",".join(names) + "\n")
        for row in zip(*cols.values()):
            f.write(",".join(f"{v:.6f}" for v in row) + "\n")
    with open(out / "asia_golden.edges", "w") as f:
        for a, b in EDGES:
            f.write(f"{a} {b}\n")


if __name__ == "__main__":
    main()
