#!/usr/bin/env python3
"""Size and power calibration of the Granger F-test over many seeds.

Size: independent white-noise pairs should reject near the nominal rate.
Power: a planted x -> y link one lag back should be detected essentially
always at T = 300. Prints one line per experiment.

    python scripts/calibrate_granger.py --seeds 500
"""

import argparse

import numpy as np

from wsi.econometrics import AlignedPair, granger_test


def size_experiment(seeds: int, t: int, level: float) -> float:
    rejections = 0
    for seed in range(seeds):
        rng = np.random.default_rng(seed)
        pair = AlignedPair.from_arrays(rng.normal(size=t), rng.normal(size=t))
        rejections += granger_test(pair, 1).p_value < level
    return rejections / seeds


def power_experiment(seeds: int, t: int, coef: float, level: float) -> float:
    rejections = 0
    for seed in range(seeds):
        rng = np.random.default_rng(10_000 + seed)
        x = rng.normal(size=t + 1)
        y = coef * x[:t] + rng.normal(size=t)
        pair = AlignedPair.from_arrays(x[1:], y)
        rejections += granger_test(pair, 1).p_value < level
    return rejections / seeds


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seeds", type=int, default=500)
    parser.add_argument("--length", type=int, default=300)
    parser.add_argument("--coef", type=float, default=0.8)
    args = parser.parse_args()

    for level in (0.10, 0.05, 0.01):
        rate = size_experiment(args.seeds, args.length, level)
        print(f"size  @ {level:4.0%}: rejection rate {rate:6.1%}  "
              f"({args.seeds} seeds, T={args.length})")
    for level in (0.05, 0.01):
        rate = power_experiment(args.seeds, args.length, args.coef, level)
        print(f"power @ {level:4.0%}: rejection rate {rate:6.1%}  "
              f"(y_t = {args.coef}*x_(t-1) + e)")


if __name__ == "__main__":
    main()
