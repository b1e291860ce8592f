"""Means of products of four Heisenberg nilcharacters with independent random frequencies.

    python3 scripts/fw_experiment.py --trials 100 --N 10000
"""

import argparse
import json

import numpy as np

from uniformity_lab.experiments import fw_experiment


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--trials", type=int, default=100)
    ap.add_argument("--N", type=int, default=10**4)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--threshold", type=float, default=0.1)
    args = ap.parse_args()
    out = fw_experiment(args.trials, args.N, args.seed, args.threshold)
    print(json.dumps({
        "trials": args.trials,
        "within_threshold": out["within"],
        "max_abs": out["max_abs"],
        "quantiles": [float(q) for q in np.quantile(out["means"], [0.5, 0.9, 0.99])],
    }, indent=2))


if __name__ == "__main__":
    main()
