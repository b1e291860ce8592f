"""Quadruple scan for e(alpha n^2) against its linear-phase family, with a random control.

    python3 scripts/lemma2_experiment.py --N 256 --c 0.5 --samples 1000000
"""

import argparse
import json
import time

from uniformity_lab.experiments import lemma2_experiment


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--N", type=int, default=256)
    ap.add_argument("--c", type=float, default=0.5)
    ap.add_argument("--samples", type=int, default=10**6)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    t = time.time()
    out = lemma2_experiment(args.N, args.c, args.samples, args.seed)
    doc = {k: v.to_json() for k, v in out.items()}
    doc["seconds"] = round(time.time() - t, 2)
    print(json.dumps(doc, indent=2))


if __name__ == "__main__":
    main()
