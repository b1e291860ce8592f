"""Recompute the frozen constants in src/uniformity_lab/data/fixtures.json.

Regenerating changes what the acceptance suite compares against, so review
the diff of the JSON file before committing it.

    python3 scripts/regenerate_fixtures.py [--out PATH]
"""

import argparse
import json
import time

from uniformity_lab import experiments
from uniformity_lab.config import DEFAULT_FIXTURES


def build() -> dict:
    fx = {}

    def put(name, value, how):
        fx[name] = {"value": value, "how": how}

    t = time.time()
    put("golden_u2_512", experiments.golden_quadratic_u2(512, "direct"),
        "||e(alpha n^2)||_{U^2[512]}, alpha=(sqrt5-1)/2, direct enumeration on Z/2048Z")
    print(f"golden U2 done in {time.time() - t:.1f}s")

    lem = experiments.lemma2_experiment(N=256, c=0.5, samples=10**6, seed=0)
    put("lemma2_structured_pass_fraction", lem["structured"].pass_fraction,
        "quadruple_scan, chi_h(n)=e(2 alpha h n), f=e(alpha n^2), N=256, c=0.5, 1e6 samples, seed 0")
    put("lemma2_control_pass_fraction", lem["control"].pass_fraction,
        "quadruple_scan on i.i.d. random family, N=256, c=0.5, 1e6 samples, seed 0")

    fw = experiments.fw_experiment(trials=100, N=10**4, seed=0, threshold=0.1)
    put("fw_within_threshold", fw["within"], "trials out of 100 with |mean| <= 0.1, N=1e4, seed 0")
    put("fw_max_abs", fw["max_abs"], "largest |mean| over the same 100 trials")

    res = experiments.noncocycle_residuals(64)
    put("noncocycle_cocycle_residual", res["cocycle"], "verify_cocycle on chi_h(n)=e(0.3 h^2), N=64")
    put("noncocycle_integration_residual", res["integration"], "integrate_cocycle residual on the same family")
    put("nonintegrable_symmetry_residual", experiments.nonintegrable_symmetry(),
        "symmetry residual of e(0.37 h floor(0.61 n)), n in [1,200], (h,k) in (3,5),(1,2),(4,9)")
    put("converse_gi_margin_eps0.1", experiments.converse_gi_margin(0.1),
        "min ||f||_{U^{s+1}[50]} - (1 - 10 eps), noisy phase polynomials, s=1..3, 5 trials, seed 0")
    return fx


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default=str(DEFAULT_FIXTURES))
    args = ap.parse_args()
    fx = build()
    with open(args.out, "w") as fh:
        json.dump(fx, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
