"""Seeded experiments whose outputs are frozen in ``data/fixtures.json``.

``scripts/regenerate_fixtures.py`` calls these to rebuild the file; the
acceptance tests call them again and compare against the frozen numbers.
"""

from __future__ import annotations

import math
from concurrent.futures import Executor
from typing import Optional

import numpy as np

from .cocycle import (
    HFamily,
    ScanBudget,
    all_shifts,
    fw_trials,
    integrate_cocycle,
    lemma2_family,
    quadruple_scan,
    random_family,
    symmetry_residual,
    verify_cocycle,
)
from .functions import IntervalFunction, PhasePolynomial, e, phase_poly_function, random_disc_values
from .gowers import gowers_norm_interval

GOLDEN = (math.sqrt(5) - 1) / 2


def golden_quadratic_u2(N: int = 512, method: str = "direct", pool: Optional[Executor] = None) -> float:
    """``||e(alpha n^2)||_{U^2[N]}`` with ``alpha`` the golden-ratio conjugate."""
    f = phase_poly_function(PhasePolynomial((0.0, 0.0, GOLDEN)), N)
    kwargs = {"pool": pool} if method == "direct" else {}
    return gowers_norm_interval(f, 2, method, **kwargs).value


def lemma2_experiment(N: int = 256, c: float = 0.5, samples: int = 10**6, seed: int = 0) -> dict:
    """Quadruple scan for ``chi_h(n) = e(2 alpha h n)`` against ``f = e(alpha n^2)``, plus an i.i.d. control."""
    f = phase_poly_function(PhasePolynomial((0.0, 0.0, GOLDEN)), N)
    budget = ScanBudget(samples=samples, seed=seed)
    structured = quadruple_scan(f, lemma2_family(GOLDEN, N), c, budget)
    control = quadruple_scan(f, random_family(N, seed), c, budget)
    return {"structured": structured, "control": control}


def fw_experiment(trials: int = 100, N: int = 10**4, seed: int = 0, threshold: float = 0.1) -> dict:
    means = np.abs(fw_trials(trials, N, seed))
    return {
        "within": int(np.sum(means <= threshold)),
        "max_abs": float(means.max()),
        "means": means,
    }


def square_phase_family(N: int = 64, coeff: float = 0.3) -> HFamily:
    """``chi_h(n) = e(coeff h^2)``: constant in ``n`` and not a cocycle."""
    return HFamily.from_function(N, all_shifts(N), lambda h, n: e(np.full(n.size, coeff * h * h)))


def noncocycle_residuals(N: int = 64) -> dict:
    fam = square_phase_family(N)
    return {"cocycle": verify_cocycle(fam), "integration": integrate_cocycle(fam)[1]}


def nonintegrable_symmetry(alpha: float = 0.37, beta: float = 0.61, N: int = 200, pairs=((3, 5), (1, 2), (4, 9))) -> float:
    """Largest symmetry residual of ``chi(h, n) = e(alpha h floor(beta n))`` over a few ``(h, k)``."""

    def chi(h, n):
        return e(alpha * h * np.floor(beta * n))

    n = np.arange(1, N + 1)
    return max(symmetry_residual(chi, h, k, n) for h, k in pairs)


def noisy_phase_polynomial(s: int, eps: float, N: int, rng: np.random.Generator) -> IntervalFunction:
    """``e(P(n)) (1 - eps + eps z(n))`` with random real ``P`` of degree ``s`` and ``z`` uniform in the disc."""
    P = PhasePolynomial(tuple(rng.random(s + 1)))
    noise = 1 - eps + eps * random_disc_values(rng, N)
    return IntervalFunction(P(np.arange(1, N + 1)) * noise)


def converse_gi_margin(eps: float, N: int = 50, trials: int = 5, seed: int = 0) -> float:
    """Smallest ``||f||_{U^{s+1}[N]} - (1 - 10 eps)`` over ``s = 1, 2, 3`` and seeded trials."""
    rng = np.random.Generator(np.random.PCG64(seed))
    worst = math.inf
    for s in (1, 2, 3):
        for _ in range(trials):
            f = noisy_phase_polynomial(s, eps, N, rng)
            worst = min(worst, gowers_norm_interval(f, s + 1).value - (1 - 10 * eps))
    return worst
