"""Nilsequence and nilcharacter evaluation on the Heisenberg and semidirect nilmanifolds.

Every evaluator goes through the group: build the polynomial sequence,
reduce into the fundamental domain, apply ``F``.  The closed bracket formulas
are kept in :mod:`uniformity_lab.bracket` and only used as oracles.

Each scalar evaluator has a ``*_phase`` twin returning the phase in ``[0, 1)``
so that products of nilcharacters can be composed as sums of phases.  The
scalar forms are piecewise continuous (``F = e(-z)`` jumps on the boundary of
the fundamental domain); :func:`vector_nilchar` is the continuous alternative.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal, Sequence

import numpy as np

from .functions import e
from .nilpotent import (
    H3Element,
    PolySequence2D,
    bi_sequence,
    h3_mul,
    h3_reduce,
    heisenberg_sequence,
    semidirect_sequence,
    tilde_reduce,
)

PIECEWISE = True  # scalar evaluators below are only piecewise Lipschitz
M_MAX = 16


def _mod1(x):
    r = np.mod(x, 1.0)
    return np.where(r >= 1.0, 0.0, r)


def F_phase(point: H3Element):
    """Phase of ``F((x, y, z) Gamma) = e(-z)`` at a reduced point."""
    return _mod1(-np.asarray(point.t12, dtype=float))


def evaluate_F_phase(x: H3Element):
    """Reduce ``x`` and return the phase of ``F`` there."""
    return F_phase(h3_reduce(x).point)


# --- smooth partition of unity ----------------------------------------------------


def _smoothstep(t):
    t = np.clip(t, 0.0, 1.0)
    # 3t^2 - 2t^3 can round to 1 + 2^-52 near t = 1
    return np.minimum(3 * t**2 - 2 * t**3, 1.0)


def eta1_squared(x):
    """``eta_1^2`` on ``R/Z``: 0 off ``[0.1, 0.9]``, 1 on ``[0.4, 0.6]``, smoothstep ramps between."""
    x = np.mod(np.asarray(x, dtype=float), 1.0)
    up = _smoothstep((x - 0.1) / 0.3)
    down = _smoothstep((0.9 - x) / 0.3)
    return np.where(x <= 0.5, up, down)


def eta1(x):
    return np.sqrt(eta1_squared(x))


def eta2(x):
    return np.sqrt(1.0 - eta1_squared(x))


# Lipschitz constant of eta1^2: max of the smoothstep slope 1.5 divided by the 0.3 ramp width
ETA_SQUARED_LIPSCHITZ = 1.5 / 0.3


# --- Heisenberg evaluators -------------------------------------------------------


def heisenberg_phase(alpha: float, beta: float, n):
    """Phase of ``F(g(n) Gamma)`` for ``g(n) = e2^{beta n} e1^{alpha n}``; equals ``alpha n floor(beta n)`` mod 1."""
    return evaluate_F_phase(heisenberg_sequence(alpha, beta)(0, n))


def heisenberg_nilchar(alpha: float, beta: float, n):
    return e(heisenberg_phase(alpha, beta, n))


def F_vector(point: H3Element):
    """Continuous vector-valued ``F`` on reduced points.

    First component uses the ``[0, 1)`` fundamental domain in ``t2``; the
    second uses the representative with ``t2`` in ``[1/2, 3/2)``, reached by
    right-multiplying with ``e2`` when ``t2 < 1/2`` (which adds ``t1`` to
    ``t12``).  Each is cut off where its domain has its seam.
    """
    x, y, z = (np.asarray(c, dtype=float) for c in point.as_tuple())
    z_alt = np.where(y < 0.5, z + x, z)
    return np.stack([e(-z) * eta1(y), e(-z_alt) * eta2(y)], axis=-1)


def vector_nilchar(alpha: float, beta: float, n):
    """``(e(a n floor(b n)) eta1(b n), e(a n floor(b n - 1/2)) eta2(b n))`` via the group path."""
    point = h3_reduce(heisenberg_sequence(alpha, beta)(0, n)).point
    return F_vector(point)


def bi_phase(alpha: float, beta: float, h, n):
    """Phase of ``F(g(h, n) Gamma)`` with ``g(h, n) = e2^{beta h} e1^{alpha n}``; equals ``alpha n floor(beta h)``."""
    return evaluate_F_phase(bi_sequence(alpha, beta)(h, n))


def bi_nilchar(alpha: float, beta: float, h, n):
    return e(bi_phase(alpha, beta, h, n))


def semidirect_phase(beta: float, gamma: float, delta: float, h, n):
    """Phase of ``F~(g~(h, n) Gamma~)``; equals ``gamma {delta h} n floor(beta n)`` mod 1.

    ``F~((t, (g, g')) Gamma~) = F(g)`` on the reduced representative.
    """
    reduced = tilde_reduce(semidirect_sequence(beta, gamma, delta, h, n)).point
    return F_phase(reduced.g)


def semidirect_nilchar(beta: float, gamma: float, delta: float, h, n):
    return e(semidirect_phase(beta, gamma, delta, h, n))


def bracket_linear_phase(gamma: float, petal_pairs: Sequence[tuple], h, n, m_max: int = M_MAX):
    if len(petal_pairs) > m_max:
        raise ValueError(f"{len(petal_pairs)} petal pairs exceed m_max={m_max}")
    total = _mod1(gamma * np.asarray(n, dtype=float))
    for alpha, beta in petal_pairs:
        total = _mod1(total + bi_phase(alpha, beta, h, n))
    return total


def bracket_linear_char(gamma: float, petal_pairs: Sequence[tuple], h, n, m_max: int = M_MAX):
    """``e(gamma n) prod_j e(alpha_j n floor(beta_j h))``."""
    return e(bracket_linear_phase(gamma, petal_pairs, h, n, m_max))


# --- nilcharacter specs and the vertical frequency ---------------------------------


@dataclass(frozen=True)
class VerticalFrequency:
    """The central character ``(0, 0, u) -> xi * u``."""

    xi: float
    require_integral: bool = False

    def __post_init__(self):
        if self.require_integral and float(self.xi) != round(float(self.xi)):
            raise ValueError(f"xi={self.xi} does not annihilate the central lattice")

    @property
    def annihilates_lattice(self) -> bool:
        return float(self.xi) == round(float(self.xi))


@dataclass(frozen=True)
class NilcharSpec:
    """A nilmanifold, a sequence and an evaluator ``F`` on reduced points."""

    manifold: Literal["heisenberg", "tilde"] = "heisenberg"
    sequence: PolySequence2D | None = None
    evaluator: Literal["phase_e_minus_z", "vector_pu", "constant"] = "phase_e_minus_z"
    params: dict = field(default_factory=dict)

    @property
    def piecewise(self) -> bool:
        return self.evaluator == "phase_e_minus_z"

    def F(self, point: H3Element):
        """``F`` on a reduced point: a complex scalar or a 2-vector (last axis)."""
        if self.evaluator == "phase_e_minus_z":
            return e(F_phase(point))
        if self.evaluator == "vector_pu":
            return F_vector(point)
        if self.evaluator == "constant":
            return np.ones_like(np.asarray(point.t12, dtype=float)) + 0j
        raise ValueError(f"unknown evaluator {self.evaluator!r}")

    def evaluate(self, x: H3Element):
        """``F(x Gamma)``: reduce, then apply ``F``."""
        return self.F(h3_reduce(x).point)

    def sequence_value(self, h, n):
        if self.sequence is None:
            raise ValueError("spec has no sequence")
        return self.evaluate(self.sequence(h, n))


def vertical_frequency_check(
    spec: NilcharSpec, xi: VerticalFrequency, samples: int, seed: int
) -> float:
    """Largest ``|F(g_s x) - e(xi(g_s)) F(x)|`` over random central ``g_s`` and reduced ``x``."""
    if spec.manifold != "heisenberg":
        raise ValueError("vertical frequency checks are implemented on the Heisenberg manifold only")
    rng = np.random.Generator(np.random.PCG64(int(seed) % 2**64))
    u = rng.random(samples)
    pts = rng.random((3, samples))
    x = H3Element(pts[0], pts[1], pts[2])
    shifted = h3_mul(H3Element(0.0 * u, 0.0 * u, u), x)
    lhs = spec.evaluate(shifted)
    rhs = spec.evaluate(x)
    phase = e(float(xi.xi) * u)
    if np.ndim(lhs) == 2:
        diff = np.linalg.norm(lhs - phase[:, None] * rhs, axis=1)
    else:
        diff = np.abs(lhs - phase * rhs)
    return float(np.max(diff))
