"""Coordinate algebra for the Heisenberg group and the 3-step semidirect product built over it.

Heisenberg coordinates ``(t1, t2, t12)`` stand for ``e1^t1 e2^t2 [e1, e2]^t12``
with ``[x, y] = x^-1 y^-1 x y``.  The multiplication law used throughout is

    (t1, t2, t12) * (s1, s2, s12) = (t1 + s1, t2 + s2, t12 + s12 + t1 * s2)

together with the convention that linear sequences put the ``e2`` power first.
With these two choices the lattice reduction
``({t1}, {t2}, {t12 - floor(t2) t1})``, the commutator ``[e1, e2] = (0, 0, 1)``
and the bracket evaluations ``e(a n floor(b n))`` all come out verbatim.

Coordinates may be floats or equal-shape numpy arrays; every operation is
elementwise, so a whole orbit can be pushed through at once.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Literal, Sequence

import numpy as np

ALGEBRA_TOL = 1e-12
REDUCTION_TOL = 1e-10


def _split(x):
    """``(k, r)`` with integer ``k``, ``r = x + k`` in ``[0, 1)``.

    When ``x + (-floor x)`` rounds up to 1.0 (tiny negative ``x``), ``k`` is
    lowered by one and ``r`` set to 0, which keeps ``r - (x + k)`` tiny.
    """
    k = -np.floor(x)
    r = x + k
    over = r >= 1.0
    if np.any(over):
        k = np.where(over, k - 1.0, k)
        r = np.where(over, 0.0, r)
        if np.ndim(x) == 0:
            k, r = float(k), float(r)
    return k, r


@dataclass(frozen=True)
class H3Element:
    t1: float = 0.0
    t2: float = 0.0
    t12: float = 0.0

    def __mul__(self, other: "H3Element") -> "H3Element":
        return h3_mul(self, other)

    def as_tuple(self) -> tuple:
        return (self.t1, self.t2, self.t12)

    def to_json(self) -> list:
        return [float(self.t1), float(self.t2), float(self.t12)]

    @classmethod
    def from_json(cls, doc) -> "H3Element":
        t1, t2, t12 = doc
        return cls(float(t1), float(t2), float(t12))


IDENTITY = H3Element(0.0, 0.0, 0.0)
E1 = H3Element(1.0, 0.0, 0.0)
E2 = H3Element(0.0, 1.0, 0.0)


def h3_mul(x: H3Element, y: H3Element) -> H3Element:
    return H3Element(x.t1 + y.t1, x.t2 + y.t2, x.t12 + y.t12 + x.t1 * y.t2)


def h3_inv(x: H3Element) -> H3Element:
    return H3Element(-x.t1, -x.t2, -x.t12 + x.t1 * x.t2)


def h3_pow(x: H3Element, s) -> H3Element:
    """``x^s`` along the one-parameter subgroup through ``x``."""
    return H3Element(s * x.t1, s * x.t2, s * x.t12 + s * (s - 1) / 2 * x.t1 * x.t2)


def gen_pow(generator: str, s) -> H3Element:
    if generator == "e1":
        return H3Element(s, 0.0 * s, 0.0 * s)
    if generator == "e2":
        return H3Element(0.0 * s, s, 0.0 * s)
    raise ValueError(f"unknown generator {generator!r}")


def h3_commutator(x: H3Element, y: H3Element) -> H3Element:
    """``[x, y] = x^-1 y^-1 x y``."""
    return h3_mul(h3_mul(h3_mul(h3_inv(x), h3_inv(y)), x), y)


def h3_conj(a: H3Element, b: H3Element) -> H3Element:
    """``a^b = b^-1 a b``."""
    return h3_mul(h3_mul(h3_inv(b), a), b)


def h3_close(x: H3Element, y: H3Element, tol: float = ALGEBRA_TOL) -> bool:
    return bool(
        np.all(np.abs(np.asarray(x.t1) - y.t1) <= tol)
        and np.all(np.abs(np.asarray(x.t2) - y.t2) <= tol)
        and np.all(np.abs(np.asarray(x.t12) - y.t12) <= tol)
    )


@dataclass(frozen=True)
class ReducedH3Point:
    point: H3Element
    lattice_word: tuple


def h3_reduce(x: H3Element) -> ReducedH3Point:
    """Right-multiply by the integer element that lands ``x`` in ``[0, 1)^3``.

    With ``gamma = (-floor t1, -floor t2, c)`` the law gives
    ``x * gamma = ({t1}, {t2}, t12 - floor(t2) t1 + c)``; ``c`` then takes the
    last coordinate to its fractional part.
    """
    a, r1 = _split(x.t1)
    b, r2 = _split(x.t2)
    c, r12 = _split(x.t12 + x.t1 * b)
    return ReducedH3Point(H3Element(r1, r2, r12), (a, b, c))


def lattice_element(word) -> H3Element:
    a, b, c = word
    return H3Element(a, b, c)


def in_center(x: H3Element, tol: float = REDUCTION_TOL) -> bool:
    return bool(np.all(np.abs(x.t1) <= tol) and np.all(np.abs(x.t2) <= tol))


def subgroup_membership(
    x: H3Element, which: Literal["center_G2", "petal"], tol: float = REDUCTION_TOL
) -> bool:
    """Membership in ``G_2 = [G, G]`` (``t1 = t2 = 0``) or in ``<e1, [e1, e2]>`` (``t2 = 0``)."""
    if which == "center_G2":
        return in_center(x, tol)
    if which == "petal":
        return bool(np.all(np.abs(x.t2) <= tol))
    raise ValueError(f"unknown subgroup {which!r}")


# --- the petal subgroup and the semidirect products -------------------------------


@dataclass(frozen=True)
class PetalElement:
    """``e1^a [e1, e2]^c``; the subgroup is abelian with coordinatewise addition."""

    a: float = 0.0
    c: float = 0.0

    def embed(self) -> H3Element:
        return H3Element(self.a, 0.0 * self.a, self.c)

    def to_json(self) -> list:
        return [float(self.a), float(self.c)]


PETAL_IDENTITY = PetalElement(0.0, 0.0)


def petal_mul(p: PetalElement, q: PetalElement) -> PetalElement:
    return PetalElement(p.a + q.a, p.c + q.c)


def petal_inv(p: PetalElement) -> PetalElement:
    return PetalElement(-p.a, -p.c)


def petal_pow(p: PetalElement, s) -> PetalElement:
    return PetalElement(s * p.a, s * p.c)


def petal_from_h3(x: H3Element, tol: float = ALGEBRA_TOL) -> PetalElement:
    if not np.all(np.abs(x.t2) <= tol):
        raise ValueError(f"element {x} has t2 != 0 and is not in the petal subgroup")
    return PetalElement(x.t1, x.t12)


def petal_conj(p: PetalElement, g: H3Element) -> PetalElement:
    """``p^g = g^-1 p g``, computed in G and projected back (normality keeps ``t2 = 0``)."""
    return petal_from_h3(h3_conj(p.embed(), g), tol=np.inf)


Pair = tuple  # (H3Element, PetalElement), an element of G x| G_petal


def pair_mul(x: Pair, y: Pair) -> Pair:
    """``(g, g1) (g', g1') = (g g', g1^{g'} g1')``."""
    g, g1 = x
    gp, g1p = y
    return (h3_mul(g, gp), petal_mul(petal_conj(g1, gp), g1p))


def pair_inv(x: Pair) -> Pair:
    g, g1 = x
    gi = h3_inv(g)
    return (gi, petal_inv(petal_conj(g1, gi)))


def rho_action(t, p: Pair) -> Pair:
    """``rho(t)(g, g1) = (g g1^t, g1)``."""
    g, g1 = p
    return (h3_mul(g, petal_pow(g1, t).embed()), g1)


@dataclass(frozen=True)
class TildeElement:
    """``(t, (g, g1))`` in ``R x|_rho (G x| G_petal)``."""

    t: float = 0.0
    g: H3Element = IDENTITY
    g1: PetalElement = PETAL_IDENTITY

    def __mul__(self, other: "TildeElement") -> "TildeElement":
        return tilde_mul(self, other)

    def to_json(self) -> list:
        return [float(self.t), self.g.to_json(), self.g1.to_json()]

    @classmethod
    def from_json(cls, doc) -> "TildeElement":
        t, g, (a, c) = doc
        return cls(float(t), H3Element.from_json(g), PetalElement(float(a), float(c)))


TILDE_IDENTITY = TildeElement()


def tilde_mul(x: TildeElement, y: TildeElement) -> TildeElement:
    """``(t, p) (t', p') = (t + t', rho(t')(p) p')``."""
    g, g1 = pair_mul(rho_action(y.t, (x.g, x.g1)), (y.g, y.g1))
    return TildeElement(x.t + y.t, g, g1)


def tilde_inv(x: TildeElement) -> TildeElement:
    # (t, p)^-1 = (-t, rho(-t)(p^-1)) since rho(-t) fixes the identity pair
    g, g1 = rho_action(-x.t, pair_inv((x.g, x.g1)))
    return TildeElement(-x.t, g, g1)


def tilde_commutator(x: TildeElement, y: TildeElement) -> TildeElement:
    return tilde_mul(tilde_mul(tilde_mul(tilde_inv(x), tilde_inv(y)), x), y)


def tilde_close(x: TildeElement, y: TildeElement, tol: float = ALGEBRA_TOL) -> bool:
    return (
        bool(np.all(np.abs(np.asarray(x.t) - y.t) <= tol))
        and h3_close(x.g, y.g, tol)
        and bool(np.all(np.abs(np.asarray(x.g1.a) - y.g1.a) <= tol))
        and bool(np.all(np.abs(np.asarray(x.g1.c) - y.g1.c) <= tol))
    )


@dataclass(frozen=True)
class ReducedTildePoint:
    point: TildeElement
    lattice_word: TildeElement


def tilde_reduce(x: TildeElement) -> ReducedTildePoint:
    """Reduce modulo ``Z x| (Gamma x| Gamma_petal)`` acting on the right.

    Three lattice factors, applied in order: ``(m, (id, id))`` moves ``t`` to
    ``{t}`` (and twists ``g`` by ``g1^m``); ``(0, (gamma, id))`` reduces ``g``
    (conjugating ``g1`` by ``gamma``); ``(0, (id, gamma1))`` reduces ``g1``.
    The returned word is their product, so ``point = x * word``.
    """
    m, t = _split(x.t)
    w_t = TildeElement(m, IDENTITY, PETAL_IDENTITY)
    twisted = tilde_mul(x, w_t)
    g_reduced = h3_reduce(twisted.g)
    gamma = lattice_element(g_reduced.lattice_word)
    w_g = TildeElement(0.0 * m, gamma, PETAL_IDENTITY)
    g1 = petal_conj(twisted.g1, gamma)
    ka, ra = _split(g1.a)
    kc, rc = _split(g1.c)
    w_p = TildeElement(0.0 * m, IDENTITY, PetalElement(ka, kc))
    point = TildeElement(t, g_reduced.point, PetalElement(ra, rc))
    word = tilde_mul(tilde_mul(w_t, w_g), w_p)
    return ReducedTildePoint(point, word)


# --- polynomial sequences and derivatives ----------------------------------------


@dataclass(frozen=True)
class AffineForm:
    """``a h + b n + c``."""

    a: float = 0.0
    b: float = 0.0
    c: float = 0.0

    def __call__(self, h, n):
        return self.a * np.asarray(h, dtype=float) + self.b * np.asarray(n, dtype=float) + self.c


@dataclass(frozen=True)
class PolySequence2D:
    """Ordered product of generator powers with affine exponents in ``(h, n)``."""

    terms: tuple = ()

    def __post_init__(self):
        terms = tuple((gen, form) for gen, form in self.terms)
        for gen, _ in terms:
            if gen not in ("e1", "e2"):
                raise ValueError(f"unknown generator {gen!r}")
        object.__setattr__(self, "terms", terms)

    def __call__(self, h, n) -> H3Element:
        return poly_seq_eval(self, h, n)


def poly_seq_eval(seq: PolySequence2D, h, n) -> H3Element:
    out = IDENTITY
    for gen, form in seq.terms:
        out = h3_mul(out, gen_pow(gen, form(h, n)))
    return out


def heisenberg_sequence(alpha: float, beta: float) -> PolySequence2D:
    """``g(n) = e2^{beta n} e1^{alpha n}`` (e2 power first)."""
    return PolySequence2D((("e2", AffineForm(b=beta)), ("e1", AffineForm(b=alpha))))


def bi_sequence(alpha: float, beta: float) -> PolySequence2D:
    """``g(h, n) = e2^{beta h} e1^{alpha n}``."""
    return PolySequence2D((("e2", AffineForm(a=beta)), ("e1", AffineForm(b=alpha))))


SeqMap = Callable[[int, int], H3Element]


def partial_derivative(F: SeqMap, var: Literal["h", "n"], step: int) -> SeqMap:
    """``(h, n) -> F(shifted) F(h, n)^-1`` with the shift applied to ``var``."""
    if var == "h":
        return lambda h, n: h3_mul(F(h + step, n), h3_inv(F(h, n)))
    if var == "n":
        return lambda h, n: h3_mul(F(h, n + step), h3_inv(F(h, n)))
    raise ValueError(f"var must be 'h' or 'n', got {var!r}")


def iterated_derivative(F: SeqMap, steps: Sequence[tuple]) -> SeqMap:
    """Apply ``partial_derivative`` for each ``(var, step)`` in order (first entry innermost)."""
    for var, step in steps:
        F = partial_derivative(F, var, step)
    return F


def semidirect_sequence(beta: float, gamma: float, delta: float, h, n) -> TildeElement:
    """``(0, (e2^{beta n}, e1^{gamma n})) * (delta h, (id, id))``."""
    n = np.asarray(n, dtype=float)
    h = np.asarray(h, dtype=float)
    left = TildeElement(0.0 * n, gen_pow("e2", beta * n), PetalElement(gamma * n, 0.0 * n))
    right = TildeElement(delta * h, IDENTITY, PETAL_IDENTITY)
    return tilde_mul(left, right)
