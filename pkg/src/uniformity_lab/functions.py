"""Bounded functions on intervals and cyclic groups, phase polynomials, derivatives.

An :class:`IntervalFunction` lives on ``[N] = {1, ..., N}``; a
:class:`CyclicFunction` lives on ``Z/MZ``.  Both store their values in a
read-only complex numpy array (0-based storage; the interval's ``values[0]``
is ``f(1)``).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

UNIT_DISC_TOL = 1e-12


def e(phase):
    """``e(x) = exp(2 pi i x)``, reducing the phase mod 1 first."""
    phase = np.asarray(phase, dtype=float)
    return np.exp(2j * np.pi * np.mod(phase, 1.0))


def _frozen_values(values) -> np.ndarray:
    arr = np.array(values, dtype=np.complex128).reshape(-1)
    arr.setflags(write=False)
    return arr


def _check_disc(arr: np.ndarray) -> None:
    if arr.size and np.max(np.abs(arr)) > 1.0 + UNIT_DISC_TOL:
        worst = int(np.argmax(np.abs(arr)))
        raise ValueError(
            f"value {arr[worst]!r} at index {worst} lies outside the unit disc"
        )


@dataclass(frozen=True)
class IntervalFunction:
    """A function ``[N] -> D``; ``values[k]`` holds ``f(k + 1)``.

    ``offset`` shifts the domain: the function lives on
    ``{offset + 1, ..., offset + N}``.  Plain interval functions have offset 0;
    windowed derivatives carry the offset of their overlap window.
    """

    values: np.ndarray
    offset: int = 0

    def __post_init__(self):
        arr = _frozen_values(self.values)
        if arr.size == 0:
            raise ValueError("interval function needs N >= 1")
        _check_disc(arr)
        object.__setattr__(self, "values", arr)
        object.__setattr__(self, "offset", int(self.offset))

    @property
    def N(self) -> int:
        return int(self.values.size)

    @property
    def domain(self) -> np.ndarray:
        """The integer points ``offset+1 .. offset+N``."""
        return np.arange(self.offset + 1, self.offset + self.N + 1)

    def at(self, n):
        n = np.asarray(n)
        idx = n - self.offset - 1
        if np.any((idx < 0) | (idx >= self.N)):
            raise IndexError(f"point(s) outside {self.offset + 1}..{self.offset + self.N}")
        return self.values[idx]

    def __mul__(self, other: "IntervalFunction") -> "IntervalFunction":
        if other.N != self.N or other.offset != self.offset:
            raise ValueError("pointwise product needs identical domains")
        return IntervalFunction(self.values * other.values, self.offset)


@dataclass(frozen=True)
class CyclicFunction:
    """A function ``Z/MZ -> D`` with ``values[x]`` holding ``f(x)``."""

    values: np.ndarray

    def __post_init__(self):
        arr = _frozen_values(self.values)
        if arr.size == 0:
            raise ValueError("cyclic function needs modulus >= 1")
        _check_disc(arr)
        object.__setattr__(self, "values", arr)

    @property
    def modulus(self) -> int:
        return int(self.values.size)

    def at(self, x):
        return self.values[np.mod(x, self.modulus)]

    def shift(self, a: int) -> "CyclicFunction":
        """``x -> f(x + a)``."""
        return CyclicFunction(np.roll(self.values, -int(a)))

    def conj(self) -> "CyclicFunction":
        return CyclicFunction(np.conj(self.values))

    def __mul__(self, other: "CyclicFunction") -> "CyclicFunction":
        if other.modulus != self.modulus:
            raise ValueError("pointwise product needs equal moduli")
        return CyclicFunction(self.values * other.values)


@dataclass(frozen=True)
class PhasePolynomial:
    """``P(n) = sum_j c_j n^j`` read mod 1."""

    coefficients: tuple = field(default=(0.0,))

    def __post_init__(self):
        coeffs = tuple(float(c) for c in self.coefficients) or (0.0,)
        object.__setattr__(self, "coefficients", coeffs)

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    def phase(self, n) -> np.ndarray:
        """``P(n) mod 1``, reducing each monomial separately.

        Integer powers of ``n`` are formed exactly (int64, or Python ints for
        scalars), so only the products ``c_j * n^j`` are rounded.
        """
        n = np.asarray(n, dtype=np.int64)
        total = np.zeros(n.shape, dtype=float)
        power = np.ones(n.shape, dtype=np.int64)
        for j, c in enumerate(self.coefficients):
            if j:
                power = power * n
            if c:
                total = total + np.mod(c * power.astype(float), 1.0)
        return np.mod(total, 1.0)

    def __call__(self, n):
        return e(self.phase(n))


def embed_zero_extend(f: IntervalFunction, modulus: int) -> CyclicFunction:
    """Zero-extend ``f`` from ``[N]`` to ``Z/modulus Z`` (``f~(x) = f(x)`` for ``x in 1..N``)."""
    modulus = int(modulus)
    if modulus <= f.N:
        raise ValueError(
            f"modulus {modulus} must exceed N={f.N}, otherwise the window wraps onto itself"
        )
    out = np.zeros(modulus, dtype=np.complex128)
    out[1 : f.N + 1] = f.values
    return CyclicFunction(out)


def restrict(g: CyclicFunction, N: int) -> IntervalFunction:
    """Inverse of :func:`embed_zero_extend` on its image."""
    if N >= g.modulus:
        raise ValueError("restriction window must be shorter than the modulus")
    return IntervalFunction(g.values[1 : N + 1])


def phase_poly_function(P: PhasePolynomial, N: int) -> IntervalFunction:
    return IntervalFunction(P(np.arange(1, int(N) + 1)))


def phase_poly_cyclic(P: PhasePolynomial, modulus: int) -> CyclicFunction:
    """``x -> e(P(x))`` on ``Z/modulus Z``; well defined when ``P`` has denominators dividing the modulus."""
    return CyclicFunction(P(np.arange(int(modulus))))


def mult_derivative(f: CyclicFunction, h: int) -> CyclicFunction:
    """``Delta_h f(x) = f(x + h) conj(f(x))``."""
    v = f.values
    return CyclicFunction(np.roll(v, -(int(h) % v.size)) * np.conj(v))


def mult_derivative_interval(f: IntervalFunction, h: int) -> IntervalFunction:
    """Windowed derivative on ``{n : n, n + h both in the domain of f}``.

    The result keeps absolute positions: its ``offset`` is chosen so that
    ``result.at(n) == f.at(n + h) * conj(f.at(n))``.
    """
    h = int(h)
    N = f.N
    if abs(h) >= N:
        raise ValueError(f"shift {h} leaves an empty overlap window for N={N}")
    lo = max(0, -h)
    hi = N - max(0, h)
    vals = f.values[lo + h : hi + h] * np.conj(f.values[lo:hi])
    return IntervalFunction(vals, offset=f.offset + lo)


def _encode(values: np.ndarray) -> list:
    return [[float(z.real), float(z.imag)] for z in values]


def _decode(pairs) -> np.ndarray:
    try:
        arr = np.array([complex(float(a), float(b)) for a, b in pairs], dtype=np.complex128)
    except (TypeError, ValueError) as exc:
        raise ValueError(f"values must be [re, im] pairs: {exc}") from None
    return arr


def to_json(f: IntervalFunction | CyclicFunction) -> dict:
    if isinstance(f, IntervalFunction):
        doc = {"N": f.N, "values": _encode(f.values)}
        if f.offset:
            doc["offset"] = f.offset
        return doc
    return {"modulus": f.modulus, "values": _encode(f.values)}


def from_json(doc: dict) -> IntervalFunction | CyclicFunction:
    if not isinstance(doc, dict) or "values" not in doc:
        raise ValueError("function document needs a 'values' array")
    values = _decode(doc["values"])
    if "N" in doc:
        if int(doc["N"]) != values.size:
            raise ValueError(f"N={doc['N']} but {values.size} values given")
        return IntervalFunction(values, offset=int(doc.get("offset", 0)))
    if "modulus" in doc:
        if int(doc["modulus"]) != values.size:
            raise ValueError(f"modulus={doc['modulus']} but {values.size} values given")
        return CyclicFunction(values)
    raise ValueError("function document needs either 'N' or 'modulus'")


def save(f: IntervalFunction | CyclicFunction, path: str | Path) -> None:
    Path(path).write_text(json.dumps(to_json(f)) + "\n")


def load(path: str | Path) -> IntervalFunction | CyclicFunction:
    with open(path) as fh:
        return from_json(json.load(fh))


def random_disc_values(rng: np.random.Generator, size: int) -> np.ndarray:
    """Uniform random points of the closed unit disc."""
    r = np.sqrt(rng.random(size))
    return r * np.exp(2j * np.pi * rng.random(size))


def as_values(f: IntervalFunction | CyclicFunction | Sequence[complex]) -> np.ndarray:
    if isinstance(f, (IntervalFunction, CyclicFunction)):
        return f.values
    return np.asarray(f, dtype=np.complex128)
