"""Deterministic accumulation and the optional worker-pool map.

Partial sums are combined with :func:`math.fsum`, which is exactly rounded and
hence independent of how the partials were produced or ordered.  That is what
makes threaded and serial runs bit-identical.
"""

from __future__ import annotations

import math
from concurrent.futures import Executor
from typing import Callable, Iterable, Sequence, TypeVar

import numpy as np

T = TypeVar("T")
R = TypeVar("R")


def csum(values: Iterable[complex]) -> complex:
    """Exactly rounded sum of complex numbers (real and imaginary parts separately)."""
    vals = list(values)
    return complex(math.fsum(v.real for v in vals), math.fsum(v.imag for v in vals))


def array_csum(arr: np.ndarray) -> complex:
    arr = np.asarray(arr).reshape(-1)
    if np.iscomplexobj(arr):
        return complex(math.fsum(arr.real.tolist()), math.fsum(arr.imag.tolist()))
    return complex(math.fsum(arr.tolist()), 0.0)


def array_fsum(arr: np.ndarray) -> float:
    return math.fsum(np.asarray(arr, dtype=float).reshape(-1).tolist())


def pmap(fn: Callable[[T], R], items: Sequence[T], pool: Executor | None = None) -> list[R]:
    """``[fn(x) for x in items]``, optionally on ``pool``; output order always matches input."""
    if pool is None:
        return [fn(x) for x in items]
    return list(pool.map(fn, items))
