"""Gowers uniformity norms: direct enumeration, derivative recursion, FFT and sampling.

All four routes compute the same average

    ||f||_{U^d}^{2^d} = E_{x, h_1..h_d} Delta_{h_1} ... Delta_{h_d} f(x)

and are cross-checked against each other in the test suite.  The direct route
is the oracle; the others exist because it costs ``M^(d+1)`` operations.
"""

from __future__ import annotations

import math
from concurrent.futures import Executor
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from .functions import CyclicFunction, IntervalFunction, embed_zero_extend, mult_derivative
from .reduction import array_csum, array_fsum, csum, pmap

DEFAULT_WORK_BUDGET = 10**10
IMAG_RESIDUE_TOL = 1e-9
SAMPLED_BATCHES = 10
METHODS = ("direct", "recursive", "fft_u2", "sampled")


class WorkBudgetExceeded(RuntimeError):
    def __init__(self, method: str, d: int, modulus: int, required: float, budget: int):
        self.required = required
        self.budget = budget
        super().__init__(
            f"{method} U^{d} computation on Z/{modulus}Z needs about {required:.3g} "
            f"elementary operations, above the work budget {budget:.3g}; raise the budget "
            f"or use the sampled estimator (--method sampled)"
        )


class InternalInvariantError(RuntimeError):
    """A provably true numerical fact failed (e.g. a Gowers average came out non-real)."""


@dataclass(frozen=True)
class NormResult:
    value: float
    power_value: float
    d: int
    method: str
    stderr: Optional[float] = None

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, doc: dict) -> "NormResult":
        return cls(**doc)


@dataclass(frozen=True)
class WitnessReport:
    frequency: int
    coefficient: complex
    lower_bound: float

    def to_json(self) -> dict:
        return {
            "frequency": self.frequency,
            "coefficient": [self.coefficient.real, self.coefficient.imag],
            "abs_coefficient": abs(self.coefficient),
            "lower_bound": self.lower_bound,
        }


def _root(power: float, d: int) -> float:
    return max(power, 0.0) ** (1.0 / 2**d)


def _result(power: float, d: int, method: str, stderr: Optional[float] = None) -> NormResult:
    return NormResult(_root(power, d), power, d, method, stderr)


def _check_d(d: int, lowest: int = 1) -> int:
    d = int(d)
    if d < lowest:
        raise ValueError(f"d must be >= {lowest}, got {d}")
    return d


def _real_average(total: complex, count: float) -> float:
    avg = total / count
    if abs(avg.imag) >= IMAG_RESIDUE_TOL:
        raise InternalInvariantError(
            f"Gowers average has imaginary part {avg.imag:.3g}; it must be real"
        )
    return avg.real


# --- direct enumeration ---------------------------------------------------------


def direct_cost(modulus: int, d: int) -> float:
    return float(modulus) ** (d + 1)


def gowers_norm_cyclic(
    f: CyclicFunction,
    d: int,
    *,
    budget: int = DEFAULT_WORK_BUDGET,
    pool: Executor | None = None,
) -> NormResult:
    """Brute-force average over every ``(x, h_1, ..., h_d)``.

    Parallelises over ``h_1`` when a pool is given; the per-row partial sums
    are combined with an exactly rounded sum, so the result does not depend on
    the thread count.
    """
    from ._kernels import direct_row

    d = _check_d(d)
    n = f.modulus
    cost = direct_cost(n, d)
    if cost > budget:
        raise WorkBudgetExceeded("direct", d, n, cost, budget)
    vals = np.ascontiguousarray(f.values)
    rows = pmap(lambda h: complex(*direct_row(vals, d, h)), range(n), pool)
    return _result(_real_average(csum(rows), float(n) ** (d + 1)), d, "direct")


# --- FFT and recursion ----------------------------------------------------------


def fourier_coefficients(f: CyclicFunction | np.ndarray) -> np.ndarray:
    """``f^(xi) = E_x f(x) e(-x xi / M)``."""
    vals = f.values if isinstance(f, CyclicFunction) else np.asarray(f)
    return np.fft.fft(vals) / vals.size


def _u2_power(vals: np.ndarray) -> float:
    return array_fsum(np.abs(fourier_coefficients(vals)) ** 4)


def u2_norm_fft(f: CyclicFunction) -> NormResult:
    """``||f||_{U^2}^4 = sum_xi |f^(xi)|^4``."""
    return _result(_u2_power(f.values), 2, "fft_u2")


def live_shifts(vals: np.ndarray) -> np.ndarray:
    """Shifts ``h`` for which ``Delta_h`` of ``vals`` is not identically zero.

    The skipped shifts contribute exact zeros to every derivative average, so
    pruning them changes nothing but the running time (zero-extended interval
    functions keep only ``2N - 1`` of their ``2^d N`` shifts).
    """
    n = vals.size
    support = (vals != 0).astype(float)
    if n <= 256:
        idx = np.arange(n)
        overlap = np.array([np.dot(support[(idx + h) % n], support) for h in range(n)])
    else:
        spec = np.fft.fft(support)
        overlap = np.fft.ifft(np.conj(spec) * spec).real
    return np.nonzero(overlap > 0.5)[0]


def _derivative_rows(vals: np.ndarray, shifts: np.ndarray) -> np.ndarray:
    n = vals.size
    idx = (np.arange(n)[None, :] + shifts[:, None]) % n
    return vals[idx] * np.conj(vals)[None, :]


def _u3_power(vals: np.ndarray) -> float:
    n = vals.size
    shifts = live_shifts(vals)
    if shifts.size == 0:
        return 0.0
    total = []
    for chunk in np.array_split(shifts, max(1, (shifts.size * n) // 2**20 + 1)):
        coeffs = np.fft.fft(_derivative_rows(vals, chunk), axis=1) / n
        total.append(array_fsum(np.abs(coeffs) ** 4))
    return math.fsum(total) / n


def _recursive_power(vals: np.ndarray, d: int, pool: Executor | None = None) -> float:
    if d == 1:
        return abs(array_csum(vals) / vals.size) ** 2
    if d == 2:
        return _u2_power(vals)
    if d == 3:
        return _u3_power(vals)
    n = vals.size
    shifts = live_shifts(vals)

    def branch(h):
        return _recursive_power(np.roll(vals, -int(h)) * np.conj(vals), d - 1)

    return math.fsum(pmap(branch, list(shifts), pool)) / n


def recursive_cost(f: CyclicFunction, d: int) -> float:
    n = f.modulus
    live = live_shifts(f.values).size
    return float(live) ** max(d - 2, 0) * n * max(math.log2(n), 1.0)


def gowers_norm_recursive(
    f: CyclicFunction,
    d: int,
    *,
    budget: int = DEFAULT_WORK_BUDGET,
    pool: Executor | None = None,
) -> NormResult:
    """``||f||_{U^d}^{2^d} = E_h ||Delta_h f||_{U^{d-1}}^{2^{d-1}}``, bottoming out in the FFT form of U^2."""
    d = _check_d(d, 2)
    cost = recursive_cost(f, d)
    if cost > budget:
        raise WorkBudgetExceeded("recursive", d, f.modulus, cost, budget)
    return _result(_recursive_power(f.values, d, pool), d, "recursive")


# --- Monte Carlo ----------------------------------------------------------------


def _cube_products(vals: np.ndarray, x: np.ndarray, hs: np.ndarray) -> np.ndarray:
    """``Delta_{h_1} ... Delta_{h_d} f(x)`` for each row, as a product over cube vertices."""
    n = vals.size
    d = hs.shape[1]
    out = np.ones(x.shape[0], dtype=np.complex128)
    for mask in range(2**d):
        bits = np.array([(mask >> j) & 1 for j in range(d)])
        pts = (x + hs @ bits) % n
        v = vals[pts]
        if (d - int(bits.sum())) % 2:
            v = np.conj(v)
        out *= v
    return out


def gowers_norm_sampled(
    f: CyclicFunction,
    d: int,
    samples: int,
    seed: int,
    *,
    chunk: int = 1 << 16,
) -> NormResult:
    """Monte Carlo estimate of the ``2^d``-th power with a batch-means standard error.

    ``power_value`` is the unbiased quantity.  ``value`` is its clamped
    ``2^d``-th root, which is biased for small sample counts.
    """
    d = _check_d(d)
    samples = int(samples)
    if samples < 100:
        raise ValueError("sampled estimator needs at least 100 samples")
    rng = np.random.Generator(np.random.PCG64(int(seed) % 2**64))
    n = f.modulus
    reals = np.empty(samples, dtype=float)
    for start in range(0, samples, chunk):
        stop = min(samples, start + chunk)
        draw = rng.integers(0, n, size=(stop - start, d + 1))
        reals[start:stop] = _cube_products(f.values, draw[:, 0], draw[:, 1:]).real
    power = array_fsum(reals) / samples
    batch_means = np.array([array_fsum(b) / b.size for b in np.array_split(reals, SAMPLED_BATCHES)])
    stderr = float(np.std(batch_means, ddof=1) / math.sqrt(SAMPLED_BATCHES))
    return _result(power, d, "sampled", stderr)


# --- interval norms -------------------------------------------------------------


def cyclic_norm(
    f: CyclicFunction,
    d: int,
    method: str = "recursive",
    *,
    budget: int = DEFAULT_WORK_BUDGET,
    pool: Executor | None = None,
    samples: int = 10**5,
    seed: int = 0,
) -> NormResult:
    """Dispatch on ``method``; ``recursive`` quietly handles d <= 2 through the FFT form."""
    if method == "direct":
        return gowers_norm_cyclic(f, d, budget=budget, pool=pool)
    if method == "recursive":
        if d <= 2:
            power = _recursive_power(f.values, _check_d(d))
            return _result(power, d, "recursive" if d == 1 else "fft_u2")
        return gowers_norm_recursive(f, d, budget=budget, pool=pool)
    if method in ("fft", "fft_u2"):
        if d != 2:
            raise ValueError("the FFT method computes U^2 only")
        return u2_norm_fft(f)
    if method == "sampled":
        return gowers_norm_sampled(f, d, samples, seed)
    raise ValueError(f"unknown method {method!r}; choose from direct, recursive, fft, sampled")


def interval_modulus(N: int, d: int) -> int:
    return 2**d * N


def gowers_norm_interval(
    f: IntervalFunction,
    d: int,
    method: str = "recursive",
    **kwargs,
) -> NormResult:
    """``||f||_{U^d[N]} = ||f~||_{U^d(Z/MZ)} / ||1_[N]||_{U^d(Z/MZ)}`` with ``M = 2^d N``."""
    d = _check_d(d)
    M = interval_modulus(f.N, d)
    num = cyclic_norm(embed_zero_extend(f, M), d, method, **kwargs)
    ones = IntervalFunction(np.ones(f.N))
    den = cyclic_norm(embed_zero_extend(ones, M), d, method, **kwargs)
    value = num.value / den.value
    stderr = None
    if num.stderr is not None:
        stderr = num.stderr / den.power_value if den.power_value > 0 else None
    return NormResult(value, value ** (2**d), d, num.method, stderr)


# --- correlation and the U^2 witness --------------------------------------------


def correlate(f: IntervalFunction, g: IntervalFunction) -> complex:
    """``E_{n in [N]} f(n) conj(g(n))``."""
    if f.N != g.N:
        raise ValueError(f"length mismatch: N={f.N} vs N={g.N}")
    return array_csum(f.values * np.conj(g.values)) / f.N


def u2_inverse_witness(f: CyclicFunction) -> WitnessReport:
    """Largest Fourier coefficient of ``f``; the smallest index wins ties.

    For D-valued ``f``, ``sum |f^|^4 <= max |f^|^2 * sum |f^|^2 <= max |f^|^2``,
    so ``|f^(xi)| >= ||f||_{U^2}^2`` at the returned frequency.
    """
    coeffs = fourier_coefficients(f)
    mags = np.abs(coeffs)
    k = int(np.argmax(mags))
    power = array_fsum(mags**4)
    return WitnessReport(k, complex(coeffs[k]), math.sqrt(max(power, 0.0)))


def derivative_power(f: CyclicFunction, hs) -> CyclicFunction:
    """Apply ``Delta_h`` for each ``h`` in ``hs`` in turn."""
    for h in hs:
        f = mult_derivative(f, h)
    return f
