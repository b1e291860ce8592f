"""Shift families ``{chi_h}``: cocycles, coboundaries, integration and additive-quadruple statistics.

A family lives on ``[N]``; ``chi_h`` is defined on the overlap window
``{n : n, n + h in [N]}``, which is where ``Delta_h`` of a function on
``[N]`` makes sense.

Integration anchors at the left end of the interval: ``theta(n) = chi_{n-1}(1)``
plays the role of ``chi_n(0)`` for sequences on ``Z``, and needs the shifts
``0 .. N-1``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Callable, Iterable, Mapping, Optional, Sequence

import numpy as np

from .functions import IntervalFunction, e, mult_derivative_interval
from .nilsequence import heisenberg_phase
from .reduction import array_csum

UNIT_TOL = 1e-12
EQ7_TOL = 1e-9
DENSE_FRACTION = 0.1
MAX_ENUMERATE = 10**7
SCAN_SAMPLES = 10**6
BATCH = 4096


def window(N: int, h: int) -> tuple:
    """Inclusive ``(lo, hi)`` of ``{n in [N] : n + h in [N]}``; empty when ``lo > hi``."""
    return max(1, 1 - h), min(N, N - h)


class MissingShiftError(KeyError):
    pass


@dataclass(frozen=True)
class HFamily:
    N: int
    chi: Mapping[int, np.ndarray]

    def __post_init__(self):
        if not self.chi:
            raise ValueError("a family needs at least one shift")
        frozen = {}
        for h, vals in sorted(self.chi.items()):
            h = int(h)
            lo, hi = window(self.N, h)
            if lo > hi:
                raise ValueError(f"shift {h} has an empty window for N={self.N}")
            arr = np.array(vals, dtype=np.complex128).reshape(-1)
            if arr.size != hi - lo + 1:
                raise ValueError(f"chi_{h} has {arr.size} values, window needs {hi - lo + 1}")
            if np.max(np.abs(np.abs(arr) - 1.0)) > UNIT_TOL:
                raise ValueError(f"chi_{h} is not unimodular")
            arr.setflags(write=False)
            frozen[h] = arr
        object.__setattr__(self, "chi", frozen)

    @property
    def shifts(self) -> list:
        return list(self.chi)

    def window(self, h: int) -> tuple:
        return window(self.N, h)

    def at(self, h: int, n):
        if h not in self.chi:
            raise MissingShiftError(f"shift {h} not in family")
        lo, hi = self.window(h)
        n = np.asarray(n)
        if np.any((n < lo) | (n > hi)):
            raise IndexError(f"point outside the window {lo}..{hi} of chi_{h}")
        return self.chi[h][n - lo]

    def is_dense(self, rho: float = DENSE_FRACTION) -> bool:
        return len(self.chi) >= rho * (2 * self.N + 1)

    def map(self, fn: Callable[[int, np.ndarray], np.ndarray]) -> "HFamily":
        return HFamily(self.N, {h: fn(h, v) for h, v in self.chi.items()})

    def to_json(self) -> dict:
        return {
            "N": self.N,
            "chi": {str(h): [[float(z.real), float(z.imag)] for z in v] for h, v in self.chi.items()},
        }

    @classmethod
    def from_json(cls, doc: dict) -> "HFamily":
        chi = {int(h): np.array([complex(a, b) for a, b in vals]) for h, vals in doc["chi"].items()}
        return cls(int(doc["N"]), chi)

    @classmethod
    def from_function(cls, N: int, shifts: Iterable[int], fn) -> "HFamily":
        """``chi_h(n) = fn(h, n)`` with ``n`` passed as the window's integer array."""
        chi = {}
        for h in shifts:
            lo, hi = window(N, int(h))
            chi[int(h)] = np.asarray(fn(int(h), np.arange(lo, hi + 1)), dtype=np.complex128)
        return cls(N, chi)


def all_shifts(N: int) -> range:
    return range(-(N - 1), N)


class _Dense:
    """Zero-padded matrix view: row per shift, column per ``n`` in ``[1 - pad, N + pad]``."""

    def __init__(self, family: HFamily, pad: Optional[int] = None):
        N = family.N
        self.N = N
        self.pad = 2 * N + 1 if pad is None else pad
        self.shifts = np.array(family.shifts)
        self.index = np.full(4 * N + 3, -1, dtype=np.int64)
        self.index[self.shifts + 2 * N + 1] = np.arange(self.shifts.size)
        self.lo = np.array([window(N, h)[0] for h in self.shifts])
        self.hi = np.array([window(N, h)[1] for h in self.shifts])
        self.M = np.zeros((self.shifts.size + 1, N + 2 * self.pad), dtype=np.complex128)
        for i, h in enumerate(self.shifts):
            self.M[i, self.lo[i] - 1 + self.pad : self.hi[i] + self.pad] = family.chi[int(h)]
        # last row stays zero; missing shifts index there

    def rows(self, hs) -> np.ndarray:
        hs = np.asarray(hs)
        out = np.full(hs.shape, -1, dtype=np.int64)
        ok = np.abs(hs) <= 2 * self.N + 1
        out[ok] = self.index[hs[ok] + 2 * self.N + 1]
        return out

    def has(self, hs) -> np.ndarray:
        return self.rows(hs) >= 0

    def gather(self, rows, n) -> np.ndarray:
        rows = np.where(rows < 0, self.M.shape[0] - 1, rows)
        return self.M[rows, np.asarray(n) - 1 + self.pad]


# --- coboundaries and cocycles ----------------------------------------------------


def coboundary_family(theta: IntervalFunction, shifts: Optional[Iterable[int]] = None) -> HFamily:
    """``chi_h = Delta_h theta`` on each window."""
    if theta.offset:
        raise ValueError("theta must live on [N]")
    if np.max(np.abs(np.abs(theta.values) - 1.0)) > UNIT_TOL:
        raise ValueError("theta must be unimodular")
    shifts = all_shifts(theta.N) if shifts is None else shifts
    return HFamily(theta.N, {int(h): mult_derivative_interval(theta, h).values for h in shifts})


def verify_cocycle(family: HFamily, pairs: Optional[Sequence[tuple]] = None) -> float:
    """``max |chi_{h+k}(n) - chi_h(n) chi_k(n + h)|`` over every admissible ``(n, h, k)``.

    Without ``pairs``, every ``(h, k)`` with ``h, k, h + k`` in the family is
    used.  Explicit pairs whose sum is missing raise :class:`MissingShiftError`.
    """
    dense = _Dense(family)
    N = family.N
    n = np.arange(1, N + 1)
    if pairs is not None:
        for h, k in pairs:
            if h + k not in family.chi or h not in family.chi or k not in family.chi:
                raise MissingShiftError(f"pair ({h}, {k}) needs shifts {h}, {k}, {h + k}")
        hs = np.array([p[0] for p in pairs])
        ks = np.array([p[1] for p in pairs])
        return _cocycle_residual(dense, hs, ks, n)
    worst = 0.0
    shifts = np.array(family.shifts)
    for h in shifts:
        ks = shifts[dense.has(h + shifts)]
        if ks.size:
            worst = max(worst, _cocycle_residual(dense, np.full(ks.size, h), ks, n))
    return worst


def _cocycle_residual(dense: _Dense, hs, ks, n) -> float:
    N = dense.N
    H = hs[:, None]
    K = ks[:, None]
    nn = n[None, :]
    valid = (
        (nn >= np.maximum(1, 1 - H)) & (nn <= np.minimum(N, N - H))
        & (nn + H >= np.maximum(1, 1 - K)) & (nn + H <= np.minimum(N, N - K))
    )
    lhs = dense.gather(dense.rows(hs + ks)[:, None], nn)
    rhs = dense.gather(dense.rows(hs)[:, None], nn) * dense.gather(dense.rows(ks)[:, None], np.clip(nn + H, 1 - dense.pad, N + dense.pad))
    diff = np.abs(lhs - rhs)[valid]
    return float(diff.max()) if diff.size else 0.0


def _require_shifts(family: HFamily, needed: Iterable[int], what: str) -> None:
    missing = [h for h in needed if h not in family.chi]
    if missing:
        raise MissingShiftError(f"{what} needs shifts {missing[:5]}{'...' if len(missing) > 5 else ''}")


def integrate_theta(family: HFamily) -> IntervalFunction:
    """``theta(n) = chi_{n-1}(1)`` for ``n = 1..N``."""
    N = family.N
    _require_shifts(family, range(N), "integration")
    return IntervalFunction(np.array([family.chi[n - 1][0] for n in range(1, N + 1)]))


def _integration_residual(family: HFamily, theta: np.ndarray, theta_prime: np.ndarray) -> float:
    """``max |chi_h(n) - theta(n + h) conj(theta'(n))|`` over all shifts and windows."""
    worst = 0.0
    for h, vals in family.chi.items():
        lo, hi = family.window(h)
        n = np.arange(lo, hi + 1)
        pred = theta[n + h - 1] * np.conj(theta_prime[n - 1])
        worst = max(worst, float(np.max(np.abs(vals - pred))))
    return worst


def integrate_cocycle(family: HFamily) -> tuple:
    """Return ``(theta, residual)`` with ``residual = max |theta(n+h) - theta(n) chi_h(n)|``."""
    theta = integrate_theta(family)
    t = theta.values
    return theta, _integration_residual(family, t, t)


def quadruple_product(family: HFamily, h1: int, h2: int, h3: int, h4: int, n: int) -> complex:
    """``chi_{h1}(n) chi_{h2}(m) conj(chi_{h3}(n) chi_{h4}(m))`` with ``m = n + h1 - h4``."""
    if h1 + h2 != h3 + h4:
        raise ValueError(f"({h1}, {h2}, {h3}, {h4}) is not an additive quadruple")
    m = n + h1 - h4
    return complex(
        family.at(h1, n) * family.at(h2, m) * np.conj(family.at(h3, n) * family.at(h4, m))
    )


def _quadruple_windows(dense: _Dense, r1, r2, r3, r4, b):
    lo = np.maximum.reduce([dense.lo[r1], dense.lo[r3], dense.lo[r2] + b, dense.lo[r4] + b])
    hi = np.minimum.reduce([dense.hi[r1], dense.hi[r3], dense.hi[r2] + b, dense.hi[r4] + b])
    return lo, hi


def _quadruple_sums(dense: _Dense, r1, r2, r3, r4, b) -> np.ndarray:
    """Sum over ``n`` of the quadruple product; zero padding restricts it to the common window."""
    n = np.arange(1, dense.N + 1)[None, :]
    m = n - b[:, None]
    prod = (
        dense.gather(r1[:, None], n)
        * dense.gather(r2[:, None], m)
        * np.conj(dense.gather(r3[:, None], n) * dense.gather(r4[:, None], m))
    )
    return prod.sum(axis=1)


def additive_quadruple_count(shifts: Sequence[int]) -> int:
    """Number of ``(h1, h2, h3, h4)`` in ``H^4`` with ``h1 + h2 = h3 + h4``."""
    s = np.array(sorted(shifts))
    lo = s.min()
    ind = np.zeros(s.max() - lo + 1)
    ind[s - lo] = 1
    size = 2 * ind.size - 1
    fft = np.fft.rfft(ind, 2 * size)
    sums = np.fft.irfft(fft * fft, 2 * size)[:size]
    return int(round(float(np.sum(np.round(sums) ** 2))))


def _enumerate_quadruples(shifts: np.ndarray, dense: _Dense):
    """Yield batches ``(h1, h2, h3, h4)`` over all additive quadruples in ``H`` (h1, h3, h4 free)."""
    for h1 in shifts:
        h3 = np.repeat(shifts, shifts.size)
        h4 = np.tile(shifts, shifts.size)
        h2 = h3 + h4 - h1
        ok = dense.has(h2)
        yield np.full(int(ok.sum()), h1), h2[ok], h3[ok], h4[ok]


def _sample_quadruples(shifts: np.ndarray, dense: _Dense, samples: int, seed: int):
    """Uniform additive quadruples by rejection: draw ``h1, h3, h4``, keep if ``h3 + h4 - h1`` is a shift."""
    children = np.random.SeedSequence(int(seed) % 2**64).spawn(1 + samples // BATCH)
    produced = 0
    for ss in children:
        if produced >= samples:
            break
        rng = np.random.Generator(np.random.Philox(ss))
        want = min(BATCH, samples - produced)
        got = []
        have = 0
        while have < want:
            draw = shifts[rng.integers(0, shifts.size, size=(2 * want, 3))]
            h2 = draw[:, 1] + draw[:, 2] - draw[:, 0]
            keep = dense.has(h2)
            got.append(np.column_stack([draw[keep, 0], h2[keep], draw[keep, 1], draw[keep, 2]]))
            have += int(keep.sum())
        q = np.concatenate(got)[:want]
        produced += want
        yield q[:, 0], q[:, 1], q[:, 2], q[:, 3]


def _eq7_residual(family: HFamily, samples: int = 20_000, seed: int = 0) -> float:
    dense = _Dense(family)
    shifts = np.array(family.shifts)
    worst = 0.0
    for h1, h2, h3, h4 in _sample_quadruples(shifts, dense, samples, seed):
        r1, r2, r3, r4 = (dense.rows(x) for x in (h1, h2, h3, h4))
        b = h4 - h1
        lo, hi = _quadruple_windows(dense, r1, r2, r3, r4, b)
        n = np.arange(1, family.N + 1)[None, :]
        m = n - b[:, None]
        prod = (
            dense.gather(r1[:, None], n) * dense.gather(r2[:, None], m)
            * np.conj(dense.gather(r3[:, None], n) * dense.gather(r4[:, None], m))
        )
        inside = (n >= lo[:, None]) & (n <= hi[:, None])
        if inside.any():
            worst = max(worst, float(np.max(np.abs(prod[inside] - 1.0))))
    return worst


class FactorizationPreconditionError(ValueError):
    def __init__(self, residual: float):
        self.residual = residual
        super().__init__(f"family violates the exact quadruple identity: residual {residual:.3g}")


def chacha_factorization(family: HFamily, tol: float = EQ7_TOL, samples: int = 20_000, seed: int = 0) -> tuple:
    """Split ``chi_h(n) = theta(n + h) conj(theta'(n))``.

    ``theta(n) = chi_{n-1}(1)`` and ``theta'(n) = theta(n) conj(chi_0(n))``.
    The quadruple identity is checked first on sampled quadruples.
    """
    residual7 = _eq7_residual(family, samples, seed)
    if residual7 > tol:
        raise FactorizationPreconditionError(residual7)
    theta = integrate_theta(family)
    _require_shifts(family, [0], "factorisation")
    theta_prime = IntervalFunction(theta.values * np.conj(family.chi[0]))
    residual = _integration_residual(family, theta.values, theta_prime.values)
    return theta, theta_prime, residual


def phase_align(f: IntervalFunction, family: HFamily) -> HFamily:
    """Rotate each ``chi_h`` by a unit constant so that ``E_n Delta_h f(n) chi_h(n)`` is real and >= 0.

    Shifts where that average vanishes (``|.| <= 1e-12``) are left alone.
    """
    if f.N != family.N:
        raise ValueError(f"N mismatch: f has {f.N}, family has {family.N}")

    def rotate(h, vals):
        deriv = mult_derivative_interval(f, h).values
        s = array_csum(deriv * vals) / vals.size
        if abs(s) <= UNIT_TOL:
            return vals
        return vals * (np.conj(s) / abs(s))

    return family.map(rotate)


# --- the quadruple scan --------------------------------------------------------------


@dataclass(frozen=True)
class ScanBudget:
    max_enumerate: int = MAX_ENUMERATE
    samples: int = SCAN_SAMPLES
    seed: int = 0


@dataclass(frozen=True)
class QuadrupleStats:
    total: int
    passing: int
    threshold: float
    sampled: bool
    skipped: int = 0
    stderr: Optional[float] = None

    @property
    def pass_fraction(self) -> float:
        return self.passing / self.total if self.total else 0.0

    def to_json(self) -> dict:
        doc = asdict(self)
        doc["pass_fraction"] = self.pass_fraction
        return doc


@dataclass
class QuadrupleRecords:
    h: np.ndarray
    a: np.ndarray
    b: np.ndarray
    statistic: np.ndarray
    window: np.ndarray


def quadruple_scan(
    f: Optional[IntervalFunction],
    family: HFamily,
    c: float,
    budget: ScanBudget = ScanBudget(),
    *,
    records: bool = False,
):
    """Count additive quadruples whose windowed statistic reaches ``c``.

    Quadruples are parametrised as ``h1 = h, h2 = h + a + b, h3 = h + a,
    h4 = h + b``; the statistic is
    ``|E_n chi_{h1}(n) chi_{h2}(n - b) conj(chi_{h3}(n) chi_{h4}(n - b))|``
    over the common window.  Quadruples whose window is shorter than ``N/4``
    are counted in ``skipped`` and left out of ``total``.  When ``f`` is given
    the family is first phase-aligned against it (the statistic's modulus does
    not change).  All quadruples are enumerated up to ``budget.max_enumerate``,
    beyond which ``budget.samples`` uniform quadruples are drawn.

    Returns the stats, or ``(stats, QuadrupleRecords)`` with ``records=True``.
    """
    if f is not None:
        family = phase_align(f, family)
    dense = _Dense(family)
    shifts = np.array(family.shifts)
    count = additive_quadruple_count(shifts)
    sampled = count > budget.max_enumerate
    batches = (
        _sample_quadruples(shifts, dense, budget.samples, budget.seed)
        if sampled
        else _enumerate_quadruples(shifts, dense)
    )
    min_window = family.N / 4
    total = passing = skipped = 0
    kept = []
    for h1, h2, h3, h4 in batches:
        for start in range(0, h1.size, BATCH):
            sl = slice(start, start + BATCH)
            q1, q2, q3, q4 = h1[sl], h2[sl], h3[sl], h4[sl]
            r1, r2, r3, r4 = (dense.rows(x) for x in (q1, q2, q3, q4))
            b = q4 - q1
            lo, hi = _quadruple_windows(dense, r1, r2, r3, r4, b)
            length = np.maximum(hi - lo + 1, 0)
            ok = length >= min_window
            skipped += int((~ok).sum())
            if not ok.any():
                continue
            sums = _quadruple_sums(dense, r1[ok], r2[ok], r3[ok], r4[ok], b[ok])
            stat = np.abs(sums) / length[ok]
            total += int(ok.sum())
            passing += int((stat >= c).sum())
            if records:
                kept.append((q1[ok], (q3 - q1)[ok], b[ok], stat, length[ok]))
    stderr = None
    if sampled and total:
        p = passing / total
        stderr = math.sqrt(p * (1 - p) / total)
    stats = QuadrupleStats(total, passing, float(c), sampled, skipped, stderr)
    if not records:
        return stats
    if kept:
        cols = [np.concatenate(col) for col in zip(*kept)]
    else:
        cols = [np.array([], dtype=int)] * 3 + [np.array([])] * 2
    return stats, QuadrupleRecords(*cols)


def lemma2_family(alpha: float, N: int, shifts: Optional[Iterable[int]] = None) -> HFamily:
    """``chi_h(n) = e(2 alpha h n)``, the linear part of ``Delta_h e(alpha n^2)``."""
    shifts = all_shifts(N) if shifts is None else shifts
    return HFamily.from_function(N, shifts, lambda h, n: e(np.mod(2 * alpha * h, 1.0) * n))


def random_family(N: int, seed: int, shifts: Optional[Iterable[int]] = None) -> HFamily:
    """I.i.d. uniform unimodular values for every ``(h, n)``."""
    shifts = all_shifts(N) if shifts is None else list(shifts)
    rng = np.random.Generator(np.random.PCG64(int(seed) % 2**64))
    return HFamily.from_function(N, shifts, lambda h, n: e(rng.random(n.size)))


# --- Furstenberg-Weiss model and the symmetry relation -------------------------------


def fw_mean(specs: Sequence[tuple], signs: Sequence[int] = (1, 1, -1, -1), N: int = 10_000) -> complex:
    """``E_{n in [N]} prod_j chi_j(n)^{sign_j}`` for Heisenberg characters ``chi_j = e(a_j n floor(b_j n))``.

    Phases are combined before exponentiating, pairing the ``k``-th
    positive with the ``k``-th negative factor, so conjugate pairs cancel
    exactly.
    """
    if len(specs) != len(signs):
        raise ValueError("one sign per spec")
    n = np.arange(1, int(N) + 1)
    phases = [heisenberg_phase(a, b, n) for a, b in specs]
    pos = [p for p, s in zip(phases, signs) if s > 0]
    neg = [p for p, s in zip(phases, signs) if s < 0]
    total = np.zeros(n.size)
    for k in range(max(len(pos), len(neg))):
        term = pos[k] if k < len(pos) else 0.0
        if k < len(neg):
            term = term - neg[k]
        total = total + term
    return array_csum(e(total)) / n.size


def fw_trials(trials: int, N: int, seed: int) -> np.ndarray:
    """``fw_mean`` for ``trials`` independent draws of eight uniform frequencies."""
    rng = np.random.Generator(np.random.PCG64(int(seed) % 2**64))
    out = np.empty(trials, dtype=np.complex128)
    for t in range(trials):
        freqs = rng.random((4, 2))
        out[t] = fw_mean([tuple(r) for r in freqs], (1, 1, -1, -1), N)
    return out


def symmetry_residual(chi: Callable[[int, np.ndarray], np.ndarray], h: int, k: int, n: np.ndarray) -> float:
    """``max |chi(h, n+k) conj(chi(h, n)) - chi(k, n+h) conj(chi(k, n))|`` over ``n``."""
    if n.size == 0:
        raise ValueError("window too small for the requested shifts")
    lhs = chi(h, n + k) * np.conj(chi(h, n))
    rhs = chi(k, n + h) * np.conj(chi(k, n))
    return float(np.max(np.abs(lhs - rhs)))


def mixed_derivative_symmetry(theta: IntervalFunction, h: int, k: int) -> float:
    """Symmetry residual for ``chi(h, n) = Delta_h theta(n)`` over every ``n`` with ``n, n+h, n+k, n+h+k`` in range."""
    lo = theta.offset + 1
    hi = theta.offset + theta.N
    n = np.arange(lo, hi + 1)
    keep = np.ones(n.size, dtype=bool)
    for s in (h, k, h + k):
        keep &= (n + s >= lo) & (n + s <= hi)
    n = n[keep]

    def chi(s, m):
        return theta.at(m + s) * np.conj(theta.at(m))

    return symmetry_residual(chi, h, k, n)
