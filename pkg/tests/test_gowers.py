from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from uniformity_lab.functions import (
    CyclicFunction,
    IntervalFunction,
    PhasePolynomial,
    e,
    phase_poly_function,
    random_disc_values,
)
from uniformity_lab.gowers import (
    InternalInvariantError,
    NormResult,
    WorkBudgetExceeded,
    _real_average,
    correlate,
    cyclic_norm,
    gowers_norm_cyclic,
    gowers_norm_interval,
    gowers_norm_recursive,
    gowers_norm_sampled,
    u2_inverse_witness,
    u2_norm_fft,
)

QUAD5 = CyclicFunction(e(np.arange(5) ** 2 / 5))
FIFTH_ROOT = 0.2**0.25


def rng(seed=0):
    return np.random.Generator(np.random.PCG64(seed))


def random_cyclic(M, seed):
    return CyclicFunction(random_disc_values(rng(seed), M))


def brute_force_power(vals, d):
    """Plain Python enumeration over (x, h_1..h_d), used as an independent oracle."""
    import itertools

    M = len(vals)
    total = 0j
    for x in range(M):
        for hs in itertools.product(range(M), repeat=d):
            prod = 1 + 0j
            for omega in itertools.product((0, 1), repeat=d):
                z = vals[(x + sum(w * h for w, h in zip(omega, hs))) % M]
                prod *= z.conjugate() if sum(omega) % 2 == 0 else z
            total += prod
    return total / M ** (d + 1)


# --- direct ---------------------------------------------------------------------------


def test_direct_constant():
    assert gowers_norm_cyclic(CyclicFunction(np.ones(5)), 2).value == 1.0


def test_direct_linear_phase():
    f = CyclicFunction(e(np.arange(5) / 5))
    assert gowers_norm_cyclic(f, 2).value == pytest.approx(1.0, abs=1e-12)


def test_direct_quadratic_on_z5():
    res = gowers_norm_cyclic(QUAD5, 2)
    assert res.method == "direct"
    assert res.value == pytest.approx(FIFTH_ROOT, abs=1e-10)
    assert res.value == pytest.approx(res.power_value**0.25, rel=1e-12)


@pytest.mark.parametrize("d,M", [(1, 7), (2, 6), (3, 5)])
def test_direct_matches_brute_force(d, M):
    f = random_cyclic(M, 11 * d)
    expected = brute_force_power(list(f.values), d)
    assert abs(expected.imag) < 1e-12
    assert gowers_norm_cyclic(f, d).power_value == pytest.approx(expected.real, rel=1e-12, abs=1e-15)


def test_direct_budget_refusal_names_sampled():
    with pytest.raises(WorkBudgetExceeded, match="--method sampled"):
        gowers_norm_cyclic(CyclicFunction(np.ones(4096)), 5)


def test_pool_does_not_change_bits():
    f = random_cyclic(24, 3)
    serial = gowers_norm_cyclic(f, 3)
    with ThreadPoolExecutor(4) as pool:
        parallel = gowers_norm_cyclic(f, 3, pool=pool)
        rec = gowers_norm_recursive(f, 4, pool=pool)
    assert serial == parallel
    assert rec == gowers_norm_recursive(f, 4)


def test_imaginary_residue_is_an_internal_error():
    with pytest.raises(InternalInvariantError):
        _real_average(1 + 1e-3j, 1)


# --- fft and recursive ---------------------------------------------------------------


def test_fft_single_mode():
    f = CyclicFunction(e(3 * np.arange(16) / 16))
    assert u2_norm_fft(f).value == pytest.approx(1.0, abs=1e-12)


def test_fft_zero():
    assert u2_norm_fft(CyclicFunction(np.zeros(8))).value == 0.0


def test_fft_quadratic_on_z5():
    assert u2_norm_fft(QUAD5).value == pytest.approx(FIFTH_ROOT, abs=1e-10)


def test_recursive_matches_direct_on_z8():
    f = random_cyclic(8, 5)
    assert gowers_norm_recursive(f, 3).power_value == pytest.approx(gowers_norm_cyclic(f, 3).power_value, rel=1e-10)


def test_recursive_constant_d4():
    assert gowers_norm_recursive(CyclicFunction(np.ones(8)), 4).value == pytest.approx(1.0, abs=1e-12)


def test_recursive_quadratic_d3():
    assert gowers_norm_recursive(QUAD5, 3).value == pytest.approx(1.0, abs=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 24), st.integers(2, 4), st.integers(0, 2**32))
def test_methods_agree(M, d, seed):
    f = random_cyclic(M, seed)
    direct = gowers_norm_cyclic(f, d).power_value
    other = u2_norm_fft(f).power_value if d == 2 else gowers_norm_recursive(f, d).power_value
    assert other == pytest.approx(direct, rel=1e-10, abs=1e-14)


def test_recursive_prunes_vanishing_shifts():
    # sparse support: most derivatives vanish, so d=4 on Z/400Z stays cheap
    vals = np.zeros(400, dtype=complex)
    vals[1:11] = 1.0
    res = gowers_norm_recursive(CyclicFunction(vals), 4)
    assert 0 < res.power_value < 1


# --- invariances -----------------------------------------------------------------------


@settings(max_examples=20, deadline=None)
@given(st.integers(3, 20), st.integers(0, 40), st.integers(2, 3), st.integers(0, 2**32))
def test_modulation_and_translation_invariance(M, a, d, seed):
    f = random_cyclic(M, seed)
    base = gowers_norm_cyclic(f, d).value
    modulated = f * CyclicFunction(e(a * np.arange(M) / M))
    assert gowers_norm_cyclic(modulated, d).value == pytest.approx(base, abs=1e-10)
    assert gowers_norm_cyclic(f.shift(a), d).value == pytest.approx(base, abs=1e-10)
    assert gowers_norm_cyclic(f.conj(), d).value == pytest.approx(base, abs=1e-12)


@settings(max_examples=20, deadline=None)
@given(st.integers(2, 16), st.integers(0, 2**32))
def test_monotone_in_d(M, seed):
    f = random_cyclic(M, seed)
    vals = [gowers_norm_cyclic(f, d).value for d in (1, 2, 3)]
    assert vals[0] <= vals[1] + 1e-9
    assert vals[1] <= vals[2] + 1e-9
    assert all(-1e-12 <= v <= 1 + 1e-9 for v in vals)


# --- sampled ---------------------------------------------------------------------------


def test_sampled_constant_is_exact():
    res = gowers_norm_sampled(CyclicFunction(np.ones(9)), 3, 1000, 7)
    assert res.value == 1.0 and res.stderr == 0.0


def test_sampled_quadratic_within_four_stderr():
    res = gowers_norm_sampled(QUAD5, 2, 10**6, 0)
    assert abs(res.power_value - 0.2) <= 4 * res.stderr


def test_sampled_is_deterministic():
    f = random_cyclic(13, 2)
    assert gowers_norm_sampled(f, 3, 5000, 99) == gowers_norm_sampled(f, 3, 5000, 99)


def test_sampled_rejects_few_samples():
    with pytest.raises(ValueError):
        gowers_norm_sampled(QUAD5, 2, 10, 0)


# --- interval norms ----------------------------------------------------------------------


@pytest.mark.parametrize("d", [1, 2, 3])
def test_interval_indicator(d):
    assert gowers_norm_interval(IntervalFunction(np.ones(12)), d).value == pytest.approx(1.0, abs=1e-12)


def test_interval_phase_polynomial():
    P = PhasePolynomial((0.1, 0.2, 0.3))
    assert gowers_norm_interval(phase_poly_function(P, 20), 3).value == pytest.approx(1.0, abs=1e-10)


def test_interval_methods_agree():
    f = IntervalFunction(random_disc_values(rng(8), 10))
    a = gowers_norm_interval(f, 3, "direct").value
    b = gowers_norm_interval(f, 3, "recursive").value
    assert a == pytest.approx(b, rel=1e-10)


def test_norm_result_json_round_trip():
    res = gowers_norm_sampled(QUAD5, 2, 1000, 1)
    assert NormResult.from_json(res.to_json()) == res


def test_dispatch_rejects_unknown_method():
    with pytest.raises(ValueError):
        cyclic_norm(QUAD5, 2, "magic")


# --- correlation and witness -------------------------------------------------------------


def test_correlate_self():
    f = IntervalFunction(e(rng(1).random(9)))
    assert correlate(f, f) == pytest.approx(1.0, abs=1e-15)


def test_correlate_alternating():
    f = IntervalFunction(e(np.arange(1, 11) / 2))
    assert abs(correlate(f, IntervalFunction(np.ones(10)))) < 1e-15


def test_correlate_geometric_sum():
    n = np.arange(1, 11)
    z = correlate(IntervalFunction(e(0.3 * n)), IntervalFunction(e(0.1 * n)))
    r = e(0.2)
    assert z == pytest.approx(r * (1 - r**10) / (1 - r) / 10, abs=1e-14)


def test_correlate_length_mismatch():
    with pytest.raises(ValueError):
        correlate(IntervalFunction(np.ones(3)), IntervalFunction(np.ones(4)))


def test_witness_pure_mode():
    rep = u2_inverse_witness(CyclicFunction(e(7 * np.arange(32) / 32)))
    assert rep.frequency == 7
    assert rep.coefficient == pytest.approx(1.0, abs=1e-12)


def test_witness_constant():
    rep = u2_inverse_witness(CyclicFunction(np.ones(10)))
    assert rep.frequency == 0 and rep.coefficient == pytest.approx(1.0)


def test_witness_noisy_mode():
    x = np.arange(64)
    f = CyclicFunction(0.8 * e(5 * x / 64) + 0.2 * random_disc_values(rng(4), 64))
    rep = u2_inverse_witness(f)
    assert rep.frequency == 5
    assert abs(rep.coefficient) >= u2_norm_fft(f).value ** 2 - 1e-12
    assert rep.lower_bound == pytest.approx(u2_norm_fft(f).value ** 2, rel=1e-12)


def test_witness_ties_pick_smallest():
    x = np.arange(8)
    f = CyclicFunction(0.5 * e(3 * x / 8) + 0.5 * e(6 * x / 8))
    assert u2_inverse_witness(f).frequency == 3
