import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from uniformity_lab.nilpotent import (
    E1,
    E2,
    IDENTITY,
    TILDE_IDENTITY,
    AffineForm,
    H3Element,
    PetalElement,
    PolySequence2D,
    TildeElement,
    bi_sequence,
    gen_pow,
    h3_close,
    h3_commutator,
    h3_conj,
    h3_inv,
    h3_mul,
    h3_reduce,
    heisenberg_sequence,
    iterated_derivative,
    lattice_element,
    pair_mul,
    petal_mul,
    poly_seq_eval,
    rho_action,
    semidirect_sequence,
    subgroup_membership,
    tilde_close,
    tilde_commutator,
    tilde_inv,
    tilde_mul,
    tilde_reduce,
)

reals = st.floats(-50, 50, allow_nan=False)
h3s = st.builds(H3Element, reals, reals, reals)
petals = st.builds(PetalElement, reals, reals)
tildes = st.builds(TildeElement, reals, h3s, petals)
small = st.floats(-3, 3, allow_nan=False)
small_tildes = st.builds(TildeElement, small, st.builds(H3Element, small, small, small), st.builds(PetalElement, small, small))


def as_tuple(x):
    return tuple(float(c) for c in x.as_tuple())


def close(x, y, tol=1e-12):
    scale = max(1.0, *(abs(c) for c in as_tuple(x)), *(abs(c) for c in as_tuple(y)))
    return h3_close(x, y, tol * scale**2)


# --- the oracle: unipotent 3x3 matrices ----------------------------------------------


def mat(x):
    t1, t2, t12 = as_tuple(x)
    return np.array([[1.0, t1, t12], [0.0, 1.0, t2], [0.0, 0.0, 1.0]])


def unmat(m):
    return H3Element(m[0, 1], m[1, 2], m[0, 2])


def frac(v):
    return v - math.floor(v)


def test_oracle_commutator_of_generators():
    g1, g2 = mat(E1), mat(E2)
    comm = np.linalg.inv(g1) @ np.linalg.inv(g2) @ g1 @ g2
    assert as_tuple(unmat(comm)) == (0.0, 0.0, 1.0)
    assert as_tuple(h3_commutator(E1, E2)) == (0.0, 0.0, 1.0)


@settings(max_examples=200)
@given(h3s, h3s)
def test_oracle_multiplication(x, y):
    assert close(h3_mul(x, y), unmat(mat(x) @ mat(y)))


@settings(max_examples=200)
@given(h3s)
def test_oracle_reduction_formula(x):
    t1, t2, t12 = as_tuple(x)
    # the formula is discontinuous at the seams of the fundamental domain
    for v in (t1, t2, t12 - math.floor(t2) * t1):
        assume(min(frac(v), 1 - frac(v)) > 1e-6)
    expected = (frac(t1), frac(t2), frac(t12 - math.floor(t2) * t1))
    red = h3_reduce(x)
    got = as_tuple(red.point)
    for g, w in zip(got, expected):
        d = abs(g - w)
        assert min(d, 1 - d) <= 1e-10 * max(1.0, abs(t1 * t2))
    gamma = mat(lattice_element(red.lattice_word))
    assert np.allclose(gamma, np.round(gamma))
    assert close(unmat(mat(x) @ gamma), red.point, 1e-10)


def test_oracle_semidirect_display():
    # (0, (e2^{bn}, e1^{cn})) (dh, (id, id)) = (dh, (e2^{bn} e1^{cn dh}, e1^{cn}))
    beta, gamma, delta, h, n = 0.7, 0.3, 0.2, 7, 4
    x = semidirect_sequence(beta, gamma, delta, h, n)
    g_expected = unmat(mat(gen_pow("e2", beta * n)) @ mat(gen_pow("e1", gamma * n * delta * h)))
    assert x.t == pytest.approx(delta * h)
    assert close(x.g, g_expected)
    assert (x.g1.a, x.g1.c) == pytest.approx((gamma * n, 0.0))
    # after reduction: ({dh}, (e2^{bn} e1^{{dh} cn}, e1^{cn})) up to reduction of each component
    red = tilde_reduce(x).point
    fd = frac(delta * h)
    g_display = unmat(mat(gen_pow("e2", beta * n)) @ mat(gen_pow("e1", fd * gamma * n)))
    assert red.t == pytest.approx(fd, abs=1e-12)
    assert close(red.g, h3_reduce(g_display).point, 1e-10)


@pytest.mark.parametrize("alpha,beta", [(0.3, 0.7), (0.123, 0.987), (0.5, 0.25)])
def test_oracle_heisenberg_evaluation(alpha, beta):
    for n in range(1, 60):
        m = mat(gen_pow("e2", beta * n)) @ mat(gen_pow("e1", alpha * n))
        z = as_tuple(h3_reduce(unmat(m)).point)[2]
        want = alpha * n * math.floor(beta * n)
        d = abs(frac(-z) - frac(want))
        assert min(d, 1 - d) <= 1e-10


def test_oracle_semidirect_evaluation():
    beta, gamma, delta = 0.7, 0.3, 0.2
    for h in range(0, 12):
        for n in range(1, 30):
            z = float(tilde_reduce(semidirect_sequence(beta, gamma, delta, h, n)).point.g.t12)
            want = gamma * frac(delta * h) * n * math.floor(beta * n)
            d = abs(frac(-z) - frac(want))
            assert min(d, 1 - d) <= 1e-10


# --- Heisenberg group ----------------------------------------------------------------


def test_mul_example():
    assert as_tuple(h3_mul(H3Element(1, 2, 3), H3Element(4, 5, 6))) == (5, 7, 14)


def test_identity_and_inverse_examples():
    x = H3Element(1, 2, 3)
    assert as_tuple(h3_mul(x, IDENTITY)) == as_tuple(x)
    assert as_tuple(h3_inv(x)) == (-1, -2, -1)
    assert as_tuple(h3_inv(IDENTITY)) == (0, 0, 0)
    assert as_tuple(h3_inv(H3Element(2.5, 0, 0))) == (-2.5, 0, 0)


@settings(max_examples=300)
@given(h3s, h3s, h3s)
def test_associativity(x, y, z):
    assert close(h3_mul(h3_mul(x, y), z), h3_mul(x, h3_mul(y, z)))


@given(h3s)
def test_inverses(x):
    assert close(h3_mul(x, h3_inv(x)), IDENTITY)
    assert close(h3_mul(h3_inv(x), x), IDENTITY)


def test_reduce_examples():
    red = h3_reduce(H3Element(1.5, 2.25, 0.6))
    assert as_tuple(red.point) == pytest.approx((0.5, 0.25, 0.6), abs=1e-12)
    assert close(h3_mul(H3Element(1.5, 2.25, 0.6), lattice_element(red.lattice_word)), red.point)
    x = H3Element(0.1, 0.2, 0.3)
    red = h3_reduce(x)
    assert as_tuple(red.point) == as_tuple(x) and red.lattice_word == (0, 0, 0)
    assert as_tuple(h3_reduce(H3Element(2, 3, 5)).point) == (0, 0, 0)


@settings(max_examples=300)
@given(h3s)
def test_reduction_invariants(x):
    red = h3_reduce(x)
    assert all(0 <= c < 1 for c in as_tuple(red.point))
    assert close(h3_mul(x, lattice_element(red.lattice_word)), red.point, 1e-10)
    assert h3_reduce(red.point).lattice_word == (0, 0, 0)


@settings(max_examples=200)
@given(h3s, st.tuples(*[st.integers(-20, 20)] * 3))
def test_reduction_is_well_defined_on_cosets(x, word):
    a = as_tuple(h3_reduce(x).point)
    b = as_tuple(h3_reduce(h3_mul(x, lattice_element(word))).point)
    for u, v in zip(a, b):
        d = abs(u - v)
        assert min(d, 1 - d) <= 1e-10 * max(1.0, *(abs(c) for c in as_tuple(x))) ** 2 * 50


def test_subgroup_membership_examples():
    assert subgroup_membership(H3Element(0, 0, 0.5), "center_G2")
    assert subgroup_membership(H3Element(0.3, 0, 0.1), "petal")
    assert not subgroup_membership(H3Element(0.3, 0, 0.1), "center_G2")
    x = H3Element(0.1, 0.2, 0)
    assert not subgroup_membership(x, "center_G2") and not subgroup_membership(x, "petal")


# --- petal subgroup and the semidirect product -------------------------------------------


@given(petals, petals)
def test_petal_is_abelian(p, q):
    assert petal_mul(p, q) == petal_mul(q, p)


@given(petals, h3s)
def test_petal_is_normal(p, g):
    c = h3_conj(p.embed(), g)
    assert subgroup_membership(c, "petal", tol=1e-12 * max(1.0, abs(g.t1), abs(g.t2), abs(p.a)) ** 2)


def test_rho_examples():
    pair = (H3Element(0.1, 0.2, 0.3), PetalElement(0.4, 0.5))
    g, g1 = rho_action(0.0, pair)
    assert as_tuple(g) == as_tuple(pair[0]) and g1 == pair[1]
    g, g1 = rho_action(1.0, (IDENTITY, PetalElement(1.0, 0.0)))
    assert as_tuple(g) == (1, 0, 0) and g1 == PetalElement(1.0, 0.0)


@given(small, small, st.builds(H3Element, small, small, small), st.builds(PetalElement, small, small))
def test_rho_is_an_action(s, t, g, p):
    a = rho_action(s, rho_action(t, (g, p)))
    b = rho_action(s + t, (g, p))
    assert close(a[0], b[0]) and a[1] == b[1]


@given(small, st.builds(H3Element, small, small, small), st.builds(PetalElement, small, small),
       st.builds(H3Element, small, small, small), st.builds(PetalElement, small, small))
def test_rho_acts_by_automorphisms(t, g, p, g2, p2):
    lhs = rho_action(t, pair_mul((g, p), (g2, p2)))
    rhs = pair_mul(rho_action(t, (g, p)), rho_action(t, (g2, p2)))
    assert close(lhs[0], rhs[0])
    assert lhs[1].a == pytest.approx(rhs[1].a, abs=1e-12) and lhs[1].c == pytest.approx(rhs[1].c, abs=1e-12)


def test_tilde_identity():
    x = TildeElement(0.3, H3Element(0.1, 0.2, 0.3), PetalElement(0.4, 0.5))
    assert tilde_close(tilde_mul(x, TILDE_IDENTITY), x)
    assert tilde_close(tilde_mul(TILDE_IDENTITY, x), x)


@settings(max_examples=200)
@given(small_tildes, small_tildes, small_tildes)
def test_tilde_associativity_and_inverse(x, y, z):
    assert tilde_close(tilde_mul(tilde_mul(x, y), z), tilde_mul(x, tilde_mul(y, z)), 1e-10)
    assert tilde_close(tilde_mul(x, tilde_inv(x)), TILDE_IDENTITY, 1e-10)


@settings(max_examples=100)
@given(small_tildes, small_tildes, small_tildes, small_tildes)
def test_tilde_is_three_step(x, y, z, w):
    c = tilde_commutator(tilde_commutator(tilde_commutator(x, y), z), w)
    assert tilde_close(c, TILDE_IDENTITY, 1e-10)


def test_tilde_is_not_two_step():
    x = TildeElement(1.0)
    y = TildeElement(0.0, IDENTITY, PetalElement(1.0, 0.0))
    z = TildeElement(0.0, E2)
    assert not tilde_close(tilde_commutator(tilde_commutator(x, y), z), TILDE_IDENTITY, 1e-3)


def test_tilde_reduce_trivial_cases():
    x = TildeElement(2.0, H3Element(1, -3, 4), PetalElement(5, 6))
    red = tilde_reduce(x)
    assert tilde_close(red.point, TILDE_IDENTITY)
    assert tilde_close(red.lattice_word, tilde_inv(x), 1e-10)
    y = TildeElement(0.5, H3Element(0.1, 0.2, 0.3), PetalElement(0.4, 0.5))
    red = tilde_reduce(y)
    assert tilde_close(red.point, y) and tilde_close(red.lattice_word, TILDE_IDENTITY)


@settings(max_examples=200)
@given(small_tildes)
def test_tilde_reduce_invariants(x):
    red = tilde_reduce(x)
    p = red.point
    assert 0 <= p.t < 1 and 0 <= p.g1.a < 1 and 0 <= p.g1.c < 1
    assert all(0 <= c < 1 for c in as_tuple(p.g))
    assert tilde_close(tilde_mul(x, red.lattice_word), p, 1e-10)


# --- sequences and derivatives --------------------------------------------------------------


def test_poly_seq_examples():
    seq = PolySequence2D((("e2", AffineForm(b=0.7)), ("e1", AffineForm(b=0.3))))
    assert as_tuple(poly_seq_eval(seq, 0, 4)) == pytest.approx((1.2, 2.8, 0.0), abs=1e-15)
    assert as_tuple(poly_seq_eval(PolySequence2D(), 3, 4)) == (0, 0, 0)
    assert as_tuple(PolySequence2D((("e1", AffineForm(b=0.37)),))(0, 1)) == pytest.approx((0.37, 0, 0))
    assert heisenberg_sequence(0.3, 0.7) == seq


def test_vectorised_evaluation():
    g = bi_sequence(0.3, 0.7)(np.arange(5), np.arange(5))
    assert np.shape(g.t1) == (5,)


@pytest.mark.parametrize("a,b", [(1, 2), (3, -1), (2, 5)])
def test_partial_derivatives(a, b):
    alpha, beta = 0.31, 0.77
    g = bi_sequence(alpha, beta)
    hh = iterated_derivative(g, [("h", a), ("h", b)])
    # d_h^a d_n^b g: the n-derivative is applied first
    hn = iterated_derivative(g, [("n", b), ("h", a)])
    for h, n in [(0, 0), (3, 7), (-2, 11)]:
        assert close(hh(h, n), IDENTITY)
        assert close(hn(h, n), H3Element(0, 0, -alpha * beta * a * b))
        assert subgroup_membership(hn(h, n), "center_G2")
        for v in ("h", "n"):
            assert close(partial_derivative3(g, a, b, v)(h, n), IDENTITY)


def partial_derivative3(g, a, b, v):
    return iterated_derivative(g, [("n", b), ("h", a), (v, 2)])


def test_json_round_trip():
    x = TildeElement(0.25, H3Element(0.1, 0.2, 0.3), PetalElement(0.4, 0.5))
    assert x.to_json() == [0.25, [0.1, 0.2, 0.3], [0.4, 0.5]]
    assert TildeElement.from_json(x.to_json()) == x
    assert H3Element.from_json(x.g.to_json()) == x.g
