"""Riesz decompositions: projectors, dual-route kernels, refinement."""

import random
from fractions import Fraction

import pytest

from conftest import diag_operator, field, int_matrix_operator, random_unimodular
from spectra.errors import OrderMismatch, RankMismatch
from spectra.fredholm import char_series
from spectra.linalg import (
    columns,
    from_columns,
    identity,
    mat_inverse,
    mat_mul,
    solve_in_span,
)
from spectra.newton import slope_factorization
from spectra.operators import CompactOperatorMatrix, DecayProfile
from spectra.riesz import (
    kernel_basis,
    q_star,
    refine_factorization,
    riesz_from_factorization,
    riesz_from_zero,
    slope_decomposition,
    slack_threshold,
)
from spectra.rings import AffinoidRing, PadicScalar


def conjugated_operator(K, diag_vals, g_rows):
    """g @ diag @ g^-1 over the field, exact to working precision."""
    g = [[K.from_int(x) for x in row] for row in g_rows]
    ginv = mat_inverse(K, g)
    d = [[K.from_int(diag_vals[i]) if i == j else K.zero() for j in range(len(diag_vals))] for i in range(len(diag_vals))]
    return CompactOperatorMatrix(K, mat_mul(mat_mul(g, d), ginv), DecayProfile.finite())


def test_q_star_examples():
    K = field(3, 10)
    q = [K.one(), K.from_int(2), K.from_int(3)]
    rev = q_star(K, q)
    assert rev == [K.from_int(3), K.from_int(2), K.one()]
    assert q_star(K, [K.one()]) == [K.one()]
    assert q_star(K, rev) == q  # involution on unit-constant-term polynomials


def test_kernel_basis_examples():
    K = field(5, 16)
    z, o = K.zero(), K.one()
    b = kernel_basis(K, [[z, z], [z, K.from_int(4)]])
    assert len(b) == 1 and b[0][0] == o and b[0][1].is_zero
    assert len(kernel_basis(K, [[z, z], [z, z]])) == 2
    b2 = kernel_basis(K, [[K.from_int(5), o], [z, z]])
    assert len(b2) == 1
    # kernel vector proportional to (1, -5)
    ratio = b2[0][1] * b2[0][0].invert()
    assert ratio == K.from_int(-5)


def test_kernel_basis_rank_enforcement():
    K = field(5, 16)
    with pytest.raises(RankMismatch):
        kernel_basis(K, [[K.one(), K.zero()], [K.zero(), K.one()]], expected_rank=1)


def test_riesz_from_zero_diagonal():
    K = field(5, 20)
    phi = diag_operator(K, [1, 5])
    F = char_series(phi, 2)
    dec = riesz_from_zero(phi, F, K.one(), 1)
    assert dec.rank == 1
    assert dec.kernel_basis[0][0].is_invertible and dec.kernel_basis[0][1].is_zero
    assert dec.char_on_n[1] == K.from_int(-1)
    laws = dec.verify_projector_laws(phi.entries)
    assert laws["idempotent_floor"] >= slack_threshold(K)
    assert laws["commutant_floor"] >= slack_threshold(K)


def test_riesz_from_zero_order_mismatch():
    K = field(5, 20)
    phi = diag_operator(K, [1, 5])
    F = char_series(phi, 2)
    with pytest.raises(OrderMismatch):
        riesz_from_zero(phi, F, K.one(), 2)


def test_riesz_from_zero_unipotent_total():
    R = AffinoidRing(2, 20, 4, ("T1", "T2"))
    t1 = R.variable("T1")
    phi = CompactOperatorMatrix(R, [[R.one(), t1], [R.zero(), R.one()]], DecayProfile.finite())
    F = char_series(phi, 2)
    dec = riesz_from_zero(phi, F, PadicScalar.one(2, 20), 2)
    assert dec.rank == 2  # N is the whole module


def test_riesz_from_zero_conjugated():
    K = field(5, 20)
    rng = random.Random(21)
    for _ in range(10):
        g = random_unimodular(rng, 2, 5)
        phi = conjugated_operator(K, [1, 5], g)
        F = char_series(phi, 2)
        dec = riesz_from_zero(phi, F, K.one(), 1)
        assert dec.rank == 1
        assert dec.char_on_n[1] == K.from_int(-1)


def test_riesz_from_factorization_diagonal():
    K = field(5, 20)
    phi = diag_operator(K, [1, 5, 25])
    F = char_series(phi, 3)
    fact = slope_factorization(F, Fraction(3, 2))
    dec = riesz_from_factorization(phi, F, fact)
    assert dec.rank == 2
    assert dec.route == "both"
    for n in range(3):
        assert dec.char_on_n[n] == fact.q[n]
    # S = 1 - 25X on the complement
    assert dec.s.coeffs[1] == K.from_int(-25)


def test_riesz_from_factorization_nilpotent_block():
    K = field(5, 20)
    phi = int_matrix_operator(K, [[0, 1, 0], [0, 0, 0], [0, 0, 5]])
    F = char_series(phi, 3)
    fact = slope_factorization(F, Fraction(1))
    dec = riesz_from_factorization(phi, F, fact)
    assert dec.rank == 1
    assert dec.kernel_basis[0][2].is_invertible
    assert dec.kernel_basis[0][0].is_zero and dec.kernel_basis[0][1].is_zero


def test_route_agreement_on_conjugates():
    rng = random.Random(33)
    K = field(3, 20)
    for _ in range(12):
        g = random_unimodular(rng, 3, 3)
        phi = conjugated_operator(K, [1, 3, 9], g)
        F = char_series(phi, 3)
        fact = slope_factorization(F, Fraction(1, 2))
        dec = riesz_from_factorization(phi, F, fact)
        assert dec.rank == 1
        assert dec.route == "both"
        # round-trip: Q*S reproduces F
        assert fact.verify_roundtrip(F) >= slack_threshold(K)


def test_slope_decomposition_examples():
    K = field(5, 20)
    phi = diag_operator(K, [1, 5, 25])
    F = char_series(phi, 3)
    dec, fact = slope_decomposition(phi, F, Fraction(1))
    assert dec.rank == 2
    dec_all, _ = slope_decomposition(phi, F, Fraction(5))
    assert dec_all.rank == 3
    dec_none, _ = slope_decomposition(phi, F, Fraction(-1))
    assert dec_none.rank == 0


def test_refine_factorization_diagonal():
    K = field(5, 20)
    phi = diag_operator(K, [1, 5, 25])
    F = char_series(phi, 3)
    f1 = slope_factorization(F, Fraction(0))
    f2 = slope_factorization(F, Fraction(1))
    pf, report = refine_factorization(phi, f1.q, f2.q, f2.s)
    assert report["kernel_match_floor"] >= slack_threshold(K)
    assert report["idempotent_floor"] >= slack_threshold(K)
    # the idempotent has rank 1: trace = 1 at precision
    trace = pf[0][0] + pf[1][1]
    assert trace == K.one()


def test_refine_identity_and_trivial():
    K = field(5, 20)
    phi = diag_operator(K, [1, 5, 25])
    F = char_series(phi, 3)
    f2 = slope_factorization(F, Fraction(1))
    pf_same, _ = refine_factorization(phi, f2.q, f2.q, f2.s)
    assert pf_same[0][0] == K.one() and pf_same[1][1] == K.one()
    f0 = slope_factorization(F, Fraction(-1))
    pf_zero, _ = refine_factorization(phi, f0.q, f2.q, f2.s)
    assert all(x.is_zero for row in pf_zero for x in row)


def test_multiplicativity_of_characteristic_series():
    # char(phi|N) * char(phi|M') = F, coefficientwise at precision
    from spectra.fredholm import fredholm_mul, FredholmSeries

    K = field(3, 20)
    rng = random.Random(8)
    g = random_unimodular(rng, 3, 3)
    phi = conjugated_operator(K, [1, 3, 27], g)
    F = char_series(phi, 3)
    fact = slope_factorization(F, Fraction(2))
    dec = riesz_from_factorization(phi, F, fact)
    inf = float("inf")
    FN = FredholmSeries(K, dec.char_on_n, tail_valuation=lambda n: inf)
    prod = fredholm_mul(FN, dec.s)
    for n in range(F.cap + 1):
        diff = prod.coefficient(n) - F.coeffs[n]
        assert diff.is_zero or diff.is_negligible(slack_threshold(K))


def test_invertibility_witness_valuation():
    # v(det(phi|N)) equals the weighted slope sum of N(Q) = v(Q*(0))
    K = field(2, 22)
    phi = diag_operator(K, [1, 2, 4, 8])
    F = char_series(phi, 4)
    fact = slope_factorization(F, Fraction(2))
    dec = riesz_from_factorization(phi, F, fact)
    assert dec.rank == 3
    # slopes 0, 1, 2 with length 1 each: weighted sum is 3
    from spectra.rings import valuation

    assert valuation(q_star(K, fact.q)[0]) == 3
