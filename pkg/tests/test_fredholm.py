"""Characteristic power series: oracle agreement, swap identity, tail bounds."""

import random
from fractions import Fraction

import pytest

from conftest import diag_operator, field, int_matrix_operator, random_int_matrix
from spectra.errors import CompactnessUnverified, SeriesMismatch, SizeLimit
from spectra.fredholm import (
    FredholmSeries,
    base_change_series,
    char_series,
    char_series_subset_oracle,
    fredholm_mul,
    resolvant_coefficients,
)
from spectra.linalg import mat_is_negligible, mat_sub
from spectra.operators import CompactOperatorMatrix, DecayProfile, compose
from spectra.rings import AffinoidRing, PadicScalar, RingHom, valuation


def test_unipotent_affinoid_is_one_minus_x_squared():
    R = AffinoidRing(2, 20, 4, ("T1", "T2"))
    t1 = R.variable("T1")
    phi = CompactOperatorMatrix(
        R, [[R.one(), t1], [R.zero(), R.one()]], DecayProfile.finite()
    )
    F = char_series(phi, 4)
    assert F.coeffs[1] == R.from_int(-2)
    assert F.coeffs[2] == R.one()
    assert F.coeffs[3].is_zero and F.coeffs[4].is_zero


def test_zero_operator_gives_one():
    K = field(3, 10)
    F = char_series(diag_operator(K, [0, 0, 0]), 3)
    assert all(c.is_zero for c in F.coeffs[1:])


def test_geometric_sum_coefficient():
    # diag(2^j) for j < M with M >= r: c_1 = -(2^M - 1) = 1 mod 2^r
    K = field(2, 12)
    phi = diag_operator(K, [2**j for j in range(12)], DecayProfile.geometric(0, 1))
    F = char_series(phi, 3)
    c1 = F.coeffs[1]
    assert c1.v == 0 and c1.residue(12) == 1


def test_oracle_requires_small_sizes():
    K = field(2, 10)
    with pytest.raises(SizeLimit):
        char_series_subset_oracle(diag_operator(K, list(range(1, 14))), 2)


def test_oracle_examples():
    K = field(5, 14)
    F = char_series_subset_oracle(diag_operator(K, [2, 3]), 2)
    assert F.coeffs[1] == K.from_int(-5)
    assert F.coeffs[2] == K.from_int(6)
    nil = int_matrix_operator(K, [[0, 1], [0, 0]])
    G = char_series_subset_oracle(nil, 2)
    assert G.coeffs[1].is_zero and G.coeffs[2].is_zero


def test_oracle_equivalence_random():
    rng = random.Random(11)
    for p in (2, 3, 5):
        K = field(p, 20)
        for _ in range(25):
            n = rng.randrange(1, 7)
            phi = int_matrix_operator(K, random_int_matrix(rng, n))
            assert char_series(phi, n) == char_series_subset_oracle(phi, n)


def test_swap_identity_random():
    rng = random.Random(13)
    K = field(3, 18)
    for _ in range(30):
        n = rng.randrange(1, 6)
        a = int_matrix_operator(K, random_int_matrix(rng, n))
        b = int_matrix_operator(K, random_int_matrix(rng, n))
        assert char_series(compose(a, b), n) == char_series(compose(b, a), n)


def test_finite_rank_agreement():
    # an operator supported on a 2-column block: series equals the block determinant
    K = field(5, 16)
    phi = int_matrix_operator(K, [[2, 3, 0], [1, 4, 0], [0, 0, 0]])
    F = char_series(phi, 3)
    block = int_matrix_operator(K, [[2, 3], [1, 4]])
    G = char_series(block, 2)
    assert F.coeffs[1] == G.coeffs[1] and F.coeffs[2] == G.coeffs[2]
    assert F.coeffs[3].is_zero


def test_block_multiplicativity():
    K = field(2, 16)
    rng = random.Random(5)
    a = random_int_matrix(rng, 2)
    b = random_int_matrix(rng, 3)
    block = [[a[i][j] if i < 2 and j < 2 else 0 for j in range(5)] for i in range(5)]
    for i in range(3):
        for j in range(3):
            block[2 + i][2 + j] = b[i][j]
    F = char_series(int_matrix_operator(K, block), 5)
    Fa = char_series(int_matrix_operator(K, a), 2)
    Fb = char_series(int_matrix_operator(K, b), 3)
    assert F == fredholm_mul(Fa, Fb)


def test_tail_bound_holds_for_generated_series():
    rng = random.Random(3)
    K = field(2, 20)
    for _ in range(20):
        n = rng.randrange(1, 6)
        phi = int_matrix_operator(K, random_int_matrix(rng, n))
        F = char_series(phi, n)
        for m in range(n + 1):
            assert valuation(F.coeffs[m]) >= F.tail_valuation(m)


def test_compactness_gate():
    K = field(2, 10)
    ident = diag_operator(K, [1] * 4, DecayProfile.geometric(0, 1))
    with pytest.raises(CompactnessUnverified):
        char_series(ident, 3)


def test_window_error_truncates_precision():
    K = field(2, 30)
    phi = diag_operator(K, [2**j for j in range(8)], DecayProfile.geometric(0, 1))
    F = char_series(phi, 4)
    # the window misses tail columns of norm 2^-8, so c_1 carries 8 digits
    assert F.coeffs[1].abs_prec == 8


def test_resolvant_examples():
    K = field(5, 14)
    phi = diag_operator(K, [7])
    F = char_series(phi, 2)
    vs = resolvant_coefficients(phi, F, 2)
    assert vs[0][0][0] == K.one()
    assert vs[1][0][0].is_zero and vs[2][0][0].is_zero

    two = CompactOperatorMatrix(
        K, [[3 if i == j else 0 for j in range(2)] for i in range(2)], DecayProfile.finite()
    )
    F2 = char_series(two, 3)
    vs2 = resolvant_coefficients(two, F2, 3)
    assert vs2[1][0][0] == K.from_int(-3)
    assert vs2[2][0][0].is_zero

    dphi = diag_operator(K, [1, 5])
    F3 = char_series(dphi, 2)
    v1 = resolvant_coefficients(dphi, F3, 1)[1]
    assert v1[0][0] == K.from_int(-5) and v1[1][1] == K.from_int(-1)


def test_resolvant_provenance_check():
    K = field(5, 14)
    phi = diag_operator(K, [1, 5])
    other = diag_operator(K, [2, 5])
    F = char_series(other, 2)
    with pytest.raises(SeriesMismatch):
        resolvant_coefficients(phi, F, 1)


def test_base_change_series_examples():
    R = AffinoidRing(3, 12, 3, ("w",))
    w = R.variable("w")
    F = FredholmSeries(R, [R.one(), w], tail_valuation=lambda n: float("inf"))
    hp = RingHom.specialize(R, (PadicScalar.from_int(3, 3, 12),))
    G = base_change_series(F, hp)
    assert G.coeffs[1] == PadicScalar.from_int(3, 3, 12)
    ident = RingHom.identity(R)
    H = base_change_series(F, ident)
    assert H.coeffs[1] == w


def test_base_change_commutes_with_char_series():
    from spectra.operators import base_change_operator

    R = AffinoidRing(5, 14, 4, ("w",))
    w = R.variable("w")
    phi = CompactOperatorMatrix(
        R, [[R.one(), w], [w, R.from_int(5)]], DecayProfile.finite()
    )
    h = RingHom.specialize(R, (PadicScalar.from_int(2, 5, 14),))
    left = base_change_series(char_series(phi, 2), h)
    right = char_series(base_change_operator(phi, h), 2)
    assert left == right
