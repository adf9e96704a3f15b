"""Polygons, zero orders, slope factorization, coprimality certificates."""

import random
from fractions import Fraction

import pytest

from conftest import diag_operator, field, int_matrix_operator
from spectra.errors import Indeterminate, NotCoprime, TailUncertain
from spectra.fredholm import FredholmSeries, char_series
from spectra.newton import (
    coprimality_certificate,
    delta_operator,
    newton_polygon,
    slope_factorization,
    zero_order,
)
from spectra.operators import CompactOperatorMatrix, DecayProfile
from spectra.rings import AffinoidRing, PadicScalar, RingHom
from spectra.series import poly_mul, series_mul

INF = float("inf")


def poly_series(K, ints) -> FredholmSeries:
    return FredholmSeries(K, [K.from_int(n) for n in ints], tail_valuation=lambda n: INF)


# -- polygons --------------------------------------------------------------------


def test_polygon_three_segments():
    K = field(5, 20)
    F = poly_series(K, [1, 1, 5, 125])
    poly = newton_polygon(F)
    assert poly.vertices == [(0, 0), (1, 0), (2, 1), (3, 3)]
    assert [s for s, _ in poly.slopes] == [0, 1, 2]


def test_polygon_of_distinct_slope_product():
    K = field(3, 20)
    coeffs = [K.one()]
    prod = [K.one()]
    for n in range(4):
        prod = poly_mul(K, prod, [K.one(), K.from_int(-(3**n))])
    F = FredholmSeries(K, prod, tail_valuation=lambda n: INF)
    poly = newton_polygon(F)
    assert poly.slopes == [(Fraction(n), 1) for n in range(4)]


def test_polygon_of_one():
    K = field(2, 10)
    F = poly_series(K, [1])
    poly = newton_polygon(F)
    assert poly.vertices == [(0, 0)]
    assert poly.slopes == []


def test_polygon_skips_certified_zero_above_hull():
    K = field(2, 10)
    coeffs = [K.one(), PadicScalar.zero(2, 30), K.from_int(4)]
    F = FredholmSeries(K, coeffs, tail_valuation=lambda n: INF)
    poly = newton_polygon(F)
    assert poly.vertices == [(0, 0), (2, 2)]


def test_polygon_uncertain_zero_below_hull():
    K = field(2, 10)
    coeffs = [K.one(), PadicScalar.zero(2, 1), K.from_int(16)]
    F = FredholmSeries(K, coeffs, tail_valuation=lambda n: INF)
    with pytest.raises(TailUncertain):
        newton_polygon(F)


def test_polygon_tail_certification():
    K = field(2, 24)
    phi = diag_operator(K, [2**j for j in range(8)], DecayProfile.geometric(0, 1))
    F = char_series(phi, 6)
    poly = newton_polygon(F)
    assert poly.certified_through >= 5
    assert poly.slopes[0] == (Fraction(0), 1)


# -- delta and zero orders --------------------------------------------------------


def test_delta_examples():
    K = field(7, 12)
    out = delta_operator([K.from_int(1), K.from_int(2), K.from_int(3)], 1, ring=K)
    assert out[0] == K.from_int(2) and out[1] == K.from_int(6)
    out2 = delta_operator([K.from_int(1), K.from_int(-2), K.from_int(1)], 2, ring=K)
    assert out2 == [K.one()]


def test_delta_leibniz_identity():
    K = field(3, 16)
    rng = random.Random(2)
    for _ in range(20):
        f = [K.from_int(rng.randrange(-9, 10)) for _ in range(4)]
        g = [K.from_int(rng.randrange(-9, 10)) for _ in range(4)]
        fg = poly_mul(K, f, g)
        for s in range(3):
            lhs = delta_operator(fg, s, ring=K)
            rhs = None
            for i in range(s + 1):
                term = poly_mul(K, delta_operator(f, i, ring=K), delta_operator(g, s - i, ring=K))
                if rhs is None:
                    rhs = term
                else:
                    n = max(len(rhs), len(term))
                    rhs = [
                        (rhs[k] if k < len(rhs) else K.zero())
                        + (term[k] if k < len(term) else K.zero())
                        for k in range(n)
                    ]
            for k in range(max(len(lhs), len(rhs))):
                a = lhs[k] if k < len(lhs) else K.zero()
                b = rhs[k] if k < len(rhs) else K.zero()
                assert a == b


def test_zero_order_examples():
    K = field(5, 20)
    assert zero_order(poly_series(K, [1, -2, 1]), K.one()) == 2
    F = poly_series(K, [1, -5])
    assert zero_order(F, K.from_fraction(Fraction(1, 5))) == 1
    assert zero_order(poly_series(K, [1, 1]), PadicScalar.zero(5)) == 0


def test_zero_order_implies_root_power_factor():
    # order k at a means F = (1 - X/a)^k * G with G(a) a unit
    K = field(3, 20)
    from spectra.series import series_div, poly_eval

    cases = [
        ([1, -2, 1], K.one(), 2),
        ([1, -3], K.from_fraction(Fraction(1, 3)), 1),
        ([1, -6, 9, -4], K.one(), 2),  # (1-X)^2 (1-4X)
    ]
    for ints, a, k in cases:
        F = poly_series(K, ints)
        assert zero_order(F, a) == k
        g = list(F.coeffs)
        ainv = a.invert()
        for _ in range(k):
            g = series_div(K, g, [K.one(), -ainv], len(g) - 1)
        val = poly_eval(K, g[: len(ints)], a)
        assert val.is_invertible


def test_zero_order_affinoid_indeterminate():
    R = AffinoidRing(2, 16, 3, ("w",))
    w = R.variable("w")
    F = FredholmSeries(R, [R.one(), w - R.one()], tail_valuation=lambda n: INF)
    # F(1) = w: neither unit nor certified zero over the chart
    with pytest.raises(Indeterminate):
        zero_order(F, PadicScalar.one(2, 16))


# -- slope factorization -----------------------------------------------------------


def test_factorization_two_slopes():
    K = field(5, 20)
    phi = diag_operator(K, [1, 5])
    F = char_series(phi, 4)
    fact = slope_factorization(F, Fraction(1, 2))
    assert fact.q == [K.one(), K.from_int(-1)]
    assert fact.s.coeffs[1] == K.from_int(-5)
    assert fact.verify_roundtrip(F) >= 19


def test_factorization_product_model():
    K = field(5, 20)
    phi = diag_operator(K, [5**j for j in range(4)])
    F = char_series(phi, 6)
    fact = slope_factorization(F, Fraction(3, 2))
    assert fact.n0 == 2
    assert fact.q_polygon().slopes == [(Fraction(0), 1), (Fraction(1), 1)]
    # S carries the remaining slopes 2 and 3
    spoly = newton_polygon(fact.s)
    assert [s for s, _ in spoly.slopes] == [2, 3]


def test_factorization_total_and_empty():
    R = AffinoidRing(2, 20, 4, ("T1", "T2"))
    t1 = R.variable("T1")
    phi = CompactOperatorMatrix(R, [[R.one(), t1], [R.zero(), R.one()]], DecayProfile.finite())
    F = char_series(phi, 4)
    total = slope_factorization(F, Fraction(0))
    assert total.n0 == 2
    assert all((a == b) for a, b in zip(total.q, F.coeffs[:3]))
    assert all(c.is_zero for c in total.s.coeffs[1:])

    K = field(2, 20)
    F2 = char_series(diag_operator(K, [1, 2, 4]), 4)
    empty = slope_factorization(F2, Fraction(-1))
    assert empty.n0 == 0 and empty.q == [K.one()]


def test_factorization_affinoid_family_specializes():
    R = AffinoidRing(2, 20, 6, ("w",))
    w = R.variable("w")
    pw = R.from_int(2) * w
    F = FredholmSeries(
        R,
        [R.one(), -(R.one() + pw), pw] + [R.zero()] * 3,
        tail_valuation=lambda n: INF,
    )
    fact = slope_factorization(F, Fraction(1, 2))
    assert fact.n0 == 1
    assert fact.verify_roundtrip(F) >= 19
    for w0 in (0, 1, 2, 3):
        h = RingHom.specialize(R, (PadicScalar.from_int(w0, 2, 20) if w0 else PadicScalar.zero(2),))
        q_spec = [h.apply(c) for c in fact.q]
        s_spec = [h.apply(c) for c in fact.s.coeffs]
        f_spec = [h.apply(c) for c in F.coeffs]
        prod = series_mul(R.field, q_spec, s_spec, F.cap)
        for n in range(F.cap + 1):
            assert (f_spec[n] - prod[n]).is_zero


def test_factorization_two_variable_layers():
    # factor coefficients genuinely depend on both chart variables
    R = AffinoidRing(3, 18, 4, ("T1", "T2"))
    t1, t2 = R.variable("T1"), R.variable("T2")
    p = R.from_int(3)
    alpha = p * (R.one() + t1 + t1 * t2)  # slope-1 inverse root, layers up to degree 2
    F = FredholmSeries(
        R,
        [R.one(), -(R.one() + alpha), alpha, R.zero(), R.zero()],
        tail_valuation=lambda n: INF,
    )
    fact = slope_factorization(F, Fraction(1, 2))
    assert fact.n0 == 1
    assert fact.q[1] == R.from_int(-1)
    assert fact.s.coeffs[1] == -alpha
    assert fact.verify_roundtrip(F) >= 17
    K = R.field
    for pt in [(0, 0), (1, 0), (0, 1), (2, 1)]:
        point = tuple(
            K.from_int(x) if x else PadicScalar.zero(3) for x in pt
        )
        h = RingHom.specialize(R, point)
        prod = series_mul(K, [h.apply(c) for c in fact.q], [h.apply(c) for c in fact.s.coeffs], F.cap)
        for n in range(F.cap + 1):
            diff = h.apply(F.coeffs[n]) - prod[n]
            assert diff.is_zero or diff.is_negligible(15)


def test_factorization_affinoid_family_fuzz():
    rng = random.Random(42)
    for _ in range(12):
        p = rng.choice([2, 3, 5])
        R = AffinoidRing(p, 18, 4, ("w",))
        K = R.field
        w = R.variable("w")
        # inverse roots: a unit alpha and a slope-(>=1) beta, both linear in w
        alpha = R.from_int(rng.choice([1, 1 + p, 1 + 2 * p])) + w * R.from_int(rng.randrange(0, 3) * p)
        beta = R.from_int(p * rng.choice([1, 2])) + w * R.from_int(p * rng.randrange(0, 3))
        one = R.one()
        c1 = -(alpha + beta)
        c2 = alpha * beta
        F = FredholmSeries(R, [one, c1, c2, R.zero(), R.zero()], tail_valuation=lambda n: INF)
        fact = slope_factorization(F, Fraction(1, 2))
        assert fact.n0 == 1
        assert fact.verify_roundtrip(F) >= 15
        for x in (0, 1, p, 1 + p):
            point = (K.from_int(x) if x else PadicScalar.zero(p),)
            h = RingHom.specialize(R, point)
            q_fiber = [h.apply(c) for c in fact.q]
            # the fiber factor root must match the fiber value of alpha
            assert (q_fiber[1] + h.apply(alpha)).is_negligible(14)


def test_factorization_mixed_slope_window():
    # non-diagonal integral window whose polygon has a genuine break
    K = field(3, 24)
    phi = int_matrix_operator(K, [[1, 1, 0], [0, 3, 1], [0, 0, 9]])
    F = char_series(phi, 3)
    fact = slope_factorization(F, Fraction(0))
    assert fact.n0 == 1
    prod = series_mul(K, fact.q, fact.s.coeffs, F.cap)
    for n in range(F.cap + 1):
        diff = F.coeffs[n] - prod[n]
        assert diff.is_zero or diff.is_negligible(20)


def test_bezout_certificate_verifies():
    K = field(5, 20)
    phi = diag_operator(K, [1, 5])
    F = char_series(phi, 4)
    fact = slope_factorization(F, Fraction(1, 2))
    u, v = fact.bezout
    uq = series_mul(K, u, fact.q, F.cap)
    vs = series_mul(K, v, fact.s.coeffs, F.cap)
    assert (uq[0] + vs[0]) == K.one()
    for n in range(1, F.cap + 1):
        total = uq[n] + vs[n]
        assert total.is_zero or total.is_negligible(18)


def test_coprimality_examples():
    K = field(5, 20)
    q = [K.one(), K.from_int(-1)]
    s = [K.one(), K.from_int(-5)]
    u, v = coprimality_certificate(K, q, s, 4)
    assert len(v) == 1  # deg V < deg Q
    with pytest.raises(NotCoprime):
        coprimality_certificate(K, q, [K.one(), K.from_int(-1)], 4)
    u2, v2 = coprimality_certificate(K, [K.one()], [K.one(), K.from_int(1)], 4)
    assert u2 == [K.one()] and v2 == []
