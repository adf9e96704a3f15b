"""Riesz theory: projectors and finite-part decompositions of compact operators.

Given a zero of the characteristic series, the resolvant calculus produces a
pair of complementary projectors that are polynomials in the operator; given
a slope factorization F = Q*S it produces the decomposition
M = Ker Q*(phi) (+) M(Q) with the characteristic series splitting as Q and S
across the summands.

Two independent routes compute the finite part: the resolvant route through
the projector, and direct valuation-pivoted elimination on Q*(phi).  Both
must agree within the precision slack carried by the scalars; the elimination
kernel is the ground truth when they disagree.

All operations here treat the matrix window as the operator itself, so they
require a decay certificate with an exactly vanishing tail (finite rank).
"""

from __future__ import annotations

from fractions import Fraction
from math import comb

from . import linalg
from .errors import (
    DomainViolation,
    NotCoprime,
    NotDivisible,
    OrderMismatch,
    PrecisionExhausted,
    RankMismatch,
    RankUncertain,
    RouteDisagreement,
)
from .fredholm import FredholmSeries, char_series, resolvant_coefficients
from .newton import (
    SlopeFactorization,
    evaluate_series,
    newton_polygon,
    slope_factorization,
    zero_order,
)
from .operators import CompactOperatorMatrix, DecayProfile
from .rings import valuation
from .series import poly_degree, poly_mul, series_div

INFTY = float("inf")


def slack_threshold(ring) -> int:
    """Residual valuations at or above this clear the precision slack budget."""
    r = ring.r if hasattr(ring, "r") else ring.field.r
    return max(1, r // 2)


def q_star(ring, q: list) -> list:
    """The reversal X^deg(Q) * Q(1/X) as a coefficient list."""
    d = poly_degree(q)
    if d < 0:
        return list(q)
    return [q[d - k] for k in range(d + 1)]


def poly_of_operator(ring, coeffs: list, mat: list) -> list:
    """Evaluate a polynomial at a square matrix by Horner's rule."""
    n = len(mat)
    acc = linalg.zero_matrix(ring, n, n)
    for c in reversed(coeffs):
        acc = linalg.mat_mul(acc, mat)
        for i in range(n):
            acc[i][i] = acc[i][i] + c
    return acc


def kernel_basis(ring, psi: list, expected_rank: int | None = None, margin: int = 3):
    """Columns spanning Ker(psi) at working precision.

    Elimination pivots on minimal valuation; the rank is certified when every
    discarded entry's zero certificate clears the largest pivot valuation by
    ``margin`` digits.  ``expected_rank`` (the kernel dimension) is enforced
    when given.
    """
    basis, elim = linalg.kernel(ring, psi)
    if elim.pivots and elim.noise_floor != INFTY:
        max_pivot_val = max(elim.pivot_valuations)
        if elim.noise_floor - max_pivot_val < margin:
            raise RankUncertain(
                f"discarded entries certified only to p^{elim.noise_floor} while "
                f"pivots reach valuation {max_pivot_val}"
            )
    if expected_rank is not None and len(basis) != expected_rank:
        raise RankMismatch(
            f"kernel has dimension {len(basis)} at precision, expected {expected_rank}"
        )
    return basis


class RieszDecomposition:
    """The decomposition M = N (+) M' attached to a zero or a factorization.

    ``projector`` maps onto N and is a polynomial in the operator (so it
    commutes with everything commuting with the operator); ``kernel_basis``
    spans N; ``char_on_n`` is det(1 - X phi|N).  ``route`` records which
    computations produced the data.
    """

    def __init__(
        self,
        ring,
        projector,
        kernel_cols,
        q,
        s,
        char_on_n,
        route,
        complement_cols=None,
        residual_floor=INFTY,
    ):
        self.ring = ring
        self.projector = projector
        self.kernel_basis = kernel_cols
        self.q = q
        self.s = s
        self.char_on_n = char_on_n
        self.route = route
        self.complement_basis = complement_cols
        self.residual_floor = residual_floor

    @property
    def rank(self) -> int:
        return len(self.kernel_basis)

    def verify_projector_laws(self, phi_entries) -> dict:
        """Valuation floors of ||P^2 - P|| and ||P phi - phi P||."""
        p2 = linalg.mat_mul(self.projector, self.projector)
        idem = linalg.mat_val_floor(linalg.mat_sub(p2, self.projector))
        pf = linalg.mat_mul(self.projector, phi_entries)
        fp = linalg.mat_mul(phi_entries, self.projector)
        comm = linalg.mat_val_floor(linalg.mat_sub(pf, fp))
        return {"idempotent_floor": idem, "commutant_floor": comm}


def _require_finite_window(phi: CompactOperatorMatrix) -> None:
    if phi.tail_valuation() != INFTY:
        raise PrecisionExhausted(
            "Riesz theory operates on the window as the whole module; the decay "
            "certificate must vanish exactly beyond the window"
        )


def _projector_pair_from_zero(ring, op_entries, F: FredholmSeries, a, k: int):
    """The complementary pair (p, q) = (e^k, 1 - e^k) from a zero of order k.

    Built from f_s, the Delta^s values of the Fredholm resolvant at the zero:
    e = c^{-1}(1 - a phi) f_k satisfies e + f = 1 with f e^k = 0 for
    f = -c^{-1} phi f_{k-1}, and q = 1 - e^k projects onto the part where
    (1 - a phi) is nilpotent.
    """
    m = len(op_entries)
    phi_op = CompactOperatorMatrix(ring, op_entries, DecayProfile.finite())
    vs = resolvant_coefficients(phi_op, F, m)
    a_ring = ring.coerce(a)

    def f_s(s: int):
        acc = linalg.zero_matrix(ring, m, m)
        a_pow = ring.one()
        for idx in range(0, m - s):
            c = a_pow * ring.coerce(comb(idx + s, s))
            acc = linalg.mat_add(acc, linalg.mat_scale(vs[idx + s], c))
            a_pow = a_pow * a_ring
        return acc

    c = evaluate_series(F, a, k)
    if not c.is_invertible:
        raise OrderMismatch(f"Delta^{k} F(a) = {c!r} is not invertible")
    cinv = c.invert()
    fk = f_s(k)
    one_minus_aphi = linalg.mat_sub(
        linalg.identity(ring, m), linalg.mat_scale(op_entries, a_ring)
    )
    e_op = linalg.mat_scale(linalg.mat_mul(one_minus_aphi, fk), ring.coerce(cinv))
    p_op = _mat_power(ring, e_op, k)
    q_op = linalg.mat_sub(linalg.identity(ring, m), p_op)
    return p_op, q_op


def _mat_power(ring, mat, k: int):
    out = linalg.identity(ring, len(mat))
    for _ in range(k):
        out = linalg.mat_mul(out, mat)
    return out


def riesz_from_zero(phi: CompactOperatorMatrix, F: FredholmSeries, a, k: int) -> RieszDecomposition:
    """Split M = N (+) M' at a zero of F of order k, with (1 - a phi)^k = 0 on N."""
    _require_finite_window(phi)
    ring = phi.ring
    observed = zero_order(F, a)
    if observed != k:
        raise OrderMismatch(f"zero order at the point is {observed}, caller claimed {k}")
    if k < 1:
        raise OrderMismatch("the zero order must be at least 1 to split off a finite part")
    p_op, q_op = _projector_pair_from_zero(ring, phi.entries, F, a, k)
    kernel_cols = kernel_basis(ring, p_op, expected_rank=k)
    # (1 - a phi)^k vanishes on N
    one_minus = linalg.mat_sub(
        linalg.identity(ring, phi.size), linalg.mat_scale(phi.entries, ring.coerce(a))
    )
    nilcheck = linalg.mat_mul(_mat_power(ring, one_minus, k), linalg.from_columns(kernel_cols))
    thr = slack_threshold(ring)
    floor = linalg.mat_val_floor(nilcheck)
    if floor < thr:
        raise RouteDisagreement(
            f"(1 - a phi)^{k} does not vanish on the computed part (floor {floor})"
        )
    restricted, res_floor = linalg.restrict_operator(ring, phi.entries, kernel_cols)
    if res_floor < thr:
        raise RouteDisagreement(f"phi does not preserve the computed part (floor {res_floor})")
    char_n = char_series(
        CompactOperatorMatrix(ring, restricted, DecayProfile.finite()), max(k, 1)
    )
    expect = _binomial_power(ring, ring.coerce(a.invert()), k)
    for n in range(k + 1):
        if not (char_n.coeffs[n] == expect[n]):
            raise RouteDisagreement(
                f"characteristic series on N differs from (1 - a^-1 X)^{k} at degree {n}"
            )
    return RieszDecomposition(
        ring,
        q_op,
        kernel_cols,
        expect,
        None,
        expect,
        route="resolvant-route",
        residual_floor=min(floor, res_floor),
    )


def _binomial_power(ring, root_inv, k: int) -> list:
    out = [ring.one()]
    for _ in range(k):
        out = poly_mul(ring, out, [ring.one(), -root_inv])
    return out


def riesz_from_factorization(
    phi: CompactOperatorMatrix, F: FredholmSeries, fact: SlopeFactorization
) -> RieszDecomposition:
    """Decompose M = Ker Q*(phi) (+) M(Q) from a verified factorization F = QS.

    Computes the kernel by both the resolvant route (projector from the zero
    of the characteristic series of v = 1 - Q*(phi)/Q*(0) at 1) and direct
    elimination; the routes must span the same columns within slack.
    """
    _require_finite_window(phi)
    ring = phi.ring
    thr = slack_threshold(ring)
    rt = fact.verify_roundtrip(F)
    if rt < thr:
        raise DomainViolation(f"factorization round-trip residual only O(p^{rt})")
    n0 = fact.n0
    if n0 == 0:
        ident = linalg.identity(ring, phi.size)
        zero_proj = linalg.zero_matrix(ring, phi.size, phi.size)
        return RieszDecomposition(
            ring, zero_proj, [], [ring.one()], fact.s, [ring.one()],
            route="linear-algebra-route", complement_cols=linalg.columns(ident),
        )
    qs = q_star(ring, fact.q)
    qs_phi = poly_of_operator(ring, qs, phi.entries)
    kernel_cols = kernel_basis(ring, qs_phi, expected_rank=n0)

    # resolvant route through v = 1 - Q*(phi)/Q*(0)
    q_const = qs[0]
    v_entries = linalg.mat_scale(
        linalg.mat_sub(
            _diag_embed(ring, q_const, phi.size), qs_phi
        ),
        q_const.invert(),
    )
    v_op = CompactOperatorMatrix(ring, v_entries, DecayProfile.finite())
    f_v = char_series(v_op, phi.size)
    k_v = zero_order(f_v, ring_one_scalar(ring))
    if k_v != n0:
        raise OrderMismatch(
            f"char series of the Riesz auxiliary operator has zero order {k_v} "
            f"at 1, expected deg Q = {n0}"
        )
    p_op, q_op = _projector_pair_from_zero(ring, v_entries, f_v, ring_one_scalar(ring), n0)
    resolvant_cols = kernel_basis(ring, p_op, expected_rank=n0)

    # the two routes must span the same submodule
    _, floor_ab = linalg.solve_in_span(ring, kernel_cols, resolvant_cols)
    _, floor_ba = linalg.solve_in_span(ring, resolvant_cols, kernel_cols)
    if min(floor_ab, floor_ba) < thr:
        raise RouteDisagreement(
            f"kernel spans disagree: containment residuals O(p^{floor_ab}), O(p^{floor_ba})"
        )

    restricted, res_floor = linalg.restrict_operator(ring, phi.entries, kernel_cols)
    if res_floor < thr:
        raise RouteDisagreement(f"phi does not preserve Ker Q*(phi) (floor {res_floor})")
    char_n = char_series(CompactOperatorMatrix(ring, restricted, DecayProfile.finite()), n0)
    for n in range(n0 + 1):
        if not (char_n.coeffs[n] == fact.q[n]):
            raise RouteDisagreement(
                f"det(1 - X phi | Ker Q*(phi)) differs from Q at degree {n}"
            )
    # phi is invertible on N: det(phi|N) = (-1)^n0 * leading coefficient-ish; the
    # polygon-weighted valuation check is v(det) = sum(slope * length) = v(Q*(0))
    det_val = _det_valuation(ring, restricted)
    if det_val != valuation(q_const):
        raise RouteDisagreement(
            f"v(det(phi|N)) = {det_val} differs from v(Q*(0)) = {valuation(q_const)}"
        )

    complement_cols = kernel_basis(ring, q_op, expected_rank=phi.size - n0)
    comp_floor = INFTY
    if complement_cols:
        comp_restricted, comp_floor = linalg.restrict_operator(
            ring, phi.entries, complement_cols
        )
        if comp_floor < thr:
            raise RouteDisagreement(f"phi does not preserve M(Q) (floor {comp_floor})")
        char_comp = char_series(
            CompactOperatorMatrix(ring, comp_restricted, DecayProfile.finite()),
            phi.size - n0,
        )
        for n in range(min(char_comp.cap, fact.s.cap) + 1):
            if not (char_comp.coeffs[n] == fact.s.coeffs[n]):
                raise RouteDisagreement(
                    f"det(1 - X phi | M(Q)) differs from S at degree {n}"
                )
    else:
        for n in range(1, fact.s.cap + 1):
            if not fact.s.coeffs[n].is_zero:
                raise RouteDisagreement("total factorization but S is not 1")
    return RieszDecomposition(
        ring,
        q_op,
        kernel_cols,
        list(fact.q),
        fact.s,
        [c for c in char_n.coeffs],
        route="both",
        complement_cols=complement_cols,
        residual_floor=min(floor_ab, floor_ba, res_floor, comp_floor),
    )


def _diag_embed(ring, scalar, n: int):
    out = linalg.zero_matrix(ring, n, n)
    for i in range(n):
        out[i][i] = scalar
    return out


def ring_one_scalar(ring):
    """The scalar 1 of the coefficient field under a ring handle."""
    if hasattr(ring, "field"):
        return ring.field.one()
    return ring.one()


def _det_valuation(ring, mat):
    """Valuation of the determinant via the top characteristic coefficient."""
    op = CompactOperatorMatrix(ring, mat, DecayProfile.finite())
    F = char_series(op, len(mat))
    return valuation(F.coeffs[len(mat)])


def slope_decomposition(phi: CompactOperatorMatrix, F: FredholmSeries, h):
    """The slope <= h decomposition: factorization plus Riesz splitting.

    Returns (decomposition, factorization); every eigenvalue datum attached
    to the finite part has slope <= h, witnessed by the polygon of Q.
    """
    fact = slope_factorization(F, h)
    dec = riesz_from_factorization(phi, F, fact)
    qpoly = newton_polygon(
        FredholmSeries(phi.ring, dec.q, tail_valuation=lambda n: INFTY)
    )
    for s, _ in qpoly.slopes:
        if s > Fraction(h):
            raise RouteDisagreement(f"finite part carries slope {s} above {h}")
    return dec, fact


def refine_factorization(
    phi: CompactOperatorMatrix, q1: list, q2: list, s2: FredholmSeries | None = None
):
    """The idempotent identifying Ker Q1*(phi) inside Ker Q2*(phi) when Q1 | Q2.

    Returns ``(pf_matrix, report)`` where ``pf_matrix`` acts on the ambient
    module (a polynomial in phi restricted through phi^{-1} on the kernel)
    and the report carries the verification floors.
    """
    _require_finite_window(phi)
    ring = phi.ring
    thr = slack_threshold(ring)
    d1, d2 = poly_degree(q1), poly_degree(q2)
    if d1 > d2:
        raise NotDivisible("deg Q1 exceeds deg Q2")
    # P := Q2 / Q1, certified by re-multiplication
    p_coeffs = series_div(ring, q2, q1, d2 - d1)
    check = poly_mul(ring, q1, p_coeffs)
    for n in range(d2 + 1):
        lhs = check[n] if n < len(check) else ring.zero()
        rhs = q2[n] if n <= d2 else ring.zero()
        diff = lhs - rhs
        if not diff.is_zero and not diff.is_negligible(thr):
            raise NotDivisible(f"Q1 does not divide Q2 at degree {n}")
    n2 = d2
    kernel2 = kernel_basis(ring, poly_of_operator(ring, q_star(ring, q2), phi.entries), n2)
    kernel1 = kernel_basis(
        ring, poly_of_operator(ring, q_star(ring, q1), phi.entries), d1
    )
    if d1 == 0:
        pf_mat = linalg.zero_matrix(ring, len(kernel2), len(kernel2))
        return pf_mat, {"kernel_match_floor": INFTY, "idempotent_floor": INFTY}
    if d1 == d2:
        ident = linalg.identity(ring, d2)
        return ident, {"kernel_match_floor": INFTY, "idempotent_floor": INFTY}
    # Bezout: P f + Q1 g = 1 (coprime since the slope sets are disjoint)
    f_coeffs, g_coeffs = _poly_bezout(ring, p_coeffs, q1)
    eps = poly_mul(ring, p_coeffs, f_coeffs)  # idempotent mod Q2
    # X acts on Ker Q2*(phi) as phi^{-1}
    phi_on_n2, floor_restrict = linalg.restrict_operator(ring, phi.entries, kernel2)
    if floor_restrict < thr:
        raise RouteDisagreement(f"phi does not preserve Ker Q2*(phi) (floor {floor_restrict})")
    x_action = linalg.mat_inverse(ring, phi_on_n2)
    pf_mat = poly_of_operator(ring, eps, x_action)
    idem_floor = linalg.mat_val_floor(
        linalg.mat_sub(linalg.mat_mul(pf_mat, pf_mat), pf_mat)
    )
    if idem_floor < thr:
        raise RouteDisagreement(f"Pf is not idempotent at precision (floor {idem_floor})")
    # Pf * Ker Q2*(phi) must equal Ker Q1*(phi) as column spans
    image_cols = linalg.columns(
        linalg.mat_mul(linalg.from_columns(kernel2), pf_mat)
    )
    nonzero_cols = [col for col in image_cols if not all(x.is_zero for x in col)]
    _, floor_a = linalg.solve_in_span(ring, kernel1, nonzero_cols)
    # the image columns span N1 but need not be independent: rank-1 projectors
    # of a 2-dimensional kernel produce two parallel nonzero columns
    _, floor_b = linalg.solve_in_span(ring, nonzero_cols, kernel1, allow_deficient=True)
    match_floor = min(floor_a, floor_b)
    if match_floor < thr:
        raise RouteDisagreement(
            f"Pf image does not match Ker Q1*(phi) (floor {match_floor})"
        )
    return pf_mat, {"kernel_match_floor": match_floor, "idempotent_floor": idem_floor}


def _poly_bezout(ring, a: list, b: list):
    """f, g with a*f + b*g = 1 for coprime polynomials via the Sylvester system."""
    da, db = poly_degree(a), poly_degree(b)
    size = da + db
    if size == 0:
        return [a[0].invert()], []
    cols = []
    for k in range(db):  # f coefficients multiply a
        shifted = [ring.zero()] * k + list(a[: da + 1])
        cols.append([shifted[i] if i < len(shifted) else ring.zero() for i in range(size)])
    for k in range(da):  # g coefficients multiply b
        shifted = [ring.zero()] * k + list(b[: db + 1])
        cols.append([shifted[i] if i < len(shifted) else ring.zero() for i in range(size)])
    target = [ring.one()] + [ring.zero()] * (size - 1)
    try:
        coeffs, _ = linalg.solve_in_span(ring, cols, [target])
    except RankUncertain as exc:
        raise NotCoprime(f"the factor pair is not coprime at precision: {exc}") from exc
    f = [coeffs[k][0] for k in range(db)]
    g = [coeffs[db + k][0] for k in range(da)]
    return f, g
