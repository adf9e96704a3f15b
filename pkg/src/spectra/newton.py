"""Newton polygons, zero orders, and slope factorization of Fredholm series.

The polygon of a series is the lower convex hull of the points
``(n, v(c_n))``.  A reported polygon is only trusted through the range the
tail bound certifies: a point beyond the tracked cap must not be able to cut
the hull from below.

``slope_factorization`` splits F = Q * S at a polygon vertex so that Q
collects the slopes <= h and S the slopes > h.  The factor pair is computed
by quadratic Hensel iteration on the *reversed* polynomials, where both
factors are monic: every division is by a monic polynomial, so no p-adic
precision is spent on leading coefficients, and the normalizations Q(0) = 1,
S(0) = 1 hold structurally.  Over an affinoid chart the weight-zero fiber is
split first and the factors are lifted layer by layer in the total degree of
the chart variables; each layer is the unique solution of a linear system
built from the fiber factors.
"""

from __future__ import annotations

import math
from fractions import Fraction

from .errors import (
    Indeterminate,
    NoBreak,
    NotCoprime,
    PrecisionExhausted,
    TailUncertain,
    ZeroAtPrecision,
)
from .fredholm import FredholmSeries
from .linalg import Elimination, solve_in_span, val_floor
from .rings import AffinoidElement, AffinoidRing, PadicScalar, RingHom
from .series import delta_transform, poly_degree, poly_mul, series_div, series_mul

INFTY = float("inf")


class NewtonPolygon:
    """Lower convex hull data of a Fredholm series.

    ``vertices``: [(x, y)] with strictly increasing integer x and exact
    rational y, starting at (0, 0).  ``slopes``: [(slope, length)] pairs with
    strictly increasing slopes.  ``certified_through`` is the largest
    abscissa at which the reported vertices provably lie on the hull of the
    full series; INFTY when the series is a polynomial.
    """

    def __init__(self, vertices, slopes, certified_through, finite_degree=None):
        self.vertices = vertices
        self.slopes = slopes
        self.certified_through = certified_through
        self.finite_degree = finite_degree

    def height_at(self, x: int):
        """Hull value at integer abscissa x (INFTY past a polynomial's degree)."""
        if self.finite_degree is not None and x > self.finite_degree:
            return INFTY
        y = Fraction(0)
        pos = 0
        for slope, length in self.slopes:
            run = min(length, x - pos)
            if run <= 0:
                return y
            y += slope * run
            pos += run
        if pos < x and self.slopes:
            y += self.slopes[-1][0] * (x - pos)
        return y

    def break_abscissa(self, h) -> int:
        """Right endpoint of the last segment of slope <= h (0 if none)."""
        h = Fraction(h)
        x = 0
        for slope, length in self.slopes:
            if slope <= h:
                x += length
            else:
                break
        return x

    def export_record(self) -> dict:
        starts = []
        x = 0
        for _, length in self.slopes:
            starts.append(x)
            x += length
        return {
            "vertices": [[x, str(y)] for x, y in self.vertices],
            "slopes": [
                {"slope": str(s), "length": n, "x_start": x0}
                for (s, n), x0 in zip(self.slopes, starts)
            ],
            "certified_through": (
                None if self.certified_through == INFTY else self.certified_through
            ),
        }

    def __repr__(self) -> str:
        return f"NewtonPolygon(vertices={self.vertices}, slopes={self.slopes})"


def _coefficient_point(c):
    """('exact', v) when the valuation is certain, else ('bound', lower_bound)."""
    if isinstance(c, PadicScalar):
        if c.is_zero:
            return "bound", c.r
        return "exact", c.v
    lower = c.gauss_valuation()
    if c.is_zero:
        return "bound", lower
    finite = [x.v for x in c.coeffs.values() if not x.is_zero]
    if finite and min(finite) == lower:
        return "exact", lower
    return "bound", lower


def _lower_hull(points):
    """Monotone-chain lower hull of (int, Fraction) points sorted by x."""
    hull = []
    for pt in points:
        while len(hull) >= 2:
            (x0, y0), (x1, y1) = hull[-2], hull[-1]
            if (y1 - y0) * (pt[0] - x0) >= (pt[1] - y0) * (x1 - x0):
                hull.pop()
            else:
                break
        hull.append(pt)
    return hull


def newton_polygon(F: FredholmSeries) -> NewtonPolygon:
    """Hull of the tracked coefficient cloud, certified against the tail.

    Raises TailUncertain if a coefficient known only to precision could cut
    the hull below its reported vertices.
    """
    points = []
    bounds = []
    for n in range(F.cap + 1):
        kind, v = _coefficient_point(F.coeffs[n])
        if kind == "exact":
            points.append((n, Fraction(v)))
        else:
            bounds.append((n, v))
    if not points or points[0][0] != 0:
        raise ZeroAtPrecision("the constant term of a Fredholm series must be exactly 1")
    hull = _lower_hull(points)
    slopes = []
    for (x0, y0), (x1, y1) in zip(hull, hull[1:]):
        s = Fraction(y1 - y0, x1 - x0)
        if slopes and slopes[-1][0] == s:
            slopes[-1] = (s, slopes[-1][1] + (x1 - x0))
        else:
            slopes.append((s, x1 - x0))
    vertices = [(0, Fraction(0))]
    for s, length in slopes:
        x, y = vertices[-1]
        vertices.append((x + length, y + s * length))
    poly = NewtonPolygon(vertices, slopes, certified_through=0)
    for n, cert in bounds:
        if n <= vertices[-1][0] and cert < poly.height_at(n):
            raise TailUncertain(
                f"coefficient {n} is only known to be O(p^{cert}), below the hull "
                f"height {poly.height_at(n)}; raise the working precision"
            )
    if F.tail_valuation is not None and F.tail_valuation(F.cap + 1) == INFTY:
        poly.finite_degree = poly_degree(F.coeffs)
        poly.certified_through = INFTY
    else:
        poly.certified_through = _certified_abscissa(F, vertices, slopes)
    return poly


def _certified_abscissa(F, vertices, slopes):
    """Largest vertex abscissa protected against every possible tail point.

    A vertex with outgoing slope s stays on the true hull when every tail
    point lies on or above the slope-s line through it; convexity then
    protects all earlier vertices as well.
    """
    if F.tail_valuation is None:
        return 0
    for idx in range(len(vertices) - 1, -1, -1):
        xv, yv = vertices[idx]
        if idx < len(slopes):
            s_out = slopes[idx][0]
        elif slopes:
            s_out = slopes[-1][0]
        else:
            s_out = Fraction(0)
        if _tail_clears_slope(F, xv, yv, s_out, strict=False):
            return xv
    return 0


def _tail_clears_slope(F, xv, yv, slope, strict: bool) -> bool:
    """Whether every tail point lies above the slope line through (xv, yv).

    Tail-bound increments are nondecreasing for operator-derived bounds, so
    once a point clears the line with increment above the slope, all later
    points do too.  A bounded horizon guards user-supplied closures.
    """
    slope = Fraction(slope)
    horizon = F.cap * 8 + 64
    prev = None
    for n in range(F.cap + 1, horizon + 1):
        t = F.tail_valuation(n)
        if t == INFTY:
            return True
        line = yv + slope * (n - xv)
        if t < line or (strict and t == line):
            return False
        if prev is not None and Fraction(t - prev) > slope:
            return True
        prev = t
    return False


def delta_operator(series, s: int, ring=None) -> list:
    """The transform sum_n binom(n+s, s) a_{n+s} X^n; identity for s = 0.

    Accepts a FredholmSeries or a coefficient list with an explicit ring;
    returns a coefficient list.
    """
    if s < 0:
        raise ValueError("delta order must be nonnegative")
    if isinstance(series, FredholmSeries):
        return delta_transform(series.ring, series.coeffs, s)
    return delta_transform(ring, series, s)


def evaluate_series(F: FredholmSeries, a, s: int = 0):
    """(Delta^s F)(a) with a certified tail remainder folded into the precision."""
    ring = F.ring
    coeffs = delta_transform(ring, F.coeffs, s)
    point = ring.from_scalar(a) if isinstance(ring, AffinoidRing) else a
    total = ring.zero()
    power = ring.one()
    for c in coeffs:
        total = total + c * power
        power = power * point
    if F.tail_valuation is not None and F.tail_valuation(F.cap + 1) == INFTY:
        return total
    if F.tail_valuation is None:
        raise PrecisionExhausted("evaluation beyond the cap needs a tail bound")
    va = a.val_lower_bound
    floor = INFTY
    prev = None
    horizon = F.cap * 8 + 64
    n = max(F.cap + 1 - s, 0)
    converged = False
    while n <= horizon:
        t = F.tail_valuation(n + s)
        if t == INFTY:
            converged = True
            break
        term = t + n * va  # binomial factors are integral
        floor = min(floor, term)
        if prev is not None and term > prev:
            converged = True  # increments are nondecreasing: past the minimum
            break
        prev = term
        n += 1
    if not converged:
        raise PrecisionExhausted("tail terms do not certifiably converge at this point")
    if floor == INFTY:
        return total
    if floor <= 0:
        raise PrecisionExhausted(f"evaluation tail is only bounded by p^{-floor}")
    return total.truncate_abs(floor)


def zero_order(F: FredholmSeries, a) -> int:
    """Order k with (Delta^s F)(a) = 0 for s < k and (Delta^k F)(a) a unit.

    Zero decisions are certified at the working precision, never exact
    claims.  A value neither unit nor certified zero raises Indeterminate
    (this can only happen over an affinoid base).
    """
    for s in range(F.cap + 1):
        value = evaluate_series(F, a, s)
        if isinstance(value, AffinoidElement):
            if value.is_invertible:
                return s
            if value.is_zero:
                continue
            raise Indeterminate(
                f"(Delta^{s} F)(a) = {value!r} is neither a unit nor certified zero"
            )
        if value.is_invertible:
            return s
    raise Indeterminate("every tracked transform vanishes at the point; raise the cap")


class SlopeFactorization:
    """F = Q * S with N(Q) the slope <= h part and N(S) the rest.

    ``q`` is the coefficient list of the multiplicative polynomial Q with
    Q(0) = 1 exactly; ``s`` is a FredholmSeries carrying the inherited tail
    bound; ``bezout = (U, V)`` satisfies U*Q + V*S = 1 through the cap with
    deg V < deg Q, which certifies that Q and S are relatively prime.
    """

    def __init__(self, ring, h, q, s: FredholmSeries, bezout, n0: int, achieved_precision):
        self.ring = ring
        self.h = Fraction(h)
        self.q = q
        self.s = s
        self.bezout = bezout
        self.n0 = n0
        self.achieved_precision = achieved_precision

    def verify_roundtrip(self, F: FredholmSeries):
        """Certified valuation floor of F - Q*S through the cap."""
        prod = series_mul(self.ring, self.q, self.s.coeffs, F.cap)
        floor = INFTY
        for n in range(F.cap + 1):
            floor = min(floor, val_floor(F.coeffs[n] - prod[n]))
        return floor

    def q_polygon(self) -> NewtonPolygon:
        Fq = FredholmSeries(self.ring, self.q, tail_valuation=lambda n: INFTY)
        return newton_polygon(Fq)


def slope_factorization(F: FredholmSeries, h) -> SlopeFactorization:
    """Slope <= h factorization at a certified polygon vertex."""
    h = Fraction(h)
    if isinstance(F.ring, AffinoidRing):
        return _slope_factorization_affinoid(F, h)
    return _slope_factorization_field(F, h)


def _slope_break(F: FredholmSeries, h):
    poly = newton_polygon(F)
    n0 = poly.break_abscissa(h)
    if n0 > poly.certified_through:
        raise TailUncertain(
            f"the break abscissa {n0} lies beyond the certified range "
            f"{poly.certified_through}"
        )
    if n0 < poly.vertices[-1][0]:
        next_slope = None
        x = 0
        for s, length in poly.slopes:
            x += length
            if x > n0:
                next_slope = s
                break
        if next_slope is not None and next_slope <= h:
            raise NoBreak(f"slope bound {h} does not separate the polygon at a vertex")
    if poly.finite_degree is None:
        yv = poly.height_at(n0)
        if not _tail_clears_slope(F, n0, yv, h, strict=True):
            raise TailUncertain(
                f"the tail bound cannot exclude slope <= {h} contributions beyond the cap"
            )
    return poly, n0


def _slope_factorization_field(F: FredholmSeries, h) -> SlopeFactorization:
    ring = F.ring
    cap = F.cap
    poly, n0 = _slope_break(F, h)
    if n0 == 0:
        s = FredholmSeries(ring, list(F.coeffs), F.tail_valuation, provenance=F.provenance)
        return SlopeFactorization(ring, h, [ring.one()], s, ([ring.one()], []), 0, INFTY)
    if poly.finite_degree is not None and n0 == poly.finite_degree:
        q = list(F.coeffs[: n0 + 1])
        s = FredholmSeries(ring, [ring.one()], tail_valuation=lambda n: INFTY, provenance="factor")
        bez = _bezout_certificate(ring, q, s.coeffs, cap)
        return SlopeFactorization(ring, h, q, s, bez, n0, INFTY)
    if n0 >= cap:
        raise TailUncertain(f"break at {n0} needs a degree cap above {cap}")
    work_cap = _choose_work_degree(F, poly, n0)
    g = _reverse_cap(ring, F.coeffs, work_cap)
    qstar, achieved = _peel_slope_groups(ring, g, poly, h)
    q = list(reversed(qstar))
    s_coeffs = series_div(ring, F.coeffs, q, cap)
    s = FredholmSeries(
        ring, s_coeffs, _quotient_tail_bound(F, q, poly, n0), provenance="factor"
    )
    bez = _bezout_certificate(ring, q, s_coeffs, cap, s_floor=s.tail_valuation)
    fact = SlopeFactorization(ring, h, q, s, bez, n0, achieved)
    _check_factor_slopes(fact, poly, h)
    return fact


def _choose_work_degree(F: FredholmSeries, poly: NewtonPolygon, n0: int) -> int:
    """Smallest reversal degree whose truncation spill clears the precision.

    Working on the whole cap is wrong for infinite models: far coefficients
    honestly carry almost no digits.  The split of the degree-W truncation
    differs from the true factor by terms of valuation at least
    hull(W+1) - hull(n0), so the first W where that clears the working
    precision is used.
    """
    if poly.finite_degree is not None:
        return poly.finite_degree
    cap = F.cap
    r = F.ring.r if hasattr(F.ring, "r") else F.ring.field.r
    y0 = poly.height_at(n0)
    for w in range(n0 + 1, cap):
        bounds = [poly.height_at(w + 1)]
        if F.tail_valuation is not None:
            bounds.append(F.tail_valuation(w + 1))
        if max(bounds) - y0 >= r + 2:
            return w
    return cap


def _twist_monic(ring, m: list, t: int) -> list:
    """Scale the roots of a monic polynomial by p^(-t): m(Y) -> m(p^t Y)/p^(t deg)."""
    if t == 0:
        return list(m)
    p = ring.p if hasattr(ring, "p") else ring.field.p
    deg = len(m) - 1
    out = []
    for j, c in enumerate(m):
        out.append(c * ring.coerce(Fraction(p) ** (t * (j - deg))))
    return out


def _peel_slope_groups(ring, g, poly: NewtonPolygon, h):
    """Factor off the slope <= h part of the reversed polynomial, one group at a time.

    Splitting a single bottom slope group keeps the correction system well
    conditioned: after twisting the integral part of the current bottom slope
    away, the group's roots are units while the rest have positive valuation,
    so the system's determinant valuation stays small.  The collected group
    factors (untwisted) multiply to the full slope <= h factor.
    """
    h = Fraction(h)
    segments = [(s, length) for s, length in poly.slopes if s <= h]
    remaining = list(g)
    qstar_total = [ring.one()]
    twist_acc = 0
    achieved = INFTY
    for s, length in segments:
        t_step = math.floor(Fraction(s) - twist_acc)
        if t_step:
            remaining = _twist_monic(ring, remaining, t_step)
            twist_acc += t_step
        if length >= len(remaining) - 1:
            group = list(remaining)
            remaining = [ring.one()]
        else:
            group, rest, floor = _hensel_split_reversed(ring, remaining, length)
            achieved = min(achieved, floor)
            remaining = rest
        qstar_total = poly_mul(ring, qstar_total, _twist_monic(ring, group, -twist_acc))
    return qstar_total, achieved


def _reverse_cap(ring, coeffs, cap):
    out = [ring.zero() for _ in range(cap + 1)]
    for n, c in enumerate(coeffs[: cap + 1]):
        out[cap - n] = c
    return out


def _check_factor_slopes(fact: SlopeFactorization, poly: NewtonPolygon, h) -> None:
    qpoly = fact.q_polygon()
    expected = [seg for seg in poly.slopes if seg[0] <= h]
    if qpoly.slopes != expected:
        raise PrecisionExhausted(
            f"factor polygon {qpoly.slopes} differs from the <= {h} part {expected}"
        )


def _sylvester_solve(ring, qstar, sstar, rhs_list):
    """Solve qstar*ds + sstar*dq = rhs with deg dq < deg qstar, deg ds < deg sstar.

    Returns one (dq, ds) pair per right-hand side.  The system matrix has
    columns Y^k * sstar (k < deg qstar) then Y^k * qstar (k < deg sstar); it
    is invertible exactly when the factors are relatively prime.
    """
    dq_n = len(qstar) - 1
    ds_n = len(sstar) - 1
    size = dq_n + ds_n
    cols = []
    for k in range(dq_n):
        shifted = [ring.zero()] * k + list(sstar)
        cols.append([shifted[i] if i < len(shifted) else ring.zero() for i in range(size)])
    for k in range(ds_n):
        shifted = [ring.zero()] * k + list(qstar)
        cols.append([shifted[i] if i < len(shifted) else ring.zero() for i in range(size)])
    targets = [
        [rhs[i] if i < len(rhs) else ring.zero() for i in range(size)] for rhs in rhs_list
    ]
    coeffs, _ = solve_in_span(ring, cols, targets)
    out = []
    for t in range(len(rhs_list)):
        dq = [coeffs[k][t] for k in range(dq_n)]
        ds = [coeffs[dq_n + k][t] for k in range(ds_n)]
        out.append((dq, ds))
    return out


def _hensel_split_reversed(ring, g, n0: int):
    """Split the reversed cap polynomial g into monic factors of degrees n0, cap-n0.

    Newton iteration on the factor pair: each step solves the linear
    correction system and the residual contracts quadratically (in the
    slope-weighted metric, which can dip transiently in the plain one), so
    the stopping rule is stationarity: the iteration ends when the solved
    corrections are certified zero.  Returns (qstar, sstar, achieved) with
    ``achieved`` the certified valuation of the final residual (INFTY when
    certified zero).
    """
    cap = len(g) - 1
    qstar = [g[cap - n0 + k] for k in range(n0 + 1)]  # Y^k coefficient is c_{n0-k}
    qstar[-1] = ring.one()
    sstar, _ = _monic_divmod(ring, g, qstar)
    sstar = sstar + [ring.zero()] * (cap - n0 + 1 - len(sstar))
    sstar[-1] = ring.one()
    return newton_pair_refine(ring, g, qstar, sstar)


def newton_pair_refine(ring, g, qstar, sstar):
    """Refine monic factor approximations of a monic polynomial g.

    Newton iteration: each step solves the linear correction system built
    from the current pair, contracting the residual quadratically whenever
    the initialization is coprime enough (polygon splits and residue-coprime
    mod-p splits both are).  Stops at stationarity: when the solved
    corrections are certified zero.  Returns (q, s, achieved) where
    ``achieved`` is the certified valuation of the final residual g - q*s.
    """
    cap = len(g) - 1
    nq = len(qstar) - 1
    for _ in range(64):
        prod = poly_mul(ring, qstar, sstar)
        err = [
            (g[i] if i < len(g) else ring.zero()) - (prod[i] if i < len(prod) else ring.zero())
            for i in range(cap + 1)
        ]
        plain = min(val_floor(x) for x in err)
        if plain == INFTY:
            return qstar, sstar, INFTY
        ((dq, ds),) = _sylvester_solve(ring, qstar, sstar, [err])
        if all(x.is_zero for x in dq) and all(x.is_zero for x in ds):
            # stationary at working precision: the residual floor is final
            if plain >= 1:
                return qstar, sstar, plain
            raise PrecisionExhausted(
                f"factor iteration stalled with residual only O(p^{plain})"
            )
        qstar = [qstar[i] + (dq[i] if i < len(dq) else ring.zero()) for i in range(nq + 1)]
        sstar = [sstar[i] + (ds[i] if i < len(ds) else ring.zero()) for i in range(cap - nq + 1)]
        qstar[-1] = ring.one()
        sstar[-1] = ring.one()
    raise PrecisionExhausted("factor iteration did not converge in 64 steps")


def _monic_divmod(ring, a, b):
    """Euclidean division by a monic polynomial (no inversions, no precision loss)."""
    db = len(b) - 1
    rem = list(a)
    if len(rem) - 1 < db:
        return [], rem
    quo = [ring.zero() for _ in range(len(rem) - db)]
    for k in range(len(rem) - 1, db - 1, -1):
        c = rem[k]
        if c.is_exact_zero:
            continue
        quo[k - db] = quo[k - db] + c
        for j in range(db + 1):
            rem[k - db + j] = rem[k - db + j] - c * b[j]
    return quo, rem[:db]


def _quotient_tail_bound(F: FredholmSeries, q, poly: NewtonPolygon | None = None, n0: int = 0):
    """Valuation lower bounds for the coefficients of S = F/Q.

    Combines a division-recurrence bound with the polygon-shift theorem: the
    polygon of the cofactor of the slope <= h part is the remaining portion
    of the polygon of F, shifted to the origin, so
    v(S_m) >= hull_F(n0 + m) - hull_F(n0).
    """
    if F.tail_valuation is None:
        return None
    b_vals = [val_floor(b) for b in q[1:]]
    cap = F.cap
    coeff_floor = [val_floor(c) for c in F.coeffs]
    memo = {0: Fraction(0)}
    y0 = poly.height_at(n0) if poly is not None else None

    def shift_bound(m: int):
        if poly is None:
            return -INFTY
        x = n0 + m
        heights = [poly.height_at(x)]
        if x > F.cap and F.tail_valuation is not None:
            heights.append(F.tail_valuation(x))
        return max(heights) - y0

    def lb(m: int):
        if m in memo:
            return memo[m]
        best = coeff_floor[m] if m <= cap else F.tail_valuation(m)
        for i, bv in enumerate(b_vals, start=1):
            if i > m:
                break
            best = min(best, bv + lb(m - i))
        best = max(best, shift_bound(m))
        memo[m] = best
        return best

    return lb


def _series_mod_poly(ring, s_coeffs, q, cap, s_floor=None):
    """S mod Q for a polynomial Q with invertible leading coefficient.

    ``s_floor(k)``, when given, is an analytic lower bound on v(S_k) (e.g.
    the factor-slope bound), often far sharper than the arithmetic
    certificate of the tracked coefficient.  Terms certifiably below the
    working precision after reduction are skipped: ultrametrically their sum
    stays below it, and the result is truncated accordingly.
    """
    n0 = poly_degree(q)
    r = ring.r if hasattr(ring, "r") else ring.field.r
    lead_inv = q[n0].invert()
    current = [ring.one()] + [ring.zero()] * (n0 - 1)
    top = [-(lead_inv * q[j]) for j in range(n0)]
    out = [ring.zero()] * n0
    skipped = False
    for k in range(cap + 1):
        if k > 0:
            carry = current[n0 - 1]
            shifted = [ring.zero()] + current[: n0 - 1]
            current = [shifted[j] + carry * top[j] for j in range(n0)]
        c = s_coeffs[k] if k < len(s_coeffs) else ring.zero()
        if c.is_exact_zero:
            continue
        c_floor = val_floor(c)
        if s_floor is not None:
            analytic = s_floor(k)
            if analytic > c_floor:
                c_floor = analytic
                if c.is_zero:
                    c = _zero_like(ring, analytic)
        red_floor = min(val_floor(x) for x in current)
        if c_floor + red_floor >= r:
            skipped = True
            continue
        for j in range(n0):
            out[j] = out[j] + c * current[j]
    if skipped:
        out = [x.truncate_abs(r) for x in out]
    return out


def _zero_like(ring, cert):
    zero = PadicScalar.zero(ring.p if hasattr(ring, "p") else ring.field.p, cert)
    if isinstance(ring, AffinoidRing):
        return ring.from_scalar(zero)
    return zero


def _invert_in_quotient(ring, sbar, q):
    """Inverse of sbar in ring[X]/(Q); NotCoprime when certifiably singular."""
    n0 = poly_degree(q)
    cols = []
    for k in range(n0):
        xk = [ring.zero()] * k + [ring.one()]
        prod = poly_mul(ring, sbar, xk)
        from .series import poly_divmod

        _, rem = poly_divmod(ring, prod, q)
        cols.append([rem[i] if i < len(rem) else ring.zero() for i in range(n0)])
    probe = Elimination(ring, [[cols[c][i] for c in range(n0)] for i in range(n0)])
    if probe.rank < n0:
        if probe.noise_floor == INFTY:
            raise NotCoprime("the series is a zero divisor modulo Q")
        raise Indeterminate(
            f"coprimality undecidable: pivots exhausted at certificate "
            f"p^{probe.noise_floor}"
        )
    target = [ring.one()] + [ring.zero()] * (n0 - 1)
    coeffs, _ = solve_in_span(ring, cols, [target])
    return [coeffs[k][0] for k in range(n0)]


def _bezout_certificate(ring, q, s_coeffs, cap, s_floor=None):
    """(U, V) with U*Q + V*S = 1 through the cap and deg V < deg Q.

    Over a chart the witness coefficients involve inverses of chart units,
    whose weight degree can exceed the chart bound; the certificate is
    therefore computed in a widened working ring.
    """
    n0 = poly_degree(q)
    if n0 <= 0:
        return [ring.one()], []
    work = ring
    if isinstance(ring, AffinoidRing):
        work = ring.widen(ring.degree_bound * (ring.field.r + 1))
        q = [c.in_ring(work) for c in q]
        s_coeffs = [c.in_ring(work) for c in s_coeffs]
    sbar = _series_mod_poly(work, s_coeffs, q, cap, s_floor=s_floor)
    vpoly = _invert_in_quotient(work, sbar, q)
    vs = series_mul(work, vpoly, list(s_coeffs[: cap + 1]), cap)
    num = [work.one() - vs[0]] + [-vs[i] for i in range(1, cap + 1)]
    u = series_div(work, num, q, cap)
    return u, vpoly


def coprimality_certificate(ring, q, s, cap: int):
    """Bezout witness (U, V) with U*Q + V*S = 1 mod X^(cap+1), deg V < deg Q.

    ``q``: polynomial coefficient list with constant term 1 and invertible
    leading coefficient; ``s``: coefficient list or FredholmSeries.  Raises
    NotCoprime on a certified common factor and Indeterminate when the
    quotient algebra is singular only at precision.
    """
    s_coeffs = s.coeffs if isinstance(s, FredholmSeries) else list(s)
    try:
        u, v = _bezout_certificate(ring, q, s_coeffs, cap)
    except (Indeterminate, NotCoprime) as exc:
        shared = _shared_slope(ring, q, s_coeffs)
        if shared is not None:
            raise NotCoprime(
                f"certified obstruction: both factors carry polygon slope {shared}"
            ) from exc
        raise
    uq = series_mul(ring, u, q, cap)
    vs = series_mul(ring, v, s_coeffs, cap) if v else [ring.zero()] * (cap + 1)
    for n in range(cap + 1):
        want = ring.one() if n == 0 else ring.zero()
        diff = (uq[n] + vs[n]) - want
        if not diff.is_zero and not diff.is_negligible(1):
            raise Indeterminate(f"Bezout verification leaves residual {diff!r} at X^{n}")
    return u, v


# -- factorization over an affinoid chart ---------------------------------------


def _shared_slope(ring, q, s_coeffs):
    """A polygon slope carried by both factors, if one is visible."""

    def slope_set(coeffs):
        try:
            series = FredholmSeries(ring, list(coeffs), tail_valuation=lambda n: INFTY)
            return {s for s, _ in newton_polygon(series).slopes}
        except Exception:
            return set()

    common = slope_set(q) & slope_set(s_coeffs)
    return min(common) if common else None


def _slope_factorization_affinoid(F: FredholmSeries, h) -> SlopeFactorization:
    """Fiber-first factorization over a chart: split at w = 0, lift by layers."""
    ring: AffinoidRing = F.ring
    field = ring.field
    cap = F.cap
    origin = tuple(PadicScalar.zero(ring.p) for _ in ring.variables)
    hom0 = RingHom.specialize(ring, origin)
    fiber = FredholmSeries(
        field, [hom0.apply(c) for c in F.coeffs], F.tail_valuation, provenance="fiber"
    )
    fiber_fact = _slope_factorization_field(fiber, h)
    n0 = fiber_fact.n0
    if n0 == 0:
        s = FredholmSeries(ring, list(F.coeffs), F.tail_valuation, provenance=F.provenance)
        return SlopeFactorization(ring, h, [ring.one()], s, ([ring.one()], []), 0, INFTY)
    q0 = list(reversed(fiber_fact.q))  # reversed world: monic of degree n0
    s0_series = series_div(field, fiber.coeffs, fiber_fact.q, cap)
    s0 = list(reversed(s0_series[: cap - n0 + 1]))  # monic of degree cap - n0
    g_layers = _poly_layers(ring, _reverse_cap(ring, F.coeffs, cap))
    q_layers: dict = {0: {tuple(0 for _ in ring.variables): q0}}
    s_layers: dict = {0: {tuple(0 for _ in ring.variables): s0}}
    for m in range(1, ring.degree_bound + 1):
        rhs_by_mono: dict = {}
        for mono, layer_poly in g_layers.get(m, {}).items():
            rhs_by_mono[mono] = list(layer_poly)
        for i in range(1, m):
            for mono_q, qpoly in q_layers.get(i, {}).items():
                for mono_s, spoly in s_layers.get(m - i, {}).items():
                    mono = tuple(a + b for a, b in zip(mono_q, mono_s))
                    prod = poly_mul(field, qpoly, spoly)
                    acc = rhs_by_mono.get(mono, [])
                    out = [field.zero()] * max(len(acc), len(prod))
                    for t in range(len(out)):
                        x = acc[t] if t < len(acc) else field.zero()
                        y = prod[t] if t < len(prod) else field.zero()
                        out[t] = x - y
                    rhs_by_mono[mono] = out
        if not rhs_by_mono:
            continue
        monos = sorted(rhs_by_mono)
        sols = _sylvester_solve(field, q0, s0, [rhs_by_mono[mono] for mono in monos])
        q_layers[m] = {}
        s_layers[m] = {}
        for mono, (dq, ds) in zip(monos, sols):
            if any(not x.is_zero for x in dq):
                q_layers[m][mono] = dq
            if any(not x.is_zero for x in ds):
                s_layers[m][mono] = ds
    qstar = _assemble_layers(ring, q_layers, n0)
    q = list(reversed(qstar))
    s_coeffs = series_div(ring, F.coeffs, q, cap)
    s = FredholmSeries(ring, s_coeffs, _quotient_tail_bound(F, q), provenance="factor")
    bez = _bezout_certificate(ring, q, s_coeffs, cap, s_floor=s.tail_valuation)
    fact = SlopeFactorization(ring, h, q, s, bez, n0, INFTY)
    floor = fact.verify_roundtrip(F)
    if floor != INFTY and floor < max(1, field.r // 2):
        raise PrecisionExhausted(
            f"chart factor lift leaves residual O(p^{floor}); the true factors "
            f"may exceed the chart degree bound {ring.degree_bound}"
        )
    return fact


def _poly_layers(ring: AffinoidRing, coeffs):
    """Regroup affinoid X-coefficients as {total degree: {monomial: scalar X-poly}}."""
    field = ring.field
    layers: dict = {}
    for k, c in enumerate(coeffs):
        for exp, scalar in c.coeffs.items():
            m = sum(exp)
            bucket = layers.setdefault(m, {}).setdefault(exp, [field.zero()] * len(coeffs))
            bucket[k] = scalar
    return layers


def _assemble_layers(ring: AffinoidRing, layers, degree: int):
    """Rebuild affinoid X-coefficients from scalar layer polynomials."""
    out = []
    for k in range(degree + 1):
        coeff: dict = {}
        for by_mono in layers.values():
            for mono, poly in by_mono.items():
                if k < len(poly) and not (poly[k].is_exact_zero):
                    coeff[mono] = coeff.get(mono, ring.field.zero()) + poly[k]
        out.append(AffinoidElement(ring, coeff))
    return out
