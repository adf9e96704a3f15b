"""Characteristic power series of compact operators.

``char_series`` computes det(1 - X phi) on the matrix window by the
Berkowitz division-free characteristic polynomial (no divisions occur, so no
p-adic precision is lost to denominators), then accounts for the
window-versus-full truncation error through the decay certificate.  The
definitional subset/permutation expansion is retained as a combinatorial
oracle for testing.
"""

from __future__ import annotations

from itertools import combinations, permutations

from .errors import (
    CompactnessUnverified,
    DomainViolation,
    PrecisionExhausted,
    SeriesMismatch,
    SizeLimit,
)
from . import linalg
from .operators import CompactOperatorMatrix, verify_compactness
from .rings import AffinoidRing, RingHom

INFTY = float("inf")


class FredholmSeries:
    """A truncated entire series 1 + c_1 X + ... + c_d X^d with a tail bound.

    ``tail_valuation(n)`` returns a certified lower bound for v(c_n), valid
    for every n (for n <= d it complements the tracked coefficient); it is
    None when the series was supplied by a user without a bound, in which
    case operations that need tail control refuse to run.
    """

    def __init__(self, ring, coeffs: list, tail_valuation=None, provenance: str = "user input"):
        if not coeffs:
            raise DomainViolation("a Fredholm series needs at least its constant term")
        c0 = coeffs[0]
        if not (c0 == ring.one()):
            raise DomainViolation("a Fredholm series must have constant term 1")
        self.ring = ring
        self.coeffs = list(coeffs)
        self.tail_valuation = tail_valuation
        self.provenance = provenance

    @property
    def cap(self) -> int:
        return len(self.coeffs) - 1

    def coefficient(self, n: int):
        """Tracked coefficient, or a certified zero from the tail bound."""
        if n <= self.cap:
            return self.coeffs[n]
        if self.tail_valuation is None:
            raise PrecisionExhausted(
                f"coefficient {n} beyond cap {self.cap} and no tail bound is attached"
            )
        return self._zero_with_cert(self.tail_valuation(n))

    def _zero_with_cert(self, cert):
        from .rings import PadicScalar

        zero = PadicScalar.zero(self.ring.p, cert)
        if isinstance(self.ring, AffinoidRing):
            return self.ring.from_scalar(zero)
        return zero

    def coefficient_valuations(self) -> list:
        from .rings import valuation

        return [valuation(c) for c in self.coeffs]

    def __eq__(self, other) -> bool:
        if not isinstance(other, FredholmSeries):
            return NotImplemented
        n = max(self.cap, other.cap)
        for k in range(n + 1):
            a = self.coeffs[k] if k <= self.cap else None
            b = other.coeffs[k] if k <= other.cap else None
            if a is None or b is None:
                x = a if a is not None else b
                if x is not None and not x.is_zero:
                    return False
                continue
            if not (a == b):
                return False
        return True

    __hash__ = None

    def __repr__(self) -> str:
        terms = ", ".join(repr(c) for c in self.coeffs[:5])
        more = " ..." if self.cap > 4 else ""
        return f"FredholmSeries([{terms}{more}], cap={self.cap})"


def berkowitz_char_coefficients(ring, mat: list) -> list:
    """Coefficients [1, b_1, ..., b_n] of det(lambda*I - A) = sum b_i lambda^(n-i).

    Division-free; uses only ring addition and multiplication.  These are
    exactly the coefficients of det(1 - X*A) read in increasing X-degree.
    """
    n = len(mat)
    C = [ring.one()]
    for r in range(n):
        a = mat[r][r]
        R = [mat[r][j] for j in range(r)]
        S = [mat[i][r] for i in range(r)]
        M = [[mat[i][j] for j in range(r)] for i in range(r)]
        toep = [ring.one(), -a]
        vec = S
        for _ in range(2, r + 2):
            dot = ring.zero()
            for x, y in zip(R, vec):
                dot = dot + x * y
            toep.append(-dot)
            if M:
                vec = [sum((M[i][j] * vec[j] for j in range(r)), start=ring.zero()) for i in range(r)]
        C = [
            sum((toep[i - j] * C[j] for j in range(max(0, i - len(toep) + 1), min(i, len(C) - 1) + 1)),
                start=ring.zero())
            for i in range(len(C) + 1)
        ]
    return C


def _window_char_coefficients(phi: CompactOperatorMatrix) -> list:
    ring = phi.ring
    work_ring = ring
    if isinstance(ring, AffinoidRing):
        max_deg = 0
        for row in phi.entries:
            for x in row:
                d = x.effective_degree()
                if d != -INFTY:
                    max_deg = max(max_deg, int(d))
        work_ring = ring.widen(max(ring.degree_bound, max_deg * max(phi.size, 1)))
        mat = [[x.in_ring(work_ring) for x in row] for row in phi.entries]
    else:
        mat = phi.entries
    coeffs = berkowitz_char_coefficients(work_ring, mat)
    if work_ring is not ring:
        coeffs = [c.in_ring(ring) for c in coeffs]
    return coeffs


def _window_error_valuation(phi: CompactOperatorMatrix, n: int):
    """Certified valuation of c_n(phi) - c_n(window): tail(M) * prod max(r_k, tail)."""
    t = phi.tail_valuation()
    if t == INFTY:
        return INFTY
    exps = phi.sorted_column_exponents(max(n - 1, 0))
    total = t
    for k in range(n - 1):
        total += min(exps[k], t)
    return total


def make_tail_valuation(phi: CompactOperatorMatrix):
    """The product bound v(c_n) >= e_1 + ... + e_n from sorted column exponents."""

    def tail_valuation(n: int):
        if n == 0:
            return 0
        exps = phi.sorted_column_exponents(n)
        total = 0
        for e in exps:
            if e == INFTY:
                return INFTY
            total += e
        return total

    return tail_valuation


def char_series(phi: CompactOperatorMatrix, d: int) -> FredholmSeries:
    """det(1 - X phi) through degree d with certified per-coefficient precision."""
    if d < 1:
        raise DomainViolation(f"degree cap must be >= 1, got {d}")
    report = verify_compactness(phi)
    if not report:
        raise CompactnessUnverified(f"decay certificate violated: {report.violations}")
    ring = phi.ring
    window = _window_char_coefficients(phi)
    tail_valuation = make_tail_valuation(phi)
    coeffs = [ring.one()]
    for n in range(1, d + 1):
        c = window[n] if n < len(window) else ring.zero()
        err = _window_error_valuation(phi, n)
        if err != INFTY:
            if err <= 0:
                raise PrecisionExhausted(
                    f"window truncation error p^{-err} certifies no digits of c_{n}"
                )
            c = c.truncate_abs(err)
        coeffs.append(c)
    return FredholmSeries(ring, coeffs, tail_valuation, provenance=phi.content_key())


def char_series_subset_oracle(phi: CompactOperatorMatrix, n_max: int) -> FredholmSeries:
    """Definitional expansion c_n = (-1)^n sum_S sum_sigma sgn(sigma) prod a_{i,sigma(i)}.

    Test oracle only: limited to n_max <= 8 and windows of size <= 12.
    """
    if n_max > 8 or phi.size > 12:
        raise SizeLimit(f"oracle limits exceeded: n_max={n_max}, size={phi.size}")
    ring = phi.ring
    a = phi.entries
    coeffs = [ring.one()]
    for n in range(1, n_max + 1):
        total = ring.zero()
        for S in combinations(range(phi.size), n):
            for perm in permutations(range(n)):
                sign = _permutation_sign(perm)
                prod = ring.one()
                for pos, i in enumerate(S):
                    prod = prod * a[i][S[perm[pos]]]
                total = total + (prod if sign > 0 else -prod)
        coeffs.append(total if n % 2 == 0 else -total)
    return FredholmSeries(ring, coeffs, make_tail_valuation(phi), provenance=phi.content_key())


def _permutation_sign(perm: tuple) -> int:
    sign = 1
    seen = [False] * len(perm)
    for start in range(len(perm)):
        if seen[start]:
            continue
        length = 0
        j = start
        while not seen[j]:
            seen[j] = True
            j = perm[j]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign


def resolvant_coefficients(phi: CompactOperatorMatrix, F: FredholmSeries, m_max: int) -> list:
    """Operator coefficients v_m of F(X)/(1 - X phi): v_0 = 1, v_m = phi v_{m-1} + c_m."""
    if F.provenance != phi.content_key():
        raise SeriesMismatch("series provenance differs from the supplied operator")
    ring = phi.ring
    out = [linalg.identity(ring, phi.size)]
    for m in range(1, m_max + 1):
        c = F.coefficient(m)
        v = linalg.mat_mul(phi.entries, out[-1])
        for i in range(phi.size):
            v[i][i] = v[i][i] + c
        out.append(v)
    return out


def base_change_series(F: FredholmSeries, h: RingHom) -> FredholmSeries:
    """Coefficientwise image; the tail bound transfers (the map is contractive)."""
    coeffs = [h.apply(c) for c in F.coeffs]
    return FredholmSeries(h.target, coeffs, F.tail_valuation, provenance=F.provenance)


def fredholm_mul(F: FredholmSeries, G: FredholmSeries) -> FredholmSeries:
    """Product of two Fredholm series.

    When both factors are polynomials (tails certify exact vanishing) the
    product is computed exactly through the sum of the caps.  Otherwise the
    product is tracked through the smaller cap and each coefficient absorbs
    the valuation bound of the untracked cross terms into its certificate.
    """
    ring = F.ring
    f_poly = F.tail_valuation is not None and F.tail_valuation(F.cap + 1) == INFTY
    g_poly = G.tail_valuation is not None and G.tail_valuation(G.cap + 1) == INFTY
    if f_poly and g_poly:
        cap = F.cap + G.cap
    elif f_poly:
        cap = G.cap + F.cap
    elif g_poly:
        cap = F.cap + G.cap
    else:
        cap = min(F.cap, G.cap)
    coeffs = []
    for n in range(cap + 1):
        acc = ring.zero()
        missing = INFTY
        for i in range(n + 1):
            j = n - i
            if i <= F.cap and j <= G.cap:
                acc = acc + F.coeffs[i] * G.coeffs[j]
                continue
            fv = _coefficient_floor(F, i)
            gv = _coefficient_floor(G, j)
            missing = min(missing, fv + gv)
        if missing != INFTY:
            acc = acc.truncate_abs(missing)
        coeffs.append(acc)
    coeffs[0] = ring.one()
    tail = None
    if F.tail_valuation is not None and G.tail_valuation is not None:

        def tail_valuation(n: int, _f=F, _g=G):
            return min(
                _coefficient_floor(_f, i) + _coefficient_floor(_g, n - i)
                for i in range(n + 1)
            )

        tail = tail_valuation
    return FredholmSeries(ring, coeffs, tail, provenance="product")


def _coefficient_floor(F: FredholmSeries, n: int):
    from .linalg import val_floor

    if n <= F.cap:
        return val_floor(F.coeffs[n])
    if F.tail_valuation is None:
        raise PrecisionExhausted(f"coefficient {n} beyond cap {F.cap} with no tail bound")
    return F.tail_valuation(n)
