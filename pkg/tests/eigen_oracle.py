"""Brute-force simultaneous-eigenspace oracle for small fiber data.

Independent of the eigenalgebra machinery: rational eigenvalue candidates
come from exhaustive p-adic root finding on characteristic polynomials, and
joint multiplicities from kernel intersections of generalized eigenspaces.
Only intended for matrices of size <= 4.
"""

from __future__ import annotations

from fractions import Fraction

from spectra import linalg
from spectra.fredholm import char_series
from spectra.newton import newton_polygon
from spectra.fredholm import FredholmSeries
from spectra.operators import CompactOperatorMatrix, DecayProfile
from spectra.riesz import slack_threshold
from spectra.series import poly_degree, poly_divmod, poly_eval

INF = float("inf")


def rational_roots(field, coeffs: list) -> list:
    """All roots of a polynomial in Q_p at working precision (may repeat)."""
    deg = poly_degree(coeffs)
    if deg <= 0:
        return []
    roots = []
    poly = coeffs[: deg + 1]
    # zero roots first
    while poly and poly[0].is_zero:
        roots.append(field.zero())
        poly = poly[1:]
    deg = poly_degree(poly)
    if deg <= 0:
        return roots
    rev = list(reversed([c * poly[deg].invert() for c in poly[: deg + 1]]))
    F = FredholmSeries(field, rev, tail_valuation=lambda n: INF)
    slopes = {s for s, _ in newton_polygon(F).slopes}
    for s in sorted(slopes):
        if Fraction(s).denominator != 1:
            continue
        roots.extend(_unit_scaled_roots(field, poly, int(s)))
    return roots


def _unit_scaled_roots(field, poly, s: int) -> list:
    p = field.p
    ps = field.from_fraction(Fraction(p) ** s)
    deg = poly_degree(poly)
    twisted = [poly[j] * ps**j for j in range(deg + 1)]
    floor = min(x.val_lower_bound for x in twisted if not x.is_zero)
    scale = field.from_fraction(Fraction(p) ** (-int(floor)))
    w = [c * scale for c in twisted]
    return [r * ps for r in _unit_roots(field, w, depth=0)]


def _unit_roots(field, w, depth: int) -> list:
    """Roots of valuation 0 of an integral polynomial, by residue search."""
    p = field.p
    if depth > field.r:
        return []
    out = []
    for c in range(1, p):
        x = field.from_int(c)
        if not _residue_zero(field, w, x):
            continue
        deriv = [w[j] * field.from_int(j) for j in range(1, len(w))]
        dval = poly_eval(field, deriv, x)
        if dval.is_invertible and dval.v == 0:
            out.append(_newton_refine(field, w, x))
        else:
            # multiple residue root: substitute Y = c + pZ and recurse
            shifted = _shift_scale(field, w, x)
            for z in _all_integral_roots(field, shifted, depth + 1):
                out.append(x + field.from_int(p) * z)
    return out


def _all_integral_roots(field, w, depth: int) -> list:
    """Integral roots (v >= 0) of a polynomial, via slopes then residues."""
    out = []
    poly = list(w)
    while poly and poly[0].is_zero:
        out.append(field.zero())
        poly = poly[1:]
    deg = poly_degree(poly)
    if deg <= 0 or depth > field.r:
        return out
    rev = list(reversed([c * poly[deg].invert() for c in poly[: deg + 1]]))
    F = FredholmSeries(field, rev, tail_valuation=lambda n: INF)
    for s, _ in newton_polygon(F).slopes:
        if Fraction(s).denominator != 1 or s < 0:
            continue
        out.extend(_unit_scaled_roots(field, poly, int(s)))
    return out


def _residue_zero(field, w, x) -> bool:
    val = poly_eval(field, w, x)
    return val.is_zero or val.v >= 1


def _newton_refine(field, w, x):
    deriv = [w[j] * field.from_int(j) for j in range(1, len(w))]
    for _ in range(field.r + 2):
        fx = poly_eval(field, w, x)
        if fx.is_zero:
            return x
        x = x - fx * poly_eval(field, deriv, x).invert()
    return x


def _shift_scale(field, w, c):
    """w(c + pZ) as a polynomial in Z, with content removed."""
    p = field.from_int(field.p)
    out = [field.zero()] * len(w)
    shifted = [field.one()]  # (c + pZ)^j expanded iteratively
    for j, coeff in enumerate(w):
        for k, s in enumerate(shifted):
            out[k] = out[k] + coeff * s
        nxt = [field.zero()] * (len(shifted) + 1)
        for k, s in enumerate(shifted):
            nxt[k] = nxt[k] + s * c
            nxt[k + 1] = nxt[k + 1] + s * p
        shifted = nxt
    floor = min((x.val_lower_bound for x in out if not x.is_zero), default=0)
    if floor == INF or floor <= 0:
        return out
    scale = field.from_fraction(Fraction(field.p) ** (-int(floor)))
    return [x * scale for x in out]


def simultaneous_eigenspaces(field, generators: dict) -> list:
    """All rational joint eigensystems with generalized multiplicities.

    Returns [(tuple_of_eigenvalues_by_sorted_name, dimension)] for every
    candidate tuple with a nonzero joint generalized eigenspace.
    """
    names = sorted(generators)
    size = len(generators[names[0]])
    candidates = {}
    for name in names:
        op = CompactOperatorMatrix(field, generators[name], DecayProfile.finite())
        F = char_series(op, size)
        charpoly = list(reversed([c for c in F.coeffs[: size + 1]]))
        found = rational_roots(field, charpoly)
        dedup = []
        for root in found:
            if not any((root - other).is_zero for other in dedup):
                dedup.append(root)
        candidates[name] = dedup
    systems = []
    tuples = [()]
    for name in names:
        tuples = [t + (lam,) for t in tuples for lam in candidates[name]]
    for lam_tuple in tuples:
        stacked = []
        for name, lam in zip(names, lam_tuple):
            shifted = [
                [generators[name][i][j] - (lam if i == j else field.zero()) for j in range(size)]
                for i in range(size)
            ]
            stacked.extend(linalg.mat_pow(field, shifted, size))
        kernel_vecs, _ = linalg.kernel(field, stacked)
        dim = len(kernel_vecs)
        if dim > 0:
            systems.append((lam_tuple, dim))
    return systems
