"""Local eigenalgebra construction over a single chart.

From a spectral datum (base ring, module window, commuting named operators,
one distinguished compact operator) this module builds the slope <= h local
piece: the finite kernel N = Ker Q*(phi), the restricted operator actions,
and the finite commutative algebra they generate, with nilpotent detection.
Fiberwise, the algebra splits into local factors whose minimal-polynomial
fingerprints are the systems of eigenvalues; specialization comparisons
certify that base change is a surjection with nilpotent kernel.
"""

from __future__ import annotations

import os
import random
from fractions import Fraction

from . import linalg
from .errors import (
    DomainViolation,
    NonNilpotentKernel,
    NonStableKernel,
    PrecisionExhausted,
    SplitFailure,
)
from .fredholm import FredholmSeries, char_series
from .newton import newton_pair_refine, newton_polygon, slope_factorization
from .operators import CompactOperatorMatrix, verify_compactness
from .riesz import (
    poly_of_operator,
    q_star,
    refine_factorization,
    riesz_from_factorization,
    slack_threshold,
)
from .rings import AffinoidRing, PadicScalar, RingHom
from .series import poly_degree, poly_mul

INFTY = float("inf")


class SpectralDatum:
    """Input bundle: base ring, distinguished compact operator, named operators."""

    def __init__(self, ring, phi: CompactOperatorMatrix, hecke: dict, x_cap: int, samples=None):
        self.ring = ring
        self.phi = phi
        self.hecke = {name: [[ring.coerce(x) for x in row] for row in mat] for name, mat in hecke.items()}
        self.x_cap = int(x_cap)
        self.samples = list(samples or [])
        for name, mat in self.hecke.items():
            if len(mat) != phi.size or any(len(row) != phi.size for row in mat):
                raise DomainViolation(f"operator {name!r} does not match the module size")

    @property
    def is_affinoid(self) -> bool:
        return isinstance(self.ring, AffinoidRing)

    def operator_names(self) -> list:
        return sorted(self.hecke)


class ValidationReport:
    def __init__(self, commutator_floors: dict, compactness, threshold: int):
        self.commutator_floors = commutator_floors
        self.compactness = compactness
        self.threshold = threshold
        self.violations = []
        for pair, floor in commutator_floors.items():
            if floor < threshold:
                self.violations.append(
                    f"[{pair[0]}, {pair[1]}] has norm p^(-{floor}), above the slack budget"
                )
        if not compactness.ok:
            self.violations.append(f"compactness certificate violated: {compactness.violations}")

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok


def validate_datum(datum: SpectralDatum) -> ValidationReport:
    """Commutators of all named operators (and phi) must vanish within slack."""
    ring = datum.ring
    thr = slack_threshold(ring)
    floors = {}
    mats = {"phi": datum.phi.entries}
    mats.update(datum.hecke)
    names = sorted(mats)
    for i, a in enumerate(names):
        for b in names[i + 1 :]:
            comm = linalg.mat_sub(
                linalg.mat_mul(mats[a], mats[b]), linalg.mat_mul(mats[b], mats[a])
            )
            floors[(a, b)] = linalg.mat_val_floor(comm)
    return ValidationReport(floors, verify_compactness(datum.phi), thr)


def slope_datum_search(F_family: FredholmSeries, h, samples) -> dict:
    """Check that the slope <= h degree is constant across the sampled fibers.

    Returns {"valid", "degrees", "violation"}: each sample is specialized,
    its polygon computed, and the break abscissa recorded; the datum is valid
    when every break is a certified vertex and the degrees agree.
    """
    ring = F_family.ring
    h = Fraction(h)
    degrees = []
    if not isinstance(ring, AffinoidRing):
        raise DomainViolation("slope datum search runs over an affinoid family")
    for point in samples:
        point = ring.check_point(point)
        hom = RingHom.specialize(ring, point)
        fiber = FredholmSeries(
            ring.field,
            [hom.apply(c) for c in F_family.coeffs],
            F_family.tail_valuation,
            provenance="fiber",
        )
        poly = newton_polygon(fiber)
        n0 = poly.break_abscissa(h)
        if n0 > poly.certified_through:
            return {
                "valid": False,
                "degrees": degrees,
                "violation": {"point": point, "reason": "break not certified"},
            }
        degrees.append(n0)
    if len(set(degrees)) > 1:
        first_bad = next(i for i, d in enumerate(degrees) if d != degrees[0])
        return {
            "valid": False,
            "degrees": degrees,
            "violation": {"point": samples[first_bad], "reason": "degree jump"},
        }
    return {"valid": True, "degrees": degrees, "violation": None}


class LocalEigenpiece:
    """The slope <= h local piece: kernel, restricted actions, eigenalgebra."""

    def __init__(
        self,
        datum: SpectralDatum,
        h,
        factorization,
        decomposition,
        phi_restricted,
        hecke_restricted: dict,
        algebra_words,
        algebra_matrices,
        multiplication_table,
        radical_elements,
        structural_map_floor,
    ):
        self.datum = datum
        self.h = Fraction(h)
        self.factorization = factorization
        self.decomposition = decomposition
        self.phi_restricted = phi_restricted
        self.hecke_restricted = hecke_restricted
        self.algebra_words = algebra_words
        self.algebra_matrices = algebra_matrices
        self.multiplication_table = multiplication_table
        self.radical_elements = radical_elements  # [(coeff vector, matrix, nilpotent flag)]
        self.structural_map_floor = structural_map_floor

    @property
    def ring(self):
        return self.datum.ring

    @property
    def rank(self) -> int:
        return self.decomposition.rank

    @property
    def kernel_basis(self):
        return self.decomposition.kernel_basis

    @property
    def nilpotent_detected(self) -> bool:
        return any(flag for _, _, flag in self.radical_elements)

    def generator_matrices(self) -> dict:
        out = {"phi": self.phi_restricted}
        out.update(self.hecke_restricted)
        return out


def _vectorize(mat) -> list:
    return [x for row in mat for x in row]


def _monomials_upto(nvars: int, cap: int) -> list:
    out = [(0,) * nvars]
    frontier = out[:]
    for _ in range(cap):
        nxt = []
        for exp in frontier:
            for i in range(nvars):
                cand = tuple(e + (1 if j == i else 0) for j, e in enumerate(exp))
                if cand not in nxt:
                    nxt.append(cand)
        frontier = [e for e in nxt if e not in out]
        out.extend(frontier)
    return sorted(set(out))


def module_solve(ring, basis_vecs: list, target_vecs: list):
    """Express target vectors in the module span of basis vectors.

    Over the field this is plain elimination.  Over a chart the unknown
    coefficients are polynomials of total degree up to the chart bound, so
    the identity becomes one finite linear system over the scalar field in
    the coefficient layers; elimination (free variables zeroed) makes the
    returned coefficients deterministic.  Returns (coeffs, residual_floor)
    shaped like ``linalg.solve_in_span``.
    """
    if not isinstance(ring, AffinoidRing):
        return linalg.solve_in_span(ring, basis_vecs, target_vecs)
    field = ring.field
    if all(
        x.effective_degree() <= 0 for vec in list(basis_vecs) + list(target_vecs) for x in vec
    ):
        # constant data: solve over the field and lift the coefficients
        consts = [[x.constant_term() for x in vec] for vec in basis_vecs]
        t_consts = [[x.constant_term() for x in vec] for vec in target_vecs]
        coeffs, floor = linalg.solve_in_span(field, consts, t_consts, allow_deficient=True)
        lifted = [[ring.from_scalar(c) for c in row] for row in coeffs]
        return lifted, floor
    nvars = len(ring.variables)
    cap = ring.degree_bound
    monos = _monomials_upto(nvars, cap)
    entry_monos = set()
    for vec in list(basis_vecs) + list(target_vecs):
        for x in vec:
            entry_monos.update(x.coeffs.keys())
    max_entry_deg = max((sum(e) for e in entry_monos), default=0)
    result_monos = _monomials_upto(nvars, cap + max_entry_deg)
    mono_index = {m: i for i, m in enumerate(result_monos)}
    length = len(basis_vecs[0]) if basis_vecs else len(target_vecs[0])
    rows = length * len(result_monos)

    def scalarize_column(vec, shift):
        col = [field.zero()] * rows
        for pos, x in enumerate(vec):
            for mono, c in x.coeffs.items():
                total = tuple(a + b for a, b in zip(mono, shift))
                if sum(total) > cap + max_entry_deg:
                    continue
                idx = pos * len(result_monos) + mono_index[total]
                col[idx] = col[idx] + c
        return col

    cols = []
    col_tags = []
    for i, vec in enumerate(basis_vecs):
        for mono in monos:
            cols.append(scalarize_column(vec, mono))
            col_tags.append((i, mono))
    targets = [scalarize_column(vec, (0,) * nvars) for vec in target_vecs]
    if not cols:
        floor = INFTY
        for t in targets:
            for x in t:
                floor = min(floor, x.val_lower_bound)
        return [], floor
    coeffs, floor = linalg.solve_in_span(field, cols, targets, allow_deficient=True)
    out = []
    for i in range(len(basis_vecs)):
        row = []
        for t in range(len(target_vecs)):
            parts = {}
            for c_idx, (bi, mono) in enumerate(col_tags):
                if bi != i:
                    continue
                scalar = coeffs[c_idx][t]
                if not scalar.is_exact_zero:
                    parts[mono] = scalar
            from .rings import AffinoidElement

            row.append(AffinoidElement(ring, parts))
        out.append(row)
    return out, floor


def _in_module_span(ring, basis_vecs, target_vec, thr) -> bool:
    try:
        _, floor = module_solve(ring, basis_vecs, [target_vec])
    except Exception:
        return False
    return floor >= thr


def _module_kernel(ring, mat, thr) -> list:
    """Kernel vectors of a square matrix over the base ring.

    Over a chart, kernel elements are found with polynomial coefficients of
    bounded total degree via the scalarized system; higher-degree syzygies
    are out of reach and simply not reported.
    """
    if not isinstance(ring, AffinoidRing):
        vecs, _ = linalg.kernel(ring, mat)
        return vecs
    field = ring.field
    n = len(mat)
    if all(x.effective_degree() <= 0 for row in mat for x in row):
        consts = [[x.constant_term() for x in row] for row in mat]
        vecs, _ = linalg.kernel(field, consts)
        return [[ring.from_scalar(c) for c in vec] for vec in vecs]
    nvars = len(ring.variables)
    monos = _monomials_upto(nvars, ring.degree_bound)
    entry_monos = set()
    for row in mat:
        for x in row:
            entry_monos.update(x.coeffs.keys())
    max_entry_deg = max((sum(e) for e in entry_monos), default=0)
    result_monos = _monomials_upto(nvars, ring.degree_bound + max_entry_deg)
    mono_index = {m: i for i, m in enumerate(result_monos)}
    rows = n * len(result_monos)
    cols = []
    tags = []
    for c in range(n):
        for mono in monos:
            col = [field.zero()] * rows
            for i in range(n):
                x = mat[i][c]
                for em, scalar in x.coeffs.items():
                    total = tuple(a + b for a, b in zip(em, mono))
                    if sum(total) > ring.degree_bound + max_entry_deg:
                        continue
                    idx = i * len(result_monos) + mono_index[total]
                    col[idx] = col[idx] + scalar
            cols.append(col)
            tags.append((c, mono))
    scal_kernel, _ = linalg.kernel(field, [list(r) for r in zip(*cols)])
    from .rings import AffinoidElement

    out = []
    for kv in scal_kernel:
        parts = [dict() for _ in range(n)]
        for val, (c, mono) in zip(kv, tags):
            if not val.is_exact_zero:
                parts[c][mono] = val
        vec = [AffinoidElement(ring, parts[c]) for c in range(n)]
        if all(x.is_zero for x in vec):
            continue
        if out and _in_module_span(ring, out, vec, thr):
            continue  # a chart multiple of an already-kept direction
        out.append(vec)
    return out


def _algebra_closure(ring, generators: dict, dim: int, thr: int):
    """Close {1} u generators under products to a module generating set.

    Words are built in graded-lexicographic order with phi first.  A product
    already in the span of the collected matrices is recorded in the
    multiplication table rather than added.  The generating set is capped at
    dim^2 (the ambient endomorphism dimension).
    """
    names = ["phi"] + sorted(n for n in generators if n != "phi")
    words = [()]
    matrices = [linalg.identity(ring, dim)]
    frontier = [()]
    while frontier:
        word = frontier.pop(0)
        base_idx = words.index(word)
        for name in names:
            new_word = word + (name,)
            candidate = linalg.mat_mul(matrices[base_idx], generators[name])
            if _in_module_span(ring, [_vectorize(m) for m in matrices], _vectorize(candidate), thr):
                continue
            words.append(new_word)
            matrices.append(candidate)
            frontier.append(new_word)
            if len(words) > dim * dim:
                raise PrecisionExhausted("eigenalgebra closure exceeded the dimension bound")
    table = {}
    basis_vecs = [_vectorize(m) for m in matrices]
    products = []
    for i, mi in enumerate(matrices):
        for j, mj in enumerate(matrices):
            products.append(_vectorize(linalg.mat_mul(mi, mj)))
    coeffs, floor = module_solve(ring, basis_vecs, products)
    if floor < thr:
        raise PrecisionExhausted(
            f"algebra closure is not multiplicatively closed (residual O(p^{floor}))"
        )
    n = len(matrices)
    for i in range(n):
        for j in range(n):
            t = i * n + j
            table[(i, j)] = [coeffs[k][t] for k in range(n)]
    return words, matrices, table


def _trace(mat):
    total = mat[0][0]
    for i in range(1, len(mat)):
        total = total + mat[i][i]
    return total


def _radical_candidates(ring, matrices, table, dim: int, thr: int):
    """Kernel directions of the trace form, powered to test nilpotency."""
    n = len(matrices)
    gram = [[None] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            gram[i][j] = _trace(linalg.mat_mul(matrices[i], matrices[j]))
    kernel_vecs = _module_kernel(ring, gram, thr)
    out = []
    for vec in kernel_vecs:
        element = linalg.zero_matrix(ring, dim, dim)
        for coeff, mat in zip(vec, matrices):
            element = linalg.mat_add(element, linalg.mat_scale(mat, coeff))
        power = element
        nilpotent = linalg.mat_is_negligible(power, thr)
        for _ in range(dim - 1):
            if nilpotent:
                break
            power = linalg.mat_mul(power, element)
            nilpotent = linalg.mat_is_negligible(power, thr)
        out.append((vec, element, nilpotent))
    return out


def build_local_piece(datum: SpectralDatum, h) -> LocalEigenpiece:
    """Assemble the slope <= h eigenpiece of a validated spectral datum."""
    report = validate_datum(datum)
    if not report.ok:
        raise DomainViolation("; ".join(report.violations))
    ring = datum.ring
    thr = slack_threshold(ring)
    F = char_series(datum.phi, datum.x_cap)
    fact = slope_factorization(F, h)
    dec = riesz_from_factorization(datum.phi, F, fact)
    basis = dec.kernel_basis
    if not basis:
        return LocalEigenpiece(
            datum, h, fact, dec, [], {}, [()], [], {(0, 0): []}, [], INFTY
        )
    phi_restricted, floor = linalg.restrict_operator(ring, datum.phi.entries, basis)
    if floor < thr:
        raise NonStableKernel(f"phi leaves the kernel at floor {floor}")
    hecke_restricted = {}
    for name, mat in datum.hecke.items():
        restricted, floor = linalg.restrict_operator(ring, mat, basis)
        if floor < thr:
            raise NonStableKernel(
                f"operator {name!r} does not preserve Ker Q*(phi): residual O(p^{floor})"
            )
        hecke_restricted[name] = restricted
    generators = {"phi": phi_restricted}
    generators.update(hecke_restricted)
    words, matrices, table = _algebra_closure(ring, generators, dec.rank, thr)
    radical = _radical_candidates(ring, matrices, table, dec.rank, thr)
    structural_floor = _structural_map_floor(ring, fact.q, phi_restricted, thr)
    return LocalEigenpiece(
        datum, h, fact, dec, phi_restricted, hecke_restricted,
        words, matrices, table, radical, structural_floor,
    )


def _structural_map_floor(ring, q, phi_restricted, thr: int):
    """Residual floor of Q*(phi|N) = 0, witnessing X -> phi^{-1} on Ker Q*(phi)."""
    if not phi_restricted:
        return INFTY
    value = poly_of_operator(ring, q_star(ring, q), phi_restricted)
    return linalg.mat_val_floor(value)


# -- fiberwise eigensystems -------------------------------------------------------


class EigensystemRecord:
    def __init__(self, fingerprints, slope, multiplicity, local_degree, reduced, unsplit):
        self.fingerprints = fingerprints  # {operator name: minimal polynomial coeffs}
        self.slope = slope
        self.multiplicity = multiplicity
        self.local_degree = local_degree
        self.reduced = reduced
        self.unsplit = unsplit

    def to_dict(self) -> dict:
        return {
            "fingerprints": {k: [repr(c) for c in v] for k, v in self.fingerprints.items()},
            "slope": str(self.slope),
            "multiplicity": self.multiplicity,
            "local_degree": self.local_degree,
            "reduced": self.reduced,
            "unsplit": self.unsplit,
        }


class EigensystemReport:
    def __init__(self, point, records, algebra_dim, kernel_rank):
        self.point = point
        self.records = records
        self.algebra_dim = algebra_dim
        self.kernel_rank = kernel_rank

    def total_weighted_multiplicity(self) -> int:
        return sum(rec.multiplicity * rec.local_degree for rec in self.records)


def _specialized_generators(piece: LocalEigenpiece, point):
    ring = piece.ring
    if isinstance(ring, AffinoidRing):
        hom = RingHom.specialize(ring, point)
        field = ring.field
        gens = {"phi": linalg.mat_map(piece.phi_restricted, hom.apply)}
        for name, mat in piece.hecke_restricted.items():
            gens[name] = linalg.mat_map(mat, hom.apply)
        return field, gens
    if point not in (None, ()):
        raise DomainViolation("a field-based piece has a single fiber")
    gens = {"phi": piece.phi_restricted}
    gens.update(piece.hecke_restricted)
    return ring, gens


def minimal_polynomial(field, mat) -> list:
    """Monic minimal polynomial of a square matrix over the field."""
    n = len(mat)
    power = linalg.identity(field, n)
    vectors = []
    for j in range(n + 1):
        vec = _vectorize(power)
        try:
            coeffs, floor = linalg.solve_in_span(field, vectors, [vec])
            if floor >= slack_threshold(field):
                mu = [-coeffs[i][0] for i in range(j)] + [field.one()]
                return mu
        except Exception:
            pass
        vectors.append(vec)
        power = linalg.mat_mul(power, mat)
    raise PrecisionExhausted("no minimal polynomial found at working precision")


def _fp_poly_from(field, coeffs) -> tuple:
    p = field.p
    out = []
    for c in coeffs:
        out.append(0 if c.is_zero or c.v > 0 else (c.u % p) if c.v == 0 else 0)
    while out and out[-1] == 0:
        out.pop()
    return tuple(out)


def _fp_mul(a, b, p):
    if not a or not b:
        return ()
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        for j, y in enumerate(b):
            out[i + j] = (out[i + j] + x * y) % p
    while out and out[-1] == 0:
        out.pop()
    return tuple(out)


def _fp_divmod(a, b, p):
    a = list(a)
    db = len(b) - 1
    inv = pow(b[-1], -1, p)
    quo = [0] * max(len(a) - db, 0)
    for k in range(len(a) - 1, db - 1, -1):
        c = (a[k] * inv) % p
        if c == 0:
            continue
        quo[k - db] = c
        for j in range(db + 1):
            a[k - db + j] = (a[k - db + j] - c * b[j]) % p
    rem = a[:db]
    while rem and rem[-1] == 0:
        rem.pop()
    return tuple(quo), tuple(rem)


def _fp_factor_monic(poly: tuple, p: int) -> list:
    """Brute-force factorization of a monic polynomial over F_p (small degree)."""
    poly = tuple(x % p for x in poly)
    deg = len(poly) - 1
    if deg <= 1:
        return [poly]
    for d in range(1, deg // 2 + 1):
        for idx in range(p**d):
            cand = []
            k = idx
            for _ in range(d):
                cand.append(k % p)
                k //= p
            cand.append(1)
            quo, rem = _fp_divmod(poly, tuple(cand), p)
            if not rem:
                return _fp_factor_monic(tuple(cand), p) + _fp_factor_monic(quo, p)
    return [poly]


def _coprime_factorization(field, mu: list):
    """Split a monic polynomial into pairwise coprime monic factors.

    Strategy: separate the zero root, then split by polygon slope, then
    within each integral slope split by residue factorization mod p with
    Hensel refinement.  Returns a list of dicts with keys ``coeffs``,
    ``slope``, ``residue_degree``, ``certified_irreducible_power``.
    """
    p = field.p
    deg = poly_degree(mu)
    mu = mu[: deg + 1]
    # strip the zero eigenvalue part
    k0 = next((i for i, c in enumerate(mu) if not c.is_zero), None)
    factors = []
    if k0:
        factors.append(
            {
                "coeffs": [field.zero()] * k0 + [field.one()],
                "slope": INFTY,
                "residue_degree": 1,
                "power": k0,
                "unsplit": False,
            }
        )
        mu = mu[k0:]
        deg -= k0
    if deg == 0:
        return factors
    # reverse to Fredholm orientation (monic input, so the reversal starts at 1)
    rev = list(reversed(mu))
    F = FredholmSeries(field, rev, tail_valuation=lambda n: INFTY)
    remaining = F
    slope_parts = []
    while True:
        poly = newton_polygon(remaining)
        if not poly.slopes:
            break
        s0 = poly.slopes[0][0]
        fact = slope_factorization(remaining, s0)
        slope_parts.append((s0, list(fact.q)))
        s_deg = poly_degree(remaining.coeffs) - fact.n0
        s_coeffs = fact.s.coeffs[: s_deg + 1]
        if poly_degree(s_coeffs) <= 0:
            break
        remaining = FredholmSeries(field, s_coeffs, tail_valuation=lambda n: INFTY)
    for slope, q in slope_parts:
        monic = q_star(field, q)
        lead_inv = monic[-1].invert()
        monic = [c * lead_inv for c in monic]
        monic[-1] = field.one()
        factors.extend(_split_single_slope(field, monic, slope))
    return factors


def _split_single_slope(field, monic: list, slope) -> list:
    """Residue-split a monic factor whose roots all have the given valuation."""
    p = field.p
    deg = poly_degree(monic)
    slope = Fraction(slope)
    if slope.denominator != 1:
        certified = deg == slope.denominator
        return [
            {
                "coeffs": monic,
                "slope": slope,
                "residue_degree": None,
                "power": 1,
                "unsplit": not certified,
            }
        ]
    s = int(slope)
    # twist to unit roots: W(Y) = m(p^s Y) / p^(s*deg)
    ps = field.from_fraction(Fraction(p) ** s)
    scale = (ps ** deg).invert()
    w = [c * ps ** j * scale for j, c in enumerate(monic)]
    wbar = _fp_poly_from(field, w)
    if len(wbar) - 1 != deg:
        raise PrecisionExhausted("twisted factor did not reduce to the expected degree")
    irreducibles = _fp_factor_monic(wbar, p)
    groups: dict = {}
    for f in irreducibles:
        groups[f] = groups.get(f, 0) + 1
    group_polys = []
    for f, e in sorted(groups.items()):
        fe = (1,)
        for _ in range(e):
            fe = _fp_mul(fe, f, p)
        group_polys.append((f, e, fe))
    parts = _hensel_split_groups(field, w, [g[2] for g in group_polys])
    out = []
    for (fbar, e, _), part in zip(group_polys, parts):
        # untwist: m_i(Y) = W_i(Y / p^s) * p^(s*deg_i)
        d_i = poly_degree(part)
        coeffs = [part[j] * ps ** (d_i - j) for j in range(d_i + 1)]
        out.append(
            {
                "coeffs": coeffs,
                "slope": slope,
                "residue_degree": len(fbar) - 1,
                "power": e,
                "unsplit": False,
            }
        )
    return out


def _hensel_split_groups(field, w: list, group_images: list) -> list:
    """Split a monic unit-root polynomial along coprime mod-p factor groups."""
    if len(group_images) == 1:
        return [w]
    first = group_images[0]
    rest = (1,)
    for g in group_images[1:]:
        rest = _fp_mul(rest, g, field.p)
    q_init = [field.from_int(int(c)) for c in first]
    s_init = [field.from_int(int(c)) for c in rest]
    q_init[-1] = field.one()
    s_init[-1] = field.one()
    q, s, _ = newton_pair_refine(field, w, q_init, s_init)
    return [q] + _hensel_split_groups(field, s, group_images[1:])


def _seeded_rng(tag: str) -> random.Random:
    seed = os.environ.get("SPECTRA_SEED", "0")
    return random.Random(f"{seed}:{tag}")


def fiber_eigensystems(piece: LocalEigenpiece, point=None) -> EigensystemReport:
    """Split the fiber eigenalgebra into local factors and report eigensystems.

    The splitting element is a seeded random combination of the generators,
    retried (with a fresh combination) when its minimal polynomial fails to
    see the whole algebra or has an uncertain constant term.
    """
    field, gens = _specialized_generators(piece, point)
    k = piece.rank
    thr = slack_threshold(field)
    if k == 0:
        return EigensystemReport(point, [], 0, 0)
    names = ["phi"] + sorted(n for n in gens if n != "phi")
    t_l_words, t_l_matrices, _ = _algebra_closure(field, gens, k, thr)
    algebra_dim = len(t_l_matrices)
    rng = _seeded_rng("split")
    last_error = None
    for attempt in range(8):
        if attempt == 0:
            weights = [1] * len(names)
        else:
            weights = [1] + [rng.randrange(0, field.p ** 2) for _ in names[1:]]
        z = linalg.zero_matrix(field, k, k)
        for wgt, name in zip(weights, names):
            z = linalg.mat_add(z, linalg.mat_scale(gens[name], field.from_int(wgt)))
        try:
            mu = minimal_polynomial(field, z)
            factors = _coprime_factorization(field, mu)
            return _assemble_report(piece, field, gens, z, factors, t_l_matrices, point)
        except (PrecisionExhausted, SplitFailure) as exc:
            last_error = exc
            continue
    raise SplitFailure(f"no splitting element found in 8 attempts: {last_error}")


def _assemble_report(piece, field, gens, z, factors, t_l_matrices, point):
    k = piece.rank
    thr = slack_threshold(field)
    mu_parts = [f["coeffs"] for f in factors]
    records = []
    idempotents = _crt_idempotents(field, z, mu_parts)
    total = 0
    for fac, eps in zip(factors, idempotents):
        comp_basis, _ = linalg.kernel(
            field, linalg.mat_sub(linalg.identity(field, k), eps)
        )
        dim = len(comp_basis)
        if dim == 0:
            raise SplitFailure("a factor produced an empty component")
        fingerprints = {}
        phi_slope = None
        for name in gens:
            restricted, floor = linalg.restrict_operator(field, gens[name], comp_basis)
            if floor < thr:
                raise NonStableKernel(f"{name!r} leaves a local component (floor {floor})")
            mp = minimal_polynomial(field, restricted)
            fingerprints[name] = mp
            if name == "phi":
                phi_slope = _single_slope_of_minpoly(field, mp)
        local_degree = poly_degree(fac["coeffs"]) // fac["power"] if fac["power"] else 1
        if fac["residue_degree"] is None:
            local_degree = poly_degree(fac["coeffs"])
        multiplicity = dim // local_degree if local_degree and dim % local_degree == 0 else dim
        alg_dim = _component_algebra_dim(field, eps, t_l_matrices, thr)
        reduced = alg_dim == local_degree
        records.append(
            EigensystemRecord(
                fingerprints,
                phi_slope,
                multiplicity,
                local_degree,
                reduced,
                fac["unsplit"],
            )
        )
        total += dim
    if total != k:
        raise SplitFailure(f"component dimensions sum to {total}, expected {k}")
    return EigensystemReport(point, records, len(t_l_matrices), k)


def _single_slope_of_minpoly(field, mp: list):
    """Valuation of the eigenvalue(s) of an operator with local minimal polynomial."""
    deg = poly_degree(mp)
    rev = [c * mp[deg].invert() for c in reversed(mp[: deg + 1])]
    if not rev or not rev[0].is_invertible:
        return INFTY
    norm = [c * rev[0].invert() for c in rev]
    F = FredholmSeries(field, norm, tail_valuation=lambda n: INFTY)
    poly = newton_polygon(F)
    slopes = {s for s, _ in poly.slopes}
    if len(slopes) > 1:
        raise SplitFailure(f"local factor carries several slopes {slopes}")
    return slopes.pop() if slopes else Fraction(0)


def _component_algebra_dim(field, eps, t_l_matrices, thr) -> int:
    cols = []
    dim = 0
    for mat in t_l_matrices:
        vec = _vectorize(linalg.mat_mul(eps, mat))
        try:
            _, floor = linalg.solve_in_span(field, cols, [vec])
            if floor >= thr:
                continue
        except Exception:
            pass
        cols.append(vec)
        dim += 1
    return dim


def _crt_idempotents(field, z, mu_parts: list) -> list:
    """Orthogonal idempotents e_i(z) from pairwise coprime monic factors."""
    from .riesz import _poly_bezout

    if len(mu_parts) == 1:
        return [linalg.identity(field, len(z))]
    thr = slack_threshold(field)
    out = []
    total = linalg.zero_matrix(field, len(z), len(z))
    for i, part in enumerate(mu_parts):
        rest = [field.one()]
        for j, other in enumerate(mu_parts):
            if i != j:
                rest = poly_mul(field, rest, other)
        f, g = _poly_bezout(field, rest, part)
        eps_poly = poly_mul(field, rest, f)
        eps = poly_of_operator(field, eps_poly, z)
        idem = linalg.mat_sub(linalg.mat_mul(eps, eps), eps)
        if not linalg.mat_is_negligible(idem, thr):
            raise SplitFailure(
                f"splitting idempotent {i} fails e^2 = e at floor "
                f"{linalg.mat_val_floor(idem)}"
            )
        total = linalg.mat_add(total, eps)
        out.append(eps)
    resolution = linalg.mat_sub(total, linalg.identity(field, len(z)))
    if not linalg.mat_is_negligible(resolution, thr):
        raise SplitFailure("splitting idempotents do not sum to the identity")
    return out


# -- base change and glueing -------------------------------------------------------


def base_change_piece(piece: LocalEigenpiece, hom: RingHom) -> dict:
    """Compare the specialized algebra with the algebra of specialized matrices.

    The comparison map sends each monomial of the chart algebra to the same
    monomial in the specialized generators; it is surjective by construction,
    and every kernel generator must be nilpotent (checked by powering through
    the specialized multiplication table).  A non-nilpotent kernel element is
    an implementation bug and raises loudly.
    """
    ring = piece.ring
    if hom.kind == "identity":
        return {
            "surjective": True,
            "kernel_rank": 0,
            "nilpotent_kernel": True,
            "isomorphism": True,
            "target_dim": len(piece.algebra_matrices),
            "source_dim": len(piece.algebra_matrices),
        }
    if not isinstance(ring, AffinoidRing):
        raise DomainViolation("base change specializes an affinoid piece")
    field = ring.field
    thr = slack_threshold(field)
    spec_mats = [linalg.mat_map(m, hom.apply) for m in piece.algebra_matrices]
    spec_table = {
        key: [hom.apply(c) for c in coeffs] for key, coeffs in piece.multiplication_table.items()
    }
    # the target algebra: closure of the specialized generators
    field2, gens = _specialized_generators(piece, hom.point)
    _, target_mats, _ = _algebra_closure(field2, gens, piece.rank, thr)
    target_dim = len(target_mats)
    # kernel of the comparison: combinations of source monomials that die
    kernel_vecs = []
    if spec_mats:
        cols = [_vectorize(m) for m in spec_mats]
        kernel_vecs, _ = linalg.kernel(field, [list(row) for row in zip(*cols)])
    nilpotent = True
    for vec in kernel_vecs:
        if not _nilpotent_in_table(field, vec, spec_table, piece.rank, thr):
            nilpotent = False
    if not nilpotent:
        raise NonNilpotentKernel(
            "a base-change kernel generator is not nilpotent; this falsifies the "
            "comparison theorem at this instance and signals a bug"
        )
    # source fiber dimension: span of specialized monomials plus kernel rank
    src_span = _span_dim(field, spec_mats, thr)
    return {
        "surjective": src_span >= target_dim,
        "kernel_rank": len(kernel_vecs),
        "nilpotent_kernel": nilpotent,
        "isomorphism": not kernel_vecs and src_span == target_dim,
        "target_dim": target_dim,
        "source_dim": src_span + len(kernel_vecs),
    }


def _span_dim(field, mats, thr) -> int:
    cols = []
    for m in mats:
        vec = _vectorize(m)
        try:
            _, floor = linalg.solve_in_span(field, cols, [vec])
            if floor >= thr:
                continue
        except Exception:
            pass
        cols.append(vec)
    return len(cols)


def _nilpotent_in_table(field, vec, table, rank_bound: int, thr: int) -> bool:
    """Power an abstract element through the multiplication table."""
    n = len(vec)
    current = list(vec)
    for _ in range(max(rank_bound, 1)):
        if all(c.is_zero or c.is_negligible(thr) for c in current):
            return True
        nxt = [field.zero()] * n
        for i, ci in enumerate(current):
            if ci.is_zero:
                continue
            for j, cj in enumerate(vec):
                if cj.is_zero:
                    continue
                for t, coeff in enumerate(table[(i, j)]):
                    nxt[t] = nxt[t] + ci * cj * coeff
        current = nxt
    return all(c.is_zero or c.is_negligible(thr) for c in current)


def glue_check(piece1: LocalEigenpiece, piece2: LocalEigenpiece) -> dict:
    """Verify the nested identification Ker Q1*(phi) inside Ker Q2*(phi).

    Requires both pieces built from the same datum with h1 <= h2; runs the
    factor-refinement idempotent and checks it intertwines every restricted
    operator within slack.
    """
    if piece1.datum is not piece2.datum:
        raise DomainViolation("glue check needs pieces of one datum")
    if piece1.h > piece2.h:
        raise DomainViolation("glue check expects h1 <= h2")
    ring = piece1.ring
    thr = slack_threshold(ring)
    if piece1.rank == 0:
        return {"kernel_match_floor": INFTY, "intertwine_floors": {}, "trivial": True}
    if piece1.h == piece2.h or piece1.rank == piece2.rank:
        pf = linalg.identity(ring, piece2.rank)
        report = {"kernel_match_floor": INFTY, "idempotent_floor": INFTY}
    else:
        pf, report = refine_factorization(
            piece1.datum.phi, piece1.factorization.q, piece2.factorization.q,
            piece2.factorization.s,
        )
    n1 = piece1.kernel_basis
    n2 = piece2.kernel_basis
    iota, floor_incl = linalg.solve_in_span(ring, n2, n1)
    if floor_incl < thr:
        raise NonStableKernel(f"N1 is not inside N2 at precision (floor {floor_incl})")
    intertwine = {}
    gens1 = piece1.generator_matrices()
    gens2 = piece2.generator_matrices()
    for name in gens1:
        t1 = gens1[name]
        t2 = gens2[name]
        # N1 -> N2 -> N2 -> projected back: coordinates of Pf t2 iota in N1
        comp = linalg.mat_mul(pf, linalg.mat_mul(t2, iota))
        ambient = linalg.mat_mul(linalg.from_columns(n2), comp)
        coords, floor = linalg.solve_in_span(ring, n1, linalg.columns(ambient))
        diff_floor = floor
        for i in range(piece1.rank):
            for j in range(piece1.rank):
                diff = coords[i][j] - t1[i][j]
                fl = diff.val_lower_bound if hasattr(diff, "val_lower_bound") else diff.gauss_valuation()
                diff_floor = min(diff_floor, fl)
        intertwine[name] = diff_floor
        if diff_floor < thr:
            raise NonStableKernel(
                f"glued identification fails to intertwine {name!r} (floor {diff_floor})"
            )
    return {
        "kernel_match_floor": report["kernel_match_floor"],
        "intertwine_floors": intertwine,
        "trivial": False,
    }
