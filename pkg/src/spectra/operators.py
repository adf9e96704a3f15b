"""Compact operators as finite matrix windows with decay certificates.

A ``CompactOperatorMatrix`` is a square window onto an operator on an
orthonormalizable Banach module: column j holds the coordinates of the image
of the j-th basis vector.  The attached ``DecayProfile`` certifies how column
norms decay, both across the window and (crucially) beyond it; every
downstream truncation bound consumes ``tail(M)``.

Norm bookkeeping is done with exact valuation exponents: a bound
``r_j <= p**(-e_j)`` is stored as the rational exponent ``e_j``; ``INFTY``
means the column vanishes exactly and ``-INFTY`` means no claim.
"""

from __future__ import annotations

from fractions import Fraction

from .errors import DomainViolation, SizeMismatch
from .linalg import mat_map, mat_mul
from .rings import PadicScalar, RingHom

INFTY = float("inf")


class DecayProfile:
    """Certified lower bounds on column valuations ``v(column j) >= e_j``.

    Kinds:
      * ``finite``    -- columns beyond the window vanish exactly; no claim
                         inside the window.
      * ``geometric`` -- ``e_j = base + step*j`` for all j, with step > 0.
      * ``stepped``   -- ``e_j = base + step*floor(j/length)``, step > 0.
      * ``explicit``  -- a per-column exponent list for the window, columns
                         beyond it vanishing exactly.
    """

    def __init__(self, kind: str, base=0, step=0, length: int = 1, exponents=None) -> None:
        if kind not in ("finite", "geometric", "stepped", "explicit"):
            raise DomainViolation(f"unknown decay profile kind {kind!r}")
        if kind in ("geometric", "stepped") and not step > 0:
            raise DomainViolation(f"{kind} profile needs a positive step, got {step}")
        if kind == "stepped" and length < 1:
            raise DomainViolation("stepped profile needs length >= 1")
        self.kind = kind
        self.base = Fraction(base)
        self.step = Fraction(step) if kind in ("geometric", "stepped") else Fraction(0)
        self.length = int(length)
        self.exponents = None if exponents is None else tuple(exponents)

    @classmethod
    def finite(cls) -> "DecayProfile":
        return cls("finite")

    @classmethod
    def geometric(cls, base, step) -> "DecayProfile":
        return cls("geometric", base=base, step=step)

    @classmethod
    def stepped(cls, base, step, length) -> "DecayProfile":
        return cls("stepped", base=base, step=step, length=length)

    @classmethod
    def explicit(cls, exponents) -> "DecayProfile":
        return cls("explicit", exponents=exponents)

    def bound_exponent(self, j: int, window: int):
        """Claimed valuation lower bound for column j."""
        if self.kind == "geometric":
            return self.base + self.step * j
        if self.kind == "stepped":
            return self.base + self.step * (j // self.length)
        if self.kind == "explicit":
            if j < len(self.exponents):
                return self.exponents[j]
            return INFTY
        return INFTY if j >= window else -INFTY

    def tail_exponent(self, m: int, window: int):
        """Valuation lower bound valid for every column j >= m."""
        if self.kind in ("geometric", "stepped"):
            return self.bound_exponent(m, window)
        # finite / explicit: beyond the window everything vanishes exactly
        if m >= window:
            return INFTY
        exps = []
        for j in range(m, window):
            exps.append(self.bound_exponent(j, window))
        return min(exps) if exps else INFTY

    def shift(self, s) -> "DecayProfile":
        """The profile of the composition with an operator of norm p**(-s)."""
        if self.kind == "explicit":
            return DecayProfile.explicit([e + s for e in self.exponents])
        out = DecayProfile.__new__(DecayProfile)
        out.kind = self.kind
        out.base = self.base + s
        out.step = self.step
        out.length = self.length
        out.exponents = None
        return out

    def tends_to_zero(self) -> bool:
        """Whether the certified bounds force column norms to 0 formally."""
        return True  # every supported kind does; kept for report symmetry

    def describe(self) -> dict:
        out = {"kind": self.kind}
        if self.kind in ("geometric", "stepped"):
            out["base"] = str(self.base)
            out["step"] = str(self.step)
        if self.kind == "stepped":
            out["length"] = self.length
        if self.kind == "explicit":
            out["exponents"] = [None if e == INFTY else str(e) for e in self.exponents]
        return out


class CompactnessReport:
    def __init__(self, ok: bool, violations: list, tail_formal: bool) -> None:
        self.ok = ok
        self.violations = violations  # [(column, found_valuation, claimed_bound)]
        self.tail_formal = tail_formal

    def __bool__(self) -> bool:
        return self.ok

    def __repr__(self) -> str:
        if self.ok:
            return "CompactnessReport(ok)"
        return f"CompactnessReport(violations={self.violations})"


class CompactOperatorMatrix:
    """A finite window of a compact endomorphism plus its decay certificate."""

    def __init__(self, ring, entries: list, decay: DecayProfile, basis_label: str = "e") -> None:
        m = len(entries)
        if any(len(row) != m for row in entries):
            raise SizeMismatch("operator window must be square")
        self.ring = ring
        self.entries = [[ring.coerce(x) for x in row] for row in entries]
        self.decay = decay
        self.basis_label = basis_label

    @property
    def size(self) -> int:
        return len(self.entries)

    # -- norms ---------------------------------------------------------------

    def column_valuation(self, j: int):
        """Exact valuation of the window column j (INFTY if certified zero)."""
        vals = []
        for i in range(self.size):
            x = self.entries[i][j]
            vals.append(x.val_lower_bound if isinstance(x, PadicScalar) else x.gauss_valuation())
        return min(vals)

    def column_valuations(self) -> list:
        return [self.column_valuation(j) for j in range(self.size)]

    def norm_valuation(self):
        """Valuation exponent of the operator norm (INFTY for the zero window)."""
        window = min(self.column_valuations()) if self.size else INFTY
        return min(window, self.decay.tail_exponent(self.size, self.size))

    def sorted_column_exponents(self, count: int) -> list:
        """The ``count`` smallest column-valuation exponents, tail included.

        These are the valuations of the decreasingly sorted column norms
        r_1 >= r_2 >= ..., so the n-th partial sum bounds v(c_n) from below.
        """
        exps = list(self.column_valuations())
        j = self.size
        while len([e for e in exps if e != INFTY]) < count and j < self.size + 4 * count:
            e = self.decay.bound_exponent(j, self.size)
            if e == INFTY:
                break
            exps.append(e)
            j += 1
        exps.sort()
        while len(exps) < count:
            exps.append(INFTY)
        return exps[:count]

    def tail_valuation(self):
        """Valuation exponent of tail(M)."""
        return self.decay.tail_exponent(self.size, self.size)

    def content_key(self) -> str:
        """A stable fingerprint of the window entries (series provenance)."""
        return repr(self.entries)

    # -- spec operations -------------------------------------------------------


def operator_norm(phi: CompactOperatorMatrix) -> Fraction:
    """sup of entry norms, combined with the tail bound; exact rational."""
    v = phi.norm_valuation()
    if v == INFTY:
        return Fraction(0)
    p = phi.ring.p
    if v == int(v):
        v = int(v)
        return Fraction(1, p**v) if v >= 0 else Fraction(p**-v)
    raise DomainViolation("operator norm has a fractional exponent; use norm_valuation()")


def compose(phi: CompactOperatorMatrix, psi: CompactOperatorMatrix) -> CompactOperatorMatrix:
    """Matrix product with a product-compatible decay certificate."""
    if phi.size != psi.size:
        raise SizeMismatch(f"sizes {phi.size} and {psi.size} differ")
    if phi.ring.p != psi.ring.p:
        raise SizeMismatch("operators live over different primes")
    entries = mat_mul(phi.entries, psi.entries)
    shift = phi.norm_valuation()
    decay = psi.decay.shift(0 if shift == INFTY else shift)
    return CompactOperatorMatrix(phi.ring, entries, decay, phi.basis_label)


def verify_compactness(phi: CompactOperatorMatrix) -> CompactnessReport:
    """Check window columns against the profile; the tail is formal by kind."""
    violations = []
    for j in range(phi.size):
        claimed = phi.decay.bound_exponent(j, phi.size)
        found = phi.column_valuation(j)
        if found < claimed:
            violations.append((j, found, claimed))
    return CompactnessReport(not violations, violations, phi.decay.tends_to_zero())


def truncate_finite_rank(phi: CompactOperatorMatrix, m: int):
    """Zero the columns >= m; returns the truncation and its error valuation."""
    if not 0 <= m <= phi.size:
        raise DomainViolation(f"truncation index {m} outside 0..{phi.size}")
    ring = phi.ring
    entries = [
        [phi.entries[i][j] if j < m else ring.zero() for j in range(phi.size)]
        for i in range(phi.size)
    ]
    dropped = [phi.column_valuation(j) for j in range(m, phi.size)]
    dropped.append(phi.tail_valuation())
    error_val = min(dropped)
    return CompactOperatorMatrix(ring, entries, phi.decay, phi.basis_label), error_val


def base_change_operator(phi: CompactOperatorMatrix, h: RingHom) -> CompactOperatorMatrix:
    """Entrywise image under a contractive homomorphism; decay is preserved."""
    entries = mat_map(phi.entries, h.apply)
    return CompactOperatorMatrix(h.target, entries, phi.decay, phi.basis_label)
