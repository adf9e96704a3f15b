"""Coefficient rings: precision-tracked p-adic scalars and affinoid polynomial elements.

Two concrete rings are implemented.

* ``PadicField(p, r)`` -- the field Q_p with floating-point style elements
  ``p^v * u`` where the unit part ``u`` is tracked modulo ``p^r`` (``r``
  significant digits).  Additions record cancellation by shrinking the number
  of reliable digits; an element all of whose tracked digits vanish becomes a
  *zero at precision* carrying the absolute exponent of its certificate.
* ``AffinoidRing(p, r, degree_bound, variables)`` -- polynomials in one or
  more weight variables with ``PadicScalar`` coefficients and a total-degree
  cap, modelling a closed chart of weight space with the Gauss norm.
  Ring operations are exact; exceeding the cap is an error unless the ring
  enables auto-truncation.

Ring homomorphisms (identity, specialization at an integral point,
coefficientwise maps) live here as well, since both scalar and polynomial
elements must travel through them.  All values are immutable.
"""

from __future__ import annotations

import math
from fractions import Fraction

from .errors import DegreeOverflow, DomainViolation, ZeroAtPrecision

INFTY = float("inf")

Valuation = "int | float"  # int, or INFTY for zero-at-precision


def _pval(n: int, p: int) -> int:
    """p-adic valuation of a nonzero integer."""
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


class PadicScalar:
    """An element of Q_p known to ``r`` significant p-adic digits.

    A finite value is ``p**v * u`` with ``u`` in ``[1, p**r)`` coprime to
    ``p``; it stands for any element congruent to it modulo ``p**(v+r)``.
    A zero at precision has ``v = INFTY``, ``u = 0``, and ``r`` holds the
    *absolute* certificate exponent: the element is congruent to 0 modulo
    ``p**r`` (``r = INFTY`` for an exact zero).  Instances are immutable.
    """

    __slots__ = ("p", "v", "u", "r")

    def __init__(self, p: int, v, u: int, r) -> None:
        if p < 2:
            raise ValueError(f"prime must be >= 2, got {p}")
        if v == INFTY:
            if u != 0:
                raise ValueError("zero at precision must have unit part 0")
            if r != INFTY:
                r = math.floor(r)  # certificates may arrive as exact rationals
            object.__setattr__(self, "v", INFTY)
        else:
            if r != INFTY:
                r = math.floor(r)
            if not isinstance(r, int) or r < 1:
                raise ValueError(f"relative precision must be a positive integer, got {r}")
            u %= p**r
            if u % p == 0:
                raise ValueError(f"unit part {u} is not coprime to {p}")
            object.__setattr__(self, "v", int(v))
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "r", r)

    def __setattr__(self, name, value):  # pragma: no cover - guard
        raise AttributeError("PadicScalar is immutable")

    # -- constructors ------------------------------------------------------

    @classmethod
    def from_int(cls, n: int, p: int, r: int) -> "PadicScalar":
        if n == 0:
            return cls.zero(p)
        v = _pval(n, p)
        return cls(p, v, n // p**v, r)

    @classmethod
    def from_fraction(cls, q: Fraction, p: int, r: int) -> "PadicScalar":
        q = Fraction(q)
        if q == 0:
            return cls.zero(p)
        vn = _pval(q.numerator, p)
        vd = _pval(q.denominator, p)
        un = q.numerator // p**vn
        ud = q.denominator // p**vd
        u = un * pow(ud, -1, p**r)
        return cls(p, vn - vd, u, r)

    @classmethod
    def zero(cls, p: int, cert=INFTY) -> "PadicScalar":
        """Zero at precision: congruent to 0 modulo ``p**cert``."""
        return cls(p, INFTY, 0, cert)

    @classmethod
    def one(cls, p: int, r: int) -> "PadicScalar":
        return cls(p, 0, 1, r)

    # -- predicates and measurements ---------------------------------------

    @property
    def is_zero(self) -> bool:
        return self.v == INFTY

    @property
    def is_exact_zero(self) -> bool:
        return self.v == INFTY and self.r == INFTY

    @property
    def is_invertible(self) -> bool:
        """Invertible in the field, i.e. distinguishable from zero."""
        return self.v != INFTY

    @property
    def is_integral_unit(self) -> bool:
        """Norm exactly 1 (valuation zero)."""
        return self.v == 0

    @property
    def valuation(self):
        return self.v

    @property
    def abs_prec(self):
        """Exponent e such that the element is known modulo ``p**e``."""
        if self.is_zero:
            return self.r
        return self.v + self.r

    @property
    def val_lower_bound(self):
        """Certified lower bound on the valuation (the certificate for zeroes)."""
        return self.r if self.is_zero else self.v

    def is_negligible(self, threshold) -> bool:
        """Certified to have norm <= p**(-threshold)."""
        return self.val_lower_bound >= threshold

    def norm(self) -> Fraction:
        """The standard norm ``p**(-v)`` as an exact rational; 0 for zero."""
        if self.is_zero:
            return Fraction(0)
        if self.v >= 0:
            return Fraction(1, self.p**self.v)
        return Fraction(self.p ** (-self.v))

    def lift(self) -> Fraction:
        """The canonical representative ``p**v * u`` as an exact rational."""
        if self.is_zero:
            return Fraction(0)
        if self.v >= 0:
            return Fraction(self.p**self.v * self.u)
        return Fraction(self.u, self.p ** (-self.v))

    def residue(self, e: int) -> int:
        """Integer representative modulo ``p**e``; requires v >= 0 and abs_prec >= e."""
        if self.abs_prec < e:
            raise ZeroAtPrecision(f"element only known mod {self.p}^{self.abs_prec} < {self.p}^{e}")
        if self.is_zero:
            return 0
        if self.v < 0:
            raise DomainViolation("residue of an element with negative valuation")
        return (self.p**self.v * self.u) % self.p**e

    # -- arithmetic ---------------------------------------------------------

    def _check(self, other: "PadicScalar") -> None:
        if self.p != other.p:
            raise DomainViolation(f"mixed primes {self.p} and {other.p}")

    def __add__(self, other: "PadicScalar") -> "PadicScalar":
        self._check(other)
        p = self.p
        m = min(self.abs_prec, other.abs_prec)
        if self.is_zero and other.is_zero:
            return PadicScalar.zero(p, m)
        if self.is_zero or other.is_zero:
            x = other if self.is_zero else self
            if x.v >= m:
                return PadicScalar.zero(p, m)
            return PadicScalar(p, x.v, x.u, min(x.r, m - x.v))
        w = min(self.v, other.v)
        if m == INFTY:  # unreachable for finite values; kept for safety
            m = w + max(self.r, other.r)
        s = (self.u * p ** (self.v - w) + other.u * p ** (other.v - w)) % p ** (m - w)
        if s == 0:
            return PadicScalar.zero(p, m)
        k = _pval(s, p)
        return PadicScalar(p, w + k, s // p**k, m - w - k)

    def __neg__(self) -> "PadicScalar":
        if self.is_zero:
            return self
        return PadicScalar(self.p, self.v, self.p**self.r - self.u, self.r)

    def __sub__(self, other: "PadicScalar") -> "PadicScalar":
        return self + (-other)

    def __mul__(self, other: "PadicScalar") -> "PadicScalar":
        self._check(other)
        p = self.p
        if self.is_zero or other.is_zero:
            # |xy| <= p^-(cert_x + v_y) etc.; INFTY certificates propagate.
            ca = self.r if self.is_zero else self.v
            cb = other.r if other.is_zero else other.v
            return PadicScalar.zero(p, ca + cb)
        r = min(self.r, other.r)
        return PadicScalar(p, self.v + other.v, (self.u * other.u) % p**r, r)

    def invert(self) -> "PadicScalar":
        """Multiplicative inverse to the same relative precision."""
        if self.is_zero:
            raise ZeroAtPrecision("cannot invert a zero at precision")
        return PadicScalar(self.p, -self.v, pow(self.u, -1, self.p**self.r), self.r)

    def __pow__(self, n: int) -> "PadicScalar":
        if n < 0:
            return self.invert() ** (-n)
        out = PadicScalar.one(self.p, self.r if not self.is_zero else 64)
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def truncate_abs(self, e) -> "PadicScalar":
        """Forget digits beyond absolute exponent ``e`` (certificate weakening)."""
        if e != INFTY:
            e = math.floor(e)
        if e >= self.abs_prec:
            return self
        if self.is_zero or self.v >= e:
            return PadicScalar.zero(self.p, e)
        return PadicScalar(self.p, self.v, self.u, e - self.v)

    # -- comparison and display ----------------------------------------------

    def __eq__(self, other) -> bool:
        if isinstance(other, int):
            other = PadicScalar.from_int(other, self.p, self.r if not self.is_zero else 64)
        if not isinstance(other, PadicScalar):
            return NotImplemented
        return (self - other).is_zero

    __hash__ = None

    def __repr__(self) -> str:
        if self.is_zero:
            return f"O({self.p}^{self.r})"
        return f"{self.p}^{self.v}*{self.u} (mod {self.p}^{self.r})"


def parse_scalar(text: str, p: int, r: int) -> PadicScalar:
    """Parse a p-adic literal: a decimal integer, ``a/b``, or ``p^v*u``."""
    text = text.strip()
    if "^" in text:
        base, _, rest = text.partition("^")
        if int(base) != p:
            raise DomainViolation(f"literal base {base} differs from datum prime {p}")
        vpart, _, upart = rest.partition("*")
        v = int(vpart)
        u = int(upart) if upart else 1
        return PadicScalar.from_fraction(Fraction(u) * Fraction(p) ** v, p, r)
    if "/" in text:
        return PadicScalar.from_fraction(Fraction(text), p, r)
    return PadicScalar.from_int(int(text), p, r)


class PadicField:
    """Ring handle for Q_p at working relative precision ``r``."""

    kind = "field"

    def __init__(self, p: int, r: int) -> None:
        self.p = p
        self.r = r

    def zero(self) -> PadicScalar:
        return PadicScalar.zero(self.p)

    def one(self) -> PadicScalar:
        return PadicScalar.one(self.p, self.r)

    def from_int(self, n: int) -> PadicScalar:
        return PadicScalar.from_int(n, self.p, self.r)

    def from_fraction(self, q: Fraction) -> PadicScalar:
        return PadicScalar.from_fraction(q, self.p, self.r)

    def coerce(self, x):
        if isinstance(x, PadicScalar):
            if x.p != self.p:
                raise DomainViolation(f"mixed primes {x.p} and {self.p}")
            return x
        if isinstance(x, int):
            return self.from_int(x)
        if isinstance(x, Fraction):
            return self.from_fraction(x)
        raise DomainViolation(f"cannot coerce {type(x).__name__} into Q_{self.p}")

    def __eq__(self, other) -> bool:
        return isinstance(other, PadicField) and (self.p, self.r) == (other.p, other.r)

    def __repr__(self) -> str:
        return f"PadicField(p={self.p}, r={self.r})"


class AffinoidElement:
    """A polynomial in the chart variables with ``PadicScalar`` coefficients.

    Stored sparsely as ``{exponent tuple: coefficient}``.  Coefficients that
    are zeroes at *finite* precision are kept (their certificates matter);
    exact zeroes are dropped.
    """

    __slots__ = ("ring", "coeffs")

    def __init__(self, ring: "AffinoidRing", coeffs: dict) -> None:
        clean = {}
        for exp, c in coeffs.items():
            exp = tuple(int(e) for e in exp)
            if len(exp) != len(ring.variables):
                raise DomainViolation(f"exponent {exp} does not match variables {ring.variables}")
            if c.is_exact_zero:
                continue
            clean[exp] = c
        object.__setattr__(self, "ring", ring)
        object.__setattr__(self, "coeffs", clean)

    def __setattr__(self, name, value):  # pragma: no cover - guard
        raise AttributeError("AffinoidElement is immutable")

    # -- measurements --------------------------------------------------------

    @property
    def degree(self):
        """Largest total degree carrying a tracked coefficient; -INFTY if none."""
        if not self.coeffs:
            return -INFTY
        return max(sum(e) for e in self.coeffs)

    @property
    def is_zero(self) -> bool:
        return all(c.is_zero for c in self.coeffs.values())

    @property
    def is_exact_zero(self) -> bool:
        return not self.coeffs

    @property
    def is_invertible(self) -> bool:
        """Unit of the chart algebra: |f| is attained by the constant term alone."""
        c0 = self.constant_term()
        if not c0.is_invertible:
            return False
        v0 = c0.v
        for exp, c in self.coeffs.items():
            if sum(exp) == 0:
                continue
            bound = c.v if not c.is_zero else c.r
            if bound <= v0:
                return False
        return True

    def constant_term(self) -> PadicScalar:
        zero_exp = (0,) * len(self.ring.variables)
        return self.coeffs.get(zero_exp, self.ring.field.zero())

    def gauss_valuation(self):
        """Minimum coefficient valuation; INFTY when every coefficient is zero.

        Zero-at-precision coefficients contribute their certificate exponent,
        so the result is a certified lower bound and is exact whenever some
        coefficient with a finite valuation attains the minimum.
        """
        best = INFTY
        for c in self.coeffs.values():
            bound = c.v if not c.is_zero else c.r
            best = min(best, bound)
        return best

    def gauss_norm(self) -> Fraction:
        v = self.gauss_valuation()
        if v == INFTY:
            return Fraction(0)
        p = self.ring.p
        return Fraction(1, p**v) if v >= 0 else Fraction(p**-v)

    def abs_prec(self):
        """Weakest coefficient certificate (absolute exponent)."""
        if not self.coeffs:
            return INFTY
        return min(c.abs_prec for c in self.coeffs.values())

    def is_negligible(self, threshold) -> bool:
        """Certified to have Gauss norm <= p**(-threshold)."""
        return self.gauss_valuation() >= threshold

    # -- arithmetic -----------------------------------------------------------

    def _check(self, other: "AffinoidElement") -> "AffinoidRing":
        ra, rb = self.ring, other.ring
        if ra.p != rb.p or ra.variables != rb.variables:
            raise DomainViolation(f"incompatible affinoid rings {ra} and {rb}")
        return ra if ra.degree_bound >= rb.degree_bound else rb

    def __add__(self, other: "AffinoidElement") -> "AffinoidElement":
        ring = self._check(other)
        out = dict(self.coeffs)
        for exp, c in other.coeffs.items():
            out[exp] = out[exp] + c if exp in out else c
        return AffinoidElement(ring, out)

    def __neg__(self) -> "AffinoidElement":
        return AffinoidElement(self.ring, {e: -c for e, c in self.coeffs.items()})

    def __sub__(self, other: "AffinoidElement") -> "AffinoidElement":
        return self + (-other)

    def __mul__(self, other: "AffinoidElement") -> "AffinoidElement":
        ring = self._check(other)
        out: dict = {}
        for ea, ca in self.coeffs.items():
            if ca.is_exact_zero:
                continue
            for eb, cb in other.coeffs.items():
                exp = tuple(x + y for x, y in zip(ea, eb))
                term = ca * cb
                out[exp] = out[exp] + term if exp in out else term
        result = AffinoidElement(ring, out)
        deg = result.effective_degree()
        if deg > ring.degree_bound:
            if not ring.auto_truncate:
                raise DegreeOverflow(
                    f"product degree {deg} exceeds chart bound {ring.degree_bound}"
                )
            result = result.truncate_degree(ring.degree_bound)
        return result

    def __pow__(self, n: int) -> "AffinoidElement":
        if n < 0:
            raise DomainViolation("negative powers: use invert()")
        out = self.ring.one()
        for _ in range(n):
            out = out * self
        return out

    def effective_degree(self):
        """Largest total degree whose coefficient is not certified zero."""
        deg = -INFTY
        for exp, c in self.coeffs.items():
            if not c.is_zero:
                deg = max(deg, sum(exp))
        return deg

    def truncate_degree(self, cap: int) -> "AffinoidElement":
        kept = {e: c for e, c in self.coeffs.items() if sum(e) <= cap}
        return AffinoidElement(self.ring, kept)

    def invert(self) -> "AffinoidElement":
        """Inverse of a chart unit, exact modulo ``p**r``.

        Writes ``f = c0 (1 + g)`` with ``|g| < 1`` and sums the geometric
        series until the tail is certified zero.  The result must fit inside
        the chart degree bound.
        """
        if not self.is_invertible:
            raise ZeroAtPrecision("affinoid element is not a unit of the chart")
        ring = self.ring
        r = ring.field.r
        c0 = self.constant_term()
        c0inv = c0.invert()
        g = (self - ring.from_scalar(c0)).scale(c0inv)
        gv = g.gauss_valuation()
        if gv == INFTY:
            return ring.from_scalar(c0inv)
        # Geometric series sum_k (-g)^k.  Terms with k >= K are O(p^r); the
        # degree-(< K) coefficients of the partial sum are already exact since
        # g has no constant term.
        K = -(-r // int(gv))
        wide = ring.widen(max(ring.degree_bound, int(g.degree) * K))
        acc = wide.one()
        term = wide.one()
        gw = g.in_ring(wide)
        for _ in range(K - 1):
            term = -(term * gw)
            acc = acc + term
        out = AffinoidElement(
            wide,
            {
                e: (c if sum(e) < K else c.truncate_abs(r))
                for e, c in acc.scale(c0inv).coeffs.items()
            },
        )
        deg = out.effective_degree()
        if deg > ring.degree_bound:
            raise DegreeOverflow(
                f"inverse has degree {deg}, beyond chart bound {ring.degree_bound}"
            )
        return out.truncate_degree(ring.degree_bound).in_ring(ring)

    def scale(self, a: PadicScalar) -> "AffinoidElement":
        return AffinoidElement(self.ring, {e: c * a for e, c in self.coeffs.items()})

    def in_ring(self, ring: "AffinoidRing") -> "AffinoidElement":
        if ring is self.ring:
            return self
        deg = self.effective_degree()
        if deg > ring.degree_bound and not ring.auto_truncate:
            raise DegreeOverflow(f"element of degree {deg} does not fit bound {ring.degree_bound}")
        return AffinoidElement(ring, self.coeffs)

    def evaluate(self, point) -> PadicScalar:
        """Specialize at an integral point (tuple of scalars with v >= 0)."""
        point = self.ring.check_point(point)
        total = self.ring.field.zero()
        for exp, c in self.coeffs.items():
            term = c
            for w0, e in zip(point, exp):
                for _ in range(e):
                    term = term * w0
            total = total + term
        return total

    def truncate_abs(self, e) -> "AffinoidElement":
        return AffinoidElement(self.ring, {k: c.truncate_abs(e) for k, c in self.coeffs.items()})

    # -- comparison and display -----------------------------------------------

    def __eq__(self, other) -> bool:
        if isinstance(other, (int, PadicScalar)):
            other = self.ring.coerce(other)
        if not isinstance(other, AffinoidElement):
            return NotImplemented
        return (self - other).is_zero

    __hash__ = None

    def __repr__(self) -> str:
        if not self.coeffs:
            return "0"
        names = self.ring.variables
        parts = []
        for exp in sorted(self.coeffs, key=lambda e: (sum(e), e)):
            mono = "*".join(
                f"{n}^{e}" if e > 1 else n for n, e in zip(names, exp) if e > 0
            )
            c = self.coeffs[exp]
            parts.append(f"({c}){'*' + mono if mono else ''}")
        return " + ".join(parts)


class AffinoidRing:
    """Ring handle for the chart algebra Q_p<w_1,...,w_k> at degree bound D."""

    kind = "affinoid"

    def __init__(
        self,
        p: int,
        r: int,
        degree_bound: int,
        variables=("w",),
        auto_truncate: bool = False,
    ) -> None:
        if isinstance(variables, str):
            variables = (variables,)
        self.p = p
        self.r = r
        self.degree_bound = int(degree_bound)
        self.variables = tuple(variables)
        self.auto_truncate = bool(auto_truncate)
        self.field = PadicField(p, r)

    def zero(self) -> AffinoidElement:
        return AffinoidElement(self, {})

    def one(self) -> AffinoidElement:
        return self.from_scalar(self.field.one())

    def from_scalar(self, c: PadicScalar) -> AffinoidElement:
        return AffinoidElement(self, {(0,) * len(self.variables): c})

    def from_int(self, n: int) -> AffinoidElement:
        return self.from_scalar(self.field.from_int(n))

    def variable(self, name: str) -> AffinoidElement:
        i = self.variables.index(name)
        exp = tuple(1 if j == i else 0 for j in range(len(self.variables)))
        return AffinoidElement(self, {exp: self.field.one()})

    def monomial(self, exp, c: PadicScalar | None = None) -> AffinoidElement:
        return AffinoidElement(self, {tuple(exp): c if c is not None else self.field.one()})

    def coerce(self, x) -> AffinoidElement:
        if isinstance(x, AffinoidElement):
            return x.in_ring(self) if x.ring is not self else x
        if isinstance(x, (int, Fraction)):
            return self.from_scalar(self.field.coerce(x))
        if isinstance(x, PadicScalar):
            return self.from_scalar(self.field.coerce(x))
        raise DomainViolation(f"cannot coerce {type(x).__name__} into {self!r}")

    def widen(self, degree_bound: int) -> "AffinoidRing":
        """A compatible working ring with a larger cap for internal arithmetic."""
        if degree_bound <= self.degree_bound:
            return self
        return AffinoidRing(self.p, self.r, degree_bound, self.variables, self.auto_truncate)

    def check_point(self, point):
        if isinstance(point, PadicScalar):
            point = (point,)
        point = tuple(point)
        if len(point) != len(self.variables):
            raise DomainViolation(
                f"point has {len(point)} coordinates, chart has {len(self.variables)}"
            )
        for w0 in point:
            if w0.p != self.p:
                raise DomainViolation("specialization point over a different prime")
            if not w0.is_zero and w0.v < 0:
                raise DomainViolation(f"specialization point has negative valuation {w0.v}")
        return point

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, AffinoidRing)
            and (self.p, self.r, self.degree_bound, self.variables)
            == (other.p, other.r, other.degree_bound, other.variables)
        )

    def __repr__(self) -> str:
        vs = ",".join(self.variables)
        return f"AffinoidRing(Q_{self.p}<{vs}>, deg<={self.degree_bound}, r={self.r})"


class RingHom:
    """A homomorphism between coefficient rings.

    Kinds: ``identity``, ``specialize`` (evaluation of chart variables at an
    integral point; scalars pass through), and ``coefficientwise`` (a scalar
    map applied to every coefficient).  The coefficient prime is never
    changed, so the image of the pseudo-uniformizer p keeps valuation 1.
    """

    def __init__(self, kind: str, source, target, point=None, scalar_map=None) -> None:
        self.kind = kind
        self.source = source
        self.target = target
        self.point = point
        self.scalar_map = scalar_map
        if source.p != target.p:
            raise DomainViolation("a ring homomorphism must preserve the coefficient prime")
        if kind == "specialize":
            self.point = source.check_point(point)

    @classmethod
    def identity(cls, ring) -> "RingHom":
        return cls("identity", ring, ring)

    @classmethod
    def specialize(cls, ring: AffinoidRing, point) -> "RingHom":
        return cls("specialize", ring, ring.field, point=point)

    @classmethod
    def coefficientwise(cls, source, target, fn) -> "RingHom":
        return cls("coefficientwise", source, target, scalar_map=fn)

    def apply(self, x):
        if self.kind == "identity":
            return x
        if self.kind == "specialize":
            if isinstance(x, PadicScalar):
                return x
            return x.evaluate(self.point)
        if self.kind == "coefficientwise":
            if isinstance(x, PadicScalar):
                return self.scalar_map(x)
            return AffinoidElement(
                self.target, {e: self.scalar_map(c) for e, c in x.coeffs.items()}
            )
        raise DomainViolation(f"unknown homomorphism kind {self.kind!r}")

    def __repr__(self) -> str:
        if self.kind == "specialize":
            return f"RingHom(specialize at {self.point})"
        return f"RingHom({self.kind})"


def valuation(x):
    """Valuation of a scalar, or Gauss valuation of an affinoid element."""
    if isinstance(x, PadicScalar):
        return x.valuation
    return x.gauss_valuation()


def invert(x):
    """Multiplicative inverse; raises ZeroAtPrecision on certified-zero input."""
    return x.invert()


def gauss_norm(f: AffinoidElement) -> Fraction:
    return f.gauss_norm()


def apply_hom(h: RingHom, f):
    return h.apply(f)
