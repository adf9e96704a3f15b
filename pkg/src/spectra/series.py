"""List-based polynomial and truncated power-series arithmetic.

Polynomials and X-truncated series over a coefficient ring (PadicField or
AffinoidRing) are plain lists, lowest degree first.  A list of length n+1
tracks degrees 0..n; absent entries are exact zeroes.  These helpers are ring
agnostic: they only use ``+``, ``-``, ``*`` and (where stated) ``invert`` on
the elements.
"""

from __future__ import annotations

from math import comb

from .errors import ZeroAtPrecision


def poly_trim(c: list) -> list:
    """Drop trailing coefficients that are exact zeroes."""
    n = len(c)
    while n > 0 and c[n - 1].is_exact_zero:
        n -= 1
    return c[:n]


def poly_degree(c: list) -> int:
    """Largest index with a coefficient not certified zero; -1 if none."""
    for n in range(len(c) - 1, -1, -1):
        if not c[n].is_zero:
            return n
    return -1


def poly_add(ring, a: list, b: list) -> list:
    n = max(len(a), len(b))
    out = []
    for k in range(n):
        x = a[k] if k < len(a) else ring.zero()
        y = b[k] if k < len(b) else ring.zero()
        out.append(x + y)
    return out


def poly_neg(a: list) -> list:
    return [-x for x in a]


def poly_sub(ring, a: list, b: list) -> list:
    return poly_add(ring, a, poly_neg(b))


def poly_scale(a: list, s) -> list:
    return [x * s for x in a]


def poly_mul(ring, a: list, b: list) -> list:
    """Full product (no truncation)."""
    if not a or not b:
        return []
    out = [ring.zero() for _ in range(len(a) + len(b) - 1)]
    for i, x in enumerate(a):
        if x.is_exact_zero:
            continue
        for j, y in enumerate(b):
            out[i + j] = out[i + j] + x * y
    return out


def series_mul(ring, a: list, b: list, cap: int) -> list:
    """Product truncated to degrees <= cap."""
    out = [ring.zero() for _ in range(cap + 1)]
    for i, x in enumerate(a):
        if i > cap or (x.is_exact_zero):
            continue
        for j, y in enumerate(b):
            if i + j > cap:
                break
            out[i + j] = out[i + j] + x * y
    return out


def series_inv(ring, a: list, cap: int) -> list:
    """Inverse of a series with invertible constant term, mod X^(cap+1)."""
    if not a or not a[0].is_invertible:
        raise ZeroAtPrecision("series constant term is not invertible")
    c0inv = a[0].invert()
    out = [c0inv]
    for n in range(1, cap + 1):
        acc = ring.zero()
        for k in range(1, min(n, len(a) - 1) + 1):
            acc = acc + a[k] * out[n - k]
        out.append(-(c0inv * acc))
    return out


def series_div(ring, num: list, den: list, cap: int) -> list:
    """num/den mod X^(cap+1); den must have invertible constant term.

    When den[0] == 1 this is a division-free recurrence.
    """
    if not den or not den[0].is_invertible:
        raise ZeroAtPrecision("series constant term is not invertible")
    c0inv = den[0].invert()
    out = []
    for n in range(cap + 1):
        acc = num[n] if n < len(num) else ring.zero()
        for k in range(1, min(n, len(den) - 1) + 1):
            acc = acc - den[k] * out[n - k]
        out.append(acc * c0inv)
    return out


def poly_divmod(ring, a: list, b: list) -> tuple[list, list]:
    """Euclidean division by a polynomial with invertible leading coefficient.

    Certified-zero coefficients of the dividend propagate their certificates
    into quotient and remainder rather than being silently treated as exact.
    """
    db = poly_degree(b)
    if db < 0:
        raise ZeroAtPrecision("division by a certified-zero polynomial")
    lead_inv = b[db].invert()
    rem = list(a)
    if len(rem) - 1 < db:
        return [], rem
    quo = [ring.zero() for _ in range(len(rem) - db)]
    for k in range(len(rem) - 1, db - 1, -1):
        c = rem[k] * lead_inv
        if c.is_exact_zero:
            continue
        quo[k - db] = quo[k - db] + c
        for j in range(db + 1):
            rem[k - db + j] = rem[k - db + j] - c * b[j]
    return quo, rem[:db] if db > 0 else []


def poly_eval(ring, a: list, x):
    """Horner evaluation at a ring element."""
    acc = ring.zero()
    for c in reversed(a):
        acc = acc * x + c
    return acc


def poly_reverse(ring, a: list, degree: int | None = None) -> list:
    """Coefficient reversal X^d * a(1/X) at the stated degree."""
    d = poly_degree(a) if degree is None else degree
    out = [ring.zero() for _ in range(d + 1)]
    for k, c in enumerate(a[: d + 1]):
        out[d - k] = c
    return out


def delta_transform(ring, a: list, s: int) -> list:
    """The transform sum_n binom(n+s, s) a_{n+s} X^n; identity for s = 0."""
    if s == 0:
        return list(a)
    out = []
    for n in range(len(a) - s):
        out.append(a[n + s] * ring.coerce(comb(n + s, s)))
    return out


