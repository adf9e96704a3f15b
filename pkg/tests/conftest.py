"""Shared fixtures and matrix-building helpers for the test suite."""

from __future__ import annotations

import random

from spectra.operators import CompactOperatorMatrix, DecayProfile
from spectra.rings import PadicField


def field(p: int = 2, r: int = 20) -> PadicField:
    return PadicField(p, r)


def diag_operator(K: PadicField, values, profile: DecayProfile | None = None):
    n = len(values)
    entries = [[values[j] if i == j else 0 for j in range(n)] for i in range(n)]
    return CompactOperatorMatrix(K, entries, profile or DecayProfile.finite())


def int_matrix_operator(K: PadicField, rows, profile: DecayProfile | None = None):
    return CompactOperatorMatrix(K, rows, profile or DecayProfile.finite())


def random_int_matrix(rng: random.Random, n: int, lo: int = -30, hi: int = 30):
    return [[rng.randrange(lo, hi) for _ in range(n)] for _ in range(n)]


def random_unimodular(rng: random.Random, n: int, p: int):
    """A random integral matrix with unit determinant mod p (so exact inverse)."""
    while True:
        rows = [[rng.randrange(-8, 9) for _ in range(n)] for _ in range(n)]
        det = _int_det(rows)
        if det % p != 0 and det != 0:
            return rows


def _int_det(rows) -> int:
    n = len(rows)
    if n == 1:
        return rows[0][0]
    total = 0
    for j in range(n):
        minor = [r[:j] + r[j + 1 :] for r in rows[1:]]
        total += (-1) ** j * rows[0][j] * _int_det(minor)
    return total
