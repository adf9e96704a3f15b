"""Generic dense matrix helpers over the coefficient rings.

Matrices are lists of row lists; the entry at ``[i][j]`` is the i-th
coordinate of the image of the j-th basis vector, so composition of
operators is the ordinary row-by-column product.  Elimination pivots on the
entry of minimal valuation (maximal norm), ties broken by lowest row then
column index, which keeps p-adic precision loss minimal and deterministic.
"""

from __future__ import annotations

from .errors import RankUncertain, SizeMismatch

INFTY = float("inf")


def identity(ring, n: int) -> list:
    one, zero = ring.one(), ring.zero()
    return [[one if i == j else zero for j in range(n)] for i in range(n)]


def zero_matrix(ring, m: int, n: int) -> list:
    return [[ring.zero() for _ in range(n)] for _ in range(m)]


def mat_add(a: list, b: list) -> list:
    return [[x + y for x, y in zip(ra, rb)] for ra, rb in zip(a, b)]


def mat_sub(a: list, b: list) -> list:
    return [[x - y for x, y in zip(ra, rb)] for ra, rb in zip(a, b)]


def mat_neg(a: list) -> list:
    return [[-x for x in row] for row in a]


def mat_scale(a: list, s) -> list:
    return [[x * s for x in row] for row in a]


def mat_mul(a: list, b: list) -> list:
    if not a or not b or len(a[0]) != len(b):
        raise SizeMismatch(f"cannot multiply {_shape(a)} by {_shape(b)}")
    n, k, m = len(a), len(b), len(b[0])
    out = []
    for i in range(n):
        row = []
        for j in range(m):
            acc = a[i][0] * b[0][j]
            for t in range(1, k):
                acc = acc + a[i][t] * b[t][j]
            row.append(acc)
        out.append(row)
    return out


def mat_pow(ring, a: list, e: int) -> list:
    out = identity(ring, len(a))
    for _ in range(e):
        out = mat_mul(out, a)
    return out


def mat_map(a: list, fn) -> list:
    return [[fn(x) for x in row] for row in a]


def columns(a: list) -> list:
    return [list(col) for col in zip(*a)]


def from_columns(cols: list) -> list:
    return [list(row) for row in zip(*cols)]


def mat_is_negligible(a: list, threshold) -> bool:
    return all(x.is_negligible(threshold) for row in a for x in row)


def val_floor(x):
    """Certified valuation lower bound of a ring element."""
    if hasattr(x, "val_lower_bound"):
        return x.val_lower_bound
    return x.gauss_valuation()


def mat_val_floor(a: list):
    """Minimum certified valuation lower bound over all entries."""
    best = INFTY
    for row in a:
        for x in row:
            best = min(best, val_floor(x))
    return best


def _shape(a: list) -> tuple:
    return (len(a), len(a[0]) if a else 0)


def _pivot_candidate(x):
    """(sortable valuation, eligible-as-pivot) for an entry."""
    if hasattr(x, "val_lower_bound"):  # scalar
        return x.val_lower_bound, x.is_invertible
    return x.gauss_valuation(), (not x.is_zero) and x.is_invertible


class Elimination:
    """Reduced row-echelon data computed with minimal-valuation pivoting.

    ``pivot_limit`` restricts pivot columns to indices below it, so an
    augmented block ``[A | B]`` can be reduced along A only.
    """

    def __init__(self, ring, mat: list, pivot_limit: int | None = None) -> None:
        self.ring = ring
        self.rows = [list(r) for r in mat]
        self.m = len(mat)
        self.n = len(mat[0]) if mat else 0
        self.limit = self.n if pivot_limit is None else pivot_limit
        self.pivots: list[tuple[int, int]] = []  # (row, col)
        self.pivot_valuations: list = []  # valuation of each pivot at selection time
        self.noise_floor = INFTY  # best certificate among discarded entries
        self._reduce()

    def _reduce(self) -> None:
        from .rings import PadicScalar

        active_rows = list(range(self.m))
        active_cols = list(range(self.limit))
        infty = INFTY
        while True:
            best = None
            for i in active_rows:
                row = self.rows[i]
                for j in active_cols:
                    x = row[j]
                    if type(x) is PadicScalar:
                        v = x.v
                        if v == infty:
                            continue
                    else:
                        if x.is_zero or not x.is_invertible:
                            continue
                        v = x.gauss_valuation()
                    if best is None or v < best[0]:
                        best = (v, i, j)
            if best is None:
                for i in active_rows:
                    row = self.rows[i]
                    for j in active_cols:
                        self.noise_floor = min(self.noise_floor, val_floor(row[j]))
                return
            pval, pi, pj = best
            self.pivot_valuations.append(pval)
            inv = self.rows[pi][pj].invert()
            self.rows[pi] = [x * inv for x in self.rows[pi]]
            for i in range(self.m):
                if i == pi:
                    continue
                c = self.rows[i][pj]
                if c.is_exact_zero:
                    continue
                self.rows[i] = [x - c * y for x, y in zip(self.rows[i], self.rows[pi])]
            active_rows.remove(pi)
            active_cols.remove(pj)
            self.pivots.append((pi, pj))

    @property
    def rank(self) -> int:
        return len(self.pivots)

    def kernel_columns(self) -> list:
        """Columns spanning the null space of the (unaugmented) input matrix."""
        ring = self.ring
        pivot_by_col = {j: i for i, j in self.pivots}
        free_cols = [j for j in range(self.n) if j not in pivot_by_col]
        basis = []
        for f in free_cols:
            vec = [ring.zero() for _ in range(self.n)]
            vec[f] = ring.one()
            for j, i in pivot_by_col.items():
                vec[j] = -self.rows[i][f]
            basis.append(vec)
        return basis


def kernel(ring, mat: list) -> tuple[list, Elimination]:
    """Null-space basis columns of a matrix, with the elimination record."""
    elim = Elimination(ring, mat)
    return elim.kernel_columns(), elim


def solve_in_span(ring, basis_cols: list, target_cols: list, allow_deficient: bool = False):
    """Express target columns in the span of basis columns.

    Returns ``(coeffs, residual_floor)`` where ``coeffs[k][t]`` multiplies
    basis column k in the expansion of target column t and ``residual_floor``
    is the certified valuation of the worst residual entry (INFTY when the
    targets lie in the span on the nose).  Raises RankUncertain when the
    basis columns are dependent at working precision, unless
    ``allow_deficient`` is set, in which case a particular solution is
    returned with the coefficients of non-pivot columns zeroed.
    """
    k = len(basis_cols)
    nt = len(target_cols)
    if k == 0:
        floor = INFTY
        for col in target_cols:
            for x in col:
                floor = min(floor, val_floor(x))
        return [], floor
    m = len(basis_cols[0])
    aug = [[basis_cols[c][i] for c in range(k)] + [t[i] for t in target_cols] for i in range(m)]
    elim = Elimination(ring, aug, pivot_limit=k)
    if elim.rank != k and not allow_deficient:
        raise RankUncertain(f"basis columns have rank {elim.rank} < {k} at working precision")
    pivot_by_col = {j: i for i, j in elim.pivots}
    zero = ring.zero()
    coeffs = [
        [
            elim.rows[pivot_by_col[c]][k + t] if c in pivot_by_col else zero
            for t in range(nt)
        ]
        for c in range(k)
    ]
    residual_floor = INFTY
    pivot_rows = set(pivot_by_col.values())
    for i in range(m):
        if i in pivot_rows:
            continue
        for t in range(nt):
            residual_floor = min(residual_floor, val_floor(elim.rows[i][k + t]))
    return coeffs, residual_floor


def mat_inverse(ring, a: list) -> list:
    """Inverse of a square matrix invertible at working precision."""
    n = len(a)
    coeffs, _ = solve_in_span(ring, columns(a), columns(identity(ring, n)))
    return [[coeffs[i][j] for j in range(n)] for i in range(n)]


def restrict_operator(ring, op: list, basis_cols: list):
    """Matrix of an operator on the span of basis columns.

    Solves ``op @ basis = basis @ C`` for C and returns ``(C, residual_floor)``
    so the caller can check that the span really is preserved.
    """
    image_cols = columns(mat_mul(op, from_columns(basis_cols)))
    coeffs, floor = solve_in_span(ring, basis_cols, image_cols)
    k = len(basis_cols)
    return [[coeffs[i][j] for j in range(k)] for i in range(k)], floor
