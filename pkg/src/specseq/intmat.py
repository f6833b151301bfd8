"""Exact linear algebra over the integers.

Everything downstream (module canonical forms, cohomology, page turning)
reduces to a handful of primitives on matrices of arbitrary-precision
Python ints: products, Smith normal form with tracked unimodular
transforms and their inverses, kernel bases, linear solves, and exact
determinants.

Shapes are explicit so that 0xN and Nx0 matrices round-trip cleanly; they
appear constantly as boundary maps in low dimensions and as maps in or
out of the zero module.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence


class IntMatrix:
    """An immutable-by-convention integer matrix.

    Rows are lists of ints. ``ncols`` must be given explicitly when there
    are no rows, since ``[]`` alone does not determine a width.
    """

    __slots__ = ("rows", "nrows", "ncols")

    def __init__(self, rows: Sequence[Sequence[int]], ncols: int | None = None):
        self.rows = [list(r) for r in rows]
        self.nrows = len(self.rows)
        if self.nrows:
            widths = {len(r) for r in self.rows}
            if len(widths) != 1:
                raise ValueError("ragged rows")
            inferred = widths.pop()
            if ncols is not None and ncols != inferred:
                raise ValueError("ncols disagrees with row width")
            self.ncols = inferred
        else:
            if ncols is None:
                raise ValueError("ncols required for a matrix with no rows")
            self.ncols = ncols

    @classmethod
    def zeros(cls, nrows: int, ncols: int) -> "IntMatrix":
        return cls([[0] * ncols for _ in range(nrows)], ncols)

    @classmethod
    def identity(cls, n: int) -> "IntMatrix":
        return cls([[1 if i == j else 0 for j in range(n)] for i in range(n)], n)

    @classmethod
    def from_columns(cls, columns: Sequence[Sequence[int]], nrows: int) -> "IntMatrix":
        rows = [[col[i] for col in columns] for i in range(nrows)]
        return cls(rows, len(columns))

    @classmethod
    def diagonal(cls, entries: Sequence[int], nrows: int | None = None, ncols: int | None = None) -> "IntMatrix":
        m = nrows if nrows is not None else len(entries)
        n = ncols if ncols is not None else len(entries)
        out = cls.zeros(m, n)
        for i, d in enumerate(entries):
            out.rows[i][i] = d
        return out

    def entry(self, i: int, j: int) -> int:
        return self.rows[i][j]

    def column(self, j: int) -> list[int]:
        return [r[j] for r in self.rows]

    def columns(self) -> list[list[int]]:
        return [self.column(j) for j in range(self.ncols)]

    def transpose(self) -> "IntMatrix":
        return IntMatrix([[self.rows[i][j] for i in range(self.nrows)] for j in range(self.ncols)], self.nrows)

    def copy(self) -> "IntMatrix":
        return IntMatrix([list(r) for r in self.rows], self.ncols)

    def __matmul__(self, other: "IntMatrix") -> "IntMatrix":
        if self.ncols != other.nrows:
            raise ValueError(f"shape mismatch in product: {self.shape} @ {other.shape}")
        ot = other.transpose()
        rows = [[sum(a * b for a, b in zip(row, col)) for col in ot.rows] for row in self.rows]
        return IntMatrix(rows, other.ncols)

    def apply(self, vector: Sequence[int]) -> list[int]:
        if len(vector) != self.ncols:
            raise ValueError("vector length mismatch")
        return [sum(a * x for a, x in zip(row, vector)) for row in self.rows]

    def hstack(self, other: "IntMatrix") -> "IntMatrix":
        if self.nrows != other.nrows:
            raise ValueError("row count mismatch in hstack")
        return IntMatrix([a + b for a, b in zip(self.rows, other.rows)], self.ncols + other.ncols)

    def take_rows(self, indices: Iterable[int]) -> "IntMatrix":
        return IntMatrix([list(self.rows[i]) for i in indices], self.ncols)

    def neg(self) -> "IntMatrix":
        return IntMatrix([[-x for x in r] for r in self.rows], self.ncols)

    def scaled(self, c: int) -> "IntMatrix":
        return IntMatrix([[c * x for x in r] for r in self.rows], self.ncols)

    def add(self, other: "IntMatrix") -> "IntMatrix":
        if self.shape != other.shape:
            raise ValueError("shape mismatch in sum")
        return IntMatrix([[a + b for a, b in zip(r, s)] for r, s in zip(self.rows, other.rows)], self.ncols)

    def is_zero(self) -> bool:
        return all(x == 0 for r in self.rows for x in r)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nrows, self.ncols)

    def to_lists(self) -> list[list[int]]:
        return [list(r) for r in self.rows]

    def __eq__(self, other) -> bool:
        if not isinstance(other, IntMatrix):
            return NotImplemented
        return self.shape == other.shape and self.rows == other.rows

    def __hash__(self) -> int:
        return hash((self.shape, tuple(tuple(r) for r in self.rows)))

    def __repr__(self) -> str:
        return f"IntMatrix({self.rows!r}, ncols={self.ncols})"


@dataclass(frozen=True)
class SmithDecomposition:
    """``diag == left @ matrix @ right`` with unimodular transforms.

    ``left_inv`` and ``right_inv`` are the exact inverses of ``left`` and
    ``right``; they are tracked during the reduction because recovering
    them afterwards would cost another full elimination.
    """

    left: IntMatrix
    diag: IntMatrix
    right: IntMatrix
    left_inv: IntMatrix
    right_inv: IntMatrix

    def diagonal(self) -> list[int]:
        k = min(self.diag.nrows, self.diag.ncols)
        return [self.diag.rows[i][i] for i in range(k)]

    def rank(self) -> int:
        return sum(1 for d in self.diagonal() if d != 0)

    def invariants(self) -> list[int]:
        """Nonzero diagonal entries d1 | d2 | ... (the invariant factors)."""
        return [d for d in self.diagonal() if d != 0]


def smith_normal_form(matrix: IntMatrix) -> SmithDecomposition:
    """Smith normal form with gcd-minimizing pivot selection.

    The pivot at each stage is the surviving entry of least absolute
    value; repeated remainder reduction against it keeps coefficient
    growth tame on the cochain matrices this engine feeds in. The result
    satisfies d1 | d2 | ... with every diagonal entry non-negative.
    """
    m, n = matrix.shape
    d = [list(r) for r in matrix.rows]
    left = IntMatrix.identity(m)
    left_inv = IntMatrix.identity(m)
    right = IntMatrix.identity(n)
    right_inv = IntMatrix.identity(n)

    # Row op "row_i += c * row_j" on D corresponds to the same op on U and
    # to the inverse column op "col_j -= c * col_i" on U^{-1}; columns are
    # symmetric with V on the other side.
    def row_add(i, j, c):
        for k in range(n):
            d[i][k] += c * d[j][k]
        for k in range(m):
            left.rows[i][k] += c * left.rows[j][k]
        for k in range(m):
            left_inv.rows[k][j] -= c * left_inv.rows[k][i]

    def col_add(j, i, c):
        for r in d:
            r[j] += c * r[i]
        for r in right.rows:
            r[j] += c * r[i]
        for k in range(n):
            right_inv.rows[i][k] -= c * right_inv.rows[j][k]

    def row_swap(i, j):
        d[i], d[j] = d[j], d[i]
        left.rows[i], left.rows[j] = left.rows[j], left.rows[i]
        for r in left_inv.rows:
            r[i], r[j] = r[j], r[i]

    def col_swap(i, j):
        for r in d:
            r[i], r[j] = r[j], r[i]
        for r in right.rows:
            r[i], r[j] = r[j], r[i]
        right_inv.rows[i], right_inv.rows[j] = right_inv.rows[j], right_inv.rows[i]

    def row_negate(i):
        d[i] = [-x for x in d[i]]
        left.rows[i] = [-x for x in left.rows[i]]
        for r in left_inv.rows:
            r[i] = -r[i]

    def smallest_pivot(t):
        best = None
        for i in range(t, m):
            for j in range(t, n):
                v = abs(d[i][j])
                if v and (best is None or v < best[0]):
                    best = (v, i, j)
                    if v == 1:
                        return best
        return best

    t = 0
    while True:
        found = smallest_pivot(t)
        if found is None:
            break
        _, pi, pj = found
        if pi != t:
            row_swap(t, pi)
        if pj != t:
            col_swap(t, pj)

        while True:
            # Clear the pivot column by remainder division; a nonzero
            # remainder becomes the new, strictly smaller pivot.
            restart = False
            for i in range(t + 1, m):
                if d[i][t] == 0:
                    continue
                q = d[i][t] // d[t][t]
                row_add(i, t, -q)
                if d[i][t] != 0:
                    row_swap(t, i)
                    restart = True
            if restart:
                continue
            for j in range(t + 1, n):
                if d[t][j] == 0:
                    continue
                q = d[t][j] // d[t][t]
                col_add(j, t, -q)
                if d[t][j] != 0:
                    col_swap(t, j)
                    restart = True
            if restart:
                continue
            # Pivot row and column are clear. Enforce divisibility of the
            # remaining block: a non-divisible entry is pulled into the
            # pivot row and the reduction restarts on a smaller pivot.
            offender = None
            for i in range(t + 1, m):
                for j in range(t + 1, n):
                    if d[i][j] % d[t][t] != 0:
                        offender = i
                        break
                if offender is not None:
                    break
            if offender is None:
                break
            row_add(t, offender, 1)
        if d[t][t] < 0:
            row_negate(t)
        t += 1
        if t >= min(m, n):
            break

    return SmithDecomposition(left, IntMatrix(d, n), right, left_inv, right_inv)


def kernel_basis(matrix: IntMatrix) -> IntMatrix:
    """Columns form a basis of the integer kernel ``{x : M x = 0}``.

    With U M V = D, the kernel is V applied to the coordinates whose
    diagonal entry vanishes (including columns past the diagonal).
    """
    snf = smith_normal_form(matrix)
    m, n = matrix.shape
    k = min(m, n)
    free = [j for j in range(n) if j >= k or snf.diag.rows[j][j] == 0]
    cols = [snf.right.column(j) for j in free]
    return IntMatrix.from_columns(cols, n)


def solve(matrix: IntMatrix, rhs: Sequence[int]) -> list[int] | None:
    """One integer solution of ``M x = rhs``, or None when inconsistent."""
    m, n = matrix.shape
    if len(rhs) != m:
        raise ValueError("rhs length mismatch")
    snf = smith_normal_form(matrix)
    b = snf.left.apply(list(rhs))
    k = min(m, n)
    y = [0] * n
    for i in range(m):
        di = snf.diag.rows[i][i] if i < k else 0
        if di == 0:
            if b[i] != 0:
                return None
        else:
            q, r = divmod(b[i], di)
            if r != 0:
                return None
            y[i] = q
    return snf.right.apply(y)


def determinant(matrix: IntMatrix) -> int:
    """Exact determinant via fraction-free Bareiss elimination."""
    m, n = matrix.shape
    if m != n:
        raise ValueError("determinant of a non-square matrix")
    if n == 0:
        return 1
    a = [list(r) for r in matrix.rows]
    sign = 1
    prev = 1
    for k in range(n - 1):
        if a[k][k] == 0:
            pivot_row = next((i for i in range(k + 1, n) if a[i][k] != 0), None)
            if pivot_row is None:
                return 0
            a[k], a[pivot_row] = a[pivot_row], a[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) // prev
            a[i][k] = 0
        prev = a[k][k]
    return sign * a[n - 1][n - 1]
