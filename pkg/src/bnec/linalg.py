"""Dense matrices over F_q: rank, exact solve, nullspace and k-independence.

Pivoting always takes the first nonzero entry scanning rows top to bottom,
so bases and particular solutions are reproducible.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Sequence

from .errors import DimensionMismatch, KTooLarge
from .field import FieldSpec


class Matrix:
    """Immutable row-major matrix of field element codes."""

    __slots__ = ("field", "rows", "nrows", "ncols")

    def __init__(self, field: FieldSpec, rows: Iterable[Sequence[int]], ncols: int | None = None):
        rows = tuple(tuple(int(x) for x in r) for r in rows)
        if ncols is None:
            if not rows:
                raise ValueError("ncols is required for a matrix with no rows")
            ncols = len(rows[0])
        q = field.q
        for r in rows:
            if len(r) != ncols:
                raise DimensionMismatch("ragged matrix rows")
            for x in r:
                if not 0 <= x < q:
                    raise ValueError(f"entry {x} outside F_{q}")
        self.field = field
        self.rows = rows
        self.nrows = len(rows)
        self.ncols = ncols

    @classmethod
    def _trusted(cls, field, rows, ncols):
        # rows must already be a tuple of int tuples with valid entries
        m = cls.__new__(cls)
        m.field, m.rows, m.nrows, m.ncols = field, rows, len(rows), ncols
        return m

    @classmethod
    def zeros(cls, field, nrows, ncols):
        return cls._trusted(field, tuple((0,) * ncols for _ in range(nrows)), ncols)

    @classmethod
    def identity(cls, field, n):
        return cls._trusted(field, tuple(tuple(int(i == j) for j in range(n)) for i in range(n)), n)

    @classmethod
    def from_columns(cls, field, cols, nrows):
        cols = [tuple(c) for c in cols]
        return cls(field, [[c[i] for c in cols] for i in range(nrows)], len(cols))

    @property
    def shape(self):
        return self.nrows, self.ncols

    def __repr__(self):
        return f"Matrix(q={self.field.q}, {self.nrows}x{self.ncols}, {self.tolist()})"

    def __eq__(self, other):
        return (
            isinstance(other, Matrix)
            and self.field == other.field
            and self.shape == other.shape
            and self.rows == other.rows
        )

    def __hash__(self):
        return hash((self.field, self.shape, self.rows))

    def tolist(self):
        return [list(r) for r in self.rows]

    def col(self, j) -> tuple:
        return tuple(r[j] for r in self.rows)

    def columns(self, idx: Iterable[int]) -> "Matrix":
        idx = list(idx)
        return Matrix._trusted(self.field, tuple(tuple(r[j] for j in idx) for r in self.rows), len(idx))

    def select_rows(self, idx: Iterable[int]) -> "Matrix":
        return Matrix._trusted(self.field, tuple(self.rows[i] for i in idx), self.ncols)

    @property
    def T(self) -> "Matrix":
        if self.nrows:
            cols = tuple(zip(*self.rows))
        else:
            cols = tuple(() for _ in range(self.ncols))
        return Matrix._trusted(self.field, cols, self.nrows)

    def hstack(self, other: "Matrix") -> "Matrix":
        if self.nrows != other.nrows:
            raise DimensionMismatch("hstack needs equal row counts")
        rows = tuple(a + b for a, b in zip(self.rows, other.rows))
        return Matrix._trusted(self.field, rows, self.ncols + other.ncols)

    def is_zero(self) -> bool:
        return not any(any(r) for r in self.rows)

    def matvec(self, v: Sequence[int]) -> tuple:
        if len(v) != self.ncols:
            raise DimensionMismatch(f"vector of length {len(v)} against {self.ncols} columns")
        dot = self.field.dot
        return tuple(dot(r, v) for r in self.rows)

    def __matmul__(self, other):
        if isinstance(other, Matrix):
            if self.ncols != other.nrows:
                raise DimensionMismatch(f"{self.shape} @ {other.shape}")
            cols = other.T.rows
            dot = self.field.dot
            rows = tuple(tuple(dot(r, c) for c in cols) for r in self.rows)
            return Matrix._trusted(self.field, rows, other.ncols)
        return self.matvec(other)


def rref(M: Matrix) -> tuple[list[list[int]], list[int]]:
    """Reduced row echelon form; returns (rows, pivot columns)."""
    F = M.field
    a = [list(r) for r in M.rows]
    pivots = []
    r = 0
    for c in range(M.ncols):
        if r == len(a):
            break
        p = next((i for i in range(r, len(a)) if a[i][c]), None)
        if p is None:
            continue
        a[r], a[p] = a[p], a[r]
        inv = F.inv(a[r][c])
        a[r] = [F.mul(inv, x) for x in a[r]]
        pr = a[r]
        for i in range(len(a)):
            f = a[i][c]
            if i != r and f:
                a[i] = [F.sub(x, F.mul(f, y)) for x, y in zip(a[i], pr)]
        pivots.append(c)
        r += 1
    return a, pivots


def _rank_rows(F: FieldSpec, rows: list[list[int]], ncols: int) -> int:
    a = [list(r) for r in rows]
    rank = 0
    for c in range(ncols):
        p = next((i for i in range(rank, len(a)) if a[i][c]), None)
        if p is None:
            continue
        a[rank], a[p] = a[p], a[rank]
        pr = a[rank]
        inv = F.inv(pr[c])
        for i in range(rank + 1, len(a)):
            f = a[i][c]
            if f:
                f = F.mul(f, inv)
                a[i] = [F.sub(x, F.mul(f, y)) for x, y in zip(a[i], pr)]
        rank += 1
        if rank == len(a):
            break
    return rank


def rank(M: Matrix) -> int:
    return _rank_rows(M.field, list(M.rows), M.ncols)


@dataclass(frozen=True)
class SolveResult:
    kind: str  # "unique" | "none" | "multiple"
    solution: tuple | None = None
    nullity: int = 0


def solve_linear(A: Matrix, b: Sequence[int]) -> SolveResult:
    """Solve A x = b exactly.  For kind="multiple" a particular solution (free vars = 0) is given."""
    if len(b) != A.nrows:
        raise DimensionMismatch(f"A has {A.nrows} rows but b has length {len(b)}")
    F = A.field
    aug = Matrix._trusted(F, tuple(r + (int(x),) for r, x in zip(A.rows, b)), A.ncols + 1)
    red, pivots = rref(aug)
    if A.ncols in pivots:
        return SolveResult("none")
    x = [0] * A.ncols
    for row, c in zip(red, pivots):
        x[c] = row[-1]
    nullity = A.ncols - len(pivots)
    x = tuple(x)
    if A.matvec(x) != tuple(int(v) for v in b):
        raise AssertionError("elimination produced a non-solution")
    return SolveResult("unique" if nullity == 0 else "multiple", x, nullity)


def nullspace_basis(M: Matrix) -> Matrix:
    """Columns form a basis of {x : M x = 0}; shape (cols(M), cols(M) - rank(M))."""
    F = M.field
    n = M.ncols
    red, pivots = rref(M) if M.nrows else ([], [])
    free = [c for c in range(n) if c not in pivots]
    basis = []
    for f in free:
        x = [0] * n
        x[f] = 1
        for row, c in zip(red, pivots):
            x[c] = F.neg(row[f])
        basis.append(x)
    return Matrix.from_columns(F, basis, n)


def left_nullspace(M: Matrix) -> Matrix:
    """Rows y with y M = 0."""
    return nullspace_basis(M.T).T


def in_column_span(M: Matrix, v: Sequence[int]) -> bool:
    if M.ncols == 0:
        return not any(v)
    return solve_linear(M, v).kind != "none"


def same_column_span(A: Matrix, B: Matrix) -> bool:
    ra, rb = rank(A), rank(B)
    return ra == rb == rank(A.hstack(B))


def is_k_independent(rows: Matrix, k: int) -> bool:
    """True iff every subset of at most k rows is linearly independent."""
    if k > rows.nrows:
        raise KTooLarge(f"k={k} exceeds the {rows.nrows} available rows")
    if k <= 0:
        return True
    F = rows.field
    return all(
        _rank_rows(F, [rows.rows[i] for i in sub], rows.ncols) == k
        for sub in combinations(range(rows.nrows), k)
    )


def left_inverse(A: Matrix) -> Matrix:
    """Some L with L A = I for a full-column-rank A (supported on independent rows)."""
    F = A.field
    m, n = A.shape
    _, rows = rref(A.T) if n else ([], [])
    if len(rows) < n:
        raise DimensionMismatch(f"{m}x{n} matrix does not have full column rank")
    sq = A.select_rows(rows)
    red, piv = rref(sq.hstack(Matrix.identity(F, n)))
    inv = [r[n:] for r in red]
    out = [[0] * m for _ in range(n)]
    for j, r in enumerate(rows):
        for i in range(n):
            out[i][r] = inv[i][j]
    return Matrix._trusted(F, tuple(tuple(r) for r in out), m)
