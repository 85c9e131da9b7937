"""Exact integer and mod-p linear algebra.

Everything here works on Python integers, so entries may be arbitrarily large.
Matrices are stored row-major in :class:`IntMatrix`; the kernels copy the
entries into lists of rows and work in place on the copy.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import gcd
from typing import Iterable, Optional, Sequence

from .factorization import is_prime


class ShapeError(ValueError):
    """Raised when a matrix has the wrong shape for an operation."""


@dataclass(frozen=True)
class IntMatrix:
    """Dense matrix with arbitrary-precision integer entries."""

    rows: int
    cols: int
    entries: tuple

    def __post_init__(self):
        if self.rows < 0 or self.cols < 0:
            raise ShapeError(f"negative shape {self.rows}x{self.cols}")
        entries = tuple(int(x) for x in self.entries)
        if len(entries) != self.rows * self.cols:
            raise ShapeError(
                f"{self.rows}x{self.cols} matrix needs {self.rows * self.cols} "
                f"entries, got {len(entries)}"
            )
        object.__setattr__(self, "entries", entries)

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[int]]) -> "IntMatrix":
        rows = [list(r) for r in rows]
        ncols = len(rows[0]) if rows else 0
        for i, r in enumerate(rows):
            if len(r) != ncols:
                raise ShapeError(f"row {i} has {len(r)} entries, expected {ncols}")
        return cls(len(rows), ncols, tuple(x for r in rows for x in r))

    @classmethod
    def identity(cls, n: int) -> "IntMatrix":
        return cls.diagonal([1] * n)

    @classmethod
    def diagonal(cls, values: Sequence[int], cols: Optional[int] = None) -> "IntMatrix":
        n = len(values)
        cols = n if cols is None else cols
        entries = [0] * (n * cols)
        for i, v in enumerate(values):
            if i < cols:
                entries[i * cols + i] = v
            elif v:
                raise ShapeError(f"diagonal entry {i} does not fit in {cols} columns")
        return cls(n, cols, tuple(entries))

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "IntMatrix":
        return cls(rows, cols, (0,) * (rows * cols))

    @property
    def shape(self) -> tuple:
        return (self.rows, self.cols)

    @property
    def is_square(self) -> bool:
        return self.rows == self.cols

    def __getitem__(self, ij):
        i, j = ij
        return self.entries[i * self.cols + j]

    def row(self, i: int) -> list:
        return list(self.entries[i * self.cols:(i + 1) * self.cols])

    def to_rows(self) -> list:
        c = self.cols
        return [list(self.entries[i * c:(i + 1) * c]) for i in range(self.rows)]

    def select_columns(self, columns: Iterable[int]) -> "IntMatrix":
        columns = list(columns)
        return IntMatrix.from_rows(
            [[r[j] for j in columns] for r in self.to_rows()]
        ) if self.rows else IntMatrix(0, len(columns), ())

    def hstack(self, other: "IntMatrix") -> "IntMatrix":
        if other.rows != self.rows:
            raise ShapeError("hstack needs equal row counts")
        return IntMatrix.from_rows(
            [a + b for a, b in zip(self.to_rows(), other.to_rows())]
        )

    def transpose(self) -> "IntMatrix":
        return IntMatrix.from_rows([list(c) for c in zip(*self.to_rows())]) \
            if self.rows and self.cols else IntMatrix(self.cols, self.rows, ())

    def __matmul__(self, other: "IntMatrix") -> "IntMatrix":
        if self.cols != other.rows:
            raise ShapeError(f"cannot multiply {self.shape} by {other.shape}")
        cols = list(zip(*other.to_rows())) if other.rows else [()] * other.cols
        return IntMatrix(
            self.rows,
            other.cols,
            tuple(sum(a * b for a, b in zip(r, c)) for r in self.to_rows() for c in cols),
        )

    def __str__(self) -> str:
        return "\n".join(" ".join(str(x) for x in r) for r in self.to_rows())


@dataclass(frozen=True)
class SmithForm:
    """Invariant factors of an integer matrix.

    ``invariant_factors`` holds only the nonzero factors d1 | d2 | ... so its
    length is the rank. ``left`` and ``right`` are the unimodular transforms
    with ``left @ M @ right`` diagonal, present only when requested.
    """

    invariant_factors: tuple
    rows: int
    cols: int
    left: Optional[IntMatrix] = field(default=None, compare=False, repr=False)
    right: Optional[IntMatrix] = field(default=None, compare=False, repr=False)

    @property
    def rank(self) -> int:
        return len(self.invariant_factors)

    @property
    def free_rank(self) -> int:
        return self.rows - self.rank

    @property
    def torsion(self) -> tuple:
        return tuple(d for d in self.invariant_factors if d != 1)


def _check_prime(p: int) -> None:
    if p < 2 or not is_prime(p):
        raise ValueError(f"{p} is not a prime")


def bareiss_echelon(rows: list, ncols: int) -> tuple:
    """Fraction-free row echelon form, in place.

    Returns ``(rank, pivot_columns, last_pivot, swaps)``. When the rank equals
    the number of rows, ``last_pivot`` is (up to the sign ``(-1)**swaps``) the
    determinant of the square submatrix on the pivot columns.
    """
    nrows = len(rows)
    prev = 1
    r = 0
    swaps = 0
    pivots = []
    for c in range(ncols):
        if r == nrows:
            break
        k = r
        while k < nrows and rows[k][c] == 0:
            k += 1
        if k == nrows:
            continue
        if k != r:
            rows[k], rows[r] = rows[r], rows[k]
            swaps += 1
        prow = rows[r]
        piv = prow[c]
        for i in range(r + 1, nrows):
            row = rows[i]
            x = row[c]
            if x:
                for j in range(c + 1, ncols):
                    row[j] = (piv * row[j] - x * prow[j]) // prev
            elif piv != prev:
                for j in range(c + 1, ncols):
                    row[j] = (piv * row[j]) // prev
            row[c] = 0
        prev = piv
        pivots.append(c)
        r += 1
    return r, pivots, prev if r else 0, swaps


def determinant(M: IntMatrix) -> int:
    """Exact determinant by Bareiss fraction-free elimination."""
    if not M.is_square:
        raise ShapeError(f"determinant needs a square matrix, got {M.rows}x{M.cols}")
    n = M.rows
    if n == 0:
        return 1
    rows = M.to_rows()
    rank, _, last, swaps = bareiss_echelon(rows, n)
    if rank < n:
        return 0
    return -last if swaps % 2 else last


def rank_over_q(M: IntMatrix) -> int:
    return bareiss_echelon(M.to_rows(), M.cols)[0]


def _rank_mod_2(M: IntMatrix) -> int:
    c = M.cols
    basis = {}  # leading bit -> row vector
    rank = 0
    for i in range(M.rows):
        v = 0
        for j, x in enumerate(M.entries[i * c:(i + 1) * c]):
            if x & 1:
                v |= 1 << j
        while v:
            top = v.bit_length() - 1
            b = basis.get(top)
            if b is None:
                basis[top] = v
                rank += 1
                break
            v ^= b
    return rank


def rank_mod_p(M: IntMatrix, p: int) -> int:
    """Rank of ``M`` with entries reduced into {0, ..., p-1}."""
    _check_prime(p)
    if p == 2:
        return _rank_mod_2(M)
    rows = [[x % p for x in r] for r in M.to_rows()]
    nrows, ncols = M.rows, M.cols
    r = 0
    for c in range(ncols):
        if r == nrows:
            break
        k = r
        while k < nrows and rows[k][c] == 0:
            k += 1
        if k == nrows:
            continue
        rows[k], rows[r] = rows[r], rows[k]
        prow = rows[r]
        inv = pow(prow[c], -1, p)
        for j in range(c, ncols):
            prow[j] = prow[j] * inv % p
        for i in range(r + 1, nrows):
            row = rows[i]
            x = row[c]
            if x:
                for j in range(c, ncols):
                    row[j] = (row[j] - x * prow[j]) % p
        r += 1
    return r


def _nearest_quotient(x: int, a: int) -> int:
    # a > 0; rounds x / a to the nearest integer
    return (2 * x + a) // (2 * a)


def _smallest_entry(A: list, t: int, nr: int, nc: int):
    best = None
    bestval = 0
    for i in range(t, nr):
        row = A[i]
        for j in range(t, nc):
            x = row[j]
            if x:
                ax = -x if x < 0 else x
                if best is None or ax < bestval:
                    best, bestval = (i, j), ax
                    if ax == 1:
                        return best
    return best


def _swap_cols(A: list, j1: int, j2: int) -> None:
    if j1 != j2:
        for row in A:
            row[j1], row[j2] = row[j2], row[j1]


def _snf_exact(A: list, nr: int, nc: int, U: Optional[list], V: Optional[list]) -> list:
    """Diagonalize ``A`` in place into Smith form; return the nonzero diagonal."""
    t = 0
    while t < min(nr, nc):
        found = _smallest_entry(A, t, nr, nc)
        if found is None:
            break
        i, j = found
        if i != t:
            A[i], A[t] = A[t], A[i]
            if U is not None:
                U[i], U[t] = U[t], U[i]
        if j != t:
            _swap_cols(A, t, j)
            if V is not None:
                _swap_cols(V, t, j)
        while True:
            prow = A[t]
            if prow[t] < 0:
                A[t] = prow = [-x for x in prow]
                if U is not None:
                    U[t] = [-x for x in U[t]]
            a = prow[t]
            clean = True
            for i in range(t + 1, nr):
                row = A[i]
                x = row[t]
                if x:
                    q = _nearest_quotient(x, a)
                    if q:
                        for k in range(t, nc):
                            row[k] -= q * prow[k]
                        if U is not None:
                            U[i] = [u - q * w for u, w in zip(U[i], U[t])]
                    if row[t]:
                        clean = False
            for j in range(t + 1, nc):
                x = prow[j]
                if x:
                    q = _nearest_quotient(x, a)
                    if q:
                        for row in A[t:]:
                            row[j] -= q * row[t]
                        if V is not None:
                            for row in V:
                                row[j] -= q * row[t]
                    if prow[j]:
                        clean = False
            if not clean:
                best, bestval = None, a
                for i in range(t + 1, nr):
                    x = abs(A[i][t])
                    if x and x < bestval:
                        best, bestval = ("r", i), x
                for j in range(t + 1, nc):
                    x = abs(prow[j])
                    if x and x < bestval:
                        best, bestval = ("c", j), x
                if best is not None:
                    kind, k = best
                    if kind == "r":
                        A[k], A[t] = A[t], A[k]
                        if U is not None:
                            U[k], U[t] = U[t], U[k]
                    else:
                        _swap_cols(A, t, k)
                        if V is not None:
                            _swap_cols(V, t, k)
                continue
            if a != 1:
                bad = None
                for i in range(t + 1, nr):
                    row = A[i]
                    for k in range(t + 1, nc):
                        if row[k] % a:
                            bad = i
                            break
                    if bad is not None:
                        break
                if bad is not None:
                    brow = A[bad]
                    A[t] = [x + y for x, y in zip(prow, brow)]
                    if U is not None:
                        U[t] = [x + y for x, y in zip(U[t], U[bad])]
                    continue
            break
        t += 1
    return [A[i][i] for i in range(t)]


def _diagonalize_mod(A: list, nr: int, nc: int, D: int) -> list:
    """Diagonalize modulo ``D``; returns diagonal residues (may be 0)."""
    half = D // 2

    def red(x):
        x %= D
        return x - D if x > half else x

    for row in A:
        for k in range(nc):
            row[k] = red(row[k])
    t = 0
    while t < min(nr, nc):
        found = _smallest_entry(A, t, nr, nc)
        if found is None:
            break
        i, j = found
        A[i], A[t] = A[t], A[i]
        _swap_cols(A, t, j)
        while True:
            prow = A[t]
            if prow[t] < 0:
                A[t] = prow = [-x for x in prow]
            a = prow[t]
            clean = True
            for i in range(t + 1, nr):
                row = A[i]
                x = row[t]
                if x:
                    q = _nearest_quotient(x, a)
                    for k in range(t, nc):
                        row[k] = red(row[k] - q * prow[k])
                    if row[t]:
                        clean = False
            for j in range(t + 1, nc):
                x = prow[j]
                if x:
                    q = _nearest_quotient(x, a)
                    for row in A[t:]:
                        row[j] = red(row[j] - q * row[t])
                    if prow[j]:
                        clean = False
            if clean:
                break
            best, bestval = None, a
            for i in range(t + 1, nr):
                x = abs(A[i][t])
                if x and x < bestval:
                    best, bestval = ("r", i), x
            for j in range(t + 1, nc):
                x = abs(prow[j])
                if x and x < bestval:
                    best, bestval = ("c", j), x
            if best is not None:
                kind, k = best
                if kind == "r":
                    A[k], A[t] = A[t], A[k]
                else:
                    _swap_cols(A, t, k)
        t += 1
    return [A[i][i] for i in range(t)]


def normalize_diagonal(values: Sequence[int]) -> list:
    """Smith form of a diagonal matrix: enforce the divisibility chain."""
    d = [abs(v) for v in values]
    n = len(d)
    for i in range(n):
        for j in range(i + 1, n):
            a, b = d[i], d[j]
            if a == 0 and b == 0:
                continue
            g = gcd(a, b)
            if g != a:
                d[i], d[j] = g, a * b // g
    # zeros (infinite order) sort last
    nz = [x for x in d if x]
    return nz + [0] * (n - len(nz))


def smith_normal_form(M: IntMatrix, transforms: bool = False) -> SmithForm:
    """Smith normal form by least-magnitude pivoting.

    With ``transforms=True`` the unimodular ``left`` and ``right`` matrices
    are tracked so that ``left @ M @ right`` is the diagonal Smith matrix.
    """
    nr, nc = M.rows, M.cols
    A = M.to_rows()
    U = IntMatrix.identity(nr).to_rows() if transforms else None
    V = IntMatrix.identity(nc).to_rows() if transforms else None
    diag = _snf_exact(A, nr, nc, U, V)
    return SmithForm(
        tuple(diag),
        nr,
        nc,
        left=IntMatrix.from_rows(U) if transforms else None,
        right=IntMatrix.from_rows(V) if transforms else None,
    )


def smith_normal_form_modular(M: IntMatrix, modulus: int) -> SmithForm:
    """Smith form of ``[M | modulus * I]``, computed with entries kept mod ``modulus``.

    When ``modulus * Z^rows`` lies inside the column lattice of ``M`` (for
    example ``modulus = |det|`` of a nonsingular maximal minor) the result
    equals ``smith_normal_form(M)`` but intermediate entries stay bounded.
    """
    D = abs(modulus)
    if D == 0:
        raise ValueError("modulus must be nonzero")
    nr, nc = M.rows, M.cols
    diag = _diagonalize_mod(M.to_rows(), nr, nc, D)
    factors = [gcd(x, D) for x in diag] + [D] * (nr - len(diag))
    return SmithForm(tuple(normalize_diagonal(factors)), nr, nc)


def full_rank_modulus(M: IntMatrix) -> Optional[int]:
    """|det| of a nonsingular rows x rows column minor, or None if rank < rows."""
    if M.rows == 0:
        return 1
    rank, _, last, _ = bareiss_echelon(M.to_rows(), M.cols)
    if rank < M.rows:
        return None
    return abs(last)
