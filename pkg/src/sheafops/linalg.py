"""Exact dense linear algebra over the rationals or a prime field.

All entries are exact field elements; there is no floating point anywhere.
Matrices are small (the workbench caps posets at a few dozen points), so
plain Gaussian elimination is fine.
"""

from __future__ import annotations

from typing import Iterable, List, Sequence

try:
    from gmpy2 import mpq as _mpq

    def _make_rational(num, den=1):
        return _mpq(num, den)
except ImportError:  # pragma: no cover - gmpy2 is a declared dependency
    from fractions import Fraction as _mpq

    def _make_rational(num, den=1):
        return _mpq(num, den)


class FpElement:
    """Element of the prime field F_p."""

    __slots__ = ("value", "p")

    def __init__(self, value: int, p: int):
        self.p = p
        self.value = value % p

    def _coerce(self, other):
        if isinstance(other, FpElement):
            if other.p != self.p:
                raise ValueError("mixed characteristics")
            return other
        if isinstance(other, int):
            return FpElement(other, self.p)
        return NotImplemented

    def __add__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return FpElement(self.value + o.value, self.p)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return FpElement(self.value - o.value, self.p)

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return FpElement(o.value - self.value, self.p)

    def __mul__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return FpElement(self.value * o.value, self.p)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        if o.value == 0:
            raise ZeroDivisionError("division by zero in F_p")
        return FpElement(self.value * pow(o.value, -1, self.p), self.p)

    def __rtruediv__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return o / self

    def __neg__(self):
        return FpElement(-self.value, self.p)

    def __eq__(self, other):
        if isinstance(other, FpElement):
            return self.p == other.p and self.value == other.value
        if isinstance(other, int):
            return self.value == other % self.p
        return NotImplemented

    def __hash__(self):
        return hash((self.value, self.p))

    def __bool__(self):
        return self.value != 0

    def __repr__(self):
        return f"{self.value}"


class Field:
    """A coefficient field: the rationals or F_p."""

    def __init__(self, characteristic: int = 0):
        if characteristic:
            if characteristic < 2 or any(
                characteristic % d == 0 for d in range(2, int(characteristic**0.5) + 1)
            ):
                raise ValueError(f"characteristic must be 0 or prime, got {characteristic}")
        self.characteristic = characteristic

    def __call__(self, num, den=1):
        if self.characteristic:
            if den != 1:
                return FpElement(num, self.characteristic) / FpElement(den, self.characteristic)
            return FpElement(num, self.characteristic)
        return _make_rational(num, den)

    @property
    def zero(self):
        return self(0)

    @property
    def one(self):
        return self(1)

    def parse(self, s: str):
        """Parse an exact scalar string like "3" or "-2/7"."""
        s = s.strip()
        if "/" in s:
            num, den = s.split("/")
            return self(int(num), int(den))
        return self(int(s))

    def format(self, x) -> str:
        if self.characteristic:
            return str(x.value)
        num, den = x.numerator, x.denominator
        return f"{num}" if den == 1 else f"{num}/{den}"

    def __eq__(self, other):
        return isinstance(other, Field) and self.characteristic == other.characteristic

    def __hash__(self):
        return hash(("Field", self.characteristic))

    def __repr__(self):
        return "QQ" if self.characteristic == 0 else f"GF({self.characteristic})"


QQ = Field(0)


def GF(p: int) -> Field:
    return Field(p)


class Matrix:
    """Dense matrix over an exact field.

    Rows-by-columns; a Matrix represents a linear map from k^cols to k^rows
    acting on column vectors.
    """

    __slots__ = ("rows", "cols", "data", "field")

    def __init__(self, rows: int, cols: int, data: Sequence[Sequence], field: Field = QQ):
        self.rows = rows
        self.cols = cols
        self.field = field
        self.data = [[field(x) if isinstance(x, (int, str)) else x for x in row] for row in data]
        if len(self.data) != rows or any(len(r) != cols for r in self.data):
            raise ValueError("shape mismatch")

    # -- constructors ------------------------------------------------------

    @staticmethod
    def zero(rows: int, cols: int, field: Field = QQ) -> "Matrix":
        z = field.zero
        return Matrix(rows, cols, [[z] * cols for _ in range(rows)], field)

    @staticmethod
    def identity(n: int, field: Field = QQ) -> "Matrix":
        z, o = field.zero, field.one
        return Matrix(n, n, [[o if i == j else z for j in range(n)] for i in range(n)], field)

    @staticmethod
    def from_rows(data: Sequence[Sequence], field: Field = QQ) -> "Matrix":
        rows = len(data)
        cols = len(data[0]) if rows else 0
        return Matrix(rows, cols, data, field)

    @staticmethod
    def column(entries: Sequence, field: Field = QQ) -> "Matrix":
        return Matrix(len(entries), 1, [[e] for e in entries], field)

    # -- basic algebra -----------------------------------------------------

    def __add__(self, other: "Matrix") -> "Matrix":
        if (self.rows, self.cols) != (other.rows, other.cols):
            raise ValueError("shape mismatch in addition")
        return Matrix(
            self.rows,
            self.cols,
            [
                [self.data[i][j] + other.data[i][j] for j in range(self.cols)]
                for i in range(self.rows)
            ],
            self.field,
        )

    def __sub__(self, other: "Matrix") -> "Matrix":
        if (self.rows, self.cols) != (other.rows, other.cols):
            raise ValueError("shape mismatch in subtraction")
        return Matrix(
            self.rows,
            self.cols,
            [
                [self.data[i][j] - other.data[i][j] for j in range(self.cols)]
                for i in range(self.rows)
            ],
            self.field,
        )

    def __neg__(self) -> "Matrix":
        return self.scale(self.field(-1))

    def scale(self, c) -> "Matrix":
        c = self.field(c) if isinstance(c, (int, str)) else c
        return Matrix(
            self.rows,
            self.cols,
            [[c * x for x in row] for row in self.data],
            self.field,
        )

    def __mul__(self, other: "Matrix") -> "Matrix":
        if self.cols != other.rows:
            raise ValueError(f"shape mismatch in product: {self.shape} * {other.shape}")
        z = self.field.zero
        out = [[z] * other.cols for _ in range(self.rows)]
        for i in range(self.rows):
            arow = self.data[i]
            orow = out[i]
            for k in range(self.cols):
                a = arow[k]
                if a == z:
                    continue
                brow = other.data[k]
                for j in range(other.cols):
                    b = brow[j]
                    if b != z:
                        orow[j] = orow[j] + a * b
        return Matrix(self.rows, other.cols, out, self.field)

    def __eq__(self, other):
        return (
            isinstance(other, Matrix)
            and self.rows == other.rows
            and self.cols == other.cols
            and all(
                self.data[i][j] == other.data[i][j]
                for i in range(self.rows)
                for j in range(self.cols)
            )
        )

    def __hash__(self):
        return hash((self.rows, self.cols))

    @property
    def shape(self):
        return (self.rows, self.cols)

    def is_zero(self) -> bool:
        z = self.field.zero
        return all(x == z for row in self.data for x in row)

    def transpose(self) -> "Matrix":
        return Matrix(
            self.cols,
            self.rows,
            [[self.data[i][j] for i in range(self.rows)] for j in range(self.cols)],
            self.field,
        )

    def hstack(self, other: "Matrix") -> "Matrix":
        if self.rows != other.rows:
            raise ValueError("row mismatch in hstack")
        return Matrix(
            self.rows,
            self.cols + other.cols,
            [self.data[i] + other.data[i] for i in range(self.rows)],
            self.field,
        )

    def vstack(self, other: "Matrix") -> "Matrix":
        if self.cols != other.cols:
            raise ValueError("column mismatch in vstack")
        return Matrix(self.rows + other.rows, self.cols, self.data + other.data, self.field)

    def submatrix(self, row_idx: Iterable[int], col_idx: Iterable[int]) -> "Matrix":
        ri, ci = list(row_idx), list(col_idx)
        return Matrix(
            len(ri), len(ci), [[self.data[i][j] for j in ci] for i in ri], self.field
        )

    @staticmethod
    def block_diag(blocks: Sequence["Matrix"], field: Field = QQ) -> "Matrix":
        rows = sum(b.rows for b in blocks)
        cols = sum(b.cols for b in blocks)
        out = Matrix.zero(rows, cols, field)
        r = c = 0
        for b in blocks:
            for i in range(b.rows):
                out.data[r + i][c : c + b.cols] = list(b.data[i])
            r += b.rows
            c += b.cols
        return out

    def kronecker(self, other: "Matrix") -> "Matrix":
        out = Matrix.zero(self.rows * other.rows, self.cols * other.cols, self.field)
        for i in range(self.rows):
            for j in range(self.cols):
                a = self.data[i][j]
                if a == self.field.zero:
                    continue
                for k in range(other.rows):
                    for l in range(other.cols):
                        out.data[i * other.rows + k][j * other.cols + l] = a * other.data[k][l]
        return out

    # -- elimination -------------------------------------------------------

    def rref(self):
        """Reduced row echelon form; returns (rref_matrix, pivot_columns)."""
        z = self.field.zero
        m = [list(row) for row in self.data]
        pivots: List[int] = []
        r = 0
        for c in range(self.cols):
            if r == self.rows:
                break
            pr = None
            for i in range(r, self.rows):
                if m[i][c] != z:
                    pr = i
                    break
            if pr is None:
                continue
            m[r], m[pr] = m[pr], m[r]
            pv = m[r][c]
            if pv != self.field.one:
                m[r] = [x / pv for x in m[r]]
            for i in range(self.rows):
                if i != r and m[i][c] != z:
                    f = m[i][c]
                    m[i] = [a - f * b for a, b in zip(m[i], m[r])]
            pivots.append(c)
            r += 1
        return Matrix(self.rows, self.cols, m, self.field), pivots

    def rank(self) -> int:
        return len(self.rref()[1])

    def kernel(self) -> "Matrix":
        """Matrix whose columns are a basis of the null space."""
        R, pivots = self.rref()
        z, o = self.field.zero, self.field.one
        free = [c for c in range(self.cols) if c not in pivots]
        cols = []
        for fc in free:
            v = [z] * self.cols
            v[fc] = o
            for r, pc in enumerate(pivots):
                v[pc] = -R.data[r][fc]
            cols.append(v)
        return Matrix(
            self.cols, len(free), [[cols[j][i] for j in range(len(free))] for i in range(self.cols)], self.field
        )

    def column_space(self) -> "Matrix":
        """Matrix whose columns are a basis of the image (chosen from input columns)."""
        _, pivots = self.rref()
        return self.submatrix(range(self.rows), pivots)

    def solve(self, rhs: "Matrix") -> "Matrix":
        """Solve self * X = rhs; raises ValueError if inconsistent."""
        if rhs.rows != self.rows:
            raise ValueError("shape mismatch in solve")
        aug = self.hstack(rhs)
        R, pivots = aug.rref()
        z = self.field.zero
        for r in range(len(pivots)):
            if pivots[r] >= self.cols:
                raise ValueError("inconsistent linear system")
        out = Matrix.zero(self.cols, rhs.cols, self.field)
        for r, pc in enumerate(pivots):
            for j in range(rhs.cols):
                out.data[pc][j] = R.data[r][self.cols + j]
        return out

    def cokernel_projection(self) -> "Matrix":
        """Projection k^rows -> coker(self) in a chosen basis.

        The cokernel basis consists of the standard coordinates not pivotal
        in the column space, corrected so that the projection kills im(self).
        """
        # Row-reduce the transpose: rows of the rref span the row space of
        # self^T = column space of self; kernel of that span's pairing gives
        # functionals vanishing on the image.
        K = self.transpose().kernel()  # columns: functionals on k^rows killing im(self)
        return K.transpose()

    def inverse(self) -> "Matrix":
        if self.rows != self.cols:
            raise ValueError("inverse of non-square matrix")
        X = self.solve(Matrix.identity(self.rows, self.field))
        if (self * X) != Matrix.identity(self.rows, self.field):
            raise ValueError("matrix is singular")
        return X

    def is_invertible(self) -> bool:
        return self.rows == self.cols and self.rank() == self.rows

    def __repr__(self):
        rows = "; ".join(" ".join(self.field.format(x) for x in row) for row in self.data)
        return f"Matrix({self.rows}x{self.cols}: {rows})"
