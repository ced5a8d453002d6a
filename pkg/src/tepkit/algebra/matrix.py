"""Square matrices of truncated series."""

from __future__ import annotations

from . import linalg
from .numbers import RationalComplex
from .series import TruncatedSeries, Truncation, TruncationMismatch, _min_w, _newton_steps


class MatrixSeries:
    """Immutable r x r matrix whose entries share one Truncation."""

    __slots__ = ("trunc", "rows")

    def __init__(self, rows, trunc: Truncation | None = None):
        rows = [list(r) for r in rows]
        r = len(rows)
        if r == 0 or any(len(row) != r for row in rows):
            raise ValueError("MatrixSeries must be square and nonempty")
        if trunc is None:
            trunc = next(x.trunc for row in rows for x in row if isinstance(x, TruncatedSeries))
        conv = []
        for row in rows:
            out = []
            for x in row:
                if isinstance(x, TruncatedSeries):
                    if x.trunc != trunc:
                        raise TruncationMismatch("entries with different truncations")
                    out.append(x)
                elif isinstance(x, str):
                    from .parse import parse_series

                    out.append(parse_series(x, trunc))
                else:
                    out.append(TruncatedSeries.constant(x, trunc))
            conv.append(tuple(out))
        self.trunc = trunc
        self.rows = tuple(conv)

    @property
    def r(self) -> int:
        return len(self.rows)

    def __getitem__(self, ij):
        i, j = ij
        return self.rows[i][j]

    @classmethod
    def identity(cls, r: int, trunc: Truncation) -> "MatrixSeries":
        return cls([[int(i == j) for j in range(r)] for i in range(r)], trunc)

    @classmethod
    def zero(cls, r: int, trunc: Truncation) -> "MatrixSeries":
        return cls([[0] * r for _ in range(r)], trunc)

    @classmethod
    def from_constant(cls, rows, trunc: Truncation) -> "MatrixSeries":
        return cls([[RationalComplex.coerce(x) for x in row] for row in rows], trunc)

    def map(self, fn) -> "MatrixSeries":
        return MatrixSeries([[fn(x) for x in row] for row in self.rows], self.trunc)

    def _zip(self, other, fn):
        if not isinstance(other, MatrixSeries):
            raise TypeError("expected MatrixSeries")
        if other.trunc != self.trunc or other.r != self.r:
            raise TruncationMismatch("matrix shapes or truncations differ")
        return MatrixSeries([[fn(a, b) for a, b in zip(ra, rb)] for ra, rb in zip(self.rows, other.rows)], self.trunc)

    def __add__(self, other):
        return self._zip(other, lambda a, b: a + b)

    def __sub__(self, other):
        return self._zip(other, lambda a, b: a - b)

    def __neg__(self):
        return self.map(lambda a: -a)

    def __matmul__(self, other: "MatrixSeries") -> "MatrixSeries":
        if other.trunc != self.trunc or other.r != self.r:
            raise TruncationMismatch("matrix shapes or truncations differ")
        r = self.r
        cols = [[other.rows[k][j] for k in range(r)] for j in range(r)]
        out = []
        for row in self.rows:
            new = []
            for col in cols:
                acc = None
                for a, b in zip(row, col):
                    p = a * b
                    acc = p if acc is None else acc + p
                new.append(acc)
            out.append(new)
        return MatrixSeries(out, self.trunc)

    def __mul__(self, c):
        """Scale by a scalar or by a scalar series."""
        return self.map(lambda a: a * c)

    __rmul__ = __mul__

    def apply(self, v):
        """Matrix times a column vector of series."""
        return [sum((a * x for a, x in zip(row, v)), TruncatedSeries.zero(self.trunc)) for row in self.rows]

    def transpose(self) -> "MatrixSeries":
        r = self.r
        return MatrixSeries([[self.rows[j][i] for j in range(r)] for i in range(r)], self.trunc)

    T = property(transpose)

    def trace(self) -> TruncatedSeries:
        out = self.rows[0][0]
        for i in range(1, self.r):
            out = out + self.rows[i][i]
        return out

    def dt(self, i: int) -> "MatrixSeries":
        return self.map(lambda a: a.dt(i))

    def dz(self) -> "MatrixSeries":
        return self.map(lambda a: a.dz())

    def shift_z(self, j: int) -> "MatrixSeries":
        return self.map(lambda a: a.shift_z(j))

    def flip_z(self) -> "MatrixSeries":
        return self.map(lambda a: a.flip_z())

    def z_coefficient(self, k: int) -> "MatrixSeries":
        return self.map(lambda a: a.z_coefficient(k))

    def at_t0(self) -> "MatrixSeries":
        return self.map(lambda a: a.at_t0())

    def restrict(self, z_rel=None, t_rel=None, w_rel=None) -> "MatrixSeries":
        return self.map(lambda a: a.restrict(z_rel, t_rel, w_rel))

    def retruncate(self, trunc: Truncation) -> "MatrixSeries":
        return MatrixSeries([[a.retruncate(trunc) for a in row] for row in self.rows], trunc)

    def constant_part(self):
        """The plain matrix of (z, t) = (0, 0) coefficients."""
        return [[a.constant_term() for a in row] for row in self.rows]

    def is_zero(self) -> bool:
        return all(a.is_zero() for row in self.rows for a in row)

    def __eq__(self, other):
        if not isinstance(other, MatrixSeries):
            return NotImplemented
        if other.trunc != self.trunc or other.r != self.r:
            return False
        return (self - other).is_zero()

    __hash__ = None

    @property
    def window(self):
        zr = min(a.z_rel for row in self.rows for a in row)
        tr = min(a.t_rel for row in self.rows for a in row)
        wr = None
        for row in self.rows:
            for a in row:
                wr = _min_w(wr, a.w_rel)
        return (zr, tr, wr)

    def max_z(self):
        zs = [a.max_z() for row in self.rows for a in row if not a.is_zero()]
        return max(zs) if zs else None

    def first_nonzero(self):
        """(i, j, ((z, exps, s), coeff)) of the first nonzero term, or None."""
        best = None
        for i, row in enumerate(self.rows):
            for j, a in enumerate(row):
                lt = a.leading_term()
                if lt is None:
                    continue
                key = (lt[0][0], sum(lt[0][1]), lt[0][1], i, j)
                if best is None or key < best[0]:
                    best = (key, (i, j, lt))
        return None if best is None else best[1]

    def inverse(self) -> "MatrixSeries":
        return matrix_inverse(self)

    def __repr__(self):
        return "MatrixSeries([" + ", ".join("[" + ", ".join(str(a) for a in row) + "]" for row in self.rows) + "])"

    def to_json(self):
        return [[a.to_json() for a in row] for row in self.rows]

    @classmethod
    def from_json(cls, data, trunc: Truncation) -> "MatrixSeries":
        if not isinstance(data, list) or not data or any(not isinstance(r, list) for r in data):
            raise ValueError("matrix must be a nonempty list of rows")
        return cls([[TruncatedSeries.from_json(x, trunc) for x in row] for row in data], trunc)


def commutator(a: MatrixSeries, b: MatrixSeries) -> MatrixSeries:
    return a @ b - b @ a


def matrix_inverse(m: MatrixSeries) -> MatrixSeries:
    """Two-sided inverse by Newton iteration from the inverse of the constant part."""
    if any((a.min_z() or 0) < 0 for row in m.rows for a in row):
        raise ValueError("matrix_inverse needs nonnegative z-powers")
    c0 = m.constant_part()
    try:
        c0i = linalg.inverse(c0)
    except ZeroDivisionError:
        raise ZeroDivisionError("constant part of the matrix is singular") from None
    x = MatrixSeries.from_constant(c0i, m.trunc)
    one = MatrixSeries.identity(m.r, m.trunc)
    for _ in range(_newton_steps(m.trunc)):
        e = one - m @ x
        if e.is_zero():
            break
        x = x + x @ e
    zr, tr, wr = m.window
    return x.restrict(zr, tr, wr)


def derive(obj, var):
    """Partial derivative of a series or matrix in 'z' or 't<k>' (1-based)."""
    if isinstance(var, int):
        return obj.dt(var - 1)
    if var == "z":
        return obj.dz()
    if isinstance(var, str) and var.startswith("t") and var[1:].isdigit():
        return obj.dt(int(var[1:]) - 1)
    raise ValueError(f"unknown variable {var!r}")
