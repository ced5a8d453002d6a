"""Dense exact linear algebra over Q(i) for small constant matrices."""

from __future__ import annotations

from .numbers import RationalComplex

Matrix = list  # list of rows of RationalComplex


def to_rc_matrix(rows) -> Matrix:
    return [[RationalComplex.coerce(x) for x in row] for row in rows]


def identity(r: int) -> Matrix:
    return [[RationalComplex(int(i == j)) for j in range(r)] for i in range(r)]


def matmul(a: Matrix, b: Matrix) -> Matrix:
    return [[sum((a[i][k] * b[k][j] for k in range(len(b))), RationalComplex(0)) for j in range(len(b[0]))]
            for i in range(len(a))]


def rref(rows: Matrix):
    """Reduced row echelon form and pivot columns."""
    m = [list(r) for r in rows]
    if not m:
        return m, []
    ncols = len(m[0])
    pivots = []
    r = 0
    for col in range(ncols):
        p = next((i for i in range(r, len(m)) if not m[i][col].is_zero()), None)
        if p is None:
            continue
        m[r], m[p] = m[p], m[r]
        inv = m[r][col].inverse()
        m[r] = [x * inv for x in m[r]]
        for i in range(len(m)):
            if i != r and not m[i][col].is_zero():
                f = m[i][col]
                m[i] = [x - f * y for x, y in zip(m[i], m[r])]
        pivots.append(col)
        r += 1
        if r == len(m):
            break
    return m, pivots


def inverse(a: Matrix) -> Matrix:
    n = len(a)
    aug = [list(row) + identity(n)[i] for i, row in enumerate(a)]
    red, piv = rref(aug)
    if piv[:n] != list(range(n)):
        raise ZeroDivisionError("singular matrix")
    return [row[n:] for row in red[:n]]


def nullspace(a: Matrix, ncols: int | None = None) -> list:
    """Basis of {x : a x = 0} as a list of column vectors."""
    if not a:
        n = ncols or 0
        return [[RationalComplex(int(i == j)) for i in range(n)] for j in range(n)]
    n = len(a[0])
    red, piv = rref(a)
    free = [c for c in range(n) if c not in piv]
    basis = []
    for f in free:
        v = [RationalComplex(0)] * n
        v[f] = RationalComplex(1)
        for row, pc in zip(red, piv):
            v[pc] = -row[f]
        basis.append(v)
    return basis


def solve(a: Matrix, b: list):
    """One solution of a x = b, or None if inconsistent."""
    n = len(a[0]) if a else 0
    aug = [list(row) + [bi] for row, bi in zip(a, b)]
    red, piv = rref(aug)
    if n in piv:
        return None
    x = [RationalComplex(0)] * n
    for row, pc in zip(red, piv):
        x[pc] = row[n]
    return x


def is_zero_matrix(a: Matrix) -> bool:
    return all(x.is_zero() for row in a for x in row)
