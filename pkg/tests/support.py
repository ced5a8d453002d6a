"""Shared builders and the sympy bridge used by the oracle tests."""

from __future__ import annotations

import random
from fractions import Fraction

import sympy as sp

from tepkit.algebra import MatrixSeries, RationalComplex, Truncation, TruncatedSeries
from tepkit.algebra.linalg import inverse
from tepkit.connection import ConnectionStructure, GaugeTransform, apply_gauge
from tepkit.fmanifold import FManifoldModel

Z = sp.Symbol("z")
T = sp.symbols("t1:9")


def to_sympy(a: TruncatedSeries):
    """Exact sympy expression of the stored terms (s read as sqrt(t2))."""
    out = sp.Integer(0)
    for (z, e, s), c in a.terms():
        coeff = sp.Rational(c.re.numerator, c.re.denominator) + sp.I * sp.Rational(c.im.numerator, c.im.denominator)
        mono = Z ** z
        for i, k in enumerate(e):
            mono *= T[i] ** k
        if s:
            mono *= sp.sqrt(T[1])
        out += coeff * mono
    return out


def from_sympy(expr, tr: Truncation) -> TruncatedSeries:
    """Truncate a polynomial (in z, t, with rational coefficients) into the box."""
    gens = [Z] + list(T[: tr.n_vars])
    poly = sp.Poly(sp.expand(expr), *gens)
    terms = []
    for mon, c in poly.terms():
        c = sp.nsimplify(c)
        re, im = sp.re(c), sp.im(c)
        terms.append(((mon[0], tuple(mon[1:])), RationalComplex(Fraction(str(re)), Fraction(str(im)))))
    return TruncatedSeries.from_terms(terms, tr)


def sympy_matrix(M: MatrixSeries):
    return sp.Matrix(M.r, M.r, lambda i, j: to_sympy(M[i, j]))


def truncate_sympy(expr, tr: Truncation, n_vars: int | None = None):
    """Drop terms outside z <= z_max, t-degree <= t_deg."""
    n = n_vars or tr.n_vars
    gens = [Z] + list(T[:n])
    expr = sp.expand(expr)
    if expr == 0:
        return sp.Integer(0)
    poly = sp.Poly(expr, *gens)
    out = sp.Integer(0)
    for mon, c in poly.terms():
        if mon[0] <= tr.z_max and sum(mon[1:]) <= tr.t_deg:
            term = c * Z ** mon[0]
            for i, k in enumerate(mon[1:]):
                term *= T[i] ** k
            out += term
    return out


def rand_q(rng: random.Random, lo=-3, hi=3, den=3) -> Fraction:
    return Fraction(rng.randint(lo, hi), rng.randint(1, den))


def random_series(rng, tr, zdeg=1, tdeg=2, density=0.4, constant=None):
    terms = []
    for z in range(zdeg + 1):
        for d in range(tdeg + 1):
            for e in _exps(tr.n_vars, d):
                if rng.random() < density:
                    terms.append(((z, e), rand_q(rng)))
    s = TruncatedSeries.from_terms(terms, tr)
    if constant is not None:
        s = s - s.constant_term() + constant
    return s


def _exps(n, d):
    if n == 1:
        yield (d,)
        return
    for k in range(d + 1):
        for rest in _exps(n - 1, d - k):
            yield (k,) + rest


def random_const_matrix(rng, r, invertible=True):
    while True:
        M = [[rand_q(rng) for _ in range(r)] for _ in range(r)]
        if not invertible:
            return M
        try:
            inverse([[RationalComplex(x) for x in row] for row in M])
            return M
        except ZeroDivisionError:
            continue


def random_gauge(rng, tr, r=2, zdeg=2, tdeg=2, t0_identity=False, t_free=False):
    """Random polynomial gauge with invertible constant part."""
    while True:
        rows = []
        for i in range(r):
            row = []
            for j in range(r):
                a = random_series(rng, tr, zdeg, 0 if t_free else tdeg)
                if t0_identity:
                    a = a - a.at_t0() + int(i == j)
                row.append(a)
            rows.append(row)
        M = MatrixSeries(rows, tr)
        try:
            return GaugeTransform(M)
        except Exception:
            continue


def commuting_constant_structure(rng, n, r, tr):
    """A_i = p_i(N) for one random constant N: a flat pure (T)-structure."""
    N = MatrixSeries.from_constant(random_const_matrix(rng, r, invertible=False), tr)
    one = MatrixSeries.identity(r, tr)
    A = []
    for _ in range(n):
        acc = one * rand_q(rng)
        P = one
        for _ in range(r - 1):
            P = P @ N
            acc = acc + P * rand_q(rng)
        A.append(acc)
    return ConnectionStructure("T", A)


def conjugate_constant(S: ConnectionStructure, rng) -> ConnectionStructure:
    C = MatrixSeries.from_constant(random_const_matrix(rng, S.r), S.trunc)
    return apply_gauge(S, GaugeTransform(C))


def random_algebra_model(rng, n, t_deg=6, tdeg=1) -> FManifoldModel:
    """Basis 1, x, ..., x^(n-1) of C{t}[x]/(x^n - sum c_k(t) x^k): commutative, associative, unital."""
    tr = Truncation(z_max=0, t_deg=t_deg, n_vars=n)
    c = [random_series(rng, tr, 0, tdeg, 0.5) for _ in range(n)]

    def reduce(vec):
        # vec: coefficients of x^0..x^(2n-2)
        vec = list(vec)
        for d in range(len(vec) - 1, n - 1, -1):
            top = vec[d]
            vec[d] = TruncatedSeries.zero(tr)
            for k in range(n):
                vec[d - n + k] = vec[d - n + k] + top * c[k]
        return vec[:n]

    a = [[None] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            vec = [TruncatedSeries.zero(tr) for _ in range(2 * n - 1)]
            vec[i + j] = TruncatedSeries.one(tr)
            a[i][j] = reduce(vec)
    return FManifoldModel(n, a, 1, None, "random")


# -- independent sympy models of the I2(m) normal form ------------------------

def nf_sympy(m, alpha, lam):
    """(A1, A2, B) of the normal form written directly from its defining formulas."""
    t1, t2 = T[0], T[1]
    C1 = sp.eye(2)
    C2 = sp.Matrix([[0, t2 ** (m - 2)], [1, 0]])
    D = sp.Matrix([[1, 0], [0, -1]])
    E = sp.Matrix([[0, 1], [0, 0]])
    f = 0 if m % 2 else lam * t2 ** sp.Rational(m - 4, 2)
    A2 = C2 + Z * f * E
    B = -t1 * C1 - sp.Rational(2, m) * t2 * C2 + Z * (alpha * C1 + sp.Rational(2 - m, 2 * m) * D
                                                       - sp.Rational(2, m) * t2 * f * E)
    return [C1, A2], B


def sympy_flatness(A, B=None):
    """Flatness residuals computed symbolically, as a list of matrices."""
    out = []
    n = len(A)
    for i in range(n):
        for j in range(i + 1, n):
            out.append(Z * sp.diff(A[j], T[i]) - Z * sp.diff(A[i], T[j]) + A[i] * A[j] - A[j] * A[i])
    if B is not None:
        for i in range(n):
            out.append(Z * sp.diff(B, T[i]) - Z ** 2 * sp.diff(A[i], Z) + Z * A[i] + A[i] * B - B * A[i])
    return [M.applyfunc(sp.simplify) for M in out]
