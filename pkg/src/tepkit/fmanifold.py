"""F-manifolds given by structure constants, and their analytic spectrum.

Indices are 0-based in code (``a[i][j][k]`` is the coefficient of d_k in
d_i o d_j); labels in reports and JSON use the 1-based names t1..tn.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations_with_replacement

from .algebra import RationalComplex, Truncation, TruncatedSeries, parse_series
from .algebra.parse import ParseError, evaluate_expression
from .errors import PreconditionError
from .report import Check, Report


def _zero(tr):
    return TruncatedSeries.zero(tr)


@dataclass(frozen=True)
class FManifoldModel:
    """Multiplication d_i o d_j = sum_k a[i][j][k] d_k on a chart of dimension n."""

    n: int
    a: tuple
    unit_index: int = 1
    euler: tuple | None = None
    name: str = ""
    unit: tuple | None = None

    def __post_init__(self):
        a = tuple(tuple(tuple(x for x in row_k) for row_k in row) for row in self.a)
        object.__setattr__(self, "a", a)
        if len(a) != self.n or any(len(r) != self.n or any(len(c) != self.n for c in r) for r in a):
            raise PreconditionError("structure constants must be an n x n x n array")
        if not 1 <= self.unit_index <= self.n:
            raise PreconditionError("unit_index out of range")
        if self.euler is not None:
            object.__setattr__(self, "euler", tuple(self.euler))
            if len(self.euler) != self.n:
                raise PreconditionError("Euler field needs n components")
        if self.unit is not None:
            object.__setattr__(self, "unit", tuple(self.unit))
            if len(self.unit) != self.n:
                raise PreconditionError("unit field needs n components")

    @property
    def trunc(self) -> Truncation:
        return self.a[0][0][0].trunc

    @property
    def u(self) -> int:
        return self.unit_index - 1

    @property
    def unit_is_coordinate(self) -> bool:
        return self.unit is None

    def unit_field(self):
        """Components of e; by default the coordinate field d_{unit_index}."""
        return list(self.unit) if self.unit is not None else self.coordinate_field(self.u)

    @classmethod
    def from_sparse(cls, n, entries, trunc, unit_index=1, euler=None, name="", unit=None):
        """entries: {(i, j, k): series or literal} with 1-based indices; symmetry in (i, j) is not implied."""
        a = [[[_zero(trunc) for _ in range(n)] for _ in range(n)] for _ in range(n)]
        for (i, j, k), v in entries.items():
            a[i - 1][j - 1][k - 1] = _as_series(v, trunc)
        if euler is not None:
            euler = [_as_series(v, trunc) for v in euler]
        if unit is not None:
            unit = [_as_series(v, trunc) for v in unit]
        return cls(n, a, unit_index, euler, name, unit)

    def product(self, X, Y):
        """(X o Y) for vector fields given as component lists."""
        n = self.n
        out = [_zero(self.trunc) for _ in range(n)]
        for i in range(n):
            if X[i].is_zero():
                continue
            for j in range(n):
                if Y[j].is_zero():
                    continue
                xy = X[i] * Y[j]
                for k in range(n):
                    c = self.a[i][j][k]
                    if not c.is_zero():
                        out[k] = out[k] + xy * c
        return out

    def coordinate_field(self, i: int):
        tr = self.trunc
        return [TruncatedSeries.one(tr) if k == i else _zero(tr) for k in range(self.n)]

    def to_json(self) -> dict:
        entries = []
        for i in range(self.n):
            for j in range(self.n):
                for k in range(self.n):
                    c = self.a[i][j][k]
                    if not c.is_zero():
                        entries.append([i + 1, j + 1, k + 1, str(c)])
        d = {"n": self.n, "a": entries, "unit_index": self.unit_index, "truncation": {"t_deg": self.trunc.t_deg}}
        if self.euler is not None:
            d["euler"] = [str(c) for c in self.euler]
        if self.unit is not None:
            d["unit"] = [str(c) for c in self.unit]
        return d

    @classmethod
    def from_json(cls, d: dict, t_deg: int | None = None) -> "FManifoldModel":
        try:
            n = int(d["n"])
            td = t_deg if t_deg is not None else int(d.get("truncation", {}).get("t_deg", 12))
            tr = Truncation(z_max=0, t_deg=td, n_vars=n)
            entries = {}
            for item in d["a"]:
                i, j, k, v = item
                entries[(int(i), int(j), int(k))] = v if isinstance(v, str) else TruncatedSeries.from_json(v, tr)
            return cls.from_sparse(n, entries, tr, int(d.get("unit_index", 1)), d.get("euler"), unit=d.get("unit"))
        except ParseError:
            raise
        except (KeyError, TypeError, ValueError) as e:
            if isinstance(e, PreconditionError):
                raise
            raise ParseError(f"malformed F-manifold document: {e}") from None


def _as_series(v, tr):
    if isinstance(v, TruncatedSeries):
        return v
    if isinstance(v, str):
        return parse_series(v, tr)
    return TruncatedSeries.constant(v, tr)


def verify_algebra(F: FManifoldModel) -> Report:
    """Commutativity, associativity and unit as identities of structure constants."""
    rep = Report()
    n, a = F.n, F.a
    for i in range(n):
        for j in range(i + 1, n):
            for k in range(n):
                rep.add(Check.zero(f"2.11 commutativity[{i + 1},{j + 1};{k + 1}]", a[i][j][k] - a[j][i][k]))
    for i in range(n):
        for j in range(n):
            for k in range(n):
                for m in range(n):
                    lhs = _zero(F.trunc)
                    for l in range(n):
                        if not a[i][j][l].is_zero() and not a[l][k][m].is_zero():
                            lhs = lhs + a[i][j][l] * a[l][k][m]
                        if not a[j][k][l].is_zero() and not a[i][l][m].is_zero():
                            lhs = lhs - a[j][k][l] * a[i][l][m]
                    rep.add(Check.zero(f"2.11 associativity[{i + 1},{j + 1},{k + 1};{m + 1}]", lhs))
    e = F.unit_field()
    for j in range(n):
        for k in range(n):
            val = -int(j == k)
            for i in range(n):
                if not e[i].is_zero():
                    val = e[i] * a[i][j][k] + val
            rep.add(Check.zero(f"2.11 unit[{j + 1};{k + 1}]", val))
    return rep


def bracket(X, Y):
    """Lie bracket of vector fields in coordinates."""
    n = len(X)
    out = []
    for p in range(n):
        acc = _zero(X[0].trunc)
        for q in range(n):
            if not X[q].is_zero():
                acc = acc + X[q] * Y[p].dt(q)
            if not Y[q].is_zero():
                acc = acc - Y[q] * X[p].dt(q)
        out.append(acc)
    return out


def _vsub(X, Y):
    return [x - y for x, y in zip(X, Y)]


def lie_of_product(F: FManifoldModel, Z, U, V):
    """Lie_Z(o)(U, V) = [Z, U o V] - [Z, U] o V - U o [Z, V]."""
    return _vsub(_vsub(bracket(Z, F.product(U, V)), F.product(bracket(Z, U), V)), F.product(U, bracket(Z, V)))


def integrability_residual(F: FManifoldModel) -> dict:
    """{(i, j, k, l): vector} of Lie_{XoY}(o) - X o Lie_Y(o) - Y o Lie_X(o) on coordinate fields."""
    d = [F.coordinate_field(i) for i in range(F.n)]
    out = {}
    for i, j in combinations_with_replacement(range(F.n), 2):
        xy = F.product(d[i], d[j])
        for k, l in combinations_with_replacement(range(F.n), 2):
            t1 = lie_of_product(F, xy, d[k], d[l])
            t2 = F.product(d[i], lie_of_product(F, d[j], d[k], d[l]))
            t3 = F.product(d[j], lie_of_product(F, d[i], d[k], d[l]))
            out[(i, j, k, l)] = _vsub(_vsub(t1, t2), t3)
    return out


def euler_residual(F: FManifoldModel) -> dict:
    """{(k, l): vector} of Lie_E(o)(d_k, d_l) - d_k o d_l."""
    if F.euler is None:
        raise PreconditionError("model has no Euler field")
    E = list(F.euler)
    d = [F.coordinate_field(i) for i in range(F.n)]
    out = {}
    for k, l in combinations_with_replacement(range(F.n), 2):
        out[(k, l)] = _vsub(lie_of_product(F, E, d[k], d[l]), F.product(d[k], d[l]))
    return out


def tensor_is_zero(t: dict) -> bool:
    return all(c.is_zero() for v in t.values() for c in v)


def tensor_checks(t: dict, label: str) -> list:
    out = []
    for idx, vec in sorted(t.items()):
        name = ",".join(str(x + 1) for x in idx)
        bad = next((p for p, c in enumerate(vec) if not c.is_zero()), None)
        if bad is None:
            out.append(Check(f"{label}[{name}]", True))
        else:
            out.append(Check.zero(f"{label}[{name}]", vec[bad], f"component d{bad + 1}"))
    return out


class CotangentPoly:
    """Polynomial in fiber variables y_1..y_n with t-series coefficients."""

    __slots__ = ("n", "trunc", "terms")

    def __init__(self, trunc: Truncation, terms=None):
        self.trunc = trunc
        self.n = trunc.n_vars
        self.terms = {k: v for k, v in (terms or {}).items() if not v.is_zero()}

    @classmethod
    def const(cls, c, trunc):
        return cls(trunc, {(0,) * trunc.n_vars: _as_series(c, trunc)})

    @classmethod
    def y(cls, i: int, trunc):
        """Fiber variable y_{i+1}."""
        e = [0] * trunc.n_vars
        e[i] = 1
        return cls(trunc, {tuple(e): TruncatedSeries.one(trunc)})

    @classmethod
    def parse(cls, text: str, trunc: Truncation, params=None) -> "CotangentPoly":
        n = trunc.n_vars

        def resolve(name):
            if name.startswith("y") and name[1:].isdigit() and 1 <= int(name[1:]) <= n:
                return cls.y(int(name[1:]) - 1, trunc)
            if name.startswith("t") and name[1:].isdigit() and 1 <= int(name[1:]) <= n:
                return cls(trunc, {(0,) * n: TruncatedSeries.variable(name, trunc)})
            return None

        def lift(x):
            return x if isinstance(x, CotangentPoly) else cls.const(x, trunc)

        return evaluate_expression(text, resolve, lift, params)

    def is_zero(self) -> bool:
        return not self.terms

    def y_degree(self) -> int:
        return max((sum(e) for e in self.terms), default=-1)

    def _co(self, other):
        if isinstance(other, CotangentPoly):
            if other.trunc != self.trunc:
                raise ValueError("truncation mismatch")
            return other
        return CotangentPoly.const(other, self.trunc)

    def __add__(self, other):
        o = self._co(other)
        t = dict(self.terms)
        for k, v in o.terms.items():
            t[k] = t[k] + v if k in t else v
        return CotangentPoly(self.trunc, t)

    __radd__ = __add__

    def __neg__(self):
        return CotangentPoly(self.trunc, {k: -v for k, v in self.terms.items()})

    def __sub__(self, other):
        return self + (-self._co(other))

    def __rsub__(self, other):
        return self._co(other) - self

    def __mul__(self, other):
        if isinstance(other, (int, Fraction, RationalComplex)):
            return CotangentPoly(self.trunc, {k: v * other for k, v in self.terms.items()})
        o = self._co(other)
        t = {}
        for k1, v1 in self.terms.items():
            for k2, v2 in o.terms.items():
                k = tuple(a + b for a, b in zip(k1, k2))
                p = v1 * v2
                t[k] = t[k] + p if k in t else p
        return CotangentPoly(self.trunc, t)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        out = CotangentPoly.const(1, self.trunc)
        for _ in range(k):
            out = out * self
        return out

    def __eq__(self, other):
        if not isinstance(other, CotangentPoly):
            try:
                other = self._co(other)
            except (TypeError, ValueError):
                return NotImplemented
        return (self - other).is_zero()

    __hash__ = None

    def dy(self, i: int) -> "CotangentPoly":
        t = {}
        for k, v in self.terms.items():
            if k[i]:
                k2 = k[:i] + (k[i] - 1,) + k[i + 1:]
                t[k2] = v * k[i]
        return CotangentPoly(self.trunc, t)

    def dt(self, i: int) -> "CotangentPoly":
        return CotangentPoly(self.trunc, {k: v.dt(i) for k, v in self.terms.items()})

    def __str__(self):
        if not self.terms:
            return "0"
        parts = []
        for k in sorted(self.terms, key=lambda e: (-sum(e), tuple(-x for x in e))):
            ymono = "*".join(f"y{i + 1}" if e == 1 else f"y{i + 1}^{e}" for i, e in enumerate(k) if e)
            c = self.terms[k]
            cs = str(c)
            if not ymono:
                parts.append(cs)
            elif cs == "1":
                parts.append(ymono)
            elif cs == "-1":
                parts.append("-" + ymono)
            elif len(c) == 1:
                parts.append(f"{cs}*{ymono}")
            else:
                parts.append(f"({cs})*{ymono}")
        return " + ".join(parts).replace("+ -", "- ")

    def __repr__(self):
        return f"CotangentPoly({self})"


def poisson(f: CotangentPoly, g: CotangentPoly) -> CotangentPoly:
    """{f, g} = H_f(g) = sum_k (df/dt_k dg/dy_k - df/dy_k dg/dt_k)."""
    out = CotangentPoly(f.trunc)
    for k in range(f.n):
        out = out + f.dt(k) * g.dy(k) - f.dy(k) * g.dt(k)
    return out


@dataclass
class SpectrumIdeal:
    """The ideal (y_u - 1, y_i y_j - sum_k a_ij^k y_k) as a rewrite system.

    ``generators`` defaults to that presentation; a different presentation
    of the same ideal (such as one printed for an example) can be supplied
    and is then what bracket_closure brackets.
    """

    model: FManifoldModel
    generators: list = field(default=None)

    def __post_init__(self):
        if not self.model.unit_is_coordinate:
            raise PreconditionError("the rewrite system needs the unit to be a coordinate field")
        if self.generators is None:
            self.generators = default_generators(self.model)

    def reduce(self, p: CotangentPoly, rng: random.Random | None = None) -> CotangentPoly:
        return reduce_mod_ideal(p, self, rng)


def default_generators(F: FManifoldModel) -> list:
    tr = F.trunc
    ys = [CotangentPoly.y(i, tr) for i in range(F.n)]
    gens = [ys[F.u] - 1]
    for i in range(F.n):
        for j in range(i, F.n):
            if F.u in (i, j):
                continue
            g = ys[i] * ys[j]
            for k in range(F.n):
                if not F.a[i][j][k].is_zero():
                    g = g - ys[k] * CotangentPoly(tr, {(0,) * F.n: F.a[i][j][k]})
            gens.append(g)
    return gens


def reduce_mod_ideal(p: CotangentPoly, ideal: SpectrumIdeal, rng: random.Random | None = None) -> CotangentPoly:
    """Normal form modulo the ideal: linear in the y_k (k != unit) with no y_unit.

    Monomials are rewritten highest degree first so that like terms merge;
    ``rng`` randomizes which pair y_i y_j is rewritten (the result does not
    depend on it for an associative commutative model).
    """
    F = ideal.model
    n, u, a = F.n, F.u, F.a
    work = {}

    def put(k, v):
        k = k[:u] + (0,) + k[u + 1:]
        if k in work:
            work[k] = work[k] + v
        else:
            work[k] = v

    for k, v in p.terms.items():
        put(k, v)
    done = {}
    while work:
        k = max(work, key=lambda e: (sum(e), e))
        v = work.pop(k)
        if v.is_zero():
            continue
        if sum(k) <= 1:
            done[k] = done[k] + v if k in done else v
            continue
        support = [i for i in range(n) for _ in range(k[i])]
        if rng is None:
            i, j = support[0], support[1]
        else:
            i, j = rng.sample(support, 2)
        base = list(k)
        base[i] -= 1
        base[j] -= 1
        for m in range(n):
            c = a[i][j][m]
            if c.is_zero():
                continue
            e = list(base)
            e[m] += 1
            put(tuple(e), v * c)
    return CotangentPoly(p.trunc, done)


@dataclass
class BracketWitness:
    first: CotangentPoly
    second: CotangentPoly
    bracket: CotangentPoly
    reduced: CotangentPoly

    def to_json(self) -> dict:
        return {"f": str(self.first), "g": str(self.second), "bracket": str(self.bracket), "reduced": str(self.reduced)}


@dataclass
class ClosureResult:
    closed: bool
    witnesses: list
    pairs_checked: int


def bracket_closure(F: FManifoldModel, ideal: SpectrumIdeal | None = None) -> ClosureResult:
    """Is the ideal closed under the Poisson bracket?  Nonzero reduced brackets are witnesses."""
    ideal = ideal or SpectrumIdeal(F)
    gens = ideal.generators
    wit = []
    count = 0
    for x in range(len(gens)):
        for y in range(x + 1, len(gens)):
            count += 1
            br = poisson(gens[x], gens[y])
            red = reduce_mod_ideal(br, ideal)
            if not red.is_zero():
                wit.append(BracketWitness(gens[x], gens[y], br, red))
    return ClosureResult(not wit, wit, count)


def reduce_mod_linear(p: CotangentPoly, values: dict) -> CotangentPoly:
    """Reduce modulo linear generators y_k - values[k] (0-based k)."""
    tr = p.trunc
    out = CotangentPoly(tr)
    for k, v in p.terms.items():
        term = CotangentPoly(tr, {tuple(0 if i in values else e for i, e in enumerate(k)): v})
        for i, e in enumerate(k):
            if i in values and e:
                term = term * (_as_series(values[i], tr) ** e)
        out = out + term
    return out


def trace_symmetry(H) -> list:
    """Antisymmetric array d_i rho_j - d_j rho_i with rho_i = tr(C_i)/r."""
    if H.C is None or H.Dconn is None:
        raise PreconditionError("package needs C and D")
    r = H.r
    rho = [C.trace().scale(Fraction(1, r)) for C in H.C]
    n = len(rho)
    return [[rho[j].dt(i) - rho[i].dt(j) for j in range(n)] for i in range(n)]


def _default_trunc(n, t_deg):
    return Truncation(z_max=0, t_deg=t_deg, n_vars=n)


def make_builtin(kind: str, *, n: int = 2, m: int = 3, g: str = "t2^2", t_deg: int | None = None) -> FManifoldModel:
    """Builtin models: 'A1n', 'I2', 'N2', 'Example214'.

    A1n uses coordinates whose first field is the unit and the others are
    idempotents e_2..e_n, so d_1 = e and E = sum t_i d_i.
    """
    if kind == "A1n":
        if n < 1:
            raise PreconditionError("n must be positive")
        tr = _default_trunc(n, t_deg or 6)
        ent = {}
        for j in range(1, n + 1):
            ent[(1, j, j)] = 1
            ent[(j, 1, j)] = 1
        for j in range(2, n + 1):
            ent[(j, j, j)] = 1
        euler = [f"t{i}" for i in range(1, n + 1)]
        return FManifoldModel.from_sparse(n, ent, tr, 1, euler, name=f"A1^{n}")
    if kind == "I2":
        if not isinstance(m, int) or m < 2:
            raise PreconditionError("I2(m) needs an integer m >= 2")
        tr = _default_trunc(2, t_deg or max(12, 3 * m))
        ent = {(1, 1, 1): 1, (1, 2, 2): 1, (2, 1, 2): 1, (2, 2, 1): f"t2^{m - 2}"}
        euler = ["t1", f"2/{m}*t2"]
        return FManifoldModel.from_sparse(2, ent, tr, 1, euler, name=f"I2({m})")
    if kind == "N2":
        tr = _default_trunc(2, t_deg or 12)
        gs = parse_series(g, tr) if isinstance(g, str) else g
        if not gs.dt(0).is_zero():
            raise PreconditionError("g must depend on t2 only")
        ent = {(1, 1, 1): 1, (1, 2, 2): 1, (2, 1, 2): 1}
        return FManifoldModel.from_sparse(2, ent, tr, 1, ["t1", gs], name="N2")
    if kind == "Example214":
        tr = _default_trunc(4, t_deg or 8)
        ent = {}
        for j in range(1, 5):
            ent[(1, j, j)] = 1
            ent[(j, 1, j)] = 1
        ent[(2, 2, 4)] = "t4^2"
        ent[(2, 3, 4)] = "t4"
        ent[(3, 2, 4)] = "t4"
        ent[(3, 3, 4)] = 1
        return FManifoldModel.from_sparse(4, ent, tr, 1, None, name="Example214")
    raise PreconditionError(f"unknown builtin {kind!r}")


def example214_ideal(F: FManifoldModel) -> SpectrumIdeal:
    """The printed presentation (y1-1, (y2-t4 y3)^2, (y2-t4 y3) y3, y3^3, y4-y3^2)."""
    tr = F.trunc
    texts = ["y1 - 1", "(y2 - t4*y3)^2", "(y2 - t4*y3)*y3", "y3^3", "y4 - y3^2"]
    return SpectrumIdeal(F, [CotangentPoly.parse(t, tr) for t in texts])


def example214_radical() -> dict:
    """Linear generators (y1 - 1, y2, y3, y4) of the radical, as substitutions."""
    return {0: 1, 1: 0, 2: 0, 3: 0}
