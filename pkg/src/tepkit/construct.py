"""Flat F-manifolds and Frobenius manifolds from pure (TL)-structures.

A pure structure in a basis v has A_i = C_i (z-free), B = B0 + z B1 and a
constant pairing P0.  A constant vector omega gives zeta = omega at z = 0;
when X -> C_X zeta is invertible, the vector fields X_j with C_{X_j} zeta = v_j
are flat for the pulled back connection, and their coordinates are the
flat coordinates.  Everything below is computed in the ring of z-free
series in the original coordinates t and then expressed in the flat
coordinates by composing with the inverse coordinate change.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .algebra import (MatrixSeries, RationalComplex, Truncation, TruncatedSeries, compose, constant_inverse,
                      homotopy_integral)
from .connection import ConnectionStructure, pure_tl_check
from .errors import PreconditionError
from .fmanifold import FManifoldModel, euler_residual, integrability_residual, tensor_checks, verify_algebra
from .report import Check, Report


def free_truncation(tr: Truncation) -> Truncation:
    return Truncation(z_max=0, t_deg=tr.t_deg, n_vars=tr.n_vars)


@dataclass(frozen=True)
class PureStructure:
    """Data of a pure (TL)-structure with z-free matrices in the truncation ``trunc``."""

    kind: str
    A0: tuple
    B0: MatrixSeries | None = None
    B1: MatrixSeries | None = None
    P0: MatrixSeries | None = None
    w: int | None = None

    @property
    def n(self) -> int:
        return len(self.A0)

    @property
    def r(self) -> int:
        return self.A0[0].r

    @property
    def trunc(self) -> Truncation:
        return self.A0[0].trunc

    @classmethod
    def from_connection(cls, S: ConnectionStructure) -> "PureStructure":
        rep = pure_tl_check(S)
        if not rep.ok:
            bad = rep.failures()[0]
            raise PreconditionError(f"not a pure (TL) structure: {bad.label} {bad.witness}")
        tr = free_truncation(S.trunc)
        co = lambda M, k: M.z_coefficient(k).retruncate(tr)
        A0 = tuple(co(M, 0) for M in S.A)
        B0 = B1 = P0 = None
        if S.B is not None:
            B0, B1 = co(S.B, 0), co(S.B, 1)
        if S.P is not None:
            P0 = co(S.P, 0)
        return cls(S.kind, A0, B0, B1, P0, S.w)


@dataclass(frozen=True)
class PrimitiveChoice:
    """omega as a constant coefficient vector in the frame."""

    omega: tuple

    def __post_init__(self):
        object.__setattr__(self, "omega", tuple(RationalComplex.coerce(x) for x in self.omega))

    @classmethod
    def parse(cls, text: str) -> "PrimitiveChoice":
        return cls(tuple(RationalComplex.parse(x.strip()) for x in text.split(",")))


def _const_vec(values, tr):
    return [TruncatedSeries.constant(x, tr) for x in values]


def primitive_matrix(PS: PureStructure, pc: PrimitiveChoice) -> MatrixSeries:
    """Z with columns C_i zeta."""
    if len(pc.omega) != PS.r:
        raise PreconditionError(f"omega needs {PS.r} entries")
    if PS.r != PS.n:
        raise PreconditionError("a primitive section needs rank = dimension")
    zeta = _const_vec(pc.omega, PS.trunc)
    cols = [A.apply(zeta) for A in PS.A0]
    Z = MatrixSeries([[cols[i][k] for i in range(PS.n)] for k in range(PS.r)], PS.trunc)
    try:
        constant_inverse(Z.constant_part())
    except ZeroDivisionError:
        raise PreconditionError("omega is not primitive: C_.zeta is singular at t = 0") from None
    return Z


def induced_multiplication(PS: PureStructure, pc: PrimitiveChoice) -> FManifoldModel:
    """Multiplication, unit and Euler field in the original coordinates."""
    Z = primitive_matrix(PS, pc)
    Zi = Z.inverse()
    tr = PS.trunc
    zeta = _const_vec(pc.omega, tr)
    n = PS.n
    a = [[None] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            a[i][j] = Zi.apply((PS.A0[i] @ PS.A0[j]).apply(zeta))
    unit = Zi.apply(zeta)
    euler = None
    if PS.B0 is not None:
        euler = Zi.apply([-x for x in PS.B0.apply(zeta)])
    unit_index, unit_vec = _unit_slot(unit)
    return FManifoldModel(n, a, unit_index, euler, "induced", unit_vec)


def _unit_slot(unit):
    """(unit_index, None) when the unit is a coordinate field, else (1, unit)."""
    for u in range(len(unit)):
        if all((x - int(k == u)).is_zero() for k, x in enumerate(unit)):
            return u + 1, None
    return 1, unit


@dataclass
class FlatFOutput:
    model: FManifoldModel
    unit: tuple
    euler: tuple | None
    d: RationalComplex | None
    metric: list | None
    Q: list | None
    w: int | None
    flat_coordinates: tuple
    inverse_coordinates: tuple
    flat_fields: MatrixSeries
    report: Report
    notes: list = field(default_factory=list)

    @property
    def n(self) -> int:
        return self.model.n

    @property
    def connection_matrices(self):
        """The flat connection in the flat frame: all zero."""
        tr = self.model.trunc
        return [MatrixSeries.zero(self.n, tr) for _ in range(self.n)]

    def to_json(self) -> dict:
        d = {"model": self.model.to_json(), "unit": [str(x) for x in self.unit],
             "flat_coordinates": [str(x) for x in self.flat_coordinates],
             "inverse_coordinates": [str(x) for x in self.inverse_coordinates],
             "checks": self.report.to_json()}
        if self.euler is not None:
            d["euler"] = [str(x) for x in self.euler]
            d["d"] = str(self.d)
        if self.metric is not None:
            d["metric"] = [[str(x) for x in row] for row in self.metric]
            d["w"] = self.w
        if self.notes:
            d["notes"] = list(self.notes)
        return d


def inverse_coordinates(phi, tr: Truncation):
    """psi with phi(psi(s)) = s for a coordinate change phi fixing 0 with invertible linear part."""
    n = len(phi)
    L = [[phi[j].coefficient(0, tuple(int(k == i) for k in range(n))) for i in range(n)] for j in range(n)]
    try:
        Li = constant_inverse(L)
    except ZeroDivisionError:
        raise PreconditionError("coordinate change is not invertible at 0") from None
    svar = [TruncatedSeries.variable(f"t{i + 1}", tr) for i in range(n)]
    h = []
    for j in range(n):
        lin = sum((svar[i].scale(L[j][i]) for i in range(n)), TruncatedSeries.zero(tr))
        h.append(phi[j] - lin)
    lin_inv = lambda vec: [sum((vec[i].scale(Li[j][i]) for i in range(n)), TruncatedSeries.zero(tr)) for j in range(n)]
    psi = lin_inv(svar)
    for _ in range(tr.t_deg + 1):
        nxt = lin_inv([svar[j] - compose(h[j], psi) for j in range(n)])
        if all((a - b).is_zero() for a, b in zip(nxt, psi)):
            break
        psi = nxt
    return psi


def build_flat_f(PS: PureStructure, pc: PrimitiveChoice, euler: bool | None = None,
                 metric: bool | None = None) -> FlatFOutput:
    """Flat structure constants, unit, Euler field and metric in flat coordinates, with checks.

    ``euler`` and ``metric``: None means include when the structure carries
    B (resp. P), True makes the absence an error, False drops it.  With B
    present, an omega that is not a Q-eigenvector is an error.
    """
    tr = PS.trunc
    n = PS.n
    rep = Report()
    notes = []
    Z = primitive_matrix(PS, pc)
    Phi = Z.inverse()
    rep.add(Check("6.1", True, None, "C_.zeta invertible at t = 0"))
    for j in range(n):
        for i in range(n):
            for k in range(i + 1, n):
                rep.add(Check.zero(f"3.1[torsion;{j + 1},{i + 1},{k + 1}]", Z[j, i].dt(k) - Z[j, k].dt(i),
                                   "flat fields commute"))
    phi = [homotopy_integral([Z[j, i] for i in range(n)]) for j in range(n)]
    psi = inverse_coordinates(phi, tr)
    sub = lambda f: compose(f, psi)
    # C of the flat field X_i acting on the frame
    CX = []
    for i in range(n):
        acc = None
        for l in range(n):
            term = PS.A0[l] * Phi[l, i]
            acc = term if acc is None else acc + term
        CX.append(acc)
    a = [[[sub(CX[i][k, j]) for k in range(n)] for j in range(n)] for i in range(n)]
    unit = [TruncatedSeries.constant(x, tr) for x in pc.omega]

    want_euler = PS.B0 is not None and euler is not False
    if euler and PS.B0 is None:
        raise PreconditionError("Euler output requested but the structure has no B")
    d = None
    Qc = None
    E = None
    if want_euler:
        Qc = [[-x for x in row] for row in PS.B1.constant_part()]
        if not _is_constant(PS.B1):
            raise PreconditionError("B^(1) is not constant")
        Qz = [sum((Qc[k][l] * pc.omega[l] for l in range(n)), RationalComplex(0)) for k in range(n)]
        lam = _eigenvalue(Qz, pc.omega)
        if lam is None:
            raise PreconditionError("omega is not an eigenvector of Q = -B^(1); pass euler=False to skip E")
        else:
            d = lam * 2
            rep.add(Check("6.3", True, None, f"Q zeta = {lam} zeta"))
    if want_euler:
        zeta = _const_vec(pc.omega, tr)
        E = [sub(x) for x in [-y for y in PS.B0.apply(zeta)]]
    unit_index, unit_vec = _unit_slot(unit)
    model = FManifoldModel(n, a, unit_index, E, "flat", unit_vec)
    model = _retrunc_model(model, free_truncation(tr))
    a, E = model.a, model.euler
    unit = list(model.unit_field())

    rep.extend(verify_algebra(model).checks)
    rep.extend(tensor_checks(integrability_residual(model), "2.1"))
    for i in range(n):
        for k in range(n):
            rep.add(Check.zero(f"3.1[e;{i + 1},{k + 1}]", unit[k].dt(i), "D(e) = 0"))
    for i in range(n):
        for j in range(i + 1, n):
            for k in range(n):
                for l in range(n):
                    rep.add(Check.zero(f"3.6[{i + 1},{j + 1};{k + 1},{l + 1}]", a[j][k][l].dt(i) - a[i][k][l].dt(j)))
    if E is not None:
        rep.extend(tensor_checks(euler_residual(model), "2.1[E]"))
        J = [[E[j].dt(i) for i in range(n)] for j in range(n)]
        shift = (2 - d) / 2
        for j in range(n):
            for i in range(n):
                rep.add(Check.zero(f"6.5[{j + 1},{i + 1}]", J[j][i] - Qc[j][i] - (shift if i == j else 0)))
                for k in range(n):
                    rep.add(Check.zero(f"3.1[DE;{j + 1},{i + 1},{k + 1}]", J[j][i].dt(k), "D_.E flat"))

    g = None
    if metric and PS.P0 is None:
        raise PreconditionError("metric requested but the structure has no pairing")
    if PS.P0 is not None and metric is not False:
        g = PS.P0.constant_part()
        if not _is_constant(PS.P0):
            raise PreconditionError("P^(0) is not constant")
        ft = free_truncation(tr)
        gs = [[TruncatedSeries.constant(x, ft) for x in row] for row in g]
        for i in range(n):
            for j in range(n):
                rep.add(Check.zero(f"3.4[sym;{i + 1},{j + 1}]", gs[i][j] - gs[j][i]))
                for k in range(n):
                    lhs = sum((a[i][j][l] * gs[l][k] for l in range(n)), TruncatedSeries.zero(ft))
                    rhs = sum((a[j][k][l] * gs[i][l] for l in range(n)), TruncatedSeries.zero(ft))
                    rep.add(Check.zero(f"3.4[{i + 1},{j + 1},{k + 1}]", lhs - rhs))
        if E is not None:
            J = [[E[j].dt(i) for i in range(n)] for j in range(n)]
            Qw = [[Qc[i][j] + (Fraction(PS.w, 2) if i == j else 0) for j in range(n)] for i in range(n)]
            for i in range(n):
                for j in range(n):
                    lie = sum((J[k][i] * gs[k][j] + J[k][j] * gs[i][k] for k in range(n)), TruncatedSeries.zero(ft))
                    lie = lie + sum((E[k] * gs[i][j].dt(k) for k in range(n)), TruncatedSeries.zero(ft))
                    rep.add(Check.zero(f"3.5[{i + 1},{j + 1}]", lie - gs[i][j] * (2 - d - PS.w), "Lie_E g = (2-d-w) g"))
                    anti = sum((Qw[k][i] * g[k][j] + g[i][k] * Qw[k][j] for k in range(n)), RationalComplex(0))
                    rep.add(Check.zero(f"5.12[{i + 1},{j + 1}]", TruncatedSeries.constant(anti, ft)))

    ft = free_truncation(tr)
    flat_fields = Phi.retruncate(ft)
    return FlatFOutput(model, tuple(unit), None if E is None else tuple(E), d, g,
                       Qc, PS.w if g is not None else None,
                       tuple(x.retruncate(ft) for x in phi), tuple(x.retruncate(ft) for x in psi),
                       flat_fields, rep, notes)


def _is_constant(M: MatrixSeries) -> bool:
    return (M - MatrixSeries.from_constant(M.constant_part(), M.trunc)).is_zero()


def _eigenvalue(Qv, v):
    """lam with Qv = lam v, or None."""
    lam = None
    for x, y in zip(Qv, v):
        if y.is_zero():
            if not x.is_zero():
                return None
            continue
        cand = x / y
        if lam is None:
            lam = cand
        elif cand != lam:
            return None
    return lam


def _retrunc_model(F: FManifoldModel, tr: Truncation) -> FManifoldModel:
    rt = lambda v: None if v is None else [x.retruncate(tr) for x in v]
    a = [[[x.retruncate(tr) for x in c] for c in row] for row in F.a]
    return FManifoldModel(F.n, a, F.unit_index, rt(F.euler), F.name, rt(F.unit))


@dataclass
class VectorPotential:
    c: tuple
    report: Report


def vector_potential(F: FlatFOutput) -> VectorPotential:
    """c^l with d_i d_j c^l = a_ij^l, zero integration constants."""
    M = F.model
    n = M.n
    a = M.a
    rep = Report()
    for i in range(n):
        for j in range(i + 1, n):
            for k in range(n):
                for l in range(n):
                    rep.add(Check.zero(f"3.6[{i + 1},{j + 1};{k + 1},{l + 1}]", a[j][k][l].dt(i) - a[i][k][l].dt(j)))
    if not rep.ok:
        bad = rep.failures()[0]
        raise PreconditionError(f"structure constants are not potential: {bad.label} {bad.witness}")
    b = [[homotopy_integral([a[i][k][l] for i in range(n)]) for l in range(n)] for k in range(n)]
    for k in range(n):
        for i in range(k + 1, n):
            for l in range(n):
                rep.add(Check.zero(f"3.7[{i + 1},{k + 1};{l + 1}]", b[k][l].dt(i) - b[i][l].dt(k)))
    c = [homotopy_integral([b[k][l] for k in range(n)]) for l in range(n)]
    for i in range(n):
        for j in range(n):
            for l in range(n):
                rep.add(Check.zero(f"3.2(iv)[{i + 1},{j + 1};{l + 1}]", c[l].dt(j).dt(i) - a[i][j][l],
                                   "d_i o d_j = [d_i, [d_j, sum c^l d_l]]"))
    return VectorPotential(tuple(c), rep)


@dataclass
class Potential:
    F: TruncatedSeries
    report: Report


def potential(F: FlatFOutput, vp: VectorPotential | None = None) -> Potential:
    """F with d_i d_j d_k F = g(d_i o d_j, d_k), zero integration constants."""
    if F.metric is None:
        raise PreconditionError("potential needs a metric")
    vp = vp or vector_potential(F)
    M = F.model
    n = M.n
    tr = M.trunc
    g = F.metric
    h = [sum((vp.c[l].scale(g[l][k]) for l in range(n)), TruncatedSeries.zero(tr)) for k in range(n)]
    rep = Report()
    for k in range(n):
        for m in range(k + 1, n):
            rep.add(Check.zero(f"3.8[closed;{k + 1},{m + 1}]", h[k].dt(m) - h[m].dt(k)))
    Fpot = homotopy_integral(h)
    for i in range(n):
        for j in range(i, n):
            for k in range(j, n):
                lhs = Fpot.dt(i).dt(j).dt(k)
                rhs = sum((M.a[i][j][l].scale(g[l][k]) for l in range(n)), TruncatedSeries.zero(tr))
                rep.add(Check.zero(f"3.8[{i + 1},{j + 1},{k + 1}]", lhs - rhs))
    return Potential(Fpot, rep)
