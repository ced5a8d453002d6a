"""Connection matrices of (T)/(TE)/(TP)/(TEP)-structures in a chosen basis.

With respect to a basis v the connection reads

    nabla v = v * (sum_i z^-1 A_i dt_i + z^-2 B dz),

and the pairing is recorded as the matrix P of z^-w P(v^t, v).  All
matrices are MatrixSeries in one nonnegative truncation.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from .algebra import (MatrixSeries, ParseError, Truncation, TruncatedSeries, commutator, constant_inverse,
                      divide_by_degree)
from .algebra.linalg import is_zero_matrix
from .errors import InconsistentSystem, PreconditionError
from .report import Check, Report, describe_witness

KINDS = ("T", "TE", "TP", "TEP")


@dataclass(frozen=True)
class ConnectionStructure:
    kind: str
    A: tuple
    B: MatrixSeries | None = None
    w: int | None = None
    P: MatrixSeries | None = None

    def __post_init__(self):
        object.__setattr__(self, "A", tuple(self.A))
        if self.kind not in KINDS:
            raise PreconditionError(f"unknown kind {self.kind!r}")
        if not self.A:
            raise PreconditionError("need at least one matrix A_i")
        if (self.B is not None) != self.has_euler:
            raise PreconditionError(f"kind {self.kind} and presence of B disagree")
        if (self.P is not None) != self.has_pairing or (self.w is not None) != self.has_pairing:
            raise PreconditionError(f"kind {self.kind} and presence of (w, P) disagree")
        tr = self.A[0].trunc
        r = self.A[0].r
        if tr.z_min != 0:
            raise PreconditionError("connection matrices need a truncation with z_min = 0")
        if tr.n_vars != len(self.A):
            raise PreconditionError(f"{len(self.A)} matrices A_i but n_vars = {tr.n_vars}")
        for M in self.matrices():
            if M.trunc != tr or M.r != r:
                raise PreconditionError("all matrices must share size and truncation")

    @property
    def has_euler(self) -> bool:
        return self.kind in ("TE", "TEP")

    @property
    def has_pairing(self) -> bool:
        return self.kind in ("TP", "TEP")

    @property
    def n(self) -> int:
        return len(self.A)

    @property
    def r(self) -> int:
        return self.A[0].r

    @property
    def trunc(self) -> Truncation:
        return self.A[0].trunc

    def matrices(self):
        out = list(self.A)
        if self.B is not None:
            out.append(self.B)
        if self.P is not None:
            out.append(self.P)
        return out

    def replace(self, **kw) -> "ConnectionStructure":
        return replace(self, **kw)

    def as_kind(self, kind: str) -> "ConnectionStructure":
        """Forget B and/or the pairing."""
        keep_b = kind in ("TE", "TEP")
        keep_p = kind in ("TP", "TEP")
        if (keep_b and self.B is None) or (keep_p and self.P is None):
            raise PreconditionError(f"cannot promote kind {self.kind} to {kind}")
        return ConnectionStructure(kind, self.A, self.B if keep_b else None,
                                   self.w if keep_p else None, self.P if keep_p else None)

    def retruncate(self, trunc: Truncation) -> "ConnectionStructure":
        f = lambda M: None if M is None else M.retruncate(trunc)
        return ConnectionStructure(self.kind, [M.retruncate(trunc) for M in self.A], f(self.B), self.w, f(self.P))

    def pairing_checks(self) -> list:
        """P^(k) transposed equals (-1)^k P^(k), and P^(0) is invertible at t = 0."""
        if self.P is None:
            return []
        out = [Check.zero("4.14", self.P.transpose() - self.P.flip_z(), "P(z)^t = P(-z)")]
        try:
            constant_inverse(self.P.constant_part())
            out.append(Check("4.14", True, None, "P^(0)(0) invertible"))
        except ZeroDivisionError:
            out.append(Check("4.14", False, "P^(0)(0) singular", "P^(0)(0) invertible"))
        return out

    def to_json(self) -> dict:
        d = {"kind": self.kind, "n": self.n, "r": self.r, "truncation": self.trunc.to_json(),
             "A": [M.to_json() for M in self.A]}
        if self.B is not None:
            d["B"] = self.B.to_json()
        if self.P is not None:
            d["w"] = self.w
            d["P"] = self.P.to_json()
        return d

    @classmethod
    def from_json(cls, d: dict, params=None, trunc: Truncation | None = None) -> "ConnectionStructure":
        """Load the connection.json layout; string entries are parsed as series literals."""
        from .algebra.parse import parse_series

        if not isinstance(d, dict):
            raise ParseError("connection document must be a JSON object")
        try:
            kind = d["kind"]
            n = int(d["n"])
            r = int(d["r"])
            if trunc is None:
                tj = d.get("truncation", {})
                trunc = Truncation(z_max=int(tj.get("z_max", 8)), t_deg=int(tj.get("t_deg", 12)), n_vars=n,
                                   uses_s=bool(tj.get("uses_s", False)))
            allp = dict(d.get("params", {}))
            allp.update(params or {})

            def mat(data):
                if not isinstance(data, list) or len(data) != r or any(len(row) != r for row in data):
                    raise ParseError(f"matrix must be {r}x{r}")
                return MatrixSeries([[parse_series(x, trunc, allp) if isinstance(x, str)
                                      else TruncatedSeries.from_json(x, trunc) for x in row] for row in data], trunc)

            A = [mat(x) for x in d["A"]]
            if len(A) != n:
                raise ParseError(f"expected {n} matrices A_i")
            B = mat(d["B"]) if d.get("B") is not None else None
            P = mat(d["P"]) if d.get("P") is not None else None
            w = int(d["w"]) if d.get("w") is not None else None
        except ParseError:
            raise
        except (KeyError, TypeError, ValueError) as e:
            if isinstance(e, PreconditionError):
                raise
            raise ParseError(f"malformed connection document: {e}") from None
        return cls(kind, A, B, w, P)


@dataclass(frozen=True)
class GaugeTransform:
    """Base change v -> v*T."""

    T: MatrixSeries
    inverse: MatrixSeries = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.T.trunc.z_min != 0:
            raise PreconditionError("gauge matrices need nonnegative z-powers")
        if self.inverse is None:
            try:
                inv = self.T.inverse()
            except ZeroDivisionError:
                raise PreconditionError("gauge matrix has singular T^(0)(0)") from None
            object.__setattr__(self, "inverse", inv)

    @classmethod
    def identity(cls, r: int, trunc: Truncation) -> "GaugeTransform":
        one = MatrixSeries.identity(r, trunc)
        return cls(one, one)

    def compose(self, other: "GaugeTransform") -> "GaugeTransform":
        """First self, then other: v -> v*T1*T2."""
        return GaugeTransform(self.T @ other.T, other.inverse @ self.inverse)

    def is_identity(self) -> bool:
        return self.T == MatrixSeries.identity(self.T.r, self.T.trunc)

    def to_json(self):
        return self.T.to_json()


@dataclass(frozen=True)
class Residual:
    label: str
    value: MatrixSeries

    @property
    def ok(self) -> bool:
        return self.value.is_zero()

    def check(self) -> Check:
        zr, tr, wr = self.value.window
        win = f"window z<={zr}, deg<={tr}" + ("" if wr is None else f", z+deg<={wr}")
        return Check(self.label, self.ok, describe_witness(self.value), win)


def _zd(M: MatrixSeries, i: int) -> MatrixSeries:
    return M.dt(i).shift_z(1)


def flatness_residuals(S: ConnectionStructure) -> list:
    """Residuals of the flatness and pairing equations, labelled by equation."""
    out = []
    A = S.A
    for i in range(S.n):
        for j in range(i + 1, S.n):
            out.append(Residual(f"4.15[{i + 1},{j + 1}]", _zd(A[j], i) - _zd(A[i], j) + commutator(A[i], A[j])))
    if S.B is not None:
        B = S.B
        for i in range(S.n):
            val = _zd(B, i) - A[i].dz().shift_z(2) + A[i].shift_z(1) + commutator(A[i], B)
            out.append(Residual(f"4.16[{i + 1}]", val))
    if S.P is not None:
        P = S.P
        for i in range(S.n):
            val = _zd(P, i) - (A[i].transpose() @ P - P @ A[i].flip_z())
            out.append(Residual(f"4.19[{i + 1}]", val))
        if S.B is not None:
            val = P.dz().shift_z(2) + P.shift_z(1) * S.w - (S.B.transpose() @ P - P @ S.B.flip_z())
            out.append(Residual("4.20", val))
    return out


def is_flat(S: ConnectionStructure) -> bool:
    return all(r.ok for r in flatness_residuals(S))


def coefficient_equations(S: ConnectionStructure, k: int) -> dict:
    """The z^k splits of the flatness equations, summed term by term."""
    A = S.A
    co = lambda M, l: M.z_coefficient(l)
    zero = MatrixSeries.zero(S.r, S.trunc)
    out = {}
    for i in range(S.n):
        for j in range(i + 1, S.n):
            v = zero
            if k >= 1:
                v = co(A[j], k - 1).dt(i) - co(A[i], k - 1).dt(j)
            for l in range(k + 1):
                v = v + commutator(co(A[i], l), co(A[j], k - l))
            out[f"4.17[{i + 1},{j + 1}]"] = v
    if S.B is not None:
        for i in range(S.n):
            v = zero
            if k >= 1:
                v = co(S.B, k - 1).dt(i) - co(A[i], k - 1) * (k - 2)
            for l in range(k + 1):
                v = v + commutator(co(A[i], l), co(S.B, k - l))
            out[f"4.18[{i + 1}]"] = v
    if S.P is not None:
        P = S.P
        for i in range(S.n):
            v = co(P, k - 1).dt(i) if k >= 1 else zero
            for l in range(k + 1):
                sign = -1 if l % 2 else 1
                v = v - (co(A[i], l).transpose() @ co(P, k - l) - (co(P, k - l) @ co(A[i], l)) * sign)
            out[f"4.21[{i + 1}]"] = v
        if S.B is not None:
            v = co(P, k - 1) * (k - 1 + S.w) if k >= 1 else zero
            for l in range(k + 1):
                sign = -1 if l % 2 else 1
                v = v - (co(S.B, l).transpose() @ co(P, k - l) - (co(P, k - l) @ co(S.B, l)) * sign)
            out["4.22"] = v
    return out


def apply_gauge(S: ConnectionStructure, G: GaugeTransform) -> ConnectionStructure:
    """Matrices of the same structure in the basis v*T."""
    T = G.T
    Ti = G.inverse
    if T.trunc != S.trunc or T.r != S.r:
        raise PreconditionError("gauge and structure differ in size or truncation")
    A = [Ti @ (_zd(T, i) + S.A[i] @ T) for i in range(S.n)]
    B = None if S.B is None else Ti @ (T.dz().shift_z(2) + S.B @ T)
    P = None if S.P is None else T.transpose() @ S.P @ T.flip_z()
    return ConnectionStructure(S.kind, A, B, S.w, P)


def gauge_equation_residuals(S: ConnectionStructure, S2: ConnectionStructure, G: GaugeTransform) -> list:
    """z d_i T + A_i T - T A~_i (and the B, P analogues) for a claimed isomorphism."""
    T = G.T
    out = [Residual(f"4.25[{i + 1}]", _zd(T, i) + S.A[i] @ T - T @ S2.A[i]) for i in range(S.n)]
    if S.B is not None and S2.B is not None:
        out.append(Residual("4.26", T.dz().shift_z(2) + S.B @ T - T @ S2.B))
    if S.P is not None and S2.P is not None:
        out.append(Residual("4.24", T.transpose() @ S.P @ T.flip_z() - S2.P))
    return out


@dataclass(frozen=True)
class HiggsPackage:
    """Induced data on K = H|_{z=0} in matrix form."""

    kind: str
    C: tuple
    Dconn: tuple
    U: MatrixSeries | None = None
    Q: MatrixSeries | None = None
    g: MatrixSeries | None = None
    g1: MatrixSeries | None = None
    w: int | None = None

    @property
    def n(self) -> int:
        return len(self.C)

    @property
    def r(self) -> int:
        return self.C[0].r

    def invariants(self) -> list:
        C, D, U, Q, g, g1 = self.C, self.Dconn, self.U, self.Q, self.g, self.g1
        out = []
        for i in range(self.n):
            for j in range(i + 1, self.n):
                out.append(Residual(f"4.30[{i + 1},{j + 1}]", commutator(C[i], C[j])))
        if U is not None:
            for i in range(self.n):
                out.append(Residual(f"4.31[{i + 1}]", commutator(C[i], U)))
        if g is not None:
            out.append(Residual("4.32[sym]", g.transpose() - g))
            for i in range(self.n):
                out.append(Residual(f"4.32[{i + 1}]", C[i].transpose() @ g - g @ C[i]))
            if U is not None:
                out.append(Residual("4.33", U.transpose() @ g - g @ U))
        for i in range(self.n):
            for j in range(i + 1, self.n):
                val = C[j].dt(i) - C[i].dt(j) + commutator(C[i], D[j]) + commutator(D[i], C[j])
                out.append(Residual(f"4.34[{i + 1},{j + 1}]", val))
        if U is not None:
            for i in range(self.n):
                val = U.dt(i) + C[i] - commutator(C[i], Q) + commutator(D[i], U)
                out.append(Residual(f"4.35[{i + 1}]", val))
        if g is not None:
            out.append(Residual("4.36[skew]", g1.transpose() + g1))
            for i in range(self.n):
                val = g.dt(i) - (C[i].transpose() @ g1 - g1 @ C[i] + D[i].transpose() @ g + g @ D[i])
                out.append(Residual(f"4.36[{i + 1}]", val))
            if U is not None:
                val = g * self.w - (U.transpose() @ g1 - g1 @ U - Q.transpose() @ g - g @ Q)
                out.append(Residual("4.37", val))
        return out


def extract_higgs(S: ConnectionStructure) -> HiggsPackage:
    co = lambda M, k: None if M is None else M.z_coefficient(k)
    return HiggsPackage(
        kind=S.kind,
        C=tuple(co(M, 0) for M in S.A),
        Dconn=tuple(co(M, 1) for M in S.A),
        U=co(S.B, 0),
        Q=None if S.B is None else -co(S.B, 1),
        g=co(S.P, 0),
        g1=co(S.P, 1),
        w=S.w,
    )


def pure_tl_check(S: ConnectionStructure) -> Report:
    """Pass/fail for the pure (TL) pattern and its equations."""
    rep = Report()
    A0 = [M.z_coefficient(0) for M in S.A]
    for i, M in enumerate(S.A):
        rep.add(Check.zero(f"5.1[A{i + 1}]", M.map(lambda a: a.z_part(lo=1)), "A_i = A_i^(0)"))
    for i in range(S.n):
        for j in range(i + 1, S.n):
            rep.add(Check.zero(f"5.2[{i + 1},{j + 1}]", commutator(A0[i], A0[j])))
            rep.add(Check.zero(f"5.3[{i + 1},{j + 1}]", A0[j].dt(i) - A0[i].dt(j)))
    if S.B is not None:
        B0, B1 = S.B.z_coefficient(0), S.B.z_coefficient(1)
        rep.add(Check.zero("5.1[B]", S.B.map(lambda a: a.z_part(lo=2)), "B = B^(0) + z B^(1)"))
        for i in range(S.n):
            rep.add(Check.zero(f"5.4[{i + 1}]", commutator(A0[i], B0)))
            rep.add(Check.zero(f"5.5[{i + 1}]", B0.dt(i) + A0[i] + commutator(A0[i], B1)))
            rep.add(Check.zero(f"5.6[{i + 1}]", B1.dt(i)))
    if S.P is not None:
        P0 = S.P.z_coefficient(0)
        rep.add(Check.zero("5.7", S.P.map(lambda a: a.z_part(lo=1)), "P = P^(0)"))
        for i in range(S.n):
            rep.add(Check.zero(f"5.8[{i + 1}]", A0[i].transpose() @ P0 - P0 @ A0[i]))
            rep.add(Check.zero(f"5.9[{i + 1}]", P0.dt(i)))
        if S.B is not None:
            B0, B1 = S.B.z_coefficient(0), S.B.z_coefficient(1)
            rep.add(Check.zero("5.10", B0.transpose() @ P0 - P0 @ B0))
            rep.add(Check.zero("5.11", B1.transpose() @ P0 + P0 @ B1 - P0 * S.w))
    return rep


@dataclass(frozen=True)
class RigidityResult:
    gauge: GaugeTransform
    identity_forced: bool


def rigidity_solve(S: ConnectionStructure, S2: ConnectionStructure, t0: MatrixSeries | None = None) -> RigidityResult:
    """Solve z d_i T + A_i T - T A~_i = 0 for T with prescribed T|_{t=0}.

    Both inputs must have z-independent A_i.  Writing T = sum_k z^k T^(k),
    the z^(k+1) equation says d_i T^(k) = -(A_i T^(k+1) - T^(k+1) A~_i), so
    T^(k) in t-degree d is fixed by T^(k+1) in degree d-1: going through
    total order k+d, larger k first, everything is determined by T at t=0.
    The default T|_{t=0} = 1 (treated as a polynomial in z) forces T = 1.
    """
    for X in (S, S2):
        for M in X.A:
            if not M.map(lambda a: a.z_part(lo=1)).is_zero():
                raise PreconditionError("rigidity_solve needs pure (TL) inputs with z-independent A_i")
    if S.trunc != S2.trunc or S.r != S2.r or S.n != S2.n:
        raise PreconditionError("structures differ in shape or truncation")
    tr = S.trunc
    r = S.r
    A = [M.z_coefficient(0) for M in S.A]
    A2 = [M.z_coefficient(0) for M in S2.A]
    if t0 is None:
        t0 = MatrixSeries.identity(r, tr)
    if not (t0 - t0.at_t0()).is_zero():
        raise PreconditionError("T|_{t=0} must not depend on t")
    top = tr.z_max + tr.t_deg
    start = [t0.z_coefficient(k) if k <= tr.z_max else MatrixSeries.zero(r, tr) for k in range(top + 2)]
    coeffs = [None] * (top + 2)
    coeffs[top + 1] = start[top + 1]
    for k in range(top, -1, -1):
        nxt = coeffs[k + 1]
        if nxt.is_zero():
            coeffs[k] = start[k]
            continue
        # Euler's formula for each homogeneous piece: T_d = (1/d) sum_i t_i d_i T_d
        rhs = [-(A[i] @ nxt - nxt @ A2[i]) for i in range(S.n)]
        acc = None
        for i in range(S.n):
            term = rhs[i].map(lambda a, i=i: a.mul_t(i))
            acc = term if acc is None else acc + term
        integrated = acc.map(_divide_by_degree)
        coeffs[k] = start[k] + integrated
    T = coeffs[0]
    for k in range(1, tr.z_max + 1):
        T = T + coeffs[k].shift_z(k)
    try:
        G = GaugeTransform(T)
    except PreconditionError:
        raise InconsistentSystem("solution has singular T^(0)(0)") from None
    bad = [res for res in gauge_equation_residuals(S, S2, G) if not res.ok]
    if bad:
        raise InconsistentSystem(f"no isomorphism with this normalization: {bad[0].label} {describe_witness(bad[0].value)}")
    return RigidityResult(G, G.is_identity())


def _divide_by_degree(a: TruncatedSeries) -> TruncatedSeries:
    try:
        return divide_by_degree(a)
    except ValueError:
        raise InconsistentSystem("degree-zero term in an integrated coefficient") from None
