"""(TE)-structures over the F-manifold I2(m): normal forms, exponents, pairings, flat model.

Matrices use the basis C1 = 1, C2 = [[0, t2^(m-2)], [1, 0]], D = diag(1, -1),
E = [[0, 1], [0, 0]]; the Euler field is t1 d1 + (2/m) t2 d2.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .algebra import (MatrixSeries, RationalComplex, Truncation, TruncatedSeries, constant_inverse, exp_series,
                      parse_series)
from .algebra.linalg import nullspace
from .connection import (ConnectionStructure, GaugeTransform, apply_gauge, flatness_residuals, coefficient_equations,
                         Residual)
from .construct import PrimitiveChoice, PureStructure, build_flat_f, vector_potential, FlatFOutput
from .errors import InconsistentSystem, PreconditionError
from .report import Check, Report


def _check_m(m):
    if not isinstance(m, int) or isinstance(m, bool):
        raise PreconditionError("m must be an integer")
    if m == 2:
        raise PreconditionError("m = 2 is excluded: I2(2) is not irreducible")
    if m < 3:
        raise PreconditionError("m must be at least 3")


@dataclass(frozen=True)
class I2mNormalForm:
    m: int
    alpha: RationalComplex
    lam: RationalComplex = RationalComplex(0)

    def __post_init__(self):
        _check_m(self.m)
        object.__setattr__(self, "alpha", RationalComplex.coerce(self.alpha))
        object.__setattr__(self, "lam", RationalComplex.coerce(self.lam))
        if self.m % 2 and not self.lam.is_zero():
            raise PreconditionError("lambda must vanish for odd m")

    def to_json(self) -> dict:
        return {"m": self.m, "alpha": str(self.alpha), "lambda": None if self.m % 2 else str(self.lam)}


@dataclass(frozen=True)
class ExponentData:
    m: int
    exponents: tuple
    B_tilde: MatrixSeries | None = None
    report: Report | None = None

    def to_json(self) -> dict:
        d = {"m": self.m, "exponents": [str(x) for x in self.exponents]}
        if self.report is not None:
            d["checks"] = self.report.to_json()
        return d


def default_truncation(m: int, z_max: int = 8, t_deg: int = 12) -> Truncation:
    return Truncation(z_max=z_max, t_deg=t_deg, n_vars=2)


def normalize_truncation(m: int) -> Truncation:
    """Smallest box in which normalize reads (alpha, lambda) after a generic polynomial gauge.

    Each reduction step loses about m - 2 orders of t-precision.
    """
    return Truncation(z_max=2, t_deg=m + (m - 4) // 2 + 2, n_vars=2)


def basis_matrices(m: int, tr: Truncation):
    """(C1, C2, D, E)."""
    C1 = MatrixSeries.identity(2, tr)
    C2 = MatrixSeries([[0, f"t2^{m - 2}"], [1, 0]], tr)
    D = MatrixSeries([[1, 0], [0, -1]], tr)
    E = MatrixSeries([[0, 1], [0, 0]], tr)
    return C1, C2, D, E


def f_series(m: int, lam, tr: Truncation) -> TruncatedSeries:
    if m % 2:
        return TruncatedSeries.zero(tr)
    return TruncatedSeries.monomial(lam, 0, (0, (m - 4) // 2), tr)


def make_normal_form(m: int, alpha=0, lam=0, trunc: Truncation | None = None) -> ConnectionStructure:
    """The TE-structure with A1 = C1, A2 = C2 + z f E and the normal-form B."""
    nf = I2mNormalForm(m, alpha, lam)
    tr = trunc or default_truncation(m)
    if tr.n_vars != 2:
        raise PreconditionError("I2(m) lives on a 2-dimensional base")
    C1, C2, D, E = basis_matrices(m, tr)
    z = TruncatedSeries.variable("z", tr)
    t1 = TruncatedSeries.variable("t1", tr)
    t2 = TruncatedSeries.variable("t2", tr)
    f = f_series(m, nf.lam, tr)
    A2 = C2 + E * (z * f)
    B = C1 * (-t1) + C2 * (t2 * Fraction(-2, m))
    B = B + (C1 * nf.alpha + D * Fraction(2 - m, 2 * m) + E * (t2 * f * Fraction(-2, m))) * z
    return ConnectionStructure("TE", [C1, A2], B)


def _const(M, tr):
    return MatrixSeries.from_constant(M, tr)


def _decompose(M: MatrixSeries, m: int):
    """Half trace a and g = tr(M C2) = m12 + t2^(m-2) m21; both are blind to conjugation by span(C1, C2)."""
    a = (M[0, 0] + M[1, 1]) * Fraction(1, 2)
    g = M[0, 1] + M[1, 0].mul_t(1, m - 2)
    return a, g


def _split_g(g: TruncatedSeries, m: int):
    """(low, G): low = terms of t2-degree <= m-4, G = (rest) / t2^(m-3)."""
    tr = g.trunc
    low, high = [], []
    for (z, e, s), c in g.terms():
        if e[0]:
            raise InconsistentSystem("A2 still depends on t1")
        (low if e[1] <= m - 4 else high).append(((z, e, s), c))
    low_s = TruncatedSeries.from_terms(low, tr, g.window)
    high_s = TruncatedSeries.from_terms(high, tr, g.window)
    return low_s, high_s.divide_t_monomial((0, m - 3))


def _euler_inverse(G: TruncatedSeries, m: int) -> TruncatedSeries:
    """v with 2 t2 v' + (m-2) v = G."""
    vt = [((z, e, s), c * Fraction(1, 2 * e[1] + m - 2)) for (z, e, s), c in G.terms()]
    return TruncatedSeries.from_terms(vt, G.trunc, G.window)


def _commutant(p: TruncatedSeries, q: TruncatedSeries, m: int) -> MatrixSeries:
    """p C1 + q C2."""
    return MatrixSeries([[p, q.mul_t(1, m - 2)], [q, p]], p.trunc)


def _first_order_gauge(M: MatrixSeries, m: int) -> MatrixSeries:
    """T = p (C1 + r C2) removing the trace and the high part of g from the z^1 coefficient.

    With T in the commutant the new values are a + (log det T)'/2 and
    g + t2^(m-3) (2 t2 r' + (m-2) r) / (1 - t2^(m-2) r^2), so r solves a
    fixed-point equation and p = exp(-int a) (1 - t2^(m-2) r^2)^(-1/2).
    """
    tr = M.trunc
    a, g = _decompose(M, m)
    _, G = _split_g(g, m)
    r = TruncatedSeries.zero(tr)
    for _ in range(tr.t_deg + 2):
        nxt = _euler_inverse(-G + G * (r * r).mul_t(1, m - 2), m)
        if nxt == r:
            break
        r = nxt
    s = 1 - (r * r).mul_t(1, m - 2)
    p = exp_series((-a).integrate_t(1)) * _binomial_power(s, Fraction(-1, 2))
    return _commutant(p, p * r, m)


@dataclass
class NormalizeResult:
    normal_form: I2mNormalForm
    gauge: GaugeTransform
    structure: ConnectionStructure
    f: list
    report: Report

    def to_json(self) -> dict:
        return {"normal_form": self.normal_form.to_json(), "f": [str(x) for x in self.f],
                "gauge": self.gauge.to_json(), "checks": self.report.to_json()}


def check_8_9(S: ConnectionStructure, m: int) -> Report:
    tr = S.trunc
    C1, C2, D, E = basis_matrices(m, tr)
    A10 = S.A[0].z_coefficient(0)
    A20 = S.A[1].z_coefficient(0)
    rep = Report()
    rep.add(Check.zero("8.9[A1]", A10 - C1.z_coefficient(0)))
    rep.add(Check.zero("8.9[A2]", A20 @ A20 - C1 * TruncatedSeries.monomial(1, 0, (0, m - 2), tr)))
    if S.B is not None:
        t1 = TruncatedSeries.variable("t1", tr)
        t2 = TruncatedSeries.variable("t2", tr)
        rep.add(Check.zero("8.9[B]", S.B.z_coefficient(0) - (C1 * (-t1) + A20 * (t2 * Fraction(-2, m)))))
    return rep


def _gauge(S, T, acc):
    G = GaugeTransform(T)
    return apply_gauge(S, G), acc.compose(G)


def _make_a1_trivial(S, acc):
    """Gauge with d1 T = -N T, T|_{t1=0} = 1, where A1 = 1 + z N."""
    tr = S.trunc
    one = MatrixSeries.identity(2, tr)
    N = (S.A[0] - one).map(lambda a: a.z_part(lo=1)).shift_z(-1)
    if N.is_zero():
        return S, acc
    # Picard series: each increment raises the t1-degree by one
    T = delta = one
    while True:
        delta = -(N @ delta).map(lambda a: a.integrate_t(0))
        if delta.is_zero():
            break
        T = T + delta
    return _gauge(S, T, acc)


def _cyclic_frame(A20: MatrixSeries):
    """[v, A20 v] for v = e1 or e2, whichever is invertible at t = 0."""
    tr = A20.trunc
    for v in ([1, 0], [0, 1]):
        vs = [TruncatedSeries.constant(x, tr) for x in v]
        w = A20.apply(vs)
        T = MatrixSeries([[vs[0], w[0]], [vs[1], w[1]]], tr)
        try:
            constant_inverse(T.constant_part())
            return T
        except ZeroDivisionError:
            continue
    raise PreconditionError("A2^(0)(0) has no cyclic vector: the Higgs field is not primitive")


def _restrict(S, z_rel):
    f = lambda M: None if M is None else M.restrict(z_rel=z_rel)
    return ConnectionStructure(S.kind, [f(M) for M in S.A], f(S.B), S.w, f(S.P))


def _uniform(S):
    """Cut every entry to its matrix's common window: the normalization steps mix entries."""
    f = lambda M: None if M is None else M.restrict(*M.window)
    return ConnectionStructure(S.kind, [f(M) for M in S.A], f(S.B), S.w, f(S.P))


def normalize(S: ConnectionStructure, m: int, max_rounds: int = 4) -> NormalizeResult:
    """Gauge a TE-structure over I2(m) into the normal form and read off (alpha, lambda)."""
    _check_m(m)
    if S.kind not in ("TE", "TEP") or S.n != 2 or S.r != 2:
        raise PreconditionError("normalize needs a rank 2 TE-structure over a 2-dimensional base")
    pre = check_8_9(S, m)
    if not pre.ok:
        bad = pre.failures()[0]
        raise PreconditionError(f"input violates {bad.label}: {bad.witness}")
    bad = [r for r in flatness_residuals(S) if not r.ok]
    if bad:
        raise InconsistentSystem(f"input is not flat: {bad[0].label}")
    S = S.as_kind("TE")
    tr = S.trunc
    one = MatrixSeries.identity(2, tr)
    C1, C2, D, E = basis_matrices(m, tr)
    acc = GaugeTransform.identity(2, tr)
    S, acc = _make_a1_trivial(S, acc)
    S, acc = _gauge(S, _cyclic_frame(S.A[1].z_coefficient(0)), acc)
    f = []
    for k in range(1, tr.z_max + 1):
        M = S.A[1].z_coefficient(k)
        if M.window[1] < 0:
            # precision exhausted: nothing above z^(k-1) is normalized
            S = _restrict(S, k - 1)
            break
        for rnd in range(max_rounds):
            a, g = _decompose(M, m)
            low, G = _split_g(g, m)
            if a.is_zero() and G.is_zero():
                break
            if k == 1 and rnd == 0:
                T = _first_order_gauge(M, m)
            else:
                T = one + _commutant((-a).integrate_t(1), _euler_inverse(-G, m), m).shift_z(k - 1)
            S, acc = _gauge(S, T, acc)
            M = S.A[1].z_coefficient(k)
        else:
            raise InconsistentSystem(f"z^{k} step of A2 did not settle")
        X = MatrixSeries([[0, M[0, 0]], [0, M[1, 0]]], tr)
        if not X.is_zero():
            S, acc = _gauge(S, one + X.shift_z(k), acc)
        a, g = _decompose(S.A[1].z_coefficient(k), m)
        f.append(_split_g(g, m)[0])

    # B = -t1 C1 + z b1 C1 + b2 C2 + z b3 D + z b4 E with b1 in C[[z]]
    t1 = TruncatedSeries.variable("t1", tr)
    Xb = S.B + one * t1
    zb1 = (Xb[0, 0] + Xb[1, 1]) * Fraction(1, 2)
    if not zb1.z_part(hi=0).is_zero():
        raise InconsistentSystem("B^(0) has a C1-part besides -t1")
    b1 = zb1.shift_z(-1)
    if not (b1 - b1.at_t0()).is_zero():
        raise InconsistentSystem("b1 depends on t")
    alpha = b1.constant_term()
    tail = b1 - alpha
    if not tail.is_zero():
        c = TruncatedSeries.zero(tr)
        for (zz, e, s), co in tail.terms():
            c = c + TruncatedSeries.monomial(co * Fraction(-1, zz), zz, e, tr)
        S, acc = _gauge(S, one * exp_series(c), acc)

    S = _uniform(S)
    lam = RationalComplex(0)
    f0 = f[0] if f else TruncatedSeries.zero(tr)
    zr, trl, _ = S.B.window
    if zr < 1 or trl < 1:
        raise PreconditionError(f"truncation too small to read alpha (B known to z^{zr}, degree {trl})")
    if m % 2 == 0 and f0.t_rel < (m - 4) // 2:
        raise PreconditionError(f"truncation too small to read lambda (f^(0) known to degree {f0.t_rel})")
    if m % 2 == 0:
        lam = f0.coefficient(0, (0, (m - 4) // 2))
    rep = Report()
    rep.extend(pre.checks)
    rep.add(Check.zero("8.35", f0 - f_series(m, lam, tr), "f = f^(0)" + (" = 0" if m % 2 else " = lambda t2^((m-4)/2)")))
    for j, fk in enumerate(f[1:], start=1):
        rep.add(Check.zero(f"8.35[f^({j})]", fk))
    nf = I2mNormalForm(m, alpha, lam)
    target = make_normal_form(m, alpha, lam, tr)
    Xb = S.B + one * t1
    b2 = Xb[1, 0]
    b3 = (Xb[0, 0] - Xb[1, 1]) * Fraction(1, 2)
    b4 = Xb[0, 1] - TruncatedSeries.monomial(1, 0, (0, m - 2), tr) * Xb[1, 0]
    t2 = TruncatedSeries.variable("t2", tr)
    z = TruncatedSeries.variable("z", tr)
    rep.add(Check.zero("8.33", (Xb[0, 0] + Xb[1, 1]) * Fraction(1, 2) - z * alpha, "b1 = alpha z"))
    rep.add(Check.zero("8.34", b2 - t2 * Fraction(-2, m), "b2 = -(2/m) t2"))
    rep.add(Check.zero("8.36", b3 - z * Fraction(2 - m, 2 * m), "b3 = (2-m)/(2m)"))
    rep.add(Check.zero("8.37", b4 - z * f_series(m, lam, tr) * t2 * Fraction(-2, m), "b4 = -(2/m) t2 f"))
    rep.add(Check.zero("8.22", S.A[0] - target.A[0]))
    rep.add(Check.zero("8.23", S.A[1] - target.A[1]))
    rep.add(Check.zero("8.24", S.B - target.B))
    return NormalizeResult(nf, acc, S, f, rep)


@dataclass
class SeminormalResult:
    structure: ConnectionStructure
    gauge: GaugeTransform
    f: TruncatedSeries
    report: Report

    def to_json(self) -> dict:
        return {"f": str(self.f), "gauge": self.gauge.to_json(), "structure": self.structure.to_json(),
                "checks": self.report.to_json()}


def _binomial_power(b: TruncatedSeries, p: Fraction) -> TruncatedSeries:
    """b^p for b with constant term 1."""
    if b.constant_term() != 1:
        raise PreconditionError("binomial series needs constant term 1")
    x = b - 1
    out = TruncatedSeries.one(b.trunc)
    term = out
    k = 0
    while True:
        term = term * x * ((p - k) / (k + 1))
        k += 1
        if term.is_zero():
            break
        out = out + term
    return out.restrict(b.z_rel, b.t_rel, b.w_rel)


def seminormalize_T(S: ConnectionStructure, m: int) -> SeminormalResult:
    """Holomorphic semi-normal form A1 = C1, A2 = C2 + z f E with f of z-degree <= 1."""
    _check_m(m)
    if S.n != 2 or S.r != 2:
        raise PreconditionError("seminormalize needs rank 2 over a 2-dimensional base")
    S = S.as_kind("T")
    tr = S.trunc
    one = MatrixSeries.identity(2, tr)
    C1, C2, D, E = basis_matrices(m, tr)
    rep = Report()
    rep.add(Check.zero("8.14[A1]", S.A[0] - one, "A1 = C1"))
    rep.add(Check.zero("8.14[pure]", S.A[1].map(lambda a: a.z_part(lo=1)), "A2 = A2^(0)"))
    A20 = S.A[1].z_coefficient(0)
    rep.add(Check.zero("8.14[A2]", A20 @ A20 - one * TruncatedSeries.monomial(1, 0, (0, m - 2), tr)))
    rep.add(Check.zero("5.3", A20.dt(0), "d1 A2^(0) = 0"))
    if not rep.ok:
        bad = rep.failures()[0]
        raise PreconditionError(f"input is not a pure frame over I2({m}): {bad.label} {bad.witness}")
    acc = GaugeTransform.identity(2, tr)
    K = _cyclic_frame(A20.map(lambda a: a.at_t0()))
    S, acc = _gauge(S, K, acc)
    A20 = S.A[1].z_coefficient(0)
    a = -A20[0, 0]
    b = A20[1, 0]
    if b.constant_term() != 1 or not a.constant_term().is_zero():
        raise InconsistentSystem("normalization b(0) = 1, a(0) = 0 failed")
    S, acc = _gauge(S, MatrixSeries([[1, -a], [0, b]], tr), acc)
    binv = b.reciprocal()
    z = TruncatedSeries.variable("z", tr)
    half = MatrixSeries([[0, 0], [0, 1]], tr)
    rep.add(Check.zero("8.18", S.A[1] - (C2 + half * (z * b.dt(1) * binv) + E * (z * (-a.dt(1) + a * b.dt(1) * binv)))))
    sigma = _binomial_power(b, Fraction(-1, 2))
    S, acc = _gauge(S, one * sigma, acc)
    a3 = b.dt(1) * binv * Fraction(-1, 2)
    a4 = -a.dt(1) + a * b.dt(1) * binv
    rep.add(Check.zero("8.19", S.A[1] - (C2 + D * (z * a3) + E * (z * a4))))
    S, acc = _gauge(S, one + E * (z * a3), acc)
    f = a4 + z * (a3.dt(1) + a3 * a3)
    rep.add(Check.zero("8.12", S.A[0] - one))
    rep.add(Check.zero("8.13", S.A[1] - (C2 + E * (z * f)), "A2 = C2 + z f E"))
    rep.add(Check.zero("8.21", f.z_part(lo=2), "f in C{t2} + z C{t2}"))
    return SeminormalResult(S, acc, f, rep)


def _tau(m: int, tr: Truncation) -> TruncatedSeries:
    if m % 2 == 0:
        return TruncatedSeries.monomial(1, 0, (0, (m - 2) // 2), tr)
    return TruncatedSeries.monomial(1, 0, (0, (m - 3) // 2), tr, s=1)


def _tau_exps(m: int):
    return ((0, (m - 2) // 2), 0) if m % 2 == 0 else ((0, (m - 3) // 2), 1)


def exponent_truncation(m: int) -> Truncation:
    return Truncation(z_max=2, t_deg=2 * m, n_vars=2, uses_s=bool(m % 2))


def exponents(nf: I2mNormalForm, trunc: Truncation | None = None) -> ExponentData:
    """Regular singular exponents from the diagonalizing frame (tau, -tau; 1, 1), tau = t2^((m-2)/2)."""
    m = nf.m
    tr = trunc or exponent_truncation(m)
    S = make_normal_form(m, nf.alpha, nf.lam, tr)
    tau = _tau(m, tr)
    T = MatrixSeries([[tau, -tau], [1, 1]], tr)
    adj = MatrixSeries([[1, tau], [-1, tau]], tr)
    exps, s = _tau_exps(m)
    N = adj @ S.B @ T
    Bt = N.map(lambda x: x.divide_t_monomial(exps, s) * Fraction(1, 2))
    rep = Report()
    C1, C2, D, E = basis_matrices(m, tr)
    rep.add(Check.zero("8.38", adj @ T - C1 * (tau * 2), "adj(T) T = 2 tau"))
    rep.add(Check.zero("8.39", adj @ C2 @ T - D * (tau * tau * 2), "T^-1 C2 T = tau D"))
    B0 = Bt.z_coefficient(0)
    B1 = Bt.z_coefficient(1)
    rep.add(Check.zero("8.45[B0 diagonal]", MatrixSeries([[0, B0[0, 1]], [B0[1, 0], 0]], tr)))
    t1 = TruncatedSeries.variable("t1", tr)
    t2 = TruncatedSeries.variable("t2", tr)
    rep.add(Check.zero("8.45[B0]", B0 - (C1 * (-t1) + D * (t2 * tau * Fraction(-2, m)))))
    lm = nf.lam / m
    h = Fraction(2 - m, 2 * m)
    want = MatrixSeries.from_constant([[nf.alpha - lm, -h - lm], [-h + lm, nf.alpha + lm]], tr)
    rep.add(Check.zero("8.45[B1]", B1 - want))
    rep.add(Check.zero("8.45[z^2]", Bt.map(lambda x: x.z_part(lo=2))))
    rep.add(Check.zero("8.45[B1 constant]", B1 - B1.map(lambda x: x.at_t0())))
    d1 = B1[0, 0].constant_term()
    d2 = B1[1, 1].constant_term()
    if m % 2:
        if d1 != d2:
            raise InconsistentSystem("odd m but the two diagonal entries of B1 differ")
        ex = (d1,)
    else:
        ex = (d1, d2)
    return ExponentData(m, ex, Bt, rep)


def normal_form_from_exponents(m: int, exps) -> I2mNormalForm:
    """Inverse of exponents: (alpha - lambda/m, alpha + lambda/m) or (alpha,)."""
    _check_m(m)
    exps = [RationalComplex.coerce(x) for x in exps]
    if m % 2:
        if len(exps) != 1:
            raise PreconditionError("odd m has one exponent")
        return I2mNormalForm(m, exps[0], 0)
    if len(exps) != 2:
        raise PreconditionError("even m has two exponents")
    e1, e2 = exps
    return I2mNormalForm(m, (e1 + e2) / 2, (e2 - e1) * Fraction(m, 2))


def beta_series(nf: I2mNormalForm, tr: Truncation) -> TruncatedSeries:
    if nf.m % 2 or nf.lam.is_zero():
        return TruncatedSeries.zero(tr)
    return TruncatedSeries.monomial(nf.lam * Fraction(2, 2 - nf.m), 0, (0, (nf.m - 2) // 2), tr)


def pure_tle(nf: I2mNormalForm, trunc: Truncation | None = None):
    """The pure (TLE) frame v * (1, beta; 0, 1) and checks of its matrices."""
    m = nf.m
    tr = trunc or default_truncation(m)
    S = make_normal_form(m, nf.alpha, nf.lam, tr)
    beta = beta_series(nf, tr)
    T = MatrixSeries([[1, beta], [0, 1]], tr)
    St = apply_gauge(S, GaugeTransform(T))
    C1, C2, D, E = basis_matrices(m, tr)
    t1 = TruncatedSeries.variable("t1", tr)
    t2 = TruncatedSeries.variable("t2", tr)
    c = TruncatedSeries.monomial(1, 0, (0, m - 2), tr)
    A2t = MatrixSeries([[-beta, c - beta * beta], [1, beta]], tr)
    rep = Report()
    rep.add(Check.zero("8.52", St.A[0] - C1))
    rep.add(Check.zero("8.53", St.A[1] - A2t))
    Bt = C1 * (-t1) + A2t * (t2 * Fraction(-2, m)) + (C1 * nf.alpha + D * Fraction(2 - m, 2 * m)).shift_z(1)
    rep.add(Check.zero("8.54", St.B - Bt))
    return St, GaugeTransform(T), rep


@dataclass
class TEPResult:
    ok: bool
    P0: list | None
    reason: str | None
    structure: ConnectionStructure | None
    report: Report

    def to_json(self) -> dict:
        d = {"ok": self.ok, "checks": self.report.to_json()}
        if self.P0 is not None:
            d["P0"] = [[str(x) for x in row] for row in self.P0]
        if self.reason:
            d["reason"] = self.reason
        return d


def _linear_conditions(pairs, tr):
    """Rows of the linear system in (p11, p12, p22) from matrix identities M^t P - P M (sign) = 0."""
    basis = [[[1, 0], [0, 0]], [[0, 1], [1, 0]], [[0, 0], [0, 1]]]
    rows = {}
    for label, M, sign, shift in pairs:
        for idx, Pb in enumerate(basis):
            Pm = MatrixSeries.from_constant(Pb, tr)
            val = M.transpose() @ Pm + (Pm @ M) * sign - Pm * shift
            for i in range(2):
                for j in range(2):
                    for key, c in val[i, j].terms():
                        row = rows.setdefault((label, i, j, key), [RationalComplex(0)] * 3)
                        row[idx] = row[idx] + c
    return list(rows.values())


def tep_extend(nf: I2mNormalForm, w: int, trunc: Truncation | None = None) -> TEPResult:
    """Constant symmetric P0 on the pure (TLE) frame satisfying the pure pairing equations, if any."""
    if not isinstance(w, int):
        raise PreconditionError("w must be an integer")
    m = nf.m
    tr = trunc or Truncation(z_max=3, t_deg=max(m, 4), n_vars=2)
    St, G, rep = pure_tle(nf, tr)
    A = [M.z_coefficient(0) for M in St.A]
    B0 = St.B.z_coefficient(0)
    B1 = St.B.z_coefficient(1)
    conds = [("5.8", A[0], -1, 0), ("5.8", A[1], -1, 0), ("5.10", B0, -1, 0)]
    sol = nullspace(_linear_conditions(conds, tr), 3)
    rep.add(Check("5.8", True, None, f"{len(sol)}-dimensional space of symmetric P0 compatible with A and B0"))
    if not sol or all(_det(v) == 0 for v in sol):
        rep.add(Check("5.8[nondegenerate]", False, "every compatible symmetric P0 is singular"))
        return TEPResult(False, None, "lambda != 0: no nondegenerate symmetric P0 is compatible with A and B0", None, rep)
    sol2 = nullspace(_linear_conditions(conds + [("5.11", B1, 1, w)], tr), 3)
    cand = [v for v in sol2 if _det(v) != 0]
    if not cand:
        rep.add(Check("5.11", False, f"B1^t P + P B1 - w P != 0 for every admissible P0", f"w = {w}"))
        return TEPResult(False, None, "alpha != w/2: no P0 satisfies B1^t P + P B1 = w P", None, rep)
    v = cand[0]
    scale = v[1] if not v[1].is_zero() else next(x for x in v if not x.is_zero())
    v = [x / scale for x in v]
    P0 = [[v[0], v[1]], [v[1], v[2]]]
    P = MatrixSeries.from_constant(P0, tr)
    S = ConnectionStructure("TEP", St.A, St.B, w, P)
    for res in flatness_residuals(S):
        rep.add(res.check())
    for k in range(tr.z_max + 1):
        for label, val in coefficient_equations(S, k).items():
            if label.startswith(("4.21", "4.22")):
                rep.add(Residual(f"{label}[z^{k}]", val).check())
    rep.extend(S.pairing_checks())
    return TEPResult(rep.ok, P0, None if rep.ok else "assembled structure failed a check", S, rep)


def _det(v):
    return v[0] * v[2] - v[1] * v[1]


@dataclass
class FlatModel:
    nf: I2mNormalForm
    beta: TruncatedSeries
    flat: FlatFOutput
    potential: tuple
    report: Report

    def to_json(self) -> dict:
        d = {"normal_form": self.nf.to_json(), "beta": str(self.beta), "flat": self.flat.to_json(),
             "vector_potential": [str(c) for c in self.potential], "checks": self.report.to_json()}
        return d


def flat_model(nf: I2mNormalForm, w: int | None = None, trunc: Truncation | None = None) -> FlatModel:
    """The flat F-manifold with Euler field (and metric, when w admits a pairing) from omega = first frame vector."""
    m = nf.m
    tr = trunc or Truncation(z_max=2, t_deg=m + 2, n_vars=2)
    St, G, rep = pure_tle(nf, tr)
    if w is not None:
        tep = tep_extend(nf, w, tr)
        rep.merge(tep.report.checks)
        if tep.ok:
            St = tep.structure
    PS = PureStructure.from_connection(St)
    out = build_flat_f(PS, PrimitiveChoice((1, 0)), euler=True, metric=None)
    rep.extend(out.report.checks)
    ft = out.model.trunc
    beta = beta_series(nf, ft)
    Phi = out.flat_fields
    rep.add(Check.zero("8.55", Phi - MatrixSeries([[1, beta], [0, 1]], ft), "flat fields (d1, d2 + beta d1)"))
    t1 = TruncatedSeries.variable("t1", ft)
    t2 = TruncatedSeries.variable("t2", ft)
    rep.add(Check.zero("8.56[1]", out.flat_coordinates[0] - (t1 - t2 * beta * Fraction(2, m))))
    rep.add(Check.zero("8.56[2]", out.flat_coordinates[1] - t2))
    c = TruncatedSeries.monomial(1, 0, (0, m - 2), ft)
    a22 = out.model.a[1][1]
    rep.add(Check.zero("8.57[1]", a22[0] - (c - beta * beta)))
    rep.add(Check.zero("8.57[2]", a22[1] - beta * 2))
    vp = vector_potential(out)
    rep.merge(vp.report.checks)
    c1 = t1 * t1 * Fraction(1, 2) + (t2 ** m - t2 * t2 * beta * beta) * Fraction(1, m * (m - 1))
    c2 = t1 * t2 + t2 * t2 * beta * Fraction(8, (m + 2) * m)
    rep.add(Check.zero("8.58[1]", vp.c[0] - c1))
    rep.add(Check.zero("8.58[2]", vp.c[1] - c2))
    return FlatModel(nf, beta, out, vp.c, rep)
