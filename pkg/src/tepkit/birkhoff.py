"""Extension of (T)-structures to pure (TL)-structures by Birkhoff factorization.

The comparison matrix Psi between a flat frame and a holomorphic frame
solves dPsi = Psi * sum_i z^-1 A_i dt_i with Psi = 1 at t = 0.  Its t-degree
d part has poles of order at most d in z, so Psi lives in a Laurent box with
z_min = -t_deg and the splitting Psi * Psi0 = Psiinf is linear algebra per
t-degree.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .algebra import MatrixSeries, Truncation, constant_inverse
from .algebra.linalg import matmul
from .connection import ConnectionStructure, GaugeTransform, apply_gauge, flatness_residuals, pure_tl_check
from .errors import NotFlatError, PreconditionError
from .report import Check, Report, describe_witness


def loop_truncation(tr: Truncation) -> Truncation:
    return tr.with_(z_min=-tr.t_deg)


def _by_degree(M: MatrixSeries, top: int) -> list:
    return [M.map(lambda a, d=d: a.t_degree_part(d)) for d in range(top + 1)]


def flat_frame_psi(S: ConnectionStructure, seed: GaugeTransform | None = None) -> MatrixSeries:
    """Psi with dPsi = Psi * z^-1 sum_i A_i dt_i and Psi|_{t=0} = 1 (after the seed gauge).

    Uses Euler's identity d * Psi_d = sum_i t_i d_i Psi restricted to degree d,
    which is valid because flatness makes the system integrable.
    """
    if S.kind not in KIND_OK:
        raise PreconditionError(f"unsupported kind {S.kind}")
    S = _seeded(S, seed)
    bad = [res for res in flatness_residuals(S) if res.label.startswith("4.15") and not res.ok]
    if bad:
        raise NotFlatError(f"{bad[0].label}: {describe_witness(bad[0].value)}")
    lt = loop_truncation(S.trunc)
    top = lt.t_deg
    A = [_by_degree(M.retruncate(lt), top) for M in S.A]
    one = MatrixSeries.identity(S.r, lt)
    psi = [one]
    for d in range(1, top + 1):
        acc = None
        for i in range(S.n):
            part = None
            for j in range(d):
                p = psi[j] @ A[i][d - 1 - j]
                part = p if part is None else part + p
            part = part.map(lambda a, i=i: a.mul_t(i))
            acc = part if acc is None else acc + part
        psi.append(acc.shift_z(-1) * Fraction(1, d))
    out = psi[0]
    for P in psi[1:]:
        out = out + P
    return out


KIND_OK = ("T", "TE", "TP", "TEP")


def _seeded(S: ConnectionStructure, seed):
    if seed is None:
        return S
    T = seed.T
    if not (T - T.at_t0()).is_zero():
        raise PreconditionError("the seed must not depend on t")
    return apply_gauge(S, seed)


def psi_residuals(S: ConnectionStructure, Psi: MatrixSeries) -> list:
    """z d_i Psi - Psi A_i, one Check per i."""
    lt = Psi.trunc
    out = []
    for i, M in enumerate(S.A):
        val = Psi.shift_z(1).dt(i) - Psi @ M.retruncate(lt)
        out.append(Check.zero(f"5.13[{i + 1}]", val, "dPsi = Psi * Omega"))
    return out


def factorize(Psi: MatrixSeries):
    """Split Psi = Psiinf * Psi0^-1 with Psiinf = 1 + (z^-1 terms) and Psi0 z-regular.

    Returns (Psiinf, Psi0), both in the Laurent box of Psi.
    """
    lt = Psi.trunc
    r = Psi.r
    one = MatrixSeries.identity(r, lt)
    if not (Psi.at_t0() - one).is_zero():
        raise PreconditionError("Psi must equal 1 at t = 0")
    top = lt.t_deg
    parts = _by_degree(Psi, top)
    p0 = [one]
    pinf = [one]
    for d in range(1, top + 1):
        X = None
        for j in range(d):
            p = parts[d - j] @ p0[j]
            X = p if X is None else X + p
        p0.append(-X.map(lambda a: a.z_part(lo=0)))
        pinf.append(X.map(lambda a: a.z_part(hi=-1)))
    P0 = p0[0]
    PI = pinf[0]
    for d in range(1, top + 1):
        P0 = P0 + p0[d]
        PI = PI + pinf[d]
    return PI, P0


def pairing_seed(S: ConnectionStructure) -> GaugeTransform:
    """z-only gauge G with G^t P G(-z) = P^(0) at t = 0.

    With P|_{t=0} = P0 + z^k R_k + ..., where R_k^t = (-1)^k R_k, the
    gauge 1 + z^k X with X = -(-1)^k/2 P0^-1 R_k removes the z^k term.
    """
    if S.P is None:
        raise PreconditionError("pairing_seed needs a pairing")
    tr = S.trunc
    P = S.P.at_t0()
    P0c = P.z_coefficient(0).constant_part()
    try:
        P0i = constant_inverse(P0c)
    except ZeroDivisionError:
        raise PreconditionError("P^(0)(0) is singular") from None
    G = GaugeTransform.identity(S.r, tr)
    for k in range(1, tr.z_max + 1):
        Rk = P.z_coefficient(k).constant_part()
        if all(x.is_zero() for row in Rk for x in row):
            continue
        c = Fraction(-(-1) ** k, 2)
        X = [[x * c for x in row] for row in matmul(P0i, Rk)]
        step = GaugeTransform(MatrixSeries.identity(S.r, tr) + MatrixSeries.from_constant(X, tr).shift_z(k))
        G = G.compose(step)
        P = step.T.transpose() @ P @ step.T.flip_z()
    return G


@dataclass(frozen=True)
class Extension:
    structure: ConnectionStructure
    gauge: GaugeTransform
    psi: MatrixSeries
    psi_inf: MatrixSeries
    psi_0: MatrixSeries
    report: Report


def tle_hypothesis(S: ConnectionStructure) -> bool:
    """B at t = 0 has the form B0 + z B1."""
    return S.B is not None and S.B.at_t0().map(lambda a: a.z_part(lo=2)).is_zero()


def extend_to_pure_tl(S: ConnectionStructure, seed: GaugeTransform | None = None, require_tle: bool = False) -> Extension:
    """Gauge S by seed * Psi0 and certify the pure (TL) equations that must hold.

    The A-equations hold for every input; the B-equations are asserted when
    the seeded B at t = 0 is B0 + z B1, and the pairing equations when the
    seeded P at t = 0 is z-independent.
    """
    base = _seeded(S, seed)
    if require_tle and not tle_hypothesis(base):
        raise PreconditionError("B at t = 0 is not of the form B0 + z B1 in the seeded basis")
    Psi = flat_frame_psi(base)
    rep = Report()
    rep.extend(psi_residuals(base, Psi))
    PI, P0 = factorize(Psi)
    rep.add(Check.zero("5.14", Psi @ P0 - PI, "Psi * Psi0 = Psiinf"))
    rep.add(Check.zero("5.14[inf]", PI.map(lambda a: a.z_part(lo=0)) - MatrixSeries.identity(S.r, PI.trunc),
                       "Psiinf = 1 + negative z-powers"))
    G0 = GaugeTransform(P0.retruncate(S.trunc))
    out = apply_gauge(base, G0)
    pure = pure_tl_check(out)
    want = ["5.1[A", "5.2", "5.3"]
    if tle_hypothesis(base):
        want += ["5.1[B]", "5.4", "5.5", "5.6"]
    if base.P is not None and base.P.at_t0().map(lambda a: a.z_part(lo=1)).is_zero():
        want += ["5.7", "5.8", "5.9"]
        if "5.4" in want:
            want += ["5.10", "5.11"]
    for c in pure:
        if any(c.label.startswith(w) for w in want):
            rep.add(c)
    if not rep.ok:
        bad = rep.failures()[0]
        raise PreconditionError(f"extension failed its own check {bad.label}: {bad.witness}")
    G = G0 if seed is None else seed.compose(G0)
    return Extension(out, G, Psi, PI, P0, rep)


@dataclass(frozen=True)
class NonExtendableTE:
    """A (TE)-structure over a point with no pure (TLE) extension.

    In the basis (v1, v2) the connection is z d_z = z^-1 B with
    z^-1 B = [[alpha, z^k], [0, alpha + k]].  The verdict is recorded, not
    computed: no opposite monodromy-invariant filtration exists.
    """

    alpha: Fraction
    k: int
    B: MatrixSeries
    extendable: bool = False
    reason: str = "the filtration C*A1 in the flat multivalued sections has no opposite monodromy-invariant filtration"

    def to_json(self) -> dict:
        return {"alpha": str(self.alpha), "k": self.k, "B": self.B.to_json(), "extendable": self.extendable,
                "reason": self.reason}


def non_extendable_te(alpha=Fraction(0), k: int = 1, z_max: int | None = None) -> NonExtendableTE:
    if not isinstance(k, int) or k < 1:
        raise PreconditionError("k must be a positive integer")
    alpha = Fraction(alpha)
    tr = Truncation(z_max=z_max or k + 2, t_deg=0, n_vars=1)
    B = MatrixSeries([[f"{alpha}*z", f"z^{k + 1}"], [0, f"({alpha + k})*z"]], tr)
    return NonExtendableTE(alpha, k, B)
