import random
from fractions import Fraction

import pytest
import sympy as sp
from hypothesis import given, settings, strategies as st

from support import T, Z, commuting_constant_structure, random_const_matrix, random_gauge, sympy_matrix
from tepkit.algebra import MatrixSeries, Truncation
from tepkit.birkhoff import (extend_to_pure_tl, factorize, flat_frame_psi, loop_truncation, non_extendable_te,
                             pairing_seed, psi_residuals, tle_hypothesis)
from tepkit.connection import (ConnectionStructure, GaugeTransform, apply_gauge, is_flat, pure_tl_check,
                               rigidity_solve)
from tepkit.errors import NotFlatError, PreconditionError
from tepkit.i2m import make_normal_form

TR = Truncation(z_max=3, t_deg=4, n_vars=2)


def sympy_exp_truncated(M, tr):
    """exp(M) for a matrix M of Laurent polynomials, expanded by t-degree via a scaling variable."""
    h = sp.Symbol("h")
    Mh = M.subs({T[0]: h * T[0], T[1]: h * T[1]}, simultaneous=True)
    out, term = sp.eye(M.shape[0]), sp.eye(M.shape[0])
    for k in range(1, tr.t_deg + 1):
        term = (term * Mh / k).applyfunc(sp.expand)
        out += term
    out = out.applyfunc(lambda e: sp.expand(e))
    return out.applyfunc(lambda e: sum(e.coeff(h, d) for d in range(tr.t_deg + 1)) if e.has(h) else e)


def test_psi_for_unit_a1():
    S = ConnectionStructure("T", [MatrixSeries.identity(2, TR), MatrixSeries.zero(2, TR)])
    Psi = flat_frame_psi(S)
    # only nonpositive z-powers occur, so no z-truncation is needed
    want = sympy_exp_truncated(sp.eye(2) * T[0] / Z, TR)
    assert (sympy_matrix(Psi) - want).applyfunc(sp.expand).is_zero_matrix


@pytest.mark.parametrize("seed", range(3))
def test_psi_for_commuting_constants(seed):
    rng = random.Random(seed)
    S = commuting_constant_structure(rng, 2, 2, TR)
    Psi = flat_frame_psi(S)
    M = (sympy_matrix(S.A[0]) * T[0] + sympy_matrix(S.A[1]) * T[1]) / Z
    want = sympy_exp_truncated(M, TR)
    assert (sympy_matrix(Psi) - want).applyfunc(sp.expand).is_zero_matrix


def test_psi_first_order():
    S = make_normal_form(4, 1, 1, TR).as_kind("T")
    Psi = flat_frame_psi(S)
    lt = loop_truncation(TR)
    first = Psi.map(lambda a: a.t_degree_part(1))
    want = (S.A[0].at_t0().retruncate(lt).map(lambda a: a.mul_t(0))
            + S.A[1].at_t0().retruncate(lt).map(lambda a: a.mul_t(1))).map(lambda a: a.z_part(hi=0).shift_z(-1))
    # z^-1 sum A_i(0) t_i plus a z-regular part
    assert first.map(lambda a: a.z_part(hi=-1)) == want.map(lambda a: a.z_part(hi=-1))
    assert all(c.ok for c in psi_residuals(S, Psi))


def test_psi_requires_flatness():
    S = ConnectionStructure("T", [MatrixSeries.identity(2, TR), MatrixSeries([["t1", "0"], ["1", "0"]], TR)])
    with pytest.raises(NotFlatError):
        flat_frame_psi(S)


def test_factorize_trivial_cases():
    lt = loop_truncation(TR)
    # only nonnegative z-powers
    Psi = MatrixSeries([["1 + z*t1", "t2"], ["0", "1 - t1*t2"]], lt)
    PI, P0 = factorize(Psi)
    assert PI == MatrixSeries.identity(2, lt)
    assert Psi @ P0 == MatrixSeries.identity(2, lt)
    # already split
    N = MatrixSeries([["0", "1"], ["0", "0"]], lt)
    Psi = MatrixSeries.identity(2, lt) + N.map(lambda a: a.mul_t(0).shift_z(-1))
    PI, P0 = factorize(Psi)
    assert P0 == MatrixSeries.identity(2, lt) and PI == Psi
    with pytest.raises(PreconditionError):
        factorize(MatrixSeries([["2", "0"], ["0", "1"]], lt))


@pytest.mark.parametrize("m", [3, 4, 5])
def test_factorize_roundtrip_on_normal_form(m):
    S = make_normal_form(m, Fraction(1, 2), 0 if m % 2 else 1, TR)
    Psi = flat_frame_psi(S)
    PI, P0 = factorize(Psi)
    assert Psi @ P0 == PI
    assert PI.map(lambda a: a.z_part(lo=0)) == MatrixSeries.identity(2, PI.trunc)


def test_factorize_uniqueness_under_regular_perturbation():
    rng = random.Random(1)
    S = commuting_constant_structure(rng, 2, 2, TR)
    S = apply_gauge(S, random_gauge(rng, TR, zdeg=1, tdeg=1, t0_identity=True))
    Psi = flat_frame_psi(S)
    PI, P0 = factorize(Psi)
    lt = Psi.trunc
    R = MatrixSeries([["1 + z*t1", "t2"], ["t1*z", "1"]], lt)
    PI2, P02 = factorize(Psi @ R)
    assert PI2 == PI
    assert Psi @ R @ P02 == PI


# -- extension ----------------------------------------------------------------------

def test_pure_input_unchanged():
    S = make_normal_form(5, 1, 0, TR)
    ext = extend_to_pure_tl(S)
    assert ext.gauge.is_identity() and ext.structure == S


@pytest.mark.parametrize("m", [3, 4, 6])
def test_normal_forms_extend(m):
    S = make_normal_form(m, Fraction(1, 3), 0 if m % 2 else 2, TR)
    ext = extend_to_pure_tl(S, require_tle=True)
    assert ext.report.ok
    assert pure_tl_check(ext.structure).ok


def test_normal_form_lambda_nonzero_is_rigidly_related():
    # two extensions of the same structure, compared with the rigidity solver
    S = make_normal_form(4, 0, 1, TR)
    e1 = extend_to_pure_tl(S)
    assert e1.structure.A[1].map(lambda a: a.z_part(lo=1)).is_zero()
    G = GaugeTransform(MatrixSeries([["1", "0"], ["0", "1"]], TR))
    e2 = extend_to_pure_tl(S, seed=G)
    assert rigidity_solve(e1.structure.as_kind("T"), e2.structure.as_kind("T")).identity_forced


@pytest.mark.parametrize("seed", range(5))
def test_random_t_structures(seed):
    rng = random.Random(100 + seed)
    r = rng.choice([2, 3])
    tr = Truncation(z_max=2, t_deg=3, n_vars=2)
    S0 = commuting_constant_structure(rng, 2, r, tr)
    S = apply_gauge(S0, random_gauge(rng, tr, r=r, zdeg=1, tdeg=2))
    assert is_flat(S) and not pure_tl_check(S).ok
    ext = extend_to_pure_tl(S)
    assert pure_tl_check(ext.structure).ok
    assert ext.psi @ ext.psi_0 == ext.psi_inf


@pytest.mark.parametrize("seed", range(3))
def test_te_inputs_with_log_restriction(seed):
    rng = random.Random(200 + seed)
    tr = Truncation(z_max=2, t_deg=4, n_vars=2)
    S0 = make_normal_form(4, Fraction(rng.randint(-2, 2), 3), 0, tr)
    S = apply_gauge(S0, random_gauge(rng, tr, zdeg=1, tdeg=2, t0_identity=True))
    assert tle_hypothesis(S)
    out = extend_to_pure_tl(S, require_tle=True).structure
    assert out.B.map(lambda a: a.z_part(lo=2)).is_zero()
    B1 = out.B.z_coefficient(1)
    assert B1 == B1.at_t0()


def test_require_tle_rejects():
    tr = Truncation(z_max=3, t_deg=3, n_vars=2)
    S = make_normal_form(3, 0, 0, tr)
    G = GaugeTransform(MatrixSeries([["1", "z^2"], ["0", "1"]], tr))
    S2 = apply_gauge(S, G)
    assert not tle_hypothesis(S2)
    with pytest.raises(PreconditionError):
        extend_to_pure_tl(S2, require_tle=True)


def test_seed_dependence_is_constant_gauge():
    rng = random.Random(7)
    tr = Truncation(z_max=2, t_deg=3, n_vars=2)
    S = apply_gauge(commuting_constant_structure(rng, 2, 2, tr), random_gauge(rng, tr, zdeg=1, tdeg=1))
    C = GaugeTransform(MatrixSeries.from_constant(random_const_matrix(rng, 2), tr))
    a = extend_to_pure_tl(S).structure
    b = extend_to_pure_tl(S, seed=C).structure
    assert apply_gauge(a, C) == b


def test_seed_must_be_t_free():
    with pytest.raises(PreconditionError):
        extend_to_pure_tl(make_normal_form(3, 0, 0, TR), seed=GaugeTransform(MatrixSeries([["1", "t1"], ["0", "1"]], TR)))


def test_pairing_seed_and_tep_extension():
    tr = Truncation(z_max=3, t_deg=3, n_vars=2)
    S = make_normal_form(4, Fraction(1, 2), 0, tr)
    S = ConnectionStructure("TEP", S.A, S.B, 1, MatrixSeries([["0", "1"], ["1", "0"]], tr))
    G = GaugeTransform(MatrixSeries([["1 + z", "0"], ["0", "1"]], tr))
    S2 = apply_gauge(S, G)
    assert not S2.P.at_t0().map(lambda a: a.z_part(lo=1)).is_zero()
    seed = pairing_seed(S2)
    ext = extend_to_pure_tl(S2, seed=seed)
    out = ext.structure
    # the seed normalizes P only; B at t = 0 keeps its z^2 term, so only A and P equations are certified
    checks = {c.label: c.ok for c in pure_tl_check(out)}
    assert all(ok for label, ok in checks.items() if label.startswith(("5.1[A", "5.2", "5.3", "5.7", "5.8", "5.9")))
    assert not checks["5.1[B]"]
    assert out.P == out.P.at_t0().z_coefficient(0)


def test_non_extendable_te_fixture():
    ex = non_extendable_te(Fraction(1, 3), 2)
    assert not ex.extendable
    assert str(ex.B[0, 1]) == "z^3" and str(ex.B[1, 1]) == "7/3*z"
    assert ex.to_json()["extendable"] is False
    with pytest.raises(PreconditionError):
        non_extendable_te(0, 0)
