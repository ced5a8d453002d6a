import json
import random
from fractions import Fraction

import pytest
import sympy as sp
from hypothesis import given, settings, strategies as st

from support import T, random_algebra_model, random_series, to_sympy
from tepkit.algebra import Truncation, TruncatedSeries
from tepkit.connection import extract_higgs
from tepkit.errors import PreconditionError
from tepkit.fmanifold import (CotangentPoly, FManifoldModel, SpectrumIdeal, bracket_closure, euler_residual,
                              example214_ideal, example214_radical, integrability_residual, make_builtin, poisson,
                              reduce_mod_ideal, reduce_mod_linear, tensor_is_zero, trace_symmetry, verify_algebra)
from tepkit.i2m import make_normal_form

BUILTINS = [("I2", dict(m=3)), ("I2", dict(m=4)), ("I2", dict(m=7)), ("A1n", dict(n=3)), ("A1n", dict(n=1)),
            ("N2", dict(g="t2^2")), ("Example214", {})]


def sympy_integrability_zero(F: FManifoldModel) -> bool:
    """Independent route: the integrability tensor in sympy on the coordinate fields."""
    n = F.n
    ts = T[:n]
    a = [[[to_sympy(F.a[i][j][k]) for k in range(n)] for j in range(n)] for i in range(n)]

    def prod(X, Y):
        return [sp.expand(sum(X[i] * Y[j] * a[i][j][k] for i in range(n) for j in range(n))) for k in range(n)]

    def br(X, Y):
        return [sp.expand(sum(X[q] * sp.diff(Y[p], ts[q]) - Y[q] * sp.diff(X[p], ts[q]) for q in range(n)))
                for p in range(n)]

    def lie(Zv, U, V):
        x, y, w = br(Zv, prod(U, V)), prod(br(Zv, U), V), prod(U, br(Zv, V))
        return [x[k] - y[k] - w[k] for k in range(n)]

    d = [[sp.Integer(int(i == k)) for k in range(n)] for i in range(n)]
    # two derivatives are taken, so only degrees <= t_deg - 2 are reliable
    reliable = F.trunc.t_deg - 2
    for i in range(n):
        for j in range(n):
            xy = prod(d[i], d[j])
            for k in range(n):
                for l in range(n):
                    r1 = lie(xy, d[k], d[l])
                    r2 = prod(d[i], lie(d[j], d[k], d[l]))
                    r3 = prod(d[j], lie(d[i], d[k], d[l]))
                    for c in range(n):
                        e = sp.expand(r1[c] - r2[c] - r3[c])
                        if e != 0 and any(sum(mo) <= reliable for mo in sp.Poly(e, *ts).monoms()):
                            return False
    return True


# -- builtins -------------------------------------------------------------------

@pytest.mark.parametrize("kind,kw", BUILTINS)
def test_builtins_are_algebras(kind, kw):
    assert verify_algebra(make_builtin(kind, **kw)).ok


def test_i2_structure_constants():
    F = make_builtin("I2", m=4)
    assert F.a[1][1][0] == TruncatedSeries.monomial(1, 0, (0, 2), F.trunc)
    assert F.a[1][1][1].is_zero()
    N = make_builtin("N2")
    assert all(N.a[1][1][k].is_zero() for k in range(2))


def test_example214_product():
    F = make_builtin("Example214")
    tr = F.trunc
    t4 = TruncatedSeries.variable("t4", tr)
    one, zero = TruncatedSeries.one(tr), TruncatedSeries.zero(tr)
    X = [zero, one, -t4, zero]
    assert all(c.is_zero() for c in F.product(X, X))


def test_commutativity_failure_detected():
    tr = Truncation(z_max=0, t_deg=4, n_vars=2)
    F = FManifoldModel.from_sparse(2, {(1, 1, 1): 1, (1, 2, 2): 1, (2, 1, 2): 1, (2, 2, 1): "t2", (2, 2, 2): 0}, tr)
    ok = verify_algebra(F)
    assert ok.ok
    a = [list(map(list, row)) for row in F.a]
    a[1][0][1] = TruncatedSeries.constant(2, tr)
    bad = verify_algebra(FManifoldModel(2, a))
    assert any("commutativity" in c.label for c in bad.failures())


@pytest.mark.parametrize("kind,kw,expected", [("I2", dict(m=5), True), ("A1n", dict(n=3), True),
                                              ("N2", {}, True), ("Example214", {}, False)])
def test_integrability(kind, kw, expected):
    F = make_builtin(kind, **kw)
    assert tensor_is_zero(integrability_residual(F)) is expected
    assert sympy_integrability_zero(F) is expected


def test_euler_fields():
    for m in (3, 4, 6):
        assert tensor_is_zero(euler_residual(make_builtin("I2", m=m)))
    assert tensor_is_zero(euler_residual(make_builtin("N2", g="t2^2")))
    assert tensor_is_zero(euler_residual(make_builtin("A1n", n=3)))
    F = make_builtin("I2", m=4)
    E_unit = FManifoldModel(F.n, F.a, 1, [TruncatedSeries.one(F.trunc), TruncatedSeries.zero(F.trunc)])
    res = euler_residual(E_unit)
    # Lie_e(o) = 0, so the residual is minus the product
    assert res[(1, 1)][0] == -F.a[1][1][0]
    with pytest.raises(PreconditionError):
        euler_residual(make_builtin("Example214"))


# -- ideal and bracket ------------------------------------------------------------

def test_reduce_examples():
    F = make_builtin("I2", m=5)
    tr = F.trunc
    I = SpectrumIdeal(F)
    assert reduce_mod_ideal(CotangentPoly.parse("y2^2", tr), I) == CotangentPoly.parse("t2^3", tr)
    assert reduce_mod_ideal(CotangentPoly.parse("y1 - 1", tr), I).is_zero()
    G = make_builtin("Example214")
    J = SpectrumIdeal(G)
    assert reduce_mod_ideal(CotangentPoly.parse("(y2 - t4*y3)*y3", G.trunc), J).is_zero()
    assert reduce_mod_ideal(CotangentPoly.parse("y4 - y3^2", G.trunc), J).is_zero()


def test_poisson_examples():
    tr = Truncation(z_max=0, t_deg=6, n_vars=4)
    p = lambda s: CotangentPoly.parse(s, tr)
    assert poisson(p("y2"), p("t2")) == p("-1")
    assert poisson(p("(y2 - t4*y3)*y3"), p("y4 - y3^2")) == p("-y3^2")


def test_example214_bracket_verdict():
    F = make_builtin("Example214")
    ideal = example214_ideal(F)
    res = bracket_closure(F, ideal)
    assert not res.closed
    assert any(str(w.bracket) == "-y3^2" for w in res.witnesses)
    # the default presentation gives the same verdict
    assert not bracket_closure(F).closed


def test_example214_radical_condition():
    F = make_builtin("Example214")
    tr = F.trunc
    rad = [CotangentPoly.parse(s, tr) for s in ("y1 - 1", "y2", "y3", "y4")]
    for i in range(4):
        for j in range(i + 1, 4):
            assert reduce_mod_linear(poisson(rad[i], rad[j]), example214_radical()).is_zero()
    # the printed generators lie in the radical
    for g in example214_ideal(F).generators:
        assert reduce_mod_linear(g, example214_radical()).is_zero()


@pytest.mark.parametrize("kind,kw", BUILTINS)
def test_bracket_criterion_on_builtins(kind, kw):
    F = make_builtin(kind, **kw)
    assert bracket_closure(F).closed == tensor_is_zero(integrability_residual(F))


@pytest.mark.parametrize("seed", range(10))
def test_bracket_criterion_on_random_models(seed):
    rng = random.Random(seed)
    n = rng.choice([2, 3])
    F = random_algebra_model(rng, n, t_deg=5, tdeg=rng.choice([0, 1]))
    assert verify_algebra(F).ok
    integrable = tensor_is_zero(integrability_residual(F))
    assert bracket_closure(F).closed == integrable
    assert sympy_integrability_zero(F) == integrable


def test_random_models_cover_both_verdicts():
    verdicts = set()
    for seed in range(10):
        rng = random.Random(seed)
        F = random_algebra_model(rng, rng.choice([2, 3]), t_deg=5, tdeg=rng.choice([0, 1]))
        verdicts.add(bracket_closure(F).closed)
    assert verdicts == {True, False}


# -- properties -------------------------------------------------------------------

def random_cotangent(rng, tr, deg=3):
    terms = {}
    for _ in range(rng.randint(1, 5)):
        e = [0] * tr.n_vars
        for _ in range(rng.randint(0, deg)):
            e[rng.randrange(tr.n_vars)] += 1
        terms[tuple(e)] = random_series(rng, tr, 0, 2, 0.5) + rng.randint(1, 3)
    return CotangentPoly(tr, terms)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_poisson_jacobi_antisymmetry(seed):
    rng = random.Random(seed)
    tr = Truncation(z_max=0, t_deg=8, n_vars=3)
    f, g, h = (random_cotangent(rng, tr) for _ in range(3))
    assert poisson(f, f).is_zero()
    assert poisson(f, g) == -poisson(g, f)
    jac = poisson(f, poisson(g, h)) + poisson(g, poisson(h, f)) + poisson(h, poisson(f, g))
    low = {k: v.restrict(t_rel=tr.t_deg - 2) for k, v in jac.terms.items()}
    assert all(v.is_zero() for v in low.values())


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_reduction_confluent_and_idempotent(seed):
    rng = random.Random(seed)
    F = random_algebra_model(rng, 3, t_deg=5, tdeg=1)
    I = SpectrumIdeal(F)
    p = random_cotangent(rng, F.trunc, deg=4)
    base = reduce_mod_ideal(p, I)
    assert all(sum(k) <= 1 and k[0] == 0 for k in base.terms)
    assert reduce_mod_ideal(base, I) == base
    for k in range(3):
        assert reduce_mod_ideal(p, I, random.Random(k)) == base


# -- trace symmetry ------------------------------------------------------------------

def test_trace_symmetry():
    H = extract_higgs(make_normal_form(4, 0, 1, Truncation(z_max=2, t_deg=4, n_vars=2)))
    assert all(x.is_zero() for row in trace_symmetry(H) for x in row)
    tr = Truncation(z_max=2, t_deg=4, n_vars=2)
    from tepkit.algebra import MatrixSeries
    from tepkit.connection import HiggsPackage
    C1 = MatrixSeries.identity(2, tr)
    C2 = MatrixSeries([["t1", "0"], ["0", "t1"]], tr)
    bad = HiggsPackage("T", (C1, C2), (C1, C1))
    arr = trace_symmetry(bad)
    assert arr[0][1] == TruncatedSeries.one(tr)


# -- serialization ---------------------------------------------------------------------

def test_model_json_roundtrip():
    F = make_builtin("I2", m=5)
    G = FManifoldModel.from_json(json.loads(json.dumps(F.to_json())))
    assert G.a == F.a and G.euler == F.euler


def test_invalid_builtins():
    with pytest.raises(PreconditionError):
        make_builtin("I2", m=1)
    with pytest.raises(PreconditionError):
        make_builtin("N2", g="t1")
    with pytest.raises(PreconditionError):
        make_builtin("nope")
