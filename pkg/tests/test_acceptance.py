"""Acceptance suite: one function per criterion, each returning (ok, detail).

Run with pytest (a summary line per criterion is printed at the end) or
directly with `python tests/test_acceptance.py`.
"""

import random
import sys
import time
from fractions import Fraction
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from support import commuting_constant_structure, conjugate_constant, random_algebra_model, random_gauge  # noqa: E402
from tepkit.algebra import RationalComplex, Truncation  # noqa: E402
from tepkit.birkhoff import extend_to_pure_tl, tle_hypothesis  # noqa: E402
from tepkit.connection import (apply_gauge, extract_higgs, flatness_residuals, is_flat, pure_tl_check,  # noqa: E402
                               rigidity_solve)
from tepkit.fmanifold import (bracket_closure, example214_ideal, integrability_residual, make_builtin,  # noqa: E402
                              tensor_is_zero)
from tepkit.i2m import (I2mNormalForm, exponents, flat_model, make_normal_form, normalize,  # noqa: E402
                        normalize_truncation, tep_extend)

Q = Fraction
MS = range(3, 9)
RESULTS = {}

# flat structures met along the way; criterion 9 checks all of them
SUITE = []


def _params(rng, m):
    a = Q(rng.randint(-6, 6), rng.randint(1, 5))
    lam = 0 if m % 2 else Q(rng.randint(-6, 6), rng.randint(1, 5))
    return a, lam


def criterion_1():
    rng = random.Random(1)
    tr = Truncation(z_max=8, t_deg=12, n_vars=2)
    count = 0
    for m in MS:
        for _ in range(5):
            S = make_normal_form(m, *_params(rng, m), tr)
            if not all(r.check().ok for r in flatness_residuals(S)):
                return False, f"nonzero residual at m={m}"
            count += 1
            if count % 5 == 1:
                SUITE.append(S)
    return True, f"{count} normal forms flat at z<=8, deg<=12"


def criterion_2():
    rng = random.Random(2)
    count = 0
    for m in MS:
        tr = normalize_truncation(m)
        for _ in range(2):
            alpha, lam = _params(rng, m)
            S0 = make_normal_form(m, alpha, lam, tr)
            want = I2mNormalForm(m, alpha, lam)
            for _ in range(20):
                res = normalize(apply_gauge(S0, random_gauge(rng, tr)), m)
                if res.normal_form != want or not res.report.ok:
                    return False, f"m={m}: got {res.normal_form.to_json()}, want {want.to_json()}"
                count += 1
    return True, f"{count} random gauges normalized back to their (alpha, lambda)"


def criterion_3():
    rng = random.Random(3)
    for m in MS:
        alpha, lam = _params(rng, m)
        ex = exponents(I2mNormalForm(m, alpha, lam))
        labels = {c.label for c in ex.report}
        if not ex.report.ok or not {"8.38", "8.45[B0 diagonal]", "8.45[B1]"} <= labels:
            return False, f"base change checks fail at m={m}"
        a, d = RationalComplex(alpha), RationalComplex(Q(lam) / m)
        want = (a,) if m % 2 else (a - d, a + d)
        if ex.exponents != want:
            return False, f"m={m}: {ex.exponents} != {want}"
    return True, "exponents read from the tau-frame for m = 3..8"


def criterion_4():
    count = 0
    for m in MS:
        for w in range(-2, 4):
            for alpha in sorted({Q(0), Q(w, 2), Q(1)}):
                for lam in ((0, 1) if m % 2 == 0 else (0,)):
                    res = tep_extend(I2mNormalForm(m, alpha, lam), w)
                    expect = alpha == Q(w, 2) and lam == 0
                    if res.ok != expect:
                        return False, f"(m, w, alpha, lambda) = ({m}, {w}, {alpha}, {lam}): ok={res.ok}"
                    if res.ok:
                        labels = {c.label.split("[")[0] for c in res.report}
                        if not {"4.19", "4.20", "4.21", "4.22"} <= labels or res.P0 != [[0, 1], [1, 0]]:
                            return False, f"pairing checks incomplete at m={m}, w={w}"
                        if count % 10 == 0:
                            SUITE.append(res.structure)
                    count += 1
    return True, f"{count} grid points; success exactly at alpha = w/2, lambda = 0"


def criterion_5():
    builtins = [("I2", dict(m=m)) for m in (3, 4, 5, 8)] + [("A1n", dict(n=3)), ("N2", dict(g="t2^2")),
                                                            ("Example214", {})]
    for kind, kw in builtins:
        F = make_builtin(kind, **kw)
        closed = bracket_closure(F).closed
        if closed != tensor_is_zero(integrability_residual(F)):
            return False, f"criterion disagrees on {kind}"
        if closed != (kind != "Example214"):
            return False, f"wrong verdict on {kind}"
    verdicts = set()
    for seed in range(10):
        rng = random.Random(seed)
        F = random_algebra_model(rng, rng.choice([2, 3]), t_deg=5, tdeg=rng.choice([0, 1]))
        closed = bracket_closure(F).closed
        if closed != tensor_is_zero(integrability_residual(F)):
            return False, f"criterion disagrees on random model {seed}"
        verdicts.add(closed)
    res = bracket_closure(make_builtin("Example214"), example214_ideal(make_builtin("Example214")))
    if res.closed or not any(str(w.bracket) == "-y3^2" for w in res.witnesses):
        return False, "Example214 witness -y3^2 missing"
    return True, f"7 builtins and 10 random models agree (verdicts seen: {sorted(verdicts)}); witness -y3^2"


def criterion_6():
    rng = random.Random(6)
    tr = Truncation(z_max=2, t_deg=3, n_vars=2)
    structures = []
    for _ in range(5):
        structures.append(conjugate_constant(commuting_constant_structure(rng, 2, rng.choice([2, 3]), tr), rng))
    for _ in range(5):
        S0 = commuting_constant_structure(rng, 2, 2, tr)
        structures.append(extend_to_pure_tl(apply_gauge(S0, random_gauge(rng, tr, zdeg=1, tdeg=2))).structure)
    for k, S in enumerate(structures):
        if not pure_tl_check(S).ok:
            return False, f"structure {k} is not pure (TL)"
        res = rigidity_solve(S, S)
        if not (res.identity_forced and res.gauge.is_identity()):
            return False, f"structure {k}: rigidity did not return the identity"
    SUITE.extend(structures[::3])
    return True, "10 pure (TL) structures rigid"


def criterion_7():
    tr = Truncation(z_max=3, t_deg=5, n_vars=2)
    for m in MS:
        S = make_normal_form(m, Q(1, 3), 0 if m % 2 else 2, tr)
        ext = extend_to_pure_tl(S, require_tle=True)
        if not (ext.report.ok and pure_tl_check(ext.structure).ok and ext.psi @ ext.psi_0 == ext.psi_inf):
            return False, f"normal form m={m}"
    rng = random.Random(7)
    tr = Truncation(z_max=2, t_deg=3, n_vars=2)
    for k in range(5):
        r = rng.choice([2, 3])
        S = apply_gauge(commuting_constant_structure(rng, 2, r, tr), random_gauge(rng, tr, r=r, zdeg=1, tdeg=2))
        ext = extend_to_pure_tl(S)
        if not (pure_tl_check(ext.structure).ok and ext.psi @ ext.psi_0 == ext.psi_inf):
            return False, f"random rank-{r} structure {k}"
        SUITE.append(ext.structure)
    tr = Truncation(z_max=2, t_deg=4, n_vars=2)
    for k in range(3):
        S = apply_gauge(make_normal_form(4, Q(k, 3), 0, tr), random_gauge(rng, tr, zdeg=1, tdeg=2, t0_identity=True))
        if not tle_hypothesis(S):
            return False, "TE input lacks the logarithmic restriction"
        out = extend_to_pure_tl(S, require_tle=True).structure
        B1 = out.B.z_coefficient(1)
        if not (out.B.map(lambda a: a.z_part(lo=2)).is_zero() and B1 == B1.at_t0()):
            return False, f"TE input {k}: B is not B0 + z B1 with constant B1"
        SUITE.append(out)
    return True, "6 normal forms, 5 random (T) and 3 (TE) inputs"


def criterion_8():
    rng = random.Random(8)
    for m in MS:
        fm = flat_model(I2mNormalForm(m, *_params(rng, m)))
        labels = {c.label.split("[")[0] for c in fm.report}
        if not fm.report.ok or not {"3.1", "6.5", "8.57", "8.58"} <= labels:
            return False, f"flat model m={m}"
        for w in (-1, 0, 2):
            fm = flat_model(I2mNormalForm(m, Q(w, 2), 0), w)
            lie = [c for c in fm.report if c.label.startswith("3.5")]
            if not fm.report.ok or not lie or fm.flat.metric is None:
                return False, f"flat model with pairing m={m}, w={w}"
    return True, "axioms, 6.5, 8.57, 8.58 and Lie_E g = (2-d-w) g for m = 3..8"


def criterion_9():
    if not SUITE:
        # standalone runs of this criterion collect a small suite of their own
        tr = Truncation(z_max=2, t_deg=5, n_vars=2)
        SUITE.extend(make_normal_form(m, Q(1, 2), 0 if m % 2 else 1, tr) for m in MS)
    count = 0
    for S in SUITE:
        if not is_flat(S):
            return False, "suite member not flat"
        bad = [r for r in extract_higgs(S).invariants() if not r.ok]
        if bad:
            return False, f"{bad[0].label} fails on a {S.kind}-structure"
        count += 1
    return True, f"Higgs invariants hold on {count} flat structures"


CRITERIA = [
    (1, "normal-form flatness", criterion_1, 5),
    (2, "normal-form uniqueness", criterion_2, 60),
    (3, "regular singular exponents", criterion_3, 2),
    (4, "TEP criterion", criterion_4, 5),
    (5, "F-manifold bracket criterion", criterion_5, 10),
    (6, "rigidity", criterion_6, 10),
    (7, "Birkhoff pipeline", criterion_7, 30),
    (8, "flat F-manifold recipe", criterion_8, 10),
    (9, "Higgs package coherence", criterion_9, 5),
]


def run_criterion(number, fn, budget):
    start = time.perf_counter()
    ok, detail = fn()
    elapsed = time.perf_counter() - start
    if ok and elapsed > budget:
        ok, detail = False, f"{detail}; {elapsed:.1f}s exceeds the {budget}s budget"
    RESULTS[number] = (ok, detail, elapsed)
    return ok, detail


def summary_lines():
    lines = []
    for number, name, _, budget in CRITERIA:
        if number in RESULTS:
            ok, detail, elapsed = RESULTS[number]
            lines.append(f"criterion {number} {'PASS' if ok else 'FAIL'}  {name} ({elapsed:.2f}s/{budget}s): {detail}")
    return lines


@pytest.mark.parametrize("number,name,fn,budget", CRITERIA, ids=[f"criterion_{c[0]}" for c in CRITERIA])
def test_criterion(number, name, fn, budget):
    ok, detail = run_criterion(number, fn, budget)
    print(f"criterion {number} {'PASS' if ok else 'FAIL'}  {name}: {detail}")
    assert ok, detail


if __name__ == "__main__":
    for number, name, fn, budget in CRITERIA:
        run_criterion(number, fn, budget)
    print("\n".join(summary_lines()))
    sys.exit(0 if all(r[0] for r in RESULTS.values()) else 1)
