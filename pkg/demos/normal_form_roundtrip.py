"""
Normal forms over I2(m) survive a random gauge
==============================================

Build the normal form for (m, alpha, lambda), hide it behind a random
polynomial gauge, and let normalize find the parameters again.
"""

import random
from fractions import Fraction

from tepkit.algebra import MatrixSeries, TruncatedSeries
from tepkit.connection import GaugeTransform, apply_gauge, is_flat
from tepkit.i2m import exponents, make_normal_form, normalize, normalize_truncation

m, alpha, lam = 6, Fraction(1, 3), Fraction(-2, 5)
tr = normalize_truncation(m)
S = make_normal_form(m, alpha, lam, tr)
print("normal form flat:", is_flat(S))

# a gauge with invertible constant part, entries of z-degree and t-degree <= 2
rng = random.Random(0)


def entry():
    terms = [((z, (a, d - a)), Fraction(rng.randint(-3, 3), rng.randint(1, 3)))
             for z in range(3) for d in range(3) for a in range(d + 1) if rng.random() < 0.4]
    return TruncatedSeries.from_terms(terms, tr)


while True:
    T = MatrixSeries([[entry(), entry()], [entry(), entry()]], tr)
    c = T.constant_part()
    if c[0][0] * c[1][1] != c[0][1] * c[1][0]:
        break
hidden = apply_gauge(S, GaugeTransform(T))
print("A2 after the gauge:", hidden.A[1][0, 0])

res = normalize(hidden, m)
print("recovered:", res.normal_form.to_json())
for line in res.report.lines():
    print("  ", line)

# the exponents are read from the tau-frame, not from a formula
ex = exponents(res.normal_form)
print("exponents:", [str(e) for e in ex.exponents])
