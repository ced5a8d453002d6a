"""
Pairings and the flat F-manifold of I2(m)
=========================================

A pairing of weight w exists exactly when lambda = 0 and alpha = w/2.
With it, the flat F-manifold built from the first frame vector carries
a metric with Lie_E g = (2 - d - w) g.
"""

from fractions import Fraction

from tepkit.i2m import I2mNormalForm, flat_model, tep_extend

w = 1
for alpha, lam in [(Fraction(1, 2), 0), (Fraction(1, 2), 1), (0, 0)]:
    res = tep_extend(I2mNormalForm(4, alpha, lam), w)
    print(f"alpha={alpha}, lambda={lam}:", f"P0 = {[[str(x) for x in row] for row in res.P0]}" if res.ok else f"refused: {res.reason}")

fm = flat_model(I2mNormalForm(4, Fraction(1, 2), 0), w=w)
print("flat model checks pass:", fm.report.ok, f"({len(fm.report.checks)} checks)")
print("d =", fm.flat.d)
print("vector potential:", [str(c) for c in fm.potential])

# lambda != 0 bends the flat coordinates
fm = flat_model(I2mNormalForm(6, 0, 1))
print("beta =", fm.beta)
print("flat coordinates:", [str(c) for c in fm.flat.flat_coordinates])
