"""
A commutative, associative multiplication that is not an F-manifold
====================================================================

The four-dimensional example fails integrability; the Poisson bracket
of two generators of its spectral ideal leaves the ideal, and the
leftover term is the witness.
"""

from tepkit.fmanifold import (bracket_closure, example214_ideal, integrability_residual, make_builtin,
                              tensor_is_zero, verify_algebra)

F = make_builtin("Example214")
print("commutative, associative, unital:", verify_algebra(F).ok)
print("integrability tensor vanishes:", tensor_is_zero(integrability_residual(F)))

res = bracket_closure(F, example214_ideal(F))
print("ideal closed under the bracket:", res.closed)
for w in res.witnesses:
    print("  bracket", w.bracket)

# I2(m) passes both tests
G = make_builtin("I2", m=5)
print("I2(5):", bracket_closure(G).closed, tensor_is_zero(integrability_residual(G)))
