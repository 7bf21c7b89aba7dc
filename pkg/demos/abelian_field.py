"""Q(i) from its character group: invariants, ideal counts, and the field explicit formula."""

import numpy as np

from explicit_mobius.explicit import Workspace, assemble_theorem3, derivative_sum_field
from explicit_mobius.field import gaussian, rationals
from explicit_mobius.sieve import field_coefficients, summatory_field

K = gaussian()
print(K, f"kappa = {K.kappa:.12f} (pi/4 = {np.pi / 4:.12f})")

coeffs = field_coefficients(K, 10**5 + 1)
A = np.cumsum(coeffs.ideal_counts[1:])
for n in (10**3, 10**4, 10**5):
    print(f"  A({n})/{n} = {A[n - 1] / n:.5f}   M_K*({n}.5) = {summatory_field(n + 0.5, coeffs):+.1f}")

ws = Workspace()
r = assemble_theorem3(100.5, K, 150, ws)
print(f"\nexplicit formula at x=100.5, T=150: truth {r.sieve_truth.real:+.3f}, "
      f"formula {r.formula_total.real:+.3f}, residual {abs(r.residual):.3f}, s=0 term {r.s_zero_term.real:+.4f}")

for T in (50, 100, 200):
    d = derivative_sum_field(rationals(), T, ws, use_good_ordinate=False)
    print(f"  sum 1/zeta'(rho), 0<gamma<{T}: {d.sum:.3f}   T/2pi = {T / (2 * np.pi):.3f}")
