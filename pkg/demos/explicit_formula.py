"""Theorem-style explicit formulas against the sieve: residual as x and T vary."""

from explicit_mobius.characters import from_label
from explicit_mobius.explicit import Workspace, assemble_corollary1, assemble_theorem1, assemble_theorem2

ws = Workspace()
print(f"{'formula':11s} {'subject':8s} {'x':>7s} {'T':>5s} {'T_nu':>8s} {'truth':>8s} {'total':>9s} {'residual':>9s}")
for T in (50, 100, 150):
    for x in (50.5, 100.5, 250.5):
        for r in (assemble_theorem1(x, from_label("4.1"), T, ws),
                  assemble_theorem2(x, from_label("6.1"), T, ws),
                  assemble_corollary1(x, 4, 3, T, ws)):
            print(f"{r.formula:11s} {r.subject:8s} {x:7.1f} {T:5.0f} {r.T_nu:8.2f} {r.sieve_truth.real:8.2f} "
                  f"{r.formula_total.real:9.3f} {abs(r.residual):9.3f}")
