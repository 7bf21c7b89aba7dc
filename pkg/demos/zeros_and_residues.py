"""Critical-line zeros of L(s, chi_-4) and the trivial-zero residues of x^s/(L(s) s)."""

from explicit_mobius.characters import from_label
from explicit_mobius.explicit import inverse_l, residue_quadrature, trivial_residue_primitive
from explicit_mobius.zeros import argument_count, scan_zeros

chi = from_label("4.1")
cache = scan_zeros(chi, 40)
print(f"zeros of L(s, {chi.label}) with 0 < t < 40: {len(cache)} "
      f"(argument principle: {argument_count(chi, 40)})")
print("  " + " ".join(f"{g:.6f}" for g in cache.ordinates))

x = 10.0
inv = inverse_l(chi)
print(f"\nresidues at s = -l, x = {x}: closed form vs contour quadrature")
for l in range(0, 7):
    closed = trivial_residue_primitive(x, chi, l).value
    quad = residue_quadrature(x, complex(-l), 0.3, inv).value
    print(f"  l={l}  {closed:+.6e}  {quad:+.6e}")
