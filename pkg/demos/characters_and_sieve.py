"""Character groups, the Möbius sieve, and the twisted/progression summatory functions."""

from explicit_mobius.characters import build_group, epsilon_factor, gauss_sum, primitive_inducer
from explicit_mobius.sieve import mertens, mobius_sieve, summatory_progression, summatory_twisted

table = mobius_sieve(10**6)
print("M(10^k):", [mertens(10**k, table) for k in range(1, 7)])

G = build_group(12)
print(f"\ncharacters mod 12 ({len(G)}):")
for chi in G:
    star = primitive_inducer(chi)
    tau = gauss_sum(star)
    print(f"  {chi.label:6s} conductor {chi.conductor:2d}  parity {chi.parity_kappa}  "
          f"|tau*|^2 = {abs(tau) ** 2:.6f}  eps* = {complex(epsilon_factor(star)):.3f}")

x = 1000.5
print(f"\nM*({x}; 12, a) from the sieve and from the character average:")
for a in (1, 5, 7, 11):
    avg = sum(chi(a).conjugate() * summatory_twisted(x, chi, table) for chi in G) / len(G)
    print(f"  a={a:2d}  {summatory_progression(x, 12, a, table):+.1f}  {avg.real:+.1f}")
