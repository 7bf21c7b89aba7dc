"""Abelian number fields described by their character groups.

K ⊂ Q(ζ_m) corresponds to a subgroup X(K) of the characters mod m, and
ζ_K(s) = ∏_{χ ∈ X(K)} L(s, χ*).  Degree, signature, discriminant and the
residue at s = 1 all follow from X(K) without any polynomial arithmetic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import reduce

import numpy as np

from .arith import lcm
from .characters import (
    DirichletCharacter,
    build_group,
    from_label,
    primitive_inducer,
    trivial_character,
)
from .lfunc import DEFAULT_POLICY, PrecisionPolicy, dedekind_jet, l_eval, l_values
from .zeros import GoodOrdinate, grid_minimize

FORMAT_HEADER = "abelian-field 1"


@dataclass(frozen=True, eq=False)
class AbelianField:
    modulus: int
    characters: tuple[DirichletCharacter, ...]
    label: str
    cyclotomic_conductor: int
    degree: int
    signature: tuple[int, int]
    discriminant: int
    kappa: float

    @property
    def r1(self) -> int:
        return self.signature[0]

    @property
    def r2(self) -> int:
        return self.signature[1]

    @property
    def primitive_characters(self) -> list[DirichletCharacter]:
        return [primitive_inducer(c) for c in self.characters]

    def __repr__(self):
        return (f"AbelianField({self.label}, m={self.modulus}, n={self.degree}, "
                f"sig={self.signature}, d={self.discriminant})")


def _closure(m: int, gens: list[DirichletCharacter]) -> list[DirichletCharacter]:
    group = [build_group(m).principal]
    frontier = list(group)
    while frontier:
        new = []
        for x in frontier:
            for g in gens:
                y = x * g
                if y not in group:
                    group.append(y)
                    new.append(y)
        frontier = new
    return group


def _is_subgroup(chars: list[DirichletCharacter]) -> bool:
    s = set(chars)
    return bool(s) and all(a * b.conj() in s for a in s for b in s)


def build_field(m: int, generators, label: str | None = None, exact: bool = False,
                policy: PrecisionPolicy = DEFAULT_POLICY) -> AbelianField:
    """Field cut out by the subgroup of characters mod m generated by ``generators``.

    With exact=True the list is taken as the full subgroup and rejected if it is not one.
    """
    gens = [from_label(g) if isinstance(g, str) else g for g in generators]
    for g in gens:
        if g.modulus != m:
            raise ValueError(f"{g.label} is not a character mod {m}")
    if exact:
        chars = list(dict.fromkeys(gens))
        if not _is_subgroup(chars):
            raise ValueError("character list is not a subgroup")
    else:
        chars = _closure(m, gens)
    chars.sort(key=lambda c: c.exponent_vector)
    n = len(chars)
    # complex conjugation is one element of Gal(K/Q): either every embedding is
    # real, or none is and the odd characters are exactly half of X(K)
    odd = sum(c.parity_kappa for c in chars)
    if odd and odd * 2 != n:
        raise ValueError("odd characters must form exactly half of X(K)")
    r2 = odd
    r1 = n - 2 * r2
    conds = [c.conductor for c in chars]
    disc = (-1) ** r2 * math.prod(conds)
    kappa = 1.0
    for c in chars:
        if not c.is_principal:
            kappa *= l_eval(1.0, primitive_inducer(c), policy).value.real
    f = reduce(lcm, conds, 1)
    if label is None:
        label = f"K{m}." + "+".join(c.label.split(".", 1)[-1] for c in chars)
    return AbelianField(m, tuple(chars), label, f, n, (r1, r2), disc, kappa)


# -- standard fields ---------------------------------------------------------------

def rationals() -> AbelianField:
    return build_field(1, [trivial_character()], label="Q")


def quadratic_field(D: int) -> AbelianField:
    """Q(√D) for a fundamental discriminant D."""
    q = abs(D)
    want = 1 if D < 0 else 0
    for c in build_group(q):
        if c.is_primitive and c.is_real and c.order == 2 and c.parity_kappa == want:
            return build_field(q, [c], label=f"Q(sqrt({D}))" if D != -4 else "Q(i)")
    raise ValueError(f"{D} is not a fundamental discriminant")


def gaussian() -> AbelianField:
    return quadratic_field(-4)


def cyclotomic(m: int) -> AbelianField:
    G = build_group(m)
    K = build_field(m, list(G), label=f"Q(zeta_{m})", exact=True)
    return K


# -- analytic data -------------------------------------------------------------------

def good_ordinate_field(K: AbelianField, T: float, sigma_grid_step: float = 0.25,
                        t_grid_step: float = 0.05, policy: PrecisionPolicy = DEFAULT_POLICY):
    """Grid minimizer of max_σ 1/|ζ_K(σ + it)| over t ∈ [T, 2T].

    Returns the GoodOrdinate and, for comparison, the product of the per-character
    σ-maxima at the same t (never smaller than the attained bound).
    """
    stars = K.primitive_characters

    def inv_abs(s):
        with np.errstate(divide="ignore"):
            return 1.0 / np.abs(dedekind_jet(s, K, 0, policy)[0][0])

    t, b = grid_minimize(T, inv_abs, sigma_grid_step, t_grid_step)
    sig = 0.5 + sigma_grid_step * np.arange(int(math.floor(1.5 / sigma_grid_step + 1e-9)) + 1)
    per = 1.0
    for c in stars:
        per *= float(np.max(1.0 / np.abs(l_values(sig + 1j * t, c, policy))))
    g = GoodOrdinate(t, b, t_grid_step, sigma_grid_step, T, tuple(c.label for c in K.characters))
    return g, per


# -- text format ---------------------------------------------------------------------

def serialize(K: AbelianField) -> str:
    lines = [
        FORMAT_HEADER,
        f"label {K.label}",
        f"m {K.modulus}",
        "characters " + " ".join(c.label for c in K.characters),
        f"degree {K.degree}",
        f"signature {K.r1} {K.r2}",
        f"discriminant {K.discriminant}",
        f"kappa {K.kappa!r}",
        f"conductor {K.cyclotomic_conductor}",
    ]
    return "\n".join(lines) + "\n"


def parse(text: str, policy: PrecisionPolicy = DEFAULT_POLICY) -> AbelianField:
    """Rebuild a field from its text form and check the stored constants."""
    rows = [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    if not rows or rows[0] != FORMAT_HEADER:
        raise ValueError("missing field descriptor header")
    kv = {}
    for ln in rows[1:]:
        k, _, v = ln.partition(" ")
        kv[k] = v
    K = build_field(int(kv["m"]), kv["characters"].split(), label=kv.get("label"), exact=True, policy=policy)
    if "discriminant" in kv and int(kv["discriminant"]) != K.discriminant:
        raise ValueError("stored discriminant disagrees with the character data")
    if "kappa" in kv and abs(float(kv["kappa"]) - K.kappa) > 1e-9 * K.kappa:
        raise ValueError("stored residue disagrees with the character data")
    return K
