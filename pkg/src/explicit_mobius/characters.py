"""Dirichlet characters with exact values.

A character mod q is stored as an exponent vector on a fixed set of generators
of (Z/qZ)^*: one generator per odd prime power, and for the 2-part either -1
(q divisible by 4 exactly) or the pair {-1, 5} (8 | q).  Values are rational
angles k/E with E the exponent of the unit group, so χ(n) = exp(2πi k/E).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import gcd
from typing import Iterable

import numpy as np

from .arith import divisors, factorize, lcm, primitive_root_prime_power


@dataclass(frozen=True)
class UnitGroup:
    modulus: int
    generators: tuple[int, ...]
    orders: tuple[int, ...]
    exponent: int
    dlog: np.ndarray = field(repr=False)  # (q, r) exponents, -1 rows for non-units

    @property
    def rank(self) -> int:
        return len(self.orders)


def _crt_lift(local: int, pk: int, q: int) -> int:
    # x ≡ local (mod pk), x ≡ 1 (mod q/pk)
    rest = q // pk
    if rest == 1:
        return local % q
    inv = pow(rest, -1, pk)
    return (1 + rest * ((local - 1) * inv % pk)) % q


@lru_cache(maxsize=None)
def unit_group(q: int) -> UnitGroup:
    if q < 1:
        raise ValueError(f"modulus must be positive, got {q}")
    n = np.arange(q)
    gens: list[int] = []
    orders: list[int] = []
    cols: list[np.ndarray] = []
    for p, e in factorize(q):
        pk = p**e
        if p == 2:
            if e == 1:
                continue
            r = n % pk
            odd = (r % 2) == 1
            sign = np.where(r % 4 == 3, 1, 0)
            gens.append(_crt_lift(pk - 1, pk, q))
            orders.append(2)
            if e == 2:
                cols.append(np.where(odd, sign, -1))
                continue
            ord5 = 2 ** (e - 2)
            log5 = np.full(pk, -1, dtype=np.int64)
            x = 1
            for k in range(ord5):
                log5[x] = k
                x = x * 5 % pk
            m = np.where(sign == 1, (pk - r) % pk, r)
            cols.append(np.where(odd, sign, -1))
            cols.append(np.where(odd, log5[m], -1))
            gens.append(_crt_lift(5, pk, q))
            orders.append(ord5)
        else:
            g = primitive_root_prime_power(p, e)
            order = pk // p * (p - 1)
            table = np.full(pk, -1, dtype=np.int64)
            x = 1
            for k in range(order):
                table[x] = k
                x = x * g % pk
            cols.append(table[n % pk])
            gens.append(_crt_lift(g, pk, q))
            orders.append(order)
    dlog = np.stack(cols, axis=1) if cols else np.zeros((q, 0), dtype=np.int64)
    units = np.array([gcd(int(k), q) == 1 for k in range(q)])
    dlog[~units] = -1
    E = 1
    for o in orders:
        E = lcm(E, o)
    dlog.setflags(write=False)
    return UnitGroup(q, tuple(gens), tuple(orders), E, dlog)


@lru_cache(maxsize=None)
def _roots_of_unity(E: int) -> np.ndarray:
    k = np.arange(E)
    z = np.exp(2j * np.pi * k / E)
    # snap the quarter turns so real characters are exactly ±1
    for num, val in ((0, 1), (1, 1j), (2, -1), (3, -1j)):
        if (num * E) % 4 == 0:
            z[num * E // 4] = val
    z.setflags(write=False)
    return z


class DirichletCharacter:
    """A Dirichlet character χ mod q, evaluated exactly through rational angles."""

    __slots__ = (
        "modulus", "exponent_vector", "conductor", "parity_kappa",
        "is_primitive", "label", "denominator", "_angles",
    )

    def __init__(self, modulus: int, exponent_vector: Iterable[int]):
        G = unit_group(modulus)
        ev = tuple(int(c) % o for c, o in zip(exponent_vector, G.orders))
        if len(ev) != G.rank:
            raise ValueError(
                f"exponent vector of length {G.rank} expected for modulus {modulus}"
            )
        self.modulus = modulus
        self.exponent_vector = ev
        self.denominator = G.exponent
        if G.rank:
            w = np.array([c * (G.exponent // o) for c, o in zip(ev, G.orders)], dtype=np.int64)
            ang = (G.dlog @ w) % G.exponent
            ang[G.dlog[:, 0] < 0] = -1
        else:
            ang = np.zeros(modulus, dtype=np.int64)
            if modulus > 1:  # modulus 2
                ang[0] = -1
        ang.setflags(write=False)
        self._angles = ang
        self.conductor = self._find_conductor()
        self.is_primitive = self.conductor == modulus
        minus_one = ang[(modulus - 1) % modulus]
        self.parity_kappa = 0 if minus_one == 0 else 1
        self.label = str(modulus) if not ev else f"{modulus}." + "_".join(map(str, ev))

    def _find_conductor(self) -> int:
        q = self.modulus
        ang = self._angles
        n = np.arange(q)
        units = ang >= 0
        for d in divisors(q):
            mask = units & (n % d == 1 % d)
            if np.all(ang[mask] == 0):
                return d
        return q

    # -- evaluation -------------------------------------------------------
    def angle(self, n: int) -> Fraction | None:
        """Argument of χ(n) divided by 2π, or None when gcd(n, q) > 1."""
        k = int(self._angles[n % self.modulus])
        return None if k < 0 else Fraction(k, self.denominator)

    def angle_index(self, n):
        """Integer angle numerators over ``denominator``; -1 off the units."""
        return self._angles[np.asarray(n) % self.modulus]

    def __call__(self, n: int) -> complex:
        k = int(self._angles[n % self.modulus])
        return 0j if k < 0 else complex(_roots_of_unity(self.denominator)[k])

    def values(self, n) -> np.ndarray:
        k = self._angles[np.asarray(n) % self.modulus]
        z = _roots_of_unity(self.denominator)
        return np.where(k >= 0, z[np.maximum(k, 0)], 0)

    # -- structure --------------------------------------------------------
    @property
    def is_principal(self) -> bool:
        return all(c == 0 for c in self.exponent_vector)

    @property
    def is_real(self) -> bool:
        return bool(np.all((2 * self._angles[self._angles >= 0]) % self.denominator == 0))

    @property
    def order(self) -> int:
        ks = self._angles[self._angles >= 0]
        o = 1
        for k in set(int(v) for v in ks):
            o = lcm(o, self.denominator // gcd(k, self.denominator))
        return o

    def conj(self) -> "DirichletCharacter":
        G = unit_group(self.modulus)
        return character(self.modulus, tuple((-c) % o for c, o in zip(self.exponent_vector, G.orders)))

    def __mul__(self, other: "DirichletCharacter") -> "DirichletCharacter":
        if other.modulus != self.modulus:
            raise ValueError("characters of different moduli")
        G = unit_group(self.modulus)
        return character(
            self.modulus,
            tuple((a + b) % o for a, b, o in zip(self.exponent_vector, other.exponent_vector, G.orders)),
        )

    def __eq__(self, other):
        return (
            isinstance(other, DirichletCharacter)
            and self.modulus == other.modulus
            and self.exponent_vector == other.exponent_vector
        )

    def __hash__(self):
        return hash((self.modulus, self.exponent_vector))

    def __repr__(self):
        kind = "odd" if self.parity_kappa else "even"
        prim = "primitive" if self.is_primitive else f"conductor {self.conductor}"
        return f"DirichletCharacter({self.label}, {kind}, {prim})"

    def write_value_table(self, fh, N: int) -> None:
        """CSV rows ``n, Re χ(n), Im χ(n)`` for n = 1..N."""
        w = csv.writer(fh)
        w.writerow(["n", "re", "im"])
        vals = self.values(np.arange(1, N + 1))
        for n, v in enumerate(vals, start=1):
            w.writerow([n, repr(float(v.real)), repr(float(v.imag))])


@lru_cache(maxsize=None)
def character(modulus: int, exponent_vector: tuple[int, ...]) -> DirichletCharacter:
    return DirichletCharacter(modulus, exponent_vector)


@dataclass(frozen=True)
class CharacterGroup:
    modulus: int
    characters: tuple[DirichletCharacter, ...]
    euler_phi: int

    @property
    def principal(self) -> DirichletCharacter:
        return self.characters[0]

    def primitive(self) -> list[DirichletCharacter]:
        return [c for c in self.characters if c.is_primitive]

    def __iter__(self):
        return iter(self.characters)

    def __len__(self):
        return len(self.characters)

    def __getitem__(self, label: str) -> DirichletCharacter:
        for c in self.characters:
            if c.label == label:
                return c
        raise KeyError(label)


@lru_cache(maxsize=None)
def build_group(q: int) -> CharacterGroup:
    if q < 1:
        raise ValueError(f"modulus must be a positive integer, got {q}")
    G = unit_group(q)
    vecs = sorted(np.ndindex(*G.orders)) if G.rank else [()]
    chars = tuple(character(q, tuple(int(c) for c in v)) for v in vecs)
    return CharacterGroup(q, chars, len(chars))


def from_label(label: str) -> DirichletCharacter:
    q, _, rest = label.partition(".")
    ev = tuple(int(c) for c in rest.split("_")) if rest else ()
    return character(int(q), ev)


def trivial_character() -> DirichletCharacter:
    return character(1, ())


def from_values(q: int, values: dict[int, complex]) -> DirichletCharacter:
    """The unique character mod q matching the given values (first match)."""
    for chi in build_group(q):
        if all(abs(chi(n) - v) < 1e-12 for n, v in values.items()):
            return chi
    raise ValueError(f"no character mod {q} with values {values}")


def primitive_inducer(chi: DirichletCharacter) -> DirichletCharacter:
    """The primitive character χ* mod cond(χ) that induces χ."""
    if chi.is_primitive:
        return chi
    q, d = chi.modulus, chi.conductor
    Gd = unit_group(d)
    ev = []
    for g, o in zip(Gd.generators, Gd.orders):
        m = g
        while gcd(m, q) != 1:
            m += d
        k = int(chi.angle_index(m))
        # χ(m) = exp(2πi k/E_q) must equal exp(2πi c/o)
        ev.append(k * o // chi.denominator)
    star = character(d, tuple(ev))
    units = np.array([n for n in range(1, q + 1) if gcd(n, q) == 1])
    if not np.array_equal(star.angle_index(units) * chi.denominator,
                          chi.angle_index(units) * star.denominator):
        raise AssertionError(f"inducer mismatch for {chi.label}")
    return star


def gauss_sum(chi: DirichletCharacter) -> complex:
    q = chi.modulus
    a = np.arange(1, q + 1)
    terms = chi.values(a) * _roots_of_unity(q)[a % q]
    return complex(math.fsum(terms.real), math.fsum(terms.imag))


def epsilon_factor(chi: DirichletCharacter) -> complex:
    """Root number τ(χ)/(i^κ √q) of the functional equation; χ must be primitive."""
    if not chi.is_primitive:
        raise ValueError(f"{chi.label} is not primitive")
    return gauss_sum(chi) / (1j**chi.parity_kappa * math.sqrt(chi.modulus))
