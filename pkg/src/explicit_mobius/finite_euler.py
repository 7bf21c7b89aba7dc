"""The finite Euler product F(s) = ∏_{p | q} (1 − χ*(p) p^{-s}).

F links an imprimitive L-function to its primitive inducer,
L(s, χ) = L(s, χ*) F(s).  Only primes p | q with p ∤ d = cond(χ) contribute,
since χ*(p) = 0 for p | d.  Every factor vanishes on an arithmetic lattice on
the imaginary axis: 1 − e^{iθ_p} p^{-iη} = 0 exactly when
η = (θ_p + 2πk)/log p.  Nothing here needs root finding.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple

import numpy as np

from .arith import factorize, prime_divisors
from .characters import DirichletCharacter, primitive_inducer

COLLISION_TOL = 1e-12
PROP6_CONSTANT = 5.0   # engineering stand-in for the unstated O-constant
BOUND43_C = 2.0


class LatticeZero(NamedTuple):
    eta: float
    primes: tuple[int, ...]
    multiplicity: int

    @property
    def collided(self) -> bool:
        return self.multiplicity > 1


@dataclass(frozen=True, eq=False)
class FiniteEulerProduct:
    q: int
    chi: DirichletCharacter
    chi_star: DirichletCharacter
    active_primes: tuple[int, ...]
    unit_primes: tuple[int, ...]
    angles: tuple[Fraction, ...]   # arg χ*(p) / 2π for each active prime
    b_constant: complex

    @property
    def r(self) -> int:
        return len(self.unit_primes)

    @property
    def is_trivial(self) -> bool:
        return not self.active_primes

    @property
    def rad_ratio(self) -> int:
        """q'/d' = rad(q)/rad(d), the product of the active primes."""
        return math.prod(self.active_primes)

    @property
    def omega(self) -> int:
        return len(self.active_primes)

    def coefficients(self) -> np.ndarray:
        return np.array([self.chi_star(p) for p in self.active_primes], dtype=complex)

    def values(self, s) -> np.ndarray:
        s = np.asarray(s, dtype=complex)
        out = np.ones_like(s)
        for p, c in zip(self.active_primes, self.coefficients()):
            out = out * (1.0 - c * np.exp(-s * math.log(p)))
        return out

    def __call__(self, s):
        v = self.values(np.atleast_1d(s))
        return complex(v[0]) if np.ndim(s) == 0 else v

    def jet(self, s, K: int) -> np.ndarray:
        """Taylor coefficients of F at the points s, shape (K + 1, M)."""
        from .lfunc import jet_mul

        s = np.atleast_1d(np.asarray(s, dtype=complex))
        out = np.zeros((K + 1, len(s)), dtype=complex)
        out[0] = 1.0
        for p, c in zip(self.active_primes, self.coefficients()):
            L = math.log(p)
            f = np.stack([-c * np.exp(-s * L) * (-L) ** j / math.factorial(j) for j in range(K + 1)])
            f[0] += 1.0
            out = jet_mul(out, f)
        return out

    def log_derivative(self, s):
        s = np.asarray(s, dtype=complex)
        out = np.zeros_like(s)
        for p, c in zip(self.active_primes, self.coefficients()):
            L = math.log(p)
            e = c * np.exp(-s * L)
            out = out + L * e / (1.0 - e)
        return out

    def exp_a(self) -> complex:
        """lim_{s→0} F(s)/s^r = ∏_{χ*(p)=1} log p · ∏_{others} (1 − χ*(p))."""
        v = 1.0 + 0j
        for p, a, c in zip(self.active_primes, self.angles, self.coefficients()):
            v *= math.log(p) if a == 0 else (1.0 - c)
        return v


def build_product(chi: DirichletCharacter) -> FiniteEulerProduct:
    star = primitive_inducer(chi)
    d = star.modulus
    active, unit, angles = [], [], []
    for p in prime_divisors(chi.modulus):
        if d % p == 0:
            continue
        a = star.angle(p)
        active.append(p)
        angles.append(a)
        if a == 0:
            unit.append(p)
    F = FiniteEulerProduct(chi.modulus, chi, star, tuple(active), tuple(unit), tuple(angles), 0j)
    object.__setattr__(F, "b_constant", b_constant(F))
    return F


def b_constant(F: FiniteEulerProduct) -> complex:
    """b = −½ log(q'/d') + i Σ Im χ*(p)/(2 − 2 Re χ*(p)) · log p over χ*(p) ≠ 1."""
    im = 0.0
    for p, a, c in zip(F.active_primes, F.angles, F.coefficients()):
        if a != 0:
            im += c.imag / (2.0 - 2.0 * c.real) * math.log(p)
    return complex(-0.5 * math.log(F.rad_ratio) if F.active_primes else 0.0, im)


def _prime_lattice(p: int, angle: Fraction, lo: float, hi: float) -> np.ndarray:
    """All η in [lo, hi] with η log p ≡ 2π·angle mod 2π."""
    L = math.log(p)
    th = 2 * math.pi * float(angle)
    k0 = math.ceil((lo * L - th) / (2 * math.pi)) - 1
    k1 = math.floor((hi * L - th) / (2 * math.pi)) + 1
    ks = np.arange(k0, k1 + 1)
    eta = (th + 2 * math.pi * ks) / L
    if angle == 0:
        eta[ks == 0] = 0.0  # exact
    return eta[(eta >= lo) & (eta <= hi)]


def zero_lattice(F: FiniteEulerProduct, T: float, include_zero: bool = False) -> list[LatticeZero]:
    """Zeros iη of F with |η| < T, η ≠ 0 (the r-fold zero at 0 on request)."""
    pts = []
    for p, a in zip(F.active_primes, F.angles):
        for e in _prime_lattice(p, a, -T, T):
            if abs(e) < T and (e != 0.0):
                pts.append((float(e), p))
    pts.sort()
    merged: list[LatticeZero] = []
    for e, p in pts:
        if merged and abs(e - merged[-1].eta) <= COLLISION_TOL * max(1.0, abs(e)):
            last = merged[-1]
            merged[-1] = LatticeZero(last.eta, last.primes + (p,), last.multiplicity + 1)
        else:
            merged.append(LatticeZero(e, (p,), 1))
    if include_zero and F.r:
        merged.append(LatticeZero(0.0, F.unit_primes, F.r))
        merged.sort(key=lambda z: z.eta)
    return merged


def hadamard_check(F: FiniteEulerProduct, s: complex, K: int) -> float:
    """|s^r e^{a+bs} ∏_η (1 − s/iη) e^{s/iη} / F(s) − 1| with K lattice points on each side per prime."""
    s = complex(s)
    log_prod = F.r * np.log(s) + np.log(F.exp_a()) + F.b_constant * s
    for p, a in zip(F.active_primes, F.angles):
        L = math.log(p)
        th = 2 * math.pi * float(a)
        ks = np.arange(-K - 1, K + 2)
        eta = (th + 2 * math.pi * ks) / L
        if a == 0:
            eta = eta[ks != 0]
        eta = eta[np.argsort(np.abs(eta), kind="stable")][: 2 * K]
        u = s / (1j * eta)
        log_prod = log_prod + np.sum(np.log1p(-u) + u)
    return float(abs(np.exp(log_prod) / F(s) - 1.0))


class ZeroCount(NamedTuple):
    count: int
    bound: float

    @property
    def ok(self) -> bool:
        return self.count <= self.bound + 1e-12


def count_zeros(F: FiniteEulerProduct, t: float, h: float) -> ZeroCount:
    """Lattice zeros with ordinate in [t, t + h] (the one at 0 counted r times) and the bound
    ω(q'/d') + (h/2) log(q'/d') + h²/(h² + t²)·r."""
    if h <= 0:
        raise ValueError("h must be positive")
    n = 0
    for p, a in zip(F.active_primes, F.angles):
        e = _prime_lattice(p, a, t, t + h)
        n += int(np.count_nonzero(e != 0.0))
        if a == 0 and t <= 0.0 <= t + h:
            n += 1
    Q = F.rad_ratio
    bound = F.omega + 0.5 * h * math.log(Q) + h * h / (h * h + t * t) * F.r
    return ZeroCount(n, bound)


class BoundCheck(NamedTuple):
    holds: bool
    lhs: float
    rhs: float


def value_bounds_check(F: FiniteEulerProduct, sigma: float, t, h: float | None = None) -> dict:
    """Upper bound on 1/|F| for σ ≥ 1/log q and lower bound on |F| for σ ≤ −h.

    Returns the checks that apply in the given regime; raises if neither does.
    """
    q = F.q
    if q < 2:
        raise ValueError("modulus 1 has an empty product")
    omega_q = len(factorize(q))
    h = 1.0 / math.log(q) if h is None else h
    t = np.atleast_1d(np.asarray(t, dtype=float))
    vals = np.abs(F.values(sigma + 1j * t))
    out = {}
    if sigma >= 1.0 / math.log(q):
        lhs = float(np.max(1.0 / vals))
        rhs = math.exp(BOUND43_C * omega_q * math.log(q))
        out["upper"] = BoundCheck(lhs <= rhs, lhs, rhs)
    if sigma <= -h:
        lhs = float(np.min(vals))
        mid = math.prod(p**-sigma - 1.0 for p in F.active_primes)
        rhs = abs(sigma) ** omega_q * math.log(2)
        out["lower"] = BoundCheck(lhs >= mid * (1 - 1e-12) and mid >= rhs, lhs, rhs)
    if not out:
        raise ValueError(f"σ = {sigma} lies in neither regime (σ ≥ {1 / math.log(q):.4f} or σ ≤ −{h:.4f})")
    return out


class LogDerivativeCheck(NamedTuple):
    residual: float
    budget: float
    local_zeros: int

    @property
    def ok(self) -> bool:
        return self.residual <= self.budget


def log_derivative_check(F: FiniteEulerProduct, s: complex, h: float) -> LogDerivativeCheck:
    """|F'/F(s) − r/s − Σ_{|t−η| ≤ h} 1/(s − iη)| against 5·(ω(q'/d')/h + log(q'/d') + r/(|t| + h))."""
    s = complex(s)
    if abs(s.real) > h:
        raise ValueError("need |σ| ≤ h")
    t = s.imag
    direct = complex(F.log_derivative(s))
    approx = F.r / s if F.r else 0j
    near = [z for z in zero_lattice(F, abs(t) + h + 1.0) if abs(t - z.eta) <= h]
    for z in near:
        approx += z.multiplicity / (s - 1j * z.eta)
    budget = PROP6_CONSTANT * (F.omega / h + math.log(F.rad_ratio) + F.r / (abs(t) + h))
    return LogDerivativeCheck(abs(direct - approx), budget, len(near))


def write_lattice_csv(F: FiniteEulerProduct, T: float, fh) -> None:
    w = csv.writer(fh)
    w.writerow(["eta", "prime", "multiplicity"])
    for z in zero_lattice(F, T, include_zero=True):
        w.writerow([repr(z.eta), "|".join(map(str, z.primes)), z.multiplicity])
