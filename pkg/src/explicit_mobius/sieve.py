"""Ground-truth arithmetic: Möbius tables, twisted and progression summatory
functions, ideal-count coefficients of Abelian fields, and the nearest-point
quantities that enter the truncation error terms.

All summatory functions use the half-weight convention: when x is an integer
the term n = x is counted with weight 1/2.
"""

from __future__ import annotations

import csv
import math
import struct
from dataclasses import dataclass
from math import gcd, isqrt
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .arith import primes_up_to

MAX_SIEVE_LIMIT = 10**8  # int8 values + int32 spf: about 5 bytes per entry
MBT_MAGIC = b"MBT1"


class WindowExhausted(ValueError):
    """No admissible integer found inside the table around the requested point."""


@dataclass(frozen=True, eq=False)
class MobiusTable:
    limit: int
    values: np.ndarray  # int8, values[n] = μ(n), values[0] = 0
    smallest_prime_factor: np.ndarray

    def __getitem__(self, n):
        return self.values[n]


def _spf(N: int) -> np.ndarray:
    spf = np.zeros(N + 1, dtype=np.int32)
    for p in range(2, isqrt(N) + 1):
        if spf[p] == 0:
            seg = spf[p * p :: p]
            seg[seg == 0] = p
    n = np.arange(N + 1, dtype=np.int32)
    prime = (spf == 0) & (n >= 2)
    spf[prime] = n[prime]
    return spf


def _mobius_from_spf(spf: np.ndarray) -> np.ndarray:
    N = len(spf) - 1
    mu = np.ones(N + 1, dtype=np.int8)
    mu[0] = 0
    rem = np.arange(N + 1, dtype=np.int64)
    idx = np.nonzero(rem > 1)[0]
    while idx.size:
        r = rem[idx]
        p = spf[r]
        r //= p
        sq = r % p == 0
        mu[idx[sq]] = 0
        mu[idx[~sq]] *= -1
        rem[idx] = r
        idx = idx[(~sq) & (r > 1)]
    return mu


def mobius_sieve(N: int, max_limit: int = MAX_SIEVE_LIMIT) -> MobiusTable:
    """μ(n) for n ≤ N by smallest-prime-factor peeling."""
    if N < 1:
        raise ValueError("sieve limit must be at least 1")
    if N > max_limit:
        raise MemoryError(
            f"sieve limit {N} exceeds the budget {max_limit} "
            f"(~{5 * N / 2**20:.0f} MiB needed); use mertens_segmented for plain sums"
        )
    spf = _spf(N)
    mu = _mobius_from_spf(spf)
    mu.setflags(write=False)
    spf.setflags(write=False)
    return MobiusTable(N, mu, spf)


def mobius_block(lo: int, hi: int, primes: list[int]) -> np.ndarray:
    """μ(n) for lo ≤ n < hi, given all primes up to sqrt(hi)."""
    n = np.arange(lo, hi, dtype=np.int64)
    mu = np.ones(hi - lo, dtype=np.int8)
    prod = np.ones(hi - lo, dtype=np.int64)
    for p in primes:
        if p * p >= hi and p >= hi:
            break
        start = (-lo) % p
        mu[start::p] *= -1
        prod[start::p] *= p
        p2 = p * p
        mu[(-lo) % p2 :: p2] = 0
    # one prime factor above sqrt(hi) remains where the product falls short
    big = (mu != 0) & (prod != n)
    mu[big] *= -1
    if lo == 0:
        mu[0] = 0
    return mu


def mertens_segmented(N: int, segment: int = 1 << 20) -> int:
    """Σ_{n ≤ N} μ(n) with memory O(segment + sqrt N)."""
    primes = primes_up_to(isqrt(N) + 1)
    total = 0
    lo = 1
    while lo <= N:
        hi = min(N + 1, lo + segment)
        total += int(mobius_block(lo, hi, primes).sum(dtype=np.int64))
        lo = hi
    return total


def mertens(N: int, table: MobiusTable | None = None) -> int:
    if table is not None and N <= table.limit:
        return int(table.values[: N + 1].sum(dtype=np.int64))
    if N <= MAX_SIEVE_LIMIT // 10:
        return int(mobius_sieve(N).values.sum(dtype=np.int64))
    return mertens_segmented(N)


# -- summatory functions ------------------------------------------------------

def _upto(x: float, limit: int) -> tuple[int, bool]:
    if x > limit:
        raise ValueError(f"x = {x} lies beyond the table limit {limit}")
    if x < 0:
        raise ValueError("x must be non-negative")
    n = math.floor(x)
    return n, float(n) == float(x)


def _half_weights(n: int, integral: bool) -> np.ndarray:
    w = np.ones(n)
    if integral and n >= 1:
        w[-1] = 0.5
    return w


def summatory_twisted(x: float, chi, table: MobiusTable) -> complex:
    """M*(x, χ) = Σ' χ(n) μ(n) over n ≤ x."""
    n, integral = _upto(x, table.limit)
    if n == 0:
        return 0j
    ns = np.arange(1, n + 1)
    terms = table.values[1 : n + 1] * chi.values(ns) * _half_weights(n, integral)
    return complex(math.fsum(terms.real), math.fsum(terms.imag))


def summatory_progression(x: float, q: int, a: int, table: MobiusTable) -> float:
    """M*(x; q, a) = Σ' μ(n) over n ≤ x with n ≡ a (mod q)."""
    if gcd(a, q) != 1:
        raise ValueError(f"gcd({a}, {q}) > 1")
    n, integral = _upto(x, table.limit)
    start = (a - 1) % q + 1
    if n < start:
        return 0.0
    vals = table.values[start : n + 1 : q].astype(np.float64)
    if integral and (n - start) % q == 0:
        vals[-1] *= 0.5
    return math.fsum(vals)


def nearest_squarefree_coprime(x: float, q: int, table: MobiusTable, window: int = 64) -> float:
    """Distance from x to the nearest square-free n coprime to q, n ≠ x."""
    while True:
        lo = max(1, math.floor(x) - window)
        hi = min(table.limit, math.ceil(x) + window)
        ns = np.arange(lo, hi + 1)
        ok = (table.values[lo : hi + 1] != 0) & (np.gcd(ns, q) == 1) & (ns != x)
        if ok.any():
            best = float(np.min(np.abs(ns[ok] - x)))
            left_ok = lo == 1 or best <= x - lo
            right_ok = best <= hi - x
            if left_ok and right_ok:
                return best
        if hi == table.limit and (lo == 1 or window > table.limit):
            raise WindowExhausted(f"no square-free integer coprime to {q} near {x} within the table")
        window *= 2


# -- Abelian fields -------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class FieldCoefficients:
    limit: int
    ideal_counts: np.ndarray      # a_n, index 0 unused
    mobius_coeffs: np.ndarray     # m_n = Σ_{N(𝔞)=n} μ_K(𝔞)
    squarefree_counts: np.ndarray  # number of square-free ideals of norm n


class NearestNorm(NamedTuple):
    n: int
    ideal_count: int
    secondary_tie: bool  # equal counts at equal distance; smaller n taken


def dirichlet_convolve(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """(a * b)(n) = Σ_{d | n} a(d) b(n/d) for 1 ≤ n ≤ N; index 0 is ignored."""
    N = len(a) - 1
    out = np.zeros(N + 1, dtype=np.result_type(a, b))
    for d in range(1, N + 1):
        ad = a[d]
        if ad != 0:
            out[d::d] += ad * b[1 : N // d + 1]
    return out


def _round_exact(v: np.ndarray, what: str) -> np.ndarray:
    r = np.rint(v.real)
    resid = max(float(np.max(np.abs(v.real - r))), float(np.max(np.abs(v.imag))))
    if resid > 1e-6:
        raise ArithmeticError(f"{what}: rounding residue {resid:.2e} exceeds 1e-6 (character set bug)")
    return r.astype(np.int64)


def field_coefficients(K, N: int, table: MobiusTable | None = None) -> FieldCoefficients:
    """Dirichlet coefficients of ζ_K and 1/ζ_K from the characters of K."""
    from .characters import primitive_inducer

    if N < 1:
        raise ValueError("N must be at least 1")
    if table is None or table.limit < N:
        table = mobius_sieve(N)
    ns = np.arange(N + 1)
    mu = table.values[: N + 1].astype(np.float64)
    a = np.zeros(N + 1, dtype=complex)
    a[1] = 1
    m = a.copy()
    for chi in K.characters:
        star = primitive_inducer(chi)
        v = star.values(ns)
        v[0] = 0
        a = dirichlet_convolve(a, v)
        m = dirichlet_convolve(m, mu * v)
    a_int = _round_exact(a, "ideal counts")
    m_int = _round_exact(m, "Möbius coefficients")
    a_int[0] = m_int[0] = 0
    sqf = np.zeros(N + 1, dtype=np.int64)
    for k in range(1, isqrt(N) + 1):
        if m_int[k]:
            k2 = k * k
            sqf[k2::k2] += m_int[k] * a_int[1 : N // k2 + 1]
    if np.any(a_int < 0) or np.any(sqf < 0):
        raise ArithmeticError("negative ideal counts")
    for arr in (a_int, m_int, sqf):
        arr.setflags(write=False)
    return FieldCoefficients(N, a_int, m_int, sqf)


def summatory_field(x: float, coeffs: FieldCoefficients) -> float:
    """M_K*(x) = Σ' μ_K(𝔞) over ideals of norm ≤ x."""
    n, integral = _upto(x, coeffs.limit)
    if n == 0:
        return 0.0
    vals = coeffs.mobius_coeffs[1 : n + 1].astype(np.float64)
    if integral:
        vals[-1] *= 0.5
    return math.fsum(vals)


def nearest_active_norm(x: float, coeffs: FieldCoefficients, window: int = 64) -> NearestNorm:
    """Nearest norm n ≠ x carrying an ideal with μ_K ≠ 0.

    Equidistant candidates are resolved by the larger ideal count a_n, then by
    the smaller n (the second rule is a convention, flagged in the result).
    """
    while True:
        lo = max(1, math.floor(x) - window)
        hi = min(coeffs.limit, math.ceil(x) + window)
        ns = np.arange(lo, hi + 1)
        ok = (coeffs.squarefree_counts[lo : hi + 1] > 0) & (ns != x)
        if ok.any():
            cand = ns[ok]
            dist = np.abs(cand - x)
            best = dist.min()
            left_ok = lo == 1 or best <= x - lo
            if left_ok and best <= hi - x:
                tied = [int(n) for n in cand[dist == best]]
                counts = [int(coeffs.ideal_counts[n]) for n in tied]
                top = max(counts)
                winners = [n for n, c in zip(tied, counts) if c == top]
                return NearestNorm(min(winners), top, len(winners) > 1)
        if hi == coeffs.limit and (lo == 1 or window > coeffs.limit):
            raise WindowExhausted(f"no active norm near {x} within the coefficient table")
        window *= 2


def ideal_count_error_scan(K, coeffs: FieldCoefficients, limit: int | None = None) -> float:
    """sup over integers x ≤ limit of |A(x) − κ_K x| / x^{1 − 1/n_K}."""
    L = coeffs.limit if limit is None else min(limit, coeffs.limit)
    A = np.cumsum(coeffs.ideal_counts[1 : L + 1].astype(np.float64))
    x = np.arange(1, L + 1, dtype=np.float64)
    stat = np.abs(A - K.kappa * x) / x ** (1.0 - 1.0 / K.degree)
    return float(stat.max())


# -- persistence ----------------------------------------------------------------

def save_mobius(table: MobiusTable, path) -> None:
    """Binary cache: b"MBT1", u64 LE limit, then μ(1..N) as 2-bit codes (0, +1 -> 1, -1 -> 2)."""
    mu = table.values[1:]
    codes = np.where(mu == -1, 2, mu).astype(np.uint8)
    pad = (-len(codes)) % 4
    codes = np.concatenate([codes, np.zeros(pad, dtype=np.uint8)]).reshape(-1, 4)
    packed = codes[:, 0] | (codes[:, 1] << 2) | (codes[:, 2] << 4) | (codes[:, 3] << 6)
    with open(path, "wb") as fh:
        fh.write(MBT_MAGIC)
        fh.write(struct.pack("<Q", table.limit))
        fh.write(packed.astype(np.uint8).tobytes())


def load_mobius(path) -> MobiusTable:
    data = Path(path).read_bytes()
    if data[:4] != MBT_MAGIC:
        raise ValueError(f"{path}: not a Möbius table cache")
    (N,) = struct.unpack("<Q", data[4:12])
    packed = np.frombuffer(data[12:], dtype=np.uint8)
    codes = np.stack([(packed >> s) & 3 for s in (0, 2, 4, 6)], axis=1).reshape(-1)[:N]
    mu = np.zeros(N + 1, dtype=np.int8)
    mu[1:] = np.where(codes == 2, -1, codes)
    mu.setflags(write=False)
    spf = _spf(N)
    spf.setflags(write=False)
    return MobiusTable(N, mu, spf)


def write_coefficients_csv(coeffs: FieldCoefficients, fh) -> None:
    w = csv.writer(fh)
    w.writerow(["n", "a_n", "m_n"])
    for n in range(1, coeffs.limit + 1):
        w.writerow([n, int(coeffs.ideal_counts[n]), int(coeffs.mobius_coeffs[n])])
