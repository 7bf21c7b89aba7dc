"""Small integer helpers shared by the character, sieve and product modules."""

from __future__ import annotations

from functools import lru_cache
from math import gcd, isqrt


@lru_cache(maxsize=None)
def factorize(n: int) -> tuple[tuple[int, int], ...]:
    """Prime factorization of ``n`` as ``((p, e), ...)`` with p ascending."""
    if n < 1:
        raise ValueError(f"cannot factor {n}")
    out = []
    p = 2
    while p * p <= n:
        if n % p == 0:
            e = 0
            while n % p == 0:
                n //= p
                e += 1
            out.append((p, e))
        p += 1 if p == 2 else 2
    if n > 1:
        out.append((n, 1))
    return tuple(out)


def prime_divisors(n: int) -> list[int]:
    return [p for p, _ in factorize(n)]


def omega(n: int) -> int:
    return len(factorize(n))


def rad(n: int) -> int:
    r = 1
    for p, _ in factorize(n):
        r *= p
    return r


def euler_phi(n: int) -> int:
    r = n
    for p, _ in factorize(n):
        r = r // p * (p - 1)
    return r


def divisors(n: int) -> list[int]:
    ds = [1]
    for p, e in factorize(n):
        ds = [d * p**k for d in ds for k in range(e + 1)]
    return sorted(ds)


def lcm(a: int, b: int) -> int:
    return a // gcd(a, b) * b


def is_squarefree(n: int) -> bool:
    return all(e == 1 for _, e in factorize(n))


def primes_up_to(n: int) -> list[int]:
    if n < 2:
        return []
    sieve = bytearray([1]) * (n + 1)
    sieve[0:2] = b"\x00\x00"
    for p in range(2, isqrt(n) + 1):
        if sieve[p]:
            sieve[p * p :: p] = bytes(len(range(p * p, n + 1, p)))
    return [i for i, v in enumerate(sieve) if v]


def primitive_root(p: int) -> int:
    """Smallest primitive root modulo the odd prime ``p``."""
    fs = prime_divisors(p - 1)
    for g in range(2, p):
        if all(pow(g, (p - 1) // f, p) != 1 for f in fs):
            return g
    raise ValueError(f"no primitive root mod {p}")


def primitive_root_prime_power(p: int, e: int) -> int:
    """A generator of (Z/p^e Z)^* for odd p."""
    g = primitive_root(p)
    if e >= 2 and pow(g, p - 1, p * p) == 1:
        g += p
    return g
