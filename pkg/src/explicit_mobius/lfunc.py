"""Dirichlet L-functions: values, derivatives, completed function, reflection.

L(s, χ) is split as a direct sum over n ≤ qN plus, for each residue class a
mod q, a Hurwitz-zeta tail Σ_{m ≥ N} (qm + a)^{-s} handled by Euler–Maclaurin.
Derivatives come for free by carrying truncated Taylor series ("jets") in s
through every term, so one pass yields L, L', L'', ... at a batch of points.

Jets are arrays of shape (K + 1, M): row j holds the j-th Taylor coefficient
f^{(j)}(s)/j! at each of the M points.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.special import bernoulli, loggamma

from .arith import prime_divisors
from .characters import (
    DirichletCharacter,
    epsilon_factor,
    gauss_sum,
    primitive_inducer,
)

_CHUNK = 2_000_000  # complex exponentials per direct-sum block


class PoleError(ZeroDivisionError):
    """Evaluation requested at the pole s = 1 of a principal L-function."""


@dataclass(frozen=True)
class PrecisionPolicy:
    target_relative_error: float = 1e-11
    euler_maclaurin_order: int = 12
    cutoff_scale: float = 1.3
    cutoff_base: float = 30.0
    reflect_below: float = -1.0

    def __post_init__(self):
        o = self.euler_maclaurin_order
        if o < 2 or o % 2:
            raise ValueError(f"Euler-Maclaurin order must be even and >= 2, got {o}")
        if self.cutoff_base < 10:
            raise ValueError("cutoff base must be at least 10")
        if self.cutoff_scale <= 0 or self.target_relative_error <= 0:
            raise ValueError("cutoff scale and target error must be positive")

    def cutoff(self, size: float) -> int:
        return max(10, math.ceil(size * self.cutoff_scale + self.cutoff_base))

    def as_dict(self) -> dict:
        return {
            "target_relative_error": self.target_relative_error,
            "euler_maclaurin_order": self.euler_maclaurin_order,
            "cutoff_scale": self.cutoff_scale,
            "cutoff_base": self.cutoff_base,
            "reflect_below": self.reflect_below,
        }


DEFAULT_POLICY = PrecisionPolicy()


@dataclass(frozen=True)
class EvalResult:
    value: complex
    error_estimate: float
    flags: tuple[str, ...] = field(default=())

    def __complex__(self):
        return complex(self.value)


# -- jet arithmetic ----------------------------------------------------------

def jet_mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Truncated Cauchy product along axis 0."""
    K = min(a.shape[0], b.shape[0])
    out = np.zeros((K,) + np.broadcast_shapes(a.shape[1:], b.shape[1:]), dtype=complex)
    for i in range(K):
        for j in range(K - i):
            out[i + j] += a[i] * b[j]
    return out


def jet_inv(a: np.ndarray) -> np.ndarray:
    """Jet of 1/f from the jet of f (f(s) ≠ 0)."""
    K = a.shape[0]
    out = np.zeros_like(a, dtype=complex)
    out[0] = 1.0 / a[0]
    for k in range(1, K):
        acc = np.zeros_like(a[0], dtype=complex)
        for j in range(1, k + 1):
            acc += a[j] * out[k - j]
        out[k] = -acc / a[0]
    return out


def _power_jet(logb, s, K: int, shift: float = 0.0) -> np.ndarray:
    """Jet of b^{shift - s}; logb broadcasts against s[:, None] or s."""
    v = np.exp((shift - s) * logb)
    L = np.broadcast_to(-np.asarray(logb, dtype=float), v.shape)
    pw = np.stack([L**j / math.factorial(j) for j in range(K + 1)])
    return v[None] * pw


def _linear_jet(s: np.ndarray, c: float, K: int) -> np.ndarray:
    out = np.zeros((K + 1, len(s)), dtype=complex)
    out[0] = s + c
    if K >= 1:
        out[1] = 1.0
    return out


@lru_cache(maxsize=None)
def _em_coefficients(order: int) -> np.ndarray:
    # c_j = B_{2j}/(2j)! for j = 1..order/2 + 1 (the last one feeds the error estimate)
    R = order // 2 + 1
    B = bernoulli(2 * R)
    return np.array([B[2 * j] / math.factorial(2 * j) for j in range(1, R + 1)])


def _phi_derivs(z: np.ndarray, K: int) -> np.ndarray:
    """I_j(z) = Σ_n z^n / (n! (n + j + 1)), the derivatives of (e^z − 1)/z."""
    out = np.zeros((K + 1,) + z.shape, dtype=complex)
    term = np.ones_like(z, dtype=complex)
    n = 0
    while True:
        for j in range(K + 1):
            out[j] += term / (n + j + 1)
        n += 1
        term = term * z / n
        if np.max(np.abs(term), initial=0.0) < 1e-18 or n > 400:
            break
    return out


# -- core evaluator -----------------------------------------------------------

@dataclass(frozen=True)
class _CharData:
    q: int
    ca: np.ndarray      # χ(a) for the coprime classes
    a: np.ndarray       # those classes, 1 ≤ a ≤ q
    principal: bool


@lru_cache(maxsize=None)
def _char_data(chi: DirichletCharacter) -> _CharData:
    q = chi.modulus
    a = np.arange(1, q + 1)
    ca = chi.values(a)
    keep = ca != 0
    return _CharData(q, ca[keep], a[keep], chi.is_principal)


def _hurwitz_jet(s: np.ndarray, cd: _CharData, K: int, policy: PrecisionPolicy):
    """Jet of Σ χ(n) n^{-s}; for q = 1 the ζ pole term is included."""
    q = cd.q
    M = len(s)
    N = policy.cutoff(float(np.max(np.abs(s))))
    n = np.arange(1, q * N + 1)
    cn = np.zeros(q, dtype=complex)
    cn[cd.a % q] = cd.ca
    chi_n = cn[n % q]
    keep = chi_n != 0
    n, chi_n = n[keep], chi_n[keep]
    logn = np.log(n.astype(float))
    fact = np.array([math.factorial(j) for j in range(K + 1)], dtype=float)
    V = chi_n[:, None] * (-logn[:, None]) ** np.arange(K + 1) / fact
    out = np.zeros((K + 1, M), dtype=complex)
    step = max(1, _CHUNK // max(1, len(n)))
    for i in range(0, M, step):
        E = np.exp(-np.outer(s[i : i + step], logn))
        out[:, i : i + step] = (E @ V).T
    # rounding in the direct sum, which cancels heavily for σ < 0
    mags = np.exp(-np.outer(s.real, logn)).sum(axis=1) if M * len(n) <= 4 * _CHUNK else None
    roundoff = 1.2e-16 * (mags if mags is not None else (q * N) ** np.maximum(1.0 - s.real, 0.5))

    # Euler-Maclaurin tail per class
    A = (q * N + cd.a).astype(float)
    w = A / q
    logA = np.log(A)
    base = _power_jet(logA[None, :], s[:, None], K)  # (K+1, M, r)
    c = _em_coefficients(policy.euler_maclaurin_order)
    R = policy.euler_maclaurin_order // 2
    bracket = np.zeros_like(base)
    bracket[0] += 0.5
    poch = _linear_jet(s, 0.0, K)  # (s)_1
    err_poch = None
    for j in range(1, R + 2):
        if j > 1:
            poch = jet_mul(jet_mul(poch, _linear_jet(s, 2 * j - 3, K)), _linear_jet(s, 2 * j - 2, K))
        if j == R + 1:
            err_poch = poch[0]
            break
        bracket += c[j - 1] * poch[:, :, None] * (w ** (1 - 2 * j))[None, None, :]
    out += np.einsum("kmr,r->km", jet_mul(base, bracket), cd.ca)
    err = abs(c[R]) * np.abs(err_poch) * np.sum(
        np.abs(base[0]) * w[None, :] ** (-(2 * R + 1)), axis=1
    )
    err = err + roundoff

    # pole part Σ_a χ(a)(qN + a)^{1-s} / (q(s − 1))
    if q == 1:
        P = _power_jet(np.log(float(N + 1)), s, K, shift=1.0)
        inv = np.zeros((K + 1, M), dtype=complex)
        d = s - 1.0
        for j in range(K + 1):
            inv[j] = (-1) ** j / d ** (j + 1)
        out += jet_mul(P, inv)
    else:
        ell = np.log1p(cd.a / (q * N))
        z = np.outer(1.0 - s, ell)
        phi = _phi_derivs(z, K)
        pw = np.stack([(-ell) ** j / fact[j] for j in range(K + 1)])  # (K+1, r)
        phi = phi * pw[:, None, :]
        S = np.einsum("kmr,r->km", phi, cd.ca * ell)
        G = _power_jet(math.log(q * N), s, K, shift=1.0)
        out -= jet_mul(G, S) / q
    return out, err


def _principal_factor_jet(s: np.ndarray, q: int, K: int) -> np.ndarray:
    out = np.zeros((K + 1, len(s)), dtype=complex)
    out[0] = 1.0
    for p in prime_divisors(q):
        f = -_power_jet(math.log(p), s, K)
        f[0] += 1.0
        out = jet_mul(out, f)
    return out


def _direct_jet(s: np.ndarray, chi: DirichletCharacter, K: int, policy: PrecisionPolicy):
    if chi.is_principal:
        if np.any(s == 1.0):
            raise PoleError(f"L(s, {chi.label}) has a pole at s = 1")
        z, err = _hurwitz_jet(s, _trivial(), K, policy)
        if chi.modulus > 1:
            F = _principal_factor_jet(s, chi.modulus, K)
            err = err * np.abs(F[0])
            z = jet_mul(z, F)
        return z, err
    return _hurwitz_jet(s, _char_data(chi), K, policy)


@lru_cache(maxsize=1)
def _trivial() -> _CharData:
    return _CharData(1, np.array([1.0 + 0j]), np.array([1]), True)


def _order_by_size(s: np.ndarray):
    # batches of similar |s| share a cutoff, so sort once and split
    idx = np.argsort(np.abs(s), kind="stable")
    sizes = np.abs(s[idx])
    groups = []
    start = 0
    while start < len(idx):
        stop = start + 1
        while stop < len(idx) and sizes[stop] <= 1.25 * sizes[start] + 20:
            stop += 1
        groups.append(idx[start:stop])
        start = stop
    return groups


def l_jet(s, chi: DirichletCharacter, order: int = 0, policy: PrecisionPolicy = DEFAULT_POLICY):
    """Taylor jets of L(·, χ) at the points s: returns (coeffs (K+1, M), errors (M,))."""
    s = np.atleast_1d(np.asarray(s, dtype=complex))
    K = int(order)
    coeffs = np.zeros((K + 1, len(s)), dtype=complex)
    err = np.zeros(len(s))
    left = s.real < policy.reflect_below
    if np.any(left):
        c, e = _reflected_jet(s[left], chi, K, policy)
        coeffs[:, left] = c
        err[left] = e
    right = np.nonzero(~left)[0]
    for g in _order_by_size(s[right]):
        sel = right[g]
        c, e = _direct_jet(s[sel], chi, K, policy)
        coeffs[:, sel] = c
        err[sel] = e
    return coeffs, err


def l_values(s, chi: DirichletCharacter, policy: PrecisionPolicy = DEFAULT_POLICY) -> np.ndarray:
    return l_jet(s, chi, 0, policy)[0][0]


def l_eval(s: complex, chi: DirichletCharacter, policy: PrecisionPolicy = DEFAULT_POLICY) -> EvalResult:
    s = complex(s)
    if chi.is_principal and s == 1:
        raise PoleError(f"L(s, {chi.label}) has a pole at s = 1")
    c, e = l_jet([s], chi, 0, policy)
    flags = ()
    v = complex(c[0, 0])
    if s.real < policy.reflect_below:
        flags = ("reflected",)
        if v == 0:
            flags += ("trivial_zero",)
    if abs(v) > 0 and e[0] > policy.target_relative_error * abs(v):
        flags += ("degraded_precision",)
    return EvalResult(v, float(e[0]), flags)


def l_derivative(s: complex, chi: DirichletCharacter, order: int = 1,
                 policy: PrecisionPolicy = DEFAULT_POLICY) -> EvalResult:
    """k-th derivative of L(s, χ) in s."""
    if order < 0:
        raise ValueError("derivative order must be non-negative")
    if order == 0:
        return l_eval(s, chi, policy)
    c, e = l_jet([complex(s)], chi, order, policy)
    v = complex(c[order, 0]) * math.factorial(order)
    # the tail estimate grows roughly like (log qN)^k
    return EvalResult(v, float(e[0]) * math.factorial(order) * 10.0**order)


# -- functional equation -------------------------------------------------------

@dataclass(frozen=True)
class _RootData:
    tau: complex
    eps: complex
    sqrt_eps: complex


@lru_cache(maxsize=None)
def root_data(chi: DirichletCharacter) -> _RootData:
    if not chi.is_primitive:
        raise ValueError(f"{chi.label} is not primitive")
    eps = epsilon_factor(chi)
    return _RootData(gauss_sum(chi), eps, complex(np.sqrt(eps)))


def _log_sin(z: np.ndarray) -> np.ndarray:
    """log sin z without overflow for large |Im z|; −inf at the zeros."""
    z = np.asarray(z, dtype=complex)
    out = np.empty_like(z)
    small = np.abs(z.imag) < 20
    with np.errstate(divide="ignore"):
        out[small] = np.log(np.sin(z[small]))
    big = ~small
    if np.any(big):
        zb = np.where(z[big].imag > 0, z[big], np.conj(z[big]))
        # sin z = (i/2) e^{-iz} (1 − e^{2iz})
        v = np.log(0.5j) - 1j * zb + np.log1p(-np.exp(2j * zb))
        out[big] = np.where(z[big].imag > 0, v, np.conj(v))
    return out


def _reflection_log_factor(s: np.ndarray, q: int, kappa: int) -> np.ndarray:
    return (
        s * math.log(2.0) + (s - 1.0) * math.log(math.pi) + (0.5 - s) * math.log(q)
        + loggamma(1.0 - s) + _log_sin(0.5 * math.pi * (s + kappa))
    )


def _is_trivial_zero(s: np.ndarray, kappa: int, q: int) -> np.ndarray:
    r = np.round(s.real)
    hit = (s.imag == 0) & (s.real == r) & (r <= 0) & ((r.astype(np.int64) + kappa) % 2 == 0)
    if q == 1:
        hit &= r < 0
    return hit


def reflect_values(s, chi: DirichletCharacter, policy: PrecisionPolicy = DEFAULT_POLICY):
    """L(s, χ) from L(1 − s, χ̄) through the functional equation (χ primitive)."""
    s = np.atleast_1d(np.asarray(s, dtype=complex))
    rd = root_data(chi)
    dual, derr = l_jet(1.0 - s, chi.conj(), 0, policy)
    zero = _is_trivial_zero(s, chi.parity_kappa, chi.modulus)
    val = np.zeros(len(s), dtype=complex)
    ok = ~zero
    fac = np.exp(_reflection_log_factor(s[ok], chi.modulus, chi.parity_kappa))
    val[ok] = rd.eps * dual[0, ok] * fac
    err = np.zeros(len(s))
    err[ok] = derr[ok] * np.abs(fac)
    return val, err, zero


def reflect_eval(s: complex, chi: DirichletCharacter, policy: PrecisionPolicy = DEFAULT_POLICY) -> EvalResult:
    val, err, zero = reflect_values([s], chi, policy)
    flags = ("reflected", "trivial_zero") if zero[0] else ("reflected",)
    return EvalResult(complex(val[0]), float(err[0]), flags)


def _reflected_jet(s: np.ndarray, chi: DirichletCharacter, K: int, policy: PrecisionPolicy):
    star = primitive_inducer(chi)
    if K == 0:
        val, err, _ = reflect_values(s, star, policy)
        coeffs = val[None, :]
    else:
        # Taylor coefficients from values on a small circle (discrete Cauchy formula)
        nodes = 64
        rad = 0.25
        th = 2 * np.pi * np.arange(nodes) / nodes
        pts = (s[:, None] + rad * np.exp(1j * th)[None, :]).ravel()
        val, err, _ = reflect_values(pts, star, policy)
        val = val.reshape(len(s), nodes)
        F = np.fft.fft(val, axis=1) / nodes
        coeffs = np.stack([F[:, j] / rad**j for j in range(K + 1)])
        err = err.reshape(len(s), nodes).max(axis=1)
        coeffs[0] = reflect_values(s, star, policy)[0]
    if not chi.is_primitive:
        from .finite_euler import build_product

        F = build_product(chi).jet(s, K)
        coeffs = jet_mul(coeffs, F)
    return coeffs, err


# -- completed function and Hardy Z ---------------------------------------------

def completed_lambda(s, chi: DirichletCharacter, policy: PrecisionPolicy = DEFAULT_POLICY):
    """Λ(s, χ) = (q/π)^{(s+κ)/2} Γ((s+κ)/2) L(s, χ) for primitive χ."""
    if not chi.is_primitive:
        raise ValueError(f"{chi.label} is not primitive")
    scalar = np.ndim(s) == 0
    s = np.atleast_1d(np.asarray(s, dtype=complex))
    k = chi.parity_kappa
    h = 0.5 * (s + k)
    logf = h * math.log(chi.modulus / math.pi) + loggamma(h)
    out = np.exp(logf) * l_values(s, chi, policy)
    return complex(out[0]) if scalar else out


class RealityError(ArithmeticError):
    """Z_χ(t) came out with a non-negligible imaginary part."""


def hardy_z(t, chi: DirichletCharacter, policy: PrecisionPolicy = DEFAULT_POLICY,
            check: bool = True):
    """Real rotation of L(1/2 + it, χ) with the same zeros.

    Z(t) = ε^{-1/2} (q/π)^{it/2} exp(i Im log Γ((1/2 + κ + it)/2)) L(1/2 + it, χ),
    which equals ε^{-1/2} Λ(1/2 + it, χ) up to a positive factor.
    """
    if not chi.is_primitive:
        raise ValueError(f"{chi.label} is not primitive")
    scalar = np.ndim(t) == 0
    t = np.atleast_1d(np.asarray(t, dtype=float))
    k = chi.parity_kappa
    rd = root_data(chi)
    theta = 0.5 * t * math.log(chi.modulus / math.pi) + loggamma(0.5 * (0.5 + k + 1j * t)).imag
    z = np.exp(1j * theta) * l_values(0.5 + 1j * t, chi, policy) / rd.sqrt_eps
    if check:
        bad = np.abs(z.imag) > 1e-9 * np.abs(z) + 1e-11
        if np.any(bad):
            i = int(np.argmax(bad))
            raise RealityError(f"Z_{chi.label}({t[i]}) has imaginary part {z.imag[i]:.3e}")
    return float(z.real[0]) if scalar else z.real


# -- Dedekind zeta of an Abelian field ----------------------------------------------

def dedekind_jet(s, K, order: int = 0, policy: PrecisionPolicy = DEFAULT_POLICY):
    """Jet of ζ_K = ∏_{χ ∈ X(K)} L(s, χ*)."""
    s = np.atleast_1d(np.asarray(s, dtype=complex))
    out = np.zeros((order + 1, len(s)), dtype=complex)
    out[0] = 1.0
    err = np.zeros(len(s))
    for chi in K.characters:
        c, e = l_jet(s, primitive_inducer(chi), order, policy)
        err = err * np.abs(c[0]) + e * np.abs(out[0])
        out = jet_mul(out, c)
    return out, err


def dedekind_eval(s: complex, K, policy: PrecisionPolicy = DEFAULT_POLICY) -> EvalResult:
    if complex(s) == 1:
        raise PoleError(f"ζ_K has a pole at s = 1 (residue {K.kappa})")
    c, e = dedekind_jet([s], K, 0, policy)
    return EvalResult(complex(c[0, 0]), float(e[0]))


def value_grid(chi: DirichletCharacter, sigmas, ts, policy: PrecisionPolicy = DEFAULT_POLICY):
    """Rows (σ, t, Re L, Im L, error estimate) over the product grid."""
    S, T = np.meshgrid(np.asarray(sigmas, float), np.asarray(ts, float), indexing="ij")
    s = (S + 1j * T).ravel()
    c, e = l_jet(s, chi, 0, policy)
    return np.column_stack([s.real, s.imag, c[0].real, c[0].imag, e])
