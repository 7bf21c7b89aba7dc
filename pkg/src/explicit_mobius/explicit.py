"""Truncated explicit formulas for Möbius partial sums.

Each assembly returns an ExplicitFormulaReport holding every piece of the
formula (zero sum, imaginary-axis residues of the finite Euler product, the
trivial-zero series, the s = 0 residue), the sieve value it should reproduce,
and the inputs of the truncation-error budget.

Residues come in two flavours: closed forms where they are known, and a
contour-quadrature oracle (trapezoid rule on a small circle) that works for
poles of any order and is the fallback everywhere.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np

from .characters import DirichletCharacter, build_group, primitive_inducer
from .finite_euler import FiniteEulerProduct, build_product, zero_lattice
from .lfunc import (
    DEFAULT_POLICY,
    PrecisionPolicy,
    dedekind_jet,
    l_derivative,
    l_eval,
    l_jet,
    l_values,
    root_data,
)
from .sieve import (
    FieldCoefficients,
    MobiusTable,
    field_coefficients,
    ideal_count_error_scan,
    load_mobius,
    mobius_sieve,
    nearest_active_norm,
    nearest_squarefree_coprime,
    save_mobius,
    summatory_field,
    summatory_progression,
    summatory_twisted,
)
from .zeros import CACHE_VERSION, GoodOrdinate, ZeroBank, find_t_nu, find_t_star

SCHEMA = "efr-1"
EULER_GAMMA = 0.57721566490153286061
TRIVIAL_MAX_L = 200
TRIVIAL_TOL = 1e-16
QUAD_TOL = 1e-10
QUAD_KMIN, QUAD_KMAX = 4, 16
BUDGET_FACTOR = 10.0
MULTIPLE_ZERO_TOL = 1e-12
COINCIDENCE_TOL = 1e-9


class QuadratureError(ArithmeticError):
    pass


@dataclass
class ResidueTerm:
    location: complex
    kind: str       # nontrivial_zero | trivial_zero | s_zero | imaginary_axis
    value: complex
    method: str     # closed_form | contour_quadrature
    multiplicity_used: int = 1


@dataclass
class ExplicitFormulaReport:
    formula: str
    subject: str
    x: float
    T_requested: float
    T_nu: float
    T_star: float | None
    zero_sum: complex
    imaginary_axis_sum: complex
    trivial_sum: complex
    s_zero_term: complex
    formula_total: complex
    sieve_truth: complex
    residual: complex
    error_budget_inputs: dict
    budget: float
    zeros_used: int = 0
    trivial_terms: int = 0
    notes: list[str] = field(default_factory=list)
    provenance: dict = field(default_factory=dict)

    @property
    def within_budget(self) -> bool:
        return abs(self.residual) <= BUDGET_FACTOR * self.budget

    def to_dict(self) -> dict:
        d = asdict(self)
        for k, v in list(d.items()):
            if isinstance(v, complex):
                d[k] = [v.real, v.imag]
        d["schema"] = SCHEMA
        d["abs_residual"] = abs(self.residual)
        d["within_budget"] = self.within_budget
        return d

    def summary_row(self) -> list:
        return [self.formula, self.subject, self.x, self.T_requested, self.T_nu,
                self.formula_total.real, self.formula_total.imag, self.sieve_truth.real,
                self.sieve_truth.imag, abs(self.residual), self.budget, self.within_budget]


SUMMARY_HEADER = ["formula", "subject", "x", "T", "T_nu", "total_re", "total_im",
                  "truth_re", "truth_im", "abs_residual", "budget", "within_budget"]


def reports_to_json(reports: Sequence[ExplicitFormulaReport], extra: dict | None = None) -> str:
    doc = {"schema": SCHEMA, "reports": [r.to_dict() for r in reports]}
    if extra:
        doc.update(extra)
    return json.dumps(doc, indent=2, sort_keys=True, default=_json_default)


def _json_default(o):
    if isinstance(o, complex):
        return [o.real, o.imag]
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(type(o).__name__)


def write_summary_csv(reports: Sequence[ExplicitFormulaReport], fh) -> None:
    w = csv.writer(fh)
    w.writerow(SUMMARY_HEADER)
    for r in reports:
        w.writerow(r.summary_row())


def _csum(values) -> complex:
    v = np.asarray(list(values), dtype=complex)
    return complex(math.fsum(v.real), math.fsum(v.imag))


# -- shared resources ------------------------------------------------------------------

class Workspace:
    """Sieve tables, zero caches and field coefficients shared across assemblies."""

    def __init__(self, cache_dir=None, policy: PrecisionPolicy = DEFAULT_POLICY,
                 sigma_step: float = 0.25, t_step: float = 0.05):
        from pathlib import Path

        self.cache_dir = Path(cache_dir) if cache_dir is not None else None
        self.policy = policy
        self.sigma_step = sigma_step
        self.t_step = t_step
        self.bank = ZeroBank(self.cache_dir / "zeros" if self.cache_dir else None, policy)
        self._mobius: MobiusTable | None = None
        self._fields: dict[str, FieldCoefficients] = {}

    def mobius(self, N: int) -> MobiusTable:
        if self._mobius is None or self._mobius.limit < N:
            path = self.cache_dir / "mobius" / "mobius.mbt" if self.cache_dir else None
            table = None
            if path is not None and path.exists():
                table = load_mobius(path)
                if table.limit < N:
                    table = None
            if table is None:
                table = mobius_sieve(max(N, 1000))
                if path is not None:
                    path.parent.mkdir(parents=True, exist_ok=True)
                    save_mobius(table, path)
            self._mobius = table
        return self._mobius

    def field(self, K, N: int) -> FieldCoefficients:
        c = self._fields.get(K.label)
        if c is None or c.limit < N:
            c = field_coefficients(K, max(N, 1000), self.mobius(max(N, 1000)))
            self._fields[K.label] = c
        return c

    def provenance(self) -> dict:
        return {
            "policy": self.policy.as_dict(),
            "sigma_grid_step": self.sigma_step,
            "t_grid_step": self.t_step,
            "zero_cache_version": CACHE_VERSION,
        }


_DEFAULT: Workspace | None = None


def default_workspace() -> Workspace:
    global _DEFAULT
    if _DEFAULT is None:
        _DEFAULT = Workspace()
    return _DEFAULT


# -- contour quadrature ------------------------------------------------------------------

@dataclass
class QuadratureResult:
    value: complex
    nodes: int
    history: list[complex]
    radius: float


def circle_integral(f: Callable, center: complex, radius: float, tol: float = QUAD_TOL,
                    kmin: int = QUAD_KMIN, kmax: int = QUAD_KMAX) -> QuadratureResult:
    """(1/2πi) ∮_{|s−c|=r} f(s) ds by the trapezoid rule, doubling nodes until stable."""
    n = 2**kmin
    th = 2 * np.pi * np.arange(n) / n
    z = radius * np.exp(1j * th)
    acc = np.sum(f(center + z) * z)
    I = acc / n
    hist = [I]
    k = kmin
    while k < kmax:
        th = 2 * np.pi * (np.arange(n) + 0.5) / n
        z = radius * np.exp(1j * th)
        acc = acc + np.sum(f(center + z) * z)
        n *= 2
        k += 1
        J = acc / n
        hist.append(J)
        if abs(J - I) <= tol * (1 + abs(J)):
            return QuadratureResult(complex(J), n, hist, radius)
        I = J
    raise QuadratureError(f"no convergence at {center} with radius {radius} after 2^{kmax} nodes")


def residue_quadrature(x: float, pole: complex, radius: float, inverse: Callable,
                       kind: str = "s_zero") -> ResidueTerm:
    """Res_{s=pole} x^s inverse(s)/s by contour quadrature.

    ``inverse`` maps an array of points to the values of 1/L (or L_{-1}, 1/ζ_K, ...).
    On failure the radius is halved once before giving up.
    """
    lx = math.log(x)

    def f(s):
        return np.exp(s * lx) * inverse(s) / s

    try:
        res = circle_integral(f, pole, radius)
    except QuadratureError:
        res = circle_integral(f, pole, radius / 2)
    return ResidueTerm(complex(pole), kind, res.value, "contour_quadrature", 0)


def inverse_l(chi: DirichletCharacter, policy: PrecisionPolicy = DEFAULT_POLICY) -> Callable:
    return lambda s: 1.0 / l_values(s, chi, policy)


def inverse_l_split(F: FiniteEulerProduct, policy: PrecisionPolicy = DEFAULT_POLICY) -> Callable:
    """1/(L(s, χ*) F(s))."""
    return lambda s: 1.0 / (l_values(s, F.chi_star, policy) * F.values(s))


def l_minus_one(q: int, a: int, policy: PrecisionPolicy = DEFAULT_POLICY) -> Callable:
    chars = list(build_group(q))
    phi = len(chars)

    def g(s):
        out = np.zeros(np.shape(s), dtype=complex)
        for c in chars:
            out += np.conj(c(a)) / l_values(s, c, policy)
        return out / phi

    return g


def inverse_dedekind(K, policy: PrecisionPolicy = DEFAULT_POLICY) -> Callable:
    return lambda s: 1.0 / dedekind_jet(s, K, 0, policy)[0][0]


# -- closed-form residues ---------------------------------------------------------------------

def trivial_residue_primitive(x: float, chi: DirichletCharacter, l: int,
                              policy: PrecisionPolicy = DEFAULT_POLICY) -> ResidueTerm:
    """Res_{s=−l} x^s/(L(s, χ) s) in closed form for primitive χ (l = 0 is the pole at s = 0).

    Odd χ:  l = 2k−1 gives (−1)^k 2i (qx/2π)^{−(2k−1)} / (τ L(2k, χ̄)(2k−1)(2k−1)!), even l gives 0.
    Even χ: l = 2k gives (−1)^{k+1} (qx/2π)^{−2k} / (τ L(2k+1, χ̄) k (2k)!), odd l gives 0.
    At s = 0: πi/(τ L(1, χ̄)) for odd χ, 2(log(qx/2π) + L'/L(1, χ̄) − γ)/(τ L(1, χ̄)) for even χ,
    and 1/ζ(0) = −2 for the trivial character.
    """
    if not chi.is_primitive:
        raise ValueError(f"{chi.label} is not primitive; use the imprimitive assembly")
    if l < 0:
        raise ValueError("l must be non-negative")
    q = chi.modulus
    kappa = chi.parity_kappa
    loc = complex(-l)
    if q == 1 and l == 0:
        return ResidueTerm(loc, "s_zero", -2.0 + 0j, "closed_form")
    tau = root_data(chi).tau
    cb = chi.conj()
    y = q * x / (2 * math.pi)
    kind = "s_zero" if l == 0 else "trivial_zero"
    if l == 0:
        L1 = l_eval(1.0, cb, policy).value
        if kappa:
            v = math.pi * 1j / (tau * L1)
        else:
            dL = l_derivative(1.0, cb, 1, policy).value
            v = 2.0 / (tau * L1) * (math.log(y) + dL / L1 - EULER_GAMMA)
        return ResidueTerm(loc, kind, complex(v), "closed_form")
    if (l + kappa) % 2 == 1:
        return ResidueTerm(loc, kind, 0j, "closed_form")
    if kappa:
        k = (l + 1) // 2
        L = l_eval(2 * k, cb, policy).value
        logmag = -(2 * k - 1) * math.log(y) - math.lgamma(2 * k) - math.log(2 * k - 1)
        v = (-1) ** k * 2j * math.exp(logmag) / (tau * L)
    else:
        k = l // 2
        L = l_eval(2 * k + 1, cb, policy).value
        logmag = -2 * k * math.log(y) - math.lgamma(2 * k + 1) - math.log(k)
        v = (-1) ** (k + 1) * math.exp(logmag) / (tau * L)
    return ResidueTerm(loc, kind, complex(v), "closed_form")


def _trivial_series(x: float, term: Callable[[int], complex], parity_step: int = 1,
                    start: int = 1) -> tuple[complex, int]:
    """Σ_{l ≥ start} term(l) until two successive non-skipped terms fall below tolerance."""
    parts: list[complex] = []
    small = 0
    l = start
    used = 0
    while l <= TRIVIAL_MAX_L:
        v = term(l)
        used += 1
        parts.append(v)
        partial = _csum(parts)
        if abs(v) < TRIVIAL_TOL * (1 + abs(partial)):
            small += 1
            if small >= 2:
                break
        else:
            small = 0
        l += parity_step
    return _csum(parts), used


# -- zero sums ------------------------------------------------------------------------------

def _zero_terms(x: float, rhos: np.ndarray, deriv: Callable, inverse: Callable | None) -> tuple[list[complex], int]:
    """x^ρ/(D(ρ) ρ) for each ρ with D the derivative of the relevant L-assembly.

    Near-vanishing derivatives are redone by quadrature around ρ (multiplicity-agnostic).
    """
    if len(rhos) == 0:
        return [], 0
    d = deriv(rhos)
    lx = math.log(x)
    vals = np.exp(rhos * lx) / (d * rhos)
    redone = 0
    for i in np.nonzero(np.abs(d) < MULTIPLE_ZERO_TOL)[0]:
        if inverse is None:
            raise ArithmeticError(f"suspected multiple zero at {rhos[i]}")
        vals[i] = residue_quadrature(x, rhos[i], 1e-3, inverse, "nontrivial_zero").value
        redone += 1
    return list(vals), redone


def zero_sum(x: float, chi: DirichletCharacter, T_nu: float, bank: ZeroBank | None = None,
             policy: PrecisionPolicy = DEFAULT_POLICY) -> tuple[complex, int]:
    """Σ_{|γ| < T_ν} x^ρ/(L'(ρ, χ) ρ) over critical-line zeros, all taken simple.

    Zeros with γ < 0 are the conjugates of zeros of L(s, χ̄); χ may be imprimitive,
    in which case the ordinates come from χ* and L' is that of L(s, χ) itself.
    """
    bank = bank or default_workspace().bank
    star = primitive_inducer(chi)
    pos = bank.ordinates(star, T_nu)
    neg = bank.ordinates(star.conj(), T_nu)
    for cache_chi in (star, star.conj()):
        if not bank.get(cache_chi, T_nu).count_verified:
            raise ValueError(f"zero cache for {cache_chi.label} is not verified")
    rhos = np.concatenate([0.5 + 1j * pos, 0.5 - 1j * neg])
    order = np.argsort(np.abs(rhos.imag), kind="stable")
    rhos = rhos[order]
    deriv = lambda s: l_jet(s, chi, 1, policy)[0][1]  # noqa: E731
    vals, _ = _zero_terms(x, rhos, deriv, inverse_l(chi, policy))
    return _csum(vals), len(rhos)


def imaginary_axis_sum(x: float, F: FiniteEulerProduct, T_star: float,
                       policy: PrecisionPolicy = DEFAULT_POLICY) -> tuple[complex, ResidueTerm, list[ResidueTerm], list[str]]:
    """Residues of x^s/(L(s, χ) s) at s = 0 and at the lattice zeros iη, |η| < T_*."""
    notes = []
    lat = zero_lattice(F, T_star)
    eta_min = min((abs(z.eta) for z in lat), default=math.inf)
    nearest = min(eta_min, 1.0)  # trivial zeros of L(s, χ*) sit at −1, −2, ...
    r0 = min(0.5 * nearest, 1.0 / math.log(x + 3))
    inv = inverse_l_split(F, policy)
    s0 = residue_quadrature(x, 0j, r0, inv, "s_zero")
    terms = []
    if lat:
        etas = np.array([z.eta for z in lat])
        s = 1j * etas
        Lst = l_values(s, F.chi_star, policy)
        dF = F.jet(s, 1)[1]
        for z, e, Lv, d in zip(lat, etas, Lst, dF):
            if z.collided or abs(Lv) <= 1e-8:
                gap = min([abs(e - w.eta) for w in lat if w is not z] + [abs(e)])
                t = residue_quadrature(x, 1j * e, 0.25 * gap, inv, "imaginary_axis")
                t.multiplicity_used = z.multiplicity
                notes.append(f"quadrature at eta={e:.6f} (collision or near-cancellation)")
            else:
                v = np.exp(1j * e * math.log(x)) / (Lv * d * 1j * e)
                t = ResidueTerm(1j * e, "imaginary_axis", complex(v), "closed_form", 1)
            terms.append(t)
    terms.sort(key=lambda t: abs(t.location))
    return _csum([t.value for t in terms]), s0, terms, notes


def zero_order_at_origin(chi: DirichletCharacter) -> int:
    """Order of vanishing of L(s, χ) at s = 0: r from F plus one if χ* is even and non-trivial."""
    star = primitive_inducer(chi)
    r = build_product(chi).r if not chi.is_primitive else 0
    return r + (1 if (star.parity_kappa == 0 and star.modulus > 1) else 0)


def origin_leading_term(x: float, chi: DirichletCharacter, policy: PrecisionPolicy = DEFAULT_POLICY) -> complex:
    """(log x)^m / L^{(m)}(0, χ) with m the order of the zero of L(s, χ) at 0."""
    m = zero_order_at_origin(chi)
    c, _ = l_jet([0j], chi, m, policy)
    deriv = c[m, 0] * math.factorial(m)
    return complex(math.log(x) ** m / deriv)


# -- budgets ---------------------------------------------------------------------------------

def budget_primitive(x: float, T: float, attained: float, gap: float) -> tuple[float, dict]:
    a = x / T * (math.log(x + 3) + attained)
    b = min(1.0, x / (T * gap)) if gap > 0 else 1.0
    return a + b, {
        "x_over_T": x / T,
        "log_x_plus_3": math.log(x + 3),
        "attained_bound": attained,
        "nearest_gap": gap,
        "zero_sum_term": a,
        "boundary_term": b,
        "normalization": "unit constants",
    }


def _t_condition_notes(T: float, q: int, x: float) -> list[str]:
    notes = []
    if T < math.exp(q ** (1 / 3)):
        notes.append(f"T={T} below exp(q^(1/3))={math.exp(q ** (1 / 3)):.3g} (asymptotic condition not enforced)")
    if T < 2 / x:
        notes.append(f"T={T} below 2/x")
    return notes


# -- assemblies --------------------------------------------------------------------------------

def _parts_total(*parts: complex) -> complex:
    return _csum(parts)


def assemble_theorem1(x: float, chi: DirichletCharacter, T: float, ws: Workspace | None = None,
                      good: GoodOrdinate | None = None, truth_chi: DirichletCharacter | None = None,
                      modulus_for_gap: int | None = None) -> ExplicitFormulaReport:
    """Truncated explicit formula for M*(x, χ) with χ primitive."""
    ws = ws or default_workspace()
    if not chi.is_primitive:
        raise ValueError(f"{chi.label} is not primitive")
    pol = ws.policy
    good = good or find_t_nu(T, [chi], ws.sigma_step, ws.t_step, pol)
    T_nu = good.T_nu
    for c in (chi, chi.conj()):
        ws.bank.get(c, max(2 * T, T_nu))
    zs, nz = zero_sum(x, chi, T_nu, ws.bank, pol)
    s0 = trivial_residue_primitive(x, chi, 0, pol).value
    triv, used = _trivial_series(x, lambda l: trivial_residue_primitive(x, chi, l, pol).value,
                                 parity_step=2, start=2 - chi.parity_kappa)
    total = _parts_total(zs, s0, triv)
    tchi = truth_chi or chi
    table = ws.mobius(int(x) + 256)
    truth = summatory_twisted(x, tchi, table)
    qg = modulus_for_gap or tchi.modulus
    gap = nearest_squarefree_coprime(x, qg, table)
    budget, inputs = budget_primitive(x, T, good.attained_bound, gap)
    notes = _t_condition_notes(T, chi.modulus, x)
    return ExplicitFormulaReport(
        "theorem1", tchi.label, x, T, T_nu, None, zs, 0j, triv, s0, total, truth, truth - total,
        inputs, budget, nz, used, notes, ws.provenance(),
    )


def assemble_theorem2(x: float, chi: DirichletCharacter, T: float, ws: Workspace | None = None,
                      good: GoodOrdinate | None = None, T_star: float | None = None) -> ExplicitFormulaReport:
    """Truncated explicit formula for M*(x, χ) with χ imprimitive and F ≢ 1."""
    ws = ws or default_workspace()
    pol = ws.policy
    F = build_product(chi)
    if F.is_trivial or chi.is_primitive:
        raise ValueError(f"{chi.label}: F is identically 1; use the primitive assembly on χ*")
    star = F.chi_star
    good = good or find_t_nu(T, [star], ws.sigma_step, ws.t_step, pol)
    T_nu = good.T_nu
    if T_star is None:
        T_star, _ = find_t_star(T_nu, [F])
    for c in (star, star.conj()):
        ws.bank.get(c, max(2 * T, T_nu))
    zs, nz = zero_sum(x, chi, T_nu, ws.bank, pol)
    ims, s0, _, qnotes = imaginary_axis_sum(x, F, T_star, pol)

    def term(l):
        return trivial_residue_primitive(x, star, l, pol).value / F(complex(-l))

    triv, used = _trivial_series(x, term, parity_step=2, start=2 - star.parity_kappa)
    total = _parts_total(zs, ims, triv, s0.value)
    table = ws.mobius(int(x) + 256)
    truth = summatory_twisted(x, chi, table)
    gap = nearest_squarefree_coprime(x, chi.modulus, table)
    budget, inputs = budget_primitive(x, T, good.attained_bound, gap)
    inputs["T_star"] = T_star
    notes = _t_condition_notes(T, chi.modulus, x) + qnotes
    lead = origin_leading_term(x, chi, pol)
    inputs["origin_leading_term"] = [lead.real, lead.imag]
    inputs["origin_zero_order"] = zero_order_at_origin(chi)
    if star.modulus == 1:
        notes.append("principal character: closed s=0 form skipped, quadrature is authoritative")
    return ExplicitFormulaReport(
        "theorem2", chi.label, x, T, T_nu, T_star, zs, ims, triv, s0.value, total, truth,
        truth - total, inputs, budget, nz, used, notes, ws.provenance(),
    )


def assemble_corollary1(x: float, q: int, a: int, T: float, ws: Workspace | None = None) -> ExplicitFormulaReport:
    """M*(x; q, a) as (1/φ(q)) Σ_χ χ̄(a) × (per-character formulas) with one shared T_ν and T_*."""
    ws = ws or default_workspace()
    if math.gcd(a, q) != 1:
        raise ValueError(f"gcd({a}, {q}) > 1")
    pol = ws.policy
    G = build_group(q)
    stars = list(dict.fromkeys(primitive_inducer(c) for c in G))
    good = find_t_nu(T, stars, ws.sigma_step, ws.t_step, pol)
    prods = [build_product(c) for c in G if not c.is_primitive]
    prods = [F for F in prods if not F.is_trivial]
    T_star = find_t_star(good.T_nu, prods)[0] if prods else None
    parts = []
    for c in G:
        w = np.conj(c(a)) / len(G)
        if c.is_primitive:
            rep = assemble_theorem1(x, c, T, ws, good)
        else:
            F = build_product(c)
            if F.is_trivial:
                rep = assemble_theorem1(x, F.chi_star, T, ws, good, truth_chi=c, modulus_for_gap=q)
            else:
                rep = assemble_theorem2(x, c, T, ws, good, T_star)
        parts.append((w, rep))
    zs = _csum(w * r.zero_sum for w, r in parts)
    ims = _csum(w * r.imaginary_axis_sum for w, r in parts)
    triv = _csum(w * r.trivial_sum for w, r in parts)
    s0 = _csum(w * r.s_zero_term for w, r in parts)
    total = _parts_total(zs, ims, triv, s0)
    table = ws.mobius(int(x) + 256)
    truth = complex(summatory_progression(x, q, a, table))
    gap = nearest_squarefree_coprime(x, q, table)
    budget, inputs = budget_primitive(x, T, good.attained_bound, gap)
    inputs["T_star"] = T_star
    inputs["per_character_totals"] = {r.subject: [r.formula_total.real, r.formula_total.imag] for _, r in parts}
    notes = _t_condition_notes(T, q, x)
    return ExplicitFormulaReport(
        "corollary1", f"{q}:{a}", x, T, good.T_nu, T_star, zs, ims, triv, s0, total, truth,
        truth - total, inputs, budget, sum(r.zeros_used for _, r in parts),
        sum(r.trivial_terms for _, r in parts), notes, ws.provenance(),
    )


def _field_zero_terms(x: float, K, T_nu: float, ws: Workspace) -> tuple[list[complex], int, list[str]]:
    """Terms x^ρ/(ζ_K'(ρ) ρ) over the positive ordinates of all L(s, χ*), χ ∈ X(K)."""
    pol = ws.policy
    gam = []
    for c in K.characters:
        star = primitive_inducer(c)
        gam.extend(ws.bank.ordinates(star, T_nu))
    gam = np.sort(np.array(gam, dtype=float))
    notes = []
    if gam.size == 0:
        return [], 0, notes
    keep = np.ones(gam.size, dtype=bool)
    coincide = np.zeros(gam.size, dtype=bool)
    close = np.nonzero(np.diff(gam) <= COINCIDENCE_TOL)[0]
    keep[close + 1] = False
    coincide[close] = True
    gam, coincide = gam[keep], coincide[keep]
    rhos = 0.5 + 1j * gam
    deriv = lambda s: dedekind_jet(s, K, 1, pol)[0][1]  # noqa: E731
    inv = inverse_dedekind(K, pol)
    vals, _ = _zero_terms(x, rhos, deriv, inv)
    for i in np.nonzero(coincide)[0]:
        vals[i] = residue_quadrature(x, rhos[i], 1e-3, inv, "nontrivial_zero").value
        notes.append(f"coincident ordinate {gam[i]:.9f} handled by quadrature")
    # ζ_K is real on the real axis, so the zeros below the axis give the conjugate terms
    terms = []
    for v in vals:
        terms.extend([v, np.conj(v)])
    return terms, 2 * len(vals), notes


def field_origin_leading_term(x: float, K) -> complex:
    """−2^{r1+r2} π^{r2} (log x)^{r1+r2−1} / ((r1+r2−1)! |d_K|^{1/2} κ_K)."""
    r = K.r1 + K.r2 - 1
    return complex(-(2 ** (K.r1 + K.r2)) * math.pi**K.r2 * math.log(x) ** r
                   / (math.factorial(r) * math.sqrt(abs(K.discriminant)) * K.kappa))


def field_trivial_residue(x: float, K, l: int, ws: Workspace | None = None) -> ResidueTerm:
    ws = ws or default_workspace()
    r = min(0.4, 1.0 / math.log(x + 3))
    kind = "s_zero" if l == 0 else "trivial_zero"
    return residue_quadrature(x, complex(-l), r, inverse_dedekind(K, ws.policy), kind)


def budget_field(x: float, T: float, K, attained: float, phi0: float, n_x: int, a_nx: int) -> tuple[float, dict]:
    n = K.degree
    lx = math.log(x + 2)
    first = math.exp(n / x) * lx**n
    second = K.kappa * lx + phi0 / (1 / lx + 1 / n)
    a = x / T * (min(first, second) + attained)
    b = a_nx * min(1.0, x / (T * abs(x - n_x)))
    return a + b, {
        "x_over_T": x / T,
        "growth_term_a": first,
        "growth_term_b": second,
        "phi0_empirical": phi0,
        "attained_bound": attained,
        "n_x": n_x,
        "a_n_x": a_nx,
        "zero_sum_term": a,
        "boundary_term": b,
        "normalization": "unit constants; attained bound placed inside the x/T factor",
    }


def assemble_theorem3(x: float, K, T: float, ws: Workspace | None = None) -> ExplicitFormulaReport:
    """Truncated explicit formula for M_K*(x) over the Abelian field K."""
    from .field import good_ordinate_field

    ws = ws or default_workspace()
    pol = ws.policy
    good, _ = good_ordinate_field(K, T, ws.sigma_step, ws.t_step, pol)
    T_nu = good.T_nu
    for c in K.characters:
        ws.bank.get(primitive_inducer(c), max(2 * T, T_nu))
    terms, nz, notes = _field_zero_terms(x, K, T_nu, ws)
    zs = _csum(terms)
    s0 = field_trivial_residue(x, K, 0, ws).value
    triv, used = _trivial_series(x, lambda l: field_trivial_residue(x, K, l, ws).value)
    total = _parts_total(zs, s0, triv)
    coeffs = ws.field(K, max(int(x) + 256, 10_000))
    truth = complex(summatory_field(x, coeffs))
    phi0 = ideal_count_error_scan(K, coeffs)
    nn = nearest_active_norm(x, coeffs)
    if nn.secondary_tie:
        notes.append(f"n_x tie at equal ideal counts, took the smaller norm {nn.n}")
    budget, inputs = budget_field(x, T, K, good.attained_bound, phi0, nn.n, nn.ideal_count)
    lead = field_origin_leading_term(x, K)
    inputs["origin_leading_term"] = [lead.real, lead.imag]
    notes += _t_condition_notes(T, K.cyclotomic_conductor, x)
    return ExplicitFormulaReport(
        "theorem3", K.label, x, T, T_nu, None, zs, 0j, triv, s0, total, truth, truth - total,
        inputs, budget, nz, used, notes, ws.provenance(),
    )


# -- derivative sums -----------------------------------------------------------------------------

@dataclass
class DerivativeSumReport:
    subject: str
    T_requested: float
    T_nu: float
    sum: complex
    abs_sum: float
    main_term: float
    difference: complex
    trajectory: list[tuple[float, complex]]

    def to_rows(self):
        return [(g, s.real, s.imag) for g, s in self.trajectory]


def _derivative_report(subject, T, T_nu, gam, deriv) -> DerivativeSumReport:
    gam = np.sort(np.asarray(gam, dtype=float))
    gam = gam[(gam > 0) & (gam < T_nu)]
    if gam.size:
        d = deriv(0.5 + 1j * gam)
        if np.any(np.abs(d) < MULTIPLE_ZERO_TOL):
            raise ArithmeticError("suspected multiple zero: derivative vanishes")
        inv = 1.0 / d
    else:
        inv = np.zeros(0, dtype=complex)
    partial = np.cumsum(inv)
    total = _csum(inv)
    traj = [(float(g), complex(p)) for g, p in zip(gam, partial)]
    main = T_nu / (2 * math.pi)
    return DerivativeSumReport(subject, T, T_nu, total, math.fsum(np.abs(inv)), main, total - main, traj)


def derivative_sum(chi: DirichletCharacter, T: float, ws: Workspace | None = None,
                   use_good_ordinate: bool = True) -> DerivativeSumReport:
    """Σ_{0<γ<T_ν} 1/L'(ρ, χ) next to T_ν/2π (or up to T itself when asked)."""
    ws = ws or default_workspace()
    pol = ws.policy
    T_nu = find_t_nu(T, [chi], ws.sigma_step, ws.t_step, pol).T_nu if use_good_ordinate else T
    gam = ws.bank.ordinates(chi, T_nu)
    return _derivative_report(chi.label, T, T_nu, gam, lambda s: l_jet(s, chi, 1, pol)[0][1])


def derivative_sum_field(K, T: float, ws: Workspace | None = None,
                         use_good_ordinate: bool = True) -> DerivativeSumReport:
    from .field import good_ordinate_field

    ws = ws or default_workspace()
    pol = ws.policy
    T_nu = good_ordinate_field(K, T, ws.sigma_step, ws.t_step, pol)[0].T_nu if use_good_ordinate else T
    gam = []
    for c in K.characters:
        gam.extend(ws.bank.ordinates(primitive_inducer(c), T_nu))
    gam = np.unique(np.round(np.asarray(gam), 9))
    return _derivative_report(K.label, T, T_nu, gam, lambda s: dedekind_jet(s, K, 1, pol)[0][1])
