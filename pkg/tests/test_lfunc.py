import math

import mpmath
import numpy as np
import pytest

from explicit_mobius.arith import primes_up_to
from explicit_mobius.characters import build_group, epsilon_factor, from_label, trivial_character
from explicit_mobius.field import gaussian, rationals
from explicit_mobius.lfunc import (
    DEFAULT_POLICY,
    PoleError,
    PrecisionPolicy,
    completed_lambda,
    dedekind_eval,
    hardy_z,
    l_derivative,
    l_eval,
    l_jet,
    l_values,
    reflect_eval,
)
from explicit_mobius.sieve import field_coefficients

CHI4 = from_label("4.1")
LEG5 = from_label("5.2")
CATALAN = 0.915965594177219015


def mp_l(s, chi):
    """Independent oracle: mpmath's Hurwitz-based Dirichlet L."""
    vals = [complex(chi(n)) for n in range(chi.modulus)]
    if chi.modulus == 1:
        return complex(mpmath.zeta(s))
    return complex(mpmath.dirichlet(s, vals))


def test_policy_validation():
    with pytest.raises(ValueError):
        PrecisionPolicy(euler_maclaurin_order=7)
    with pytest.raises(ValueError):
        PrecisionPolicy(cutoff_base=5)
    assert DEFAULT_POLICY.cutoff(0) >= 10


def test_known_values():
    assert abs(l_eval(2, trivial_character()).value - math.pi**2 / 6) < 1e-13
    assert abs(l_eval(1, CHI4).value - math.pi / 4) < 1e-13
    assert abs(l_eval(2, CHI4).value - CATALAN) < 1e-13
    assert abs(l_derivative(2, trivial_character()).value - (-0.93754825431584375370)) < 1e-12
    r = l_eval(0.5 + 10j, CHI4)
    assert r.error_estimate >= 0


def test_catalan_by_euler_transform():
    # alternating series Σ (-1)^k/(2k+1)^2, averaged partial sums (independent of the evaluator)
    s, parts = 0.0, []
    for k in range(2000):
        s += (-1) ** k / (2 * k + 1) ** 2
        parts.append(s)
    for _ in range(10):
        parts = [(a + b) / 2 for a, b in zip(parts, parts[1:])]
    assert abs(l_eval(2, CHI4).value - parts[-1]) < 1e-12


def test_pole():
    with pytest.raises(PoleError):
        l_eval(1, trivial_character())
    with pytest.raises(PoleError):
        dedekind_eval(1, gaussian())


@pytest.mark.parametrize("label", ["1", "3.1", "4.1", "5.1", "5.2", "7.2", "8.1_1", "12.1_1"])
def test_against_mpmath(label):
    chi = from_label(label) if label != "1" else trivial_character()
    rng = np.random.default_rng(7)
    pts = list(rng.uniform(-2.9, 5, 12) + 1j * rng.uniform(-60, 60, 12))
    pts += [0.5 + 1000j, -2.9 + 3j, 0.5 + 0.1j, 2.0 + 0j, -1.5 + 250j]
    for s in pts:
        want = mp_l(s, chi)
        got = l_eval(s, chi).value
        assert abs(got - want) <= 1e-10 * abs(want) + 1e-13, (s, got, want)


def test_principal_through_euler_factor():
    chi = build_group(12).principal
    for s in (2.0, 0.5 + 14j, -1.5 + 2j):
        want = mp_l(s, trivial_character()) * (1 - 2**-s) * (1 - 3**-s)
        assert abs(l_eval(s, chi).value - want) < 1e-10 * abs(want)


def test_derivative_matches_finite_differences():
    rng = np.random.default_rng(3)
    h = 1e-3
    w = {1: 3 / 4, 2: -3 / 20, 3: 1 / 60}
    for _ in range(20):
        chi = [CHI4, LEG5, from_label("5.1"), trivial_character()][rng.integers(4)]
        s = complex(rng.uniform(0, 1), rng.uniform(2, 40))
        fd = sum(c * (l_eval(s + k * h, chi).value - l_eval(s - k * h, chi).value) for k, c in w.items()) / h
        d = l_derivative(s, chi).value
        assert abs(fd - d) < 1e-6 * abs(d)


def test_derivative_order_zero():
    s = 0.3 + 5j
    assert l_derivative(s, CHI4, 0).value == l_eval(s, CHI4).value


def test_higher_derivative_against_mpmath():
    s = 0.5 + 3j
    want = complex(mpmath.diff(lambda z: mpmath.zeta(z), s, 2))
    assert abs(l_derivative(s, trivial_character(), 2).value - want) < 1e-9 * abs(want)


def test_functional_equation_point():
    s = 0.3 + 7j
    lhs = completed_lambda(s, CHI4)
    rhs = epsilon_factor(CHI4) * completed_lambda(1 - s, CHI4.conj())
    assert abs(lhs - rhs) < 1e-9 * abs(lhs)


def test_schwarz_and_self_dual():
    s = 0.5 + 3j
    c = from_label("5.1")
    assert abs(np.conj(completed_lambda(s, c)) - completed_lambda(np.conj(s), c.conj())) < 1e-12
    v = completed_lambda(0.5, LEG5)
    assert abs(v.imag) < 1e-12 * abs(v)
    with pytest.raises(ValueError):
        completed_lambda(0.5, build_group(6).principal)


def test_trivial_zeros_and_overlap():
    # odd characters vanish at -1, -3, ...; even ones at 0, -2, ...
    r = reflect_eval(-3 + 0j, CHI4)
    assert r.value == 0 and "trivial_zero" in r.flags
    assert abs(reflect_eval(-2 + 0j, CHI4).value - (-0.5)) < 1e-12
    assert reflect_eval(-2 + 0j, LEG5).value == 0
    assert abs(reflect_eval(-1 + 0j, LEG5).value - mp_l(-1, LEG5)) < 1e-12
    assert abs(mp_l(-1, LEG5)) > 0.1
    s = -2.5 + 4j
    direct = l_eval(s, CHI4, PrecisionPolicy(reflect_below=-10)).value
    refl = reflect_eval(s, CHI4).value
    assert abs(refl - direct) < 1e-8 * abs(direct)


def test_hardy_z():
    z = hardy_z(np.array([1.0, 5.0, 20.0]), CHI4)
    assert z.dtype.kind == "f"
    assert hardy_z(6.0, CHI4) * hardy_z(6.1, CHI4) < 0
    assert hardy_z(0.0, CHI4) != 0


def test_dedekind():
    want = math.pi**2 / 6 * CATALAN
    assert abs(dedekind_eval(2, gaussian()).value - want) < 1e-12
    assert abs(want - 1.5067030) < 1e-7
    for s in (2, 0.5 + 14j, -1.5 + 1j):
        assert dedekind_eval(s, rationals()).value == l_eval(s, trivial_character()).value


def test_dedekind_dirichlet_series(table):
    K = gaussian()
    N = 10_000
    a = field_coefficients(K, N, table).ideal_counts[1:].astype(float)
    n = np.arange(1, N + 1, dtype=float)
    partial = math.fsum(a / n**3) + K.kappa / (2 * N**2)
    assert abs(partial - dedekind_eval(3, K).value.real) < 1e-6


@pytest.mark.parametrize("label", ["3.1", "4.1", "5.1", "5.2", "7.1"])
def test_euler_product(label):
    chi = from_label(label)
    ps = np.array(primes_up_to(10_000), dtype=float)
    s = 3 + 2j
    vals = np.array([chi(int(p)) for p in ps])
    prod = np.prod(1 / (1 - vals * ps**-s))
    assert abs(prod - l_eval(s, chi).value) < 1e-8


def test_magnitude_law():
    # containment in [1/10, 10] is an engineering interval for unstated constants
    for q in (3, 4, 5):
        for chi in build_group(q).primitive():
            for t in (5.0, 20.0, -5.0, -20.0):
                for sigma in (-0.5, 0.0, 0.25):
                    s = complex(sigma, t)
                    a = abs(s)
                    pred = (2 * math.pi * math.e / (q * a)) ** sigma * math.sqrt(q * a) \
                        * math.exp(abs(t) * math.atan((1 - sigma) / abs(t))) * abs(l_eval(1 - s, chi.conj()).value)
                    ratio = abs(l_eval(s, chi).value) / pred
                    assert 0.1 <= ratio <= 10


def test_jet_shape_and_vectorization():
    s = np.array([0.5 + 1j, 2.0, -2.0 + 3j])
    c, e = l_jet(s, CHI4, 3)
    assert c.shape == (4, 3) and e.shape == (3,)
    assert np.allclose(c[0], l_values(s, CHI4), rtol=1e-14)
