import io
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from explicit_mobius.characters import build_group, from_label
from explicit_mobius.finite_euler import (
    build_product,
    count_zeros,
    hadamard_check,
    log_derivative_check,
    value_bounds_check,
    write_lattice_csv,
    zero_lattice,
)
from explicit_mobius.lfunc import l_values

F4 = build_product(build_group(4).principal)
F6 = build_product(from_label("6.1"))
F10 = build_product(from_label("10.1"))
F12 = build_product(build_group(12).principal)
LOG2 = math.log(2)


def test_build_examples():
    assert F4.chi_star.modulus == 1 and F4.active_primes == (2,) and F4.r == 1
    assert F6.chi_star.modulus == 3 and F6.active_primes == (2,) and F6.r == 0
    assert abs(F6.chi_star(2) + 1) < 1e-15
    assert F12.active_primes == (2, 3) and F12.r == 2
    assert build_product(from_label("5.1")).is_trivial
    assert build_product(build_group(9)["9.3"]).is_trivial  # induced from mod 3, no new primes


def test_b_constant():
    assert F4.b_constant == pytest.approx(-0.5 * LOG2)
    assert build_product(build_group(2).principal).b_constant == pytest.approx(-0.5 * LOG2)
    assert F6.b_constant == complex(-0.5 * LOG2, 0.0)
    assert abs(F10.chi_star(2) - 1j) < 1e-15
    assert abs(F10.b_constant - complex(-0.5 * LOG2, 0.5 * LOG2)) < 1e-15


def test_lattice_examples():
    etas = [z.eta for z in zero_lattice(F6, 30)]
    assert min(e for e in etas if e > 0) == pytest.approx(math.pi / LOG2)
    assert all(abs(e / (math.pi / LOG2) - round(e / (math.pi / LOG2))) < 1e-12 for e in etas)
    e4 = [z.eta for z in zero_lattice(F4, 20)]
    assert sorted(round(e * LOG2 / (2 * math.pi)) for e in e4) == [-2, -1, 1, 2]


@pytest.mark.parametrize("q", [4, 6, 10, 12, 15, 30])
def test_lattice_points_are_roots(q):
    for chi in build_group(q):
        F = build_product(chi)
        if F.is_trivial:
            continue
        lat = zero_lattice(F, 60)
        assert all(abs(F(1j * z.eta)) < 1e-12 for z in lat)


def test_lattice_complete_by_scan():
    for F in (F6, F10, F12):
        t = np.linspace(0, 50, 500_001)
        v = np.abs(F.values(1j * t))
        mins = np.nonzero((v[1:-1] < v[:-2]) & (v[1:-1] <= v[2:]) & (v[1:-1] < 1e-3))[0] + 1
        lat = np.array([z.eta for z in zero_lattice(F, 51, include_zero=True)])
        for i in mins:
            # refine the grid minimum by golden-section on |F|
            a, b = t[i - 1], t[i + 1]
            for _ in range(80):
                m1, m2 = a + 0.382 * (b - a), a + 0.618 * (b - a)
                if abs(F(1j * m1)) < abs(F(1j * m2)):
                    b = m2
                else:
                    a = m1
            assert np.min(np.abs(lat - 0.5 * (a + b))) < 1e-9


def test_conjugate_symmetry():
    G = build_product(from_label("10.1").conj())
    a = sorted(z.eta for z in zero_lattice(F10, 40))
    b = sorted(-z.eta for z in zero_lattice(G, 40))
    assert np.allclose(a, b, atol=1e-12)


@pytest.mark.parametrize("q", [6, 10, 12, 20, 30])
def test_factorization_identity(q):
    rng = np.random.default_rng(q)
    s = rng.uniform(-0.5, 1.5, 100) + 1j * rng.uniform(-40, 40, 100)
    for chi in build_group(q):
        F = build_product(chi)
        lhs = l_values(s, chi)
        rhs = l_values(s, F.chi_star) * F.values(s)
        assert np.max(np.abs(lhs - rhs) / np.abs(lhs)) < 1e-9


def test_hadamard_convergence():
    res = [hadamard_check(F4, 0.7, K) for K in (100, 1000, 10_000)]
    assert res[0] > res[1] > res[2]
    assert res[1] / res[0] <= 0.51 and res[2] / res[1] <= 0.51
    assert hadamard_check(F6, 0.7 + 2j, 1000) == pytest.approx(hadamard_check(F6, 0.7 - 2j, 1000), rel=1e-6)
    # r-fold zero at 0: F(s)/s^r has a finite nonzero limit
    vals = [abs(F4(s) / s) for s in (1e-3, 1e-5, 1e-7)]
    assert vals[-1] == pytest.approx(LOG2, rel=1e-6)


def test_count_examples():
    c = count_zeros(F6, 0, 5)
    assert c.count == 1 and c.bound == pytest.approx(1 + 2.5 * LOG2) and c.ok
    assert count_zeros(F4, 8, 2).count == 1 and count_zeros(F4, 8, 2).ok
    assert count_zeros(F6, 1.234, 1e-9).count == 0


@pytest.mark.parametrize("F", [F4, F6, F10, F12], ids=["4", "6", "10", "12"])
@settings(max_examples=1000, deadline=None)
@given(t=st.floats(-200, 200), h=st.floats(1e-3, 20))
def test_zero_count_bound(F, t, h):
    assert count_zeros(F, t, h).ok


def test_value_bounds():
    t = np.linspace(-50, 50, 2001)
    up = value_bounds_check(F4, 1 / math.log(4), t)["upper"]
    assert up.holds and up.rhs == pytest.approx(16)
    low = value_bounds_check(F6, -2.0, t)["lower"]
    assert low.holds
    assert np.allclose(np.abs(F6.values(40 + 1j * t)), 1, atol=1e-11)
    with pytest.raises(ValueError):
        value_bounds_check(F6, 0.1, t, h=0.5)


def test_log_derivative():
    c = log_derivative_check(F4, 0.1 + 20j, 0.5)
    assert c.ok
    small = [log_derivative_check(F4, s, 0.5).residual for s in (1e-2, 1e-4, 1e-6)]
    assert max(small) < 1
    for t in np.linspace(1, 40, 30):
        assert log_derivative_check(F12, 0.05 + 1j * t, 0.5).ok
        assert log_derivative_check(F12, 0.05 + 1j * t, 1.0).ok


def test_lattice_csv():
    buf = io.StringIO()
    write_lattice_csv(F4, 10, buf)
    rows = buf.getvalue().splitlines()
    assert rows[0] == "eta,prime,multiplicity" and "0.0,2,1" in rows
