import io
import math

import mpmath
import numpy as np
import pytest

from explicit_mobius.characters import build_group, from_label, trivial_character
from explicit_mobius.finite_euler import build_product
from explicit_mobius.lfunc import hardy_z
from explicit_mobius.zeros import (
    ZeroBank,
    argument_count,
    find_t_nu,
    find_t_star,
    load_cache,
    save_cache,
    scan_zeros,
    verify_count,
    write_csv,
)

CHI4 = from_label("4.1")
ZETA = trivial_character()


def oracle_zero(chi, a, b):
    """Bisection on Λ(1/2 + it) for a real self-dual character, all in mpmath."""
    q, k = chi.modulus, chi.parity_kappa
    vals = [complex(chi(n)) for n in range(q)]

    def lam(t):
        s = mpmath.mpc(0.5, t)
        L = mpmath.zeta(s) if q == 1 else mpmath.dirichlet(s, vals)
        return mpmath.re((q / mpmath.pi) ** ((s + k) / 2) * mpmath.gamma((s + k) / 2) * L)

    return float(mpmath.findroot(lam, (a, b), solver="bisect", tol=1e-24))


def test_first_ordinates():
    c = scan_zeros(CHI4, 10)
    assert len(c) == 1 and abs(c.ordinates[0] - 6.0209) < 1e-3
    assert abs(c.ordinates[0] - oracle_zero(CHI4, 6.0, 6.1)) < 1e-8
    z = scan_zeros(ZETA, 15)
    assert abs(z.ordinates[0] - 14.1347) < 1e-3
    assert abs(z.ordinates[0] - oracle_zero(ZETA, 14.1, 14.2)) < 1e-8
    assert abs(z.ordinates[0] - float(mpmath.zetazero(1).imag)) < 1e-8


def test_empty_below_first():
    c = scan_zeros(CHI4, 5)
    assert len(c) == 0 and c.count_verified
    assert argument_count(CHI4, 5) == 0


def test_records_sign_change_and_width():
    c = scan_zeros(from_label("5.1"), 40)
    for r in c.records:
        assert r.half_width <= 1e-9 and r.assumed_multiplicity == 1
        assert hardy_z(r.ordinate_gamma - r.half_width, from_label("5.1")) * \
            hardy_z(r.ordinate_gamma + r.half_width, from_label("5.1")) <= 0
    assert np.all(np.diff(c.ordinates) > 0)


def test_verify_count_and_tamper():
    c = scan_zeros(CHI4, 50)
    assert c.count_verified
    c.records.pop(3)
    assert not verify_count(c, CHI4)


def test_step_stability():
    a = scan_zeros(CHI4, 40, step=0.03)
    b = scan_zeros(CHI4, 40, step=0.01)
    assert len(a) == len(b)
    assert np.max(np.abs(a.ordinates - b.ordinates)) < 1e-8


def test_find_t_nu():
    g = find_t_nu(6, [CHI4])
    assert 6 <= g.T_nu <= 12 and math.isfinite(g.attained_bound)
    assert abs(g.T_nu - 6.0209) > g.grid_step
    assert find_t_nu(6, [CHI4]) == g
    big = find_t_nu(6, [CHI4, from_label("3.1"), from_label("5.1")])
    assert big.attained_bound >= g.attained_bound


def test_find_t_star():
    F = build_product(build_group(6)["6.1"])
    t, d = find_t_star(10, [F])
    assert t == 10.5  # no lattice ordinate in [10, 11]
    eta = math.pi / math.log(2)
    t, d = find_t_star(eta - 0.5, [F])
    assert t in (eta - 0.5, eta + 0.5) and abs(d - 0.5) < 1e-12


def test_cache_roundtrip(tmp_path):
    c = scan_zeros(CHI4, 30)
    save_cache(c, tmp_path)
    raw = (tmp_path / CHI4.label / "zeros.lzc").read_bytes()
    assert raw[:4] == b"LZC1"
    back = load_cache(tmp_path, CHI4.label)
    assert back.T_max == c.T_max and back.count_verified
    assert np.array_equal(back.ordinates, c.ordinates)
    buf = io.StringIO()
    write_csv(c, buf)
    assert buf.getvalue().splitlines()[0] == "label,gamma,half_width,multiplicity"


def test_bank_reuses_disk(tmp_path):
    b1 = ZeroBank(tmp_path)
    g1 = b1.ordinates(CHI4, 20)
    b2 = ZeroBank(tmp_path)
    assert np.array_equal(b2.ordinates(CHI4, 15), g1[g1 < 15])
    assert b2.get(CHI4, 15).T_max == 20
