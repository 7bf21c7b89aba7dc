import math

import numpy as np
import pytest

from explicit_mobius.characters import from_label
from explicit_mobius.field import (
    build_field,
    cyclotomic,
    gaussian,
    good_ordinate_field,
    parse,
    quadratic_field,
    rationals,
    serialize,
)
from explicit_mobius.lfunc import l_eval
from explicit_mobius.sieve import field_coefficients


def test_gaussian():
    K = gaussian()
    assert K.degree == 2 and K.signature == (0, 1) and K.discriminant == -4
    assert abs(K.kappa - math.pi / 4) < 1e-12
    # class number formula: 2^{r1} (2π)^{r2} h R / (w √|d|) with h = R = 1, w = 4
    assert abs(K.kappa - 2 * math.pi / (4 * 2)) < 1e-12


def test_rationals_and_real_quadratic():
    Q = rationals()
    assert (Q.degree, Q.signature, Q.discriminant, Q.kappa) == (1, (1, 0), 1, 1.0)
    K = quadratic_field(5)
    assert K.signature == (2, 0) and K.discriminant == 5
    assert K.kappa == pytest.approx(l_eval(1, from_label("5.2")).value.real, rel=1e-14)


@pytest.mark.parametrize("K,d", [(gaussian(), 4), (quadratic_field(5), 5), (cyclotomic(5), 125), (cyclotomic(8), 256)],
                         ids=lambda v: getattr(v, "label", str(v)))
def test_conductor_discriminant(K, d):
    assert abs(K.discriminant) == d
    assert math.prod(c.conductor for c in K.characters) == d
    assert K.r1 + 2 * K.r2 == K.degree


def test_cyclotomic_signature():
    K = cyclotomic(5)
    assert K.degree == 4 and K.signature == (0, 2) and K.discriminant == 125


def test_subgroup_validation():
    with pytest.raises(ValueError):
        build_field(5, ["5.1"], exact=True)  # missing identity and closure
    K = build_field(5, ["5.1"])
    assert K.degree == 4


def test_nonnegative_counts(table):
    for K in (gaussian(), quadratic_field(5), cyclotomic(5)):
        a = field_coefficients(K, 10_000, table).ideal_counts
        assert a.dtype.kind == "i" and np.all(a[1:] >= 0)


def test_kappa_slope(table):
    K = gaussian()
    a = field_coefficients(K, 100_000, table).ideal_counts
    assert abs(a[1:].sum() / 1e5 - K.kappa) < 0.01 * K.kappa


def test_good_ordinate_field():
    K = gaussian()
    g, per = good_ordinate_field(K, 20)
    assert 20 <= g.T_nu <= 40 and math.isfinite(g.attained_bound)
    assert g.attained_bound <= per * (1 + 1e-12)
    fine, _ = good_ordinate_field(K, 20, sigma_grid_step=0.125)
    # the finer σ-grid contains the coarse one, so at a fixed t the max cannot drop
    from explicit_mobius.lfunc import dedekind_jet

    sig = 0.5 + 0.125 * np.arange(13)
    at_coarse_t = np.max(1 / np.abs(dedekind_jet(sig + 1j * g.T_nu, K)[0][0]))
    assert at_coarse_t >= g.attained_bound * (1 - 1e-12)
    Q, _ = good_ordinate_field(rationals(), 10)
    assert math.isfinite(Q.attained_bound)


def test_text_roundtrip():
    K = cyclotomic(5)
    text = serialize(K)
    assert text.startswith("abelian-field 1\n")
    back = parse(text)
    assert back.discriminant == K.discriminant and back.kappa == pytest.approx(K.kappa)
    with pytest.raises(ValueError):
        parse(text.replace("discriminant 125", "discriminant 7"))
