import io
import math
import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from explicit_mobius.characters import build_group, from_label, trivial_character
from explicit_mobius.field import cyclotomic, gaussian, quadratic_field, rationals
from explicit_mobius.sieve import (
    WindowExhausted,
    dirichlet_convolve,
    field_coefficients,
    ideal_count_error_scan,
    load_mobius,
    mertens,
    mertens_segmented,
    mobius_sieve,
    nearest_active_norm,
    nearest_squarefree_coprime,
    save_mobius,
    summatory_field,
    summatory_progression,
    summatory_twisted,
    write_coefficients_csv,
)


def test_small_values(table):
    assert list(table.values[1:11]) == [1, -1, -1, 0, -1, 1, -1, 0, 0, 1]
    assert table[4] == 0


def test_mertens_million(table):
    assert mertens(1_000_000, table) == 212
    assert mertens_segmented(1_000_000, segment=1 << 16) == 212


def test_sieve_memory_budget():
    with pytest.raises(MemoryError):
        mobius_sieve(10**9, max_limit=10**6)


def test_multiplicativity(table):
    rng = random.Random(1)
    done = 0
    while done < 10_000:
        m, n = rng.randrange(1, 1000), rng.randrange(1, 1000)
        if math.gcd(m, n) == 1:
            assert table[m * n] == table[m] * table[n]
            done += 1


def test_spf_consistent(table):
    spf = table.smallest_prime_factor
    for n in (2, 9, 91, 997, 999_983, 1_000_000):
        p = spf[n]
        assert n % p == 0 and all(p % d for d in range(2, int(p**0.5) + 1))


def test_twisted_examples(table):
    assert summatory_twisted(1, trivial_character(), table) == 0.5
    assert summatory_twisted(10.5, from_label("4.1"), table) == 2
    # half weight on mu(10) = 1: -2 + 1/2
    assert summatory_twisted(10, trivial_character(), table) == -1.5
    with pytest.raises(ValueError):
        summatory_twisted(2e6, trivial_character(), table)


def test_progression_examples(table):
    assert summatory_progression(10, 4, 1, table) == 0
    assert summatory_progression(10, 4, 3, table) == -2
    assert summatory_progression(1, 3, 1, table) == 0.5
    with pytest.raises(ValueError):
        summatory_progression(10, 4, 2, table)


@pytest.mark.parametrize("x", [10, 100, 1000, 997])
def test_character_decomposition(table, x):
    for q in range(1, 31):
        G = build_group(q)
        tw = {c: summatory_twisted(x, c, table) for c in G}
        for a in range(1, q + 1):
            if math.gcd(a, q) != 1:
                continue
            avg = sum(np.conj(c(a)) * tw[c] for c in G) / len(G)
            assert abs(avg - summatory_progression(x, q, a, table)) < 1e-9


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 5000))
def test_half_weight_is_average(n):
    table = mobius_sieve(6000)
    c = trivial_character()
    at = summatory_twisted(n, c, table)
    assert at == pytest.approx(0.5 * (summatory_twisted(n - 0.25, c, table) + summatory_twisted(n + 0.25, c, table)))


def test_nearest_squarefree(table):
    assert nearest_squarefree_coprime(4, 1, table) == 1
    assert nearest_squarefree_coprime(7.5, 1, table) == 0.5
    assert nearest_squarefree_coprime(9, 10, table) == 2
    with pytest.raises(WindowExhausted):
        nearest_squarefree_coprime(1, math.prod([2, 3, 5, 7, 11, 13, 17, 19]), mobius_sieve(20))


def test_mobius_roundtrip(tmp_path, table):
    small = mobius_sieve(12345)
    p = tmp_path / "m.mbt"
    save_mobius(small, p)
    assert p.read_bytes()[:4] == b"MBT1"
    back = load_mobius(p)
    assert back.limit == small.limit and np.array_equal(back.values, small.values)


def test_dirichlet_convolve_identity():
    one = np.zeros(31, dtype=complex)
    one[1] = 1
    a = np.arange(31, dtype=complex)
    a[0] = 0
    assert np.allclose(dirichlet_convolve(a, one), a)


@pytest.fixture(scope="module")
def qi(table):
    return field_coefficients(gaussian(), 100_000, table)


def test_gaussian_coefficients(qi):
    assert list(qi.ideal_counts[1:7]) == [1, 1, 0, 1, 2, 0]
    assert qi.mobius_coeffs[2] == -1
    chi = from_label("4.1")
    for n in range(1, 10_001):
        assert qi.ideal_counts[n] == round(sum(chi(d).real for d in range(1, n + 1) if n % d == 0))


@pytest.mark.parametrize("K", [rationals(), gaussian(), quadratic_field(5), cyclotomic(5)], ids=lambda K: K.label)
def test_inverse_pair(K, table):
    c = field_coefficients(K, 10_000, table)
    conv = dirichlet_convolve(c.ideal_counts[:101].astype(complex), c.mobius_coeffs[:101].astype(complex))
    want = np.zeros(101)
    want[1] = 1
    assert np.array_equal(np.rint(conv.real), want)
    assert c.ideal_counts[1] == c.mobius_coeffs[1] == 1
    assert np.all(c.ideal_counts[1:] >= 0)


def test_summatory_field(qi):
    assert summatory_field(1, qi) == 0.5
    # m1 + m2 + m5 + m9 + m10 = 1 - 1 - 2 - 1 + 2
    assert summatory_field(10.5, qi) == -1
    assert summatory_field(2, qi) == 0.5
    with pytest.raises(ValueError):
        summatory_field(1e6, qi)


def test_nearest_active_norm(qi, table):
    # norms 2 and 4 are at distance 1; 4 carries no square-free ideal
    assert nearest_active_norm(3, qi).n == 2
    nn = nearest_active_norm(1.5, qi)
    assert nn.n == 1 and nn.secondary_tie
    Q = field_coefficients(rationals(), 1000, table)
    # 99 = 9 * 11 is not square-free
    assert nearest_active_norm(100, Q).n == 101


def test_ideal_count_scan(qi, table):
    Q = field_coefficients(rationals(), 10_000, table)
    assert ideal_count_error_scan(rationals(), Q) <= 1
    a = ideal_count_error_scan(gaussian(), qi, 1000)
    b = ideal_count_error_scan(gaussian(), qi, 10_000)
    assert 0 < a <= b and abs(a - b) < 5e-4 * b
    assert ideal_count_error_scan(gaussian(), qi, 100) <= a


def test_coefficients_csv(qi):
    from explicit_mobius.sieve import FieldCoefficients

    small = FieldCoefficients(5, qi.ideal_counts[:6], qi.mobius_coeffs[:6], qi.squarefree_counts[:6])
    buf = io.StringIO()
    write_coefficients_csv(small, buf)
    assert buf.getvalue().splitlines()[:3] == ["n,a_n,m_n", "1,1,1", "2,1,-1"]
