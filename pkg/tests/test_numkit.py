import math
import random
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from glsums.errors import RangeError, ResourceError, UsageError
from glsums.numkit import (
    CompensatedSum,
    Numeric,
    build_sieve,
    check_exact_cap,
    constant,
    divisors,
    factorize,
    gcd_many,
    harmonic,
    harmonic_table,
    lcm_many,
    lcm_upto,
    primes_up_to,
    zeta,
)

N = 1000


@pytest.fixture(scope="module")
def sv():
    return build_sieve(N)


def test_gcd_lcm_many_examples():
    assert gcd_many([4, 6, 10]) == 2
    assert lcm_many([4, 6, 10]) == 60
    assert gcd_many([7]) == 7 and lcm_many([7]) == 7


@pytest.mark.parametrize("bad", [[], [0, 3], [-2]])
def test_gcd_lcm_many_reject(bad):
    with pytest.raises(UsageError):
        gcd_many(bad)
    with pytest.raises(UsageError):
        lcm_many(bad)


@given(st.lists(st.integers(1, 10**6), min_size=1, max_size=6))
def test_gcd_times_lcm_pair(vals):
    g, l = gcd_many(vals), lcm_many(vals)
    assert all(v % g == 0 and l % v == 0 for v in vals)
    if len(vals) == 2:
        assert g * l == vals[0] * vals[1]


def test_lcm_upto():
    assert [lcm_upto(n) for n in range(1, 11)] == [1, 2, 6, 12, 60, 60, 420, 840, 2520, 2520]


def test_spf_is_smallest_prime_divisor(sv):
    for n in range(2, N + 1):
        p = int(sv.spf[n])
        assert n % p == 0
        assert all(n % q for q in range(2, p))
    primes = sv.primes().tolist()
    assert primes == [p for p in range(2, N + 1) if all(p % q for q in range(2, math.isqrt(p) + 1))]


def test_divisor_sum_identities(sv):
    for n in range(1, N + 1):
        ds = divisors(n)
        assert sum(int(sv.phi[d]) for d in ds) == n
        assert sum(int(sv.mobius[d]) for d in ds) == (n == 1)
        assert sum(int(sv.jordan2[d]) for d in ds) == n * n


def test_columns_against_trial_division(sv):
    for n in range(1, N + 1):
        f = factorize(n)
        assert int(sv.tau[n]) == len([d for d in range(1, n + 1) if n % d == 0])
        assert int(sv.omega[n]) == len(f)
        assert int(sv.phi[n]) == sum(1 for j in range(1, n + 1) if math.gcd(j, n) == 1)
        mu = 0 if any(e > 1 for e in f.values()) else (-1) ** len(f)
        assert int(sv.mobius[n]) == mu
        assert sv.factor(n) == f


def test_sieve_range_and_readonly(sv):
    with pytest.raises(RangeError):
        sv.factor(N + 1)
    with pytest.raises(ValueError):
        sv.phi[3] = 0


def test_sieve_memory_cap(monkeypatch):
    import glsums.numkit as nk

    monkeypatch.setattr(nk, "SIEVE_MEMORY_CAP", 1000)
    with pytest.raises(ResourceError):
        nk.build_sieve(10**4)


def test_primes_up_to():
    assert primes_up_to(30).tolist() == [2, 3, 5, 7, 11, 13, 17, 19, 23, 29]


def test_exact_cap():
    check_exact_cap(600)
    with pytest.raises(ResourceError):
        check_exact_cap(601)
    check_exact_cap(5000, cap=5000)


def test_harmonic_exact_and_float():
    for m in (1, 2, 10, 97):
        want = sum(Fraction(1, j) for j in range(1, m + 1))
        assert harmonic(m, "exact").value == want
        assert harmonic(m, "float").value == pytest.approx(float(want), rel=1e-15)
    tab = harmonic_table(50)
    assert tab[0] == 0 and tab[50] == pytest.approx(float(harmonic(50, "exact").value), rel=1e-15)


@settings(max_examples=50)
@given(st.lists(st.fractions(max_denominator=1000), min_size=1, max_size=20), st.randoms())
def test_exact_sum_is_order_independent(vals, rnd):
    a = sum((Numeric.exact(v) for v in vals), Numeric.exact(0))
    shuffled = list(vals)
    rnd.shuffle(shuffled)
    b = sum((Numeric.exact(v) for v in shuffled), Numeric.exact(0))
    assert a == b
    assert math.gcd(a.numerator, a.denominator) == 1 and a.denominator > 0


def test_numeric_mixing_and_json():
    a = Numeric.exact(Fraction(3, 1))
    assert a.to_json() == {"value": "3/1", "value_num": "3", "value_den": "1"}
    assert a.to_text() == "3"
    b = a + 0.5
    assert b.mode == "float" and b.value == 3.5
    assert Numeric.approx(0.1).to_json() == {"value": "0.1"}


def test_compensated_sum():
    rnd = random.Random(1)
    vals = [rnd.uniform(-1, 1) * 10 ** rnd.randint(-8, 8) for _ in range(5000)]
    acc = CompensatedSum()
    for v in vals:
        acc.add(v)
    assert float(acc) == pytest.approx(math.fsum(vals), abs=1e-12)


@pytest.mark.parametrize("name,ref", [
    ("zeta2", mpmath.zeta(2)),
    ("zeta3", mpmath.zeta(3)),
    ("zeta4", mpmath.zeta(4)),
    ("gamma", mpmath.euler),
    ("zetaprime2", mpmath.zeta(2, derivative=1)),
])
def test_constants_against_mpmath(name, ref):
    assert constant(name) == pytest.approx(float(ref), rel=1e-12)


def test_zeta_general_and_unknown_constant():
    for s in (1.5, 5, 7.25):
        assert zeta(s) == pytest.approx(float(mpmath.zeta(s)), rel=1e-12)
    assert constant("zeta2") == pytest.approx(math.pi**2 / 6, rel=1e-15)
    with pytest.raises(UsageError):
        constant("zeta9")


def test_sieve_int_types(sv):
    assert sv.phi.dtype.kind == "i" and np.all(sv.phi[1:] > 0)
