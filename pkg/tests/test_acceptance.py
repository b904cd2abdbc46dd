"""Acceptance criteria, each at its stated tolerance and time limit.

Each test logs one PASS/FAIL line; the lines are repeated in the pytest
terminal summary under "acceptance criteria".
"""

import itertools
import math
import time

import numpy as np
import pytest

from glsums import asym
from glsums.multfun import a_k, b_k, constant_one, dirichlet_convolve, mobius_invert, table_from_spec
from glsums.numkit import build_sieve, cached_sieve, constant, primes_up_to
from glsums.tuple_sums import (
    fast_S2,
    fast_T2,
    gcd_kind_sum,
    gcd_reciprocal_table,
    oracle_tuple_sum,
    pair_sum,
    s2_table,
    u2_from_s2,
)


def test_criterion_01_fast_S2_matches_oracle(record):
    t0 = time.perf_counter()
    bad_exact = [x for x in range(1, 301)
                 if fast_S2(x, "exact").value != oracle_tuple_sum("S", 2, x, "exact").value]
    rel = {x: abs(fast_S2(x).value.value / oracle_tuple_sum("S", 2, x, "float").value.value - 1)
           for x in (500, 1000, 2000)}
    elapsed = time.perf_counter() - t0
    ok = not bad_exact and max(rel.values()) <= 1e-9 and elapsed < 60
    record(1, "fast S2 = oracle", ok,
           f"exact mismatches x<=300: {bad_exact or 'none'}; max float rel diff {max(rel.values()):.2e}; "
           f"{elapsed:.1f}s")


def test_criterion_02_convolution_identities(record):
    t0 = time.perf_counter()
    N = 10**4
    sv = cached_sieve(N)
    one = constant_one(N)
    tau = sv.tau[1 : N + 1].astype(np.int64)
    primes = primes_up_to(N)
    failures = []
    for k in (2, 3, 4):
        ak = table_from_spec(a_k(k), N, sv)
        bk = table_from_spec(b_k(k), N, sv)
        if dirichlet_convolve(one, ak).tolist() != (tau**k).tolist():
            failures.append(f"1*a{k} != tau^{k}")
        if mobius_invert(ak).tolist() != bk.tolist():
            failures.append(f"b{k} != mu*a{k}")
        if np.any(ak.values[primes] != 2**k - 1):
            failures.append(f"a{k}(p) != 2^{k}-1")
        if np.any(bk.values[primes] != 2**k - 2):
            failures.append(f"b{k}(p) != 2^{k}-2")
    elapsed = time.perf_counter() - t0
    record(2, "convolution identities n<=1e4", not failures and elapsed < 30,
           f"{failures or 'all hold'}; {elapsed:.1f}s")


def test_criterion_03_tuple_count_semantics(record):
    N = 60
    sv = build_sieve(N)
    failures = []
    for k in (2, 3):
        lcm_count = [0] * (N + 1)
        coprime_count = [0] * (N + 1)
        for t in itertools.product(range(1, N + 1), repeat=k):
            l = math.lcm(*t)
            if l <= N:
                lcm_count[l] += 1
                coprime_count[l] += math.gcd(*t) == 1
        if table_from_spec(a_k(k), N, sv).tolist() != lcm_count[1:]:
            failures.append(f"a{k}")
        if table_from_spec(b_k(k), N, sv).tolist() != coprime_count[1:]:
            failures.append(f"b{k}")
    record(3, "a_k, b_k count lcm-tuples n<=60", not failures, f"mismatches: {failures or 'none'}")


def test_criterion_04_T2_near_3x(record):
    t0 = time.perf_counter()
    # exact T2 at x = 1e4 needs denominators far beyond the default exact cap
    T = {x: fast_T2(x, "exact", exact_cap=10**4).value.value for x in (100, 1000, 10**4)}
    # independent check of the exact route: the literal oracle at 100 (exact)
    # and at 1e4 (float, 1e8 pairs)
    oracle_100 = oracle_tuple_sum("T", 2, 100, "exact").value.value
    oracle_1e4 = oracle_tuple_sum("T", 2, 10**4, "float").value.value
    consistent = oracle_100 == T[100] and abs(oracle_1e4 / float(T[10**4]) - 1) <= 1e-12
    ratio = {x: abs(float(T[x]) - 3 * x) / math.log(x) ** 2 for x in T}
    C = 2 * ratio[100]
    bounded = all(abs(float(T[x]) - 3 * x) <= C * math.log(x) ** 2 for x in T)
    dev = abs(float(T[10**4]) / 10**4 - 3)
    elapsed = time.perf_counter() - t0
    ok = consistent and bounded and dev <= 0.02 and elapsed < 300
    record(4, "T2(x) - 3x = O(log^2 x)", ok,
           f"ratios {', '.join(f'{x}:{r:.3f}' for x, r in ratio.items())} vs C={C:.3f}; "
           f"|T2(1e4)/1e4-3|={dev:.4f}; oracle agrees: {consistent}; {elapsed:.1f}s")


def test_criterion_05_beta2(record):
    t0 = time.perf_counter()
    r = asym.beta_k(2, 2000)
    elapsed = time.perf_counter() - t0
    in_range = 2.99 <= r.value <= 3.0 + r.tail_estimate
    ok = in_range and r.tail_estimate <= 0.01 and elapsed < 30
    record(5, "beta_2 = 3", ok,
           f"value {r.value:.6f} in [2.99, 3+tail]: {in_range}; tail_estimate {r.tail_estimate:.4f} "
           f"(needs <= 0.01); {elapsed:.1f}s")


def test_criterion_06_euler_sum(record):
    e3 = asym.euler_sum_check(10**3)["error_vs_2zeta3"]
    e4 = asym.euler_sum_check(10**4)["error_vs_2zeta3"]
    shrink = abs(e3) / abs(e4)
    ok = abs(e4) <= 2e-3 and shrink >= 8
    record(6, "sum H_n/n^2 -> 2 zeta(3)", ok,
           f"|error| at 1e4 = {abs(e4):.3e} (<= 2e-3); shrink 1e3->1e4 = {shrink:.3f}x (needs >= 8)")


def test_criterion_07_sandwich(record):
    t0 = time.perf_counter()
    failures = []
    for x in (20, 50, 100, 200):
        for kind in ("S", "U"):
            if not asym.sandwich_check(kind, 3, x, workers=4).passed:
                failures.append(f"{kind}3({x})")
    elapsed = time.perf_counter() - t0
    record(7, "sandwich bounds k=3", not failures and elapsed < 300,
           f"failures: {failures or 'none'}; {elapsed:.1f}s")


def test_criterion_08_relations(record):
    failures = []
    for k in (2, 3):
        for rel in asym.RELATIONS:
            for x in range(1, 31):
                if not asym.relation_check(rel, k, x).passed:
                    failures.append(f"{rel}[k={k},x={x}]")
    record(8, "S/U/T relations exact", not failures, f"failures: {failures or 'none'}")


def test_criterion_09_V_bounds(record):
    failures = [x for x in (20, 50, 100) if not asym.v_bounds_check(3, x, workers=4)["pass"]]
    record(9, "floor(x)^3 <= V3 <= x^3 U3", not failures, f"failures: {failures or 'none'}")


def test_criterion_10_leading_coefficients(record):
    t0 = time.perf_counter()
    xs = asym.geometric_grid(1e4, 1e6, 12)
    s2 = asym.fit_log_polynomial([(x, fast_S2(x).value.value) for x in xs], 3)
    c3_target = 2 / math.pi**2
    xs = asym.geometric_grid(1e3, 2e5, 12)
    table = s2_table(max(xs))
    u2 = asym.fit_log_polynomial([(x, u2_from_s2(x, table)) for x in xs], 2)
    c2_target = 6 / math.pi**2
    e3 = abs(s2.leading / c3_target - 1)
    e2 = abs(u2.leading / c2_target - 1)
    elapsed = time.perf_counter() - t0
    record(10, "fit leading coefficients", e3 <= 0.10 and e2 <= 0.15 and elapsed < 180,
           f"c3 {s2.leading:.5f} ({e3:.2%} off 2/pi^2); c2 {u2.leading:.5f} ({e2:.2%} off 6/pi^2); "
           f"{elapsed:.1f}s")


def test_criterion_11_classical_main_terms(record):
    spec = asym.MainTermSpec
    x = 10**5
    r1 = gcd_kind_sum(gcd_reciprocal_table(x, "float"), 2, x).value.value
    m1 = asym.main_term(spec("gcd_recipr_m_n"), x)
    r2 = float(pair_sum("pair_lcm", x, "exact").value.value)
    m2 = asym.main_term(spec("lcm_m_n"), x)
    r3 = gcd_kind_sum(gcd_reciprocal_table(500, "float"), 3, 500).value.value
    m3 = constant("zeta4") / constant("zeta3") * 500**3
    d1, d2, d3 = abs(r1 / m1 - 1), abs(r2 / m2 - 1), abs(r3 / m3 - 1)
    record(11, "classical main terms", d1 <= 5e-3 and d2 <= 1e-2 and d3 <= 1e-2,
           f"1/gcd pair {d1:.2e} (<=5e-3); lcm pair {d2:.2e} (<=1e-2); 1/gcd triple {d3:.2e} (<=1e-2)")


def test_criterion_12_performance(record):
    t0 = time.perf_counter()
    fast_S2(10**6)
    t_s2 = time.perf_counter() - t0
    t0 = time.perf_counter()
    oracle_tuple_sum("T", 3, 300, "exact", workers=4)
    t_t3 = time.perf_counter() - t0
    t0 = time.perf_counter()
    build_sieve(10**7)
    t_sieve = time.perf_counter() - t0
    record(12, "performance", t_s2 < 5 and t_t3 < 10 and t_sieve < 2,
           f"fast S2(1e6) {t_s2:.2f}s (<5); oracle T3(300) exact, 4 workers {t_t3:.2f}s (<10); "
           f"sieve 1e7 {t_sieve:.2f}s (<2)")
