"""Sums of gcd/lcm expressions over the box 1 <= n_1, ..., n_k <= x.

Two routes are kept apart on purpose:

* the *oracle* enumerates every tuple (numpy over the last two coordinates,
  optionally several processes over the first one);
* the *fast* routes use divisor-sum identities and never look at a tuple.

In exact mode every term has a denominator dividing D = lcm(1..x), so sums
are accumulated as integers over D and reduced once at the end.
"""

from __future__ import annotations

import itertools
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
import multiprocessing

import numpy as np

from .errors import ConsistencyError, RangeError, ResourceError, UsageError
from .multfun import FunctionTable, array_table, convolve_arrays, mobius_invert
from .numkit import (
    Numeric,
    cached_sieve,
    check_exact_cap,
    check_mode,
    divisors,
    factorize,
    harmonic_scaled,
    harmonic_table,
    int_dot,
    lcm_upto,
)

TUPLE_KINDS = ("S", "T", "U", "V")
GCD_KINDS = ("gcd_power", "gcd_reciprocal")
CLASSICAL_KINDS = ("classical_G", "classical_Ginv", "classical_L", "classical_Linv")
PAIR_KINDS = ("pair_gcd", "pair_lcm", "pair_gcd_reciprocal", "pair_lcm_reciprocal")
KINDS = TUPLE_KINDS + GCD_KINDS + CLASSICAL_KINDS + PAIR_KINDS
ALGORITHMS = ("oracle", "fast", "auto")

DEFAULT_BUDGET = 10**9
FAST_S2_LIMIT = 10**8
CLASSICAL_LIMIT = 10**7
SINGLE_EXACT_LIMIT = 10**4
BLOCK_THRESHOLD = 10**6

# oracle chunks hold at most this many tuples
_CHUNK = 1 << 20
# exact oracle keeps a dense per-lcm histogram up to this size
_DENSE_HIST = 3 * 10**7


def tuple_budget() -> int:
    return int(os.environ.get("GLSUMS_BUDGET", DEFAULT_BUDGET))


def default_workers() -> int:
    env = os.environ.get("GLSUMS_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


@dataclass(frozen=True)
class SumRequest:
    kind: str
    k: int = 2
    x: int = 1
    mode: str = "float"
    algorithm: str = "auto"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise UsageError(f"unknown sum kind {self.kind!r}; known: {', '.join(KINDS)}")
        if self.algorithm not in ALGORITHMS:
            raise UsageError(f"algorithm must be one of {ALGORITHMS}")
        check_mode(self.mode)
        if int(self.x) != self.x or self.x < 1:
            raise UsageError(f"x must be a positive integer, got {self.x!r}")
        if self.kind in TUPLE_KINDS + GCD_KINDS and self.k < 2:
            raise UsageError(f"k must be >= 2, got {self.k}")


@dataclass
class SumResult:
    request: SumRequest
    value: Numeric
    algorithm: str
    elapsed: float = 0.0
    term_count: int = 0
    extra: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        r = self.request
        out = {
            "kind": r.kind,
            "k": r.k,
            "x": r.x,
            "mode": self.value.mode,
            "algorithm": self.algorithm,
        }
        out.update(self.value.to_json())
        out["elapsed_ms"] = round(self.elapsed * 1000.0, 3)
        out["term_count"] = self.term_count
        return out

    def csv_row(self) -> list:
        r = self.request
        return [r.kind, r.k, r.x, self.value.mode, self.algorithm, self.value.to_text(),
                round(self.elapsed * 1000.0, 3)]


CSV_HEADER = ["kind", "k", "x", "mode", "algorithm", "value", "elapsed_ms"]


# ---------------------------------------------------------------------------
# Brute-force oracle
# ---------------------------------------------------------------------------

# term kinds understood by the enumerator; S/T/U/V plus the ones used to
# cross-check the fast gcd and pair routes
_TERMS = ("S", "T", "U", "V", "gcd", "gcd_inv", "lcm")


def _pair_grid(x):
    a = np.arange(1, x + 1, dtype=np.int64)
    g = np.gcd.outer(a, a).ravel()
    p = np.multiply.outer(a, a).ravel()
    return g, p // g, p


def _chunks(k, x, lo, hi):
    """Yield (g, l, p) arrays for every tuple whose first index is in [lo, hi].

    Chunk boundaries depend only on (k, x), never on how [1, x] is split
    between workers, so float partials are the same for any worker count.
    """
    if k == 2:
        rows_per = max(1, _CHUNK // x)
        cols = np.arange(1, x + 1, dtype=np.int64)
        start = lo
        while start <= hi:
            stop = min(hi, (start - 1) // rows_per * rows_per + rows_per)
            rows = np.arange(start, stop + 1, dtype=np.int64)[:, None]
            g = np.gcd(rows, cols)
            p = rows * cols
            yield g.ravel(), (p // g).ravel(), p.ravel()
            start = stop + 1
        return
    G2, L2, P2 = _pair_grid(x)
    for n1 in range(lo, hi + 1):
        for rest in itertools.product(range(1, x + 1), repeat=k - 3):
            g0 = math.gcd(n1, *rest)
            l0 = math.lcm(n1, *rest)
            p0 = math.prod(rest, start=n1)
            yield np.gcd(g0, G2), np.lcm(l0, L2), p0 * P2


def _oracle_slice(term, k, x, mode, lo, hi):
    """Partial sum over first index in [lo, hi].

    Exact mode returns an int N with partial = N / lcm(1..x) (or the plain
    integer for integer-valued terms); float mode returns chunk partials.
    """
    if mode == "float":
        parts = []
        for g, l, p in _chunks(k, x, lo, hi):
            if term == "S":
                parts.append(float(np.sum(1.0 / l)))
            elif term == "T":
                parts.append(float(np.sum(g / l)))
            elif term == "U":
                parts.append(float(np.sum(1.0 / l[g == 1])))
            elif term == "V":
                parts.append(float(int(np.sum(p // l))))
            elif term == "gcd":
                parts.append(float(np.sum(g)))
            elif term == "gcd_inv":
                parts.append(float(np.sum(1.0 / g)))
            elif term == "lcm":
                parts.append(float(np.sum(l.astype(np.float64))))
        return parts

    if term in ("V", "gcd", "lcm"):
        total = 0
        for g, l, p in _chunks(k, x, lo, hi):
            v = p // l if term == "V" else (g if term == "gcd" else l)
            total += int(np.sum(v))
        return total

    D = lcm_upto(x)
    hist_size = (x if term == "gcd_inv" else x**k) + 1
    dense = hist_size <= _DENSE_HIST
    acc = np.zeros(hist_size, dtype=np.int64) if dense else None
    numer = 0
    for g, l, p in _chunks(k, x, lo, hi):
        weights = None
        if term == "S":
            keys = l
        elif term == "U":
            keys = l[g == 1]
        elif term == "T":
            keys, weights = l, g
        else:  # gcd_inv
            keys = g
        # compress the chunk first: a bincount over the full key range per
        # chunk would cost O(x^k) each time
        uniq, inv = np.unique(keys, return_inverse=True)
        counts = np.bincount(inv.ravel(), weights=weights, minlength=uniq.size)
        # counts times gcd stay far below 2^53, so float weights are exact
        counts = np.rint(counts).astype(np.int64)
        if dense:
            acc[uniq] += counts
        else:
            numer += _reduce_pairs(uniq, counts, D)
    if dense:
        nz = np.flatnonzero(acc)
        numer += _reduce_pairs(nz, acc[nz], D)
    return numer


def _reduce_pairs(keys, counts, D):
    if keys.size == 0:
        return 0
    return int(np.sum(counts.astype(object) * (D // keys.astype(object))))


def _partition(x, workers, k):
    """Split 1..x into contiguous ranges aligned with the k=2 row chunks."""
    step = max(1, _CHUNK // x) if k == 2 else 1
    nblocks = -(-x // step)
    workers = max(1, min(workers, nblocks))
    bounds = np.linspace(0, nblocks, workers + 1).round().astype(int)
    out = []
    for a, b in zip(bounds[:-1], bounds[1:]):
        if b > a:
            out.append((a * step + 1, min(x, b * step)))
    return out


def _enumerate(term, k, x, mode, workers=None, budget=None):
    if k < 2:
        raise UsageError("k must be >= 2")
    budget = tuple_budget() if budget is None else budget
    if x**k > budget:
        raise ResourceError(
            f"oracle needs {x}^{k} = {x**k} tuples, budget is {budget} (GLSUMS_BUDGET)"
        )
    workers = default_workers() if workers is None else workers
    ranges = _partition(x, workers, k)
    if len(ranges) == 1:
        parts = [_oracle_slice(term, k, x, mode, *ranges[0])]
    else:
        ctx = multiprocessing.get_context("fork")
        with ProcessPoolExecutor(len(ranges), mp_context=ctx) as pool:
            futs = [pool.submit(_oracle_slice, term, k, x, mode, lo, hi) for lo, hi in ranges]
            parts = [f.result() for f in futs]
    if mode == "float":
        return Numeric.approx(math.fsum(itertools.chain.from_iterable(parts)))
    total = sum(parts)
    if term in ("V", "gcd", "lcm"):
        return Numeric.exact(total)
    return Numeric.exact(Fraction(total, lcm_upto(x)))


def oracle_tuple_sum(kind, k, x, mode="exact", workers=None, budget=None) -> SumResult:
    """Literal k-fold sum over 1..x in every coordinate."""
    if kind not in TUPLE_KINDS:
        raise UsageError(f"oracle kind must be one of {TUPLE_KINDS}")
    check_mode(mode)
    x = int(x)
    if mode == "exact" and kind != "V":
        check_exact_cap(x, "exact oracle")
    t0 = time.perf_counter()
    value = _enumerate(kind, k, x, mode, workers, budget)
    req = SumRequest(kind, k, x, mode, "oracle")
    return SumResult(req, value, "oracle", time.perf_counter() - t0, x**k)


def oracle_term_sum(term, k, x, mode="exact", workers=None, budget=None) -> Numeric:
    """Brute-force sum of gcd, 1/gcd or lcm over the box (cross-check helper)."""
    if term not in _TERMS:
        raise UsageError(f"unknown term {term!r}")
    if mode == "exact" and term in ("S", "T", "U", "gcd_inv"):
        check_exact_cap(x, "exact oracle")
    return _enumerate(term, k, int(x), mode, workers, budget)


# ---------------------------------------------------------------------------
# Single-variable functions
# ---------------------------------------------------------------------------


def _coprime_reciprocal_sum(n):
    L = lcm_upto(n)
    return Fraction(sum(L // m for m in range(1, n + 1) if math.gcd(m, n) == 1), L)


def _mobius_small(n):
    f = factorize(n)
    if any(e > 1 for e in f.values()):
        return 0
    return -1 if len(f) % 2 else 1


def _phi_small(n):
    out = n
    for p in factorize(n):
        out = out // p * (p - 1)
    return out


def _jordan2_small(n):
    out = n * n
    for p in factorize(n):
        out = out // (p * p) * (p * p - 1)
    return out


def _h_identity(n):
    # sum_{d|n} mu(d)/d * H_{n/d}
    L = lcm_upto(n)
    HL = harmonic_scaled(n, L)
    return Fraction(sum(_mobius_small(d) * HL[n // d] // d for d in divisors(n)), L)


def _single_exact_guard(n):
    if n < 1:
        raise UsageError("n must be >= 1")
    if n > SINGLE_EXACT_LIMIT:
        raise ResourceError(f"exact single-variable evaluation is capped at n={SINGLE_EXACT_LIMIT}")


def h_single(n: int, mode: str = "exact") -> Numeric:
    """Sum of 1/m over 1 <= m <= n with gcd(m, n) = 1."""
    check_mode(mode)
    _single_exact_guard(n)
    return Numeric.of(_coprime_reciprocal_sum(n), mode)


SINGLE_FNS = ("G", "Ginv", "L", "Linv", "F")


def single_fn(fn: str, n: int, mode: str = "exact") -> Numeric:
    """G, G^(-1), L, L^(-1) or F at n, by definition and by identity.

    The two evaluations must agree exactly; a mismatch raises
    :class:`ConsistencyError`.
    """
    check_mode(mode)
    _single_exact_guard(n)
    ks = range(1, n + 1)
    if fn == "G":
        direct = sum(math.gcd(k, n) for k in ks)
        ident = sum(d * _phi_small(n // d) for d in divisors(n))
    elif fn == "Ginv":
        direct = sum(Fraction(1, math.gcd(k, n)) for k in ks)
        ident = sum(Fraction(_phi_small(n // d), d) for d in divisors(n))
    elif fn == "L":
        direct = sum(math.lcm(k, n) for k in ks)
        ident = Fraction(n, 2) * (1 + sum(d * _phi_small(d) for d in divisors(n)))
    elif fn == "Linv":
        L = lcm_upto(n)
        direct = Fraction(sum(L // math.lcm(k, n) for k in ks), L)
        ident = Fraction(1, n) * sum(_h_identity(d) for d in divisors(n))
        hd = [(_coprime_reciprocal_sum(d), _h_identity(d)) for d in divisors(n)]
        if any(a != b for a, b in hd):
            raise ConsistencyError(f"h identity failed for a divisor of {n}")
    elif fn == "F":
        # (k,n)/[k,n] = (k,n)^2/(kn); denominators divide n*lcm(1..n)
        L = lcm_upto(n)
        direct = Fraction(sum(math.gcd(k, n) ** 2 * (L // k) for k in ks), n * L)
        HL = harmonic_scaled(n, L)
        ident = Fraction(sum(_jordan2_small(d) * HL[n // d] // d for d in divisors(n)), n * L)
    else:
        raise UsageError(f"unknown function {fn!r}; known: {', '.join(SINGLE_FNS)}")
    if Fraction(direct) != Fraction(ident):
        raise ConsistencyError(f"{fn}({n}): definition {direct} != identity {ident}")
    return Numeric.of(direct, mode)


# ---------------------------------------------------------------------------
# Fast S_2 via h(n) and the divisor-sum sieve
# ---------------------------------------------------------------------------


def _check_fast_range(x, mode, limit, what):
    if x < 1:
        raise UsageError("x must be >= 1")
    if mode == "exact":
        check_exact_cap(x, what)
    elif x > limit:
        raise RangeError(f"{what} supports x <= {limit}, got {x}")


def h_table_float(x: int) -> np.ndarray:
    """[0, h(1), ..., h(x)] with h(n) = sum_{d|n} mu(d)/d H_{n/d}."""
    sv = cached_sieve(x)
    n = np.arange(x + 1, dtype=np.float64)
    n[0] = 1.0
    mu_over_d = sv.mobius[: x + 1] / n
    mu_over_d[0] = 0.0
    return convolve_arrays(mu_over_d, harmonic_table(x))


def linv_table_float(x: int) -> np.ndarray:
    """[0, L^(-1)(1), ..., L^(-1)(x)] via L^(-1)(n) = (1*h)(n) / n."""
    h = h_table_float(x)
    ones = np.ones(x + 1)
    ones[0] = 0.0
    g = convolve_arrays(ones, h)
    n = np.arange(x + 1, dtype=np.float64)
    n[0] = 1.0
    out = g / n
    out[0] = 0.0
    return out


def _exact_tables(x):
    """(D, HD, hD, LinvD): harmonic numbers, h and L^(-1) scaled by D = lcm(1..x).

    Every entry is an exact integer: for squarefree d and d*e <= x,
    d * lcm(1..e) divides D, so (D/d) H_e is integral.
    """
    D = lcm_upto(x)
    HD = harmonic_scaled(x, D)
    sv = cached_sieve(x)
    mu = sv.mobius.tolist()
    hD = [0] * (x + 1)
    for d in range(1, x + 1):
        if mu[d] == 0:
            continue
        for m in range(d, x + 1, d):
            term = HD[m // d] // d
            hD[m] += term if mu[d] > 0 else -term
    gD = [0] * (x + 1)
    for d in range(1, x + 1):
        for m in range(d, x + 1, d):
            gD[m] += hD[d]
    LinvD = [0] * (x + 1)
    for n in range(1, x + 1):
        q, r = divmod(gD[n], n)
        if r:
            raise ConsistencyError(f"L^(-1)({n}) * lcm(1..{x}) is not integral")
        LinvD[n] = q
    return D, HD, hD, LinvD


def fast_S2(x: int, mode: str = "float") -> SumResult:
    """S_2(x) = 2 sum_{n<=x} L^(-1)(n) - H_x in O(x log x)."""
    check_mode(mode)
    x = int(x)
    _check_fast_range(x, mode, FAST_S2_LIMIT, "fast S2")
    t0 = time.perf_counter()
    if mode == "exact":
        D, HD, _, LinvD = _exact_tables(x)
        value = Numeric.exact(Fraction(2 * sum(LinvD) - HD[x], D))
    else:
        linv = linv_table_float(x)
        H = math.fsum((1.0 / np.arange(1, x + 1)).tolist())
        value = Numeric.approx(2.0 * math.fsum(linv[1:].tolist()) - H)
    req = SumRequest("S", 2, x, mode, "fast")
    return SumResult(req, value, "fast", time.perf_counter() - t0, int(x * math.log(x + 1)) + x)


def s2_table(x: int) -> np.ndarray:
    """[S_2(0), S_2(1), ..., S_2(x)] in float from one L^(-1) table."""
    linv = linv_table_float(x)
    inv = np.zeros(x + 1)
    inv[1:] = 1.0 / np.arange(1, x + 1)
    return np.cumsum(2.0 * linv.astype(np.longdouble) - inv).astype(np.float64)


def u2_from_s2(x: int, table: np.ndarray) -> float:
    """U_2(x) = sum_{d<=x} mu(d)/d S_2(x/d), with S_2 read from ``table``."""
    if len(table) <= x:
        raise RangeError("S_2 table too short")
    mu = cached_sieve(x).mobius[1 : x + 1]
    d = np.arange(1, x + 1)
    nz = mu != 0
    return math.fsum((mu[nz] / d[nz] * table[x // d[nz]]).tolist())


# ---------------------------------------------------------------------------
# Fast T_2 and U_2
# ---------------------------------------------------------------------------


def _square_harmonic_sum(weights_scaled, x, D, HD, denom):
    """sum_n w(n) HD[x//n]^2 / denom, grouping n by the value of x//n."""
    total = 0
    n = 1
    while n <= x:
        q = x // n
        top = x // q
        total += HD[q] ** 2 * sum(weights_scaled[n : top + 1])
        n = top + 1
    return Fraction(total, denom)


def fast_T2(x: int, mode: str = "float", exact_cap=None) -> SumResult:
    """T_2(x) = sum_{n<=x} phi_2(n)/n^2 H_{x//n}^2.

    Grouping pairs by g = gcd(m, n) gives T_2(x) = sum_g U_2(x/g), and
    U_2(y) = sum_e mu(e)/e^2 H_{y/e}^2; the Dirichlet product of 1 and
    mu(e)/e^2 is phi_2(n)/n^2.
    """
    check_mode(mode)
    x = int(x)
    if mode == "exact":
        check_exact_cap(x, "exact fast T2", exact_cap)
    elif x > CLASSICAL_LIMIT:
        raise RangeError(f"fast T2 supports x <= {CLASSICAL_LIMIT}")
    t0 = time.perf_counter()
    sv = cached_sieve(x)
    if mode == "exact":
        D = lcm_upto(x)
        HD = harmonic_scaled(x, D)
        j2 = sv.jordan2[: x + 1].tolist()
        w = [0] + [j2[n] * (D // n) ** 2 for n in range(1, x + 1)]
        value = Numeric.exact(_square_harmonic_sum(w, x, D, HD, D**4))
    else:
        n = np.arange(1, x + 1, dtype=np.float64)
        H = harmonic_table(x)
        terms = sv.jordan2[1 : x + 1] / (n * n) * H[x // np.arange(1, x + 1)] ** 2
        value = Numeric.approx(math.fsum(terms.tolist()))
    req = SumRequest("T", 2, x, mode, "fast")
    return SumResult(req, value, "fast", time.perf_counter() - t0, x)


def fast_U2(x: int, mode: str = "float") -> SumResult:
    """U_2(x) = sum_{e<=x} mu(e)/e^2 H_{x//e}^2 (Moebius over the common gcd)."""
    check_mode(mode)
    x = int(x)
    _check_fast_range(x, mode, CLASSICAL_LIMIT, "fast U2")
    t0 = time.perf_counter()
    sv = cached_sieve(x)
    if mode == "exact":
        D = lcm_upto(x)
        HD = harmonic_scaled(x, D)
        mu = sv.mobius[: x + 1].tolist()
        w = [0] + [mu[e] * (D // e) ** 2 for e in range(1, x + 1)]
        value = Numeric.exact(_square_harmonic_sum(w, x, D, HD, D**4))
    else:
        e = np.arange(1, x + 1)
        H = harmonic_table(x)
        terms = sv.mobius[1 : x + 1] / (e * e.astype(np.float64)) * H[x // e] ** 2
        value = Numeric.approx(math.fsum(terms.tolist()))
    req = SumRequest("U", 2, x, mode, "fast")
    return SumResult(req, value, "fast", time.perf_counter() - t0, x)


# ---------------------------------------------------------------------------
# gcd-kind sums: sum f((n_1..n_k)) = sum_d (mu*f)(d) floor(x/d)^k
# ---------------------------------------------------------------------------


def _floor_power_sum(values, x, k, blocks):
    """sum_{d<=x} values[d] * (x//d)^k, exact for int/object input."""
    vals = values[: x + 1]
    kind = vals.dtype.kind
    if not blocks:
        q = x // np.arange(1, x + 1)
        if kind == "f":
            return math.fsum((vals[1:] * q.astype(np.float64) ** k).tolist())
        if kind == "O":
            return sum(v * int(qq) ** k for v, qq in zip(vals[1:], q.tolist()))
        return int_dot(vals[1:], q.astype(object) ** k)
    # O(sqrt x) blocks of constant x//d over prefix sums of values
    total = [] if kind == "f" else 0
    if kind == "f":
        pref = np.concatenate(([0.0], np.cumsum(vals[1:].astype(np.longdouble)))).astype(np.float64)
    else:
        pref = [0]
        for v in vals[1:].tolist() if kind != "O" else vals[1:]:
            pref.append(pref[-1] + v)
    d = 1
    while d <= x:
        q = x // d
        top = x // q
        seg = pref[top] - pref[d - 1]
        if kind == "f":
            total.append(float(seg) * float(q) ** k)
        else:
            total += seg * q**k
        d = top + 1
    return math.fsum(total) if kind == "f" else total


def gcd_kind_sum(mu_f: FunctionTable, k: int, x: int, blocks: bool | None = None) -> SumResult:
    """sum over n_i <= x of f(gcd(n_1..n_k)), given the table of mu*f."""
    x = int(x)
    if x > mu_f.limit:
        raise RangeError(f"x={x} beyond table limit {mu_f.limit}")
    if k < 1:
        raise UsageError("k must be >= 1")
    t0 = time.perf_counter()
    blocks = x > BLOCK_THRESHOLD if blocks is None else blocks
    raw = _floor_power_sum(mu_f.values, x, k, blocks)
    if mu_f.values.dtype.kind == "f":
        value = Numeric.approx(raw)
        mode = "float"
    else:
        value = Numeric.exact(raw)
        mode = "exact"
    req = SumRequest("gcd_power", max(k, 2), x, mode, "fast")
    return SumResult(req, value, "fast", time.perf_counter() - t0, x, {"f": mu_f.name})


def gcd_reciprocal_table(x: int, mode: str) -> FunctionTable:
    """mu * (1/n) up to x, by Moebius inversion of the table of 1/n."""
    if mode == "exact":
        check_exact_cap(x, "exact 1/gcd table")
        vals = np.zeros(x + 1, dtype=object)
        vals[0] = Fraction(0)
        vals[1:] = [Fraction(1, n) for n in range(1, x + 1)]
    else:
        vals = np.zeros(x + 1)
        vals[1:] = 1.0 / np.arange(1, x + 1)
    return mobius_invert(array_table(vals, "1/n"))


def gcd_power_table(x: int) -> FunctionTable:
    """mu * id = phi."""
    return array_table(cached_sieve(x).phi[: x + 1].astype(np.int64), "phi", "sieved")


# ---------------------------------------------------------------------------
# Classical single-variable partial sums and the symmetric-pair identity
# ---------------------------------------------------------------------------


def _tri(n):
    return n * (n + 1) // 2


def classical_partial_sum(fn: str, x: int, mode: str = "float") -> SumResult:
    """sum_{n<=x} of G, G^(-1), L or L^(-1)."""
    check_mode(mode)
    x = int(x)
    if x < 1:
        raise UsageError("x must be >= 1")
    if x > CLASSICAL_LIMIT:
        raise RangeError(f"classical sums support x <= {CLASSICAL_LIMIT}")
    if mode == "exact" and fn in ("Ginv", "Linv"):
        check_exact_cap(x, f"exact sum of {fn}")
    t0 = time.perf_counter()
    sv = cached_sieve(x)
    m = np.arange(1, x + 1, dtype=np.int64)
    q = x // m
    phi = sv.phi[1 : x + 1]
    if fn == "G":
        # G = id * phi, so sum G = sum_m phi(m) T(x//m)
        raw = int_dot(phi, q * (q + 1) // 2)
    elif fn == "L":
        # 2 sum L = T(x) + sum_n n (1 * d phi(d))(n) = T(x) + sum_d d^2 phi(d) T(x//d)
        w = m.astype(object) ** 2 * phi.astype(object)
        twice = _tri(x) + int_dot(w, (q * (q + 1) // 2).astype(object))
        if twice % 2:
            raise ConsistencyError(f"2 * sum L up to {x} came out odd")
        raw = twice // 2
    elif fn == "Ginv":
        # G^(-1) = phi * (1/n): sum = sum_m phi(m) H_{x//m}
        if mode == "exact":
            D = lcm_upto(x)
            HD = harmonic_scaled(x, D)
            raw = Fraction(sum(int(a) * HD[b] for a, b in zip(phi.tolist(), q.tolist())), D)
        else:
            H = harmonic_table(x)
            raw = math.fsum((phi * H[q]).tolist())
    elif fn == "Linv":
        if mode == "exact":
            D, _, _, LinvD = _exact_tables(x)
            raw = Fraction(sum(LinvD), D)
        else:
            raw = math.fsum(linv_table_float(x)[1:].tolist())
    else:
        raise UsageError(f"unknown classical function {fn!r}")
    req = SumRequest("classical_" + fn, 2, x, mode, "fast")
    return SumResult(req, Numeric.of(raw, mode), "fast", time.perf_counter() - t0, x)


def pair_sum_from_triangular(fn_partial: Numeric, diag_partial: Numeric, x: int) -> Numeric:
    """sum_{m,n<=x} psi = 2 sum_{n<=x} sum_{m<=n} psi(m,n) - sum_{n<=x} psi(n,n)."""
    return 2 * fn_partial - diag_partial


def _diag(kind, x, mode):
    if kind in ("pair_gcd", "pair_lcm"):
        return Numeric.of(_tri(x), mode)
    if mode == "exact":
        D = lcm_upto(x)
        return Numeric.exact(Fraction(harmonic_scaled(x, D)[x], D))
    return Numeric.approx(math.fsum((1.0 / np.arange(1, x + 1)).tolist()))


_PAIR_SOURCE = {
    "pair_gcd": "G",
    "pair_lcm": "L",
    "pair_gcd_reciprocal": "Ginv",
    "pair_lcm_reciprocal": "Linv",
}


def pair_sum(kind: str, x: int, mode: str = "float") -> SumResult:
    t0 = time.perf_counter()
    part = classical_partial_sum(_PAIR_SOURCE[kind], x, mode)
    value = pair_sum_from_triangular(part.value, _diag(kind, x, mode), x)
    req = SumRequest(kind, 2, x, mode, "fast")
    return SumResult(req, value, "fast", time.perf_counter() - t0, part.term_count)


# ---------------------------------------------------------------------------
# Dispatcher
# ---------------------------------------------------------------------------

_PAIR_ORACLE_TERM = {"pair_gcd": "gcd", "pair_lcm": "lcm", "pair_gcd_reciprocal": "gcd_inv",
                     "pair_lcm_reciprocal": "S"}
_GCD_ORACLE_TERM = {"gcd_power": "gcd", "gcd_reciprocal": "gcd_inv"}


def _has_fast(req):
    if req.kind in TUPLE_KINDS:
        return req.k == 2
    return True


def compute(req: SumRequest, workers=None) -> SumResult:
    """Evaluate a request with the requested (or automatically chosen) route."""
    algo = req.algorithm
    if algo == "auto":
        algo = "fast" if _has_fast(req) else "oracle"
    if algo == "fast" and not _has_fast(req):
        raise UsageError(f"no fast algorithm for kind {req.kind} with k={req.k}")
    x, k, mode = req.x, req.k, req.mode
    t0 = time.perf_counter()

    if algo == "oracle":
        if req.kind in TUPLE_KINDS:
            res = oracle_tuple_sum(req.kind, k, x, mode, workers)
            res.request = req
            return res
        if req.kind in CLASSICAL_KINDS:
            fn = req.kind.split("_", 1)[1]
            if mode == "exact":
                check_exact_cap(x, "exact classical oracle")
            total = sum((single_fn(fn, n, "exact").value for n in range(1, x + 1)), Fraction(0))
            value = Numeric.of(total, mode)
            count = x * (x + 1) // 2
        else:
            term = _PAIR_ORACLE_TERM.get(req.kind) or _GCD_ORACLE_TERM[req.kind]
            kk = 2 if req.kind in PAIR_KINDS else k
            value = oracle_term_sum(term, kk, x, mode, workers)
            count = x**kk
        return SumResult(req, value, "oracle", time.perf_counter() - t0, count)

    if req.kind == "S":
        res = fast_S2(x, mode)
    elif req.kind == "T":
        res = fast_T2(x, mode)
    elif req.kind == "U":
        res = fast_U2(x, mode)
    elif req.kind == "V":
        res = pair_sum("pair_gcd", x, mode)
    elif req.kind in GCD_KINDS:
        if req.kind == "gcd_power":
            table = gcd_power_table(x)
            res = gcd_kind_sum(table, k, x)
            res = SumResult(req, Numeric.of(res.value.value, mode), "fast", res.elapsed, x)
        else:
            res = gcd_kind_sum(gcd_reciprocal_table(x, mode), k, x)
    elif req.kind in CLASSICAL_KINDS:
        res = classical_partial_sum(req.kind.split("_", 1)[1], x, mode)
    else:
        res = pair_sum(req.kind, x, mode)
    return SumResult(req, res.value, "fast", time.perf_counter() - t0, res.term_count)
