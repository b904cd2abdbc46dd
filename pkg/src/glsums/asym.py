"""Main terms, Euler products, the constants beta_k, bound checks and fits."""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np
from scipy.special import exp1

from .errors import (
    ConvergenceError,
    DependencyError,
    FitError,
    RangeError,
    ResourceError,
    UsageError,
    VerificationError,
)
from .multfun import FunctionTable, MultiplicativeSpec, a_k, b_k, table_from_spec
from .numkit import (
    Numeric,
    cached_sieve,
    check_exact_cap,
    check_mode,
    constant,
    harmonic_table,
    lcm_upto,
    primes_up_to,
    zeta,
)
from .tuple_sums import oracle_tuple_sum, tuple_budget

# ---------------------------------------------------------------------------
# Main terms
# ---------------------------------------------------------------------------

FORMULAS = (
    "G_asymp",
    "G_minus_1",
    "asympt_L",
    "gcd_m_n",
    "gcd_recipr_m_n",
    "lcm_m_n",
    "lcm_recipr_m_n",
    "U_2",
    "V_2",
    "T_k_main",
    "gcd_recipr_k",
)


@dataclass(frozen=True)
class MainTermSpec:
    formula: str
    k: int | None = None
    beta: float | None = None

    def __post_init__(self):
        if self.formula not in FORMULAS:
            raise UsageError(f"unknown formula {self.formula!r}; known: {', '.join(FORMULAS)}")


def main_term(spec: MainTermSpec, x: float) -> float:
    """Closed-form leading behaviour, without any error term."""
    if x < 2:
        raise UsageError("main terms are evaluated for x >= 2")
    z2, z3 = constant("zeta2"), constant("zeta3")
    g, dz2 = constant("gamma"), constant("zetaprime2")
    lx = math.log(x)
    f = spec.formula
    if f == "G_asymp":
        return x * x / (2 * z2) * (lx + 2 * g - 0.5 - dz2 / z2)
    if f == "G_minus_1":
        return z3 / (2 * z2) * x * x
    if f == "asympt_L":
        return z3 / (8 * z2) * x**4
    if f == "gcd_m_n":
        return x * x / z2 * (lx + 2 * g - 0.5 - z2 / 2 - dz2 / z2)
    if f == "gcd_recipr_m_n":
        return z3 / z2 * x * x
    if f == "lcm_m_n":
        return z3 / (4 * z2) * x**4
    if f == "lcm_recipr_m_n":
        return 2 / math.pi**2 * lx**3
    if f == "U_2":
        return 6 / math.pi**2 * lx**2
    if f == "V_2":
        return 6 / math.pi**2 * x * x * lx
    k = spec.k
    if k is None or k < 2:
        raise UsageError(f"{f} needs an arity k >= 2")
    if f == "T_k_main":
        beta = spec.beta
        if beta is None:
            if k != 2:
                raise DependencyError(f"T_k main term for k={k} needs a computed beta_k")
            beta = 3.0
        return beta * x
    # gcd_recipr_k
    return zeta(k + 1) / zeta(k) * x**k


# ---------------------------------------------------------------------------
# Euler products
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EulerProductResult:
    value: float
    prime_limit: int
    tail_estimate: float
    log_value: float = 0.0

    def to_json(self):
        return {
            "value": format(self.value, ".17g"),
            "prime_limit": self.prime_limit,
            "tail_estimate": format(self.tail_estimate, ".17g"),
        }


_REL_CUTOFF = 1e-18


def _check_Cf_spec(spec, K):
    for p in primes_up_to(100).tolist():
        if spec.at_prime_power(p, 1) != K:
            raise UsageError(f"{spec.name}: f(p) = {spec.at_prime_power(p, 1)} at p={p}, expected {K}")
    # polynomial growth in nu: f(2^nu) stays below (nu+1)^64
    for nu in range(2, 61):
        v = abs(spec.at_prime_power(2, nu))
        if v and math.log(v) > 64 * math.log(nu + 1):
            raise ConvergenceError(f"{spec.name}: f(2^{nu}) grows faster than any fixed power of nu")


def euler_product_Cf(spec: MultiplicativeSpec, K: int, prime_limit: int = 10**6) -> EulerProductResult:
    """prod_{p<=P} (1-1/p)^K sum_nu f(p^nu)/p^nu, summed in log space.

    The tail estimate uses log(local factor) = c2/p^2 + O(p^-3) with
    c2 = f(p^2) - K(K+1)/2 and sum_{p>P} p^-2 ~ 1/(P log P).  It is a
    heuristic, not a certified bound.
    """
    if prime_limit < 2:
        raise UsageError("prime limit must be >= 2")
    _check_Cf_spec(spec, K)
    primes = primes_up_to(prime_limit).astype(np.float64)
    inv = 1.0 / primes
    series = np.zeros_like(primes)
    power = np.ones_like(primes)
    nu = 0
    while True:
        nu += 1
        if nu > 400:
            raise ConvergenceError(f"{spec.name}: prime-power series did not converge")
        power = power * inv
        if spec.vectorized:
            fv = np.asarray(spec.rule(primes.astype(np.int64), np.int64(nu)), dtype=np.float64)
        else:
            fv = np.array([spec.at_prime_power(int(p), nu) for p in primes], dtype=np.float64)
        term = fv * power
        series += term
        if np.all(np.abs(term) <= _REL_CUTOFF * (1.0 + np.abs(series))):
            break
    logs = K * np.log1p(-inv) + np.log1p(series)
    log_value = math.fsum(logs.tolist())
    c2 = spec.at_prime_power(2, 2) - K * (K + 1) / 2
    P = float(prime_limit)
    tail = abs(c2) / (P * math.log(P)) + K**3 / (P * P * math.log(P))
    return EulerProductResult(math.exp(log_value), prime_limit, tail, log_value)


@lru_cache(maxsize=16)
def _exponent_counts(k, rmax):
    """counts[r, s] = #{nu in [0,r]^k : max nu = r, min nu = 0, sum nu = s}.

    Found by enumerating the exponent tuples once; the local factor at p is
    then sum_{r,s} counts[r,s] p^-(r + eps*s) for any eps.
    """
    counts = np.zeros((rmax + 1, k * rmax + 1), dtype=np.float64)
    grid = np.indices((rmax + 1,) * k).reshape(k, -1)
    mx = grid.max(axis=0)
    keep = grid.min(axis=0) == 0
    s = grid.sum(axis=0)
    np.add.at(counts, (mx[keep], s[keep]), 1.0)
    return counts


def _H_rmax(k):
    # 41^k exponent tuples; k=4 is ~2.8M, k=5 would be ~116M
    return {2: 40, 3: 40, 4: 40}.get(k, 12)


def euler_product_H(k: int, epsilon: float, prime_limit: int = 10**4) -> EulerProductResult:
    """Truncated Euler product of H(eps, ..., eps) for the k-variable h.

    The tail estimate is for log H: it integrates the first-order log
    factor sum_j C(k,j) p^-(1 + j eps) over p > P against the prime
    density, giving sum_j C(k,j) E1(j eps log P).  The full product is
    about value * exp(tail_estimate).
    """
    if not 0 < epsilon <= 1:
        raise UsageError("epsilon must lie in (0, 1]")
    if prime_limit < 10**3:
        raise UsageError("prime limit must be at least 1000")
    if k < 2 or k > 5:
        raise UsageError("H is tabulated for 2 <= k <= 5")
    rmax = _H_rmax(k)
    counts = _exponent_counts(k, rmax)
    primes = primes_up_to(prime_limit).astype(np.float64)
    lp = np.log(primes)[:, None]
    s = np.arange(counts.shape[1])[None, :]
    ys = np.exp(-epsilon * s * lp)  # p^(-eps s)
    by_r = ys @ counts.T  # [prime, r]
    r = np.arange(rmax + 1)[None, :]
    terms = np.exp(-r * lp) * by_r
    terms[terms < _REL_CUTOFF] = 0.0
    local = terms[:, 1:].sum(axis=1)
    if not np.all(np.isfinite(local)):
        raise ConvergenceError("local factor of H did not converge")
    log_value = math.fsum(np.log1p(local).tolist())
    lP = math.log(prime_limit)
    tail = math.fsum(math.comb(k, j) * float(exp1(j * epsilon * lP)) for j in range(1, k))
    return EulerProductResult(math.exp(log_value), prime_limit, tail, log_value)


# ---------------------------------------------------------------------------
# Sums of f(n)/n and the sandwich bounds
# ---------------------------------------------------------------------------


def partial_sum_over_n(f: FunctionTable, x: int, mode: str = "float") -> Numeric:
    """sum_{n<=x} f(n)/n."""
    check_mode(mode)
    x = int(x)
    if x > f.limit:
        raise RangeError(f"x={x} beyond table limit {f.limit}")
    if x < 1:
        return Numeric.of(0, mode)
    vals = f.values[1 : x + 1]
    if mode == "exact":
        D = lcm_upto(x)
        if vals.dtype == object:
            return Numeric.exact(sum(Fraction(v) / n for n, v in enumerate(vals, start=1)))
        return Numeric.exact(Fraction(sum(int(v) * (D // n) for n, v in enumerate(vals.tolist(), start=1)), D))
    terms = vals.astype(np.float64) / np.arange(1, x + 1)
    return Numeric.approx(math.fsum(terms.tolist()))


def _float_sum_lower_bound(f: FunctionTable, n_max: int) -> Fraction:
    """A rational that is provably <= sum_{n<=n_max} f(n)/n for f >= 0.

    Each term f(n)/n is one correctly rounded division (f(n) < 2^53 is
    exact), so it is within a factor (1 +- u) of the truth; math.fsum then
    rounds the exact sum of the rounded terms once more.  Shrinking by
    (1 - 3u) covers both.
    """
    vals = f.values[1 : n_max + 1]
    if vals.dtype == object or np.any(vals < 0) or np.any(vals >= 2**53):
        raise UsageError("float lower bound needs 0 <= f(n) < 2^53")
    s = math.fsum((vals.astype(np.float64) / np.arange(1, n_max + 1)).tolist())
    u = Fraction(1, 2**53)
    return Fraction(s) * (1 - 3 * u)


@dataclass
class SandwichReport:
    kind: str
    k: int
    x: int
    lower: Fraction
    value: Fraction
    upper: Fraction
    passed: bool
    upper_is_bound: bool = False

    def to_json(self):
        return {
            "kind": self.kind, "k": self.k, "x": self.x,
            "lower": str(self.lower), "value": str(self.value),
            "upper": str(self.upper) if not self.upper_is_bound else format(float(self.upper), ".17g"),
            "upper_rigorous_lower_estimate": self.upper_is_bound,
            "pass": self.passed,
        }


SANDWICH_EXACT_UPPER = 10**4


def sandwich_check(kind: str, k: int, x: int, workers=None) -> SandwichReport:
    """lower = sum_{n<=x} c(n)/n <= value <= sum_{n<=x^k} c(n)/n, c = a_k or b_k.

    ``lower`` and ``value`` are exact rationals.  When x^k is beyond the
    exact range the upper sum is replaced by a rational that provably lies
    below it, so a pass is still a proof of the inequality.
    """
    if kind not in ("S", "U"):
        raise UsageError("sandwich kind must be S or U")
    x = int(x)
    top = x**k
    if top > tuple_budget():
        raise ResourceError(f"sandwich needs {top} tuples and a table to {top}; budget {tuple_budget()}")
    spec = a_k(k) if kind == "S" else b_k(k)
    table = table_from_spec(spec, max(top, 2), cached_sieve(max(top, 2)))
    lower = partial_sum_over_n(table, x, "exact").value
    value = oracle_tuple_sum(kind, k, x, "exact", workers).value.value
    if top <= SANDWICH_EXACT_UPPER:
        upper = partial_sum_over_n(table, top, "exact").value
        rigorous = False
    else:
        upper = _float_sum_lower_bound(table, top)
        rigorous = True
    ok = lower <= value <= upper
    return SandwichReport(kind, k, x, lower, value, upper, ok, rigorous)


# ---------------------------------------------------------------------------
# Relations between S, U and T
# ---------------------------------------------------------------------------

RELATIONS = ("S_from_U", "U_from_S", "T_from_U", "U_from_T")


@lru_cache(maxsize=4096)
def _oracle_exact(kind, k, x):
    if x < 1:
        return Fraction(0)
    return oracle_tuple_sum(kind, k, x, "exact", workers=1).value.value


@dataclass
class RelationReport:
    relation: str
    k: int
    x: int
    lhs: Fraction
    rhs: Fraction
    passed: bool

    def to_json(self):
        return {"relation": self.relation, "k": self.k, "x": self.x,
                "lhs": str(self.lhs), "rhs": str(self.rhs), "pass": self.passed}


def relation_check(relation: str, k: int, x: int) -> RelationReport:
    """Check one grouping identity exactly; raise VerificationError if it fails."""
    if relation not in RELATIONS:
        raise UsageError(f"unknown relation {relation!r}; known: {', '.join(RELATIONS)}")
    x = int(x)
    if x < 1:
        raise UsageError("x must be >= 1")
    check_exact_cap(x, "relation check")
    mu = cached_sieve(max(x, 2)).mobius.tolist()
    ds = range(1, x + 1)
    if relation == "S_from_U":
        lhs = _oracle_exact("S", k, x)
        rhs = sum((Fraction(1, d) * _oracle_exact("U", k, x // d) for d in ds), Fraction(0))
    elif relation == "U_from_S":
        lhs = _oracle_exact("U", k, x)
        rhs = sum((Fraction(mu[d], d) * _oracle_exact("S", k, x // d) for d in ds if mu[d]), Fraction(0))
    elif relation == "T_from_U":
        lhs = _oracle_exact("T", k, x)
        rhs = sum((_oracle_exact("U", k, x // d) for d in ds), Fraction(0))
    else:
        lhs = _oracle_exact("U", k, x)
        rhs = sum((mu[d] * _oracle_exact("T", k, x // d) for d in ds if mu[d]), Fraction(0))
    report = RelationReport(relation, k, x, lhs, rhs, lhs == rhs)
    if not report.passed:
        raise VerificationError(f"{relation} failed at k={k}, x={x}: {lhs} != {rhs}", lhs, rhs)
    return report


def v_bounds_check(k: int, x: int, workers=None) -> dict:
    """floor(x)^k <= V_k(x) <= x^k U_k(x), both sides exact."""
    x = int(x)
    V = oracle_tuple_sum("V", k, x, "exact", workers).value.value
    U = oracle_tuple_sum("U", k, x, "exact", workers).value.value
    lower = Fraction(x**k)
    upper = x**k * U
    return {"k": k, "x": x, "lower": lower, "value": V, "upper": upper,
            "pass": lower <= V <= upper}


# ---------------------------------------------------------------------------
# beta_k
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BetaResult:
    k: int
    truncation: int
    value: float
    tail_estimate: float
    epsilon: float
    H_value: float
    H_prime_limit: int

    def to_json(self):
        return {
            "name": "beta", "k": self.k, "truncation": self.truncation,
            "value": format(self.value, ".17g"),
            "tail_estimate": format(self.tail_estimate, ".17g"),
            "epsilon": format(self.epsilon, ".17g"),
        }


def _sorted_tuple_weights(prefix, a, b, k):
    """Multinomial multiplicity of the sorted tuple prefix + (a, b) (a >= b)."""
    counts = {}
    for v in prefix:
        counts[v] = counts.get(v, 0) + 1
    last = prefix[-1] if prefix else None
    run = counts.get(last, 0)
    fixed = math.prod(math.factorial(c) for v, c in counts.items() if v != last)
    joins = a == last if last is not None else np.zeros(a.shape, dtype=bool)
    eq = a == b
    last_run = run + joins + (joins & eq)
    ab = np.where(~joins & eq, 2, 1)
    fact = np.array([math.factorial(i) for i in range(k + 1)], dtype=np.float64)
    return math.factorial(k) / (fixed * fact[last_run] * ab)


def beta_series(k: int, N: int) -> float:
    """sum over coprime k-tuples with max <= N of 1/(lcm * max), symmetry-reduced."""
    if k < 2:
        raise UsageError("k must be >= 2")
    parts = []
    n = np.arange(1, N + 1, dtype=np.int64)
    for prefix in _descending_prefixes(k - 2, N):
        if prefix:
            top = prefix[-1]
            g0, l0, mx = math.gcd(*prefix), math.lcm(*prefix), prefix[0]
            A, B = np.meshgrid(n[:top], n[:top], indexing="ij")
            mask = B <= A
            A, B = A[mask], B[mask]
            keep = np.gcd(np.gcd(A, B), g0) == 1
            A, B = A[keep], B[keep]
            l = np.lcm(np.lcm(A, B), l0)
            w = _sorted_tuple_weights(prefix, A, B, k)
            parts.append(math.fsum((w / (l.astype(np.float64) * mx)).tolist()))
        else:
            for a in range(1, N + 1):
                B = n[:a]
                g = np.gcd(a, B)
                l = a * B // g
                w = np.where(B == a, 1.0, 2.0) * (g == 1)
                parts.append(float(np.sum(w / (l.astype(np.float64) * a))))
    return math.fsum(parts)


def _descending_prefixes(length, N):
    if length == 0:
        yield ()
        return
    for combo in itertools.combinations_with_replacement(range(N, 0, -1), length):
        yield combo


def beta_series_naive(k: int, N: int) -> float:
    """Unreduced loop over all N^k tuples; reference for the reduced sum."""
    total = []
    for t in itertools.product(range(1, N + 1), repeat=k):
        if math.gcd(*t) == 1:
            total.append(1.0 / (math.lcm(*t) * max(t)))
    return math.fsum(total)


def beta_k(k: int, N: int, epsilon: float | None = None, tolerance: float | None = None,
           prime_limit: int = 10**6) -> BetaResult:
    """Truncated beta_k with the tail bound k N^(eps-1) H(eps/k, ..., eps/k).

    Coprime tuples are enumerated directly.  Dividing the unrestricted sum
    by zeta(2) is exact only for the infinite series; on a truncated one it
    adds a second truncation error of the same order.  A tail estimate above
    ``tolerance`` only warns.
    """
    if k not in (2, 3, 4):
        raise UsageError("beta_k supports k in {2, 3, 4}")
    if N < 2:
        raise UsageError("truncation must be >= 2")
    cost = math.comb(N + k - 1, k)
    if cost > tuple_budget():
        raise ResourceError(f"beta_{k} at N={N} needs {cost} sorted tuples, budget {tuple_budget()}")
    eps = 1.0 / math.log(N) if epsilon is None else float(epsilon)
    value = beta_series(k, N)
    H = euler_product_H(k, eps / k, prime_limit)
    # H from primes <= P undercounts; scale up by the estimated missing factor
    tail = k * N ** (eps - 1) * H.value * math.exp(H.tail_estimate)
    if tolerance is not None and tail > tolerance:
        warnings.warn(f"beta_{k}: tail estimate {tail:.3g} exceeds tolerance {tolerance:g}", stacklevel=2)
    return BetaResult(k, N, value, tail, eps, H.value, prime_limit)


# ---------------------------------------------------------------------------
# Euler's sum
# ---------------------------------------------------------------------------


def euler_sum_check(N: int) -> dict:
    """sum_{n<=N} H_n/n^2 and its distance from 2 zeta(3)."""
    if N < 1:
        raise UsageError("N must be >= 1")
    H = harmonic_table(N)
    n = np.arange(1, N + 1, dtype=np.float64)
    value = math.fsum((H[1:] / (n * n)).tolist())
    return {"N": N, "value": value, "error_vs_2zeta3": value - 2 * constant("zeta3")}


# ---------------------------------------------------------------------------
# Least-squares fits in log x
# ---------------------------------------------------------------------------

CONDITION_LIMIT = 1e10


@dataclass
class FitReport:
    degree: int
    coefficients: list[float]
    residuals: list[float]
    condition: float
    xs: list[float] = field(default_factory=list)
    values: list[float] = field(default_factory=list)

    @property
    def leading(self) -> float:
        return self.coefficients[-1]

    def evaluate(self, x) -> float:
        t = math.log(x)
        return math.fsum(c * t**j for j, c in enumerate(self.coefficients))

    def to_json(self):
        g = lambda v: format(v, ".17g")  # noqa: E731
        return {
            "degree": self.degree,
            "coefficients": [g(c) for c in self.coefficients],
            "leading_coefficient": g(self.leading),
            "residuals": [g(r) for r in self.residuals],
            "condition": g(self.condition),
            "x": [g(v) for v in self.xs],
        }


def fit_log_polynomial(samples, degree: int) -> FitReport:
    """Least squares value(x) ~ sum_j c_j (log x)^j.

    log x is mapped affinely onto [-1, 1] and the Vandermonde matrix in that
    variable is solved by Householder QR, so the normal equations are never
    formed.  The coefficients are then re-expanded in powers of log x.
    The reported condition is cond(R)^2, i.e. that of the normal equations
    the QR solve replaces.
    """
    samples = sorted((float(x), float(v)) for x, v in samples)
    if degree < 0:
        raise UsageError("degree must be >= 0")
    if len(samples) < degree + 2:
        raise UsageError(f"degree {degree} fit needs at least {degree + 2} samples, got {len(samples)}")
    xs = np.array([s[0] for s in samples])
    vs = np.array([s[1] for s in samples])
    if np.any(xs <= 1):
        raise UsageError("fit samples need x > 1")
    t = np.log(xs)
    if math.log(xs[-1] / xs[0]) < 3 and degree > 0:
        raise UsageError("sample x values must span a log-range of at least 3")
    mid = (t[0] + t[-1]) / 2
    half = (t[-1] - t[0]) / 2 if degree > 0 else 1.0
    u = (t - mid) / half
    A = np.vander(u, degree + 1, increasing=True)
    Q, R = np.linalg.qr(A)
    cond = float(np.linalg.cond(R)) ** 2
    if not np.isfinite(cond) or cond > CONDITION_LIMIT:
        raise FitError(f"fit is ill-conditioned: cond = {cond:.3g} > {CONDITION_LIMIT:g}")
    cu = np.linalg.solve(R, Q.T @ vs)
    # sum_j cu_j ((t - mid)/half)^j  ->  sum_i c_i t^i
    coeffs = [0.0] * (degree + 1)
    for j, cj in enumerate(cu):
        scale = cj / half**j
        for i in range(j + 1):
            coeffs[i] += scale * math.comb(j, i) * (-mid) ** (j - i)
    fitted = A @ cu
    residuals = (vs - fitted).tolist()
    return FitReport(degree, coeffs, residuals, cond, xs.tolist(), vs.tolist())


def geometric_grid(x0: float, x1: float, points: int) -> list[int]:
    if points < 2 or x0 < 2 or x1 <= x0:
        raise UsageError("geometric grid needs points >= 2 and 2 <= x0 < x1")
    raw = np.geomspace(x0, x1, points)
    out = sorted({int(round(v)) for v in raw})
    if len(out) < points:
        raise UsageError("grid collapses to fewer distinct integers than requested")
    return out
