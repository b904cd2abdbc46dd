"""Integer arithmetic, sieves, harmonic numbers and a few constants.

Everything else in the package is built on the tables produced here.  The
sieve stores the smallest prime factor together with the exponent of that
prime, so any multiplicative function can be tabulated in one vectorised
pass (see :func:`glsums.multfun.table_from_spec`).
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache, reduce

import numpy as np

from .errors import ResourceError, UsageError

EXACT_CAP = int(os.environ.get("GLSUMS_EXACT_CAP", 600))

# spf int32, mobius int8, phi int64, tau int16, omega int8, jordan2 int64,
# spf_exp int8, spf_pow int64, plus ~24 bytes of transient block buffers.
SIEVE_BYTES_PER_ENTRY = 34 + 24
SIEVE_MEMORY_CAP = int(os.environ.get("GLSUMS_SIEVE_BYTES", 8 * 2**30))


def gcd_many(values):
    values = list(values)
    if not values:
        raise UsageError("gcd_many needs at least one value")
    if any(v < 1 for v in values):
        raise UsageError("gcd_many takes positive integers")
    return math.gcd(*values)


def lcm_many(values):
    values = list(values)
    if not values:
        raise UsageError("lcm_many needs at least one value")
    if any(v < 1 for v in values):
        raise UsageError("lcm_many takes positive integers")
    return math.lcm(*values)


@lru_cache(maxsize=64)
def lcm_upto(x: int) -> int:
    """lcm(1, 2, ..., x); the common denominator of every exact sum here."""
    return reduce(math.lcm, range(1, x + 1), 1)


def check_exact_cap(x, what="exact mode", cap=None):
    cap = EXACT_CAP if cap is None else cap
    if x > cap:
        raise ResourceError(
            f"{what} refuses x={x}: denominators grow like lcm(1..x); "
            f"cap is {cap} (use float mode or raise GLSUMS_EXACT_CAP)"
        )


def factorize(n: int) -> dict[int, int]:
    """Trial-division factorisation, for the small arguments of the oracles."""
    if n < 1:
        raise UsageError(f"cannot factorize {n}")
    out = {}
    p = 2
    while p * p <= n:
        while n % p == 0:
            out[p] = out.get(p, 0) + 1
            n //= p
        p += 1 if p == 2 else 2
    if n > 1:
        out[n] = out.get(n, 0) + 1
    return out


def divisors(n: int) -> list[int]:
    divs = [1]
    for p, e in factorize(n).items():
        divs = [d * p**j for d in divs for j in range(e + 1)]
    return sorted(divs)


def int_dot(a, b) -> int:
    """Exact integer dot product of two integer arrays.

    Uses int64 when the worst case cannot overflow, Python ints otherwise.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    if a.size == 0:
        return 0
    if a.dtype != object and b.dtype != object:
        bound = int(np.abs(a).max()) * int(np.abs(b).max()) * a.size
        if bound < 2**63:
            return int(np.dot(a.astype(np.int64), b.astype(np.int64)))
    return sum(int(u) * int(v) for u, v in zip(a.tolist(), b.tolist()))


# ---------------------------------------------------------------------------
# Sieve
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SieveTables:
    """Per-integer tables for 0..limit (index 0 is unused).

    ``spf_exp[n]`` and ``spf_pow[n]`` are the exponent and the full power of
    ``spf[n]`` in ``n``; ``n // spf_pow[n]`` is then a smaller index, which is
    what lets multiplicative tables be filled block by block.
    """

    limit: int
    spf: np.ndarray
    mobius: np.ndarray
    phi: np.ndarray
    tau: np.ndarray
    omega: np.ndarray
    jordan2: np.ndarray
    spf_exp: np.ndarray
    spf_pow: np.ndarray

    def primes(self) -> np.ndarray:
        n = np.arange(self.limit + 1)
        return np.flatnonzero((self.spf == n) & (n >= 2))

    def factor(self, n: int) -> dict[int, int]:
        if not 1 <= n <= self.limit:
            from .errors import RangeError

            raise RangeError(f"n={n} outside sieve range 1..{self.limit}")
        out = {}
        while n > 1:
            p = int(self.spf[n])
            e = int(self.spf_exp[n])
            out[p] = e
            n //= int(self.spf_pow[n])
        return out


def _blocks(limit):
    lo = 2
    while lo <= limit:
        hi = min(2 * lo, limit + 1)
        yield lo, hi
        lo = hi


def build_sieve(limit: int) -> SieveTables:
    """Smallest-prime-factor sieve and the multiplicative tables derived from it.

    Eratosthenes fills ``spf``; the remaining tables are filled over the
    blocks [2^j, 2^(j+1)), where every n in a block splits as
    ``spf_pow[n] * rest`` with ``rest`` already computed in an earlier block.
    """
    if limit < 2:
        raise UsageError("sieve limit must be at least 2")
    need = (limit + 1) * SIEVE_BYTES_PER_ENTRY
    if need > SIEVE_MEMORY_CAP:
        raise ResourceError(
            f"sieve to {limit} needs ~{need / 2**30:.1f} GiB "
            f"(cap {SIEVE_MEMORY_CAP / 2**30:.1f} GiB, GLSUMS_SIEVE_BYTES)"
        )
    idx_t = np.int32 if limit < 2**31 else np.int64

    spf = np.zeros(limit + 1, dtype=idx_t)
    for p in range(2, math.isqrt(limit) + 1):
        if spf[p] == 0:
            s = spf[p * p :: p]
            s[s == 0] = p
    primes = np.flatnonzero(spf == 0)
    spf[primes] = primes
    spf[0] = 0
    spf[1] = 1

    mobius = np.ones(limit + 1, dtype=np.int8)
    phi = np.ones(limit + 1, dtype=np.int64)
    jordan2 = np.ones(limit + 1, dtype=np.int64)
    tau = np.ones(limit + 1, dtype=np.int16 if limit < 2**40 else np.int32)
    omega = np.zeros(limit + 1, dtype=np.int8)
    spf_exp = np.zeros(limit + 1, dtype=np.int8)
    spf_pow = np.ones(limit + 1, dtype=np.int64)

    for lo, hi in _blocks(limit):
        n = np.arange(lo, hi, dtype=np.int64)
        p = spf[lo:hi].astype(np.int64)
        m = n // p
        cont = spf[m] == p
        e = np.where(cont, spf_exp[m] + 1, 1).astype(np.int8)
        pe = np.where(cont, spf_pow[m] * p, p)
        rest = n // pe
        spf_exp[lo:hi] = e
        spf_pow[lo:hi] = pe
        mobius[lo:hi] = np.where(e > 1, 0, -mobius[rest])
        phi[lo:hi] = phi[rest] * (pe - pe // p)
        pe2 = pe * pe
        jordan2[lo:hi] = jordan2[rest] * (pe2 - pe2 // (p * p))
        tau[lo:hi] = tau[rest] * (e + 1)
        omega[lo:hi] = omega[rest] + 1

    for a in (mobius, phi, jordan2, tau, omega, spf_exp, spf_pow):
        a[0] = 0
    arrays = dict(
        spf=spf, mobius=mobius, phi=phi, tau=tau, omega=omega,
        jordan2=jordan2, spf_exp=spf_exp, spf_pow=spf_pow,
    )
    for a in arrays.values():
        a.flags.writeable = False
    return SieveTables(limit=limit, **arrays)


@lru_cache(maxsize=4)
def cached_sieve(limit: int) -> SieveTables:
    return build_sieve(max(limit, 2))


def primes_up_to(limit: int) -> np.ndarray:
    if limit < 2:
        return np.zeros(0, dtype=np.int64)
    flags = np.ones(limit + 1, dtype=bool)
    flags[:2] = False
    for p in range(2, math.isqrt(limit) + 1):
        if flags[p]:
            flags[p * p :: p] = False
    return np.flatnonzero(flags)


# ---------------------------------------------------------------------------
# Numeric values and summation
# ---------------------------------------------------------------------------

MODES = ("exact", "float")


def check_mode(mode):
    if mode not in MODES:
        raise UsageError(f"mode must be one of {MODES}, got {mode!r}")


@dataclass(frozen=True)
class Numeric:
    """A value that is either an exact rational or a binary64 float.

    ``lossy`` is set on float values whose last bits are not reproducible
    (e.g. reduced from partials in a worker-count dependent order).
    """

    mode: str
    value: Fraction | float
    lossy: bool = False

    @classmethod
    def exact(cls, value) -> "Numeric":
        return cls("exact", Fraction(value))

    @classmethod
    def approx(cls, value, lossy=False) -> "Numeric":
        return cls("float", float(value), lossy)

    @classmethod
    def of(cls, value, mode) -> "Numeric":
        return cls.exact(value) if mode == "exact" else cls.approx(value)

    def __float__(self):
        return float(self.value)

    @property
    def is_exact(self):
        return self.mode == "exact"

    @property
    def numerator(self):
        return self.value.numerator if self.is_exact else None

    @property
    def denominator(self):
        return self.value.denominator if self.is_exact else None

    def _combine(self, other, op):
        if not isinstance(other, Numeric):
            other = Numeric.exact(other) if isinstance(other, (int, Fraction)) else Numeric.approx(other)
        if self.is_exact and other.is_exact:
            return Numeric.exact(op(self.value, other.value))
        return Numeric.approx(op(float(self.value), float(other.value)), self.lossy or other.lossy)

    def __add__(self, other):
        return self._combine(other, lambda a, b: a + b)

    __radd__ = __add__

    def __sub__(self, other):
        return self._combine(other, lambda a, b: a - b)

    def __rsub__(self, other):
        return self._combine(other, lambda a, b: b - a)

    def __mul__(self, other):
        return self._combine(other, lambda a, b: a * b)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return self._combine(other, lambda a, b: a / b)

    def __eq__(self, other):
        if isinstance(other, Numeric):
            return self.mode == other.mode and self.value == other.value
        return self.value == other

    def __hash__(self):
        return hash((self.mode, self.value))

    def __lt__(self, other):
        return self.value < (other.value if isinstance(other, Numeric) else other)

    def __le__(self, other):
        return self.value <= (other.value if isinstance(other, Numeric) else other)

    def to_text(self):
        if self.is_exact:
            v = self.value
            return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"
        return repr(float(self.value))

    def to_json(self):
        if self.is_exact:
            v = self.value
            return {
                "value": f"{v.numerator}/{v.denominator}",
                "value_num": str(v.numerator),
                "value_den": str(v.denominator),
            }
        return {"value": repr(float(self.value))}


class CompensatedSum:
    """Neumaier's variant of Kahan summation, for streamed float terms."""

    __slots__ = ("total", "comp")

    def __init__(self):
        self.total = 0.0
        self.comp = 0.0

    def add(self, v):
        v = float(v)
        t = self.total + v
        if abs(self.total) >= abs(v):
            self.comp += (self.total - t) + v
        else:
            self.comp += (v - t) + self.total
        self.total = t
        return self

    def __float__(self):
        return self.total + self.comp


def prefix_sums(values) -> np.ndarray:
    """Float prefix sums accumulated in extended precision."""
    out = np.cumsum(np.asarray(values, dtype=np.longdouble))
    return out.astype(np.float64)


# ---------------------------------------------------------------------------
# Harmonic numbers
# ---------------------------------------------------------------------------


def harmonic(m: int, mode: str = "float", cap=None) -> Numeric:
    check_mode(mode)
    if m < 1:
        raise UsageError("harmonic(m) needs m >= 1")
    if mode == "exact":
        check_exact_cap(m, "exact harmonic number", cap)
        L = lcm_upto(m)
        return Numeric.exact(Fraction(sum(L // j for j in range(1, m + 1)), L))
    return Numeric.approx(math.fsum((1.0 / np.arange(1, m + 1, dtype=np.float64)).tolist()))


def harmonic_table(m: int) -> np.ndarray:
    """H_0..H_m as floats (H_0 = 0)."""
    inv = np.zeros(m + 1)
    inv[1:] = 1.0 / np.arange(1, m + 1, dtype=np.float64)
    return prefix_sums(inv)


def harmonic_scaled(m: int, L: int) -> list[int]:
    """[H_0*L, ..., H_m*L] as exact integers; L must be a multiple of lcm(1..m)."""
    out = [0]
    acc = 0
    for j in range(1, m + 1):
        acc += L // j
        out.append(acc)
    return out


# ---------------------------------------------------------------------------
# Constants
# ---------------------------------------------------------------------------

_B2J = (Fraction(1, 6), Fraction(-1, 30), Fraction(1, 42), Fraction(-1, 30))
_EM_CUTOFF = 10**5


def zeta(s: float, cutoff: int = 10**4) -> float:
    """Riemann zeta for real s > 1: direct sum plus Euler-Maclaurin tail."""
    if s <= 1:
        raise UsageError("zeta(s) needs s > 1")
    if s == 2:
        return math.pi**2 / 6
    if s == 4:
        return math.pi**4 / 90
    n = np.arange(1, cutoff, dtype=np.float64)
    head = math.fsum((n ** (-s)).tolist())
    N = float(cutoff)
    tail = [N ** (1 - s) / (s - 1), 0.5 * N ** (-s)]
    rising = s  # s(s+1)...(s+2j-2)
    for j, b in enumerate(_B2J, start=1):
        if j > 1:
            rising *= (s + 2 * j - 3) * (s + 2 * j - 2)
        tail.append(float(b) / math.factorial(2 * j) * rising * N ** (-s - 2 * j + 1))
    return math.fsum([head] + tail)


def _zetaprime2() -> float:
    # -sum log(n)/n^2, tail by Euler-Maclaurin on f(t) = log(t)/t^2 with four
    # Bernoulli corrections; f^(2j-1)(t) * t^(2j+1) = a_j - b_j log t.
    N = _EM_CUTOFF
    n = np.arange(2, N, dtype=np.float64)
    head = math.fsum((np.log(n) / (n * n)).tolist())
    lg = math.log(N)
    odd_derivs = ((1, 2), (26, 24), (1044, 720), (69264, 40320))
    tail = [(1 + lg) / N, 0.5 * lg / N**2]
    for j, (b, (a_, b_)) in enumerate(zip(_B2J, odd_derivs), start=1):
        d = (a_ - b_ * lg) / N ** (2 * j + 1)
        tail.append(-float(b) / math.factorial(2 * j) * d)
    return -math.fsum([head] + tail)


def _euler_gamma() -> float:
    # H_N - log N - 1/(2N) + 1/(12N^2) - 1/(120N^4) + 1/(252N^6)
    N = 10**4
    H = float(harmonic(N))
    return math.fsum([H, -math.log(N), -1 / (2 * N), 1 / (12 * N**2), -1 / (120 * N**4), 1 / (252 * N**6)])


CONSTANT_NAMES = ("zeta2", "zeta3", "zeta4", "gamma", "zetaprime2")


@lru_cache(maxsize=None)
def constant(name: str) -> float:
    """binary64 value of a named constant, good to at least 12 digits."""
    if name == "zeta2":
        return math.pi**2 / 6
    if name == "zeta3":
        return zeta(3)
    if name == "zeta4":
        return math.pi**4 / 90
    if name == "gamma":
        return _euler_gamma()
    if name == "zetaprime2":
        return _zetaprime2()
    raise UsageError(f"unknown constant {name!r}; known: {', '.join(CONSTANT_NAMES)}")
