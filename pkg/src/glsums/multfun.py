"""Multiplicative functions, Dirichlet convolution and Moebius inversion.

Tables are numpy arrays indexed 0..N with index 0 unused.  Integer tables
are int64 while that cannot overflow and object arrays of Python ints
otherwise; float tables are float64; exact rational tables are object
arrays of :class:`fractions.Fraction`.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import numpy as np

from .errors import RangeError, UsageError
from .numkit import SieveTables, _blocks, cached_sieve

INT64_MAX = 2**63 - 1


@dataclass(frozen=True)
class MultiplicativeSpec:
    """A multiplicative function given by its values on prime powers.

    ``rule(p, nu)`` must accept either Python ints or numpy integer arrays
    for both arguments unless ``vectorized`` is False.
    """

    name: str
    rule: Callable
    vectorized: bool = True

    def at_prime_power(self, p: int, nu: int) -> int:
        if nu == 0:
            return 1
        return int(self.rule(p, nu))


def a_k(k: int) -> MultiplicativeSpec:
    """Number of k-tuples with lcm n: a_k(p^nu) = (nu+1)^k - nu^k."""
    _check_arity(k)
    return MultiplicativeSpec(f"a{k}", lambda p, nu: (nu + 1) ** k - nu**k)


def b_k(k: int) -> MultiplicativeSpec:
    """Number of k-tuples with lcm n and gcd 1."""
    _check_arity(k)
    return MultiplicativeSpec(f"b{k}", lambda p, nu: (nu + 1) ** k - 2 * nu**k + (nu - 1) ** k)


def tau_power(k: int) -> MultiplicativeSpec:
    _check_arity(k, lo=1)
    return MultiplicativeSpec(f"tau^{k}", lambda p, nu: (nu + 1) ** k)


PHI = MultiplicativeSpec("phi", lambda p, nu: p**nu - p ** (nu - 1))
JORDAN2 = MultiplicativeSpec("jordan2", lambda p, nu: p ** (2 * nu) - p ** (2 * nu - 2))
ONE = MultiplicativeSpec("one", lambda p, nu: 1 + 0 * nu)
MU = MultiplicativeSpec("mu", lambda p, nu: (nu == 1) * -1 + 0 * p)
IDENTITY = MultiplicativeSpec("id", lambda p, nu: p**nu)


def _check_arity(k, lo=2):
    if not isinstance(k, (int, np.integer)) or k < lo:
        raise UsageError(f"arity must be an integer >= {lo}, got {k!r}")


def parse_spec(text: str) -> MultiplicativeSpec:
    """'ak:3', 'bk:2', 'tauk:2', 'phi', 'jordan2', 'one', 'mu', 'id'."""
    named = {"phi": PHI, "jordan2": JORDAN2, "one": ONE, "mu": MU, "id": IDENTITY}
    if text in named:
        return named[text]
    head, _, arg = text.partition(":")
    makers = {"ak": a_k, "bk": b_k, "tauk": tau_power}
    if head in makers and arg.isdigit():
        return makers[head](int(arg))
    raise UsageError(f"unknown function spec {text!r}")


@dataclass(frozen=True, eq=False)
class FunctionTable:
    """Values f(1..limit) with provenance 'sieved', 'convolved', 'inverted' or 'given'."""

    limit: int
    values: np.ndarray
    provenance: str = "given"
    name: str = ""

    def __getitem__(self, n):
        return self.values[n]

    def __len__(self):
        return self.limit

    def tolist(self):
        """[f(1), ..., f(limit)] as Python scalars."""
        vals = self.values[1:]
        if vals.dtype == object:
            return list(vals)
        return vals.tolist()

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "value"])
        for n, v in enumerate(self.tolist(), start=1):
            w.writerow([n, _scalar_text(v)])
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps([_scalar_json(v) for v in self.tolist()])


def _scalar_text(v):
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, float):
        return repr(v)
    return str(int(v))


def _scalar_json(v):
    if isinstance(v, Fraction):
        return str(v) if v.denominator != 1 else v.numerator
    return v


def given_table(values, name="") -> FunctionTable:
    """Wrap f(1..N) (a sequence without the index-0 slot) as a table."""
    vals = list(values)
    if vals and all(isinstance(v, (int, np.integer)) for v in vals):
        arr = np.zeros(len(vals) + 1, dtype=object)
        arr[1:] = [int(v) for v in vals]
        if all(abs(v) < 2**62 for v in arr[1:]):
            arr = arr.astype(np.int64)
    elif vals and all(isinstance(v, (float, np.floating)) for v in vals):
        arr = np.zeros(len(vals) + 1)
        arr[1:] = vals
    else:
        arr = np.zeros(len(vals) + 1, dtype=object)
        arr[1:] = [Fraction(v) for v in vals]
    return FunctionTable(len(vals), arr, "given", name)


def array_table(arr, name="", provenance="given") -> FunctionTable:
    """Wrap an array already laid out as [unused, f(1), ..., f(N)]."""
    arr = np.asarray(arr)
    return FunctionTable(len(arr) - 1, arr, provenance, name)


def eval_multiplicative(spec: MultiplicativeSpec, n: int, sieve: SieveTables) -> int:
    if n < 1 or n > sieve.limit:
        raise RangeError(f"n={n} outside sieve range 1..{sieve.limit}")
    out = 1
    for p, nu in sieve.factor(n).items():
        out *= spec.at_prime_power(p, nu)
    return out


def table_from_spec(spec: MultiplicativeSpec, limit: int, sieve: SieveTables | None = None) -> FunctionTable:
    """Tabulate a multiplicative function on 1..limit in a single sieve pass."""
    if sieve is None:
        sieve = cached_sieve(limit)
    if limit > sieve.limit:
        raise RangeError(f"table limit {limit} exceeds sieve limit {sieve.limit}")
    if limit < 1:
        raise UsageError("table limit must be positive")
    # Float pass first: while every |f(n)| < 2^53 the float products are
    # exact (each nonzero factor has modulus >= 1), so the table converts to
    # int64 losslessly.  Otherwise redo the pass with Python ints.
    values = _sieve_pass(spec, limit, sieve, np.float64)
    if np.all(np.abs(values) < 2.0**53):
        return FunctionTable(limit, values.astype(np.int64), "sieved", spec.name)
    values = _sieve_pass(spec, limit, sieve, object)
    return FunctionTable(limit, values, "sieved", spec.name)


def _sieve_pass(spec, limit, sieve, dtype):
    values = np.ones(limit + 1, dtype=dtype)
    values[0] = 0
    for lo, hi in _blocks(limit):
        p = sieve.spf[lo:hi].astype(np.int64)
        e = sieve.spf_exp[lo:hi].astype(np.int64)
        rest = np.arange(lo, hi, dtype=np.int64) // sieve.spf_pow[lo:hi]
        if dtype == object:
            p, e = p.astype(object), e.astype(object)
        else:
            p, e = p.astype(dtype), e.astype(dtype)
        if spec.vectorized:
            local = spec.rule(p, e)
        else:
            local = np.array([spec.rule(int(a), int(b)) for a, b in zip(p, e)], dtype=dtype)
        values[lo:hi] = values[rest] * local
    return values


def sieve_column(sieve: SieveTables, name: str, limit: int | None = None) -> FunctionTable:
    """A raw sieve column (phi, mobius, ...) as a table."""
    limit = sieve.limit if limit is None else limit
    arr = getattr(sieve, name)[: limit + 1].astype(np.int64)
    return FunctionTable(limit, arr, "sieved", name)


# ---------------------------------------------------------------------------
# Convolution
# ---------------------------------------------------------------------------


def _result_dtype(f: np.ndarray, g: np.ndarray, limit: int):
    kinds = {f.dtype.kind, g.dtype.kind}
    if "O" in kinds:
        return object
    if "f" in kinds:
        return np.float64
    fmax = int(np.abs(f[1:]).max(initial=0))
    gmax = int(np.abs(g[1:]).max(initial=0))
    # at most limit terms in any (f*g)(n)
    if fmax * gmax * limit > INT64_MAX:
        return object
    return np.int64


def convolve_arrays(f: np.ndarray, g: np.ndarray) -> np.ndarray:
    """(f*g)(n) for n <= N, with f, g laid out as [unused, f(1), ..., f(N)].

    Pairs (d, e) with d*e <= N are split at sqrt(N): for d <= sqrt(N) the
    multiples of d are hit by one strided slice, and for d > sqrt(N) the
    cofactor e is below sqrt(N), so each e gives one gather/scatter over d.
    Work is O(N log N) in about 2*sqrt(N) vector operations.
    """
    N = len(f) - 1
    if len(g) - 1 != N:
        raise UsageError(f"convolution limits differ: {N} vs {len(g) - 1}")
    dtype = _result_dtype(f, g, N)
    f = f.astype(dtype, copy=False)
    g = g.astype(dtype, copy=False)
    out = np.zeros(N + 1, dtype=dtype)
    if dtype == object:
        out[:] = 0
    if N < 1:
        return out
    s = math.isqrt(N)
    for d in range(1, s + 1):
        m = N // d
        fd = f[d]
        if fd == 0:
            continue
        out[d :: d] += fd * g[1 : m + 1]
    for e in range(1, N // (s + 1) + 1):
        ge = g[e]
        if ge == 0:
            continue
        d = np.arange(s + 1, N // e + 1)
        out[d * e] += f[d] * ge
    return out


def dirichlet_convolve(f: FunctionTable, g: FunctionTable) -> FunctionTable:
    if f.limit != g.limit:
        raise UsageError(f"convolution needs equal limits, got {f.limit} and {g.limit}")
    out = convolve_arrays(f.values, g.values)
    name = f"({f.name}*{g.name})" if f.name and g.name else ""
    return FunctionTable(f.limit, out, "convolved", name)


def mobius_table(limit: int) -> FunctionTable:
    return sieve_column(cached_sieve(limit), "mobius", limit)


def mobius_invert(F: FunctionTable) -> FunctionTable:
    """f = mu * F, the unique f with sum_{d|n} f(d) = F(n)."""
    mu = mobius_table(F.limit)
    out = convolve_arrays(mu.values, F.values)
    return FunctionTable(F.limit, out, "inverted", f"mu*{F.name}" if F.name else "")


def constant_one(limit: int) -> FunctionTable:
    v = np.ones(limit + 1, dtype=np.int64)
    v[0] = 0
    return FunctionTable(limit, v, "given", "1")


def identity_table(limit: int) -> FunctionTable:
    return FunctionTable(limit, np.arange(limit + 1, dtype=np.int64), "given", "id")
