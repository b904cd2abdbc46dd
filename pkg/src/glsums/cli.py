"""Command-line front end: sums, constants, verification suites, fits, tables.

Exit codes: 0 success, 1 usage, 2 resource or convergence, 3 verification
failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import warnings
from dataclasses import dataclass, field
from fractions import Fraction

from . import asym
from .errors import ConvergenceError, GlsumsError, UsageError, VerificationError
from .multfun import (
    a_k,
    b_k,
    constant_one,
    dirichlet_convolve,
    mobius_invert,
    parse_spec,
    sieve_column,
    table_from_spec,
    tau_power,
)
from .numkit import CONSTANT_NAMES, cached_sieve, constant, primes_up_to
from .tuple_sums import (
    CSV_HEADER,
    KINDS,
    SumRequest,
    compute,
    default_workers,
    fast_S2,
    gcd_kind_sum,
    gcd_reciprocal_table,
    oracle_tuple_sum,
    pair_sum,
    s2_table,
    u2_from_s2,
)

FORMATS = ("text", "json", "csv")


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad arguments; 2 is reserved for resource errors
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


# ---------------------------------------------------------------------------
# Verification results
# ---------------------------------------------------------------------------


def _exact_text(v):
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


@dataclass
class CheckResult:
    check_id: str
    passed: bool
    lhs: object = None
    rhs: object = None
    tolerance: object = None

    def to_json(self):
        return {
            "id": self.check_id,
            "pass": self.passed,
            "lhs": _exact_text(self.lhs),
            "rhs": _exact_text(self.rhs),
            "tolerance": _exact_text(self.tolerance) if self.tolerance is not None else None,
        }


@dataclass
class VerifySuiteResult:
    suite: str
    checks: list[CheckResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def add(self, check_id, passed, lhs=None, rhs=None, tolerance=None):
        self.checks.append(CheckResult(check_id, bool(passed), lhs, rhs, tolerance))

    def first_failure(self):
        return next((c for c in self.checks if not c.passed), None)

    def to_json(self):
        return {"suite": self.suite, "status": "pass" if self.passed else "fail",
                "checks": [c.to_json() for c in self.checks]}


# ---------------------------------------------------------------------------
# Suites
# ---------------------------------------------------------------------------


def suite_identities(res: VerifySuiteResult, n_max: int, ks):
    """Sieve identities and the a_k / b_k convolution identities up to n_max."""
    n_max = max(n_max, 2)
    sv = cached_sieve(n_max)
    one = constant_one(n_max)
    checks = {
        "sum_phi_over_divisors": (sieve_column(sv, "phi", n_max), lambda n: n),
        "sum_mobius_over_divisors": (sieve_column(sv, "mobius", n_max), lambda n: int(n == 1)),
        "sum_jordan2_over_divisors": (sieve_column(sv, "jordan2", n_max), lambda n: n * n),
    }
    for name, (tab, want) in checks.items():
        got = dirichlet_convolve(one, tab).tolist()
        bad = next((n for n in range(1, n_max + 1) if got[n - 1] != want(n)), None)
        res.add(f"{name}[n<={n_max}]", bad is None,
                got[bad - 1] if bad else "all", want(bad) if bad else "all")
    primes = primes_up_to(n_max).tolist()
    for k in ks:
        ak = table_from_spec(a_k(k), n_max, sv)
        bk = table_from_spec(b_k(k), n_max, sv)
        tk = table_from_spec(tau_power(k), n_max, sv)
        for cid, got, want in (
            (f"a{k}=mu*tau^{k}", mobius_invert(tk).tolist(), ak.tolist()),
            (f"b{k}=mu*a{k}", mobius_invert(ak).tolist(), bk.tolist()),
        ):
            bad = next((i for i, (g, w) in enumerate(zip(got, want)) if g != w), None)
            res.add(f"{cid}[n<={n_max}]", bad is None,
                    got[bad] if bad is not None else "all", want[bad] if bad is not None else "all")
        ap = {int(ak[p]) for p in primes}
        bp = {int(bk[p]) for p in primes}
        res.add(f"a{k}(p)=2^{k}-1", ap == {2**k - 1}, sorted(ap), 2**k - 1)
        res.add(f"b{k}(p)=2^{k}-2", bp == {2**k - 2}, sorted(bp), 2**k - 2)


def suite_sandwich(res, k, xs, workers):
    for x in xs:
        for kind in ("S", "U"):
            rep = asym.sandwich_check(kind, k, x, workers)
            res.add(f"{kind}{k}({x})>=lower", rep.value >= rep.lower, rep.value, rep.lower)
            res.add(f"{kind}{k}({x})<=upper", rep.value <= rep.upper, rep.value,
                    rep.upper if not rep.upper_is_bound else float(rep.upper))


def suite_relations(res, ks, x_max):
    for k in ks:
        for rel in asym.RELATIONS:
            for x in range(1, x_max + 1):
                try:
                    rep = asym.relation_check(rel, k, x)
                except VerificationError as e:
                    res.add(f"{rel}[k={k},x={x}]", False, e.lhs, e.rhs)
                    break
            else:
                res.add(f"{rel}[k={k},x<={x_max}]", True, rep.lhs, rep.rhs)


def suite_bounds(res, k, xs, workers):
    for x in xs:
        b = asym.v_bounds_check(k, x, workers)
        res.add(f"V{k}({x})>=floor(x)^{k}", b["value"] >= b["lower"], b["value"], b["lower"])
        res.add(f"V{k}({x})<=x^{k}U{k}(x)", b["value"] <= b["upper"], b["value"], b["upper"])


def suite_asymptotics(res, workers):
    # T_2(x) - 3x measured against (log x)^2, calibrated at x = 50
    ratios = {}
    for x in (50, 100, 200, 400):
        t = oracle_tuple_sum("T", 2, x, "exact", workers).value.value
        ratios[x] = abs(float(t) - 3 * x) / math.log(x) ** 2
    for x in (100, 200, 400):
        res.add(f"T2_error_ratio({x})<2*ratio(50)", ratios[x] < 2 * ratios[50], ratios[x], 2 * ratios[50])
    beta = asym.beta_k(2, 2000)
    res.add("beta2(2000)~3", abs(beta.value - 3) <= 0.01, beta.value, 3.0, 0.01)
    e3, e4 = asym.euler_sum_check(1000), asym.euler_sum_check(10**4)
    res.add("euler_sum(1e4)~2zeta3", abs(e4["error_vs_2zeta3"]) <= 2e-3, e4["value"], 2 * constant("zeta3"), 2e-3)
    # the tail sum_{n>N} H_n/n^2 is about (log N + gamma + 1)/N
    for e in (e3, e4):
        N = e["N"]
        pred = (math.log(N) + constant("gamma") + 1) / N
        res.add(f"euler_sum_tail({N})~(logN+gamma+1)/N", abs(-e["error_vs_2zeta3"] / pred - 1) <= 0.05,
                -e["error_vs_2zeta3"], pred, 0.05)
    x = 10**4
    spec = asym.MainTermSpec
    got = gcd_kind_sum(gcd_reciprocal_table(x, "float"), 2, x).value.value
    want = asym.main_term(spec("gcd_recipr_m_n"), x)
    res.add("sum 1/gcd(m,n) main term", abs(got / want - 1) <= 5e-3, got, want, 5e-3)
    got = float(pair_sum("pair_lcm", x, "exact").value.value)
    want = asym.main_term(spec("lcm_m_n"), x)
    res.add("sum lcm(m,n) main term", abs(got / want - 1) <= 1e-2, got, want, 1e-2)
    got = float(pair_sum("pair_gcd", x, "exact").value.value)
    want = asym.main_term(spec("gcd_m_n"), x)
    res.add("sum gcd(m,n) main term", abs(got / want - 1) <= 1e-2, got, want, 1e-2)


SUITES = ("identities", "sandwich", "relations", "bounds", "asymptotics", "all")


def run_suite(name, k=None, x=None, workers=None) -> list[VerifySuiteResult]:
    names = SUITES[:-1] if name == "all" else (name,)
    out = []
    for s in names:
        res = VerifySuiteResult(s)
        if s == "identities":
            suite_identities(res, x if x is not None else 1000, [k] if k else [2, 3, 4])
        elif s == "sandwich":
            suite_sandwich(res, k or 3, [x] if x else [20, 50, 100], workers)
        elif s == "relations":
            suite_relations(res, [k] if k else [2, 3], x if x else 30)
        elif s == "bounds":
            suite_bounds(res, k or 3, [x] if x else [20, 50], workers)
        else:
            suite_asymptotics(res, workers)
        out.append(res)
    return out


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def _csv(rows, header) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def run_sum(args) -> tuple[str, int]:
    req = SumRequest(args.kind, args.k, args.x, args.mode, args.algorithm)
    res = compute(req, args.threads)
    if args.format == "json":
        return json.dumps(res.to_json()), 0
    if args.format == "csv":
        return _csv([res.csv_row()], CSV_HEADER), 0
    return res.value.to_text(), 0


def _cf_result(args):
    if not args.spec:
        raise UsageError("Cf needs --spec ak:K or bk:K")
    spec = parse_spec(args.spec)
    K = spec.at_prime_power(2, 1)
    return asym.euler_product_Cf(spec, K, args.prime_limit)


def run_constants(args) -> tuple[str, int]:
    name = args.name
    if name in CONSTANT_NAMES:
        row = {"name": name, "value": format(constant(name), ".17g")}
    elif name == "Cf":
        r = _cf_result(args)
        row = {"name": f"Cf[{args.spec}]", **r.to_json(), "tail_kind": "heuristic"}
    elif name == "beta":
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            r = asym.beta_k(args.k, args.truncation, args.epsilon, args.tolerance)
        if caught and args.strict:
            raise ConvergenceError(str(caught[0].message))
        for w in caught:
            print(f"warning: {w.message}", file=sys.stderr)
        row = r.to_json()
    else:
        raise UsageError(f"unknown constant {name!r}")
    if args.format == "json":
        return json.dumps(row), 0
    if args.format == "csv":
        return _csv([list(row.values())], list(row.keys())), 0
    return "\n".join(f"{k}: {v}" for k, v in row.items()), 0


def run_verify(args) -> tuple[str, int]:
    results = run_suite(args.suite, args.k, args.x, args.threads)
    ok = all(r.passed for r in results)
    if args.format == "json":
        doc = {"status": "pass" if ok else "fail", "suites": [r.to_json() for r in results]}
        text = json.dumps(doc)
    elif args.format == "csv":
        rows = [[r.suite, c.check_id, "pass" if c.passed else "fail", _exact_text(c.lhs),
                 _exact_text(c.rhs), _exact_text(c.tolerance) if c.tolerance is not None else ""]
                for r in results for c in r.checks]
        text = _csv(rows, ["suite", "check", "status", "lhs", "rhs", "tolerance"])
    else:
        lines = []
        for r in results:
            lines.append(f"[{r.suite}] {'PASS' if r.passed else 'FAIL'}")
            for c in r.checks:
                lines.append(f"  {'ok  ' if c.passed else 'FAIL'} {c.check_id}: "
                             f"lhs={_exact_text(c.lhs)} rhs={_exact_text(c.rhs)}")
        text = "\n".join(lines)
    if not ok:
        bad = next(r.first_failure() for r in results if not r.passed)
        print(f"verification failed: {bad.check_id}\n  lhs = {_exact_text(bad.lhs)}\n"
              f"  rhs = {_exact_text(bad.rhs)}", file=sys.stderr)
        return text, 3
    return text, 0


FIT_KINDS = ("S2", "U2", "gcd_pair", "selftest")
_DEFAULT_DEGREE = {"S2": 3, "U2": 2, "gcd_pair": 1, "selftest": 3}
SELFTEST_COEFFS = (1.5, -2.0, 0.75, 0.25)


def fit_samples(kind, xs):
    if kind == "S2":
        return [(x, fast_S2(x).value.value) for x in xs]
    if kind == "U2":
        table = s2_table(max(xs))
        return [(x, u2_from_s2(x, table)) for x in xs]
    if kind == "gcd_pair":
        # sum_{m,n<=x} gcd(m,n) / x^2 is linear in log x
        return [(x, float(pair_sum("pair_gcd", x, "exact").value.value) / x**2) for x in xs]
    return [(x, math.fsum(c * math.log(x) ** j for j, c in enumerate(SELFTEST_COEFFS))) for x in xs]


def run_fit(args) -> tuple[str, int]:
    if args.grid != "geometric":
        raise UsageError("only geometric grids are supported")
    degree = _DEFAULT_DEGREE[args.kind] if args.degree is None else args.degree
    if args.points < degree + 2:
        raise UsageError(f"degree {degree} fit needs at least {degree + 2} points")
    xs = asym.geometric_grid(args.x_from, args.x_to, args.points)
    rep = asym.fit_log_polynomial(fit_samples(args.kind, xs), degree)
    doc = {"kind": args.kind, **rep.to_json()}
    if args.format == "json":
        return json.dumps(doc), 0
    if args.format == "csv":
        rows = [[format(x, ".17g"), format(v, ".17g"), format(r, ".17g")]
                for x, v, r in zip(rep.xs, rep.values, rep.residuals)]
        return _csv(rows, ["x", "value", "residual"]), 0
    lines = [f"kind: {args.kind}", f"degree: {degree}",
             "coefficients: " + " ".join(doc["coefficients"]),
             f"leading: {doc['leading_coefficient']}", f"condition: {doc['condition']}"]
    return "\n".join(lines), 0


SIEVE_COLUMNS = ("spf", "mobius", "phi", "tau", "omega", "jordan2")


def run_sieve(args) -> tuple[str, int]:
    sv = cached_sieve(args.limit)
    if args.spec:
        table = table_from_spec(parse_spec(args.spec), args.limit, sv)
    else:
        table = sieve_column(sv, args.column, args.limit)
    if args.format == "json":
        return table.to_json(), 0
    if args.format == "csv":
        return table.to_csv(), 0
    return "\n".join(f"{n} {v}" for n, v in enumerate(table.tolist(), start=1)), 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--format", choices=FORMATS, default="text")
    common.add_argument("--output", help="write to this file instead of standard output")
    common.add_argument("--threads", type=int, default=None, help="worker processes (default: all cores)")
    common.add_argument("--budget", type=int, default=None, help="tuple budget for brute-force sums")

    p = _Parser(prog="glsums", description="gcd/lcm sums over tuples of integers")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("sum", parents=[common], help="evaluate one sum")
    s.add_argument("--kind", required=True, choices=KINDS)
    s.add_argument("--k", type=int, default=2)
    s.add_argument("--x", type=int, required=True)
    s.add_argument("--mode", choices=("exact", "float"), default="float")
    s.add_argument("--algorithm", choices=("oracle", "fast", "auto"), default="auto")
    s.set_defaults(func=run_sum)

    c = sub.add_parser("constants", parents=[common], help="print a constant")
    c.add_argument("--name", required=True, choices=CONSTANT_NAMES + ("Cf", "beta"))
    c.add_argument("--spec", help="ak:K or bk:K, for Cf")
    c.add_argument("--prime-limit", type=int, default=10**5)
    c.add_argument("--k", type=int, default=2)
    c.add_argument("--truncation", type=int, default=2000)
    c.add_argument("--epsilon", type=float, default=None)
    c.add_argument("--tolerance", type=float, default=0.01, help="tail estimate above this warns")
    c.add_argument("--strict", action="store_true", help="turn convergence warnings into exit 2")
    c.set_defaults(func=run_constants)

    v = sub.add_parser("verify", parents=[common], help="run a verification suite")
    v.add_argument("--suite", required=True, choices=SUITES)
    v.add_argument("--k", type=int, default=None)
    v.add_argument("--x", type=int, default=None)
    v.set_defaults(func=run_verify)

    f = sub.add_parser("fit", parents=[common], help="fit a polynomial in log x to sampled sums")
    f.add_argument("--kind", required=True, choices=FIT_KINDS)
    f.add_argument("--grid", default="geometric")
    f.add_argument("--from", dest="x_from", type=float, default=1e4)
    f.add_argument("--to", dest="x_to", type=float, default=1e6)
    f.add_argument("--points", type=int, default=12)
    f.add_argument("--degree", type=int, default=None)
    f.set_defaults(func=run_fit)

    t = sub.add_parser("sieve", parents=[common], help="export a sieve column or multiplicative table")
    t.add_argument("--limit", type=int, required=True)
    t.add_argument("--column", choices=SIEVE_COLUMNS, default="phi")
    t.add_argument("--spec", help="tabulate this function instead, e.g. ak:3")
    t.set_defaults(func=run_sieve)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.threads is None:
        args.threads = default_workers()
    elif args.threads < 1:
        print("glsums: error: --threads must be >= 1", file=sys.stderr)
        return 1
    saved = os.environ.get("GLSUMS_BUDGET")
    if args.budget is not None:
        os.environ["GLSUMS_BUDGET"] = str(args.budget)
    try:
        text, code = args.func(args)
    except GlsumsError as e:
        print(f"glsums: {type(e).__name__}: {e}", file=sys.stderr)
        return e.exit_code
    except MemoryError as e:
        print(f"glsums: out of memory: {e}", file=sys.stderr)
        return 2
    finally:
        if saved is None:
            os.environ.pop("GLSUMS_BUDGET", None)
        else:
            os.environ["GLSUMS_BUDGET"] = saved
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text + ("" if text.endswith("\n") else "\n"))
    else:
        sys.stdout.write(text + ("" if text.endswith("\n") else "\n"))
    return code


if __name__ == "__main__":
    sys.exit(main())
