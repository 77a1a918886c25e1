"""Command-line front end (``lpdo``).

Exit codes: 0 success, 1 mathematical failure, 2 usage or parse error.
"""

from __future__ import annotations

import argparse
import json
import random
import sys
from dataclasses import dataclass, field
from typing import Sequence

import sympy as sp

from . import bkfactor as bk
from . import laplace as lp
from .fixtures import run_suite
from .grammar import ParseError, operator_to_text, parse_expression, parse_operator, to_text
from .lpdo import CannotNormalize, LpdoError, normalize_leading
from .symexpr import DEFAULT_SEED, SymexprError, is_zero

VERBS = ("factor", "invariants", "laplace-chain", "equiv", "cartan", "dn", "closure-check", "bloch", "verify")


class UsageError(Exception):
    pass


# --------------------------------------------------------------- parser


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--json", action="store_true", default=argparse.SUPPRESS, help="machine-readable output")
    p.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="seed of the probabilistic zero test")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="lpdo", description="Factorization and Laplace invariants of LPDOs.")
    parser.add_argument("--json", action="store_true", help="machine-readable output")
    parser.add_argument("--seed", type=int, default=DEFAULT_SEED, help="seed of the probabilistic zero test")
    sub = parser.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("factor", parents=[common], help="factorization with remainder")
    p.add_argument("--order", type=int, choices=(2, 3))
    p.add_argument("--root", metavar="EXPR")
    p.add_argument("operator")

    p = sub.add_parser("invariants", parents=[common], help="Laplace or general invariants")
    p.add_argument("--hierarchy", action="store_true")
    p.add_argument("operator")

    p = sub.add_parser("laplace-chain", parents=[common], help="iterate Laplace transformations")
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--direction", choices=("a", "b"), default="a")
    p.add_argument("operator")

    p = sub.add_parser("equiv", parents=[common], help="gauge equivalence of two hyperbolic operators")
    p.add_argument("operator")
    p.add_argument("other")

    p = sub.add_parser("cartan", parents=[common], help="closure matrices")
    p.add_argument("-N", type=int, required=True)
    p.add_argument("--periodic", action="store_true")
    p.add_argument("--det", action="store_true")

    p = sub.add_parser("dn", parents=[common], help="determinants of mixed derivatives")
    p.add_argument("--w", required=True, metavar="EXPR")
    p.add_argument("--n", type=int, required=True)

    p = sub.add_parser("closure-check", parents=[common], help="closure identities")
    p.add_argument("--kind", required=True, choices=("liouville", "sinh-gordon", "tzitzeica"))

    p = sub.add_parser("bloch", parents=[common], help="two-component Bloch reduction")
    p.add_argument("--b1", required=True, metavar="EXPR")
    p.add_argument("--b2", required=True, metavar="EXPR")

    p = sub.add_parser("verify", parents=[common], help="run a verification suite")
    p.add_argument("--suite", required=True, choices=("paper", "random"))
    p.add_argument("--trials", type=int, default=20, help="random cases per property")
    return parser


# -------------------------------------------------------------- Command


@dataclass
class Command:
    verb: str
    options: dict = field(default_factory=dict)
    inputs: list = field(default_factory=list)

    _POSITIONAL = {"factor": ["operator"], "invariants": ["operator"], "laplace-chain": ["operator"], "equiv": ["operator", "other"]}
    _FLAGS = {"N": "-N"}

    @classmethod
    def from_argv(cls, argv: Sequence[str]) -> "Command":
        ns = vars(build_parser().parse_args(list(argv)))
        verb = ns.pop("verb")
        inputs = [ns.pop(name) for name in cls._POSITIONAL.get(verb, [])]
        return cls(verb, ns, inputs)

    def to_argv(self) -> list:
        """Canonical argument list; from_argv(to_argv()) reproduces the command."""
        out = []
        if self.options.get("json"):
            out.append("--json")
        out += ["--seed", str(self.options.get("seed", DEFAULT_SEED)), self.verb]
        for key in sorted(self.options):
            if key in ("json", "seed"):
                continue
            value = self.options[key]
            flag = self._FLAGS.get(key, "--" + key.replace("_", "-"))
            if value is None or value is False:
                continue
            if value is True:
                out.append(flag)
            else:
                out += [flag, str(value)]
        return out + list(self.inputs)


# ------------------------------------------------------------- handlers


def _emit(args, payload: dict, text: str) -> None:
    if args.json:
        print(json.dumps(payload, indent=2))
    else:
        print(text)


def _factor(args) -> int:
    A = parse_operator(args.operator)
    if args.order is not None and A.order != args.order:
        raise UsageError(f"operator has order {A.order}, not {args.order}")
    record = None
    work = A
    if args.root is not None:
        results = [bk.factor(A, parse_expression(args.root), seed=args.seed)]
    else:
        if A.order in (2, 3) and is_zero(A[(A.order, 0)]):
            work, record = normalize_leading(A)
        results = bk.factor_all(work, seed=args.seed)
    payload = {"operator": operator_to_text(A), "factorizations": [f.to_json() for f in results]}
    lines = [f"operator: {operator_to_text(A)}"]
    if record is not None:
        payload["change_of_variables"] = {"swap": record.swap, "shear": record.shear}
        lines.append(f"change of variables: swap={record.swap} shear={record.shear}")
    for f in results:
        left, right = f.left, f.right
        if record is not None:
            left, right = record.pull_back(left), record.pull_back(right)
        rem = ", ".join(f"{k_} = {v}" for k_, v in f.to_json()["remainders"].items())
        lines.append(f"omega = {to_text(f.omega)}: ({operator_to_text(left)}) o ({operator_to_text(right)})")
        lines.append(f"  {rem}; exact: {'yes' if f.exact else 'no'}")
    _emit(args, payload, "\n".join(lines))
    return 0


def _invariants(args) -> int:
    A = parse_operator(args.operator)
    payload: dict = {"operator": operator_to_text(A)}
    lines = [f"operator: {operator_to_text(A)}"]
    try:
        op = lp.HyperbolicOp.from_lpdo(A)
    except LpdoError:
        op = None
    if op is not None and not args.hierarchy:
        inv = lp.laplace_invariants(op)
        payload["laplace"] = {"a_hat": to_text(inv.a_hat), "b_hat": to_text(inv.b_hat)}
        lines.append(f"a_hat = {to_text(inv.a_hat)}")
        lines.append(f"b_hat = {to_text(inv.b_hat)}")
    if op is None or args.hierarchy:
        hs = bk.invariant_hierarchy(A, seed=args.seed)
        payload["hierarchy"] = hs.to_json()
        lines.append(json.dumps(hs.to_json(), indent=2))
    _emit(args, payload, "\n".join(lines))
    return 0


def _laplace_chain(args) -> int:
    if args.steps < 1:
        raise UsageError("--steps must be positive")
    op = lp.HyperbolicOp.from_lpdo(parse_operator(args.operator))
    chain = lp.laplace_chain(op, args.steps, args.direction, seed=args.seed)
    rows = [f"{'n':>3}  {'a_hat':<24} {'b_hat':<24}"]
    for n, inv in enumerate(chain.invariants):
        rows.append(f"{n:>3}  {to_text(inv.a_hat):<24} {to_text(inv.b_hat):<24}")
    rows.append(f"termination: {chain.termination}")
    _emit(args, chain.to_json(), "\n".join(rows))
    return 0


def _equiv(args) -> int:
    op1 = lp.HyperbolicOp.from_lpdo(parse_operator(args.operator))
    op2 = lp.HyperbolicOp.from_lpdo(parse_operator(args.other))
    same = lp.equivalent(op1, op2, seed=args.seed)
    i1, i2 = lp.laplace_invariants(op1), lp.laplace_invariants(op2)
    payload = {
        "equivalent": same,
        "invariants": [[to_text(i.a_hat), to_text(i.b_hat)] for i in (i1, i2)],
    }
    text = f"equivalent: {'yes' if same else 'no'}\n" + "\n".join(
        f"  ({to_text(i.a_hat)}, {to_text(i.b_hat)})" for i in (i1, i2)
    )
    _emit(args, payload, text)
    return 0


def _cartan(args) -> int:
    M = lp.cartan_matrix(args.N, "periodic" if args.periodic else "truncated")
    payload: dict = {"rows": [list(r) for r in M.rows]}
    text = str(M)
    if args.det:
        d = lp.det_exact(M)
        payload["det"] = int(d)
        text += f"\ndet = {d}"
    _emit(args, payload, text)
    return 0


def _dn(args) -> int:
    if args.n < 1:
        raise UsageError("--n must be positive")
    ds = lp.dn_sequence(parse_expression(args.w), args.n)
    _emit(args, {"d": [to_text(d) for d in ds]}, "\n".join(f"d{i} = {to_text(d)}" for i, d in enumerate(ds)))
    return 0


def _closure(args) -> int:
    rep = lp.closure_identity_check(args.kind)
    lines = [f"{rep.kind}: {'pass' if rep.passed else 'FAIL'}", f"reduced: {rep.reduced}"]
    if rep.kappa is not None:
        lines.append(f"kappa = {to_text(rep.kappa)}")
    lines += [f"residual {k_}: {to_text(v)}" for k_, v in rep.residuals.items()]
    lines += [f"note: {r}" for r in rep.remarks]
    _emit(args, rep.to_json(), "\n".join(lines))
    return 0 if rep.passed else 1


def _bloch(args) -> int:
    one, p, q = lp.bloch_reduce(parse_expression(args.b1), parse_expression(args.b2))
    payload = {"coefficients": [to_text(one), to_text(p), to_text(q)]}
    text = f"psi2_xx + ({to_text(p)})*psi2_x + ({to_text(q)})*psi2 = 0"
    _emit(args, payload, text)
    return 0


def _random_suite(seed: int, trials: int) -> list:
    from .lpdo import difference_is_zero
    from .random_ops import composed2, composed3, random_hyperbolic, random_poly

    rng = random.Random(seed)
    checks = {"order-2 recomposition": 0, "order-3 recomposition": 0, "gauge invariance of a_hat, b_hat": 0}
    for _ in range(trials):
        c = composed2(rng)
        f = bk.factor2(c.operator, c.omega, seed=seed)
        checks["order-2 recomposition"] += f.exact and difference_is_zero(f.recomposed(), c.operator, seed=seed)
        c = composed3(rng)
        g = bk.factor3(c.operator, c.omega, seed=seed)
        checks["order-3 recomposition"] += g.exact and difference_is_zero(g.recomposed(), c.operator, seed=seed)
        op = random_hyperbolic(rng)
        checks["gauge invariance of a_hat, b_hat"] += lp.equivalent(op, lp.gauge(op, random_poly(rng)), seed=seed)
    return [(name, n == trials, f"{n}/{trials}") for name, n in checks.items()]


def _verify(args) -> int:
    if args.suite == "paper":
        rows = [(r.name, r.passed, r.error or f"{r.seconds:.2f}s") for r in run_suite()]
    else:
        if args.trials < 1:
            raise UsageError("--trials must be positive")
        rows = _random_suite(args.seed, args.trials)
    ok = all(p for _, p, _ in rows)
    payload = {"suite": args.suite, "pass": ok, "results": [{"name": n, "pass": p, "detail": d} for n, p, d in rows]}
    width = max(len(n) for n, _, _ in rows)
    text = "\n".join(f"{'PASS' if p else 'FAIL'}  {n:<{width}}  {d}" for n, p, d in rows)
    text += f"\n{sum(p for _, p, _ in rows)}/{len(rows)} passed"
    _emit(args, payload, text)
    return 0 if ok else 1


HANDLERS = {
    "factor": _factor,
    "invariants": _invariants,
    "laplace-chain": _laplace_chain,
    "equiv": _equiv,
    "cartan": _cartan,
    "dn": _dn,
    "closure-check": _closure,
    "bloch": _bloch,
    "verify": _verify,
}


def _fail(args, code: int, exc: Exception) -> int:
    if getattr(args, "json", False):
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}))
    else:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
    return code


def run(cmd: Command) -> int:
    return main(cmd.to_argv())


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return HANDLERS[args.verb](args)
    except (ParseError, UsageError) as exc:
        return _fail(args, 2, exc)
    except (LpdoError, SymexprError, CannotNormalize, ArithmeticError, ValueError, NotImplementedError) as exc:
        return _fail(args, 1, exc)


if __name__ == "__main__":
    sys.exit(main())
