"""Named reference checks with known closed-form answers.

Each fixture is a zero-argument callable returning True on success.  The
``verify`` command runs them and prints a pass/fail table.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Callable

from . import bkfactor as bk
from . import laplace as lp
from .grammar import parse_expression as E
from .grammar import parse_operator as P
from .lpdo import Lpdo, apply, char_poly, compose, gauge_conjugate, rational_roots
from .symexpr import Exp, FuncSymbol, Log, diff, eval_at, is_zero, k, normalize, substitute, x, y, z


@dataclass(frozen=True)
class Fixture:
    name: str
    check: Callable[[], bool]


@dataclass(frozen=True)
class FixtureResult:
    name: str
    passed: bool
    seconds: float
    error: str = ""


def _liouville_derivative() -> bool:
    return normalize(diff(diff(-2 * Log(x + y), x), y) - 2 / (x + y) ** 2, rational=True) == 0


def _substitute_product() -> bool:
    theta = FuncSymbol("theta")
    return substitute(E("u1*u2"), {"u1": Exp(theta), "u2": Exp(-theta)}) == 1


def _cubic_vanishes() -> bool:
    return eval_at(x**3 + y**3 + z**3 - 3 * x * y * z, {"x": 1, "y": 1, "z": 1}) == 0


def _cubic_identity() -> bool:
    lhs = x**3 + y**3 + z**3 - 3 * x * y * z
    rhs = (x + y + z) * (x**2 + y**2 + z**2 - x * y - x * z - z * y)
    return normalize(lhs - rhs) == 0


def _compose_dar() -> bool:
    a, b = FuncSymbol("a"), FuncSymbol("b")
    got = compose(P("Dx + b(x,y)"), P("Dy + a(x,y)"))
    want = Lpdo({(1, 1): 1, (1, 0): a, (0, 1): b, (0, 0): a * b + diff(a, x)})
    return got == want


def _apply_homogeneous() -> bool:
    X = FuncSymbol("X", depends="x")
    return apply(P("Dx*(Dy + x)"), X * Exp(-x * y)) == 0


def _hyperbolic_roots() -> bool:
    roots = rational_roots(char_poly(P("Dx^2 - Dy^2")))
    return [(r.value, r.multiplicity) for r in roots] == [(1, 1), (-1, 1)]


def _elliptic_no_rational_roots() -> bool:
    return rational_roots(char_poly(P("Dx^2 + Dy^2"))) == []


def _gauge_keeps_invariants() -> bool:
    op = P("Dx*Dy + x*Dx + 2")
    for phi in (E("x*y"), E("x^2 - 3*y"), E("x^2*y^2 + x")):
        inv = lp.laplace_invariants(lp.HyperbolicOp.from_lpdo(gauge_conjugate(op, phi)))
        if (inv.a_hat, inv.b_hat) != (-1, -2):
            return False
    return True


def _const_order2() -> bool:
    # the valid reading: a00 = (a10^2 - a01^2)/4
    pair = bk.const_factor_condition2(4, 2, 3)
    return pair is not None and pair == (P("Dx + Dy + 1"), P("Dx - Dy + 3"))


def _ex1_remainder() -> bool:
    a10, a01, a00 = FuncSymbol("a10"), FuncSymbol("a01"), FuncSymbol("a00")
    A = Lpdo({(2, 0): 1, (0, 2): -1, (1, 0): a10, (0, 1): a01, (0, 0): a00})
    f = bk.factor2(A, 1)
    half = (a10 - a01) / 2
    displayed = a00 - (diff(half, x) - diff(half, y)) - (a10**2 - a01**2) / 4
    # remainders are signed so that A = product - l2
    return normalize(f.l2 + displayed, rational=True) == 0


def _ex1_laplace_correspondence() -> bool:
    a10, a01, a00 = FuncSymbol("a10"), FuncSymbol("a01"), FuncSymbol("a00")
    A = Lpdo({(2, 0): 1, (0, 2): -1, (1, 0): a10, (0, 1): a01, (0, 0): a00})
    # Dx - Dy and Dx + Dy are the characteristic derivatives
    a, b = (a10 - a01) / 2, (a10 + a01) / 2
    a_hat = a * b + diff(a, x) - diff(a, y) - a00
    b_hat = a * b + diff(b, x) + diff(b, y) - a00
    return is_zero(bk.factor2(A, 1).l2 - a_hat) and is_zero(bk.factor2(A, -1).l2 - b_hat)


def _ex3_remainders() -> bool:
    B = P("Dx^2*Dy + Dx*Dy^2 + a11(x,y)*Dx*Dy + a10(x,y)*Dx + a01(x,y)*Dy + a00(x,y)")
    f = bk.factor3(B, 0)
    a11, a10, a01, a00 = (FuncSymbol(n) for n in ("a11", "a10", "a01", "a00"))
    return normalize(f.l3 - (diff(a11, x) - a01)) == 0 and normalize(f.l31 - (diff(a10, x) - a00)) == 0


def _ex3_antiderivative() -> bool:
    B = P("Dx^2*Dy + Dx*Dy^2 + x^2*Dx*Dy + x^2*Dx + 2*x*Dy + 2*x")
    return bk.factor3(B, 0).exact


def _l2_gauge_invariant() -> bool:
    A = P("Dx^2 - Dy^2 + a(x,y)*Dx + b(x,y)*Dy + c(x,y)")
    return bk.verify_gauge_invariance(A, x * y, 1).passed


def _l31_can_be_killed() -> bool:
    # l3 = -1 and l31 = -y at root 0; phi_y = -l31/l3 = -y
    A = P("Dx^2*Dy + Dx*Dy^2 + Dy + y")
    f = bk.factor3(A, 0)
    phi = E("-y^2/2")
    g = bk.factor3(gauge_conjugate(A, phi), 0)
    return normalize(f.l3 + 1) == 0 and is_zero(g.l31) and bk.verify_gauge_invariance(A, phi, 0).passed


def _linear_invariants_vanish() -> bool:
    phi = FuncSymbol("phi")
    a1, a2 = diff(phi, x), diff(phi, y)
    return all(v == 0 for v in bk.linear_invariants(a1, a2, a1 + a2))


def _example_invariants() -> bool:
    inv = lp.laplace_invariants(lp.HyperbolicOp(x, 0, 2))
    return (inv.a_hat, inv.b_hat) == (-1, -2)


def _example_transform() -> bool:
    new = lp.laplace_transform(lp.HyperbolicOp(x, 0, 2))
    inv = lp.laplace_invariants(new)
    return (inv.a_hat, inv.b_hat) == (0, -1)


def _example_chain() -> bool:
    ch = lp.laplace_chain(lp.HyperbolicOp(x, 0, 2), 5)
    last = ch.operators[-1].to_lpdo()
    f = bk.factor2(last, 0)
    return (
        ch.trace() == [(-1, -2), (0, -1)]
        and ch.termination == lp.HIT_FACTORIZABLE
        and last == P("Dx*Dy + x*Dx + 1")
        and f.l2 == 0
        and f.left == P("Dx")
        and f.right == P("Dy + x")
    )


def _toda_c_recurrence() -> bool:
    ch = lp.laplace_chain(lp.HyperbolicOp(0, x + y, x * y + 1), 3)
    return len(ch) >= 3 and lp.verify_recurrence(ch)


def _liouville() -> bool:
    return lp.closure_identity_check("liouville").passed


def _tzitzeica() -> bool:
    return lp.closure_identity_check("tzitzeica").passed


def _sinh_gordon() -> bool:
    r = lp.closure_identity_check("sinh_gordon")
    return r.passed and r.kappa == 2


def _cartan_shapes() -> bool:
    return (
        lp.cartan_matrix(1).rows == ((-2,),)
        and lp.cartan_matrix(3, "periodic").rows == ((-2, 1, 1), (1, -2, 1), (1, 1, -2))
    )


def _periodic_degenerate() -> bool:
    return all(lp.det_exact(lp.cartan_matrix(n, "periodic")) == 0 for n in range(3, 9))


def _shift_matrix() -> bool:
    T = lp.shift_matrix(4)
    return T[3, 0] == k**4 and all(T[i, i + 1] == 1 for i in range(3))


def _dn_first() -> bool:
    w = FuncSymbol("w")
    return lp.dn_sequence(w, 1) == [1, w]


def _dn_rank_two() -> bool:
    d = lp.dn_sequence(x * Exp(y) + Exp(x) * y, 4)
    X1, X2 = FuncSymbol("X1", depends="x"), FuncSymbol("X2", depends="x")
    Y1, Y2 = FuncSymbol("Y1", depends="y"), FuncSymbol("Y2", depends="y")
    e = lp.dn_sequence(X1 * Y1 + X2 * Y2, 4)
    return d[3] == 0 and d[4] == 0 and e[3] == 0 and e[4] == 0


def _toda_lattice() -> bool:
    return lp.toda_gauge_check(N=4)


def _periodic_commutator() -> bool:
    # constant c and y-independent b: the two-periodic relations hold
    return lp.commutator_check([x, x], [1, 1], 2) and not lp.commutator_check([x, y], [1, 2], 2)


def _bloch() -> bool:
    b1, b2 = FuncSymbol("b1"), FuncSymbol("b2")
    got = lp.bloch_reduce(b1, b2)
    want = (1, b1 + b2, diff(b2, x) + b1 * b2 - k**-2)
    return all(normalize(g - w) == 0 for g, w in zip(got, want))


def _equivalent_to_c_form() -> bool:
    # a_x = b_y, so phi with phi_y = -a, phi_x = -b kills both first-order terms
    op = lp.HyperbolicOp(y, x, x * y + 3)
    reduced = lp.gauge(op, -(x**2 + y**2) / 2)
    return reduced.a == 0 and reduced.b == 0 and lp.equivalent(op, reduced)


def _product_form_gauge() -> bool:
    return bk.find_gauge_to_product_form(y, x, x + y) == x * y


PAPER_SUITE: list = [
    Fixture("mixed log derivative of the Liouville solution", _liouville_derivative),
    Fixture("u1*u2 under exponential substitution", _substitute_product),
    Fixture("x^3+y^3+z^3-3xyz vanishes at (1,1,1)", _cubic_vanishes),
    Fixture("x^3+y^3+z^3-3xyz factor identity", _cubic_identity),
    Fixture("(Dx + b)(Dy + a) expansion", _compose_dar),
    Fixture("Dx(Dy + x) annihilates X(x)exp(-xy)", _apply_homogeneous),
    Fixture("hyperbolic symbol has roots +1, -1", _hyperbolic_roots),
    Fixture("elliptic symbol has no rational roots", _elliptic_no_rational_roots),
    Fixture("gauge preserves (-1, -2)", _gauge_keeps_invariants),
    Fixture("constant order-2 factorization", _const_order2),
    Fixture("order-2 remainder at root 1", _ex1_remainder),
    Fixture("l2 at roots +1/-1 are the Laplace invariants", _ex1_laplace_correspondence),
    Fixture("reduced order-3 remainders", _ex3_remainders),
    Fixture("reduced order-3 factorizable instance", _ex3_antiderivative),
    Fixture("l2 gauge invariance", _l2_gauge_invariant),
    Fixture("l31 removable by a gauge", _l31_can_be_killed),
    Fixture("linear invariants vanish for gradients", _linear_invariants_vanish),
    Fixture("gauge to product form", _product_form_gauge),
    Fixture("Laplace invariants of Dx*Dy + x*Dx + 2", _example_invariants),
    Fixture("one Laplace step gives (0, -1)", _example_transform),
    Fixture("Laplace chain ends at Dx(Dy + x)", _example_chain),
    Fixture("invariant recurrence on a reduced chain", _toda_c_recurrence),
    Fixture("Liouville particular solution", _liouville),
    Fixture("Tzitzeica reduction", _tzitzeica),
    Fixture("sinh-Gordon reduction", _sinh_gordon),
    Fixture("closure matrix shapes", _cartan_shapes),
    Fixture("periodic closure matrix is singular", _periodic_degenerate),
    Fixture("Bloch shift matrix", _shift_matrix),
    Fixture("d1 = w", _dn_first),
    Fixture("d3 = d4 = 0 for rank-two w", _dn_rank_two),
    Fixture("two-dimensional Toda lattice gauge", _toda_lattice),
    Fixture("periodic commutator relations", _periodic_commutator),
    Fixture("Bloch reduction to one scalar equation", _bloch),
    Fixture("operator with a_hat = b_hat is gauge equivalent to Dx*Dy + c", _equivalent_to_c_form),
]


def run_suite(fixtures=None) -> list:
    out = []
    for fx in fixtures if fixtures is not None else PAPER_SUITE:
        t = time.perf_counter()
        try:
            ok, err = bool(fx.check()), ""
        except Exception as exc:  # a crashing fixture is reported, not raised
            ok, err = False, f"{type(exc).__name__}: {exc}"
        out.append(FixtureResult(fx.name, ok, time.perf_counter() - t, err))
    return out

