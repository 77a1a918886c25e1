"""Acceptance criteria 1-14.

Run ``pytest tests/test_acceptance.py -v``; the terminal summary prints one
PASS/FAIL line per criterion.  Running this file directly does the same.
"""

import io
import json
import random
import sys
import time
from contextlib import redirect_stdout

import pytest
import sympy as sp

from lpdokit import bkfactor as bk
from lpdokit import laplace as lp
from lpdokit.cli import main
from lpdokit.grammar import operator_to_text, parse_operator
from lpdokit.lpdo import Lpdo, compose, difference_is_zero, structurally_equal
from lpdokit.random_ops import (
    composed2,
    composed3,
    constant_roots,
    random_hyperbolic,
    random_operator,
    random_poly,
    random_reduced,
    with_principal_roots,
)
from lpdokit.symexpr import DEFAULT_SEED, Exp, FuncSymbol, Log, diff, is_zero, k, normalize, x, y, z

SEED = DEFAULT_SEED
TRIALS = 16


# ------------------------------------------------------------------ 1


@pytest.mark.criterion(1, "Laplace chain of Dx*Dy + x*Dx + 2 ends at Dx o (Dy + x)")
def test_criterion_01_example_chain(request):
    t0 = time.perf_counter()
    op = lp.HyperbolicOp.from_lpdo(parse_operator("Dx*Dy + x*Dx + 2"))
    chain = lp.laplace_chain(op, 5)
    assert chain.trace() == [(-1, -2), (0, -1)]
    assert chain.termination == lp.HIT_FACTORIZABLE
    last = chain.operators[1].to_lpdo()
    f = bk.factor2(last, 0)
    assert f.l2 == 0  # structural, no sampling
    assert f.left == parse_operator("Dx") and f.right == parse_operator("Dy + x")
    assert compose(f.left, f.right) == last
    elapsed = time.perf_counter() - t0
    assert elapsed < 1.0
    request.node.detail = f"{elapsed:.3f}s"


# ------------------------------------------------------------------ 2


@pytest.mark.criterion(2, "order-2 recomposition oracle, 200 cases")
def test_criterion_02_recomposition_order2(request):
    rng = random.Random(SEED + 2)
    t0 = time.perf_counter()
    structural = sampled = 0
    for _ in range(200):
        c = composed2(rng)
        f = bk.factor2(c.operator, c.omega, seed=SEED, trials=TRIALS)
        assert is_zero(f.l2, seed=SEED, trials=TRIALS)
        product = compose(f.left, f.right, rational=True)
        structural += structurally_equal(product, c.operator)
        sampled += difference_is_zero(product, c.operator, seed=SEED, trials=TRIALS)
        # independent oracle: the factors are the ones we multiplied
        assert difference_is_zero(f.left, c.left, seed=SEED, trials=TRIALS)
        assert difference_is_zero(f.right, c.right, seed=SEED, trials=TRIALS)
    elapsed = time.perf_counter() - t0
    request.node.detail = f"structural {structural}/200, is_zero {sampled}/200, {elapsed:.1f}s"
    assert sampled == 200
    assert structural >= 190
    assert elapsed < 60.0


# ------------------------------------------------------------------ 3


@pytest.mark.criterion(3, "order-3 recomposition oracle, 100 cases")
def test_criterion_03_recomposition_order3(request):
    rng = random.Random(SEED + 3)
    t0 = time.perf_counter()
    structural = 0
    for _ in range(100):
        c = composed3(rng)
        f = bk.factor3(c.operator, c.omega, seed=SEED, trials=TRIALS)
        assert is_zero(f.l3, seed=SEED, trials=TRIALS)
        assert is_zero(f.l31, seed=SEED, trials=TRIALS)
        product = compose(f.left, f.right, rational=True)
        assert difference_is_zero(product, c.operator, seed=SEED, trials=TRIALS)
        assert difference_is_zero(f.right, c.right, seed=SEED, trials=TRIALS)
        structural += structurally_equal(product, c.operator)
    elapsed = time.perf_counter() - t0
    request.node.detail = f"structural {structural}/100, {elapsed:.1f}s"
    assert elapsed < 120.0


# ------------------------------------------------------------------ 4


def _gauge_cases(rng, order, n):
    for i in range(n):
        if i % 2:
            c = composed2(rng) if order == 2 else composed3(rng)
            A, omega = c.operator, c.omega
        else:
            roots = constant_roots(rng, order)
            A, omega = with_principal_roots(rng, roots), roots[0]
        yield A, omega, random_poly(rng, nonzero=True)


@pytest.mark.criterion(4, "gauge behaviour of l2, l3, l31 on 50 pairs per order")
def test_criterion_04_general_invariants(request):
    rng = random.Random(SEED + 4)
    failures = []
    for order in (2, 3):
        for A, omega, phi in _gauge_cases(rng, order, 50):
            report = bk.verify_gauge_invariance(A, phi, omega, seed=SEED)
            if not report.passed:
                failures.append((order, operator_to_text(A), phi))
    request.node.detail = f"{len(failures)} failures in 100 pairs"
    assert failures == []


# ------------------------------------------------------------------ 5


@pytest.mark.criterion(5, "Laplace invariants preserved by 50 random gauges")
def test_criterion_05_laplace_gauge(request):
    rng = random.Random(SEED + 5)
    exact = 0
    for _ in range(50):
        op = random_hyperbolic(rng)
        phi = random_poly(rng, nonzero=True)
        before = lp.laplace_invariants(op)
        after = lp.laplace_invariants(lp.gauge(op, phi))
        if before == after:
            exact += 1
        else:
            assert is_zero(after.a_hat - before.a_hat) and is_zero(after.b_hat - before.b_hat)
    request.node.detail = f"{exact}/50 structurally equal"


# ------------------------------------------------------------------ 6


def _log_xy(u):
    return diff(diff(Log(u), x), y)


@pytest.mark.criterion(6, "invariant recurrence on 10 reduced chains of 3 steps")
def test_criterion_06_recurrence(request):
    rng = random.Random(SEED + 6)
    done = interior = 0
    while done < 10:
        op = random_reduced(rng)
        chain = lp.laplace_chain(op, 3)
        invs = chain.invariants
        if len(chain) < 4 or any(is_zero(i.a_hat) for i in invs) or is_zero(invs[0].b_hat):
            continue
        assert lp.verify_recurrence(chain)
        # direct restatement: u_0 = -b_hat of the first state, u_n = -a_hat_n
        u = [-invs[0].b_hat] + [-i.a_hat for i in invs]
        for n in range(1, len(u) - 1):
            residual = u[n + 1] - 2 * u[n] - _log_xy(u[n]) + u[n - 1]
            assert is_zero(residual, formal=True)
            interior += 1
        done += 1
    request.node.detail = f"{interior} interior steps"


# ------------------------------------------------------------------ 7


def _cofactor(m):
    if len(m) == 1:
        return m[0][0]
    return sum((-1) ** j * m[0][j] * _cofactor([r[:j] + r[j + 1:] for r in m[1:]]) for j in range(len(m)) if m[0][j])


@pytest.mark.criterion(7, "closure matrix determinants and kernel")
def test_criterion_07_matrices(request):
    t0 = time.perf_counter()
    for N in range(3, 9):
        M = lp.cartan_matrix(N, "periodic")
        assert lp.det_exact(M) == 0
        assert M.apply([1] * N) == [0] * N
    for N in range(1, 9):
        M = lp.cartan_matrix(N)
        d = lp.det_exact(M)
        assert d == (-1) ** N * (N + 1)
        assert d == _cofactor([list(r) for r in M.rows])
    elapsed = time.perf_counter() - t0
    request.node.detail = f"{elapsed:.3f}s"
    assert elapsed < 1.0


# ------------------------------------------------------------------ 8


@pytest.mark.criterion(8, "mixed-derivative determinants")
def test_criterion_08_dn(request):
    rng = random.Random(SEED + 8)
    for _ in range(5):
        w = random_poly(rng, nonzero=True) + Exp(random_poly(rng))
        d = lp.dn_sequence(w, 2)
        assert d[0] == 1 and d[1] == normalize(w)
        assert is_zero(_log_xy(d[1]) - d[2] * d[0] / d[1] ** 2)
    X1, X2 = FuncSymbol("X1", depends="x"), FuncSymbol("X2", depends="x")
    Y1, Y2 = FuncSymbol("Y1", depends="y"), FuncSymbol("Y2", depends="y")
    for w in (x * Exp(y) + Exp(x) * y, X1 * Y1 + X2 * Y2):
        d = lp.dn_sequence(w, 4)
        assert d[3] == 0 and d[4] == 0
        assert is_zero(_log_xy(d[1]) - d[2] * d[0] / d[1] ** 2)


# ------------------------------------------------------------------ 9


@pytest.mark.criterion(9, "Liouville, Tzitzeica and sinh-Gordon closures")
def test_criterion_09_closures(request):
    liouville = lp.closure_identity_check("liouville")
    assert liouville.passed and all(v == 0 for v in liouville.residuals.values())
    tz = lp.closure_identity_check("tzitzeica")
    assert tz.passed and all(v == 0 for v in tz.residuals.values())
    sg = lp.closure_identity_check("sinh-gordon")
    assert sg.passed and sg.kappa is not None
    assert sg.remarks  # the scale discrepancy is stated, not hidden
    request.node.detail = f"sinh-Gordon kappa = {sg.kappa}"


# ------------------------------------------------------------------ 10


@pytest.mark.criterion(10, "constant order-2 factorization condition, 20 cases")
def test_criterion_10_constant_order2(request):
    rng = random.Random(SEED + 10)
    for _ in range(20):
        a10, a01 = rng.randint(-9, 9), rng.randint(-9, 9)
        a00 = sp.Rational(a10**2 - a01**2, 4)
        A = Lpdo({(2, 0): 1, (0, 2): -1, (1, 0): a10, (0, 1): a01, (0, 0): a00})
        pair = bk.const_factor_condition2(a10, a01, a00)
        assert pair is not None
        left, right = pair
        # expansion of the displayed product
        assert compose(left, right) == A
        f = bk.factor2(A, -1)
        assert f.l2 == 0 and f.left == left and f.right == right
        assert bk.factor2(A, 1).l2 == 0
        delta = rng.choice([-3, -2, -1, 1, 2, 3])
        B = Lpdo({(2, 0): 1, (0, 2): -1, (1, 0): a10, (0, 1): a01, (0, 0): a00 + delta})
        assert bk.const_factor_condition2(a10, a01, a00 + delta) is None
        assert bk.factor2(B, -1).l2 != 0 and bk.factor2(B, 1).l2 != 0


# ------------------------------------------------------------------ 11


@pytest.mark.criterion(11, "reduced order-3 remainders and the antiderivative condition")
def test_criterion_11_order3_reduced(request):
    B = parse_operator("Dx^2*Dy + Dx*Dy^2 + a11(x,y)*Dx*Dy + a10(x,y)*Dx + a01(x,y)*Dy + a00(x,y)")
    a11, a10, a01, a00 = (FuncSymbol(n) for n in ("a11", "a10", "a01", "a00"))
    f = bk.factor3(B, 0)
    assert normalize(f.l3 - (diff(a11, x) - a01)) == 0
    assert normalize(f.l31 - (diff(a10, x) - a00)) == 0
    exact = parse_operator("Dx^2*Dy + Dx*Dy^2 + x^2*Dx*Dy + x^2*Dx + 2*x*Dy + 2*x")
    assert bk.factor3(exact, 0).exact
    # a01 is no longer the x-derivative of a11
    broken = parse_operator("Dx^2*Dy + Dx*Dy^2 + x^2*Dx*Dy + x^2*Dx + (2*x + 1)*Dy + 2*x")
    g = bk.factor3(broken, 0)
    assert not g.exact and g.l3 == -1


# ------------------------------------------------------------------ 12


@pytest.mark.criterion(12, "sum-of-cubes factor identity")
def test_criterion_12_cubes(request):
    e = x**3 + y**3 + z**3 - 3 * x * y * z - (x + y + z) * (x**2 + y**2 + z**2 - x * y - x * z - z * y)
    assert normalize(e) == 0


# ------------------------------------------------------------------ 13


@pytest.mark.criterion(13, "two-component Bloch reduction")
def test_criterion_13_bloch(request):
    b1, b2 = FuncSymbol("b1"), FuncSymbol("b2")
    got = lp.bloch_reduce(b1, b2)
    want = (1, b1 + b2, diff(b2, x) + b1 * b2 - k**-2)
    assert got[0] == 1
    assert got[1] == normalize(want[1])
    assert got[2] == normalize(want[2])


# ------------------------------------------------------------------ 14


@pytest.mark.criterion(14, "print/parse round trip and the reference fixture suite")
def test_criterion_14_cli(request):
    rng = random.Random(SEED + 14)
    for _ in range(100):
        A = random_operator(rng)
        assert parse_operator(operator_to_text(A)) == A
    buf = io.StringIO()
    with redirect_stdout(buf):
        code = main(["--json", "verify", "--suite", "paper"])
    out = json.loads(buf.getvalue())
    assert code == 0 and out["pass"]
    request.node.detail = f"{len(out['results'])} fixtures green"


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
