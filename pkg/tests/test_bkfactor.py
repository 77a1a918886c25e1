import json
import random

import pytest
import sympy as sp
from hypothesis import given
from hypothesis import strategies as st

from lpdokit import bkfactor as bk
from lpdokit.grammar import parse_expression as E
from lpdokit.grammar import parse_operator as P
from lpdokit.lpdo import Lpdo, OrderUnsupported, compose, gauge_conjugate, structurally_equal
from lpdokit.random_ops import PolyConfig, composed2, composed3, constant_roots, random_poly, with_principal_roots
from lpdokit.symexpr import FuncSymbol, diff, is_zero, normalize, x, y

seeds = st.integers(min_value=0, max_value=10**6)
small = PolyConfig(degree=1, bound=3)


def generic(seed: int, order: int):
    """Operator with constant simple roots and random lower-order terms (not factorizable in general)."""
    rng = random.Random(seed)
    roots = constant_roots(rng, order)
    return with_principal_roots(rng, roots, small), roots


class TestRemainderIdentity:
    @given(seeds)
    def test_order2_every_root(self, seed):
        A, roots = generic(seed, 2)
        for w in roots:
            f = bk.factor2(A, w)
            assert structurally_equal(f.recomposed(), A)
            assert f.exact == is_zero(f.l2)

    @given(seeds)
    def test_order3_every_root(self, seed):
        A, roots = generic(seed, 3)
        for w in roots:
            f = bk.factor3(A, w)
            assert structurally_equal(f.recomposed(), A)
            assert f.left[(1, 0)] == 1 and normalize(f.left[(0, 1)] + w) == 0

    @given(seeds)
    def test_nonconstant_principal_part(self, seed):
        c = composed2(random.Random(seed), small)
        f = bk.factor2(c.operator, c.omega)
        assert f.exact and bk.recomposition_holds(f)
        assert structurally_equal(f.right, c.right)

    @given(seeds)
    def test_nonconstant_order3(self, seed):
        c = composed3(random.Random(seed), small)
        f = bk.factor3(c.operator, c.omega)
        assert f.exact and bk.recomposition_structural(f)


class TestWorkedCases:
    def test_laplace_correspondence(self):
        a10, a01, a00 = FuncSymbol("a10"), FuncSymbol("a01"), FuncSymbol("a00")
        A = Lpdo({(2, 0): 1, (0, 2): -1, (1, 0): a10, (0, 1): a01, (0, 0): a00})
        half = (a10 - a01) / 2
        displayed = a00 - (diff(half, x) - diff(half, y)) - (a10**2 - a01**2) / 4
        # A = left o right - l2, so l2 is the displayed remainder with the opposite sign
        assert normalize(bk.factor2(A, 1).l2 + displayed, rational=True) == 0

    def test_reduced_order3(self):
        B = P("Dx^2*Dy + Dx*Dy^2 + a11(x,y)*Dx*Dy + a10(x,y)*Dx + a01(x,y)*Dy + a00(x,y)")
        f = bk.factor3(B, 0)
        a11, a10, a01, a00 = (FuncSymbol(n) for n in ("a11", "a10", "a01", "a00"))
        assert normalize(f.l3 - (diff(a11, x) - a01)) == 0
        assert normalize(f.l31 - (diff(a10, x) - a00)) == 0

    def test_reduced_order3_other_root(self):
        B = P("Dx^2*Dy + Dx*Dy^2 + a11(x,y)*Dx*Dy + a10(x,y)*Dx + a01(x,y)*Dy + a00(x,y)")
        f = bk.factor3(B, -1)
        assert normalize(f.l3 - (FuncSymbol("a10") - FuncSymbol("a01"))) == 0

    def test_l31_can_be_gauged_away(self):
        A = P("Dx^2*Dy + Dx*Dy^2 + Dy + y")
        f = bk.factor3(A, 0)
        assert f.l3 == -1 and f.l31 == -y
        g = bk.factor3(gauge_conjugate(A, E("-y^2/2")), 0)
        assert g.l3 == -1 and g.l31 == 0


class TestErrors:
    def test_not_a_root(self):
        with pytest.raises(bk.NotARoot):
            bk.factor2(P("Dx^2 - Dy^2"), 2)

    def test_multiple_root(self):
        with pytest.raises(bk.MultipleRoot):
            bk.factor2(P("Dx^2 - 2*Dx*Dy + Dy^2"), 1)

    def test_leading_coefficient_zero(self):
        with pytest.raises(bk.LeadingCoefficientZero):
            bk.factor2(P("Dy^2 + Dx"), 0)

    def test_order(self):
        with pytest.raises(OrderUnsupported):
            bk.factor(P("Dx + 1"), 0)
        with pytest.raises(OrderUnsupported):
            bk.factor2(P("Dx^3"), 0)

    def test_no_simple_roots(self):
        with pytest.raises(bk.NoSimpleRoots):
            bk.factor_all(P("Dx^2 + Dy^2"))

    def test_errors_are_value_errors(self):
        assert issubclass(bk.NotARoot, ValueError) and issubclass(bk.NotARoot, bk.FactorError)


class TestConstantCoefficients:
    @given(st.integers(-9, 9), st.integers(-9, 9))
    def test_order2_condition(self, a10, a01):
        a00 = sp.Rational(a10**2 - a01**2, 4)
        left, right = bk.const_factor_condition2(a10, a01, a00)
        A = Lpdo({(2, 0): 1, (0, 2): -1, (1, 0): a10, (0, 1): a01, (0, 0): a00})
        assert compose(left, right) == A
        assert bk.const_factor_condition2(a10, a01, a00 + 1) is None

    def test_order2_mirror(self):
        assert bk.const_factor_condition2(4, 2, 3) == (P("Dx + Dy + 1"), P("Dx - Dy + 3"))
        assert bk.const_factor_condition2(2, 4, -3) == (P("Dx + Dy - 1"), P("Dx - Dy + 3"))
        assert bk.const_factor_condition2(2, 4, 3) is None

    def test_order3_displayed_formula(self):
        assert bk.const_factor_condition3(0, 0, 0, 0, 0, 0) == (P("Dx + Dy"), P("Dx*Dy"))
        assert bk.const_factor_condition3(0, 0, 0, 1, 2, 0) is None
        # conditions hold but the display does not expand back
        with pytest.raises(bk.PaperFormulaMismatch):
            bk.const_factor_condition3(1, 2, 0, 0, 2, 1)

    @given(*[st.integers(-4, 4)] * 4)
    def test_order3_by_expansion(self, a20, a11, a02, a10):
        g = a11 - a20 - a02
        a01, a00 = a10 + g * (a02 - a20), g * (a10 - g * a20)
        left, right = bk.const_factor3_by_expansion(a20, a11, a02, a10, a01, a00)
        target = P("Dx^2*Dy + Dx*Dy^2") + Lpdo(
            {(2, 0): a20, (1, 1): a11, (0, 2): a02, (1, 0): a10, (0, 1): a01, (0, 0): a00}
        )
        assert compose(left, right) == target
        assert bk.const_factor3_by_expansion(a20, a11, a02, a10, a01, a00 + 1) is None


class TestInvariants:
    @given(seeds)
    def test_gauge_invariance_order2(self, seed):
        A, roots = generic(seed, 2)
        phi = random_poly(random.Random(seed + 1), small)
        assert bk.verify_gauge_invariance(A, phi, roots[0]).passed

    @given(seeds)
    def test_gauge_invariance_order3(self, seed):
        A, roots = generic(seed, 3)
        phi = random_poly(random.Random(seed + 1), small)
        report = bk.verify_gauge_invariance(A, phi, roots[1])
        assert report.passed and len(report.checks) == 2

    def test_opaque_gauge(self):
        A = P("Dx^2 - Dy^2 + a(x,y)*Dx + b(x,y)*Dy + c(x,y)")
        assert bk.verify_gauge_invariance(A, FuncSymbol("phi"), 1).passed

    def test_hierarchy_counts(self):
        hs = bk.invariant_hierarchy(P("Dx^3 - Dx*Dy^2 + Dx"))
        assert [r.omega for r in hs.roots] == [1, 0, -1]
        assert hs.count() == 3 * 2 + 3 * 2
        out = hs.to_json()
        assert json.loads(json.dumps(out)) == out

    def test_hierarchy_order2(self):
        hs = bk.invariant_hierarchy(P("Dx^2 - Dy^2 + x*Dx"))
        assert set(hs.l2) == {1, -1} and hs.count() == 2

    def test_linear_invariants(self):
        phi = FuncSymbol("phi")
        a1, a2 = diff(phi, x), diff(phi, y)
        assert bk.linear_invariants(a1, a2, a1 + a2) == (0, 0, 0)
        hs = bk.invariant_hierarchy(P("Dx^2*Dy + Dx*Dy^2 + x*Dx^2 + (x + y)*Dx*Dy + y*Dy^2"))
        assert hs.linear is not None

    def test_product_form_gauge(self):
        assert bk.find_gauge_to_product_form(y, x, x + y) == x * y
        assert bk.find_gauge_to_product_form(x, x, 2 * x) is None
