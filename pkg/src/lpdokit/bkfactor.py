"""Factorization with remainder for operators of order 2 and 3.

An operator A is written as (Dx - w*Dy + p3) o R minus a remainder, where w
is a simple root of the characteristic polynomial and R has order n - 1.
The remainder is l2 for order 2 and l3*Dy + l31 for order 3:

    A = (Dx + p2*Dy + p3)(p4*Dx + p5*Dy + p6) - l2
    A = (Dx + p2*Dy + p3)(p4*Dx^2 + p5*Dx*Dy + p6*Dy^2 + p7*Dx + p8*Dy + p9) - l3*Dy - l31

with p1 = 1 and p2 = -w.  l2 and l3 are unchanged by gauge conjugation;
l31 moves by l3*phi_y.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import sympy as sp

from .lpdo import (
    Lpdo,
    LpdoError,
    OrderUnsupported,
    Root,
    char_poly,
    compose,
    difference_is_zero,
    gauge_conjugate,
    rational_roots,
    structurally_equal,
)
from .symexpr import DEFAULT_SEED, diff, integrate_poly, is_zero, normalize, x, y


class FactorError(LpdoError):
    """Base class for factorization failures."""


class NotARoot(FactorError, ValueError):
    pass


class MultipleRoot(FactorError, ValueError):
    """P'(w) vanishes; this case needs a Riccati equation and is not handled."""


class LeadingCoefficientZero(FactorError, ValueError):
    pass


class NoSimpleRoots(FactorError, ValueError):
    pass


class PaperFormulaMismatch(FactorError, ArithmeticError):
    """A closed-form candidate did not survive expansion."""


def _n(e):
    return normalize(e, rational=True)


def _L(f, omega):
    return _n(diff(f, x) - omega * diff(f, y))


def _operator_text(A: Lpdo) -> str:
    from .grammar import operator_to_text

    return operator_to_text(A)


def _expr_text(e) -> str:
    from .grammar import to_text

    return to_text(e)


@dataclass(frozen=True)
class Factorization2:
    omega: sp.Expr
    p: tuple
    l2: sp.Expr
    exact: bool
    source: Lpdo = field(repr=False, compare=False, default=None)

    @property
    def left(self) -> Lpdo:
        p1, p2, p3 = self.p[:3]
        return Lpdo({(1, 0): p1, (0, 1): p2, (0, 0): p3})

    @property
    def right(self) -> Lpdo:
        p4, p5, p6 = self.p[3:]
        return Lpdo({(1, 0): p4, (0, 1): p5, (0, 0): p6})

    def remainder_operator(self) -> Lpdo:
        return Lpdo.scalar(self.l2)

    def recomposed(self) -> Lpdo:
        """left o right - l2; equals the input operator."""
        return compose(self.left, self.right, rational=True) - self.remainder_operator()

    def to_json(self) -> dict:
        return {
            "omega": _expr_text(self.omega),
            "factors": [_operator_text(self.left), _operator_text(self.right)],
            "remainders": {"l2": _expr_text(self.l2)},
            "exact": self.exact,
        }


@dataclass(frozen=True)
class Factorization3:
    omega: sp.Expr
    p: tuple
    l3: sp.Expr
    l31: sp.Expr
    exact: bool
    source: Lpdo = field(repr=False, compare=False, default=None)

    @property
    def left(self) -> Lpdo:
        p1, p2, p3 = self.p[:3]
        return Lpdo({(1, 0): p1, (0, 1): p2, (0, 0): p3})

    @property
    def right(self) -> Lpdo:
        p4, p5, p6, p7, p8, p9 = self.p[3:]
        return Lpdo({(2, 0): p4, (1, 1): p5, (0, 2): p6, (1, 0): p7, (0, 1): p8, (0, 0): p9})

    def remainder_operator(self) -> Lpdo:
        return Lpdo({(0, 1): self.l3, (0, 0): self.l31})

    def recomposed(self) -> Lpdo:
        return compose(self.left, self.right, rational=True) - self.remainder_operator()

    def to_json(self) -> dict:
        return {
            "omega": _expr_text(self.omega),
            "factors": [_operator_text(self.left), _operator_text(self.right)],
            "remainders": {"l3": _expr_text(self.l3), "l31": _expr_text(self.l31)},
            "exact": self.exact,
        }


def _check_root(A: Lpdo, omega, order: int, seed: int, trials):
    if A.order != order:
        raise OrderUnsupported(f"expected an operator of order {order}, got {A.order}")
    cp = char_poly(A)
    if cp.degree == 0:
        raise LeadingCoefficientZero("characteristic polynomial is constant; apply normalize_leading first")
    full = sum(A[(j, order - j)] * omega**j for j in range(order + 1))
    if not is_zero(full, seed=seed, trials=trials):
        raise NotARoot(f"{omega} is not a root of the characteristic polynomial")
    deriv = sum(j * A[(j, order - j)] * omega ** (j - 1) for j in range(1, order + 1))
    deriv = _n(deriv)
    if is_zero(deriv, seed=seed, trials=trials):
        raise MultipleRoot(f"{omega} is a multiple root")
    return deriv


def factor2(A: Lpdo, omega, *, seed: int = DEFAULT_SEED, trials: int | None = None) -> Factorization2:
    omega = _n(omega)
    dP = _check_root(A, omega, 2, seed, trials)
    a20, a11 = A[(2, 0)], A[(1, 1)]
    a10, a01, a00 = A[(1, 0)], A[(0, 1)], A[(0, 0)]
    p4 = a20
    p5 = _n(a20 * omega + a11)
    p3 = _n((omega * a10 + a01 - omega * _L(a20, omega) - _L(p5, omega)) / dP)
    p6 = _n((p5 * (a10 - _L(a20, omega)) - a20 * (a01 - _L(p5, omega))) / dP)
    l2 = _n(_L(p6, omega) + p3 * p6 - a00)
    return Factorization2(
        omega=omega,
        p=(sp.S.One, -omega, p3, p4, p5, p6),
        l2=l2,
        exact=is_zero(l2, seed=seed, trials=trials),
        source=A,
    )


def factor3(A: Lpdo, omega, *, seed: int = DEFAULT_SEED, trials: int | None = None) -> Factorization3:
    omega = _n(omega)
    D = _check_root(A, omega, 3, seed, trials)
    a30, a21, a12 = A[(3, 0)], A[(2, 1)], A[(1, 2)]
    a20, a11, a02 = A[(2, 0)], A[(1, 1)], A[(0, 2)]
    a10, a01, a00 = A[(1, 0)], A[(0, 1)], A[(0, 0)]
    p2 = -omega
    p4 = a30
    p5 = _n(a30 * omega + a21)
    p6 = _n(a30 * omega**2 + a21 * omega + a12)
    r1 = _n(a20 - _L(p4, omega))
    r2 = _n(a11 - _L(p5, omega))
    r3 = _n(a02 - _L(p6, omega))
    # second-order part of the product, solved for (p3, p7, p8)
    p3 = _n((omega**2 * r1 + omega * r2 + r3) / D)
    p7 = _n(r1 - a30 * p3)
    p8 = _n(omega * r1 + r2 - (2 * a30 * omega + a21) * p3)
    p9 = _n(a10 - _L(p7, omega) - p3 * p7)
    l3 = _n(_L(p8, omega) + p3 * p8 + p2 * p9 - a01)
    l31 = _n(_L(p9, omega) + p3 * p9 - a00)
    exact = is_zero(l3, seed=seed, trials=trials) and is_zero(l31, seed=seed, trials=trials)
    return Factorization3(
        omega=omega,
        p=(sp.S.One, p2, p3, p4, p5, p6, p7, p8, p9),
        l3=l3,
        l31=l31,
        exact=exact,
        source=A,
    )


def factor(A: Lpdo, omega, **kw):
    if A.order == 2:
        return factor2(A, omega, **kw)
    if A.order == 3:
        return factor3(A, omega, **kw)
    raise OrderUnsupported(f"factorization needs order 2 or 3, got {A.order}")


def simple_rational_roots(A: Lpdo) -> list[Root]:
    return [r for r in rational_roots(char_poly(A)) if r.simple]


def factor_all(A: Lpdo, **kw) -> list:
    """Factorizations at every simple rational root."""
    roots = simple_rational_roots(A)
    if not roots:
        raise NoSimpleRoots("characteristic polynomial has no simple rational root")
    return [factor(A, r.value, **kw) for r in roots]


# ------------------------------------------------------ constant coefficients


def _const_op(coeffs: dict) -> Lpdo:
    return Lpdo({jk: sp.Rational(v) for jk, v in coeffs.items()})


def const_factor_condition2(a10, a01, a00) -> tuple[Lpdo, Lpdo] | None:
    """Linear factors of Dx^2 - Dy^2 + a10*Dx + a01*Dy + a00, or None.

    Both readings of the closed form are tried; only a pair whose product
    expands back to the input is returned.
    """
    a10, a01, a00 = (sp.Rational(v) for v in (a10, a01, a00))
    target = _const_op({(2, 0): 1, (0, 2): -1, (1, 0): a10, (0, 1): a01, (0, 0): a00})
    for s, t in ((a10, a01), (a01, a10)):
        left = _const_op({(1, 0): 1, (0, 1): 1, (0, 0): (s - t) / 2})
        right = _const_op({(1, 0): 1, (0, 1): -1, (0, 0): (s + t) / 2})
        if compose(left, right) == target:
            return left, right
    return None


def const_factor_condition3(a20, a11, a02, a10, a01, a00) -> tuple[Lpdo, Lpdo] | None:
    """The closed-form factorization of Dx^2*Dy + Dx*Dy^2 + lower terms.

    Returns None when the sufficient conditions fail.  When they hold, the
    displayed factors are expanded; a mismatch raises PaperFormulaMismatch.
    See :func:`const_factor3_by_expansion` for the corrected formula.
    """
    a20, a11, a02, a10, a01, a00 = (sp.Rational(v) for v in (a20, a11, a02, a10, a01, a00))
    g = a11 - a20 - a02
    if a01 != a10 + (a20 + 1) * g or a00 != g * (a10 + a20 * g):
        return None
    left = _const_op({(1, 0): 1, (0, 1): 1, (0, 0): g})
    right = _const_op({(1, 1): 1, (1, 0): -a20, (0, 1): a20 - a11 + g, (0, 0): a10 + a20 * g})
    target = _cubic(a20, a11, a02, a10, a01, a00)
    if compose(left, right) != target:
        raise PaperFormulaMismatch("displayed cubic factorization does not expand to the input")
    return left, right


def _cubic(a20, a11, a02, a10, a01, a00) -> Lpdo:
    return _const_op(
        {(2, 1): 1, (1, 2): 1, (2, 0): a20, (1, 1): a11, (0, 2): a02, (1, 0): a10, (0, 1): a01, (0, 0): a00}
    )


def const_factor3_by_expansion(a20, a11, a02, a10, a01, a00) -> tuple[Lpdo, Lpdo] | None:
    """(Dx + Dy + g)(Dx*Dy + a20*Dx + a02*Dy + a10 - g*a20) with g = a11 - a20 - a02.

    Valid iff a01 = a10 + g*(a02 - a20) and a00 = g*(a10 - g*a20).
    """
    a20, a11, a02, a10, a01, a00 = (sp.Rational(v) for v in (a20, a11, a02, a10, a01, a00))
    g = a11 - a20 - a02
    left = _const_op({(1, 0): 1, (0, 1): 1, (0, 0): g})
    right = _const_op({(1, 1): 1, (1, 0): a20, (0, 1): a02, (0, 0): a10 - g * a20})
    if compose(left, right) == _cubic(a20, a11, a02, a10, a01, a00):
        return left, right
    return None


# ------------------------------------------------------------- hierarchies


@dataclass
class RootInvariants:
    omega: sp.Expr
    l3: sp.Expr
    l31: sp.Expr
    l2: dict = field(default_factory=dict)  # root of the right factor -> l2


@dataclass
class InvariantSet:
    order: int
    l2: dict = field(default_factory=dict)  # order 2: root -> l2
    roots: list = field(default_factory=list)  # order 3: RootInvariants
    linear: tuple | None = None  # (l21, l32, l31) for Dx*Dy*(Dx + Dy) principal parts

    def count(self) -> int:
        if self.order == 2:
            return len(self.l2)
        return sum(2 + len(r.l2) for r in self.roots)

    def to_json(self) -> dict:
        out: dict = {"order": self.order}
        if self.order == 2:
            out["l2"] = {_expr_text(w): _expr_text(v) for w, v in self.l2.items()}
        else:
            out["roots"] = [
                {
                    "omega": _expr_text(r.omega),
                    "l3": _expr_text(r.l3),
                    "l31": _expr_text(r.l31),
                    "l2": {_expr_text(w): _expr_text(v) for w, v in r.l2.items()},
                }
                for r in self.roots
            ]
        if self.linear is not None:
            out["linear"] = dict(zip(("l21", "l32", "l31"), map(_expr_text, self.linear)))
        return out


def _roots_or_none(coeffs) -> list:
    if not all(sp.sympify(c).is_Rational for c in coeffs):
        return []
    from .lpdo import CharPoly

    trimmed = list(coeffs)
    while len(trimmed) > 1 and trimmed[0] == 0:
        trimmed.pop(0)
    if len(trimmed) < 2:
        return []
    return [r.value for r in rational_roots(CharPoly(tuple(trimmed))) if r.simple]


def invariant_hierarchy(A: Lpdo, roots=None, *, seed: int = DEFAULT_SEED, trials: int | None = None) -> InvariantSet:
    """General invariants for every simple root, down through the right factors."""
    if A.order == 2:
        ws = roots if roots is not None else [r.value for r in simple_rational_roots(A)]
        if not ws:
            raise NoSimpleRoots("characteristic polynomial has no simple rational root")
        return InvariantSet(order=2, l2={w: factor2(A, w, seed=seed, trials=trials).l2 for w in ws})
    if A.order != 3:
        raise OrderUnsupported(f"hierarchy needs order 2 or 3, got {A.order}")
    ws = roots if roots is not None else [r.value for r in simple_rational_roots(A)]
    if not ws:
        raise NoSimpleRoots("characteristic polynomial has no simple rational root")
    out = InvariantSet(order=3)
    for w in ws:
        f = factor3(A, w, seed=seed, trials=trials)
        entry = RootInvariants(omega=f.omega, l3=f.l3, l31=f.l31)
        R = f.right
        if R.order == 2:
            for w2 in _roots_or_none(f.p[3:6]):
                try:
                    entry.l2[w2] = factor2(R, w2, seed=seed, trials=trials).l2
                except FactorError:
                    continue
        out.roots.append(entry)
    if _principal_is_dxdy_dt(A):
        a2, a1 = A[(2, 0)], A[(0, 2)]
        out.linear = linear_invariants(a1, a2, _n(A[(1, 1)] - a1 - a2))
    return out


def _principal_is_dxdy_dt(A: Lpdo) -> bool:
    return (
        normalize(A[(2, 1)] - 1) == 0
        and normalize(A[(1, 2)] - 1) == 0
        and A[(3, 0)] == 0
        and A[(0, 3)] == 0
    )


def linear_invariants(a1, a2, a3) -> tuple:
    """(l21, l32, l31) of Dx*Dy*(Dx + Dy) + a2*Dx^2 + (a1 + a2 + a3)*Dx*Dy + a1*Dy^2 + ..."""
    l21 = _n(diff(a2, x) - diff(a1, y))
    l32 = _n(diff(a3, y) - diff(a2, x) - diff(a2, y))
    l31 = _n(diff(a3, x) - diff(a1, x) - diff(a1, y))
    return l21, l32, l31


def find_gauge_to_product_form(a1, a2, a3, *, seed: int = DEFAULT_SEED) -> sp.Expr | None:
    """phi with phi_x = a1, phi_y = a2 (and a3 = a1 + a2), or None."""
    l21, _, _ = linear_invariants(a1, a2, a3)
    if not is_zero(l21, seed=seed) or not is_zero(_n(a3 - a1 - a2), seed=seed):
        return None
    first = integrate_poly(a1, x)
    phi = _n(first + integrate_poly(_n(a2 - diff(first, y)), y))
    return phi


# ------------------------------------------------------------ gauge checks


@dataclass
class GaugeReport:
    order: int
    checks: list = field(default_factory=list)  # (name, passed)

    @property
    def passed(self) -> bool:
        return all(ok for _, ok in self.checks)

    def to_json(self) -> dict:
        return {"order": self.order, "checks": [{"name": n, "pass": ok} for n, ok in self.checks], "pass": self.passed}


def verify_gauge_invariance(
    A: Lpdo, phi, omega, *, seed: int = DEFAULT_SEED, trials: int | None = None
) -> GaugeReport:
    """Compare remainders of A and of e^-phi o A o e^phi at the same root."""
    B = gauge_conjugate(A, phi)
    report = GaugeReport(order=A.order)
    if A.order == 2:
        f, g = factor2(A, omega, seed=seed, trials=trials), factor2(B, omega, seed=seed, trials=trials)
        report.checks.append(("l2 invariant", is_zero(g.l2 - f.l2, seed=seed, trials=trials)))
    elif A.order == 3:
        f, g = factor3(A, omega, seed=seed, trials=trials), factor3(B, omega, seed=seed, trials=trials)
        report.checks.append(("l3 invariant", is_zero(g.l3 - f.l3, seed=seed, trials=trials)))
        shift = _n(g.l31 - f.l31 - f.l3 * diff(phi, y))
        report.checks.append(("l31 shifts by l3*phi_y", is_zero(shift, seed=seed, trials=trials)))
    else:
        raise OrderUnsupported(f"gauge check needs order 2 or 3, got {A.order}")
    return report


def recomposition_holds(f, A: Lpdo | None = None, *, seed: int = DEFAULT_SEED, trials: int | None = None) -> bool:
    A = A if A is not None else f.source
    return difference_is_zero(f.recomposed(), A, seed=seed, trials=trials)


def recomposition_structural(f, A: Lpdo | None = None) -> bool:
    A = A if A is not None else f.source
    return structurally_equal(f.recomposed(), A)


__all__ = [
    "FactorError",
    "Factorization2",
    "Factorization3",
    "GaugeReport",
    "InvariantSet",
    "LeadingCoefficientZero",
    "MultipleRoot",
    "NoSimpleRoots",
    "NotARoot",
    "PaperFormulaMismatch",
    "RootInvariants",
    "const_factor3_by_expansion",
    "const_factor_condition2",
    "const_factor_condition3",
    "factor",
    "factor2",
    "factor3",
    "factor_all",
    "find_gauge_to_product_form",
    "invariant_hierarchy",
    "linear_invariants",
    "recomposition_holds",
    "recomposition_structural",
    "simple_rational_roots",
    "verify_gauge_invariance",
]
