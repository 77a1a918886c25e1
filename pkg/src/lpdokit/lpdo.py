"""Bivariate linear partial differential operators sum a_jk Dx^j Dy^k."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import comb
from typing import Iterable, Mapping

import sympy as sp

from .symexpr import (
    Expr,
    FuncSymbol,
    NotPolynomial,
    diff_xy,
    integrate_poly,
    is_zero,
    normalize,
    symbols_of,
    x,
    y,
)

MAX_SHEAR = 8


class LpdoError(Exception):
    """Base class for operator-level errors."""


class OrderUnsupported(LpdoError, ValueError):
    pass


class NonConstantCoefficients(LpdoError, ValueError):
    pass


class NotNormalForm(LpdoError, ValueError):
    pass


class CannotNormalize(LpdoError, ValueError):
    pass


Index = tuple[int, int]


class Lpdo:
    """Immutable operator; coefficients are normalized and zeros dropped.

    ``Lpdo({(1, 1): 1, (1, 0): x, (0, 0): 2})`` is Dx*Dy + x*Dx + 2.
    ``A * B`` is composition, ``A + B`` the sum.
    """

    __slots__ = ("_c",)

    def __init__(self, coeffs: Mapping[Index, object] | None = None, *, rational: bool = False):
        c = {}
        for (j, kk), v in (coeffs or {}).items():
            if j < 0 or kk < 0:
                raise ValueError("derivative indices must be nonnegative")
            v = normalize(v, rational=rational)
            if v != 0:
                c[(j, kk)] = v
        self._c = dict(sorted(c.items(), key=lambda t: (-(t[0][0] + t[0][1]), -t[0][0])))

    @classmethod
    def scalar(cls, s) -> "Lpdo":
        return cls({(0, 0): s})

    @classmethod
    def dx(cls) -> "Lpdo":
        return cls({(1, 0): 1})

    @classmethod
    def dy(cls) -> "Lpdo":
        return cls({(0, 1): 1})

    @property
    def coeffs(self) -> dict:
        return dict(self._c)

    def __getitem__(self, jk: Index) -> Expr:
        return self._c.get(jk, sp.S.Zero)

    def items(self):
        return self._c.items()

    @property
    def order(self) -> int:
        if not self._c:
            return -1
        return max(j + kk for j, kk in self._c)

    def is_zero_operator(self) -> bool:
        return not self._c

    def principal(self) -> dict:
        n = self.order
        return {jk: v for jk, v in self._c.items() if sum(jk) == n}

    def map_coeffs(self, f) -> "Lpdo":
        return Lpdo({jk: f(v) for jk, v in self._c.items()})

    def simplified(self) -> "Lpdo":
        """Same operator with gcd-cancelled coefficients."""
        return Lpdo(self._c, rational=True)

    def __add__(self, other):
        return add(self, _as_op(other))

    __radd__ = __add__

    def __neg__(self):
        return scale(self, -1)

    def __sub__(self, other):
        return add(self, -_as_op(other))

    def __rsub__(self, other):
        return add(_as_op(other), -self)

    def __mul__(self, other):
        return compose(self, _as_op(other))

    def __rmul__(self, other):
        return compose(_as_op(other), self)

    def __pow__(self, n: int):
        out = Lpdo.scalar(1)
        for _ in range(n):
            out = compose(out, self)
        return out

    def __eq__(self, other):
        if not isinstance(other, Lpdo):
            return NotImplemented
        return self._c == other._c

    def __hash__(self):
        return hash(tuple(self._c.items()))

    def __repr__(self):
        from .grammar import operator_to_text

        return f"Lpdo({operator_to_text(self)!r})"

    def __str__(self):
        from .grammar import operator_to_text

        return operator_to_text(self)


def _as_op(v) -> Lpdo:
    return v if isinstance(v, Lpdo) else Lpdo.scalar(v)


def add(A: Lpdo, B: Lpdo) -> Lpdo:
    out = dict(A.items())
    for jk, v in B.items():
        out[jk] = out.get(jk, 0) + v
    return Lpdo(out)


def scale(A: Lpdo, s) -> Lpdo:
    """Left multiplication by the scalar function ``s``."""
    return Lpdo({jk: s * v for jk, v in A.items()})


def compose(A: Lpdo, B: Lpdo, *, rational: bool = False) -> Lpdo:
    """A∘B by the generalized Leibniz rule."""
    out: dict[Index, list] = {}
    derivs: dict = {}
    for (j, kk), a in A.items():
        for (l, m), b in B.items():
            for r in range(j + 1):
                for s in range(kk + 1):
                    key = (l, m, r, s)
                    if key not in derivs:
                        derivs[key] = diff_xy(b, r, s)
                    db = derivs[key]
                    if db == 0:
                        continue
                    out.setdefault((j - r + l, kk - s + m), []).append(comb(j, r) * comb(kk, s) * a * db)
    return Lpdo({jk: sp.Add(*terms) for jk, terms in out.items()}, rational=rational)


def apply(A: Lpdo, psi) -> Expr:
    return normalize(sp.Add(*[a * diff_xy(psi, j, kk) for (j, kk), a in A.items()]))


def difference_is_zero(A: Lpdo, B: Lpdo, seed=None, trials=None) -> bool:
    """Coefficient-wise ``is_zero`` of A - B."""
    kw = {} if seed is None else {"seed": seed}
    keys = set(dict(A.items())) | set(dict(B.items()))
    return all(is_zero(A[jk] - B[jk], trials=trials, **kw) for jk in keys)


def structurally_equal(A: Lpdo, B: Lpdo) -> bool:
    keys = set(dict(A.items())) | set(dict(B.items()))
    return all(normalize(A[jk] - B[jk], rational=True) == 0 for jk in keys)


# ------------------------------------------------------ characteristic poly


@dataclass(frozen=True)
class CharPoly:
    """P_n(w) = sum_{j+k=n} a_jk w^j, coefficients highest degree first."""

    coeffs: tuple

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def __call__(self, w, *, rational: bool = True) -> Expr:
        return normalize(sum(c * w ** (self.degree - i) for i, c in enumerate(self.coeffs)), rational=rational)

    def derivative(self, w, *, rational: bool = True) -> Expr:
        n = self.degree
        return normalize(sum((n - i) * c * w ** (n - i - 1) for i, c in enumerate(self.coeffs[:-1])), rational=rational)

    def is_constant(self) -> bool:
        return all(sp.sympify(c).is_Rational for c in self.coeffs)


def char_poly(A: Lpdo) -> CharPoly:
    n = A.order
    if n not in (2, 3):
        raise OrderUnsupported(f"characteristic polynomial needs order 2 or 3, got {n}")
    coeffs = [A[(j, n - j)] for j in range(n, -1, -1)]
    while len(coeffs) > 1 and normalize(coeffs[0]) == 0:
        coeffs.pop(0)
    return CharPoly(tuple(coeffs))


@dataclass(frozen=True)
class Root:
    value: Expr
    multiplicity: int

    @property
    def simple(self) -> bool:
        return self.multiplicity == 1


def _divisors(n: int) -> list[int]:
    n = abs(n)
    return [d for d in range(1, n + 1) if n % d == 0]


def _horner(coeffs: list[Fraction], r: Fraction) -> Fraction:
    acc = Fraction(0)
    for c in coeffs:
        acc = acc * r + c
    return acc


def _deflate(coeffs: list[Fraction], r: Fraction) -> list[Fraction]:
    out = []
    acc = Fraction(0)
    for c in coeffs[:-1]:
        acc = acc * r + c
        out.append(acc)
    return out


def rational_roots(p: CharPoly) -> list[Root]:
    """All rational roots with multiplicities (rational root theorem)."""
    if not p.is_constant():
        raise NonConstantCoefficients("characteristic polynomial has non-constant coefficients; supply the root")
    coeffs = [Fraction(int(sp.Rational(c).p), int(sp.Rational(c).q)) for c in p.coeffs]
    roots: dict[Fraction, int] = {}
    while len(coeffs) > 1 and coeffs[-1] == 0:
        roots[Fraction(0)] = roots.get(Fraction(0), 0) + 1
        coeffs.pop()
    while len(coeffs) > 1:
        lcm = 1
        for c in coeffs:
            lcm = lcm * c.denominator // _gcd(lcm, c.denominator)
        ints = [int(c * lcm) for c in coeffs]
        found = None
        for q in _divisors(ints[0]):
            for pp in _divisors(ints[-1]):
                for cand in (Fraction(pp, q), Fraction(-pp, q)):
                    if _horner(coeffs, cand) == 0:
                        found = cand
                        break
                if found is not None:
                    break
            if found is not None:
                break
        if found is None:
            break
        roots[found] = roots.get(found, 0) + 1
        coeffs = _deflate(coeffs, found)
    return [Root(sp.Rational(r.numerator, r.denominator), m) for r, m in sorted(roots.items(), reverse=True)]


def _gcd(a: int, b: int) -> int:
    while b:
        a, b = b, a % b
    return abs(a)


def all_roots_rational(p: CharPoly) -> bool:
    return sum(r.multiplicity for r in rational_roots(p)) == p.degree


# ------------------------------------------------------------------ gauges


def gauge_conjugate(A: Lpdo, phi) -> Lpdo:
    """e^{-phi} ∘ A ∘ e^{phi}.

    With f = e^phi this maps L2 to L1 in f L1 = L2 ∘ f, so for the hyperbolic
    form a -> a + phi_y, b -> b + phi_x.
    """
    phi = normalize(phi)
    if phi == 0:
        return A
    dx_shift = Lpdo({(1, 0): 1, (0, 0): diff_xy(phi, 1, 0)})
    dy_shift = Lpdo({(0, 1): 1, (0, 0): diff_xy(phi, 0, 1)})
    xpow = {0: Lpdo.scalar(1)}
    ypow = {0: Lpdo.scalar(1)}
    out = Lpdo()
    for (j, kk), a in A.items():
        for table, base, n in ((xpow, dx_shift, j), (ypow, dy_shift, kk)):
            for i in range(1, n + 1):
                if i not in table:
                    table[i] = compose(table[i - 1], base)
        out = out + compose(Lpdo.scalar(a), compose(xpow[j], ypow[kk]))
    return out


def hyperbolic_parts(A: Lpdo) -> tuple[Expr, Expr, Expr]:
    """(a, b, c) of Dx*Dy + a*Dx + b*Dy + c; raises NotNormalForm otherwise."""
    extra = set(dict(A.items())) - {(1, 1), (1, 0), (0, 1), (0, 0)}
    if extra or normalize(A[(1, 1)] - 1) != 0:
        raise NotNormalForm("operator is not Dx*Dy + a*Dx + b*Dy + c")
    return A[(1, 0)], A[(0, 1)], A[(0, 0)]


def reduce_form(A: Lpdo, kill: str = "a") -> tuple[Lpdo, Expr]:
    """Gauge away the Dx coefficient (kill='a') or the Dy coefficient (kill='b')."""
    a, b, _ = hyperbolic_parts(A)
    if kill == "a":
        phi = -integrate_poly(a, y)
    elif kill == "b":
        phi = -integrate_poly(b, x)
    else:
        raise ValueError("kill must be 'a' or 'b'")
    return gauge_conjugate(A, phi), phi


# -------------------------------------------------------- change of variables


def _swap_expr(e) -> Expr:
    e = sp.sympify(e)
    mapping = {x: y, y: x}
    for s in symbols_of(e):
        if isinstance(s, FuncSymbol):
            dep = {"x": "y", "y": "x", "xy": "xy"}[s.depends]
            mapping[s] = FuncSymbol(s.fname, s.dy, s.dx, dep)
    return normalize(e.xreplace(mapping))


def swap_variables(A: Lpdo) -> Lpdo:
    """Exchange the roles of x and y (opaque functions are relabelled accordingly)."""
    return Lpdo({(kk, j): _swap_expr(v) for (j, kk), v in A.items()})


def _has_opaque(e) -> bool:
    return any(isinstance(s, FuncSymbol) for s in symbols_of(e))


def _shear(A: Lpdo, lam) -> Lpdo:
    # new coordinates X = x + lam*y, Y = y:  Dx -> DX, Dy -> lam*DX + DY
    dxn = Lpdo.dx()
    dyn = Lpdo({(1, 0): lam, (0, 1): 1})
    out = Lpdo()
    for (j, kk), v in A.items():
        coeff = normalize(sp.sympify(v).xreplace({x: x - lam * y}))
        out = out + compose(Lpdo.scalar(coeff), compose(dxn**j, dyn**kk))
    return out


@dataclass(frozen=True)
class ChangeOfVariables:
    """Record of normalize_leading: optional x<->y swap, then X = x + shear*y."""

    swap: bool = False
    shear: int = 0

    @property
    def is_identity(self) -> bool:
        return not self.swap and self.shear == 0

    def push_forward(self, A: Lpdo) -> Lpdo:
        if self.swap:
            A = swap_variables(A)
        if self.shear:
            A = _shear(A, self.shear)
        return A

    def pull_back(self, A: Lpdo) -> Lpdo:
        if self.shear:
            A = _shear(A, -self.shear)
        if self.swap:
            A = swap_variables(A)
        return A


def normalize_leading(A: Lpdo) -> tuple[Lpdo, ChangeOfVariables]:
    """Make the pure Dx^n coefficient nonzero by a swap or a constant shear."""
    n = A.order
    if n not in (2, 3):
        raise OrderUnsupported(f"normalize_leading needs order 2 or 3, got {n}")
    if not is_zero(A[(n, 0)]):
        return A, ChangeOfVariables()
    if not is_zero(A[(0, n)]):
        record = ChangeOfVariables(swap=True)
        return record.push_forward(A), record
    principal = [A[(j, n - j)] for j in range(n + 1)]
    if not all(sp.sympify(c).is_Rational for c in principal):
        raise CannotNormalize("principal coefficients are not constant; supply a change of variables")
    if any(_has_opaque(v) for _, v in A.items()):
        raise CannotNormalize("shear of opaque coefficient functions is not representable")
    for lam in range(1, MAX_SHEAR + 1):
        # coefficient of DX^n after the shear is sum_k a_{n-k,k} lam^k
        lead = sum(A[(n - kk, kk)] * lam**kk for kk in range(n + 1))
        if normalize(lead) != 0:
            record = ChangeOfVariables(shear=lam)
            return record.push_forward(A), record
    raise CannotNormalize(f"no shear up to {MAX_SHEAR} makes the leading coefficient nonzero")


def from_terms(terms: Iterable[tuple[Index, object]]) -> Lpdo:
    out: dict = {}
    for jk, v in terms:
        out[jk] = out.get(jk, 0) + v
    return Lpdo(out)


__all__ = [
    "CannotNormalize",
    "ChangeOfVariables",
    "CharPoly",
    "Lpdo",
    "LpdoError",
    "NonConstantCoefficients",
    "NotNormalForm",
    "NotPolynomial",
    "OrderUnsupported",
    "Root",
    "add",
    "all_roots_rational",
    "apply",
    "char_poly",
    "compose",
    "difference_is_zero",
    "gauge_conjugate",
    "hyperbolic_parts",
    "normalize_leading",
    "rational_roots",
    "reduce_form",
    "scale",
    "structurally_equal",
    "swap_variables",
]
