"""Exact symbolic scalars over the variables x, y.

Expressions are plain sympy trees built from rational constants, the
symbols ``x y z k`` (and any other bare constant symbol), opaque function
atoms :class:`FuncSymbol` and the inert constructors :class:`Exp` and
:class:`Log`.  sympy supplies construction, expansion and gcd cancellation;
differentiation, substitution, evaluation and the zero test live here.

Canonical form
--------------
``normalize`` brings an expression to a single quotient ``N/D`` with ``N``
and ``D`` fully expanded, every product of exponentials merged into one
``Exp`` per term and no monomial ``Exp`` factor left in ``D``.  Terms and
factors are ordered by sympy's ``default_sort_key`` (node kind, then
children, then constant value), so structural equality of normalized trees
is plain ``==``.  Quotients are not gcd-reduced unless ``rational=True``.

``formal=True`` additionally rewrites ``exp(log e) -> e``,
``log(exp e) -> e``, ``log(e1*e2) -> log e1 + log e2`` and
``log(e^n) -> n log e``; these assume positivity and are off by default.
"""

from __future__ import annotations

import os
import random
from fractions import Fraction
from functools import reduce
from math import factorial
from typing import Mapping, Union

import mpmath
import sympy as sp
from sympy import Add, Mul, Pow, S, Symbol
from sympy.core.function import Function
from sympy.polys.domains import QQ
from sympy.polys.rings import ring

Expr = sp.Expr

x, y, z, k = sp.symbols("x y z k")
VARIABLES = (x, y)

DEFAULT_SEED = 20240517
DEFAULT_TRIALS = 16
_COEFF_RANGE = 10**6
_TRANSCENDENTAL_COEFF_RANGE = 9
_NUMERIC_DPS = 60
_NUMERIC_TOL = mpmath.mpf(10) ** -35


class SymexprError(Exception):
    """Base class for errors raised by the scalar engine."""


class DivisionByZero(SymexprError, ZeroDivisionError):
    pass


class PoleError(SymexprError, ZeroDivisionError):
    pass


class UnboundSymbol(SymexprError, KeyError):
    pass


class TranscendentalValue(SymexprError, ValueError):
    """exp/log of a non-trivial argument has no exact rational value."""


class Inconclusive(SymexprError, RuntimeError):
    pass


class NotPolynomial(SymexprError, ValueError):
    pass


def _suffix(dx: int, dy: int) -> str:
    return "x" * dx + "y" * dy


class FuncSymbol(Symbol):
    """Opaque function ``name(x, y)`` differentiated ``dx`` times in x and ``dy`` in y.

    ``depends`` lists the variables the function actually depends on, so
    ``FuncSymbol("X", depends="x")`` is a function of x alone and its
    y-derivative vanishes.  Mixed partials commute because (dx, dy) is the
    only derivative record.
    """

    def __new__(cls, fname: str, dx: int = 0, dy: int = 0, depends: str = "xy"):
        if dx < 0 or dy < 0:
            raise ValueError("derivative orders must be nonnegative")
        if depends not in ("x", "y", "xy"):
            raise ValueError("depends must be 'x', 'y' or 'xy'")
        if (dx and "x" not in depends) or (dy and "y" not in depends):
            raise ValueError(f"{fname} does not depend on the differentiated variable")
        label = fname + ("_" + _suffix(dx, dy) if dx or dy else "")
        if depends != "xy":
            label += "[" + depends + "]"
        obj = Symbol.__new__(cls, label)
        obj.fname = fname
        obj.dx = dx
        obj.dy = dy
        obj.depends = depends
        return obj

    def derivative(self, var: Symbol) -> Expr:
        if var == x and "x" in self.depends:
            return FuncSymbol(self.fname, self.dx + 1, self.dy, self.depends)
        if var == y and "y" in self.depends:
            return FuncSymbol(self.fname, self.dx, self.dy + 1, self.depends)
        return S.Zero


def func(name: str, dx: int = 0, dy: int = 0, depends: str = "xy") -> FuncSymbol:
    return FuncSymbol(name, dx, dy, depends)


class Exp(Function):
    """Inert exponential; never simplified against :class:`Log` outside formal mode."""

    nargs = 1

    @classmethod
    def eval(cls, arg):
        if arg is S.Zero:
            return S.One
        return None


class Log(Function):
    """Inert natural logarithm."""

    nargs = 1

    @classmethod
    def eval(cls, arg):
        if arg is S.One:
            return S.Zero
        return None


def default_trials() -> int:
    raw = os.environ.get("LPDO_ZERO_TRIALS")
    if raw:
        return max(1, int(raw))
    return DEFAULT_TRIALS


# ---------------------------------------------------------------- normalize


def _is_exp_factor(f) -> bool:
    return isinstance(f, Exp) or (isinstance(f, Pow) and isinstance(f.base, Exp) and f.exp.is_Integer)


def _exp_arg(f) -> Expr:
    if isinstance(f, Exp):
        return f.args[0]
    return f.exp * f.base.args[0]


def _merge_term(term, rational, formal):
    factors = Mul.make_args(term)
    args = [_exp_arg(f) for f in factors if _is_exp_factor(f)]
    if not args:
        return term
    if len(args) == 1 and any(isinstance(f, Exp) for f in factors):
        return term
    rest = [f for f in factors if not _is_exp_factor(f)]
    merged = normalize(Add(*args), rational=rational, formal=formal)
    return Mul(*rest, Exp(merged))


def _merge_exps(e, rational, formal):
    if not e.has(Exp):
        return e
    return Add(*[_merge_term(t, rational, formal) for t in Add.make_args(e)])


def _log_parts(e, formal_rational) -> Expr:
    """Formal-mode logarithm of an already normalized expression."""
    if isinstance(e, Exp):
        return e.args[0]
    num, den = sp.fraction(e)
    if den != 1:
        return _log_parts(num, formal_rational) - _log_parts(den, formal_rational)
    if isinstance(e, Mul):
        return Add(*[_log_parts(f, formal_rational) for f in e.args])
    if isinstance(e, Pow) and e.exp.is_Integer:
        return e.exp * _log_parts(e.base, formal_rational)
    return Log(e)


def _rebuild(e, rational, formal):
    if e.is_Atom or not e.has(Exp, Log):
        return e
    if isinstance(e, Exp):
        arg = normalize(e.args[0], rational=rational, formal=formal)
        if formal:
            scale = S.One
            rest = []
            for t in Add.make_args(arg):
                c, f = t.as_coeff_Mul()
                if isinstance(f, Log) and c.is_Integer:
                    scale *= f.args[0] ** c
                else:
                    rest.append(t)
            if scale != 1:
                return scale * Exp(normalize(Add(*rest), rational=rational, formal=formal))
        return Exp(arg)
    if isinstance(e, Log):
        arg = normalize(e.args[0], rational=rational, formal=formal)
        if arg == 0:
            raise DivisionByZero("log(0)")
        if formal:
            return _log_parts(sp.factor(arg), rational)
        return Log(arg)
    return e.func(*[_rebuild(a, rational, formal) for a in e.args])


def _pull_exp_from_den(num, den, rational=False, formal=False):
    if isinstance(den, Add):
        return num, den
    factors = Mul.make_args(den)
    args = [_exp_arg(f) for f in factors if _is_exp_factor(f)]
    if not args:
        return num, den
    rest = Mul(*[f for f in factors if not _is_exp_factor(f)])
    return _expand(num * Exp(normalize(-Add(*args), rational=rational, formal=formal))), rest


def _ring_gens(e, gens: dict) -> bool:
    """Collect polynomial generators of ``e``; False if some node is not polynomial."""
    if e.is_Number:
        return True
    if e.is_Symbol or e is sp.I or isinstance(e, (Exp, Log)):
        gens.setdefault(e, None)
        return True
    if isinstance(e, (Add, Mul)):
        return all(_ring_gens(a, gens) for a in e.args)
    if isinstance(e, Pow):
        if e.exp.is_Integer and e.exp >= 0:
            return _ring_gens(e.base, gens)
        gens.setdefault(e, None)
        return True
    return False


def _to_ring(exprs: tuple, allow_i: bool = False):
    """(atoms, [ring elements]) for polynomial ``exprs``, else None.

    Generators are sorted so that lex order, and hence the sign chosen by
    ``cancel``, does not depend on how the inputs were built.
    """
    gens: dict = {}
    if not all(_ring_gens(e, gens) for e in exprs) or (sp.I in gens and not allow_i):
        return None
    atoms = sorted(gens, key=sp.default_sort_key)
    R, *elems = ring([sp.Dummy() for _ in atoms], QQ)
    table = dict(zip(atoms, elems))

    def ev(t):
        if t.is_Number:
            return R(QQ.from_sympy(t))
        if t in table:
            return table[t]
        if isinstance(t, Add):
            return reduce(lambda a, b: a + b, map(ev, t.args))
        if isinstance(t, Mul):
            return reduce(lambda a, b: a * b, map(ev, t.args))
        return ev(t.base) ** int(t.exp)

    return atoms, [ev(e) for e in exprs]


def _expand(e) -> Expr:
    """Multiply out in a sparse polynomial ring; Exp and Log arguments stay as they are."""
    e = sp.sympify(e)
    if e.is_Atom:
        return e
    conv = _to_ring((e,), allow_i=True)
    if conv is None:
        return sp.expand(e, power_base=False, power_exp=False, log=False)
    atoms, (p,) = conv
    if sp.I in atoms:
        # reduce with I^2 = -1
        i = atoms.index(sp.I)
        reduced: dict = {}
        for mon, c in p.terms():
            n = mon[i]
            key = mon[:i] + (n % 2,) + mon[i + 1:]
            reduced[key] = reduced.get(key, QQ(0)) + (c if n % 4 < 2 else -c)
        p = p.ring.from_dict({m: c for m, c in reduced.items() if c})
    return p.as_expr(*atoms)


def _cancel(num, den) -> tuple:
    conv = _to_ring((num, den))
    if conv is None:
        return sp.fraction(sp.cancel(num / den))
    atoms, (p, q) = conv
    p, q = p.cancel(q)
    return p.as_expr(*atoms), q.as_expr(*atoms)


def _split(e) -> tuple:
    """(numerator, {denominator base: exponent}) with bases shared across terms."""
    if e.is_Atom or isinstance(e, (Exp, Log)):
        return e, {}
    if isinstance(e, Add):
        parts = [_split(a) for a in e.args]
        common: dict = {}
        for _, d in parts:
            for base, n in d.items():
                common[base] = max(common.get(base, 0), n)
        terms = []
        for num, d in parts:
            extra = [base ** (n - d.get(base, 0)) for base, n in common.items() if n > d.get(base, 0)]
            terms.append(Mul(num, *extra))
        return Add(*terms), common
    if isinstance(e, Mul):
        nums, den = [], {}
        for a in e.args:
            num, d = _split(a)
            nums.append(num)
            for base, n in d.items():
                den[base] = den.get(base, 0) + n
        return Mul(*nums), den
    if isinstance(e, Pow) and e.exp.is_Integer:
        n = int(e.exp)
        num, d = _split(e.base)
        if n >= 0:
            return num**n, {base: m * n for base, m in d.items()}
        num = _expand(num)
        out = Mul(*[base ** (-m * n) for base, m in d.items()])
        if num == 0:
            raise DivisionByZero("denominator normalizes to zero")
        return out, {num: -n}
    return e, {}


def _together(e) -> tuple:
    num, den = _split(e)
    den_expr = Mul(*[base**n for base, n in den.items()])
    num, den_expr = _expand(num), _expand(den_expr)
    # move rational content of the denominator into the numerator
    c, _ = den_expr.as_content_primitive()
    if c != 1 and c != 0:
        num, den_expr = _expand(num / c), _expand(den_expr / c)
    return num, den_expr


def normalize(e, *, rational: bool = False, formal: bool = False) -> Expr:
    """Canonical form of ``e`` (see module docstring).  Idempotent."""
    e = sp.sympify(e)
    if e.has(S.ComplexInfinity, S.NaN):
        raise DivisionByZero("expression contains a division by zero")
    if e.is_Atom:
        return e
    e = _rebuild(e, rational, formal)
    num, den = _together(e)
    if den == 0:
        raise DivisionByZero("denominator normalizes to zero")
    num, den = _pull_exp_from_den(num, den, rational, formal)
    num, den = _merge_exps(num, rational, formal), _merge_exps(den, rational, formal)
    if rational and den != 1:
        num, den = _cancel(num, den)
        num, den = _together(num / den)
        num, den = _pull_exp_from_den(num, den, rational, formal)
        num, den = _merge_exps(num, rational, formal), _merge_exps(den, rational, formal)
    if num == 0:
        return S.Zero
    return num / den


def equals(a, b, *, rational: bool = True, formal: bool = False) -> bool:
    """Structural equality after normalization."""
    return normalize(sp.sympify(a) - sp.sympify(b), rational=rational, formal=formal) == 0


# ------------------------------------------------------------- derivatives


def _d(e, var):
    if e.is_Number or e is sp.I:
        return S.Zero
    if isinstance(e, FuncSymbol):
        return e.derivative(var)
    if isinstance(e, Symbol):
        return S.One if e == var else S.Zero
    if not depends_on(e, var):
        return S.Zero
    if isinstance(e, Add):
        return Add(*[_d(a, var) for a in e.args])
    if isinstance(e, Mul):
        terms = []
        args = e.args
        for i, a in enumerate(args):
            da = _d(a, var)
            if da != 0:
                terms.append(Mul(*args[:i], da, *args[i + 1:]))
        return Add(*terms)
    if isinstance(e, Pow):
        if depends_on(e.exp, var):
            raise NotImplementedError("symbolic exponents are not supported; use Exp")
        return e.exp * e.base ** (e.exp - 1) * _d(e.base, var)
    if isinstance(e, Exp):
        return e * _d(e.args[0], var)
    if isinstance(e, Log):
        return _d(e.args[0], var) / e.args[0]
    raise TypeError(f"cannot differentiate {type(e).__name__}")


def diff(e, var: Symbol, n: int = 1, *, rational: bool = False) -> Expr:
    """n-th partial derivative with respect to ``x`` or ``y``, normalized."""
    if var not in VARIABLES:
        raise ValueError("differentiation variable must be x or y")
    if n < 0:
        raise ValueError("derivative order must be nonnegative")
    e = sp.sympify(e)
    for _ in range(n):
        e = normalize(_d(e, var), rational=rational)
    return normalize(e, rational=rational) if n == 0 else e


def diff_xy(e, dx: int, dy: int, *, rational: bool = False) -> Expr:
    e = diff(e, x, dx, rational=rational) if dx else e
    e = diff(e, y, dy, rational=rational) if dy else e
    return normalize(e, rational=rational) if not (dx or dy) else e


def depends_on(e, var: Symbol) -> bool:
    """Does ``e`` depend on ``var`` (opaque functions included)?"""
    for s in sp.sympify(e).free_symbols:
        if isinstance(s, FuncSymbol):
            if str(var) in s.depends:
                return True
        elif s == var:
            return True
    return False


# ------------------------------------------------------------ substitution


def substitute(e, bindings: Mapping[Union[str, Symbol], object], *, rational: bool = False) -> Expr:
    """Replace variables and opaque functions; derivative atoms follow their function."""
    e = sp.sympify(e)
    named = {}
    for key, value in bindings.items():
        name = key if isinstance(key, str) else (key.fname if isinstance(key, FuncSymbol) else key.name)
        named[name] = sp.sympify(value)
    mapping = {}
    for s in e.free_symbols:
        if isinstance(s, FuncSymbol):
            if s.fname in named:
                mapping[s] = diff_xy(named[s.fname], s.dx, s.dy)
        elif s.name in named:
            mapping[s] = named[s.name]
    return normalize(e.xreplace(mapping), rational=rational)


# -------------------------------------------------------------- evaluation


class _NeedNumeric(Exception):
    pass


def _frac(n) -> Fraction:
    if n.is_Integer:
        return Fraction(int(n))
    if n.is_Rational:
        return Fraction(int(n.p), int(n.q))
    raise TypeError(f"non-rational constant {n!r}")


def _mp(v):
    if isinstance(v, Fraction):
        return mpmath.mpf(v.numerator) / v.denominator
    return v


class _Evaluator:
    """Bottom-up evaluation with memoization.

    ``leaf`` maps a Symbol to its value.  In exact mode values are
    Fractions and any transcendental step raises ``_NeedNumeric``.
    """

    def __init__(self, leaf, numeric: bool, bound=None):
        self.leaf = leaf
        self.numeric = numeric
        self.bound = bound or {}
        self.memo = {}

    def __call__(self, e):
        try:
            return self.memo[e]
        except KeyError:
            pass
        v = self._eval(e)
        self.memo[e] = v
        return v

    def _eval(self, e):
        if e in self.bound:
            v = self.bound[e]
            return _mp(v) if self.numeric else v
        if e.is_Number:
            v = _frac(e)
            return _mp(v) if self.numeric else v
        if e is sp.I:
            if not self.numeric:
                raise _NeedNumeric
            return mpmath.mpc(0, 1)
        if isinstance(e, Symbol):
            v = self.leaf(e)
            return _mp(v) if self.numeric else v
        if isinstance(e, Add):
            vals = [self(a) for a in e.args]
            return reduce(lambda p, q: p + q, vals)
        if isinstance(e, Mul):
            vals = [self(a) for a in e.args]
            return reduce(lambda p, q: p * q, vals)
        if isinstance(e, Pow):
            base = self(e.base)
            if not e.exp.is_Integer:
                raise TypeError("only integer powers are supported")
            n = int(e.exp)
            if n < 0:
                if base == 0:
                    raise PoleError("zero denominator")
                return 1 / base ** (-n) if self.numeric else Fraction(1) / base ** (-n)
            return base**n
        if isinstance(e, Exp):
            a = self(e.args[0])
            if a == 0:
                return _mp(Fraction(1)) if self.numeric else Fraction(1)
            if not self.numeric:
                raise _NeedNumeric
            return mpmath.exp(a)
        if isinstance(e, Log):
            a = self(e.args[0])
            if a == 0:
                raise PoleError("log(0)")
            if a == 1:
                return _mp(Fraction(0)) if self.numeric else Fraction(0)
            if not self.numeric:
                raise _NeedNumeric
            return mpmath.log(a)
        raise TypeError(f"cannot evaluate {type(e).__name__}")


def eval_at(e, point: Mapping[Union[str, Expr], object]) -> Fraction:
    """Exact value of ``e`` at ``point``.

    Keys are symbol names (FuncSymbol labels such as ``"u_x"`` included) or
    sympy atoms; ``Exp``/``Log`` subterms may be bound directly.
    """
    e = sp.sympify(e)
    by_name = {}
    bound = {}
    for key, value in point.items():
        val = Fraction(value) if not isinstance(value, sp.Basic) else _frac(value)
        if isinstance(key, str):
            by_name[key] = val
        elif isinstance(key, Symbol):
            by_name[key.name] = val
        else:
            bound[sp.sympify(key)] = val

    def leaf(s):
        try:
            return by_name[s.name]
        except KeyError:
            raise UnboundSymbol(s.name) from None

    try:
        return _Evaluator(leaf, numeric=False, bound=bound)(e)
    except _NeedNumeric:
        raise TranscendentalValue("exp/log of a non-trivial argument; bind it in the point") from None
    except ZeroDivisionError as exc:
        raise PoleError(str(exc)) from None


def _falling(n: int, m: int) -> int:
    return factorial(n) // factorial(n - m)


def _random_poly(rng: random.Random, depends: str, bound: int):
    coeffs = {}
    for i in range(4):
        for j in range(4):
            if i + j > 3 or (i and "x" not in depends) or (j and "y" not in depends):
                continue
            coeffs[(i, j)] = rng.randint(-bound, bound)
    return coeffs


def _poly_derivative_value(coeffs, dx, dy, xv, yv):
    total = Fraction(0)
    for (i, j), c in coeffs.items():
        if i < dx or j < dy or c == 0:
            continue
        total += c * _falling(i, dx) * _falling(j, dy) * xv ** (i - dx) * yv ** (j - dy)
    return total


def _random_rational(rng: random.Random, bound: int) -> Fraction:
    return Fraction(rng.randint(-bound, bound), rng.randint(1, bound))


def _sample_value(e, rng, numeric: bool):
    """One random instantiation of ``e``; returns (value, scale) or raises PoleError."""
    bound = _TRANSCENDENTAL_COEFF_RANGE if numeric else _COEFF_RANGE
    point_bound = 20 if numeric else 1000
    values = {}
    polys = {}

    def leaf(s):
        if s in values:
            return values[s]
        if isinstance(s, FuncSymbol):
            key = (s.fname, s.depends)
            if key not in polys:
                polys[key] = _random_poly(rng, s.depends, bound)
            v = _poly_derivative_value(polys[key], s.dx, s.dy, leaf(x), leaf(y))
        else:
            v = _random_rational(rng, point_bound)
        values[s] = v
        return v

    leaf(x)
    leaf(y)
    ev = _Evaluator(leaf, numeric=numeric)
    num, den = sp.fraction(e)
    try:
        if ev(den) == 0:
            raise PoleError("sampled a pole")
        terms = [ev(t) for t in Add.make_args(num)]
    except ZeroDivisionError as exc:
        raise PoleError(str(exc)) from None
    total = reduce(lambda p, q: p + q, terms)
    if not numeric:
        return total, None
    scale = max([abs(t) for t in terms] + [mpmath.mpf(1)])
    return total, scale


def is_zero(e, seed: int = DEFAULT_SEED, trials: int | None = None, *, formal: bool = False) -> bool:
    """Structural-or-probabilistic zero test (one-sided error).

    True if ``e`` normalizes to 0, or if it vanishes at ``trials``
    independent random points where every opaque function is replaced by a
    random dense polynomial of degree <= 3.  Deterministic given ``seed``.
    """
    if trials is None:
        trials = default_trials()
    if trials < 1:
        raise ValueError("trials must be >= 1")
    e = normalize(e, formal=formal)
    if e == 0:
        return True
    numeric = e.has(Exp, Log, sp.I)
    rng = random.Random(seed)
    poles = 0
    with mpmath.workdps(_NUMERIC_DPS):
        for _ in range(trials):
            for _attempt in range(8):
                try:
                    value, scale = _sample_value(e, rng, numeric)
                    break
                except PoleError:
                    continue
            else:
                poles += 1
                continue
            if numeric:
                if abs(value) > _NUMERIC_TOL * scale:
                    return False
            elif value != 0:
                return False
    if poles == trials:
        raise Inconclusive("every sampled point hit a pole")
    return True


# ------------------------------------------------------------- integration


def integrate_poly(e, var: Symbol) -> Expr:
    """Term-wise antiderivative in ``var`` with zero integration constant."""
    if var not in VARIABLES:
        raise ValueError("integration variable must be x or y")
    e = normalize(e)
    if e == 0:
        return S.Zero
    num, den = sp.fraction(e)
    if depends_on(den, var):
        raise NotPolynomial(f"denominator depends on {var}")
    out = []
    for term in Add.make_args(num):
        indep, dep = term.as_independent(var, as_Add=False)
        if depends_on(indep, var):
            raise NotPolynomial(f"{term} is not polynomial in {var}")
        if dep == 1:
            power = 0
        elif dep == var:
            power = 1
        elif isinstance(dep, Pow) and dep.base == var and dep.exp.is_Integer and dep.exp > 0:
            power = int(dep.exp)
        else:
            raise NotPolynomial(f"{term} is not polynomial in {var}")
        out.append(indep * var ** (power + 1) / (power + 1))
    return normalize(Add(*out) / den)


def symbols_of(e) -> set:
    return set(sp.sympify(e).free_symbols)
