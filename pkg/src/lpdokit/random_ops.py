"""Seeded generators of random operators for property checks."""

from __future__ import annotations

import random
from dataclasses import dataclass

import sympy as sp

from .laplace import HyperbolicOp
from .lpdo import Lpdo, compose
from .symexpr import Exp, FuncSymbol, x, y


@dataclass(frozen=True)
class PolyConfig:
    degree: int = 2
    bound: int = 3
    density: float = 0.6


def random_poly(rng: random.Random, cfg: PolyConfig = PolyConfig(), *, nonzero: bool = False) -> sp.Expr:
    while True:
        terms = [
            rng.randint(-cfg.bound, cfg.bound) * x**i * y**j
            for i in range(cfg.degree + 1)
            for j in range(cfg.degree + 1 - i)
            if rng.random() < cfg.density
        ]
        p = sp.expand(sp.Add(*terms))
        if not nonzero or p != 0:
            return p


def first_order(rng: random.Random, cfg: PolyConfig = PolyConfig(), *, monic: bool = True) -> Lpdo:
    lead = 1 if monic else random_poly(rng, cfg, nonzero=True)
    return Lpdo({(1, 0): lead, (0, 1): random_poly(rng, cfg), (0, 0): random_poly(rng, cfg)})


def second_order(rng: random.Random, cfg: PolyConfig = PolyConfig()) -> Lpdo:
    return Lpdo({(j, kk): random_poly(rng, cfg) for j in range(3) for kk in range(3 - j)})


@dataclass(frozen=True)
class Composed:
    operator: Lpdo
    left: Lpdo
    right: Lpdo
    omega: sp.Expr


def composed2(rng: random.Random, cfg: PolyConfig = PolyConfig()) -> Composed:
    """(Dx + q*Dy + r)(s*Dx + t*Dy + u) with -q a simple root."""
    while True:
        left = first_order(rng, cfg)
        right = first_order(rng, cfg, monic=False)
        right = Lpdo({(1, 0): right[(1, 0)], (0, 1): random_poly(rng, cfg), (0, 0): right[(0, 0)]})
        q, s, t = left[(0, 1)], right[(1, 0)], right[(0, 1)]
        if sp.expand(t - s * q) != 0:
            return Composed(compose(left, right), left, right, -q)


def composed3(rng: random.Random, cfg: PolyConfig = PolyConfig()) -> Composed:
    """(Dx + q*Dy + r) o second-order, with -q a simple root."""
    while True:
        left = first_order(rng, cfg)
        right = second_order(rng, cfg)
        q = left[(0, 1)]
        s, m, t = right[(2, 0)], right[(1, 1)], right[(0, 2)]
        if sp.expand(s * q**2 - m * q + t) != 0 and right.order == 2:
            return Composed(compose(left, right), left, right, -q)


def constant_roots(rng: random.Random, n: int, bound: int = 3) -> list:
    return rng.sample(range(-bound, bound + 1), n)


def with_principal_roots(rng: random.Random, roots: list, cfg: PolyConfig = PolyConfig()) -> Lpdo:
    """Operator whose principal symbol is prod (X - w*Y) with random polynomial lower terms."""
    n = len(roots)
    w = sp.Symbol("w")
    poly = sp.Poly(sp.prod([w - r for r in roots]), w)
    coeffs = {}
    for (deg,), c in poly.terms():
        coeffs[(deg, n - deg)] = c
    for j in range(n):
        for kk in range(n - j):
            coeffs[(j, kk)] = random_poly(rng, cfg)
    return Lpdo(coeffs)


def random_hyperbolic(rng: random.Random, cfg: PolyConfig = PolyConfig()) -> HyperbolicOp:
    return HyperbolicOp(random_poly(rng, cfg), random_poly(rng, cfg), random_poly(rng, cfg))


def random_reduced(rng: random.Random, cfg: PolyConfig = PolyConfig(degree=1)) -> HyperbolicOp:
    return HyperbolicOp(0, random_poly(rng, cfg), random_poly(rng, cfg, nonzero=True))


_ATOMS = [x, y, FuncSymbol("a"), FuncSymbol("b", 1, 0), FuncSymbol("X", 0, 0, "x"), sp.Symbol("c")]


def random_scalar(rng: random.Random, depth: int = 2) -> sp.Expr:
    """Mixed expression for printer round trips: rationals, atoms, quotients, exp."""
    if depth == 0 or rng.random() < 0.3:
        if rng.random() < 0.4:
            return sp.Rational(rng.randint(-9, 9), rng.randint(1, 4))
        return rng.choice(_ATOMS)
    kind = rng.choice(["add", "mul", "pow", "div", "exp"])
    a = random_scalar(rng, depth - 1)
    b = random_scalar(rng, depth - 1)
    if kind == "add":
        return a + b
    if kind == "mul":
        return a * b
    if kind == "pow":
        return a ** rng.randint(2, 3)
    if kind == "div":
        den = sp.expand(b + rng.choice([x, y, 1 + x**2]))
        return a / (den if den != 0 else 1 + x**2)
    return Exp(a)


def random_operator(rng: random.Random, max_order: int = 3) -> Lpdo:
    coeffs = {}
    for j in range(max_order + 1):
        for kk in range(max_order + 1 - j):
            if rng.random() < 0.5:
                coeffs[(j, kk)] = random_scalar(rng)
    return Lpdo(coeffs)
