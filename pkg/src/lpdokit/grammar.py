"""Text grammar shared by the library and the command line.

Expressions::

    expr    := term (("+" | "-") term)*
    term    := unary (("*" | "/") unary)*
    unary   := "-" unary | power
    power   := primary ("^" unary)?          # right associative, integer exponent
    primary := NUMBER | "(" expr ")" | "exp(" expr ")" | "log(" expr ")"
             | "Dx" | "Dy" | NAME [ "(" vars ")" ]

``name(x,y)``, ``name(x)`` and ``name(y)`` are opaque functions;
``name_xy`` (optionally followed by ``(x)`` etc.) is a derivative atom;
any other bare name is a constant symbol, except ``x y z k I``.
In operator context ``*`` is composition, so ``x*Dx`` is x∂x while
``Dx*x`` is x∂x + 1.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Union

import sympy as sp
from sympy import Add, Mul, Pow

from .lpdo import Lpdo, compose
from .symexpr import Exp, FuncSymbol, Log, k, normalize, x, y, z

RESERVED = {"x": x, "y": y, "z": z, "k": k, "I": sp.I}


class ParseError(SyntaxError):
    """Malformed input; ``line`` and ``col`` are 1-based."""

    def __init__(self, message: str, text: str, pos: int):
        line = text.count("\n", 0, pos) + 1
        col = pos - (text.rfind("\n", 0, pos) + 1) + 1
        super().__init__(f"{message} at line {line}, column {col}")
        self.line = line
        self.col = col
        self.lineno = line
        self.offset = col

    def __str__(self) -> str:
        return self.msg


@dataclass(frozen=True)
class Token:
    kind: str  # NUM NAME OP END
    text: str
    pos: int


_TOKEN = re.compile(r"\s*(?:(\d+)|([A-Za-z][A-Za-z0-9]*(?:_[xy]+)?)|(\S))")


def tokenize(text: str) -> list[Token]:
    out = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        start = m.start(m.lastindex)
        num, name, op = m.groups()
        if num is not None:
            out.append(Token("NUM", num, start))
        elif name is not None:
            out.append(Token("NAME", name, start))
        elif op in "+-*/^(),":
            out.append(Token("OP", op, start))
        else:
            raise ParseError(f"unexpected character {op!r}", text, start)
        pos = m.end()
    out.append(Token("END", "", len(text)))
    return out


# AST nodes are tuples: ("num", int) ("sym", Expr) ("D", "x"|"y") ("neg", a)
# ("bin", op, a, b) ("call", "exp"|"log", a)

_BINARY = {"+": 1, "-": 1, "*": 2, "/": 2}


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.toks = tokenize(text)
        self.i = 0

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def error(self, msg: str, tok: Token | None = None):
        tok = tok or self.tok
        raise ParseError(msg, self.text, tok.pos)

    def advance(self) -> Token:
        t = self.tok
        self.i += 1
        return t

    def expect(self, op: str):
        if self.tok.kind != "OP" or self.tok.text != op:
            self.error(f"expected {op!r}" + (f", got {self.tok.text!r}" if self.tok.text else ", got end of input"))
        return self.advance()

    def parse(self):
        if self.tok.kind == "END":
            self.error("empty input")
        node = self.expr(1)
        if self.tok.kind != "END":
            self.error(f"unexpected {self.tok.text!r}")
        return node

    def expr(self, min_prec: int):
        lhs = self.unary()
        while self.tok.kind == "OP" and self.tok.text in _BINARY and _BINARY[self.tok.text] >= min_prec:
            t = self.advance()
            rhs = self.expr(_BINARY[t.text] + 1)
            lhs = ("bin", t.text, lhs, rhs, t.pos)
        return lhs

    def unary(self):
        if self.tok.kind == "OP" and self.tok.text == "-":
            self.advance()
            return ("neg", self.unary())
        if self.tok.kind == "OP" and self.tok.text == "+":
            self.advance()
            return self.unary()
        return self.power()

    def power(self):
        base = self.primary()
        if self.tok.kind == "OP" and self.tok.text == "^":
            t = self.advance()
            return ("bin", "^", base, self.unary(), t.pos)
        return base

    def primary(self):
        t = self.tok
        if t.kind == "NUM":
            self.advance()
            return ("num", int(t.text))
        if t.kind == "OP" and t.text == "(":
            self.advance()
            node = self.expr(1)
            self.expect(")")
            return node
        if t.kind == "NAME":
            self.advance()
            return self.name(t)
        self.error("unexpected end of input" if t.kind == "END" else f"unexpected {t.text!r}")

    def name(self, t: Token):
        name = t.text
        if name in ("exp", "log"):
            self.expect("(")
            arg = self.expr(1)
            self.expect(")")
            return ("call", name, arg, t.pos)
        if name in ("Dx", "Dy"):
            return ("D", name[1], t.pos)
        if name in RESERVED:
            return ("sym", RESERVED[name])
        base, _, suffix = name.partition("_")
        depends = None
        if self.tok.kind == "OP" and self.tok.text == "(":
            depends = self.var_list()
        if not suffix and depends is None:
            return ("sym", sp.Symbol(name))
        depends = depends or "xy"
        dx, dy = suffix.count("x"), suffix.count("y")
        try:
            return ("sym", FuncSymbol(base, dx, dy, depends))
        except ValueError as exc:
            self.error(str(exc), t)

    def var_list(self) -> str:
        self.expect("(")
        seen = []
        while True:
            t = self.tok
            if t.kind != "NAME" or t.text not in ("x", "y") or t.text in seen:
                self.error("function arguments must be x and/or y")
            seen.append(self.advance().text)
            if self.tok.kind == "OP" and self.tok.text == ",":
                self.advance()
                continue
            break
        self.expect(")")
        return "".join(sorted(seen))


def _is_op(v) -> bool:
    return isinstance(v, Lpdo)


def _eval(node, text: str, allow_ops: bool):
    kind = node[0]
    if kind == "num":
        return sp.Integer(node[1])
    if kind == "sym":
        return node[1]
    if kind == "D":
        if not allow_ops:
            raise ParseError("Dx/Dy are not allowed in a scalar expression", text, node[2])
        return Lpdo.dx() if node[1] == "x" else Lpdo.dy()
    if kind == "neg":
        v = _eval(node[1], text, allow_ops)
        return -v
    if kind == "call":
        v = _eval(node[2], text, allow_ops)
        if _is_op(v):
            raise ParseError(f"{node[1]} of an operator", text, node[3])
        return Exp(v) if node[1] == "exp" else Log(v)
    _, op, a, b, pos = node
    va = _eval(a, text, allow_ops)
    vb = _eval(b, text, allow_ops)
    if op == "^":
        if _is_op(vb) or not sp.sympify(vb).is_Integer:
            raise ParseError("exponent must be an integer", text, pos)
        n = int(vb)
        if _is_op(va):
            if n < 0:
                raise ParseError("negative power of an operator", text, pos)
            return va**n
        return Pow(va, n)
    if op == "/":
        if _is_op(va) or _is_op(vb):
            raise ParseError("division is only defined between scalars", text, pos)
        if normalize(vb) == 0:
            raise ParseError("division by zero", text, pos)
        return va / vb
    if op == "*":
        if _is_op(va) or _is_op(vb):
            return compose(_lift(va), _lift(vb))
        return va * vb
    if op == "+":
        return _lift(va) + _lift(vb) if (_is_op(va) or _is_op(vb)) else va + vb
    return _lift(va) - _lift(vb) if (_is_op(va) or _is_op(vb)) else va - vb


def _lift(v) -> Lpdo:
    return v if _is_op(v) else Lpdo.scalar(v)


def parse_expression(text: str) -> sp.Expr:
    """Scalar expression, normalized."""
    node = _Parser(text).parse()
    return normalize(_eval(node, text, allow_ops=False))


def parse_operator(text: str) -> Lpdo:
    node = _Parser(text).parse()
    return _lift(_eval(node, text, allow_ops=True))


# ---------------------------------------------------------------- printing


def _atom_text(s) -> str:
    if isinstance(s, FuncSymbol):
        suffix = "_" + "x" * s.dx + "y" * s.dy if s.dx or s.dy else ""
        if s.depends != "xy":
            return f"{s.fname}{suffix}({s.depends})"
        return f"{s.fname}{suffix}" if suffix else f"{s.fname}(x,y)"
    if s is sp.I:
        return "I"
    return s.name


def _rational_text(r) -> str:
    return str(r.p) if r.q == 1 else f"{r.p}/{r.q}"


def _factor_text(f) -> str:
    if isinstance(f, Pow):
        base = _factor_text(f.base)
        if isinstance(f.base, (Add, Mul, Pow)) or (f.base.is_Rational and not f.base.is_Integer) or (f.base.is_Number and f.base < 0):
            base = f"({to_text(f.base)})"
        return f"{base}^{f.exp}"
    if isinstance(f, Add):
        return f"({to_text(f)})"
    if isinstance(f, Exp):
        return f"exp({to_text(f.args[0])})"
    if isinstance(f, Log):
        return f"log({to_text(f.args[0])})"
    if f.is_Rational:
        return _rational_text(f)
    if f.is_Atom:
        return _atom_text(f)
    return f"({to_text(f)})"


def _monomial_text(e) -> tuple[bool, str]:
    """(negative, text without sign) of a product with no Add at top level."""
    coeff, rest = e.as_coeff_Mul()
    neg = coeff < 0
    coeff = -coeff if neg else coeff
    factors = sorted(Mul.make_args(rest), key=sp.default_sort_key) if rest != 1 else []
    parts = [_factor_text(f) for f in factors]
    if coeff != 1 or not parts:
        parts.insert(0, _rational_text(coeff))
    return neg, "*".join(parts)


def _sum_text(e) -> str:
    terms = e.as_ordered_terms() if isinstance(e, Add) else [e]
    out = []
    for i, t in enumerate(terms):
        neg, body = _monomial_text(t)
        if i == 0:
            out.append(("-" if neg else "") + body)
        else:
            out.append((" - " if neg else " + ") + body)
    return "".join(out)


def to_text(e) -> str:
    """Canonical text of ``e``; ``parse_expression(to_text(e))`` normalizes to ``normalize(e)``."""
    e = normalize(e)
    num, den = sp.fraction(e)
    text = _sum_text(num)
    if den == 1:
        return text
    if isinstance(num, Add):
        text = f"({text})"
    den_text = _sum_text(den)
    if not (den.is_Atom and not den.is_Rational) and not den.is_Integer:
        den_text = f"({den_text})"
    return f"{text}/{den_text}"


def _derivative_text(j: int, kk: int) -> str:
    parts = []
    if j:
        parts.append("Dx" if j == 1 else f"Dx^{j}")
    if kk:
        parts.append("Dy" if kk == 1 else f"Dy^{kk}")
    return "*".join(parts)


def operator_to_text(A: Lpdo) -> str:
    if A.is_zero_operator():
        return "0"
    out = []
    for (j, kk), c in A.items():
        d = _derivative_text(j, kk)
        ctext = to_text(c)
        neg = False
        num, den = sp.fraction(c)
        if not isinstance(num, Add) and num.as_coeff_Mul()[0] < 0:
            neg = True
            ctext = to_text(-c)
        if d:
            if ctext == "1":
                body = d
            elif isinstance(num, Add):
                body = f"({ctext})*{d}"
            elif den != 1 and not den.is_Integer:
                body = f"({ctext})*{d}"
            else:
                body = f"{ctext}*{d}"
        else:
            body = ctext
        if not out:
            out.append(("-" if neg else "") + body)
        else:
            out.append((" - " if neg else " + ") + body)
    return "".join(out)


Parsed = Union[sp.Expr, Lpdo]

__all__ = [
    "ParseError",
    "operator_to_text",
    "parse_expression",
    "parse_operator",
    "to_text",
    "tokenize",
]
