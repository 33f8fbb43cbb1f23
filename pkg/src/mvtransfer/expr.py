"""Expression language for singular parts H(u_1, ..., u_d).

Grammar::

    expr   := term (('+' | '-') term)*
    term   := factor (('*' | '/') factor)*
    factor := base ('^' signed-real)?
    base   := 'u'<int> | number | '(' expr ')' | 'sqrt(' expr ')' | '-' factor

Real powers use the principal branch.  A base lying on the negative real
axis under a non-integer exponent is an error, never a silent sheet choice.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Union

import numpy as np

__all__ = [
    "Var", "Const", "Add", "Sub", "Mul", "Div", "Neg", "Pow", "Sqrt",
    "Expr", "ParseError", "EvalError",
    "parse_expression", "to_text", "eval_expression", "compile_expression",
    "variables", "power_bases",
]


class ParseError(ValueError):
    def __init__(self, msg: str, offset: int):
        super().__init__(f"{msg} at offset {offset}")
        self.offset = offset


class EvalError(ValueError):
    """Raised for a zero base under a negative power or a base on the branch cut."""

    def __init__(self, msg: str, kind: str):
        super().__init__(msg)
        self.kind = kind


@dataclass(frozen=True)
class Var:
    index: int  # 1-based


@dataclass(frozen=True)
class Const:
    value: float
    text: str = ""

    def __post_init__(self):
        if not self.text:
            object.__setattr__(self, "text", repr(float(self.value)))


@dataclass(frozen=True)
class Add:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Sub:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Mul:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Div:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Neg:
    operand: "Expr"


@dataclass(frozen=True)
class Pow:
    base: "Expr"
    exponent: float
    text: str = ""

    def __post_init__(self):
        if not math.isfinite(self.exponent):
            raise ValueError("exponent must be finite")
        if not self.text:
            e = float(self.exponent)
            object.__setattr__(self, "text", str(int(e)) if e.is_integer() else repr(e))

    @property
    def integer(self) -> bool:
        return float(self.exponent).is_integer()


@dataclass(frozen=True)
class Sqrt:
    operand: "Expr"


Expr = Union[Var, Const, Add, Sub, Mul, Div, Neg, Pow, Sqrt]

_NUMBER = re.compile(r"(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?")
_SIGNED = re.compile(r"[+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?")


class _Parser:
    def __init__(self, text: str, d: int):
        self.text = text
        self.d = d
        self.pos = 0

    def skip(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self) -> str:
        self.skip()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def expect(self, ch: str):
        if self.peek() != ch:
            raise ParseError(f"expected {ch!r}", self.pos)
        self.pos += 1

    def parse(self) -> Expr:
        node = self.expr()
        if self.peek():
            raise ParseError(f"unexpected {self.peek()!r}", self.pos)
        return node

    def expr(self) -> Expr:
        node = self.term()
        while self.peek() in ("+", "-"):
            op = self.text[self.pos]
            self.pos += 1
            rhs = self.term()
            node = Add(node, rhs) if op == "+" else Sub(node, rhs)
        return node

    def term(self) -> Expr:
        node = self.factor()
        while self.peek() in ("*", "/"):
            op = self.text[self.pos]
            self.pos += 1
            rhs = self.factor()
            node = Mul(node, rhs) if op == "*" else Div(node, rhs)
        return node

    def factor(self) -> Expr:
        node = self.base()
        if self.peek() == "^":
            self.pos += 1
            self.skip()
            m = _SIGNED.match(self.text, self.pos)
            if not m:
                raise ParseError("expected real exponent", self.pos)
            self.pos = m.end()
            node = Pow(node, float(m.group(0)), m.group(0))
        return node

    def base(self) -> Expr:
        ch = self.peek()
        start = self.pos
        if ch == "(":
            self.pos += 1
            node = self.expr()
            self.expect(")")
            return node
        if ch == "-":
            self.pos += 1
            return Neg(self.factor())
        if self.text.startswith("sqrt", self.pos):
            self.pos += 4
            self.expect("(")
            node = self.expr()
            self.expect(")")
            return Sqrt(node)
        if ch == "u":
            m = re.compile(r"u(\d+)").match(self.text, self.pos)
            if not m:
                raise ParseError("expected variable index", self.pos + 1)
            j = int(m.group(1))
            if not 1 <= j <= self.d:
                raise ParseError(f"variable u{j} out of range for d={self.d}", start)
            self.pos = m.end()
            return Var(j)
        m = _NUMBER.match(self.text, self.pos)
        if m:
            self.pos = m.end()
            return Const(float(m.group(0)), m.group(0))
        if not ch:
            raise ParseError("unexpected end of input", self.pos)
        raise ParseError(f"unexpected {ch!r}", self.pos)


def parse_expression(text: str, d: int) -> Expr:
    """Parse ``text`` into an AST over variables u1..ud.

    Errors carry the byte offset of the failure (:class:`ParseError`).
    """
    if d < 1:
        raise ValueError("dimension must be >= 1")
    try:
        text.encode("ascii")
    except UnicodeEncodeError as exc:
        raise ParseError("non-ASCII character", exc.start) from None
    return _Parser(text, d).parse()


_PREC = {Add: 1, Sub: 1, Mul: 2, Div: 2, Neg: 3, Pow: 4}


def _prec(node) -> int:
    if isinstance(node, Const) and node.text.startswith("-"):
        return 3
    return _PREC.get(type(node), 5)


def to_text(node: Expr) -> str:
    """Pretty-print with the fewest parentheses that still re-parse to ``node``."""
    if isinstance(node, Var):
        return f"u{node.index}"
    if isinstance(node, Const):
        return node.text
    if isinstance(node, Sqrt):
        return f"sqrt({to_text(node.operand)})"
    if isinstance(node, Neg):
        inner = to_text(node.operand)
        return f"-{inner}" if _prec(node.operand) >= 3 else f"-({inner})"
    if isinstance(node, Pow):
        inner = to_text(node.base)
        if _prec(node.base) < 5:
            inner = f"({inner})"
        return f"{inner}^{node.text}"
    op = {Add: "+", Sub: "-", Mul: "*", Div: "/"}[type(node)]
    p = _prec(node)
    lhs, rhs = to_text(node.left), to_text(node.right)
    if _prec(node.left) < p:
        lhs = f"({lhs})"
    # left-associative: an equal-precedence right operand keeps its parentheses
    if _prec(node.right) <= p:
        rhs = f"({rhs})"
    return f"{lhs}{op}{rhs}"


def variables(node: Expr) -> frozenset:
    if isinstance(node, Var):
        return frozenset({node.index})
    if isinstance(node, Const):
        return frozenset()
    if isinstance(node, (Neg, Sqrt)):
        return variables(node.operand)
    if isinstance(node, Pow):
        return variables(node.base)
    return variables(node.left) | variables(node.right)


def power_bases(node: Expr):
    """Yield (base, exponent) for every non-integer power node, sqrt included."""
    if isinstance(node, (Var, Const)):
        return
    if isinstance(node, Sqrt):
        yield node.operand, 0.5
        yield from power_bases(node.operand)
    elif isinstance(node, Pow):
        if not node.integer:
            yield node.base, node.exponent
        yield from power_bases(node.base)
    elif isinstance(node, Neg):
        yield from power_bases(node.operand)
    else:
        yield from power_bases(node.left)
        yield from power_bases(node.right)


def _power(base, exponent: float, integer: bool):
    # vectorised principal-branch power with explicit failure modes
    b = np.asarray(base, dtype=complex)
    zero = b == 0
    if exponent < 0 and np.any(zero):
        raise EvalError("zero base with negative exponent", "zero-base")
    if integer:
        e = int(exponent)
        if abs(e) <= 4:
            out = np.ones_like(b)
            for _ in range(abs(e)):
                out = out * b
            return 1.0 / out if e < 0 else out
        return b ** e
    if np.any((b.imag == 0) & (b.real < 0)):
        raise EvalError("base on the branch cut under a non-integer exponent", "branch-cut")
    out = np.where(zero, 0, b ** exponent) if np.any(zero) else b ** exponent
    return out


def _eval(node: Expr, point):
    if isinstance(node, Var):
        return point[node.index - 1]
    if isinstance(node, Const):
        return node.value
    if isinstance(node, Add):
        return _eval(node.left, point) + _eval(node.right, point)
    if isinstance(node, Sub):
        return _eval(node.left, point) - _eval(node.right, point)
    if isinstance(node, Mul):
        return _eval(node.left, point) * _eval(node.right, point)
    if isinstance(node, Div):
        den = _eval(node.right, point)
        if np.any(np.asarray(den) == 0):
            raise EvalError("division by zero", "zero-base")
        return _eval(node.left, point) / den
    if isinstance(node, Neg):
        return -_eval(node.operand, point)
    if isinstance(node, Sqrt):
        return _power(_eval(node.operand, point), 0.5, False)
    if isinstance(node, Pow):
        return _power(_eval(node.base, point), node.exponent, node.integer)
    raise TypeError(f"unknown node {node!r}")


def eval_expression(node: Expr, point) -> complex:
    """Evaluate at a single point of C^d."""
    vals = [np.complex128(complex(p)) for p in point]
    out = _eval(node, vals)
    return complex(np.asarray(out).item())


def compile_expression(node: Expr):
    """Return ``f(*u)`` evaluating ``node`` on broadcastable complex arrays."""
    def f(*u):
        arrays = [np.asarray(x, dtype=complex) for x in u]
        shape = np.broadcast_shapes(*(a.shape for a in arrays)) if arrays else ()
        out = _eval(node, arrays)
        return np.broadcast_to(np.asarray(out, dtype=complex), shape)
    f.ast = node
    return f
