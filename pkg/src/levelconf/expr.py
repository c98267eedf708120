"""Entire functions as expression trees.

Supported grammar (whitespace insensitive)::

    expr    := term (("+" | "-") term)*
    term    := unary ("*" unary)*
    unary   := "-" unary | power
    power   := primary ("^" INTEGER)?
    primary := NUMBER | "z" | "i" | "pi" | NAME "(" expr ")" | "(" expr ")"
    NAME    := "sin" | "cos" | "exp" | "sqrt"

``sqrt`` only accepts constant arguments.  Division is rejected because the
result need not be entire.
"""
from __future__ import annotations

import cmath
import math
import re
from dataclasses import dataclass
from typing import Sequence

import numpy as np


class ExpressionError(ValueError):
    """Parse or construction error, carrying a 1-based line/column."""

    def __init__(self, message: str, line: int = 1, column: int = 1):
        super().__init__(f"{message} (line {line}, column {column})")
        self.line = line
        self.column = column


class NonFiniteValue(ArithmeticError):
    pass


# --------------------------------------------------------------------------
# expression nodes


@dataclass(frozen=True)
class Node:
    def const_value(self) -> complex | None:
        return None


@dataclass(frozen=True)
class Const(Node):
    value: complex

    def const_value(self):
        return self.value


@dataclass(frozen=True)
class Var(Node):
    pass


@dataclass(frozen=True)
class Add(Node):
    left: Node
    right: Node


@dataclass(frozen=True)
class Mul(Node):
    left: Node
    right: Node


@dataclass(frozen=True)
class Pow(Node):
    base: Node
    exponent: int


@dataclass(frozen=True)
class Func(Node):
    name: str
    arg: Node


_FUNCS = {"sin": np.sin, "cos": np.cos, "exp": np.exp}


def _const(v) -> Const:
    return Const(complex(v))


def add(a: Node, b: Node) -> Node:
    ca, cb = a.const_value(), b.const_value()
    if ca is not None and cb is not None:
        return _const(ca + cb)
    if ca == 0:
        return b
    if cb == 0:
        return a
    return Add(a, b)


def mul(a: Node, b: Node) -> Node:
    ca, cb = a.const_value(), b.const_value()
    if ca is not None and cb is not None:
        return _const(ca * cb)
    if ca == 0 or cb == 0:
        return _const(0)
    if ca == 1:
        return b
    if cb == 1:
        return a
    return Mul(a, b)


def power(a: Node, n: int) -> Node:
    if n < 0:
        raise ExpressionError("negative exponents are not entire")
    c = a.const_value()
    if c is not None:
        return _const(c**n)
    if n == 0:
        return _const(1)
    if n == 1:
        return a
    return Pow(a, n)


def func(name: str, arg: Node) -> Node:
    c = arg.const_value()
    if c is not None:
        return _const({"sin": cmath.sin, "cos": cmath.cos, "exp": cmath.exp}[name](c))
    return Func(name, arg)


def differentiate(node: Node) -> Node:
    if isinstance(node, Const):
        return _const(0)
    if isinstance(node, Var):
        return _const(1)
    if isinstance(node, Add):
        return add(differentiate(node.left), differentiate(node.right))
    if isinstance(node, Mul):
        return add(mul(differentiate(node.left), node.right),
                   mul(node.left, differentiate(node.right)))
    if isinstance(node, Pow):
        return mul(mul(_const(node.exponent), power(node.base, node.exponent - 1)),
                   differentiate(node.base))
    if isinstance(node, Func):
        inner = differentiate(node.arg)
        if node.name == "sin":
            outer = func("cos", node.arg)
        elif node.name == "cos":
            outer = mul(_const(-1), func("sin", node.arg))
        else:
            outer = node
        return mul(outer, inner)
    raise TypeError(node)


def evaluate(node: Node, z):
    if isinstance(node, Const):
        return node.value + 0 * z
    if isinstance(node, Var):
        return z
    if isinstance(node, Add):
        return evaluate(node.left, z) + evaluate(node.right, z)
    if isinstance(node, Mul):
        return evaluate(node.left, z) * evaluate(node.right, z)
    if isinstance(node, Pow):
        return evaluate(node.base, z) ** node.exponent
    if isinstance(node, Func):
        return _FUNCS[node.name](evaluate(node.arg, z))
    raise TypeError(node)


def _poly_coeffs(node: Node) -> np.ndarray | None:
    """Ascending coefficients if ``node`` is a polynomial in z, else None."""
    if isinstance(node, Const):
        return np.array([node.value], dtype=complex)
    if isinstance(node, Var):
        return np.array([0, 1], dtype=complex)
    if isinstance(node, Add):
        a, b = _poly_coeffs(node.left), _poly_coeffs(node.right)
        if a is None or b is None:
            return None
        out = np.zeros(max(len(a), len(b)), dtype=complex)
        out[: len(a)] += a
        out[: len(b)] += b
        return out
    if isinstance(node, Mul):
        a, b = _poly_coeffs(node.left), _poly_coeffs(node.right)
        if a is None or b is None:
            return None
        return np.convolve(a, b)
    if isinstance(node, Pow):
        a = _poly_coeffs(node.base)
        if a is None:
            return None
        out = np.array([1], dtype=complex)
        for _ in range(node.exponent):
            out = np.convolve(out, a)
        return out
    return None


def _fmt_complex(c: complex) -> str:
    if c.imag == 0:
        return repr(float(c.real))
    if c.real == 0:
        return f"{float(c.imag)!r}*i"
    return f"({float(c.real)!r}+{float(c.imag)!r}*i)"


def to_text(node: Node) -> str:
    if isinstance(node, Const):
        return _fmt_complex(node.value)
    if isinstance(node, Var):
        return "z"
    if isinstance(node, Add):
        return f"({to_text(node.left)} + {to_text(node.right)})"
    if isinstance(node, Mul):
        return f"{to_text(node.left)}*{to_text(node.right)}"
    if isinstance(node, Pow):
        return f"({to_text(node.base)})^{node.exponent}"
    if isinstance(node, Func):
        return f"{node.name}({to_text(node.arg)})"
    raise TypeError(node)


# --------------------------------------------------------------------------
# parser

_TOKEN = re.compile(r"\s*(?:(\d+\.?\d*(?:[eE][-+]?\d+)?|\.\d+(?:[eE][-+]?\d+)?)|([A-Za-z_]\w*)|(.))")


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens: list[tuple[str, str, int]] = []
        pos = 0
        while pos < len(text):
            m = _TOKEN.match(text, pos)
            if m is None or m.end() == pos:
                break
            if m.group(1):
                self.tokens.append(("num", m.group(1), m.start(1)))
            elif m.group(2):
                self.tokens.append(("name", m.group(2), m.start(2)))
            elif m.group(3) and not m.group(3).isspace():
                self.tokens.append(("op", m.group(3), m.start(3)))
            pos = m.end()
        self.i = 0

    def _where(self, offset: int) -> tuple[int, int]:
        before = self.text[:offset]
        line = before.count("\n") + 1
        col = offset - (before.rfind("\n") + 1) + 1
        return line, col

    def error(self, msg: str, offset: int | None = None):
        if offset is None:
            offset = self.tokens[self.i][2] if self.i < len(self.tokens) else len(self.text)
        raise ExpressionError(msg, *self._where(offset))

    def peek(self):
        return self.tokens[self.i] if self.i < len(self.tokens) else None

    def take(self):
        tok = self.peek()
        self.i += 1
        return tok

    def expect(self, op: str):
        tok = self.peek()
        if tok is None or tok[1] != op:
            self.error(f"expected '{op}'")
        self.i += 1

    def parse(self) -> Node:
        if not self.tokens:
            self.error("empty expression", 0)
        node = self.expr()
        if self.peek() is not None:
            tok = self.peek()
            if tok[1] == "/":
                self.error("division is not supported (functions must be entire)")
            self.error(f"unexpected token '{tok[1]}'")
        return node

    def expr(self) -> Node:
        node = self.term()
        while (tok := self.peek()) is not None and tok[1] in "+-":
            self.take()
            rhs = self.term()
            node = add(node, rhs if tok[1] == "+" else mul(_const(-1), rhs))
        return node

    def term(self) -> Node:
        node = self.unary()
        while (tok := self.peek()) is not None and tok[1] in "*/":
            if tok[1] == "/":
                self.error("division is not supported (functions must be entire)")
            self.take()
            node = mul(node, self.unary())
        return node

    def unary(self) -> Node:
        tok = self.peek()
        if tok is not None and tok[1] == "-":
            self.take()
            return mul(_const(-1), self.unary())
        if tok is not None and tok[1] == "+":
            self.take()
            return self.unary()
        return self.power()

    def power(self) -> Node:
        base = self.primary()
        tok = self.peek()
        if tok is not None and tok[1] == "^":
            self.take()
            ntok = self.take()
            if ntok is None or ntok[0] != "num" or not ntok[1].isdigit():
                self.error("exponent must be a non-negative integer",
                           ntok[2] if ntok else None)
            return power(base, int(ntok[1]))
        return base

    def primary(self) -> Node:
        tok = self.take()
        if tok is None:
            self.error("unexpected end of expression")
        kind, val, off = tok
        if kind == "num":
            return _const(float(val))
        if kind == "name":
            low = val.lower()
            if low == "z":
                return Var()
            if low == "i":
                return _const(1j)
            if low == "pi":
                return _const(math.pi)
            if low in ("sin", "cos", "exp", "sqrt"):
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                if low == "sqrt":
                    c = arg.const_value()
                    if c is None:
                        self.error("sqrt only accepts constant arguments", off)
                    return _const(cmath.sqrt(c))
                return func(low, arg)
            self.error(f"unknown name '{val}'", off)
        if val == "(":
            node = self.expr()
            self.expect(")")
            return node
        if val == "/":
            self.error("division is not supported (functions must be entire)", off)
        self.error(f"unexpected token '{val}'", off)


def parse(text: str) -> Node:
    return _Parser(text).parse()


# --------------------------------------------------------------------------
# public function object


class AnalyticFunction:
    """An entire function with exact symbolic derivative.

    Calling the object evaluates it; scalars and numpy arrays are accepted.
    Pure polynomials are evaluated from cached ascending coefficients.
    """

    def __init__(self, expr: Node, text: str | None = None):
        self.expr = expr
        self.coefficients = _poly_coeffs(expr)
        if self.coefficients is not None:
            self.coefficients = np.trim_zeros(self.coefficients, "b")
            if len(self.coefficients) == 0:
                self.coefficients = np.zeros(1, dtype=complex)
        self.text = text if text is not None else to_text(expr)
        self._deriv: AnalyticFunction | None = None

    @classmethod
    def parse(cls, text: str) -> "AnalyticFunction":
        return cls(parse(text), text.strip())

    @classmethod
    def from_coefficients(cls, coeffs: Sequence[complex]) -> "AnalyticFunction":
        """Build a polynomial from ascending coefficients ``c0 + c1 z + ...``."""
        coeffs = np.asarray(coeffs, dtype=complex)
        node: Node = _const(0)
        for k, c in enumerate(coeffs):
            if c != 0:
                node = add(node, mul(_const(c), power(Var(), k)))
        out = cls(node)
        out.coefficients = np.trim_zeros(coeffs.copy(), "b")
        if len(out.coefficients) == 0:
            out.coefficients = np.zeros(1, dtype=complex)
        out.text = poly_text(out.coefficients)
        return out

    @property
    def is_polynomial(self) -> bool:
        return self.coefficients is not None

    @property
    def degree(self) -> int | None:
        return None if self.coefficients is None else len(self.coefficients) - 1

    def __call__(self, z):
        scalar = np.ndim(z) == 0
        z = np.asarray(z, dtype=complex)
        with np.errstate(over="ignore", invalid="ignore"):
            if self.coefficients is not None:
                out = np.polynomial.polynomial.polyval(z, self.coefficients)
            else:
                out = evaluate(self.expr, z)
        out = np.asarray(out, dtype=complex)
        if not np.all(np.isfinite(out)):
            raise NonFiniteValue("non-finite value")
        return complex(out) if scalar else out

    def derivative(self) -> "AnalyticFunction":
        if self._deriv is None:
            if self.coefficients is not None:
                c = self.coefficients
                dc = c[1:] * np.arange(1, len(c)) if len(c) > 1 else np.zeros(1, dtype=complex)
                self._deriv = AnalyticFunction.from_coefficients(dc)
            else:
                self._deriv = AnalyticFunction(differentiate(self.expr))
        return self._deriv

    def eval(self, z):
        return self(z)

    def eval_deriv(self, z):
        return self.derivative()(z)

    def compose_affine(self, a: complex, b: complex) -> "AnalyticFunction":
        """Return ``z -> f(a z + b)``."""
        if self.coefficients is not None:
            lin = np.array([b, a], dtype=complex)
            out = np.zeros(1, dtype=complex)
            acc = np.array([1], dtype=complex)
            for c in self.coefficients:
                out = np.pad(out, (0, max(0, len(acc) - len(out))))
                out[: len(acc)] += c * acc
                acc = np.convolve(acc, lin)
            return AnalyticFunction.from_coefficients(out)
        return AnalyticFunction(_substitute(self.expr, add(mul(_const(a), Var()), _const(b))))

    def __repr__(self):
        return f"AnalyticFunction({self.text!r})"

    def __str__(self):
        return self.text


def _substitute(node: Node, repl: Node) -> Node:
    if isinstance(node, Var):
        return repl
    if isinstance(node, Const):
        return node
    if isinstance(node, Add):
        return add(_substitute(node.left, repl), _substitute(node.right, repl))
    if isinstance(node, Mul):
        return mul(_substitute(node.left, repl), _substitute(node.right, repl))
    if isinstance(node, Pow):
        return power(_substitute(node.base, repl), node.exponent)
    if isinstance(node, Func):
        return func(node.name, _substitute(node.arg, repl))
    raise TypeError(node)


def poly_text(coeffs: Sequence[complex]) -> str:
    """Grammar-compatible text for ascending coefficients."""
    parts = []
    for k, c in enumerate(coeffs):
        c = complex(c)
        if c == 0:
            continue
        cs = _fmt_complex(c)
        if cs.startswith("-") and "+" not in cs:
            cs = f"({cs})"
        parts.append(cs if k == 0 else f"{cs}*z^{k}")
    return " + ".join(parts) if parts else "0.0"


def as_function(f) -> AnalyticFunction:
    if isinstance(f, AnalyticFunction):
        return f
    if isinstance(f, str):
        return AnalyticFunction.parse(f)
    return AnalyticFunction.from_coefficients(f)
