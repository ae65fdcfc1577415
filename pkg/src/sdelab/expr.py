"""Arithmetic expressions in one variable, parsed by recursive descent.

Configuration files describe potentials as plain text like
``x^4/4 - x^2/2``.  The grammar is deliberately small:

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := ('+' | '-') unary | power
    power  := atom ('^' unary)?
    atom   := NUMBER | 'x' | '(' expr ')'

``^`` is exponentiation and associates to the right (``2^3^2`` is 512);
unary minus binds looser, so ``-x^2`` means ``-(x^2)``.  Parsed
expressions evaluate through numpy and broadcast over arrays, which the
Monte Carlo drivers rely on.  Errors carry the line and column where
parsing stopped.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterator, NamedTuple

import numpy as np

__all__ = ["Expression", "ExpressionError", "parse_expression"]


class ExpressionError(ValueError):
    """Parse failure with the offending source position."""

    def __init__(self, message: str, line: int, column: int) -> None:
        super().__init__(f"{message} at line {line}, column {column}")
        self.message = message
        self.line = line
        self.column = column


class _Token(NamedTuple):
    kind: str  # "number", "name", "op", "end"
    text: str
    line: int
    column: int


_NUMBER = re.compile(r"(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?")
_NAME = re.compile(r"[A-Za-z_][A-Za-z_0-9]*")


def _tokenize(text: str) -> Iterator[_Token]:
    line, column = 1, 1
    pos = 0
    while pos < len(text):
        ch = text[pos]
        if ch == "\n":
            line += 1
            column = 1
            pos += 1
            continue
        if ch in " \t\r":
            pos += 1
            column += 1
            continue
        if match := _NUMBER.match(text, pos):
            yield _Token("number", match.group(), line, column)
        elif match := _NAME.match(text, pos):
            yield _Token("name", match.group(), line, column)
        elif ch in "+-*/^()":
            yield _Token("op", ch, line, column)
            pos += 1
            column += 1
            continue
        else:
            raise ExpressionError(f"unexpected character {ch!r}", line, column)
        column += match.end() - pos
        pos = match.end()
    yield _Token("end", "", line, column)


@dataclass(frozen=True)
class _Node:
    """Evaluation tree: a constant, the variable, or an operator node."""

    op: str  # "const", "var", or one of + - * / ^ neg
    value: float = 0.0
    left: "_Node | None" = None
    right: "_Node | None" = None

    def evaluate(self, x: np.ndarray) -> np.ndarray:
        if self.op == "const":
            return np.full_like(x, self.value)
        if self.op == "var":
            return x
        if self.op == "neg":
            return -self.left.evaluate(x)
        a = self.left.evaluate(x)
        b = self.right.evaluate(x)
        if self.op == "+":
            return a + b
        if self.op == "-":
            return a - b
        if self.op == "*":
            return a * b
        if self.op == "/":
            return a / b
        return np.power(a, b)


def _const(value: float) -> _Node:
    return _Node("const", value=float(value))


def _is_const(node: _Node, value: float | None = None) -> bool:
    return node.op == "const" and (value is None or node.value == value)


def _neg(a: _Node) -> _Node:
    if a.op == "const":
        return _const(-a.value)
    if a.op == "neg":
        return a.left
    return _Node("neg", left=a)


def _add(a: _Node, b: _Node) -> _Node:
    if _is_const(a, 0.0):
        return b
    if _is_const(b, 0.0):
        return a
    if a.op == "const" and b.op == "const":
        return _const(a.value + b.value)
    return _Node("+", left=a, right=b)


def _sub(a: _Node, b: _Node) -> _Node:
    if _is_const(b, 0.0):
        return a
    if _is_const(a, 0.0):
        return _neg(b)
    if a.op == "const" and b.op == "const":
        return _const(a.value - b.value)
    return _Node("-", left=a, right=b)


def _mul(a: _Node, b: _Node) -> _Node:
    if _is_const(a, 0.0) or _is_const(b, 0.0):
        return _const(0.0)
    if _is_const(a, 1.0):
        return b
    if _is_const(b, 1.0):
        return a
    if a.op == "const" and b.op == "const":
        return _const(a.value * b.value)
    return _Node("*", left=a, right=b)


def _div(a: _Node, b: _Node) -> _Node:
    if _is_const(b, 1.0):
        return a
    if a.op == "const" and b.op == "const" and b.value != 0.0:
        return _const(a.value / b.value)
    return _Node("/", left=a, right=b)


def _pow(a: _Node, b: _Node) -> _Node:
    if _is_const(b, 1.0):
        return a
    if _is_const(b, 0.0):
        return _const(1.0)
    if a.op == "const" and b.op == "const":
        return _const(a.value ** b.value)
    return _Node("^", left=a, right=b)


def _depends_on_x(node: _Node) -> bool:
    if node.op == "var":
        return True
    return any(_depends_on_x(child) for child in (node.left, node.right)
               if child is not None)


def _diff(node: _Node) -> _Node:
    if node.op == "const":
        return _const(0.0)
    if node.op == "var":
        return _const(1.0)
    if node.op == "neg":
        return _neg(_diff(node.left))
    a, b = node.left, node.right
    if node.op == "+":
        return _add(_diff(a), _diff(b))
    if node.op == "-":
        return _sub(_diff(a), _diff(b))
    if node.op == "*":
        return _add(_mul(_diff(a), b), _mul(a, _diff(b)))
    if node.op == "/":
        if not _depends_on_x(b):
            return _div(_diff(a), b)
        numerator = _sub(_mul(_diff(a), b), _mul(a, _diff(b)))
        return _div(numerator, _mul(b, b))
    if _depends_on_x(b):
        raise ValueError(
            "cannot differentiate a power whose exponent contains x")
    return _mul(_mul(b, _pow(a, _sub(b, _const(1.0)))), _diff(a))


_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "neg": 2, "^": 4}


def _render(node: _Node, context: int = 0) -> str:
    if node.op == "const":
        value = node.value
        text = str(int(value)) if value == int(value) and abs(value) < 1e16 \
            else repr(value)
        prec = 9 if value >= 0 else 1
    elif node.op == "var":
        text, prec = "x", 9
    elif node.op == "neg":
        text, prec = "-" + _render(node.left, 3), _PREC["neg"]
    else:
        prec = _PREC[node.op]
        if node.op == "^":
            text = _render(node.left, prec + 1) + "^" + _render(node.right, prec)
        else:
            text = _render(node.left, prec) + node.op + _render(node.right, prec + 1)
    return f"({text})" if prec < context else text


class _Parser:
    def __init__(self, text: str) -> None:
        self.tokens = list(_tokenize(text))
        self.pos = 0

    @property
    def head(self) -> _Token:
        return self.tokens[self.pos]

    def take(self) -> _Token:
        token = self.tokens[self.pos]
        self.pos += 1
        return token

    def expect_op(self, text: str) -> None:
        token = self.take()
        if token.kind != "op" or token.text != text:
            shown = repr(token.text) if token.kind != "end" else "end of input"
            raise ExpressionError(f"expected {text!r}, found {shown}",
                                  token.line, token.column)

    def expr(self) -> _Node:
        node = self.term()
        while self.head.kind == "op" and self.head.text in "+-":
            op = self.take().text
            node = _Node(op, left=node, right=self.term())
        return node

    def term(self) -> _Node:
        node = self.unary()
        while self.head.kind == "op" and self.head.text in "*/":
            op = self.take().text
            node = _Node(op, left=node, right=self.unary())
        return node

    def unary(self) -> _Node:
        if self.head.kind == "op" and self.head.text in "+-":
            op = self.take().text
            inner = self.unary()
            return inner if op == "+" else _Node("neg", left=inner)
        return self.power()

    def power(self) -> _Node:
        base = self.atom()
        if self.head.kind == "op" and self.head.text == "^":
            self.take()
            return _Node("^", left=base, right=self.unary())
        return base

    def atom(self) -> _Node:
        token = self.take()
        if token.kind == "number":
            return _Node("const", value=float(token.text))
        if token.kind == "name":
            if token.text != "x":
                raise ExpressionError(
                    f"unknown name {token.text!r}; the only variable is 'x'",
                    token.line, token.column)
            return _Node("var")
        if token.kind == "op" and token.text == "(":
            inner = self.expr()
            self.expect_op(")")
            return inner
        shown = repr(token.text) if token.kind != "end" else "end of input"
        raise ExpressionError(f"expected a number, 'x' or '(', found {shown}",
                              token.line, token.column)

    def parse(self) -> _Node:
        if self.head.kind == "end":
            raise ExpressionError("empty expression", self.head.line,
                                  self.head.column)
        node = self.expr()
        if self.head.kind != "end":
            raise ExpressionError(f"unexpected {self.head.text!r} after the "
                                  "expression", self.head.line, self.head.column)
        return node


@dataclass(frozen=True)
class Expression:
    """A parsed one-variable expression, callable on scalars and arrays."""

    source: str
    root: _Node

    def __call__(self, x) -> float | np.ndarray:
        arr = np.asarray(x, dtype=float)
        out = self.root.evaluate(arr)
        return float(out) if np.ndim(x) == 0 else out

    def __repr__(self) -> str:
        return f"Expression({self.source!r})"

    def derivative(self) -> "Expression":
        """The symbolic derivative d/dx, with constants folded.

        The result is exact — no finite-difference noise — which matters
        when the derivative feeds an optimizer.  Raises ``ValueError``
        for powers whose exponent contains ``x``, since the grammar has
        no logarithm to express their derivative.
        """
        root = _diff(self.root)
        return Expression(_render(root), root)


def parse_expression(text: str) -> Expression:
    """Parse ``text`` into a callable :class:`Expression`.

    Raises :class:`ExpressionError` with the line and column of the first
    problem; the message names unknown identifiers explicitly.
    """
    return Expression(text, _Parser(text).parse())
