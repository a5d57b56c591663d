"""Tiny arithmetic expressions in ``x`` and ``y``.

Supports numbers, ``+ - * / ^`` (``^`` is right associative and binds
tighter than unary minus), parentheses and the functions ``sin``, ``cos``,
``exp`` and ``abs``. Expressions compile to vectorized numpy callables.
"""
from __future__ import annotations

import re
from typing import Callable

import numpy as np

FUNCTIONS = {"sin": np.sin, "cos": np.cos, "exp": np.exp, "abs": np.abs}
_TOKEN = re.compile(r"\s*(?:(\d+\.?\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)|([A-Za-z_]+)|(.))")

Fn = Callable[[np.ndarray, np.ndarray], np.ndarray]


class ExprError(ValueError):
    pass


def _tokenize(text: str) -> list[tuple[str, str]]:
    tokens = []
    pos = 0
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        num, name, op = m.groups()
        if num is not None:
            tokens.append(("num", num))
        elif name is not None:
            tokens.append(("name", name))
        elif op in "+-*/^()":
            tokens.append(("op", op))
        else:
            raise ExprError(f"unexpected character {op!r} at position {m.start(3)}")
        pos = m.end()
    tokens.append(("end", ""))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self, kind=None, value=None):
        tok = self.tokens[self.i]
        if (kind and tok[0] != kind) or (value and tok[1] != value):
            raise ExprError(f"expected {value or kind}, found {tok[1] or 'end of input'!r}")
        self.i += 1
        return tok

    def parse(self) -> Fn:
        fn = self.expr()
        self.take("end")
        return fn

    def expr(self) -> Fn:
        left = self.term()
        while self.peek() in (("op", "+"), ("op", "-")):
            op = self.take()[1]
            right = self.term()
            left = (lambda a, b: lambda x, y: a(x, y) + b(x, y))(left, right) if op == "+" else \
                   (lambda a, b: lambda x, y: a(x, y) - b(x, y))(left, right)
        return left

    def term(self) -> Fn:
        left = self.unary()
        while self.peek() in (("op", "*"), ("op", "/")):
            op = self.take()[1]
            right = self.unary()
            left = (lambda a, b: lambda x, y: a(x, y) * b(x, y))(left, right) if op == "*" else \
                   (lambda a, b: lambda x, y: a(x, y) / b(x, y))(left, right)
        return left

    def unary(self) -> Fn:
        if self.peek() == ("op", "-"):
            self.take()
            inner = self.unary()
            return lambda x, y: -inner(x, y)
        if self.peek() == ("op", "+"):
            self.take()
            return self.unary()
        return self.power()

    def power(self) -> Fn:
        base = self.atom()
        if self.peek() == ("op", "^"):
            self.take()
            exponent = self.unary()
            return lambda x, y: np.power(base(x, y), exponent(x, y))
        return base

    def atom(self) -> Fn:
        kind, value = self.take()
        if kind == "num":
            c = float(value)
            return lambda x, y: np.full(np.shape(x), c)
        if kind == "name":
            if value == "x":
                return lambda x, y: np.asarray(x, dtype=float)
            if value == "y":
                return lambda x, y: np.asarray(y, dtype=float)
            if value in FUNCTIONS:
                f = FUNCTIONS[value]
                self.take("op", "(")
                arg = self.expr()
                self.take("op", ")")
                return lambda x, y: f(arg(x, y))
            raise ExprError(f"unknown name {value!r}")
        if (kind, value) == ("op", "("):
            inner = self.expr()
            self.take("op", ")")
            return inner
        raise ExprError(f"unexpected {value or 'end of input'!r}")


def compile_expr(text: str) -> Fn:
    """Compile ``text`` to ``f(x, y)``."""
    if not text.strip():
        raise ExprError("empty expression")
    return _Parser(text).parse()
