"""Initial-profile expressions over torus coordinates x1..xd.

A small recursive-descent parser for arithmetic with cos, sin, exp, abs,
min, max and the constant pi.  Power is right-associative and binds tighter
than unary minus; evaluation is vectorized over numpy arrays of positions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class ProfileSyntaxError(ValueError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at offset {position}")
        self.position = position


_FUNCTIONS = {
    "cos": (np.cos, 1),
    "sin": (np.sin, 1),
    "exp": (np.exp, 1),
    "abs": (np.abs, 1),
    "min": (None, 2),  # variadic >= 2, reduced below
    "max": (None, 2),
}


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    pos: int


def _tokenize(text: str) -> list[Token]:
    tokens = []
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c.isspace():
            i += 1
            continue
        if c.isdigit() or c == ".":
            j = i
            seen_exp = False
            while j < n and (text[j].isdigit() or text[j] == "." or text[j] in "eE"
                             or (text[j] in "+-" and j > i and text[j - 1] in "eE" and seen_exp)):
                if text[j] in "eE":
                    seen_exp = True
                j += 1
            try:
                float(text[i:j])
            except ValueError:
                raise ProfileSyntaxError(f"bad number {text[i:j]!r}", i) from None
            tokens.append(Token("number", text[i:j], i))
            i = j
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            tokens.append(Token("name", text[i:j], i))
            i = j
            continue
        if c in "+-*/^(),":
            tokens.append(Token(c, c, i))
            i += 1
            continue
        raise ProfileSyntaxError(f"unexpected character {c!r}", i)
    tokens.append(Token("end", "", n))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self) -> Token:
        return self.tokens[self.i]

    def take(self, kind: str | None = None) -> Token:
        tok = self.tokens[self.i]
        if kind is not None and tok.kind != kind:
            raise ProfileSyntaxError(f"expected {kind!r}, found {tok.text or 'end'!r}", tok.pos)
        self.i += 1
        return tok

    def parse(self):
        node = self.expr()
        tok = self.peek()
        if tok.kind != "end":
            raise ProfileSyntaxError(f"unexpected {tok.text!r}", tok.pos)
        return node

    def expr(self):
        node = self.term()
        while self.peek().kind in "+-":
            op = self.take().kind
            node = (op, node, self.term())
        return node

    def term(self):
        node = self.factor()
        while self.peek().kind in "*/":
            op = self.take().kind
            node = (op, node, self.factor())
        return node

    def factor(self):
        # unary minus binds below power: -x^2 is -(x^2)
        if self.peek().kind == "-":
            self.take()
            return ("neg", self.factor())
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek().kind == "^":
            self.take()
            return ("^", base, self.factor())
        return base

    def atom(self):
        tok = self.peek()
        if tok.kind == "number":
            self.take()
            return ("const", float(tok.text))
        if tok.kind == "(":
            self.take()
            node = self.expr()
            self.take(")")
            return node
        if tok.kind == "name":
            self.take()
            name = tok.text
            if self.peek().kind == "(":
                self.take()
                args = [self.expr()]
                while self.peek().kind == ",":
                    self.take()
                    args.append(self.expr())
                self.take(")")
                if name not in _FUNCTIONS:
                    raise ProfileSyntaxError(f"unknown function {name!r}", tok.pos)
                _, arity = _FUNCTIONS[name]
                if name in ("min", "max"):
                    if len(args) < 2:
                        raise ProfileSyntaxError(f"{name} needs at least 2 arguments", tok.pos)
                elif len(args) != arity:
                    raise ProfileSyntaxError(
                        f"{name} takes {arity} argument(s), got {len(args)}", tok.pos
                    )
                return ("call", name, tuple(args))
            if name == "pi":
                return ("const", math.pi)
            if name.startswith("x") and name[1:].isdigit() and int(name[1:]) >= 1:
                return ("var", int(name[1:]) - 1)
            raise ProfileSyntaxError(f"unknown identifier {name!r}", tok.pos)
        raise ProfileSyntaxError(f"expected a value, found {tok.text or 'end'!r}", tok.pos)


@dataclass(frozen=True)
class ProfileExpr:
    """Parsed expression; call with an (n, d) position array or a 1-vector."""

    source: str
    tree: tuple
    max_var: int

    def __call__(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if self.max_var >= pts.shape[1]:
            raise ValueError(
                f"expression uses x{self.max_var + 1} but points have {pts.shape[1]} coordinates"
            )
        out = _eval(self.tree, pts)
        return np.broadcast_to(out, (len(pts),)).astype(float)


def _max_var(node) -> int:
    kind = node[0]
    if kind == "var":
        return node[1]
    if kind == "const":
        return -1
    if kind == "neg":
        return _max_var(node[1])
    if kind == "call":
        return max((_max_var(a) for a in node[2]), default=-1)
    return max(_max_var(node[1]), _max_var(node[2]))


def _eval(node, pts):
    kind = node[0]
    if kind == "const":
        return node[1]
    if kind == "var":
        return pts[:, node[1]]
    if kind == "neg":
        return -_eval(node[1], pts)
    if kind == "call":
        args = [_eval(a, pts) for a in node[2]]
        name = node[1]
        if name == "min":
            out = args[0]
            for a in args[1:]:
                out = np.minimum(out, a)
            return out
        if name == "max":
            out = args[0]
            for a in args[1:]:
                out = np.maximum(out, a)
            return out
        return _FUNCTIONS[name][0](args[0])
    a, b = _eval(node[1], pts), _eval(node[2], pts)
    if kind == "+":
        return a + b
    if kind == "-":
        return a - b
    if kind == "*":
        return a * b
    if kind == "/":
        return a / b
    return np.power(a, b)


def parse_profile(text: str) -> ProfileExpr:
    tree = _Parser(text).parse()
    return ProfileExpr(text, tree, _max_var(tree))
