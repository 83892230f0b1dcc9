"""
Arithmetic expressions in the phase-space variables ``x`` and ``p``.

Grammar (lowest to highest precedence)::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := '-' unary | power
    power  := atom ('^' unary)?          # right associative
    atom   := NUMBER | 'x' | 'p' | 'pi' | FUNC '(' expr ')' | '(' expr ')'

Evaluation works on floats or on numpy arrays of matching shape.
"""

from __future__ import annotations

import math
import re
import warnings
from dataclasses import dataclass
from typing import Union

import numpy as np

MAX_LENGTH = 4096

FUNCTIONS = {
    "sin": np.sin,
    "cos": np.cos,
    "exp": np.exp,
    "tanh": np.tanh,
    "sqrt": np.sqrt,
    "abs": np.abs,
}
VARIABLES = ("x", "p")


class ExprSyntaxError(ValueError):
    """Malformed expression text; ``offset`` is the 0-based character position."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


class UnknownIdentifierError(ExprSyntaxError):
    pass


class UnbalancedParenthesesError(ExprSyntaxError):
    pass


class EvalError(ArithmeticError):
    """Domain error or non-finite result while evaluating an expression."""


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Pi:
    pass


@dataclass(frozen=True)
class Neg:
    operand: Expr


@dataclass(frozen=True)
class BinOp:
    op: str
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Call:
    func: str
    arg: Expr


Expr = Union[Num, Var, Pi, Neg, BinOp, Call]

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_]\w*)|(?P<op>[-+*/^()]))"
)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos:].isspace():
            break
        m = _TOKEN.match(text, pos)
        if m is None:
            offset = pos + len(text[pos:]) - len(text[pos:].lstrip())
            raise ExprSyntaxError(f"unexpected character {text[offset]!r}", offset)
        kind = m.lastgroup
        tokens.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.i = 0

    @property
    def tok(self) -> tuple[str, str, int]:
        return self.tokens[self.i]

    def advance(self) -> tuple[str, str, int]:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def at(self, value: str) -> bool:
        kind, text, _ = self.tok
        return kind == "op" and text == value

    def parse(self) -> Expr:
        e = self.expr()
        kind, text, offset = self.tok
        if kind != "end":
            if text == ")":
                raise UnbalancedParenthesesError("unmatched ')'", offset)
            raise ExprSyntaxError(f"unexpected token {text!r}", offset)
        return e

    def expr(self) -> Expr:
        left = self.term()
        while self.at("+") or self.at("-"):
            op = self.advance()[1]
            left = BinOp(op, left, self.term())
        return left

    def term(self) -> Expr:
        left = self.unary()
        while self.at("*") or self.at("/"):
            op = self.advance()[1]
            left = BinOp(op, left, self.unary())
        return left

    def unary(self) -> Expr:
        if self.at("-"):
            self.advance()
            return Neg(self.unary())
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self.at("^"):
            self.advance()
            return BinOp("^", base, self.unary())
        return base

    def atom(self) -> Expr:
        kind, text, offset = self.advance()
        if kind == "num":
            return Num(float(text))
        if kind == "name":
            if text in VARIABLES:
                return Var(text)
            if text == "pi":
                return Pi()
            if text in FUNCTIONS:
                if not self.at("("):
                    raise ExprSyntaxError(f"expected '(' after {text}", self.tok[2])
                self.advance()
                return Call(text, self.group(offset + len(text)))
            raise UnknownIdentifierError(f"unknown identifier {text!r}", offset)
        if kind == "op" and text == "(":
            return self.group(offset)
        if kind == "end":
            raise ExprSyntaxError("unexpected end of input", offset)
        if text == ")":
            raise UnbalancedParenthesesError("unmatched ')'", offset)
        raise ExprSyntaxError(f"unexpected token {text!r}", offset)

    def group(self, open_offset: int) -> Expr:
        inner = self.expr()
        kind, text, offset = self.tok
        if not self.at(")"):
            if kind == "end":
                raise UnbalancedParenthesesError(f"missing ')' for '(' at {open_offset}", offset)
            raise ExprSyntaxError(f"expected ')' but found {text!r}", offset)
        self.advance()
        return inner


def parse(text: str) -> Expr:
    """Parse ``text`` into an expression tree."""
    if not text or not text.strip():
        raise ExprSyntaxError("empty expression", 0)
    if len(text) > MAX_LENGTH:
        raise ExprSyntaxError(f"expression longer than {MAX_LENGTH} characters", MAX_LENGTH)
    return _Parser(text).parse()


def to_string(e: Expr) -> str:
    """Canonical fully parenthesized form; ``parse(to_string(e)) == e``."""
    if isinstance(e, Num):
        return repr(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Pi):
        return "pi"
    if isinstance(e, Neg):
        return f"(-{to_string(e.operand)})"
    if isinstance(e, BinOp):
        return f"({to_string(e.left)} {e.op} {to_string(e.right)})"
    if isinstance(e, Call):
        return f"{e.func}({to_string(e.arg)})"
    raise TypeError(f"not an expression node: {e!r}")


def variables(e: Expr) -> set[str]:
    """Names of the variables occurring in ``e``."""
    if isinstance(e, Var):
        return {e.name}
    if isinstance(e, Neg):
        return variables(e.operand)
    if isinstance(e, BinOp):
        return variables(e.left) | variables(e.right)
    if isinstance(e, Call):
        return variables(e.arg)
    return set()


def _check(value, what: str):
    if not np.all(np.isfinite(value)):
        raise EvalError(f"non-finite result in {what}")
    return value


def _eval(e: Expr, x, p):
    if isinstance(e, Num):
        return e.value
    if isinstance(e, Var):
        return x if e.name == "x" else p
    if isinstance(e, Pi):
        return math.pi
    if isinstance(e, Neg):
        return -_eval(e.operand, x, p)
    if isinstance(e, Call):
        arg = _eval(e.arg, x, p)
        if e.func == "sqrt" and np.any(np.asarray(arg) < 0):
            raise EvalError("sqrt of a negative number")
        with np.errstate(all="ignore"):
            return _check(FUNCTIONS[e.func](arg), e.func)
    a = _eval(e.left, x, p)
    b = _eval(e.right, x, p)
    with np.errstate(all="ignore"):
        if e.op == "+":
            return _check(a + b, "addition")
        if e.op == "-":
            return _check(a - b, "subtraction")
        if e.op == "*":
            return _check(a * b, "multiplication")
        if e.op == "/":
            if np.any(np.asarray(b) == 0):
                raise EvalError("division by zero")
            return _check(a / b, "division")
        if e.op == "^":
            base, expo = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
            if np.any((base < 0) & (expo != np.round(expo))):
                raise EvalError("negative base raised to a non-integer power")
            if np.any((base == 0) & (expo < 0)):
                raise EvalError("division by zero in negative power")
            return _check(np.power(base, expo), "power")
    raise TypeError(f"not an expression node: {e!r}")


def evaluate(e: Expr, x, p):
    """
    Evaluate ``e`` at ``(x, p)``.

    Scalars give a float; arrays broadcast and give an array. Domain errors
    and non-finite results raise :class:`EvalError` instead of producing NaN.
    """
    scalar = np.isscalar(x) and np.isscalar(p)
    xa = float(x) if scalar else np.asarray(x, dtype=float)
    pa = float(p) if scalar else np.asarray(p, dtype=float)
    value = _eval(e, xa, pa)
    if scalar:
        return float(value)
    return np.broadcast_to(np.asarray(value, dtype=float), np.broadcast(xa, pa).shape).copy()


def grad(e: Expr, x, p, h: float = 1e-5):
    """Central-difference gradient ``(d/dx, d/dp)``; works elementwise on arrays."""
    if h <= 0:
        raise ValueError("step must be positive")
    gx = (evaluate(e, x + h, p) - evaluate(e, x - h, p)) / (2 * h)
    gp = (evaluate(e, x, p + h) - evaluate(e, x, p - h)) / (2 * h)
    return gx, gp


def hessian(e: Expr, x, p, h: float = 1e-4) -> np.ndarray:
    """
    Central-difference Hessian, symmetrized.

    Returns shape ``(2, 2)`` for scalar input, ``shape + (2, 2)`` for arrays.
    """
    if h <= 0:
        raise ValueError("step must be positive")
    f0 = evaluate(e, x, p)
    fxx = (evaluate(e, x + h, p) - 2 * f0 + evaluate(e, x - h, p)) / h**2
    fpp = (evaluate(e, x, p + h) - 2 * f0 + evaluate(e, x, p - h)) / h**2
    fxp = (
        evaluate(e, x + h, p + h)
        - evaluate(e, x + h, p - h)
        - evaluate(e, x - h, p + h)
        + evaluate(e, x - h, p - h)
    ) / (4 * h**2)
    H = np.stack([np.stack([fxx, fxp], -1), np.stack([fxp, fpp], -1)], -2)
    return (H + np.swapaxes(H, -1, -2)) / 2


def check_bounded(e: Expr, box: tuple[float, float, float, float], samples: int = 41, growth: float = 2.0) -> bool:
    """
    Heuristic boundedness probe for a perturbation symbol on ``box = (x0, x1, p0, p1)``.

    Compares ``|sigma|`` and the Hessian norm on the outer ring of the sampled
    box with the inner half; warns (never raises) when either grows by more
    than ``growth`` toward the boundary. Returns True when no warning fired.
    """
    x0, x1, p0, p1 = box
    X, P = np.meshgrid(np.linspace(x0, x1, samples), np.linspace(p0, p1, samples), indexing="ij")
    value = np.abs(evaluate(e, X, P))
    curvature = np.linalg.norm(hessian(e, X, P), ord=2, axis=(-2, -1))
    ring = np.zeros_like(value, dtype=bool)
    width = max(1, samples // 8)
    ring[:width, :] = ring[-width:, :] = ring[:, :width] = ring[:, -width:] = True
    core = np.zeros_like(ring)
    q = samples // 4
    core[q : samples - q, q : samples - q] = True
    ok = True
    for name, field in (("|sigma|", value), ("Hessian norm", curvature)):
        inner, outer = field[core].max(), field[ring].max()
        if outer > growth * inner + 1e-12:
            warnings.warn(
                f"{name} grows toward the box boundary ({inner:.3g} -> {outer:.3g}); "
                "the symbol may not have bounded second derivatives",
                stacklevel=2,
            )
            ok = False
    return ok
