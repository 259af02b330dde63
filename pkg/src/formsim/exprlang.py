"""Tiny expression language for scalar functions of time.

Scenario files describe the leader velocity profile and the time-varying
formation functions (relative distance / bearing and their rates) as text
expressions in a single variable ``t``.  The grammar is:

    expr  := term (('+' | '-') term)*
    term  := unary (('*' | '/') unary)*
    unary := '-' unary | atom
    atom  := number | 't' | 'pi' | ident '(' expr ')' | '(' expr ')'

with functions sin, cos, tan, exp, sqrt, abs.  Whitespace is ignored.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

__all__ = [
    "Expr",
    "ExprError",
    "ExprSyntaxError",
    "ExprEvalError",
    "parse",
    "evaluate",
    "evaluate_array",
    "to_source",
    "uses_time",
]

FUNCTIONS: dict[str, Callable[[float], float]] = {
    "sin": math.sin,
    "cos": math.cos,
    "tan": math.tan,
    "exp": math.exp,
    "sqrt": math.sqrt,
    "abs": abs,
}

_NUMPY_FUNCTIONS = {
    "sin": np.sin,
    "cos": np.cos,
    "tan": np.tan,
    "exp": np.exp,
    "sqrt": np.sqrt,
    "abs": np.abs,
}


class ExprError(ValueError):
    """Base class for expression language errors."""


class ExprSyntaxError(ExprError):
    """Malformed input; `offset` is the byte offset of the failure."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (offset {offset})")
        self.offset = offset


class ExprEvalError(ExprError):
    """Evaluation failed (division by zero, domain error, overflow)."""


@dataclass(frozen=True)
class Literal:
    value: float


@dataclass(frozen=True)
class TimeVar:
    pass


@dataclass(frozen=True)
class PiConst:
    pass


@dataclass(frozen=True)
class Neg:
    operand: "Expr"


@dataclass(frozen=True)
class BinOp:
    op: str  # one of + - * /
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Expr"


Expr = Union[Literal, TimeVar, PiConst, Neg, BinOp, Call]


_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/()]))"
)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            # skip trailing whitespace before declaring an error
            rest = text[pos:]
            if rest.strip() == "":
                break
            bad = pos + len(rest) - len(rest.lstrip())
            raise ExprSyntaxError(f"unexpected character {text[bad]!r}", bad)
        if m.group("num") is not None:
            tokens.append(("num", m.group("num"), m.start("num")))
        elif m.group("ident") is not None:
            tokens.append(("ident", m.group("ident"), m.start("ident")))
        else:
            tokens.append(("op", m.group("op"), m.start("op")))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self) -> tuple[str, str, int]:
        return self.tokens[self.i]

    def advance(self) -> tuple[str, str, int]:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect_op(self, op: str) -> None:
        kind, value, offset = self.peek()
        if kind != "op" or value != op:
            raise ExprSyntaxError(f"expected {op!r}", offset)
        self.advance()

    def parse(self) -> Expr:
        node = self.expr()
        kind, value, offset = self.peek()
        if kind != "end":
            raise ExprSyntaxError(f"unexpected {value!r}", offset)
        return node

    def expr(self) -> Expr:
        node = self.term()
        while True:
            kind, value, _ = self.peek()
            if kind == "op" and value in "+-":
                self.advance()
                node = BinOp(value, node, self.term())
            else:
                return node

    def term(self) -> Expr:
        node = self.unary()
        while True:
            kind, value, _ = self.peek()
            if kind == "op" and value in "*/":
                self.advance()
                node = BinOp(value, node, self.unary())
            else:
                return node

    def unary(self) -> Expr:
        kind, value, _ = self.peek()
        if kind == "op" and value == "-":
            self.advance()
            return Neg(self.unary())
        return self.atom()

    def atom(self) -> Expr:
        kind, value, offset = self.advance()
        if kind == "num":
            return Literal(float(value))
        if kind == "ident":
            if value == "t":
                return TimeVar()
            if value == "pi":
                return PiConst()
            if value in FUNCTIONS:
                self.expect_op("(")
                arg = self.expr()
                self.expect_op(")")
                return Call(value, arg)
            raise ExprSyntaxError(f"unknown identifier {value!r}", offset)
        if kind == "op" and value == "(":
            node = self.expr()
            self.expect_op(")")
            return node
        raise ExprSyntaxError("expected expression", offset)


def parse(text: str) -> Expr:
    """Parse `text` into an expression tree.

    Raises ExprSyntaxError (with a byte offset) on malformed input or
    unknown identifiers.
    """
    return _Parser(text).parse()


def evaluate(expr: Expr, t: float) -> float:
    """Evaluate `expr` at time `t`.

    Division by zero and domain errors raise ExprEvalError rather than
    producing infinities or NaNs.
    """
    if isinstance(expr, Literal):
        return expr.value
    if isinstance(expr, TimeVar):
        return float(t)
    if isinstance(expr, PiConst):
        return math.pi
    if isinstance(expr, Neg):
        return -evaluate(expr.operand, t)
    if isinstance(expr, BinOp):
        left = evaluate(expr.left, t)
        right = evaluate(expr.right, t)
        if expr.op == "+":
            return left + right
        if expr.op == "-":
            return left - right
        if expr.op == "*":
            return left * right
        if right == 0.0:
            raise ExprEvalError(f"division by zero at t={t}")
        return left / right
    if isinstance(expr, Call):
        arg = evaluate(expr.arg, t)
        try:
            result = FUNCTIONS[expr.func](arg)
        except (ValueError, OverflowError) as exc:
            raise ExprEvalError(f"{expr.func}({arg}) failed: {exc}") from exc
        if not math.isfinite(result):
            raise ExprEvalError(f"{expr.func}({arg}) is not finite")
        return result
    raise TypeError(f"not an expression node: {expr!r}")


def evaluate_array(expr: Expr, ts: np.ndarray) -> np.ndarray:
    """Vectorized evaluation over an array of times.

    Unlike `evaluate`, invalid operations produce non-finite entries
    (callers are expected to check with np.isfinite).
    """
    with np.errstate(all="ignore"):
        return np.broadcast_to(_eval_np(expr, ts), ts.shape).astype(float)


def _eval_np(expr: Expr, ts: np.ndarray):
    if isinstance(expr, Literal):
        return expr.value
    if isinstance(expr, TimeVar):
        return ts
    if isinstance(expr, PiConst):
        return math.pi
    if isinstance(expr, Neg):
        return -_eval_np(expr.operand, ts)
    if isinstance(expr, BinOp):
        left = _eval_np(expr.left, ts)
        right = _eval_np(expr.right, ts)
        if expr.op == "+":
            return left + right
        if expr.op == "-":
            return left - right
        if expr.op == "*":
            return left * right
        return np.divide(left, right)
    if isinstance(expr, Call):
        return _NUMPY_FUNCTIONS[expr.func](_eval_np(expr.arg, ts))
    raise TypeError(f"not an expression node: {expr!r}")


def uses_time(expr: Expr) -> bool:
    """True if the expression references the variable t anywhere."""
    if isinstance(expr, TimeVar):
        return True
    if isinstance(expr, Neg):
        return uses_time(expr.operand)
    if isinstance(expr, BinOp):
        return uses_time(expr.left) or uses_time(expr.right)
    if isinstance(expr, Call):
        return uses_time(expr.arg)
    return False


_PREC = {"+": 1, "-": 1, "*": 2, "/": 2}


def _prec(expr: Expr) -> int:
    if isinstance(expr, BinOp):
        return _PREC[expr.op]
    if isinstance(expr, Neg):
        return 3
    return 4


def to_source(expr: Expr) -> str:
    """Render `expr` back to text; to_source(parse(s)) is a fixed point."""
    if isinstance(expr, Literal):
        return repr(expr.value)
    if isinstance(expr, TimeVar):
        return "t"
    if isinstance(expr, PiConst):
        return "pi"
    if isinstance(expr, Neg):
        inner = to_source(expr.operand)
        if _prec(expr.operand) < 3:
            inner = f"({inner})"
        return f"-{inner}"
    if isinstance(expr, BinOp):
        left = to_source(expr.left)
        right = to_source(expr.right)
        if _prec(expr.left) < _PREC[expr.op]:
            left = f"({left})"
        # - and / are left-associative: parenthesize equal-precedence RHS
        if _prec(expr.right) < _PREC[expr.op] or (
            _prec(expr.right) == _PREC[expr.op] and expr.op in "-/"
        ):
            right = f"({right})"
        return f"{left}{expr.op}{right}"
    if isinstance(expr, Call):
        return f"{expr.func}({to_source(expr.arg)})"
    raise TypeError(f"not an expression node: {expr!r}")
