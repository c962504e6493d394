"""Tiny arithmetic language for density fields such as ``1/(1+4*(u^2+v^2))``.

Grammar::

    expr   := term (("+" | "-") term)*
    term   := factor (("*" | "/") factor)*
    factor := "-"? power
    power  := atom ("^" factor)?
    atom   := NUMBER | IDENT | IDENT "(" expr ")" | "(" expr ")"

``^`` binds tighter than unary minus, which binds tighter than ``*`` and ``/``.
Binary ``+ - * /`` associate to the left and ``^`` to the right.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Callable, Mapping, Union

import numpy as np

VARIABLES = frozenset({"u", "v", "x", "y"})
CONSTANTS = {"pi": math.pi}
FUNCTIONS = frozenset({"sin", "cos", "exp", "sqrt", "abs"})


class ExprError(Exception):
    """Base class for density-expression errors."""


class ParseError(ExprError):
    def __init__(self, message: str, offset: int, expected: frozenset[str] = frozenset()):
        self.offset = offset
        self.expected = frozenset(expected)
        detail = f"{message} at byte offset {offset}"
        if self.expected:
            detail += f" (expected one of: {', '.join(sorted(self.expected))})"
        super().__init__(detail)


class UnknownIdentifierError(ParseError):
    pass


class EvalError(ExprError):
    """Domain error during evaluation (division by zero, sqrt of a negative, overflow)."""


class UnboundVariableError(EvalError):
    pass


# --- AST -------------------------------------------------------------------


@dataclass(frozen=True)
class Num:
    value: float

    def __post_init__(self):
        if not math.isfinite(self.value) or self.value < 0:
            raise ValueError("numeric literals are finite and non-negative")


@dataclass(frozen=True)
class Name:
    id: str


@dataclass(frozen=True)
class Neg:
    operand: "Node"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Node"


Node = Union[Num, Name, Neg, BinOp, Call]


@dataclass(frozen=True)
class DensityExpr:
    """A parsed expression. Immutable; evaluation is pure."""

    root: Node
    source: str = ""

    def __str__(self) -> str:
        return to_string(self.root)

    def free_variables(self) -> frozenset[str]:
        return _free(self.root)

    def __call__(self, **point: float) -> float:
        return eval_density(self, point)


def _free(node: Node) -> frozenset[str]:
    if isinstance(node, Name):
        return frozenset({node.id}) if node.id in VARIABLES else frozenset()
    if isinstance(node, Num):
        return frozenset()
    if isinstance(node, Neg):
        return _free(node.operand)
    if isinstance(node, Call):
        return _free(node.arg)
    return _free(node.left) | _free(node.right)


# --- lexer -----------------------------------------------------------------

_NUMBER = re.compile(rb"(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?")
_IDENT = re.compile(rb"[A-Za-z_][A-Za-z_0-9]*")
_PUNCT = frozenset(b"+-*/^()")


@dataclass(frozen=True)
class _Token:
    kind: str  # "num", "ident", one of the punctuation chars, or "end"
    text: str
    offset: int


def _tokenize(data: bytes) -> list[_Token]:
    tokens: list[_Token] = []
    pos = 0
    while pos < len(data):
        ch = data[pos]
        if chr(ch).isspace():
            pos += 1
            continue
        if ch in _PUNCT:
            tokens.append(_Token(chr(ch), chr(ch), pos))
            pos += 1
            continue
        m = _NUMBER.match(data, pos)
        if m:
            tokens.append(_Token("num", m.group().decode(), pos))
            pos = m.end()
            continue
        m = _IDENT.match(data, pos)
        if m:
            tokens.append(_Token("ident", m.group().decode(), pos))
            pos = m.end()
            continue
        raise ParseError(f"unexpected character {data[pos:pos + 1]!r}", pos,
                         frozenset({"NUMBER", "IDENT", "(", "-"}))
    tokens.append(_Token("end", "", len(data)))
    return tokens


# --- parser ----------------------------------------------------------------

_ATOM_START = frozenset({"NUMBER", "IDENT", "("})


class _Parser:
    def __init__(self, tokens: list[_Token]):
        self.tokens = tokens
        self.pos = 0

    @property
    def tok(self) -> _Token:
        return self.tokens[self.pos]

    def advance(self) -> _Token:
        t = self.tokens[self.pos]
        self.pos += 1
        return t

    def expect(self, kind: str) -> _Token:
        if self.tok.kind != kind:
            raise ParseError(f"unexpected {self._describe(self.tok)}", self.tok.offset,
                             frozenset({kind}))
        return self.advance()

    @staticmethod
    def _describe(t: _Token) -> str:
        return "end of input" if t.kind == "end" else repr(t.text)

    def parse(self) -> Node:
        node = self.expr()
        if self.tok.kind != "end":
            raise ParseError(f"unexpected {self._describe(self.tok)}", self.tok.offset,
                             frozenset({"+", "-", "*", "/", "^", "end of input"}))
        return node

    def expr(self) -> Node:
        node = self.term()
        while self.tok.kind in ("+", "-"):
            op = self.advance().kind
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Node:
        node = self.factor()
        while self.tok.kind in ("*", "/"):
            op = self.advance().kind
            node = BinOp(op, node, self.factor())
        return node

    def factor(self) -> Node:
        if self.tok.kind == "-":
            self.advance()
            return Neg(self.power(after_minus=True))
        return self.power()

    def power(self, after_minus: bool = False) -> Node:
        base = self.atom(after_minus)
        if self.tok.kind == "^":
            self.advance()
            return BinOp("^", base, self.factor())
        return base

    def atom(self, after_minus: bool = False) -> Node:
        t = self.tok
        if t.kind == "num":
            self.advance()
            value = float(t.text)
            if not math.isfinite(value):
                raise ParseError(f"numeric literal {t.text!r} overflows", t.offset)
            return Num(value)
        if t.kind == "ident":
            self.advance()
            if t.text in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Call(t.text, arg)
            if t.text in VARIABLES or t.text in CONSTANTS:
                return Name(t.text)
            raise UnknownIdentifierError(f"unknown identifier {t.text!r}", t.offset,
                                         VARIABLES | CONSTANTS.keys() | FUNCTIONS)
        if t.kind == "(":
            self.advance()
            node = self.expr()
            self.expect(")")
            return node
        expected = _ATOM_START if after_minus else _ATOM_START | {"-"}
        raise ParseError(f"unexpected {self._describe(t)}", t.offset, frozenset(expected))


def parse_density(text: str) -> DensityExpr:
    """Parse ``text`` into a :class:`DensityExpr`.

    Raises :class:`ParseError` carrying the byte offset of the offending token
    and the set of tokens that would have been accepted there.
    """
    data = text.encode("utf-8")
    return DensityExpr(_Parser(_tokenize(data)).parse(), text)


# --- printing --------------------------------------------------------------


def to_string(node: Node) -> str:
    """Render ``node`` so that re-parsing yields a structurally identical tree."""
    if isinstance(node, Num):
        return repr(node.value)
    if isinstance(node, Name):
        return node.id
    if isinstance(node, Call):
        return f"{node.func}({to_string(node.arg)})"
    if isinstance(node, Neg):
        return f"-{_wrap(node.operand)}"
    return f"{_wrap(node.left)} {node.op} {_wrap(node.right)}"


def _wrap(node: Node) -> str:
    s = to_string(node)
    return s if isinstance(node, (Num, Name, Call)) else f"({s})"


# --- evaluation ------------------------------------------------------------

_SCALAR_FUNCS: dict[str, Callable[[float], float]] = {
    "sin": math.sin,
    "cos": math.cos,
    "exp": math.exp,
    "sqrt": math.sqrt,
    "abs": abs,
}


def eval_density(e: DensityExpr | Node, point: Mapping[str, float]) -> float:
    """Evaluate at a single point in double precision."""
    node = e.root if isinstance(e, DensityExpr) else e
    return _eval(node, point)


def _checked(value: float, what: str) -> float:
    if not math.isfinite(value):
        raise EvalError(f"{what} produced a non-finite value")
    return value


def _eval(node: Node, env: Mapping[str, float]) -> float:
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Name):
        if node.id in CONSTANTS:
            return CONSTANTS[node.id]
        try:
            return float(env[node.id])
        except KeyError:
            raise UnboundVariableError(f"variable {node.id!r} is not bound") from None
    if isinstance(node, Neg):
        return -_eval(node.operand, env)
    if isinstance(node, Call):
        a = _eval(node.arg, env)
        if node.func == "sqrt" and a < 0:
            raise EvalError(f"sqrt of negative value {a!r}")
        try:
            return _checked(_SCALAR_FUNCS[node.func](a), node.func)
        except (OverflowError, ValueError) as exc:
            raise EvalError(f"{node.func}({a!r}): {exc}") from None
    a = _eval(node.left, env)
    b = _eval(node.right, env)
    op = node.op
    if op == "+":
        return _checked(a + b, "addition")
    if op == "-":
        return _checked(a - b, "subtraction")
    if op == "*":
        return _checked(a * b, "multiplication")
    if op == "/":
        if b == 0:
            raise EvalError("division by zero")
        return _checked(a / b, "division")
    try:
        return _checked(math.pow(a, b), "power")
    except (OverflowError, ValueError) as exc:
        raise EvalError(f"{a!r}^{b!r}: {exc}") from None


_ARRAY_FUNCS = {"sin": np.sin, "cos": np.cos, "exp": np.exp, "sqrt": np.sqrt, "abs": np.abs}


def eval_density_array(e: DensityExpr, env: Mapping[str, np.ndarray]) -> np.ndarray:
    """Vectorised evaluation over broadcastable arrays.

    Same domain rules as :func:`eval_density`: any offending element raises
    :class:`EvalError` for the whole batch.
    """
    with np.errstate(all="ignore"):
        return _eval_array(e.root, env)


def _finite(arr: np.ndarray, what: str) -> np.ndarray:
    if not np.all(np.isfinite(arr)):
        raise EvalError(f"{what} produced a non-finite value")
    return arr


def _eval_array(node: Node, env: Mapping[str, np.ndarray]):
    if isinstance(node, Num):
        return np.float64(node.value)
    if isinstance(node, Name):
        if node.id in CONSTANTS:
            return np.float64(CONSTANTS[node.id])
        try:
            return np.asarray(env[node.id], dtype=float)
        except KeyError:
            raise UnboundVariableError(f"variable {node.id!r} is not bound") from None
    if isinstance(node, Neg):
        return -_eval_array(node.operand, env)
    if isinstance(node, Call):
        a = _eval_array(node.arg, env)
        if node.func == "sqrt" and np.any(a < 0):
            raise EvalError("sqrt of negative value")
        return _finite(_ARRAY_FUNCS[node.func](a), node.func)
    a = _eval_array(node.left, env)
    b = _eval_array(node.right, env)
    if node.op == "+":
        return _finite(a + b, "addition")
    if node.op == "-":
        return _finite(a - b, "subtraction")
    if node.op == "*":
        return _finite(a * b, "multiplication")
    if node.op == "/":
        if np.any(b == 0):
            raise EvalError("division by zero")
        return _finite(a / b, "division")
    if np.any((a < 0) & (b != np.round(b))):
        raise EvalError("negative base raised to a non-integer power")
    if np.any((a == 0) & (b < 0)):
        raise EvalError("division by zero")
    return _finite(np.power(a, b), "power")
