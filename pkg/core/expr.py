"""
Coefficient expressions for affine parameter dependence.

A coefficient theta(omega) is a small expression over the parameters
w1..wd built from numbers, + - * /, integer powers and the functions
sin, cos, exp, sqrt and abs. This module parses such expressions,
evaluates them and differentiates them symbolically.

Grammar (whitespace insignificant):

    expr   := term (('+'|'-') term)*
    term   := factor (('*'|'/') factor)*
    factor := base ('^' integer)?
    base   := number | 'w' integer | func '(' expr ')' | '(' expr ')' | '-' base
"""

import math
import re
from dataclasses import dataclass
from typing import Iterator, List, Optional, Sequence, Tuple

from .errors import (
    ExprDifferentiationError,
    ExprEvaluationError,
    ExprSymbolError,
    ExprSyntaxError,
)

FUNCTIONS = {
    "sin": math.sin,
    "cos": math.cos,
    "exp": math.exp,
    "sqrt": math.sqrt,
    "abs": abs,
}

# Binding strength used by the printer.
_PREC_SUM = 1
_PREC_PRODUCT = 2
_PREC_UNARY = 3
_PREC_POWER = 4
_PREC_ATOM = 5


def _format_number(value: float) -> str:
    if value.is_integer() and abs(value) < 1e16:
        return str(int(value))
    return repr(value)


def _wrap(node: "Expr", min_prec: int) -> str:
    text = str(node)
    return f"({text})" if node.precedence < min_prec else text


class Expr:
    """Base class of the immutable expression tree."""

    precedence = _PREC_ATOM

    def children(self) -> Tuple["Expr", ...]:
        return ()

    def walk(self) -> Iterator["Expr"]:
        """Yield this node and all of its descendants."""
        yield self
        for child in self.children():
            yield from child.walk()

    def evaluate(self, omega: Sequence[float]) -> float:
        """
        Evaluate at a parameter point.

        Args:
            omega: Parameter values (w1 is omega[0])

        Returns:
            Finite float value

        Raises:
            ExprEvaluationError: If the value (or a subexpression) is not finite
        """
        try:
            value = float(self._compute(omega))
        except (ZeroDivisionError, ValueError, OverflowError, IndexError) as e:
            raise ExprEvaluationError("Evaluation failed", str(self), original_error=e)
        if not math.isfinite(value):
            raise ExprEvaluationError("Non-finite value", str(self))
        return value

    def diff(self, j: int) -> "Expr":
        """Exact partial derivative with respect to w_j, simplified."""
        if j < 1:
            raise ExprSymbolError(f"Parameter index must be >= 1, got {j}")
        return self._diff(j)

    def max_parameter(self) -> int:
        """Largest parameter index referenced (0 for constants)."""
        return max((node.index for node in self.walk() if isinstance(node, Param)), default=0)

    def uses_function(self, name: str) -> bool:
        return any(isinstance(node, Func) and node.name == name for node in self.walk())

    def _compute(self, omega: Sequence[float]) -> float:
        raise NotImplementedError

    def _diff(self, j: int) -> "Expr":
        raise NotImplementedError


@dataclass(frozen=True)
class Const(Expr):
    value: float

    @property
    def precedence(self) -> int:
        return _PREC_UNARY if self.value < 0 else _PREC_ATOM

    def _compute(self, omega):
        return self.value

    def _diff(self, j):
        return ZERO

    def __str__(self):
        if self.value < 0:
            return "-" + _format_number(-self.value)
        return _format_number(self.value)


@dataclass(frozen=True)
class Param(Expr):
    index: int

    def _compute(self, omega):
        return omega[self.index - 1]

    def _diff(self, j):
        return ONE if j == self.index else ZERO

    def __str__(self):
        return f"w{self.index}"


@dataclass(frozen=True)
class Neg(Expr):
    arg: Expr
    precedence = _PREC_UNARY

    def children(self):
        return (self.arg,)

    def _compute(self, omega):
        return -self.arg.evaluate(omega)

    def _diff(self, j):
        return neg(self.arg._diff(j))

    def __str__(self):
        # Only a base may follow a unary minus.
        inner = str(self.arg)
        if self.arg.precedence not in (_PREC_UNARY, _PREC_ATOM):
            inner = f"({inner})"
        return "-" + inner


@dataclass(frozen=True)
class BinOp(Expr):
    op: str
    left: Expr
    right: Expr

    @property
    def precedence(self) -> int:
        return _PREC_SUM if self.op in "+-" else _PREC_PRODUCT

    def children(self):
        return (self.left, self.right)

    def _compute(self, omega):
        a = self.left.evaluate(omega)
        b = self.right.evaluate(omega)
        if self.op == "+":
            return a + b
        if self.op == "-":
            return a - b
        if self.op == "*":
            return a * b
        return a / b

    def _diff(self, j):
        da = self.left._diff(j)
        db = self.right._diff(j)
        if self.op == "+":
            return add(da, db)
        if self.op == "-":
            return sub(da, db)
        if self.op == "*":
            return add(mul(da, self.right), mul(self.left, db))
        numerator = sub(mul(da, self.right), mul(self.left, db))
        return div(numerator, power(self.right, 2))

    def __str__(self):
        prec = self.precedence
        return f"{_wrap(self.left, prec)}{self.op}{_wrap(self.right, prec + 1)}"


@dataclass(frozen=True)
class Pow(Expr):
    base: Expr
    exponent: int
    precedence = _PREC_POWER

    def children(self):
        return (self.base,)

    def _compute(self, omega):
        return self.base.evaluate(omega) ** self.exponent

    def _diff(self, j):
        inner = self.base._diff(j)
        outer = mul(Const(float(self.exponent)), power(self.base, self.exponent - 1))
        return mul(outer, inner)

    def __str__(self):
        return f"{_wrap(self.base, _PREC_ATOM)}^{self.exponent}"


@dataclass(frozen=True)
class Func(Expr):
    name: str
    arg: Expr

    def children(self):
        return (self.arg,)

    def _compute(self, omega):
        return FUNCTIONS[self.name](self.arg.evaluate(omega))

    def _diff(self, j):
        inner = self.arg._diff(j)
        if self.name == "sin":
            outer = func("cos", self.arg)
        elif self.name == "cos":
            outer = neg(func("sin", self.arg))
        elif self.name == "exp":
            outer = self
        elif self.name == "sqrt":
            outer = div(ONE, mul(Const(2.0), self))
        else:
            raise ExprDifferentiationError(f"'{self.name}' is not differentiable: {self}")
        return mul(outer, inner)

    def __str__(self):
        return f"{self.name}({self.arg})"


ZERO = Const(0.0)
ONE = Const(1.0)


def _is_const(e: Expr, value: Optional[float] = None) -> bool:
    return isinstance(e, Const) and (value is None or e.value == value)


def _fold(node: Expr) -> Expr:
    """Replace a constant-only node by its value when that value is finite."""
    try:
        return Const(node.evaluate(()))
    except ExprEvaluationError:
        return node


# Simplifying constructors used by diff: constant folding plus the
# identities 0*x -> 0, 1*x -> x, x+0 -> x, x-0 -> x, x/1 -> x, x^0 -> 1, x^1 -> x.

def neg(a: Expr) -> Expr:
    if isinstance(a, Const):
        return Const(-a.value)
    if isinstance(a, Neg):
        return a.arg
    return Neg(a)


def add(a: Expr, b: Expr) -> Expr:
    if _is_const(a, 0.0):
        return b
    if _is_const(b, 0.0):
        return a
    if isinstance(a, Const) and isinstance(b, Const):
        return _fold(BinOp("+", a, b))
    return BinOp("+", a, b)


def sub(a: Expr, b: Expr) -> Expr:
    if _is_const(b, 0.0):
        return a
    if _is_const(a, 0.0):
        return neg(b)
    if isinstance(a, Const) and isinstance(b, Const):
        return _fold(BinOp("-", a, b))
    return BinOp("-", a, b)


def mul(a: Expr, b: Expr) -> Expr:
    if _is_const(a, 0.0) or _is_const(b, 0.0):
        return ZERO
    if _is_const(a, 1.0):
        return b
    if _is_const(b, 1.0):
        return a
    if _is_const(a, -1.0):
        return neg(b)
    if _is_const(b, -1.0):
        return neg(a)
    if isinstance(a, Const) and isinstance(b, Const):
        return _fold(BinOp("*", a, b))
    return BinOp("*", a, b)


def div(a: Expr, b: Expr) -> Expr:
    if _is_const(b, 1.0):
        return a
    if _is_const(a, 0.0) and not _is_const(b, 0.0):
        return ZERO
    if isinstance(a, Const) and isinstance(b, Const):
        return _fold(BinOp("/", a, b))
    return BinOp("/", a, b)


def power(base: Expr, exponent: int) -> Expr:
    if exponent == 0:
        return ONE
    if exponent == 1:
        return base
    if isinstance(base, Const):
        return _fold(Pow(base, exponent))
    return Pow(base, exponent)


def func(name: str, arg: Expr) -> Expr:
    if isinstance(arg, Const):
        return _fold(Func(name, arg))
    return Func(name, arg)


_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()]))"
)


class _Parser:
    """Recursive descent parser over a token list of (kind, text, position)."""

    def __init__(self, text: str, d: int):
        self.text = text
        self.d = d
        self.tokens = self._tokenize(text)
        self.pos = 0

    def _tokenize(self, text: str) -> List[Tuple[str, str, int]]:
        tokens = []
        idx = 0
        while True:
            while idx < len(text) and text[idx].isspace():
                idx += 1
            if idx >= len(text):
                break
            match = _TOKEN_RE.match(text, idx)
            if match is None:
                raise ExprSyntaxError(f"Unexpected character '{text[idx]}'", idx, text)
            kind = match.lastgroup
            tokens.append((kind, match.group(kind), match.start(kind)))
            idx = match.end()
        return tokens

    def _peek(self) -> Optional[Tuple[str, str, int]]:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def _at(self, text: str) -> bool:
        token = self._peek()
        return token is not None and token[0] == "op" and token[1] == text

    def _position(self) -> int:
        token = self._peek()
        return token[2] if token is not None else len(self.text)

    def _expect(self, text: str):
        if not self._at(text):
            raise ExprSyntaxError(f"Expected '{text}'", self._position(), self.text)
        self.pos += 1

    def parse(self) -> Expr:
        if not self.tokens:
            raise ExprSyntaxError("Empty expression", 0, self.text)
        node = self._expr()
        if self.pos != len(self.tokens):
            raise ExprSyntaxError(f"Unexpected token '{self.tokens[self.pos][1]}'", self._position(), self.text)
        return node

    def _expr(self) -> Expr:
        node = self._term()
        while self._at("+") or self._at("-"):
            op = self.tokens[self.pos][1]
            self.pos += 1
            node = BinOp(op, node, self._term())
        return node

    def _term(self) -> Expr:
        node = self._factor()
        while self._at("*") or self._at("/"):
            op = self.tokens[self.pos][1]
            self.pos += 1
            node = BinOp(op, node, self._factor())
        return node

    def _factor(self) -> Expr:
        node = self._base()
        if self._at("^"):
            self.pos += 1
            sign = 1
            if self._at("-"):
                sign = -1
                self.pos += 1
            token = self._peek()
            if token is None or token[0] != "num" or not token[1].isdigit():
                raise ExprSyntaxError("Exponent must be an integer literal", self._position(), self.text)
            self.pos += 1
            node = Pow(node, sign * int(token[1]))
        return node

    def _base(self) -> Expr:
        token = self._peek()
        if token is None:
            raise ExprSyntaxError("Unexpected end of input", len(self.text), self.text)
        kind, text, position = token
        if kind == "num":
            self.pos += 1
            return Const(float(text))
        if kind == "name":
            self.pos += 1
            return self._name(text, position)
        if text == "(":
            self.pos += 1
            node = self._expr()
            self._expect(")")
            return node
        if text == "-":
            self.pos += 1
            return Neg(self._base())
        raise ExprSyntaxError(f"Unexpected token '{text}'", position, self.text)

    def _name(self, name: str, position: int) -> Expr:
        param = re.fullmatch(r"w(\d+)", name)
        if param:
            index = int(param.group(1))
            if not 1 <= index <= self.d:
                raise ExprSymbolError(
                    f"Parameter index out of range: '{name}' at position {position} (d={self.d})"
                )
            return Param(index)
        if name in FUNCTIONS:
            self._expect("(")
            arg = self._expr()
            self._expect(")")
            return Func(name, arg)
        raise ExprSymbolError(f"Unknown symbol '{name}' at position {position}")


def parse(text: str, d: int) -> Expr:
    """
    Parse a coefficient expression.

    Args:
        text: Expression source, e.g. "sin(w1)*w2"
        d: Number of parameters of the owning pencil

    Returns:
        Expression tree

    Raises:
        ExprSyntaxError: If the text does not follow the grammar
        ExprSymbolError: For unknown names or parameter indices outside 1..d
    """
    if d < 1:
        raise ExprSymbolError(f"Parameter count must be >= 1, got {d}")
    return _Parser(text, d).parse()


def evaluate(e: Expr, omega: Sequence[float]) -> float:
    return e.evaluate(omega)


def diff(e: Expr, j: int) -> Expr:
    return e.diff(j)
