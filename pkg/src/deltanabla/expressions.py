"""Small expression language for integrand functions of (t, u, v).

Integrands are written as text like ``"v^2 + t*u"`` where ``t`` is the
time point, ``u`` the shifted state value, and ``v`` the corresponding
difference quotient.  The module parses such text into a tiny AST,
evaluates it, and differentiates it symbolically with respect to ``u``
or ``v``.  Grammar, lowest precedence first:

    expr   := term (('+' | '-') term)*
    term   := factor (('*' | '/') factor)*
    factor := '-'? atom ('^' integer)?
    atom   := number | 't' | 'u' | 'v' | func '(' expr ')' | '(' expr ')'
    func   := 'sin' | 'cos' | 'exp' | 'log' | 'sqrt'

Exponents are integer literals only, and bind tighter than the unary
minus: ``-v^2`` parses as ``-(v^2)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union


class ParseError(ValueError):
    """Raised on malformed integrand text; carries the offset."""

    def __init__(self, message: str, pos: int) -> None:
        super().__init__(f"{message} (at position {pos})")
        self.pos = pos


class EvaluationError(ArithmeticError):
    """Raised when evaluation leaves the real domain (log, sqrt, division)."""


# ---------------------------------------------------------------------------
# AST


@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Var:
    name: str  # 't', 'u' or 'v'


@dataclass(frozen=True)
class Neg:
    arg: "Expr"


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
class Pow:
    base: "Expr"
    exponent: int


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Expr"


Expr = Union[Const, Var, Neg, Add, Sub, Mul, Div, Pow, Call]

FUNCTIONS = ("sin", "cos", "exp", "log", "sqrt")
VARIABLES = ("t", "u", "v")


# ---------------------------------------------------------------------------
# Parsing


class _Scanner:
    def __init__(self, text: str) -> None:
        self.text = text
        self.pos = 0

    def skip_ws(self) -> None:
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self) -> str:
        self.skip_ws()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def take(self, ch: str) -> bool:
        if self.peek() == ch:
            self.pos += 1
            return True
        return False

    def expect(self, ch: str) -> None:
        if not self.take(ch):
            raise ParseError(f"expected {ch!r}", self.pos)

    def number(self) -> float:
        start = self.pos
        n = len(self.text)
        while self.pos < n and self.text[self.pos].isdigit():
            self.pos += 1
        if self.pos < n and self.text[self.pos] == ".":
            self.pos += 1
            while self.pos < n and self.text[self.pos].isdigit():
                self.pos += 1
        if self.pos < n and self.text[self.pos] in "eE":
            mark = self.pos
            self.pos += 1
            if self.pos < n and self.text[self.pos] in "+-":
                self.pos += 1
            if self.pos < n and self.text[self.pos].isdigit():
                while self.pos < n and self.text[self.pos].isdigit():
                    self.pos += 1
            else:
                self.pos = mark  # not an exponent after all
        return float(self.text[start : self.pos])

    def integer(self) -> int:
        self.skip_ws()
        start = self.pos
        if self.pos < len(self.text) and self.text[self.pos] in "+-":
            self.pos += 1
        if self.pos >= len(self.text) or not self.text[self.pos].isdigit():
            raise ParseError("exponent must be an integer literal", self.pos)
        while self.pos < len(self.text) and self.text[self.pos].isdigit():
            self.pos += 1
        return int(self.text[start : self.pos])

    def word(self) -> str:
        start = self.pos
        while self.pos < len(self.text) and self.text[self.pos].isalpha():
            self.pos += 1
        return self.text[start : self.pos]


def parse(text: str) -> Expr:
    """Parse integrand text into an expression tree."""
    s = _Scanner(text)
    e = _expr(s)
    s.skip_ws()
    if s.pos != len(text):
        raise ParseError(f"unexpected {text[s.pos]!r}", s.pos)
    return e


def _expr(s: _Scanner) -> Expr:
    e = _term(s)
    while True:
        if s.take("+"):
            e = Add(e, _term(s))
        elif s.take("-"):
            e = Sub(e, _term(s))
        else:
            return e


def _term(s: _Scanner) -> Expr:
    e = _factor(s)
    while True:
        if s.take("*"):
            e = Mul(e, _factor(s))
        elif s.take("/"):
            e = Div(e, _factor(s))
        else:
            return e


def _factor(s: _Scanner) -> Expr:
    negate = s.take("-")
    e = _atom(s)
    if s.take("^"):
        e = Pow(e, s.integer())
    return Neg(e) if negate else e


def _atom(s: _Scanner) -> Expr:
    ch = s.peek()
    if ch == "(":
        s.take("(")
        e = _expr(s)
        s.expect(")")
        return e
    if ch.isdigit() or ch == ".":
        return Const(s.number())
    if ch.isalpha():
        pos = s.pos
        name = s.word()
        if name in VARIABLES:
            return Var(name)
        if name in FUNCTIONS:
            s.expect("(")
            arg = _expr(s)
            s.expect(")")
            return Call(name, arg)
        raise ParseError(f"unknown name {name!r}", pos)
    raise ParseError("expected a number, variable, or '('", s.pos)


# ---------------------------------------------------------------------------
# Printing


def to_str(e: Expr) -> str:
    """Render an expression; parse(to_str(e)) evaluates identically to e."""
    return _render(e, 0)


# Precedence contexts: 0 add/sub, 1 mul/div, 2 unary minus, 3 power base.
# Right operands render one level tighter than the node itself so that
# reparsing rebuilds the identical tree: float arithmetic is not
# associative, and the round-trip must evaluate bit for bit.
def _render(e: Expr, ctx: int) -> str:
    if isinstance(e, Const):
        s = repr(e.value)
        return s if e.value >= 0 or ctx == 0 else f"({s})"
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Call):
        return f"{e.func}({_render(e.arg, 0)})"
    if isinstance(e, Pow):
        body = f"{_render(e.base, 3)}^{e.exponent}"
        return f"({body})" if ctx >= 3 else body
    if isinstance(e, Neg):
        body = f"-{_render(e.arg, 2)}"
        return body if ctx <= 1 else f"({body})"
    if isinstance(e, Add):
        body = f"{_render(e.left, 0)} + {_render(e.right, 1)}"
    elif isinstance(e, Sub):
        body = f"{_render(e.left, 0)} - {_render(e.right, 1)}"
    elif isinstance(e, Mul):
        body = f"{_render(e.left, 1)}*{_render(e.right, 2)}"
    elif isinstance(e, Div):
        body = f"{_render(e.left, 1)}/{_render(e.right, 2)}"
    else:
        raise TypeError(f"unknown expression node {e!r}")
    need = 1 if isinstance(e, (Mul, Div)) else 0
    return body if ctx <= need else f"({body})"


# ---------------------------------------------------------------------------
# Evaluation


_UNARY = {
    "sin": math.sin,
    "cos": math.cos,
    "exp": math.exp,
    "log": math.log,
    "sqrt": math.sqrt,
}


def evaluate(e: Expr, t: float, u: float, v: float) -> float:
    """Evaluate at (t, u, v); EvaluationError outside the real domain."""
    if isinstance(e, Const):
        return e.value
    if isinstance(e, Var):
        return {"t": t, "u": u, "v": v}[e.name]
    if isinstance(e, Neg):
        return -evaluate(e.arg, t, u, v)
    if isinstance(e, Add):
        return evaluate(e.left, t, u, v) + evaluate(e.right, t, u, v)
    if isinstance(e, Sub):
        return evaluate(e.left, t, u, v) - evaluate(e.right, t, u, v)
    if isinstance(e, Mul):
        return evaluate(e.left, t, u, v) * evaluate(e.right, t, u, v)
    if isinstance(e, Div):
        num = evaluate(e.left, t, u, v)
        den = evaluate(e.right, t, u, v)
        if den == 0.0:
            raise EvaluationError(
                f"division by zero in {to_str(e)} at t={t}, u={u}, v={v}"
            )
        return num / den
    if isinstance(e, Pow):
        base = evaluate(e.base, t, u, v)
        try:
            return float(base ** e.exponent)
        except (ZeroDivisionError, OverflowError) as exc:
            raise EvaluationError(
                f"cannot raise {base} to {e.exponent} in {to_str(e)}"
            ) from exc
    if isinstance(e, Call):
        arg = evaluate(e.arg, t, u, v)
        try:
            return _UNARY[e.func](arg)
        except (ValueError, OverflowError) as exc:
            raise EvaluationError(
                f"{e.func}({arg}) undefined in {to_str(e)} at t={t}, u={u}, v={v}"
            ) from exc
    raise TypeError(f"unknown expression node {e!r}")


# ---------------------------------------------------------------------------
# Differentiation


def _const(x: float) -> Const:
    return Const(float(x))


_ZERO = Const(0.0)
_ONE = Const(1.0)


def _is_const(e: Expr, x: float) -> bool:
    return isinstance(e, Const) and e.value == x


def _add(a: Expr, b: Expr) -> Expr:
    if _is_const(a, 0.0):
        return b
    if _is_const(b, 0.0):
        return a
    if isinstance(a, Const) and isinstance(b, Const):
        return _const(a.value + b.value)
    return Add(a, b)


def _sub(a: Expr, b: Expr) -> Expr:
    if _is_const(b, 0.0):
        return a
    if isinstance(a, Const) and isinstance(b, Const):
        return _const(a.value - b.value)
    if _is_const(a, 0.0):
        return _neg(b)
    return Sub(a, b)


def _neg(a: Expr) -> Expr:
    if isinstance(a, Const):
        return _const(-a.value)
    if isinstance(a, Neg):
        return a.arg
    return Neg(a)


def _mul(a: Expr, b: Expr) -> Expr:
    if _is_const(a, 0.0) or _is_const(b, 0.0):
        return _ZERO
    if _is_const(a, 1.0):
        return b
    if _is_const(b, 1.0):
        return a
    if isinstance(a, Const) and isinstance(b, Const):
        return _const(a.value * b.value)
    return Mul(a, b)


def _div(a: Expr, b: Expr) -> Expr:
    if _is_const(a, 0.0):
        return _ZERO
    if _is_const(b, 1.0):
        return a
    return Div(a, b)


def _pow(a: Expr, n: int) -> Expr:
    if n == 0:
        return _ONE
    if n == 1:
        return a
    return Pow(a, n)


def differentiate(e: Expr, var: str) -> Expr:
    """Symbolic partial derivative with respect to 't', 'u' or 'v'.

    Constant subtrees fold away so that integrands independent of a
    variable differentiate to an exact zero.
    """
    if var not in VARIABLES:
        raise ValueError(f"unknown variable {var!r}")
    if isinstance(e, Const):
        return _ZERO
    if isinstance(e, Var):
        return _ONE if e.name == var else _ZERO
    if isinstance(e, Neg):
        return _neg(differentiate(e.arg, var))
    if isinstance(e, Add):
        return _add(differentiate(e.left, var), differentiate(e.right, var))
    if isinstance(e, Sub):
        return _sub(differentiate(e.left, var), differentiate(e.right, var))
    if isinstance(e, Mul):
        return _add(
            _mul(differentiate(e.left, var), e.right),
            _mul(e.left, differentiate(e.right, var)),
        )
    if isinstance(e, Div):
        num = _sub(
            _mul(differentiate(e.left, var), e.right),
            _mul(e.left, differentiate(e.right, var)),
        )
        return _div(num, _pow(e.right, 2))
    if isinstance(e, Pow):
        inner = differentiate(e.base, var)
        rule = _mul(_const(e.exponent), _pow(e.base, e.exponent - 1))
        return _mul(rule, inner)
    if isinstance(e, Call):
        inner = differentiate(e.arg, var)
        if e.func == "sin":
            outer: Expr = Call("cos", e.arg)
        elif e.func == "cos":
            outer = _neg(Call("sin", e.arg))
        elif e.func == "exp":
            outer = e
        elif e.func == "log":
            outer = _div(_ONE, e.arg)
        elif e.func == "sqrt":
            outer = _div(_ONE, _mul(_const(2.0), e))
        else:
            raise ValueError(f"unknown function {e.func!r}")
        return _mul(outer, inner)
    raise TypeError(f"unknown expression node {e!r}")


# ---------------------------------------------------------------------------
# Integrand bundles


@dataclass(frozen=True)
class Lagrangian:
    """Integrand together with its two symbolic partials.

    ``value`` maps (t, u, v) to the integrand value, ``d_u`` and ``d_v``
    are its partial derivatives in the second and third slot.
    """

    value: Expr
    d_u: Expr
    d_v: Expr

    def __call__(self, t: float, u: float, v: float) -> float:
        return evaluate(self.value, t, u, v)

    def du(self, t: float, u: float, v: float) -> float:
        return evaluate(self.d_u, t, u, v)

    def dv(self, t: float, u: float, v: float) -> float:
        return evaluate(self.d_v, t, u, v)


def make_lagrangian(source: str | Expr) -> Lagrangian:
    """Build a Lagrangian from integrand text or an existing tree."""
    e = parse(source) if isinstance(source, str) else source
    return Lagrangian(e, differentiate(e, "u"), differentiate(e, "v"))


def constant_lagrangian(c: float) -> Lagrangian:
    """Integrand that ignores (t, u, v) and always evaluates to ``c``."""
    return Lagrangian(_const(c), _ZERO, _ZERO)
