"""Expression parser and expression-backed scalar fields.

Grammar (recursive descent; '^' is right-associative, unary minus binds
tighter than a '^' base)::

    expr   := term (('+'|'-') term)*
    term   := factor (('*'|'/') factor)*
    factor := unary ('^' factor)?
    unary  := '-' unary | atom
    atom   := number | ident | ident '(' expr (',' expr)* ')' | '(' expr ')'

Identifiers match ``[A-Za-z_][A-Za-z0-9_']*`` and are resolved to coordinates
or parameters at evaluation time.  Function names are checked at parse time.
Trees are immutable; spans (byte offsets into the source) ride along for
error reporting but are ignored by structural equality.
"""

from __future__ import annotations

import dataclasses
import re
from dataclasses import dataclass, field

import numpy as np

from . import jets
from .errors import ParseError, SingularityError
from .fields import Field
from .jets import Jet

FUNCTIONS = {"exp": 1, "log": 1, "sin": 1, "cos": 1, "sqrt": 1, "pow": 2}


# -- AST ---------------------------------------------------------------------


@dataclass(frozen=True)
class Expr:
    span: tuple[int, int] = field(default=(0, 0), compare=False, kw_only=True)


@dataclass(frozen=True)
class Num(Expr):
    value: float = 0.0


@dataclass(frozen=True)
class Ident(Expr):
    name: str = ""


@dataclass(frozen=True)
class Neg(Expr):
    arg: Expr = None


@dataclass(frozen=True)
class BinOp(Expr):
    op: str = ""
    left: Expr = None
    right: Expr = None


@dataclass(frozen=True)
class Call(Expr):
    fn: str = ""
    args: tuple[Expr, ...] = ()


# -- tokenizer ---------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_']*)
  | (?P<op>[-+*/^(),])
    """,
    re.VERBOSE,
)


def _tokenize(text: str):
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", pos)
        if m.lastgroup != "ws":
            kind = m.lastgroup
            tokens.append((kind, m.group(), m.start()))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


# -- parser ------------------------------------------------------------------


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def next(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value: str):
        kind, text, off = self.peek()
        if text != value:
            raise ParseError(f"expected {value!r}, found {text or 'end of input'!r}", off)
        return self.next()

    def parse(self) -> Expr:
        node = self.expr()
        kind, text, off = self.peek()
        if kind != "end":
            raise ParseError(f"unexpected trailing input {text!r}", off)
        return node

    def expr(self) -> Expr:
        node = self.term()
        while self.peek()[1] in ("+", "-"):
            _, op, off = self.next()
            rhs = self.term()
            node = BinOp(op=op, left=node, right=rhs,
                         span=(node.span[0], rhs.span[1]))
        return node

    def term(self) -> Expr:
        node = self.factor()
        while self.peek()[1] in ("*", "/"):
            _, op, off = self.next()
            rhs = self.factor()
            node = BinOp(op=op, left=node, right=rhs,
                         span=(node.span[0], rhs.span[1]))
        return node

    def factor(self) -> Expr:
        base = self.unary()
        if self.peek()[1] == "^":
            self.next()
            exponent = self.factor()  # right-associative
            return BinOp(op="^", left=base, right=exponent,
                         span=(base.span[0], exponent.span[1]))
        return base

    def unary(self) -> Expr:
        kind, text, off = self.peek()
        if text == "-":
            self.next()
            arg = self.unary()
            return Neg(arg=arg, span=(off, arg.span[1]))
        return self.atom()

    def atom(self) -> Expr:
        kind, text, off = self.next()
        if kind == "num":
            return Num(value=float(text), span=(off, off + len(text)))
        if kind == "ident":
            if self.peek()[1] == "(":
                if text not in FUNCTIONS:
                    raise ParseError(f"unknown function {text!r}", off)
                self.next()
                args = [self.expr()]
                while self.peek()[1] == ",":
                    self.next()
                    args.append(self.expr())
                _, _, close_off = self.expect(")")
                if len(args) != FUNCTIONS[text]:
                    raise ParseError(
                        f"{text} takes {FUNCTIONS[text]} argument(s), got {len(args)}",
                        off,
                    )
                return Call(fn=text, args=tuple(args), span=(off, close_off + 1))
            return Ident(name=text, span=(off, off + len(text)))
        if text == "(":
            node = self.expr()
            _, _, close_off = self.expect(")")
            return dataclasses.replace(node, span=(off, close_off + 1))
        raise ParseError(f"unexpected {text or 'end of input'!r}", off)


def parse(text: str) -> Expr:
    """Parse ``text`` into an immutable expression tree."""
    return _Parser(text).parse()


# -- printing ----------------------------------------------------------------


def pretty(node: Expr) -> str:
    """Fully parenthesized rendering; reparses to a structurally equal tree."""
    if isinstance(node, Num):
        return repr(node.value)
    if isinstance(node, Ident):
        return node.name
    if isinstance(node, Neg):
        return f"(-{pretty(node.arg)})"
    if isinstance(node, BinOp):
        return f"({pretty(node.left)} {node.op} {pretty(node.right)})"
    if isinstance(node, Call):
        return f"{node.fn}({', '.join(pretty(a) for a in node.args)})"
    raise TypeError(f"not an expression node: {node!r}")


# -- evaluation ---------------------------------------------------------------


def _is_const_jet(j: Jet) -> bool:
    return j.order == 0 or not np.any(j.coeffs[1:])


def _power(base: Jet, exponent: Jet) -> Jet:
    if _is_const_jet(exponent):
        return jets.pow_real(base, exponent.value)
    # variable exponent: a^b = exp(b log a), requires positive base
    return jets.exp(exponent * jets.log(base))


class ScalarField(Field):
    """A parsed expression over named coordinates, with bound parameters."""

    def __init__(self, expr: Expr | str, coords, params=None):
        self.expr = parse(expr) if isinstance(expr, str) else expr
        self.coords = list(coords)
        self.params = dict(params or {})
        self.n_vars = len(self.coords)
        self._coord_index = {name: i for i, name in enumerate(self.coords)}

    def with_params(self, **updates) -> "ScalarField":
        merged = dict(self.params)
        merged.update(updates)
        return ScalarField(self.expr, self.coords, merged)

    def eval(self, point, order: int) -> Jet:
        point = np.asarray(point, dtype=float)
        if point.shape[0] != self.n_vars:
            raise ValueError(
                f"point has {point.shape[0]} components, field has {self.n_vars}"
            )
        return self._eval(self.expr, point, order)

    def _eval(self, node: Expr, point, order: int) -> Jet:
        try:
            if isinstance(node, Num):
                return Jet.const(node.value, self.n_vars, order)
            if isinstance(node, Ident):
                idx = self._coord_index.get(node.name)
                if idx is not None:
                    return jets.coordinate(point, idx, order)
                if node.name in self.params:
                    return Jet.const(float(self.params[node.name]),
                                     self.n_vars, order)
                raise ValueError(
                    f"identifier {node.name!r} is neither a coordinate "
                    f"{self.coords} nor a bound parameter {sorted(self.params)}"
                )
            if isinstance(node, Neg):
                return -self._eval(node.arg, point, order)
            if isinstance(node, BinOp):
                left = self._eval(node.left, point, order)
                right = self._eval(node.right, point, order)
                if node.op == "+":
                    return left + right
                if node.op == "-":
                    return left - right
                if node.op == "*":
                    return left * right
                if node.op == "/":
                    return left / right
                if node.op == "^":
                    return _power(left, right)
                raise ValueError(f"unknown operator {node.op!r}")
            if isinstance(node, Call):
                args = [self._eval(a, point, order) for a in node.args]
                if node.fn == "pow":
                    return _power(args[0], args[1])
                return jets.analytic(node.fn, args[0])
            raise TypeError(f"not an expression node: {node!r}")
        except SingularityError as err:
            if err.where is None:
                snippet = ""
                if hasattr(node, "span"):
                    lo, hi = node.span
                    snippet = repr(pretty(node))
                raise SingularityError(
                    str(err), point=point, where=f"sub-expression {snippet}"
                ) from None
            raise

    def eval_value(self, point) -> float:
        """Plain recursive real evaluation (no jets); used by oracles."""
        point = np.asarray(point, dtype=float)
        return self._eval_value(self.expr, point)

    def _eval_value(self, node: Expr, point) -> float:
        import math

        if isinstance(node, Num):
            return node.value
        if isinstance(node, Ident):
            idx = self._coord_index.get(node.name)
            if idx is not None:
                return float(point[idx])
            if node.name in self.params:
                return float(self.params[node.name])
            raise ValueError(f"unbound identifier {node.name!r}")
        if isinstance(node, Neg):
            return -self._eval_value(node.arg, point)
        if isinstance(node, BinOp):
            a = self._eval_value(node.left, point)
            b = self._eval_value(node.right, point)
            if node.op == "+":
                return a + b
            if node.op == "-":
                return a - b
            if node.op == "*":
                return a * b
            if node.op == "/":
                if abs(b) < jets.DIV_ZERO_THRESHOLD:
                    raise SingularityError("division by zero", point=point)
                return a / b
            if node.op == "^":
                if not float(b).is_integer() and a <= 0:
                    raise SingularityError(
                        f"non-integer power of non-positive base {a:.6g}",
                        point=point,
                    )
                return a ** b
            raise ValueError(f"unknown operator {node.op!r}")
        if isinstance(node, Call):
            vals = [self._eval_value(a, point) for a in node.args]
            if node.fn == "pow":
                a, b = vals
                if not float(b).is_integer() and a <= 0:
                    raise SingularityError("pow of non-positive base", point=point)
                return a ** b
            if node.fn == "log":
                if vals[0] <= 0:
                    raise SingularityError("log of non-positive value", point=point)
                return math.log(vals[0])
            if node.fn == "sqrt":
                if vals[0] <= 0:
                    raise SingularityError("sqrt of non-positive value", point=point)
                return math.sqrt(vals[0])
            return getattr(math, node.fn)(vals[0])
        raise TypeError(f"not an expression node: {node!r}")


def eval_jet(field: ScalarField, point, order: int) -> Jet:
    """Evaluate an expression-backed field to a jet (functional form)."""
    return field.eval(point, order)
