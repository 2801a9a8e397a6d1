"""Potential expressions: grammar parser, printer and numeric evaluator.

Grammar (whitespace ignored):

    expr   := term (('+' | '-') term)*
    term   := factor (('*' | '/') factor)*
    factor := ('+' | '-') factor | base ('^' signed_integer)?
    base   := number | 'i' | 'x' | func '(' expr ')' | '(' expr ')'
    func   := 'exp' | 'ln' | 'sin' | 'cos' | 'sqrt'

Numbers are decimal with an optional exponent and are read exactly, so
"0.5" becomes the rational 1/2.
"""
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, List, Optional, Tuple

import numpy as np
import sympy as sp

from config.constants import FD_STEP
from utils.errors import EvaluationError, ParseError, UnknownIdentifierError

X = sp.Symbol("x", real=True)

FUNCTIONS = {
    "exp": sp.exp,
    "ln": sp.log,
    "sin": sp.sin,
    "cos": sp.cos,
    "sqrt": sp.sqrt,
}

_TOKEN = re.compile(
    r"\s*(?:(?P<NUMBER>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<NAME>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<OP>[-+*/^()]))"
)


class _Scanner:
    def __init__(self, text: str):
        self.text = text
        self.tokens: List[Tuple[str, str, int]] = []
        pos = 0
        while pos < len(text):
            if text[pos:].strip() == "":
                break
            match = _TOKEN.match(text, pos)
            if not match or match.end() == pos:
                raise ParseError(f"unexpected character {text[pos]!r}", self.offset(pos))
            kind = match.lastgroup
            self.tokens.append((kind, match.group(kind), match.start(kind)))
            pos = match.end()
        self.index = 0

    def offset(self, pos: int) -> int:
        return len(self.text[:pos].encode("utf-8"))

    @property
    def current(self) -> Optional[Tuple[str, str, int]]:
        return self.tokens[self.index] if self.index < len(self.tokens) else None

    def position(self) -> int:
        tok = self.current
        return self.offset(tok[2] if tok else len(self.text))

    def peek(self, lexeme: str) -> bool:
        tok = self.current
        return tok is not None and tok[0] == "OP" and tok[1] == lexeme

    def accept(self, lexeme: str) -> bool:
        if self.peek(lexeme):
            self.index += 1
            return True
        return False

    def expect(self, lexeme: str) -> None:
        if not self.accept(lexeme):
            found = self.current[1] if self.current else "end of input"
            raise ParseError(f"expected '{lexeme}', found '{found}'", self.position())


class _Parser:
    def __init__(self, text: str):
        self.scanner = _Scanner(text)

    def parse(self) -> sp.Expr:
        if not self.scanner.tokens:
            raise ParseError("empty expression", 0)
        expr = self._expression()
        if self.scanner.current is not None:
            raise ParseError(f"unexpected '{self.scanner.current[1]}'", self.scanner.position())
        return expr

    def _expression(self) -> sp.Expr:
        expr = self._term()
        while self.scanner.peek("+") or self.scanner.peek("-"):
            if self.scanner.accept("+"):
                expr = expr + self._term()
            else:
                self.scanner.accept("-")
                expr = expr - self._term()
        return expr

    def _term(self) -> sp.Expr:
        expr = self._factor()
        while self.scanner.peek("*") or self.scanner.peek("/"):
            if self.scanner.accept("*"):
                expr = expr * self._factor()
            else:
                self.scanner.accept("/")
                expr = expr / self._factor()
        return expr

    def _factor(self) -> sp.Expr:
        if self.scanner.accept("-"):
            return -self._factor()
        if self.scanner.accept("+"):
            return self._factor()
        base = self._base()
        if self.scanner.accept("^"):
            return base ** self._exponent()
        return base

    def _exponent(self) -> sp.Integer:
        sign = 1
        if self.scanner.accept("-"):
            sign = -1
        elif self.scanner.accept("+"):
            sign = 1
        tok = self.scanner.current
        if tok is None or tok[0] != "NUMBER" or not tok[1].isdigit():
            raise ParseError("exponent must be an integer", self.scanner.position())
        self.scanner.index += 1
        return sp.Integer(sign * int(tok[1]))

    def _base(self) -> sp.Expr:
        tok = self.scanner.current
        if tok is None:
            raise ParseError("unexpected end of input", self.scanner.position())
        kind, lexeme, pos = tok
        if kind == "NUMBER":
            self.scanner.index += 1
            value = Fraction(lexeme)
            return sp.Rational(value.numerator, value.denominator)
        if kind == "NAME":
            self.scanner.index += 1
            if lexeme == "x":
                return X
            if lexeme == "i":
                return sp.I
            if lexeme in FUNCTIONS:
                self.scanner.expect("(")
                arg = self._expression()
                self.scanner.expect(")")
                return FUNCTIONS[lexeme](arg)
            raise UnknownIdentifierError(lexeme, self.scanner.offset(pos))
        if self.scanner.accept("("):
            expr = self._expression()
            self.scanner.expect(")")
            return expr
        raise ParseError(f"unexpected '{lexeme}'", self.scanner.offset(pos))


def to_text(root: sp.Expr) -> str:
    """Print a tree in the input grammar, fully parenthesised."""
    if root == X:
        return "x"
    if root == sp.I:
        return "i"
    if root == sp.E:
        return "exp(1)"
    if isinstance(root, sp.Integer):
        return str(root) if root >= 0 else f"({root})"
    if isinstance(root, sp.Rational):
        return f"({root.p}/{root.q})"
    if isinstance(root, sp.Add):
        return " + ".join(f"({to_text(a)})" for a in root.args)
    if isinstance(root, sp.Mul):
        return "*".join(f"({to_text(a)})" for a in root.args)
    if isinstance(root, sp.Pow):
        base, power = root.args
        if isinstance(power, sp.Integer):
            return f"({to_text(base)})^{int(power)}"
        if isinstance(power, sp.Rational) and power.q == 2:
            inner = f"sqrt({to_text(base)})"
            return inner if power.p == 1 else f"({inner})^{int(power.p)}"
        if base == sp.E:
            return f"exp({to_text(power)})"
        raise ValueError(f"power {power} has no form in the potential grammar")
    names = {sp.exp: "exp", sp.log: "ln", sp.sin: "sin", sp.cos: "cos"}
    for func, name in names.items():
        if isinstance(root, func):
            return f"{name}({to_text(root.args[0])})"
    raise ValueError(f"node {root.func.__name__} has no form in the potential grammar")


@dataclass(frozen=True)
class PotentialExpr:
    """Closed expression in x with a vectorised complex evaluator."""

    root: sp.Expr
    _func: Callable = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        free = self.root.free_symbols - {X}
        if free:
            raise ValueError(f"expression has free symbols besides x: {sorted(map(str, free))}")
        object.__setattr__(self, "_func", sp.lambdify(X, self.root, modules="numpy"))

    @property
    def text(self) -> str:
        return to_text(self.root)

    @property
    def is_constant(self) -> bool:
        return X not in self.root.free_symbols

    def __call__(self, x):
        arr = np.asarray(x, dtype=complex)
        with np.errstate(all="ignore"):
            value = np.asarray(self._func(arr), dtype=complex)
        if value.shape != arr.shape:
            value = np.broadcast_to(value, arr.shape).copy()
        if not np.all(np.isfinite(value)):
            bad = arr[~np.isfinite(value)] if arr.ndim else arr
            raise EvaluationError(f"{self.text} is not finite at x={np.ravel(bad)[0].real:.6g}",
                                  float(np.ravel(bad)[0].real))
        return value if arr.ndim else complex(value)

    def __str__(self) -> str:
        return str(self.root)


def parse_potential(text: str) -> PotentialExpr:
    return PotentialExpr(_Parser(text).parse())


def parse_complex(text: str) -> complex:
    """Parse a constant (e.g. a spectral value "-3+2*i")."""
    expr = parse_potential(str(text))
    if not expr.is_constant:
        raise ValueError(f"'{text}' depends on x")
    return complex(sp.N(expr.root, 17))


def differentiate(e: PotentialExpr, order: int = 1) -> PotentialExpr:
    return PotentialExpr(sp.diff(e.root, X, order))


def fd_relative_error(f: Callable, df: Callable, xs: np.ndarray) -> float:
    """Max relative gap between df and a centred difference of f."""
    xs = np.asarray(xs, dtype=float)
    h = FD_STEP * np.maximum(1.0, np.abs(xs))
    fd = (np.asarray(f(xs + h)) - np.asarray(f(xs - h))) / (2 * h)
    exact = np.asarray(df(xs))
    scale = np.maximum(np.abs(exact), 1e-12 * np.maximum(1.0, np.abs(np.asarray(f(xs)))))
    return float(np.max(np.abs(fd - exact) / scale))
