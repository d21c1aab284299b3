"""Eigenvalue-formula mini-language.

Formulas are expressions in the index variable ``n`` (n = 1, 2, 3, ...)
built from integer and decimal literals, the imaginary unit ``i``, the
binary operators ``+ - * / ^``, unary minus, ``sqrt(.)`` and ``abs(.)``.

Precedence, tightest first: ``^`` (right associative), unary minus,
``* /``, ``+ -`` (both left associative). So ``-n^2`` is ``-(n^2)`` and
``2^-n`` is ``2^(-n)``.

>>> f = parse_formula("n/sqrt(1+n^2)")
>>> f
BinOp(op='/', left=Var(), right=Call(func='sqrt', arg=BinOp(op='+', left=Num(value=Fraction(1, 1)), right=BinOp(op='^', left=Var(), right=Num(value=Fraction(2, 1))))))
>>> float(evaluate(f, 1))
0.7071067811865476
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Union

import numpy as np
import sympy as sp


class FormulaError(ValueError):
    """Raised for malformed formulas. ``offset`` is the byte offset of the fault."""

    def __init__(self, message: str, offset: int | None = None):
        self.offset = offset
        if offset is not None:
            message = f"{message} (at offset {offset})"
        super().__init__(message)


@dataclass(frozen=True)
class Num:
    value: Fraction


@dataclass(frozen=True)
class Var:
    pass


@dataclass(frozen=True)
class Imag:
    pass


@dataclass(frozen=True)
class Neg:
    arg: "Formula"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Formula"


Formula = Union[Num, Var, Imag, Neg, BinOp, Call]

FUNCTIONS = ("sqrt", "abs")

_TOKEN = re.compile(
    r"\s*(?:(?P<num>\d+(?:\.\d*)?(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>[-+*/^(),]))"
)


def _tokenize(src: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    raw = src.encode("utf-8")
    if len(raw) != len(src):
        for i, ch in enumerate(src):
            if ord(ch) > 127:
                raise FormulaError(f"unexpected character {ch!r}", len(src[:i].encode("utf-8")))
    while pos < len(src):
        if src[pos:].strip() == "":
            break
        m = _TOKEN.match(src, pos)
        if m is None or m.end() == pos:
            bad = pos + (len(src[pos:]) - len(src[pos:].lstrip()))
            raise FormulaError(f"unexpected character {src[bad]!r}", bad)
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append((kind, m.group(kind), start))
        pos = m.end()
    tokens.append(("end", "", len(src)))
    return tokens


class _Parser:
    def __init__(self, src: str):
        self.src = src
        self.tokens = _tokenize(src)
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos]

    def advance(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, value: str):
        kind, text, offset = self.advance()
        if text != value:
            found = "end of input" if kind == "end" else repr(text)
            raise FormulaError(f"expected {value!r}, found {found}", offset)

    def parse(self) -> Formula:
        node = self.expr()
        kind, text, offset = self.peek()
        if kind != "end":
            raise FormulaError(f"unexpected token {text!r}", offset)
        return node

    def expr(self) -> Formula:
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.advance()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Formula:
        node = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.advance()[1]
            node = BinOp(op, node, self.unary())
        return node

    def unary(self) -> Formula:
        kind, text, _ = self.peek()
        if kind == "op" and text == "-":
            self.advance()
            return Neg(self.unary())
        if kind == "op" and text == "+":
            self.advance()
            return self.unary()
        return self.power()

    def power(self) -> Formula:
        base = self.atom()
        if self.peek()[0] == "op" and self.peek()[1] == "^":
            self.advance()
            # exponent binds through unary minus: 2^-n
            return BinOp("^", base, self.unary())
        return base

    def atom(self) -> Formula:
        kind, text, offset = self.advance()
        if kind == "num":
            return Num(Fraction(text))
        if kind == "name":
            if text == "n":
                return Var()
            if text == "i":
                return Imag()
            if text in FUNCTIONS:
                if self.peek()[1] != "(":
                    raise FormulaError(f"function {text!r} takes exactly one argument", self.peek()[2])
                self.advance()
                arg = self.expr()
                if self.peek()[1] == ",":
                    raise FormulaError(f"function {text!r} takes exactly one argument", self.peek()[2])
                self.expect(")")
                return Call(text, arg)
            raise FormulaError(f"unknown identifier {text!r}", offset)
        if kind == "op" and text == "(":
            node = self.expr()
            self.expect(")")
            return node
        found = "end of input" if kind == "end" else repr(text)
        raise FormulaError(f"unexpected {found}", offset)


def parse_formula(src: str) -> Formula:
    """Parse ``src`` into a formula AST; raises :class:`FormulaError`."""
    return _Parser(src).parse()


# -- construction helpers ---------------------------------------------------

def _fraction(value) -> Fraction:
    # floats go through their shortest decimal form: 0.1 -> 1/10, not 3602879701896397/2**55
    return Fraction(repr(float(value))) if isinstance(value, (float, np.floating)) else Fraction(value)


def num(value) -> Formula:
    """Literal node for a real or complex constant (floats via their shortest decimal)."""
    if isinstance(value, complex) or (isinstance(value, (np.complexfloating,))):
        re_part, im_part = _fraction(float(value.real)), _fraction(float(value.imag))
        if im_part == 0:
            return num(re_part)
        imag = Imag() if im_part == 1 else BinOp("*", num(im_part), Imag())
        if re_part == 0:
            return imag
        return BinOp("+", num(re_part), imag)
    value = _fraction(value)
    if value < 0:
        return Neg(Num(-value))
    return Num(value)


def add(a: Formula, b: Formula) -> Formula:
    return BinOp("+", a, b)


def sub(a: Formula, b: Formula) -> Formula:
    return BinOp("-", a, b)


def mul(a: Formula, b: Formula) -> Formula:
    return BinOp("*", a, b)


def div(a: Formula, b: Formula) -> Formula:
    return BinOp("/", a, b)


def power(a: Formula, b: Formula) -> Formula:
    return BinOp("^", a, b)


def sqrt(a: Formula) -> Formula:
    return Call("sqrt", a)


def absolute(a: Formula) -> Formula:
    return Call("abs", a)


def has_imag(f: Formula) -> bool:
    if isinstance(f, Imag):
        return True
    if isinstance(f, Neg):
        return has_imag(f.arg)
    if isinstance(f, BinOp):
        return has_imag(f.left) or has_imag(f.right)
    if isinstance(f, Call):
        return has_imag(f.arg)
    return False


def depends_on_n(f: Formula) -> bool:
    if isinstance(f, Var):
        return True
    if isinstance(f, Neg):
        return depends_on_n(f.arg)
    if isinstance(f, BinOp):
        return depends_on_n(f.left) or depends_on_n(f.right)
    if isinstance(f, Call):
        return depends_on_n(f.arg)
    return False


# -- printing ---------------------------------------------------------------

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "neg": 3, "^": 4, "atom": 5}


def _format_fraction(value: Fraction) -> str:
    if value.denominator == 1:
        return str(value.numerator)
    d = value.denominator
    twos = fives = 0
    while d % 2 == 0:
        d //= 2
        twos += 1
    while d % 5 == 0:
        d //= 5
        fives += 1
    if d == 1:
        digits = max(twos, fives)
        scaled = value * 10**digits
        text = str(abs(scaled.numerator)).rjust(digits + 1, "0")
        return f"{text[:-digits]}.{text[-digits:]}"
    return f"({value.numerator}/{value.denominator})"


def _prec(f: Formula) -> int:
    if isinstance(f, BinOp):
        return _PREC[f.op]
    if isinstance(f, Neg):
        return _PREC["neg"]
    return _PREC["atom"]


def to_string(f: Formula) -> str:
    """Render with minimal parentheses; ``parse_formula(to_string(f)) == f``
    for every parsed ``f``."""
    if isinstance(f, Num):
        return _format_fraction(f.value)
    if isinstance(f, Var):
        return "n"
    if isinstance(f, Imag):
        return "i"
    if isinstance(f, Call):
        return f"{f.func}({to_string(f.arg)})"
    if isinstance(f, Neg):
        inner = to_string(f.arg)
        # -(a*b) must keep its parens: unary minus binds tighter than *
        if _prec(f.arg) < _PREC["neg"]:
            inner = f"({inner})"
        return f"-{inner}"
    p = _PREC[f.op]
    left, right = to_string(f.left), to_string(f.right)
    if f.op == "^":
        # base must be an atom; exponent may be another power or a negation
        if _prec(f.left) <= p:
            left = f"({left})"
        if _prec(f.right) < _PREC["neg"]:
            right = f"({right})"
    else:
        if _prec(f.left) < p:
            left = f"({left})"
        if _prec(f.right) <= p:
            right = f"({right})"
    return f"{left}{f.op}{right}" if f.op in "^*/" else f"{left} {f.op} {right}"


# -- evaluation -------------------------------------------------------------

def _eval(f: Formula, n, dtype):
    if isinstance(f, Num):
        return np.asarray(float(f.value), dtype=dtype)
    if isinstance(f, Var):
        return n
    if isinstance(f, Imag):
        return np.asarray(1j, dtype=complex)
    if isinstance(f, Neg):
        return -_eval(f.arg, n, dtype)
    if isinstance(f, Call):
        a = _eval(f.arg, n, dtype)
        if f.func == "sqrt":
            return np.sqrt(a)
        return np.abs(a)
    a = _eval(f.left, n, dtype)
    b = _eval(f.right, n, dtype)
    if f.op == "+":
        return a + b
    if f.op == "-":
        return a - b
    if f.op == "*":
        return a * b
    if f.op == "/":
        return a / b
    if np.iscomplexobj(a) or np.iscomplexobj(b):
        return np.power(a.astype(complex), b)
    return np.power(a, b)


def evaluate(f: Formula, n) -> np.ndarray:
    """Evaluate ``f`` at the index (or index array) ``n``.

    Real formulas evaluate in float64 (``nan`` where undefined, e.g. the
    square root of a negative number); formulas using ``i`` evaluate in
    complex128.
    """
    n = np.asarray(n, dtype=float)
    dtype = complex if has_imag(f) else float
    with np.errstate(all="ignore"):
        out = _eval(f, n.astype(dtype) if dtype is complex else n, dtype)
    return np.broadcast_to(out, n.shape).astype(dtype)


def to_sympy(f: Formula, var: sp.Symbol) -> sp.Expr:
    """Exact sympy expression for ``f`` with ``n`` replaced by ``var``."""
    if isinstance(f, Num):
        return sp.Rational(f.value.numerator, f.value.denominator)
    if isinstance(f, Var):
        return var
    if isinstance(f, Imag):
        return sp.I
    if isinstance(f, Neg):
        return -to_sympy(f.arg, var)
    if isinstance(f, Call):
        a = to_sympy(f.arg, var)
        return sp.sqrt(a) if f.func == "sqrt" else sp.Abs(a)
    a, b = to_sympy(f.left, var), to_sympy(f.right, var)
    return {"+": lambda: a + b, "-": lambda: a - b, "*": lambda: a * b,
            "/": lambda: a / b, "^": lambda: a**b}[f.op]()
