"""Infix parser for expressions over jet coordinates.

Grammar::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := ('-' | '+') unary | power
    power  := atom ('^' unary)?          # right-associative, binds tighter than unary minus
    atom   := NUMBER | NAME | FUNC '(' expr ')' | '(' expr ')'

``**`` is accepted as a synonym for ``^``.  Exponents must reduce to rational
constants.  Decimal literals are read exactly (``0.1`` is ``1/10``).
"""

from __future__ import annotations

import re
from fractions import Fraction

from .coords import JetContext
from .errors import OrderOverflowError, ParseError, UnknownCoordinateError
from .expr import FUNCTIONS, PI, Add, Expr, Func, Mul, Num, Pow, canonicalize, sym

_TOKEN = re.compile(r"\s*(?:(\d+\.\d*|\.\d+|\d+)|([A-Za-z_][A-Za-z0-9_]*)|(\*\*|[-+*/^()]))")


def _tokenize(text):
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            if text[pos:].strip() == "":
                break
            stripped = len(text[pos:]) - len(text[pos:].lstrip())
            raise ParseError(f"unexpected character {text[pos + stripped]!r}", text, pos + stripped)
        start = m.start(m.lastindex)
        if m.group(1) is not None:
            tokens.append(("num", m.group(1), start))
        elif m.group(2) is not None:
            tokens.append(("name", m.group(2), start))
        else:
            op = "^" if m.group(3) == "**" else m.group(3)
            tokens.append(("op", op, start))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text, context):
        self.text = text
        self.context = context
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value):
        kind, v, pos = self.take()
        if v != value or kind != "op":
            found = "end of input" if kind == "end" else repr(v)
            raise ParseError(f"expected {value!r}, found {found}", self.text, pos)

    def error(self, message, tok=None):
        tok = tok or self.peek()
        return ParseError(message, self.text, tok[2])

    def parse(self):
        if self.peek()[0] == "end":
            raise self.error("empty expression")
        e = self.expr()
        if self.peek()[0] != "end":
            raise self.error(f"unexpected token {self.peek()[1]!r}")
        return e

    def expr(self):
        terms = [self.term()]
        while self.peek()[:2] in (("op", "+"), ("op", "-")):
            op = self.take()[1]
            t = self.term()
            terms.append(t if op == "+" else Mul((Num(-1), t)))
        return terms[0] if len(terms) == 1 else Add(terms)

    def term(self):
        factors = [self.unary()]
        while self.peek()[:2] in (("op", "*"), ("op", "/")):
            op = self.take()[1]
            f = self.unary()
            factors.append(f if op == "*" else Pow(f, -1))
        return factors[0] if len(factors) == 1 else Mul(factors)

    def unary(self):
        tok = self.peek()
        if tok[:2] == ("op", "-"):
            self.take()
            return Mul((Num(-1), self.unary()))
        if tok[:2] == ("op", "+"):
            self.take()
            return self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[:2] == ("op", "^"):
            tok = self.take()
            exponent = canonicalize(self.unary()).as_fraction()
            if exponent is None:
                raise ParseError("exponent must be a rational constant", self.text, tok[2])
            return Pow(base, exponent)
        return base

    def atom(self):
        tok = self.take()
        kind, v, pos = tok
        if kind == "num":
            return Num(Fraction(v))
        if kind == "name":
            if v in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Func(v, arg)
            if v == "pi":
                return PI
            if self.peek()[:2] == ("op", "("):
                raise ParseError(f"unknown function {v!r}", self.text, pos)
            try:
                return sym(self.context.coordinate(v))
            except UnknownCoordinateError as exc:
                raise UnknownCoordinateError(str(exc), self.text, pos) from None
            except OrderOverflowError as exc:
                raise ParseError(str(exc), self.text, pos) from None
        if tok[:2] == ("op", "("):
            e = self.expr()
            self.expect(")")
            return e
        found = "end of input" if kind == "end" else repr(v)
        raise ParseError(f"unexpected {found}", self.text, pos)


def parse(text: str, context: JetContext) -> Expr:
    """Parse ``text`` and return its canonical tree."""
    return canonicalize(_Parser(text, context).parse())


def parse_raw(text: str, context: JetContext) -> Expr:
    """Parse without canonicalizing (the literal tree of the input)."""
    return _Parser(text, context).parse()
