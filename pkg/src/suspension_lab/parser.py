"""Recursive-descent parser for the observable expression language.

::

    expr    := term (('+' | '-') term)*
    term    := factor ('*' factor)*
    factor  := number | '-' factor | 'N' '(' region ')' | 'I1' '(' simple ')' | '(' expr ')'
    region  := rect (',' rect)*
    rect    := 'C' '(' k ')' '[' a '..' b ']'      column class k, levels a..b
             | 'P' '(' bits ')' '[' a '..' b ']'   cylinder of a bit prefix
             | 'W' '(' L ')'                       window of levels 1..L
             | '{' i (',' i)* '}'                  atoms of a finite ground set
    simple  := number '*' rect (['+'] number '*' rect)*

Numbers are read as exact rationals (``0.25``, ``3``, ``1/4``).
"""
from __future__ import annotations

import re
from fractions import Fraction

from .fock import I1, Const, Count, Observable, Product, Scale, SimpleFunction, Sum
from .odometer import GrowthSpec, Rectangle, RegionSet, window

__all__ = ["ParseError", "parse_observable", "parse_region", "parse_simple"]

_TOKEN = re.compile(r"\s*(?:(\d+(?:\.\d+)?(?:/\d+)?)|(I1|\.\.|[A-Za-z]|[()\[\]{},+\-*]))")


class ParseError(ValueError):
    pass


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    out, pos = [], 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos:].lstrip()[:1]!r} at {pos}")
        if m.group(1) is not None:
            out.append(("num", m.group(1), m.start(1)))
        else:
            out.append(("sym", m.group(2), m.start(2)))
        pos = m.end()
    out.append(("end", "", len(text)))
    return out


class _Parser:
    def __init__(self, text: str, spec: GrowthSpec | None, ground):
        self.toks = _tokenize(text)
        self.i = 0
        self.spec = spec or GrowthSpec()
        self.ground = ground

    # token helpers
    def peek(self):
        return self.toks[self.i]

    def take(self):
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def expect(self, sym: str):
        kind, val, pos = self.take()
        if val != sym or kind == "num":
            raise ParseError(f"expected {sym!r} at {pos}, found {val or 'end of input'!r}")

    def at(self, sym: str) -> bool:
        kind, val, _ = self.peek()
        return kind == "sym" and val == sym

    def number(self) -> Fraction:
        kind, val, pos = self.take()
        if kind != "num":
            raise ParseError(f"expected a number at {pos}, found {val or 'end of input'!r}")
        return Fraction(val)

    def integer(self) -> int:
        pos = self.peek()[2]
        x = self.number()
        if x.denominator != 1:
            raise ParseError(f"expected an integer at {pos}")
        return int(x)

    def finish(self):
        kind, val, pos = self.peek()
        if kind != "end":
            raise ParseError(f"unexpected {val!r} at {pos}")

    # grammar
    def expr(self) -> Observable:
        terms = [self.term()]
        while self.at("+") or self.at("-"):
            op = self.take()[1]
            t = self.term()
            terms.append(t if op == "+" else Scale(-1, t))
        return terms[0] if len(terms) == 1 else Sum(tuple(terms))

    def term(self) -> Observable:
        factors = [self.factor()]
        while self.at("*"):
            self.take()
            factors.append(self.factor())
        if len(factors) == 1:
            return factors[0]
        consts = [f for f in factors if isinstance(f, Const)]
        rest = [f for f in factors if not isinstance(f, Const)]
        if len(consts) == 1 and len(rest) == 1:
            return Scale(consts[0].value, rest[0])
        return Product(tuple(factors))

    def factor(self) -> Observable:
        kind, val, pos = self.peek()
        if kind == "num":
            return Const(self.number())
        if val == "-":
            self.take()
            return Scale(-1, self.factor())
        if val == "(":
            self.take()
            e = self.expr()
            self.expect(")")
            return e
        if val == "N":
            self.take()
            self.expect("(")
            r = self.region()
            self.expect(")")
            return Count(r)
        if val == "I1":
            self.take()
            self.expect("(")
            f = self.simple()
            self.expect(")")
            return I1(f)
        raise ParseError(f"unexpected {val or 'end of input'!r} at {pos}")

    def rect(self):
        kind, val, pos = self.take()
        if val == "{":
            if self.ground is None:
                raise ParseError(f"atom set at {pos} needs a finite ground set")
            idx = [self.integer()]
            while self.at(","):
                self.take()
                idx.append(self.integer())
            self.expect("}")
            return self.ground.atoms(idx)
        if val == "W":
            self.expect("(")
            L = self.integer()
            self.expect(")")
            return window(L, self.spec.truncation_k, self.spec)
        if val not in ("C", "P"):
            raise ParseError(f"expected a rectangle at {pos}, found {val!r}")
        self.expect("(")
        if val == "C":
            column = self.integer()
        elif self.at(")"):
            column = ""
        else:
            kind, bits, bpos = self.take()
            if kind != "num" or set(bits) - {"0", "1"}:
                raise ParseError(f"expected a bit string at {bpos}")
            column = bits
        self.expect(")")
        self.expect("[")
        lo = self.integer()
        self.expect("..")
        hi = self.integer()
        self.expect("]")
        try:
            return Rectangle.build(column, lo, hi, self.spec)
        except ValueError as exc:
            raise ParseError(f"rectangle at {pos}: {exc}") from exc

    def region(self):
        first = self.rect()
        items = [first]
        while self.at(","):
            self.take()
            items.append(self.rect())
        if self.ground is not None and all(hasattr(x, "indices") for x in items):
            idx = set()
            for x in items:
                idx |= x.indices
            return self.ground.atoms(idx)
        region = RegionSet()
        for x in items:
            part = x if isinstance(x, RegionSet) else RegionSet((x,))
            if region.intersect(part):
                raise ParseError("rectangles in a region must be disjoint")
            region = region.union(part)
        return region

    def simple(self) -> SimpleFunction:
        terms = []
        while True:
            c = self.number()
            self.expect("*")
            r = self.rect()
            if isinstance(r, RegionSet):
                raise ParseError("windows are not allowed inside I1; list rectangles instead")
            terms.append((c, r))
            if self.at("+"):
                self.take()
            if self.peek()[0] != "num":
                break
        try:
            return SimpleFunction(tuple(terms))
        except ValueError as exc:
            raise ParseError(str(exc)) from exc


def parse_observable(text: str, spec: GrowthSpec | None = None, ground=None) -> Observable:
    """Parse an observable; ``ground`` enables ``{i,...}`` atom sets."""
    p = _Parser(text, spec, ground)
    e = p.expr()
    p.finish()
    return e


def parse_region(text: str, spec: GrowthSpec | None = None, ground=None):
    p = _Parser(text, spec, ground)
    r = p.region()
    p.finish()
    return r


def parse_simple(text: str, spec: GrowthSpec | None = None, ground=None) -> SimpleFunction:
    p = _Parser(text, spec, ground)
    f = p.simple()
    p.finish()
    return f
