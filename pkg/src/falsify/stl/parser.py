"""Recursive-descent parser for the STL text grammar.

Precedence, loosest to tightest: ->  or  and  U  (not, G, F)  atoms.
G/F/U take an optional [a,b] interval and default to [0, inf).  Sugar is
expanded immediately: F phi becomes top U phi, G phi becomes
not F not phi, a or b becomes not(not a and not b), a -> b becomes
(not a) or b.  Comparisons lower to affine atoms compared against zero;
< and <= negate the affine function instead of introducing a node.

Variables are resolved against a fixed table: channel i of the signal
being monitored is named vars[i].
"""

from __future__ import annotations

import math
import re

from .formulas import (
    Atom,
    Const,
    Formula,
    Interval,
    Not,
    UNBOUNDED,
    Until,
    always,
    eventually,
    implies,
    or_,
)

KEYWORDS = {"or", "and", "not", "U", "G", "F", "inf", "true", "false"}

_TOKEN_RE = re.compile(
    r"\s*(?:"
    r"(?P<num>\d+\.\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?|\d+(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op><=|>=|->|[()\[\],<>+\-*|]|∨)"
    r")"
)


class ParseError(ValueError):
    def __init__(self, message: str, pos: int):
        super().__init__(f"{message} (at position {pos})")
        self.pos = pos


class _Tokens:
    def __init__(self, text: str):
        self.text = text
        self.toks: list[tuple[str, str, int]] = []
        pos = 0
        while pos < len(text):
            m = _TOKEN_RE.match(text, pos)
            if m is None or m.end() == pos:
                stripped = text[pos:].lstrip()
                if not stripped:
                    break
                bad = len(text) - len(stripped)
                raise ParseError(f"unexpected character {text[bad]!r}", bad)
            if m.lastgroup == "num":
                self.toks.append(("num", m.group("num"), m.start("num")))
            elif m.lastgroup == "name":
                self.toks.append(("name", m.group("name"), m.start("name")))
            else:
                op = m.group("op")
                if op == "∨":
                    op = "|"
                self.toks.append(("op", op, m.start("op")))
            pos = m.end()
        self.toks.append(("end", "", len(text)))
        self.i = 0

    def peek(self) -> tuple[str, str, int]:
        return self.toks[self.i]

    def next(self) -> tuple[str, str, int]:
        t = self.toks[self.i]
        self.i += 1
        return t

    def accept(self, kind: str, value: str | None = None):
        k, v, _ = self.peek()
        if k == kind and (value is None or v == value):
            return self.next()
        return None

    def expect(self, kind: str, value: str | None = None) -> tuple[str, str, int]:
        t = self.accept(kind, value)
        if t is None:
            k, v, p = self.peek()
            want = value if value is not None else kind
            raise ParseError(f"expected {want!r}, found {v or 'end of input'!r}", p)
        return t


class _Parser:
    def __init__(self, text: str, variables):
        self.toks = _Tokens(text)
        self.text = text
        self.variables = list(variables)

    def parse(self) -> Formula:
        phi = self._implication()
        k, v, p = self.toks.peek()
        if k != "end":
            raise ParseError(f"unexpected trailing input {v!r}", p)
        return phi

    def _implication(self) -> Formula:
        left = self._disjunction()
        if self.toks.accept("op", "->"):
            return implies(left, self._implication())
        return left

    def _disjunction(self) -> Formula:
        phi = self._conjunction()
        while True:
            if self.toks.accept("name", "or") or self.toks.accept("op", "|"):
                phi = or_(phi, self._conjunction())
            else:
                return phi

    def _conjunction(self) -> Formula:
        phi = self._until()
        while self.toks.accept("name", "and"):
            phi = phi & self._until()
        return phi

    def _until(self) -> Formula:
        left = self._unary()
        if self.toks.accept("name", "U"):
            interval = self._interval_opt()
            right = self._until()
            return Until(interval, left, right)
        return left

    def _unary(self) -> Formula:
        if self.toks.accept("name", "not"):
            return Not(self._unary())
        if self.toks.accept("name", "G"):
            interval = self._interval_opt()
            return always(self._unary(), interval)
        if self.toks.accept("name", "F"):
            interval = self._interval_opt()
            return eventually(self._unary(), interval)
        if self.toks.accept("op", "("):
            phi = self._implication()
            self.toks.expect("op", ")")
            return phi
        if self.toks.accept("name", "true"):
            return Const(math.inf)
        if self.toks.accept("name", "false"):
            return Const(-math.inf)
        return self._atom()

    def _interval_opt(self) -> Interval:
        if not self.toks.accept("op", "["):
            return UNBOUNDED
        _, lo_txt, lo_pos = self.toks.expect("num")
        lo = float(lo_txt)
        self.toks.expect("op", ",")
        if self.toks.accept("name", "inf"):
            hi = math.inf
        else:
            hi = float(self.toks.expect("num")[1])
        _, _, close_pos = self.toks.expect("op", "]")
        if not lo < hi:
            raise ParseError(f"empty or singular interval [{lo_txt},{hi}]", lo_pos)
        return Interval(lo, hi)

    def _atom(self) -> Formula:
        start = self.toks.peek()[2]
        lhs_terms, lhs_const = self._linexpr()
        k, op, p = self.toks.next()
        if k != "op" or op not in ("<", "<=", ">", ">="):
            raise ParseError(f"expected a comparison operator, found {op or 'end of input'!r}", p)
        rhs_terms, rhs_const = self._linexpr()
        end = self.toks.peek()[2]
        text = self.text[start:end].strip()
        if op in (">", ">="):
            terms = lhs_terms + [(-c, ch) for c, ch in rhs_terms]
            const = lhs_const - rhs_const
        else:
            terms = rhs_terms + [(-c, ch) for c, ch in lhs_terms]
            const = rhs_const - lhs_const
        return Atom(tuple(terms), const, text=text)

    def _linexpr(self):
        terms, const = self._linterm()
        while True:
            if self.toks.accept("op", "+"):
                t2, c2 = self._linterm()
                terms += t2
                const += c2
            elif self.toks.accept("op", "-"):
                t2, c2 = self._linterm()
                terms += [(-c, ch) for c, ch in t2]
                const -= c2
            else:
                return terms, const

    def _linterm(self):
        if self.toks.accept("op", "-"):
            terms, const = self._linterm()
            return [(-c, ch) for c, ch in terms], -const
        k, v, p = self.toks.next()
        if k == "num":
            value = float(v)
            if self.toks.accept("op", "*"):
                ch = self._variable()
                return [(value, ch)], 0.0
            return [], value
        if k == "name":
            if v in KEYWORDS:
                raise ParseError(f"unexpected keyword {v!r} in expression", p)
            ch = self._resolve(v, p)
            if self.toks.accept("op", "*"):
                kk, vv, pp = self.toks.next()
                if kk != "num":
                    raise ParseError("a product must multiply a variable by a number", pp)
                return [(float(vv), ch)], 0.0
            return [(1.0, ch)], 0.0
        raise ParseError(f"expected a number or variable, found {v or 'end of input'!r}", p)

    def _variable(self) -> int:
        k, v, p = self.toks.next()
        if k != "name" or v in KEYWORDS:
            raise ParseError("expected a variable name", p)
        return self._resolve(v, p)

    def _resolve(self, name: str, pos: int) -> int:
        try:
            return self.variables.index(name)
        except ValueError:
            raise ParseError(
                f"unknown variable {name!r} (known: {', '.join(self.variables) or 'none'})", pos
            ) from None


def parse(text: str, variables) -> Formula:
    """Parse STL text against a variable table mapping channel i to variables[i]."""
    return _Parser(text, variables).parse()
