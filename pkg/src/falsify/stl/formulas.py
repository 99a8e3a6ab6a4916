"""Formula AST for an STL fragment with extended-real constants.

Core connectives are Atom, Const, Not, And and Until; everything else
(or, implies, eventually, always, top, bottom) is expanded into the core
at construction time.  Atoms are affine: sum of coefficient*channel terms
plus a constant, compared against zero (value > 0 means satisfied).
Comparisons with <= / < are lowered by negating the affine function, so
no dedicated node is needed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field


class Formula:
    __slots__ = ()

    def __invert__(self) -> "Formula":
        return Not(self)

    def __and__(self, other: "Formula") -> "Formula":
        return And(self, other)

    def __or__(self, other: "Formula") -> "Formula":
        return or_(self, other)


@dataclass(frozen=True)
class Interval:
    """Closed time interval [lo, hi]; hi may be +inf."""

    lo: float
    hi: float

    def __post_init__(self):
        if not math.isfinite(self.lo) or self.lo < 0.0:
            raise ValueError(f"interval lower bound must be finite and >= 0, got {self.lo}")
        if math.isnan(self.hi) or self.hi < self.lo:
            raise ValueError(f"invalid interval [{self.lo}, {self.hi}]")

    @property
    def unbounded(self) -> bool:
        return math.isinf(self.hi)


@dataclass(frozen=True)
class Atom(Formula):
    """Affine predicate sum(coef * x[ch]) + const > 0.

    terms is a tuple of (coefficient, channel index) pairs.  Robustness is
    the affine value itself, accumulated left to right in term order.
    """

    terms: tuple[tuple[float, int], ...]
    const: float
    text: str | None = field(default=None, compare=False)

    def __post_init__(self):
        if not math.isfinite(self.const):
            raise ValueError("atom constant must be finite")
        for coef, ch in self.terms:
            if not math.isfinite(coef):
                raise ValueError("atom coefficients must be finite")
            if ch < 0:
                raise ValueError("channel indices must be >= 0")


@dataclass(frozen=True)
class Const(Formula):
    """Constant formula with fixed robustness value; +-inf encode top/bottom."""

    value: float

    def __post_init__(self):
        if math.isnan(self.value):
            raise ValueError("constant robustness cannot be NaN")


@dataclass(frozen=True)
class Not(Formula):
    child: Formula


@dataclass(frozen=True)
class And(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Until(Formula):
    interval: Interval
    left: Formula
    right: Formula


TOP = Const(math.inf)
BOTTOM = Const(-math.inf)

UNBOUNDED = Interval(0.0, math.inf)


def or_(a: Formula, b: Formula) -> Formula:
    return Not(And(Not(a), Not(b)))


def implies(a: Formula, b: Formula) -> Formula:
    return or_(Not(a), b)


def eventually(phi: Formula, interval: Interval = UNBOUNDED) -> Formula:
    return Until(interval, TOP, phi)


def always(phi: Formula, interval: Interval = UNBOUNDED) -> Formula:
    return Not(eventually(Not(phi), interval))


def is_modality_free(phi: Formula) -> bool:
    """True iff phi contains no Until."""
    if isinstance(phi, (Atom, Const)):
        return True
    if isinstance(phi, Not):
        return is_modality_free(phi.child)
    if isinstance(phi, And):
        return is_modality_free(phi.left) and is_modality_free(phi.right)
    return False


def is_flat(phi: Formula) -> bool:
    """True iff no Until occurs inside an operand of another Until."""
    if isinstance(phi, (Atom, Const)):
        return True
    if isinstance(phi, Not):
        return is_flat(phi.child)
    if isinstance(phi, And):
        return is_flat(phi.left) and is_flat(phi.right)
    if isinstance(phi, Until):
        return is_modality_free(phi.left) and is_modality_free(phi.right)
    raise TypeError(f"not a formula: {phi!r}")


def max_channel(phi: Formula) -> int:
    """Largest channel index referenced by any atom, or -1 if none."""
    if isinstance(phi, Atom):
        return max((ch for _, ch in phi.terms), default=-1)
    if isinstance(phi, Const):
        return -1
    if isinstance(phi, Not):
        return max_channel(phi.child)
    if isinstance(phi, (And, Until)):
        return max(max_channel(phi.left), max_channel(phi.right))
    raise TypeError(f"not a formula: {phi!r}")


def safety_shape(phi: Formula) -> tuple[Interval, Formula] | None:
    """Match the always-shape Not(Until(I, top, body)) with modality-free body.

    Robustness of such a formula can only decrease as the signal is
    extended, which justifies stopping a staged search early once a prefix
    already violates it.  Returns (interval, body) or None.
    """
    if not isinstance(phi, Not):
        return None
    inner = phi.child
    if not isinstance(inner, Until):
        return None
    if inner.left != TOP:
        return None
    if not is_modality_free(inner.right):
        return None
    return inner.interval, inner.right


def ceiling_shape(phi: Formula) -> tuple[Interval, int, float] | None:
    """Match always(x < c): the safety shape over a single negated-variable atom.

    Returns (interval, channel, threshold) or None.  The parser lowers
    "x < c" to Atom(c - x), so the body is Not(Atom((-a, ch), const)) with
    a > 0 and threshold const/a.
    """
    m = safety_shape(phi)
    if m is None:
        return None
    interval, body = m
    if not isinstance(body, Not) or not isinstance(body.child, Atom):
        return None
    atom = body.child
    if len(atom.terms) != 1:
        return None
    coef, ch = atom.terms[0]
    if coef >= 0.0:
        return None
    return interval, ch, atom.const / (-coef)


def _fmt_num(x: float) -> str:
    if x == math.inf:
        return "inf"
    return repr(x)


def _fmt_interval(iv: Interval) -> str:
    if iv == UNBOUNDED:
        return ""
    return f"[{_fmt_num(iv.lo)},{_fmt_num(iv.hi)}]"


def _fmt_atom(atom: Atom, variables) -> str:
    if atom.text is not None:
        return atom.text
    parts = []
    for coef, ch in atom.terms:
        name = variables[ch] if variables and ch < len(variables) else f"x{ch}"
        if coef == 1.0:
            term = name
        else:
            term = f"{_fmt_num(coef)}*{name}"
        parts.append(term if not parts else f"+ {term}")
    if atom.const != 0.0 or not parts:
        parts.append(f"+ {_fmt_num(atom.const)}" if parts else _fmt_num(atom.const))
    return " ".join(parts) + " > 0"


def to_text(phi: Formula, variables=None) -> str:
    """Readable rendering, re-sugaring G/F/or where the expansion is recognized."""
    if isinstance(phi, Const):
        if phi.value == math.inf:
            return "true"
        if phi.value == -math.inf:
            return "false"
        return f"const({_fmt_num(phi.value)})"
    if isinstance(phi, Atom):
        return f"({_fmt_atom(phi, variables)})"
    if isinstance(phi, Until):
        if phi.left == TOP:
            return f"F{_fmt_interval(phi.interval)} {to_text(phi.right, variables)}"
        return (
            f"({to_text(phi.left, variables)} U{_fmt_interval(phi.interval)} "
            f"{to_text(phi.right, variables)})"
        )
    if isinstance(phi, Not):
        c = phi.child
        if isinstance(c, Until) and c.left == TOP and isinstance(c.right, Not):
            return f"G{_fmt_interval(c.interval)} {to_text(c.right.child, variables)}"
        if isinstance(c, And) and isinstance(c.left, Not) and isinstance(c.right, Not):
            return (
                f"({to_text(c.left.child, variables)} or "
                f"{to_text(c.right.child, variables)})"
            )
        return f"not {to_text(c, variables)}"
    if isinstance(phi, And):
        return f"({to_text(phi.left, variables)} and {to_text(phi.right, variables)})"
    raise TypeError(f"not a formula: {phi!r}")
