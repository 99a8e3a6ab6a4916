"""STL formulas, parsing, robust semantics, and the prefix derivative."""

from .derivative import derivative
from .formulas import (
    BOTTOM,
    TOP,
    UNBOUNDED,
    And,
    Atom,
    Const,
    Formula,
    Interval,
    Not,
    Until,
    always,
    ceiling_shape,
    eventually,
    implies,
    is_flat,
    is_modality_free,
    max_channel,
    or_,
    safety_shape,
    to_text,
)
from .parser import ParseError, parse
from .semantics import boolean_all, eval_all, robustness, satisfied

__all__ = [
    "And",
    "Atom",
    "BOTTOM",
    "Const",
    "Formula",
    "Interval",
    "Not",
    "ParseError",
    "TOP",
    "UNBOUNDED",
    "Until",
    "always",
    "boolean_all",
    "ceiling_shape",
    "derivative",
    "eval_all",
    "eventually",
    "implies",
    "is_flat",
    "is_modality_free",
    "max_channel",
    "or_",
    "parse",
    "robustness",
    "safety_shape",
    "satisfied",
    "to_text",
]
