"""Syntactic formula derivative: fold an observed prefix into the formula.

For a flat formula phi and a prefix signal v of horizon T, derivative(phi, v)
is a formula over the continuation alone: evaluating it on v' equals
evaluating phi on the concatenation v.v', provided v'[0] repeats v's last
sample (which continuation outputs do by construction).

Rules: atoms and constants collapse to the constant robustness on v; not
and "and" commute with the derivative; for until,

    d(phi1 U_[a,b] phi2) = c_pref  or  ((c_guard and phi1) U_[a',b-T] phi2)

where c_pref is the robustness of the whole until on v, c_guard is the
closed infimum of phi1 over all samples of v, and a' = max(a - T, dt).
The lower end is clamped to dt, not 0: the junction instant is already
accounted for inside c_pref, and letting the shifted window reopen at the
duplicated sample would count phi2 there without its phi1 prefix guard.
If the shifted window ends before a', the until operand is vacuous and
collapses to false.
"""

from __future__ import annotations

import numpy as np

from ..signals import GRID_TOL, Signal
from .formulas import (
    BOTTOM,
    And,
    Atom,
    Const,
    Formula,
    Interval,
    Not,
    Until,
    is_flat,
    or_,
)
from .semantics import eval_all, robustness


def derivative(phi: Formula, v: Signal) -> Formula:
    """Derivative of a flat formula by the prefix v."""
    if not is_flat(phi):
        raise ValueError("derivative is only defined for flat formulas")
    return _derive(phi, v)


def _derive(phi: Formula, v: Signal) -> Formula:
    if isinstance(phi, Atom):
        return Const(robustness(phi, v))
    if isinstance(phi, Const):
        return phi
    if isinstance(phi, Not):
        return Not(_derive(phi.child, v))
    if isinstance(phi, And):
        return And(_derive(phi.left, v), _derive(phi.right, v))
    if isinstance(phi, Until):
        c_pref = Const(robustness(phi, v))
        shift = v.horizon
        lo = max(phi.interval.lo - shift, v.dt)
        hi = phi.interval.hi - shift
        if hi < lo - GRID_TOL:
            return or_(c_pref, BOTTOM)
        guard = Const(float(np.min(eval_all(phi.left, v))))
        cont = Until(Interval(lo, max(hi, lo)), And(guard, phi.left), phi.right)
        return or_(c_pref, cont)
    raise TypeError(f"not a formula: {phi!r}")
