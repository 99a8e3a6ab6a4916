"""Robust and Boolean semantics over sampled signals.

Everything is evaluated in bounded form: the available horizon is whatever
the signal carries, sups and infs range over grid points only, and the
horizon shrinks as the evaluation instant moves right.  The empty sup is
-inf and the empty inf is +inf.

eval_all returns the whole suffix table at once: entry i is the robustness
of the formula on the signal shifted to start at sample i.  That table is
what makes Until linear-time per start instant.
"""

from __future__ import annotations

import math

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..signals import GRID_TOL, Signal
from .formulas import TOP, And, Atom, Const, Formula, Not, Until, max_channel


def _window_lo(lo: float, dt: float) -> int:
    return max(0, int(math.ceil((lo - GRID_TOL) / dt)))


def _window_hi(hi: float, dt: float) -> int | None:
    if math.isinf(hi):
        return None
    return int(math.floor((hi + GRID_TOL) / dt))


def _atom_values(atom: Atom, samples: np.ndarray) -> np.ndarray:
    # Left-to-right accumulation; the brute-force test oracle mirrors this
    # order so the two evaluators agree bit-for-bit.
    if not atom.terms:
        return np.full(samples.shape[0], atom.const)
    coef, ch = atom.terms[0]
    acc = coef * samples[:, ch]
    for coef, ch in atom.terms[1:]:
        acc = acc + coef * samples[:, ch]
    return acc + atom.const


def eval_all(phi: Formula, w: Signal) -> np.ndarray:
    """Robustness of phi at every start sample of w (bounded semantics)."""
    if max_channel(phi) >= w.dim:
        raise ValueError(
            f"formula references channel {max_channel(phi)} but the signal has {w.dim}"
        )
    return _eval(phi, w.samples, w.dt)


def robustness(phi: Formula, w: Signal) -> float:
    """Robustness of phi on w from time 0."""
    return float(eval_all(phi, w)[0])


def _eval(phi: Formula, samples: np.ndarray, dt: float) -> np.ndarray:
    n = samples.shape[0]
    if isinstance(phi, Atom):
        return _atom_values(phi, samples)
    if isinstance(phi, Const):
        return np.full(n, phi.value)
    if isinstance(phi, Not):
        return -_eval(phi.child, samples, dt)
    if isinstance(phi, And):
        return np.minimum(_eval(phi.left, samples, dt), _eval(phi.right, samples, dt))
    if isinstance(phi, Until):
        return _eval_until(phi, samples, dt)
    raise TypeError(f"not a formula: {phi!r}")


def _eval_until(phi: Until, samples: np.ndarray, dt: float) -> np.ndarray:
    n = samples.shape[0]
    m_lo = _window_lo(phi.interval.lo, dt)
    m_hi = _window_hi(phi.interval.hi, dt)
    right = _eval(phi.right, samples, dt)
    res = np.full(n, -np.inf)

    if phi.left == TOP:
        # Eventually: plain window max of the right table, no prefix guard.
        sufmax = np.maximum.accumulate(right[::-1])[::-1]
        if m_lo > n - 1:
            return res
        if m_hi is None:
            res[: n - m_lo] = sufmax[m_lo:]
            return res
        if m_hi < m_lo:
            return res
        width = m_hi - m_lo + 1
        n_full = n - m_hi  # start instants whose window is not cut off
        if n_full > 0:
            winmax = sliding_window_view(right, width).max(axis=1)
            res[:n_full] = winmax[m_lo : m_lo + n_full]
        start = max(n_full, 0)
        res[start : n - m_lo] = sufmax[start + m_lo :]
        return res

    left = _eval(phi.left, samples, dt)
    pref = np.empty(n + 1)
    for i in range(n):
        hi_i = n - 1 - i if m_hi is None else min(m_hi, n - 1 - i)
        if hi_i < m_lo:
            continue
        # pref[m] = inf of left over the m samples strictly before i+m
        pref[0] = np.inf
        if hi_i > 0:
            np.minimum.accumulate(left[i : i + hi_i], out=pref[1 : hi_i + 1])
        vals = np.minimum(right[i + m_lo : i + hi_i + 1], pref[m_lo : hi_i + 1])
        res[i] = vals.max()
    return res


def boolean_all(phi: Formula, w: Signal) -> np.ndarray:
    """Boolean satisfaction of phi at every start sample (same recursion)."""
    if max_channel(phi) >= w.dim:
        raise ValueError(
            f"formula references channel {max_channel(phi)} but the signal has {w.dim}"
        )
    return _bool(phi, w.samples, w.dt)


def satisfied(phi: Formula, w: Signal) -> bool:
    return bool(boolean_all(phi, w)[0])


def _bool(phi: Formula, samples: np.ndarray, dt: float) -> np.ndarray:
    n = samples.shape[0]
    if isinstance(phi, Atom):
        return _atom_values(phi, samples) > 0.0
    if isinstance(phi, Const):
        return np.full(n, phi.value > 0.0)
    if isinstance(phi, Not):
        return ~_bool(phi.child, samples, dt)
    if isinstance(phi, And):
        return _bool(phi.left, samples, dt) & _bool(phi.right, samples, dt)
    if isinstance(phi, Until):
        m_lo = _window_lo(phi.interval.lo, dt)
        m_hi = _window_hi(phi.interval.hi, dt)
        bl = _bool(phi.left, samples, dt)
        br = _bool(phi.right, samples, dt)
        res = np.zeros(n, dtype=bool)
        pref = np.empty(n + 1, dtype=bool)
        for i in range(n):
            hi_i = n - 1 - i if m_hi is None else min(m_hi, n - 1 - i)
            if hi_i < m_lo:
                continue
            pref[0] = True
            if hi_i > 0:
                np.logical_and.accumulate(bl[i : i + hi_i], out=pref[1 : hi_i + 1])
            res[i] = bool(np.any(br[i + m_lo : i + hi_i + 1] & pref[m_lo : hi_i + 1]))
        return res
    raise TypeError(f"not a formula: {phi!r}")
