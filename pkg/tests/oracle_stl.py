"""Brute-force robustness oracle and randomized generators for the tests.

The oracle evaluates the bounded semantics by direct nested sup/inf loops
over grid indices, with no sharing of evaluator code.  It deliberately
accumulates atom terms in the same left-to-right order as the production
evaluator so results agree bit-for-bit; everything else here is plain
min/max, which is exact regardless of order.
"""

import math

import numpy as np

from falsify.stl.formulas import And, Atom, Const, Formula, Interval, Not, Until

TOL = 1e-9


def _atom_value(atom: Atom, sample) -> float:
    if not atom.terms:
        return atom.const
    coef, ch = atom.terms[0]
    acc = coef * sample[ch]
    for coef, ch in atom.terms[1:]:
        acc = acc + coef * sample[ch]
    return acc + atom.const


def brute_table(phi: Formula, samples, dt: float):
    """Robustness of phi at every start index, by direct recursion."""
    n = len(samples)
    memo = {}

    def rob(node, i):
        key = (id(node), i)
        if key in memo:
            return memo[key]
        if isinstance(node, Atom):
            v = _atom_value(node, samples[i])
        elif isinstance(node, Const):
            v = node.value
        elif isinstance(node, Not):
            v = -rob(node.child, i)
        elif isinstance(node, And):
            v = min(rob(node.left, i), rob(node.right, i))
        elif isinstance(node, Until):
            lo, hi = node.interval.lo, node.interval.hi
            m_lo = max(0, int(math.ceil((lo - TOL) / dt)))
            m_hi = n - 1 - i if math.isinf(hi) else min(int(math.floor((hi + TOL) / dt)), n - 1 - i)
            v = -math.inf
            for m in range(m_lo, m_hi + 1):
                guard = math.inf
                for j in range(m):
                    guard = min(guard, rob(node.left, i + j))
                v = max(v, min(guard, rob(node.right, i + m)))
        else:
            raise TypeError(f"not a formula: {node!r}")
        memo[key] = v
        return v

    return [rob(phi, i) for i in range(n)]


def brute_robustness(phi: Formula, w) -> float:
    return brute_table(phi, w.samples, w.dt)[0]


# randomized generators


def random_samples(rng, n: int, dim: int):
    return rng.uniform(-10.0, 10.0, (n, dim))


def random_dt(rng) -> float:
    return float(rng.choice([0.05, 0.1, 0.25, 0.5, 1.0]))


def random_interval(rng, dt: float, n: int) -> Interval:
    """Mostly grid-aligned, sometimes off-grid or unbounded endpoints."""
    kind = rng.integers(0, 5)
    if kind == 0:
        return Interval(0.0, math.inf)
    span = max(n - 1, 1)
    a = int(rng.integers(0, span + 1))
    b = int(rng.integers(a, span + 2))
    lo, hi = a * dt, b * dt
    if kind == 1:
        # perturb off the grid; the shared tolerance convention must not flinch
        lo = max(0.0, lo + float(rng.uniform(-0.4, 0.4)) * dt)
        hi = hi + float(rng.uniform(-0.4, 0.4)) * dt
        if hi < lo:
            lo, hi = hi, lo
        lo = max(0.0, lo)
    if kind == 2:
        return Interval(lo, math.inf)
    return Interval(lo, hi)


def random_atom(rng, dim: int) -> Atom:
    n_terms = int(rng.integers(1, min(dim, 2) + 1))
    chans = rng.choice(dim, size=n_terms, replace=False)
    terms = tuple((float(rng.uniform(-3.0, 3.0)), int(ch)) for ch in chans)
    return Atom(terms, float(rng.uniform(-5.0, 5.0)))


def random_modality_free(rng, dim: int, depth: int = 2) -> Formula:
    if depth <= 0 or rng.random() < 0.4:
        if rng.random() < 0.1:
            return Const(float(rng.choice([-math.inf, math.inf, 0.0, 1.5, -2.5])))
        return random_atom(rng, dim)
    if rng.random() < 0.4:
        return Not(random_modality_free(rng, dim, depth - 1))
    return And(
        random_modality_free(rng, dim, depth - 1), random_modality_free(rng, dim, depth - 1)
    )


def random_flat(rng, dim: int, dt: float, n: int) -> Formula:
    """Flat formula: boolean structure over at most a few top-level Untils."""
    def leaf():
        if rng.random() < 0.55:
            return Until(
                random_interval(rng, dt, n),
                random_modality_free(rng, dim, 1),
                random_modality_free(rng, dim, 1),
            )
        return random_modality_free(rng, dim, 1)

    phi = leaf()
    for _ in range(int(rng.integers(0, 2))):
        other = leaf()
        phi = And(phi, other) if rng.random() < 0.5 else Not(And(Not(phi), Not(other)))
    if rng.random() < 0.3:
        phi = Not(phi)
    return phi


def random_formula(rng, dim: int, dt: float, n: int, depth: int = 2) -> Formula:
    """General formula, nesting allowed."""
    if depth <= 0 or rng.random() < 0.3:
        return random_modality_free(rng, dim, 1)
    roll = rng.random()
    if roll < 0.45:
        return Until(
            random_interval(rng, dt, n),
            random_formula(rng, dim, dt, n, depth - 1),
            random_formula(rng, dim, dt, n, depth - 1),
        )
    if roll < 0.65:
        return Not(random_formula(rng, dim, dt, n, depth - 1))
    return And(
        random_formula(rng, dim, dt, n, depth - 1), random_formula(rng, dim, dt, n, depth - 1)
    )
