"""Small shared builders for the test suite."""

import numpy as np

from falsify.signals import Signal


def sig(dt, values):
    """Signal from a plain list; 1-D lists become a single channel."""
    return Signal(dt, np.asarray(values, dtype=np.float64))


def random_signal(rng, n, dim, dt=0.05, lo=-10.0, hi=10.0):
    return Signal(dt, rng.uniform(lo, hi, (n, dim)))


def junction_pair(rng, n1, n2, dim, dt=0.05):
    """(v, v2) where v2's first sample duplicates v's last, ready to join."""
    v = random_signal(rng, n1, dim, dt)
    tail = rng.uniform(-10.0, 10.0, (n2 - 1, dim))
    v2 = Signal(dt, np.vstack([v.samples[-1:], tail]))
    return v, v2
