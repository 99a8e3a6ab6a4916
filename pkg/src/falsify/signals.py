"""Uniformly sampled, finite-horizon signals and the operations on them.

A signal holds n >= 1 samples on the grid 0, dt, 2*dt, ..., (n-1)*dt; its
horizon is (n-1)*dt.  A single-sample signal has horizon 0.  All operations
that take time arguments require them to lie on the grid.

Concatenation follows the half-open convention: the junction instant belongs
to the left signal, so the right signal's sample 0 is dropped.  This makes
concatenation associative and length-additive, and it matches how a model
continuation reports its output (sample 0 of a continuation output duplicates
the last sample of the prefix output).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# Absolute slack used when mapping instants onto the sample grid.  Grid
# instants are produced as k*dt floats; the slack only has to absorb
# last-ulp noise, never a real off-grid offset.
GRID_TOL = 1e-9


class GridError(ValueError):
    """An instant or duration does not lie on the sample grid."""


def grid_index(t: float, dt: float) -> int:
    """Map an on-grid instant to its sample index, or raise GridError."""
    if dt <= 0.0:
        raise GridError(f"dt must be positive, got {dt}")
    k = int(round(t / dt))
    if k < 0 or abs(k * dt - t) > GRID_TOL:
        raise GridError(f"instant {t} is not on the grid with dt={dt}")
    return k


@dataclass(frozen=True)
class Signal:
    """Finite multichannel signal sampled on a uniform grid.

    samples has shape (n, dim) with n >= 1; row k is the value at k*dt.
    The array is copied on construction and frozen afterwards.
    """

    dt: float
    samples: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.dt <= 0.0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        arr = np.asarray(self.samples, dtype=np.float64)
        if arr.ndim == 1:
            arr = arr[:, np.newaxis]
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"samples must have shape (n>=1, dim>=1), got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("samples must be finite")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "samples", arr)

    @property
    def n(self) -> int:
        return self.samples.shape[0]

    @property
    def dim(self) -> int:
        return self.samples.shape[1]

    @property
    def horizon(self) -> float:
        return (self.n - 1) * self.dt

    def times(self) -> np.ndarray:
        return np.arange(self.n) * self.dt

    def channel(self, i: int) -> np.ndarray:
        return self.samples[:, i]


def equal(a: Signal, b: Signal) -> bool:
    """Exact samplewise equality (same dt, same shape, identical floats)."""
    return a.dt == b.dt and a.samples.shape == b.samples.shape and bool(
        np.array_equal(a.samples, b.samples)
    )


def concatenate(a: Signal, b: Signal) -> Signal:
    """Join b after a.  The junction sample is a's last; b's sample 0 is dropped."""
    if a.dt != b.dt:
        raise ValueError(f"dt mismatch: {a.dt} vs {b.dt}")
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch: {a.dim} vs {b.dim}")
    return Signal(a.dt, np.vstack([a.samples, b.samples[1:]]))


def restrict(w: Signal, t1: float, t2: float) -> Signal:
    """Window [t1, t2] of w, re-anchored to start at time 0.

    Both endpoints must be on the grid with t1 < t2 <= horizon.
    """
    if not t1 < t2:
        raise ValueError(f"need t1 < t2, got [{t1}, {t2}]")
    k1 = grid_index(t1, w.dt)
    k2 = grid_index(t2, w.dt)
    if k2 > w.n - 1:
        raise ValueError(f"window end {t2} exceeds horizon {w.horizon}")
    return Signal(w.dt, w.samples[k1 : k2 + 1])


def prefix(w: Signal, t: float) -> Signal:
    """Initial segment [0, t] of w; t = 0 yields the single-sample prefix."""
    k = grid_index(t, w.dt)
    if k > w.n - 1:
        raise ValueError(f"prefix end {t} exceeds horizon {w.horizon}")
    return Signal(w.dt, w.samples[: k + 1])


def shift(w: Signal, t: float) -> Signal:
    """Tail of w from on-grid instant t, re-anchored to time 0."""
    k = grid_index(t, w.dt)
    if k > w.n - 1:
        raise ValueError(f"shift {t} exceeds horizon {w.horizon}")
    return Signal(w.dt, w.samples[k:])


@dataclass(frozen=True)
class PiecewiseConstantSpec:
    """Parametrization of an input as K constant segments over a horizon.

    values has shape (K, M): row j holds the channel values on the j-th
    segment ((j*T/K, (j+1)*T/K] after realization).  bounds has shape (M, 2)
    with per-channel [lo, hi]; every value must lie inside its bounds.
    """

    values: np.ndarray
    bounds: np.ndarray
    horizon: float

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        if vals.ndim == 1:
            vals = vals[:, np.newaxis]
        bnds = np.asarray(self.bounds, dtype=np.float64)
        if bnds.ndim == 1:
            bnds = bnds[np.newaxis, :]
        if vals.ndim != 2 or vals.shape[0] < 1:
            raise ValueError(f"values must have shape (K>=1, M), got {vals.shape}")
        if bnds.shape != (vals.shape[1], 2):
            raise ValueError(f"bounds must have shape (M, 2), got {bnds.shape}")
        if np.any(bnds[:, 0] >= bnds[:, 1]):
            raise ValueError("each bound must satisfy lo < hi")
        if self.horizon <= 0.0:
            raise ValueError(f"horizon must be positive, got {self.horizon}")
        below = vals < bnds[:, 0]
        above = vals > bnds[:, 1]
        if np.any(below) or np.any(above):
            raise ValueError("segment values must lie within the channel bounds")
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "bounds", bnds)

    @property
    def k(self) -> int:
        return self.values.shape[0]

    @property
    def dim(self) -> int:
        return self.values.shape[1]


def realize_piecewise_constant(spec: PiecewiseConstantSpec, dt: float) -> Signal:
    """Sample a piecewise-constant spec onto the grid.

    The segment length T/K must be a positive multiple of dt.  Sample k
    stores the left limit at k*dt, so segment j's value first appears at
    sample j*s + 1 (s = steps per segment) and the realized signal equals
    the concatenation of its per-segment constant realizations.  Simulation
    reads the sample at the right end of each step, so dynamically the value
    still changes exactly at the control point.
    """
    seg = spec.horizon / spec.k
    s = int(round(seg / dt))
    if s < 1 or abs(s * dt - seg) > GRID_TOL:
        raise GridError(
            f"segment length {seg} is not a positive multiple of dt={dt}"
        )
    n = spec.k * s + 1
    idx = np.zeros(n, dtype=np.intp)
    ks = np.arange(1, n)
    idx[1:] = (ks - 1) // s
    return Signal(dt, spec.values[idx])


def to_csv(w: Signal) -> str:
    """Render a signal as CSV with header t,ch0,ch1,...

    Floats are written with repr, which round-trips exactly.
    """
    header = "t," + ",".join(f"ch{i}" for i in range(w.dim))
    lines = [header]
    for k in range(w.n):
        row = [repr(k * w.dt)]
        row.extend(repr(float(x)) for x in w.samples[k])
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def from_csv(text: str) -> Signal:
    """Parse a signal written by to_csv.  Requires at least two rows for dt."""
    lines = [ln for ln in text.strip().splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("t,"):
        raise ValueError("missing t,ch0,... header")
    rows = [[float(x) for x in ln.split(",")] for ln in lines[1:]]
    if not rows:
        raise ValueError("no samples")
    if len(rows) == 1:
        raise ValueError("cannot recover dt from a single sample")
    dt = rows[1][0] - rows[0][0]
    samples = np.array([r[1:] for r in rows], dtype=np.float64)
    return Signal(dt, samples)
