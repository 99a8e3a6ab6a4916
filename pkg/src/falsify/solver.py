"""Two-phase falsification solver: initial sampling, then optimization.

A trial scores piecewise-constant candidate inputs through the model and
keeps every candidate from both phases; the reported best is the argmin
over all of them (earliest on ties) and the trial succeeds iff that score
is strictly negative.  Corner samples lead the initial phase when the
optimizer is global Nelder-Mead; the optimizer then reuses the initial
candidates as seeds so no evaluation is spent twice.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .optim import (
    OPTIMIZERS,
    OptimizerBudget,
    SearchSpace,
    TrackedObjective,
    corner_samples,
    uniform_samples,
)
from .signals import PiecewiseConstantSpec, Signal, concatenate, realize_piecewise_constant
from .stl import Formula, derivative, robustness


@dataclass(frozen=True)
class StopPolicy:
    """Budget split between the two phases plus an optional stall rule.

    The stall rule spans the whole candidate stream: stop once the running
    best is n_stuck candidates old, counting the best itself.
    """

    n_init: int
    n_opt: int
    n_stuck: int | None = None

    def __post_init__(self):
        if self.n_init < 0 or self.n_opt < 0 or self.n_init + self.n_opt < 1:
            raise ValueError("need n_init >= 0, n_opt >= 0, and a total budget >= 1")
        if self.n_stuck is not None and self.n_stuck < 1:
            raise ValueError("n_stuck must be >= 1")

    @property
    def max_evals(self) -> int:
        return self.n_init + self.n_opt


@dataclass
class TrialRecord:
    """Everything one falsification trial produced."""

    points: list
    scores: list
    best_index: int
    success: bool
    evals: int
    seed: object
    wall_time: float
    best_input: Signal
    best_output: Signal
    horizon: float = 0.0
    k_points: int = 1
    dt: float = 1.0
    bounds: np.ndarray | None = field(default=None, repr=False)

    @property
    def best_score(self) -> float:
        return self.scores[self.best_index]

    def realized(self, i: int) -> Signal:
        """Re-realize candidate i's input signal (candidates store points only)."""
        spec = PiecewiseConstantSpec(
            np.asarray(self.points[i]).reshape(self.k_points, -1), self.bounds, self.horizon
        )
        return realize_piecewise_constant(spec, self.dt)


def score_from_formula(phi: Formula):
    """Score(y) = robustness of phi on y."""

    def score(y: Signal) -> float:
        return robustness(phi, y)

    return score


def score_derivative_semantic(prefix_output: Signal | None, phi: Formula):
    """Score a continuation by evaluating phi on prefix_output joined with it."""
    if prefix_output is None:
        return score_from_formula(phi)

    def score(y: Signal) -> float:
        return robustness(phi, concatenate(prefix_output, y))

    return score


def score_derivative_syntactic(prefix_output: Signal | None, phi: Formula):
    """Same value as the semantic path for flat phi, but the prefix is folded
    into the formula once, so each continuation is scored on its own short
    signal."""
    if prefix_output is None:
        return score_from_formula(phi)
    dphi = derivative(phi, prefix_output)

    def score(y: Signal) -> float:
        return robustness(dphi, y)

    return score


def falsify(
    model,
    score,
    horizon: float,
    k_points: int,
    stop: StopPolicy,
    optimizer="gnm",
    rng: np.random.Generator | None = None,
    seed=None,
    optimizer_params: dict | None = None,
) -> TrialRecord:
    """Run one falsification trial against model with the given score function.

    optimizer is a registry name ("gnm", "sa", "cma_es") or a callable with
    the optimizer signature.  The search box is the model's input bounds
    repeated once per control point.
    """
    if k_points < 1:
        raise ValueError("k_points must be >= 1")
    if rng is None:
        rng = np.random.default_rng(0)
    t_start = time.perf_counter()

    bounds = np.asarray(model.input_bounds, dtype=np.float64)
    m = bounds.shape[0]
    space = SearchSpace(np.tile(bounds, (k_points, 1)))
    outputs: list[Signal] = []

    def objective_fn(x: np.ndarray) -> float:
        spec = PiecewiseConstantSpec(x.reshape(k_points, m), bounds, horizon)
        w = realize_piecewise_constant(spec, model.dt)
        y = model.simulate(w)
        outputs.append(y)
        return score(y)

    tracker = TrackedObjective(objective_fn, OptimizerBudget(stop.max_evals, stop.n_stuck))

    wants_corners = optimizer == "gnm" and space.d <= 20
    init_points = corner_samples(space)[: stop.n_init] if wants_corners else []
    fill = stop.n_init - len(init_points)
    if fill > 0:
        init_points.extend(uniform_samples(space, fill, rng))

    seed_scores = []
    for p in init_points:
        if tracker.should_stop():
            break
        seed_scores.append(tracker.eval(p))
    seeds = init_points[: len(seed_scores)]

    if not tracker.should_stop() and stop.n_opt > 0:
        opt_fn = OPTIMIZERS[optimizer] if isinstance(optimizer, str) else optimizer
        kwargs = dict(optimizer_params or {})
        opt_fn(tracker, space, seeds, rng, seed_scores=seed_scores, **kwargs)

    best = tracker.best_index
    if best is None:
        raise RuntimeError("no candidate was evaluated")
    return TrialRecord(
        points=tracker.points,
        scores=tracker.scores,
        best_index=best,
        success=tracker.scores[best] < 0.0,
        evals=tracker.evals,
        seed=seed,
        wall_time=time.perf_counter() - t_start,
        best_input=_realize(tracker.points[best], k_points, m, bounds, horizon, model.dt),
        best_output=outputs[best],
        horizon=horizon,
        k_points=k_points,
        dt=model.dt,
        bounds=bounds,
    )


def _realize(x, k_points, m, bounds, horizon, dt) -> Signal:
    spec = PiecewiseConstantSpec(np.asarray(x).reshape(k_points, m), bounds, horizon)
    return realize_piecewise_constant(spec, dt)
