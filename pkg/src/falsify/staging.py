"""Staged falsification over a time-staged input space.

The horizon is cut into stages; each stage searches continuations of the
input committed so far, scoring a candidate by the robustness of the
formula on the accumulated output trace (either directly, or through the
formula-derivative rewrite when the formula is flat).  The stage winner
is appended to the prefix and the search moves on, so later stages only
ever optimize over their own control points.

For formulas of safety shape a strictly negative stage score cannot
recover on any extension, so the trial finishes early: the input is
padded by holding its last value and one full-horizon simulation fixes
the final robustness.  Other shapes always run all stages; a bounded
eventuality can look hopeless on a short prefix and still come back.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .models import Continuation
from .signals import Signal, concatenate
from .solver import (
    StopPolicy,
    TrialRecord,
    falsify,
    score_derivative_semantic,
    score_derivative_syntactic,
)
from .stl import Formula, robustness, safety_shape

_DERIVATIVE_PATHS = ("semantic", "syntactic")
_CONTINUATION_PATHS = ("resimulate", "snapshot")


@dataclass(frozen=True)
class StagingConfig:
    """How to stage a trial: stage count, per-stage budget, and which of the
    two equivalent scoring/continuation routes to take."""

    k_stages: int
    stop: StopPolicy
    control_points_per_stage: int = 1
    derivative_path: str = "semantic"
    continuation_path: str = "resimulate"

    def __post_init__(self):
        if self.k_stages < 1:
            raise ValueError("k_stages must be >= 1")
        if self.control_points_per_stage < 1:
            raise ValueError("control_points_per_stage must be >= 1")
        if self.derivative_path not in _DERIVATIVE_PATHS:
            raise ValueError(f"derivative_path must be one of {_DERIVATIVE_PATHS}")
        if self.continuation_path not in _CONTINUATION_PATHS:
            raise ValueError(f"continuation_path must be one of {_CONTINUATION_PATHS}")


@dataclass
class StagedTrialRecord:
    stage_records: list[TrialRecord]
    input: Signal
    output: Signal
    final_score: float
    success: bool
    evals: int
    seed: object
    wall_time: float
    early_exit_stage: int | None = None


def staged_falsify(
    model,
    phi: Formula,
    horizon: float,
    config: StagingConfig,
    optimizer="gnm",
    rng: np.random.Generator | None = None,
    seed=None,
    optimizer_params: dict | None = None,
) -> StagedTrialRecord:
    """Run one staged trial.  With k_stages=1 this reduces to a plain trial
    over the whole horizon (same candidate stream for the same rng state).

    evals counts simulations, including the single padding simulation an
    early exit spends; it never exceeds k_stages times the stage budget.
    """
    if rng is None:
        rng = np.random.default_rng(0)
    t_start = time.perf_counter()
    stage_h = horizon / config.k_stages

    prefix_in: Signal | None = None
    prefix_out: Signal | None = None
    records: list[TrialRecord] = []
    evals = 0
    early_exit: int | None = None

    for j in range(config.k_stages):
        cont = Continuation(model, prefix_in, config.continuation_path)
        if config.derivative_path == "syntactic":
            sc = score_derivative_syntactic(prefix_out, phi)
        else:
            sc = score_derivative_semantic(prefix_out, phi)
        rec = falsify(
            cont,
            sc,
            stage_h,
            config.control_points_per_stage,
            config.stop,
            optimizer,
            rng,
            optimizer_params=optimizer_params,
        )
        records.append(rec)
        evals += rec.evals
        prefix_in = rec.best_input if prefix_in is None else concatenate(prefix_in, rec.best_input)
        prefix_out = (
            rec.best_output if prefix_out is None else concatenate(prefix_out, rec.best_output)
        )

        if j < config.k_stages - 1 and rec.best_score < 0.0 and safety_shape(phi) is not None:
            # Hold the last input over the remaining stages; one simulation
            # settles the full-horizon robustness.
            stage_steps = rec.best_input.n - 1
            n_total = config.k_stages * stage_steps + 1
            pad = Signal(
                model.dt, np.tile(prefix_in.samples[-1], (n_total - prefix_in.n + 1, 1))
            )
            prefix_in = concatenate(prefix_in, pad)
            prefix_out = model.simulate(prefix_in)
            evals += 1
            early_exit = j
            break

    final_score = robustness(phi, prefix_out)
    return StagedTrialRecord(
        stage_records=records,
        input=prefix_in,
        output=prefix_out,
        final_score=final_score,
        success=final_score < 0.0,
        evals=evals,
        seed=seed,
        wall_time=time.perf_counter() - t_start,
        early_exit_stage=early_exit,
    )
