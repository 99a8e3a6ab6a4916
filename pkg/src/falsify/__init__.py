"""Optimization-based falsification of temporal-logic specifications for
black-box sampled-time models, with time staging.

The public surface re-exported here covers the usual workflow: build or
pick a model, parse a formula over its output names, then run `falsify`
or `staged_falsify`; the experiments module turns configs into seeded
trial batches.
"""

from .signals import (
    GRID_TOL,
    GridError,
    PiecewiseConstantSpec,
    Signal,
    concatenate,
    realize_piecewise_constant,
)
from .stl import (
    Atom,
    Const,
    Formula,
    Interval,
    ParseError,
    boolean_all,
    derivative,
    eval_all,
    parse,
    robustness,
    satisfied,
)
from .models import (
    BUILTIN_MODELS,
    AutoTransmission,
    Continuation,
    FuelControl,
    MonotoneIntegrator,
    Oscillator,
    Powertrain,
    StatelessMap,
    SystemModel,
    builtin,
    continuation,
)
from .optim import OPTIMIZERS, OptimizerBudget, SearchSpace, TrackedObjective
from .solver import (
    StopPolicy,
    TrialRecord,
    falsify,
    score_derivative_semantic,
    score_derivative_syntactic,
    score_from_formula,
)
from .staging import StagedTrialRecord, StagingConfig, staged_falsify
from .theory import (
    QuantizedInputGrid,
    check_incremental_falsification,
    check_statelessness,
    check_time_monotonicity,
    check_truncated_time_monotonicity,
    truncation_instant,
)
from .experiments import (
    BUILTIN_SPECS,
    ConfigError,
    ExperimentConfig,
    builtin_spec,
    run_experiment,
    run_matrix,
)

__version__ = "0.1.0"
