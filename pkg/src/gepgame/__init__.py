"""Top-k generalized eigenvectors by a game between eigenvector players.

Solves ``A v = lambda B v`` for symmetric ``A`` and symmetric positive definite
``B`` from exact matrices or from streams of minibatch estimates.
"""
from ._backend import BACKEND
from .core import (
    OracleSolution,
    angle_under_metric,
    angular_errors,
    b_orthogonality_defect,
    generalized_rayleigh,
    oracle_solve,
    subspace_error,
)
from .errors import (
    ConfigInvalid,
    DimensionMismatch,
    GepError,
    NonPositiveDenominator,
    NotConverged,
    NotSpd,
    NotSymmetric,
    RankDeficient,
    StreamExhausted,
)
from .game import PlayerSet, UpdateDirection, update_direction, utility
from .solvers import (
    SolverConfig,
    StepSchedule,
    TrajectoryRecord,
    schedule_rate,
    solve_deterministic,
    solve_smooth_stochastic,
    solve_stochastic,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "ConfigInvalid",
    "DimensionMismatch",
    "GepError",
    "NonPositiveDenominator",
    "NotConverged",
    "NotSpd",
    "NotSymmetric",
    "OracleSolution",
    "PlayerSet",
    "RankDeficient",
    "SolverConfig",
    "StepSchedule",
    "StreamExhausted",
    "TrajectoryRecord",
    "UpdateDirection",
    "angle_under_metric",
    "angular_errors",
    "b_orthogonality_defect",
    "generalized_rayleigh",
    "oracle_solve",
    "schedule_rate",
    "solve_deterministic",
    "solve_smooth_stochastic",
    "solve_stochastic",
    "subspace_error",
    "update_direction",
    "utility",
]
