"""Approximately exact line search and companions.

A small numerical-optimization toolkit built around a derivative-free
line search that brackets the one-dimensional minimizer with geometric
probing and returns a step within a constant fraction of it.  Includes
Armijo backtracking, a strong-Wolfe search with bisection zoom, fixed
step schedules, gradient / finite-difference / random-direction / BFGS
descent drivers, logistic-regression and nonlinear least-squares test
objectives, analytic bound checkers, and a benchmark harness emitting
performance profiles.
"""

from aels.core import EvaluationLedger, RngStream, random_unit_vector
from aels.linesearch import (
    INV_GOLDEN,
    LineProbe,
    LineSearchConfig,
    LineSearchOutcome,
    aels,
    armijo_backtrack,
    schedule_step,
    wolfe_search,
    zoom,
)
from aels.objectives import (
    LogisticProblem,
    MinibatchView,
    Objective,
    QuadraticProblem,
    SparseDataset,
    bb_initial_step,
    parse_libsvm,
    sample_minibatch,
    serialize_libsvm,
)
from aels.driver import DescentTrace, StopRule, check_stop, nelder_mead, run_descent

__all__ = [
    "EvaluationLedger",
    "RngStream",
    "random_unit_vector",
    "INV_GOLDEN",
    "LineProbe",
    "LineSearchConfig",
    "LineSearchOutcome",
    "aels",
    "armijo_backtrack",
    "schedule_step",
    "wolfe_search",
    "zoom",
    "Objective",
    "QuadraticProblem",
    "SparseDataset",
    "LogisticProblem",
    "MinibatchView",
    "parse_libsvm",
    "serialize_libsvm",
    "sample_minibatch",
    "bb_initial_step",
    "StopRule",
    "DescentTrace",
    "check_stop",
    "run_descent",
    "nelder_mead",
]

__version__ = "0.1.0"
