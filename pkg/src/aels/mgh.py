"""Nonlinear least-squares test problems for derivative-free benchmarking.

Classic small-dimension problems (n <= 12) in the standard sum-of-squared-
residuals form f(x) = sum_j r_j(x)^2, each with its published standard
starting point.  Objectives are exposed value-only; drivers that want
gradients must estimate them.  ``f_min`` records the known minimum value
where one is published (several problems also have higher local minima
that descent methods may legitimately land in).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from aels.core import as_vector

_BARD_Y = np.array([0.14, 0.18, 0.22, 0.25, 0.29, 0.32, 0.35, 0.39, 0.37, 0.58, 0.73, 0.96, 1.34, 2.10, 4.39])
_GAUSS_Y = np.array(
    [0.0009, 0.0044, 0.0175, 0.0540, 0.1295, 0.2420, 0.3521, 0.3989, 0.3521, 0.2420, 0.1295, 0.0540, 0.0175, 0.0044, 0.0009]
)


def _rosenbrock(x):
    return np.array([10.0 * (x[1] - x[0] ** 2), 1.0 - x[0]])


def _freudenstein_roth(x):
    return np.array(
        [
            -13.0 + x[0] + ((5.0 - x[1]) * x[1] - 2.0) * x[1],
            -29.0 + x[0] + ((1.0 + x[1]) * x[1] - 14.0) * x[1],
        ]
    )


def _powell_badly_scaled(x):
    return np.array([1e4 * x[0] * x[1] - 1.0, np.exp(-x[0]) + np.exp(-x[1]) - 1.0001])


def _brown_badly_scaled(x):
    return np.array([x[0] - 1e6, x[1] - 2e-6, x[0] * x[1] - 2.0])


def _beale(x):
    y = (1.5, 2.25, 2.625)
    return np.array([y[i] - x[0] * (1.0 - x[1] ** (i + 1)) for i in range(3)])


def _helical_valley(x):
    if x[0] > 0:
        theta = math.atan2(x[1], x[0]) / (2.0 * math.pi)
    elif x[0] < 0:
        theta = math.atan(x[1] / x[0]) / (2.0 * math.pi) + 0.5
    else:
        theta = 0.25 if x[1] >= 0 else -0.25
    return np.array([10.0 * (x[2] - 10.0 * theta), 10.0 * (math.hypot(x[0], x[1]) - 1.0), x[2]])


def _bard(x):
    r = np.empty(15)
    for i in range(1, 16):
        u, v = float(i), float(16 - i)
        w = min(u, v)
        r[i - 1] = _BARD_Y[i - 1] - (x[0] + u / (v * x[1] + w * x[2]))
    return r


def _gaussian(x):
    t = (8.0 - np.arange(1, 16)) / 2.0
    return x[0] * np.exp(-0.5 * x[1] * (t - x[2]) ** 2) - _GAUSS_Y


def _box_3d(x):
    t = 0.1 * np.arange(1, 11)
    return np.exp(-t * x[0]) - np.exp(-t * x[1]) - x[2] * (np.exp(-t) - np.exp(-10.0 * t))


def _wood(x):
    s10, s90 = math.sqrt(10.0), math.sqrt(90.0)
    return np.array(
        [
            10.0 * (x[1] - x[0] ** 2),
            1.0 - x[0],
            s90 * (x[3] - x[2] ** 2),
            1.0 - x[2],
            s10 * (x[1] + x[3] - 2.0),
            (x[1] - x[3]) / s10,
        ]
    )


def _brown_dennis(x):
    t = np.arange(1, 21) / 5.0
    a = x[0] + t * x[1] - np.exp(t)
    b = x[2] + x[3] * np.sin(t) - np.cos(t)
    return a**2 + b**2


def _penalty_1(x):
    a = math.sqrt(1e-5)
    return np.concatenate([a * (x - 1.0), [float(x @ x) - 0.25]])


def _extended_rosenbrock(x):
    n = len(x)
    r = np.empty(n)
    r[0::2] = 10.0 * (x[1::2] - x[0::2] ** 2)
    r[1::2] = 1.0 - x[0::2]
    return r


def _variably_dimensioned(x):
    n = len(x)
    s = float(np.arange(1, n + 1) @ (x - 1.0))
    return np.concatenate([x - 1.0, [s, s * s]])


def _trigonometric(x):
    n = len(x)
    cs = float(np.sum(np.cos(x)))
    return n - cs + np.arange(1, n + 1) * (1.0 - np.cos(x)) - np.sin(x)


@dataclass(frozen=True)
class MghProblem:
    """One catalogue entry: residual map, dimension, standard start."""

    name: str
    n: int
    residuals: callable
    start: tuple
    f_min: float | None = None
    minimizer: tuple | None = None

    @property
    def dim(self) -> int:
        return self.n

    def value(self, x) -> float:
        x = as_vector(x, self.n)
        with np.errstate(over="ignore", invalid="ignore"):
            r = self.residuals(x)
            return float(r @ r)

    def start_point(self) -> np.ndarray:
        return np.array(self.start, dtype=np.float64)


_CATALOGUE = [
    MghProblem("rosenbrock", 2, _rosenbrock, (-1.2, 1.0), 0.0, (1.0, 1.0)),
    MghProblem("freudenstein_roth", 2, _freudenstein_roth, (0.5, -2.0), 0.0, (5.0, 4.0)),
    MghProblem("powell_badly_scaled", 2, _powell_badly_scaled, (0.0, 1.0), 0.0),
    MghProblem("brown_badly_scaled", 2, _brown_badly_scaled, (1.0, 1.0), 0.0, (1e6, 2e-6)),
    MghProblem("beale", 2, _beale, (1.0, 1.0), 0.0, (3.0, 0.5)),
    MghProblem("helical_valley", 3, _helical_valley, (-1.0, 0.0, 0.0), 0.0, (1.0, 0.0, 0.0)),
    MghProblem("bard", 3, _bard, (1.0, 1.0, 1.0), 8.21487e-3),
    MghProblem("gaussian", 3, _gaussian, (0.4, 1.0, 0.0), 1.12793e-8),
    MghProblem("box_3d", 3, _box_3d, (0.0, 10.0, 20.0), 0.0, (1.0, 10.0, 1.0)),
    MghProblem("wood", 4, _wood, (-3.0, -1.0, -3.0, -1.0), 0.0, (1.0, 1.0, 1.0, 1.0)),
    MghProblem("brown_dennis", 4, _brown_dennis, (25.0, 5.0, -5.0, -1.0), 85822.2),
    MghProblem("penalty_1", 4, _penalty_1, (1.0, 2.0, 3.0, 4.0), 2.24997e-5),
    MghProblem("extended_rosenbrock", 6, _extended_rosenbrock, (-1.2, 1.0, -1.2, 1.0, -1.2, 1.0), 0.0, (1.0,) * 6),
    MghProblem("variably_dimensioned", 8, _variably_dimensioned, tuple(1.0 - j / 8.0 for j in range(1, 9)), 0.0, (1.0,) * 8),
    MghProblem("trigonometric", 10, _trigonometric, (0.1,) * 10, 0.0),
]

MGH_PROBLEMS = {p.name: p for p in _CATALOGUE}


def mgh_problem(name: str) -> MghProblem:
    try:
        return MGH_PROBLEMS[name]
    except KeyError:
        raise ValueError(f"unknown benchmark problem {name!r}; known: {sorted(MGH_PROBLEMS)}") from None


def mgh_eval(problem: MghProblem | str, x) -> float:
    """Sum of squared residuals; accepts a problem or its catalogue name."""
    if isinstance(problem, str):
        problem = mgh_problem(problem)
    return problem.value(x)
