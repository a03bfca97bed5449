"""Search-direction strategies for the descent loop.

Forward finite differencing is used throughout (never central): the
gradient estimate costs n fevals beyond a cached f(x) and carries error
at most L*sigma*sqrt(n)/2; a single directional derivative costs one
feval with error at most L*sigma/2.  The BFGS state keeps a dense
inverse-Hessian approximation with a curvature-guarded update and a
descent-check fallback to the negative gradient.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from aels.core import RngStream, as_vector, random_unit_vector
from aels.objectives import Objective


@dataclass
class FdConfig:
    """Forward-differencing sampling radius (absolute, not coordinate-scaled)."""

    sigma: float = 1.5e-8

    def __post_init__(self):
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")


def fd_gradient(obj: Objective, x, cfg: FdConfig | None = None, f0: float | None = None) -> np.ndarray:
    """Forward-difference gradient estimate, one feval per coordinate.

    Pass the already-known f(x) as ``f0`` to avoid recounting it.
    Non-finite probe values propagate into the returned entries.
    """
    cfg = cfg or FdConfig()
    x = as_vector(x, obj.dim)
    if f0 is None:
        f0 = obj.value(x)
    g = np.empty(x.size)
    for i in range(x.size):
        xp = x.copy()
        xp[i] += cfg.sigma
        g[i] = (obj.value(xp) - f0) / cfg.sigma
    return g


def fd_directional(obj: Objective, x, v, cfg: FdConfig | None = None, f0: float | None = None) -> float:
    """Forward-difference directional derivative along unit vector v (one feval)."""
    cfg = cfg or FdConfig()
    x = as_vector(x, obj.dim)
    v = as_vector(v, obj.dim)
    if abs(float(np.linalg.norm(v)) - 1.0) > 1e-8:
        raise ValueError("direction must be a unit vector")
    if f0 is None:
        f0 = obj.value(x)
    mu = (obj.value(x + cfg.sigma * v) - f0) / cfg.sigma
    obj.ledger.dd_evals += 1
    return float(mu)


def random_direction(
    obj: Objective, x, cfg: FdConfig | None = None, rng: RngStream | None = None, f0: float | None = None
) -> tuple[np.ndarray, np.ndarray, float]:
    """Descent direction -mu*v for a uniformly random unit vector v.

    mu is the forward-difference directional derivative along v, so the
    direction length carries the local slope and the step scale adapts
    automatically.  Returns (direction, v, mu).
    """
    if rng is None:
        raise ValueError("random_direction needs an RngStream")
    v = random_unit_vector(rng, obj.dim)
    mu = fd_directional(obj, x, v, cfg, f0=f0)
    return -mu * v, v, mu


@dataclass
class BfgsState:
    """Dense inverse-Hessian approximation, identity-initialized."""

    inv_hessian: np.ndarray
    history_valid: bool = True

    @classmethod
    def identity(cls, n: int) -> "BfgsState":
        return cls(inv_hessian=np.eye(n))

    def reset(self):
        self.inv_hessian = np.eye(self.inv_hessian.shape[0])
        self.history_valid = False


def bfgs_direction(state: BfgsState, g) -> tuple[np.ndarray, bool]:
    """Quasi-Newton direction -H g with a descent-check fallback.

    If numerical corruption makes -Hg fail the descent test
    d'g < -1e-12 ||d|| ||g||, the history is reset and the negative
    gradient is returned with the fallback flag set.
    """
    g = as_vector(g)
    d = -state.inv_hessian @ g
    gnorm = float(np.linalg.norm(g))
    if gnorm == 0.0:
        return d, False
    dnorm = float(np.linalg.norm(d))
    if float(d @ g) >= -1e-12 * dnorm * gnorm or not np.isfinite(d).all():
        state.reset()
        return -g, True
    return d, False


def bfgs_update(state: BfgsState, s, y) -> BfgsState:
    """Secant update H <- (I - rho s y')H(I - rho y s') + rho s s'.

    Skipped (H unchanged) unless the curvature y's exceeds
    1e-10 ||s|| ||y||; steps accepted by searches without a curvature
    condition need not satisfy it.
    """
    s = as_vector(s)
    y = as_vector(y, s.size)
    H = state.inv_hessian
    if H.shape[0] != s.size:
        raise ValueError("state/step dimension mismatch")
    sty = float(y @ s)
    if sty <= 1e-10 * float(np.linalg.norm(s)) * float(np.linalg.norm(y)):
        return state
    rho = 1.0 / sty
    Hy = H @ y
    # (I - rho s y')H(I - rho y s') + rho s s', expanded to avoid temporaries
    H_new = H - rho * (np.outer(s, Hy) + np.outer(Hy, s)) + rho * (rho * float(y @ Hy) + 1.0) * np.outer(s, s)
    state.inv_hessian = 0.5 * (H_new + H_new.T)  # enforce exact symmetry
    state.history_valid = True
    return state
