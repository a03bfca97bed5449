"""Step-size selection behind a single counted probe interface.

Four families are provided:

* :func:`aels` -- approximately exact line search: derivative-free
  geometric bracketing that returns a step inside [beta^2 t*, t*] of the
  exact 1-D minimizer t* on unimodal slices, using only function values.
* :func:`armijo_backtrack` -- classic sufficient-decrease backtracking
  (serves both the fixed-restart and warm-started variants; the caller
  chooses the initial trial step).
* :func:`wolfe_search` / :func:`zoom` -- strong-Wolfe search with
  geometric extension and bisection zoom, using directional derivatives
  that are either exact or two-point forward differences.
* :func:`schedule_step` -- constant and inverse fixed schedules.

Every search sees the objective only through a :class:`LineProbe`, so
ledger audits balance exactly: one feval per probed point, one extra
feval per finite-difference directional derivative.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from aels.core import as_vector

INV_GOLDEN = 2.0 / (1.0 + math.sqrt(5.0))

# Backtracking below this step aborts the search (guards denormal spirals).
STEP_FLOOR = 1e-30

# Bisection iterations allowed inside zoom before giving up.
ZOOM_CAP = 64


@dataclass
class LineSearchConfig:
    """Shared knobs: contraction factor, Armijo/Wolfe constants, patience."""

    beta: float = INV_GOLDEN
    c1: float = 1e-4
    c2: float = 0.9
    patience: int = 20

    def __post_init__(self):
        if not 0.0 < self.beta < 1.0:
            raise ValueError("beta must lie in (0, 1)")
        if not 0.0 < self.c1 < self.c2 < 1.0:
            raise ValueError("need 0 < c1 < c2 < 1")
        if self.patience < 3:
            raise ValueError("patience must be >= 3")


@dataclass
class LineSearchOutcome:
    """Chosen step plus the evaluation bill and the ordered trial trace."""

    step: float
    probes: int
    dd_probes: int
    abandoned: bool
    trial_trace: list = field(default_factory=list)


class LineProbe:
    """Counted 1-D restriction h(t) = f(x + t d) of an objective.

    ``base_value`` is the pre-supplied h(0) and is never recounted.  Every
    other query charges one feval to the objective's ledger; values are
    cached by t so re-queries are free, and non-finite values are mapped
    to +inf so they compare as worse than any finite value.

    The optional derivative query ``slope(t)`` returns h'(t) either from
    the objective's gradient (``deriv="exact"``, one geval) or from a
    two-point forward difference with radius sigma * max(1, |t|)
    (``deriv="fd"``, one extra feval).  Both charge one dd_eval.
    """

    def __init__(self, obj, x, d, base_value, deriv: str | None = None, sigma: float = 1.5e-8):
        self.obj = obj
        self.x = as_vector(x)
        self.d = as_vector(d, self.x.size)
        self.base_value = float(base_value)
        self.deriv = deriv
        self.sigma = float(sigma)
        self.trace: list[tuple[float, float]] = []
        self.probes = 0
        self.dd_probes = 0
        self._cache: dict[float, float] = {0.0: self.base_value}

    def __call__(self, t: float) -> float:
        t = float(t)
        hit = self._cache.get(t)
        if hit is not None:
            return hit
        v = self.obj.value(self.x + t * self.d)
        if not np.isfinite(v):
            v = math.inf
        self.probes += 1
        self.trace.append((t, v))
        self._cache[t] = v
        return v

    def slope(self, t: float) -> float:
        t = float(t)
        if self.deriv == "exact":
            g = self.obj.gradient(self.x + t * self.d)
            self.obj.ledger.dd_evals += 1
            self.dd_probes += 1
            return float(g @ self.d)
        if self.deriv == "fd":
            h0 = self(t)
            step = self.sigma * max(1.0, abs(t))
            h1 = self(t + step)
            self.obj.ledger.dd_evals += 1
            self.dd_probes += 1
            return (h1 - h0) / step
        raise ValueError("probe was built without a derivative query")

    def best_seen(self) -> tuple[float, float] | None:
        if not self.trace:
            return None
        t, v = min(self.trace, key=lambda tv: tv[1])
        return t, v


def _outcome(probe: LineProbe, step: float, abandoned: bool) -> LineSearchOutcome:
    return LineSearchOutcome(
        step=step,
        probes=probe.probes,
        dd_probes=probe.dd_probes,
        abandoned=abandoned,
        trial_trace=list(probe.trace),
    )


def _resolve(probe: LineProbe, candidate: float | None) -> LineSearchOutcome:
    """Enforce strict improvement over h(0); abandon when nothing improved.

    On unimodal slices the bracketing candidate always improves and is
    returned as-is.  On non-unimodal objectives the candidate can fail to
    improve even though some probed step did; the best probed step is
    then used instead of discarding the work.
    """
    base = probe.base_value
    if candidate is not None:
        h_cand = probe._cache.get(candidate)
        if h_cand is not None and h_cand < base:
            return _outcome(probe, candidate, abandoned=False)
    best = probe.best_seen()
    if best is not None and best[1] < base:
        return _outcome(probe, best[0], abandoned=False)
    return _outcome(probe, 0.0, abandoned=True)


def aels(probe: LineProbe, T: float, cfg: LineSearchConfig | None = None) -> LineSearchOutcome:
    """Approximately exact line search.

    Starting from trial step T, compares h(T) with h(0) to pick a
    direction, then scales the step geometrically (factor 1/beta upward
    or beta downward) while the objective keeps decreasing.  If one
    upward trial immediately made things worse, the step is reset to T
    and the search backtracks instead.  The returned step is the last
    trial when backtracking ended the search, and beta^2 times the last
    trial when forward-tracking ended it; on strictly unimodal h it lies
    in [beta^2 t*, t*].

    Uses no derivatives.  Each adjustment loop is capped at
    ``cfg.patience`` trials; if the cap fires with no trial improving on
    h(0) the step is abandoned (step 0) for the driver to retry.
    """
    cfg = cfg or LineSearchConfig()
    if T <= 0.0:
        raise ValueError("initial step must be positive")
    beta = cfg.beta
    history: list[tuple[float, float]] = []

    def q(t):
        v = probe(t)
        history.append((t, v))
        return v

    t = float(T)
    f_old = probe(0.0)
    f_new = q(t)

    # choose whether to grow or shrink the step
    alpha = beta
    if f_new <= f_old:
        alpha = 1.0 / beta

    # scale while the objective keeps decreasing; a downward run only stops
    # once the bracket's interior point improves on h(0) (always true on
    # unimodal slices, not on ridged ones)
    capped = False
    iters = 0
    while True:
        t_next = alpha * t
        if alpha < 1.0 and t_next < STEP_FLOOR:
            return _outcome(probe, 0.0, abandoned=True)
        t = t_next
        f_old, f_new = f_new, q(t)
        iters += 1
        if f_new >= f_old and (alpha > 1.0 or f_old < probe.base_value):
            break
        if iters >= cfg.patience:
            capped = True
            break

    # one upward trial that immediately got worse: reset and backtrack
    if not capped and alpha > 1.0 and iters == 1:
        t = float(T)
        alpha = beta
        f_new, f_old = f_old, f_new
        iters = 0
        while True:
            t_next = alpha * t
            if t_next < STEP_FLOOR:
                return _outcome(probe, 0.0, abandoned=True)
            t = t_next
            f_old, f_new = f_new, q(t)
            iters += 1
            if f_new > f_old and f_old < probe.base_value:
                break
            if iters >= cfg.patience:
                capped = True
                break

    if capped:
        return _resolve(probe, candidate=None)
    if alpha < 1.0:
        return _resolve(probe, candidate=t)
    # forward-tracking ended: return beta^2 t, i.e. the trial two rungs back
    return _resolve(probe, candidate=history[-3][0])


def armijo_backtrack(
    probe: LineProbe, slope: float, T: float, cfg: LineSearchConfig | None = None
) -> LineSearchOutcome:
    """Backtrack geometrically until h(t) <= h(0) + c1 t slope.

    ``slope`` is the directional derivative at t = 0 and must be
    negative.  The fixed-restart and warm-started variants differ only
    in the T the driver passes.
    """
    cfg = cfg or LineSearchConfig()
    if T <= 0.0:
        raise ValueError("initial step must be positive")
    if slope >= 0.0:
        raise ValueError("slope must be negative (descent direction)")
    base = probe.base_value
    t = float(T)
    for _ in range(cfg.patience):
        if probe(t) <= base + cfg.c1 * t * slope:
            return _outcome(probe, t, abandoned=False)
        t *= cfg.beta
        if t < STEP_FLOOR:
            break
    return _outcome(probe, 0.0, abandoned=True)


def wolfe_search(
    probe: LineProbe,
    slope0: float,
    T: float,
    cfg: LineSearchConfig | None = None,
    max_extend: int = 50,
) -> LineSearchOutcome:
    """Strong-Wolfe line search with geometric extension and bisection zoom.

    Trial steps grow by a factor 1/beta from T.  A trial that breaks the
    sufficient-decrease test (or stops decreasing) brackets the answer
    and hands off to :func:`zoom`; a trial meeting the curvature test
    |h'(t)| <= -c2 h'(0) is returned directly; a nonnegative slope
    brackets from the other side.  Requires the probe's derivative query.
    """
    cfg = cfg or LineSearchConfig()
    if T <= 0.0:
        raise ValueError("initial step must be positive")
    if slope0 >= 0.0:
        raise ValueError("slope0 must be negative (descent direction)")
    base = probe.base_value
    a_prev, h_prev = 0.0, base
    a = float(T)
    for i in range(1, max_extend + 1):
        h_a = probe(a)
        if h_a > base + cfg.c1 * a * slope0 or (i > 1 and h_a >= h_prev):
            return zoom(probe, slope0, a_prev, a, cfg)
        s_a = probe.slope(a)
        if abs(s_a) <= -cfg.c2 * slope0:
            return _outcome(probe, a, abandoned=False)
        if s_a >= 0.0:
            return zoom(probe, slope0, a, a_prev, cfg)
        a_prev, h_prev = a, h_a
        a = a / cfg.beta
    return _outcome(probe, 0.0, abandoned=True)


def zoom(
    probe: LineProbe,
    slope0: float,
    lo: float,
    hi: float,
    cfg: LineSearchConfig | None = None,
) -> LineSearchOutcome:
    """Bisect [lo, hi] until a point satisfies both strong Wolfe conditions.

    ``lo``/``hi`` follow the bracketing convention of the caller: lo has
    the lower objective value seen so far and the interval is known to
    contain a strong-Wolfe point.  Capped at 64 bisections, after which
    the best probed point is returned with ``abandoned=True``.
    """
    cfg = cfg or LineSearchConfig()
    if lo == hi:
        raise ValueError("zoom interval endpoints must differ")
    base = probe.base_value
    h_lo = probe(lo)
    for _ in range(ZOOM_CAP):
        mid = 0.5 * (lo + hi)
        h_mid = probe(mid)
        if h_mid > base + cfg.c1 * mid * slope0 or h_mid >= h_lo:
            hi = mid
        else:
            s_mid = probe.slope(mid)
            if abs(s_mid) <= -cfg.c2 * slope0:
                return _outcome(probe, mid, abandoned=False)
            if s_mid * (hi - lo) >= 0.0:
                hi = lo
            lo, h_lo = mid, h_mid
    best = probe.best_seen()
    return _outcome(probe, best[0] if best else 0.0, abandoned=True)


def schedule_step(kind: str, T0: float, i: int) -> float:
    """Fixed step schedules: ``constant`` gives T0, ``inverse`` gives T0/i."""
    if T0 <= 0.0:
        raise ValueError("T0 must be positive")
    if i < 1:
        raise ValueError("step index starts at 1")
    if kind == "constant":
        return T0
    if kind == "inverse":
        return T0 / i
    raise ValueError(f"unknown schedule kind {kind!r}")
