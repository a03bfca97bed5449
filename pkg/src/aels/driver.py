"""Descent loop with warm-started line searches, plus a simplex baseline.

The loop follows the classic template: pick a direction, run a line
search from a warm-started trial step, move, repeat.  The trial step for
the bracketing search and warm-started backtracking is 1/beta times the
previous accepted step (seeded by T0); fixed-restart backtracking always
starts at T0; the strong-Wolfe search starts at 1 under quasi-Newton
directions and warm-starts otherwise; schedules ignore the search
entirely.

Abandoned searches leave the iterate unchanged and trigger a retry:
gradient-based strategies retry the same direction once from T0 and then
stop with reason ``stalled``; the random-direction strategy simply draws
a fresh direction; BFGS resets its history and retries along the
negative gradient.  Stochastic runs freeze one minibatch view per step
for the direction and every probe, and log the full-batch objective
out-of-band (never charged to the ledger).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from aels.core import EvaluationLedger, RngStream, as_vector
from aels.directions import BfgsState, FdConfig, bfgs_direction, bfgs_update, fd_gradient, random_direction
from aels.linesearch import (
    LineProbe,
    LineSearchConfig,
    LineSearchOutcome,
    aels,
    armijo_backtrack,
    schedule_step,
    wolfe_search,
)
from aels.objectives import Objective, sample_minibatch

DIRECTION_KINDS = ("gradient", "fd_gradient", "random", "bfgs")
SEARCH_KINDS = ("aels", "armijo_adaptive", "armijo_traditional", "wolfe", "constant", "inverse")

# consecutive abandoned searches tolerated before a run is declared stalled;
# each retry resumes the geometric descent, so this bounds total shrinkage
MAX_CONSECUTIVE_ABANDONS = 40


@dataclass
class StopRule:
    """Primary stopping criterion plus always-enforced budgets.

    ``relative_error`` fires when f - f* <= eps (f0 - f*); ``mw_test``
    fires when f <= f_L + tau (f0 - f_L) with f_L supplied via ``f_star``;
    ``grad_norm`` fires on ||g|| <= eps; ``budget_only`` never fires on
    its own.  Budget breaches always stop with reason ``budget``.
    """

    kind: str = "budget_only"
    epsilon: float = 1e-4
    f_star: float | None = None
    f0: float | None = None
    tau: float = 1e-5
    max_fevals: int | None = None
    max_iters: int = 10_000

    def __post_init__(self):
        if self.kind not in ("relative_error", "mw_test", "grad_norm", "budget_only"):
            raise ValueError(f"unknown stop kind {self.kind!r}")
        if self.kind in ("relative_error", "mw_test") and self.f_star is None:
            raise ValueError(f"stop kind {self.kind!r} needs f_star")


def check_stop(rule: StopRule, current_f: float, ledger: EvaluationLedger, iters: int, grad_norm: float | None = None):
    """Returns (stop, reason); budgets dominate the primary criterion."""
    if rule.max_fevals is not None and ledger.fevals >= rule.max_fevals:
        return True, "budget"
    if iters >= rule.max_iters:
        return True, "budget"
    if rule.kind == "relative_error":
        if current_f - rule.f_star <= rule.epsilon * (rule.f0 - rule.f_star):
            return True, "converged"
    elif rule.kind == "mw_test":
        if current_f <= rule.f_star + rule.tau * (rule.f0 - rule.f_star):
            return True, "converged"
    elif rule.kind == "grad_norm":
        if grad_norm is not None and grad_norm <= rule.epsilon:
            return True, "converged"
    return False, ""


@dataclass
class IterationRecord:
    k: int
    step: float
    dir_kind: str
    fevals: int
    gevals: int
    ls_probes: int
    f: float
    abandoned: bool


@dataclass
class DescentTrace:
    """Per-iteration log of one trial, plus its final state and ledger."""

    records: list[IterationRecord] = field(default_factory=list)
    x: np.ndarray | None = None
    f: float = math.inf
    f0: float = math.inf
    reason: str = "budget"
    setup_fevals: int = 0
    fevals: int = 0
    gevals: int = 0
    dd_evals: int = 0

    @property
    def converged(self) -> bool:
        return self.reason == "converged"

    @property
    def iterations(self) -> int:
        return len(self.records)

    def feval_curve(self):
        """(cumulative fevals, objective) after each iteration."""
        total = self.setup_fevals
        out = []
        for rec in self.records:
            total += rec.fevals
            out.append((total, rec.f))
        return out


def _direction(strategy, obj, x, f_base, g_cache, bfgs_state, fd_cfg, rng):
    """Compute (d, slope, g, kind) for the current iterate.

    ``slope`` is the directional derivative of the (possibly
    approximated) objective model along d, as used by the sufficient-
    decrease and curvature tests.
    """
    if strategy == "gradient":
        g = obj.gradient(x) if g_cache is None else g_cache
        return -g, -float(g @ g), g, "gradient"
    if strategy == "fd_gradient":
        g = fd_gradient(obj, x, fd_cfg, f0=f_base) if g_cache is None else g_cache
        return -g, -float(g @ g), g, "fd_gradient"
    if strategy == "random":
        d, _, mu = random_direction(obj, x, fd_cfg, rng, f0=f_base)
        return d, -mu * mu, None, "random"
    if strategy == "bfgs":
        if g_cache is None:
            g = obj.gradient(x) if obj.has_gradient else fd_gradient(obj, x, fd_cfg, f0=f_base)
        else:
            g = g_cache
        d, fb = bfgs_direction(bfgs_state, g)
        return d, float(d @ g), g, ("bfgs_fallback" if fb else "bfgs")
    raise ValueError(f"unknown direction strategy {strategy!r}")


def run_descent(
    obj: Objective,
    direction_strategy: str,
    line_search_kind: str,
    T0: float,
    cfg: LineSearchConfig | None = None,
    stop: StopRule | None = None,
    rng: RngStream | None = None,
    x0=None,
    fd_cfg: FdConfig | None = None,
    batch_size: int | None = None,
    wolfe_max_extend: int = 50,
) -> DescentTrace:
    """Run the descent loop until the stop rule fires or a budget runs out."""
    if direction_strategy not in DIRECTION_KINDS:
        raise ValueError(f"unknown direction strategy {direction_strategy!r}")
    if line_search_kind not in SEARCH_KINDS:
        raise ValueError(f"unknown line search kind {line_search_kind!r}")
    if T0 <= 0:
        raise ValueError("T0 must be positive")
    cfg = cfg or LineSearchConfig()
    fd_cfg = fd_cfg or FdConfig()
    stop = stop or StopRule()
    ledger = obj.ledger
    x = np.zeros(obj.dim) if x0 is None else as_vector(x0, obj.dim).copy()

    stochastic = batch_size is not None
    if stochastic and rng is None:
        raise ValueError("stochastic runs need an RngStream")
    if direction_strategy == "random" and rng is None:
        raise ValueError("random-direction runs need an RngStream")

    # directional-derivative source for the Wolfe search
    exact_dd = obj.has_gradient and direction_strategy in ("gradient", "bfgs")

    trace = DescentTrace()
    before = ledger.fevals
    if stochastic:
        obj.view = sample_minibatch(obj.problem.data, batch_size, rng)
    f_base = obj.value(x)
    trace.setup_fevals = ledger.fevals - before
    true_f = obj.true_value(x) if stochastic else f_base
    trace.f0 = true_f
    if stop.f0 is None:
        stop = replace(stop, f0=true_f)

    bfgs_state = BfgsState.identity(obj.dim) if direction_strategy == "bfgs" else None
    g_cache = None
    t_prev = float(T0)
    retry = None  # (d, slope, g, kind) kept from an abandoned step
    consecutive_abandoned = 0
    reason = "budget"
    k = 0

    while True:
        halt, why = check_stop(stop, true_f, ledger, iters=k)
        if halt:
            reason = why
            break

        fev0, gev0 = ledger.fevals, ledger.gevals
        if stochastic and k > 0:
            obj.view = sample_minibatch(obj.problem.data, batch_size, rng)
            f_base = obj.value(x)

        t_override = None
        if retry is not None:
            d, slope, g, dir_kind, t_override = retry
        else:
            d, slope, g, dir_kind = _direction(
                direction_strategy, obj, x, f_base, g_cache, bfgs_state, fd_cfg, rng
            )
        g_cache = None

        if stop.kind == "grad_norm" and g is not None:
            halt, why = check_stop(stop, true_f, ledger, iters=k, grad_norm=float(np.linalg.norm(g)))
            if halt:
                reason = why
                break

        usable = bool(np.all(np.isfinite(d))) and float(np.linalg.norm(d)) > 0.0
        if usable and line_search_kind in ("armijo_adaptive", "armijo_traditional", "wolfe"):
            usable = np.isfinite(slope) and slope < 0.0

        if line_search_kind in ("aels", "armijo_adaptive"):
            T = t_prev / cfg.beta
        elif line_search_kind == "armijo_traditional":
            T = T0
        elif line_search_kind == "wolfe":
            T = 1.0 if direction_strategy == "bfgs" else t_prev / cfg.beta
        else:
            T = schedule_step(line_search_kind, T0, k + 1)
        if retry is not None:
            T = t_override if t_override is not None else T0

        if not usable:
            outcome = LineSearchOutcome(step=0.0, probes=0, dd_probes=0, abandoned=True)
        else:
            probe = LineProbe(obj, x, d, f_base, deriv=("exact" if exact_dd else "fd"), sigma=fd_cfg.sigma)
            if line_search_kind == "aels":
                outcome = aels(probe, T, cfg)
            elif line_search_kind in ("armijo_adaptive", "armijo_traditional"):
                outcome = armijo_backtrack(probe, slope, T, cfg)
            elif line_search_kind == "wolfe":
                outcome = wolfe_search(probe, slope, T, cfg, max_extend=wolfe_max_extend)
            else:
                h = probe(T)
                outcome = LineSearchOutcome(step=T, probes=probe.probes, dd_probes=0, abandoned=False, trial_trace=list(probe.trace))
                if not np.isfinite(h):
                    outcome = LineSearchOutcome(step=0.0, probes=probe.probes, dd_probes=0, abandoned=True)

        if outcome.abandoned:
            consecutive_abandoned += 1
            trace.records.append(
                IterationRecord(k, 0.0, dir_kind, ledger.fevals - fev0, ledger.gevals - gev0, outcome.probes, true_f, True)
            )
            k += 1
            if direction_strategy == "random" or stochastic:
                retry = None  # fresh direction (and minibatch) next iteration
                continue
            if consecutive_abandoned >= MAX_CONSECUTIVE_ABANDONS:
                reason = "stalled"
                break
            if not usable:
                if consecutive_abandoned >= 2:
                    reason = "stalled"
                    break
                retry = (d, slope, g, dir_kind, None)
                continue
            # resume the geometric descent below the smallest trial probed,
            # so successive retries keep shrinking instead of repeating
            probed = [t for t, _ in outcome.trial_trace if t > 0.0]
            t_resume = cfg.beta * min(probed) if probed else None
            if t_resume is not None and t_resume < 1e-28:
                reason = "stalled"
                break
            if direction_strategy == "bfgs" and g is not None and dir_kind != "bfgs_fallback":
                bfgs_state.reset()
                retry = (-g, -float(g @ g), g, "bfgs_fallback", t_resume)
            else:
                retry = (d, slope, g, dir_kind, t_resume)
            continue

        consecutive_abandoned = 0
        retry = None
        t_k = outcome.step
        x = x + t_k * d
        t_prev = t_k
        h_accept = dict((t, v) for t, v in outcome.trial_trace).get(t_k)

        if direction_strategy == "bfgs" and g is not None:
            f_new = h_accept if h_accept is not None else obj.value(x)
            g_new = obj.gradient(x) if obj.has_gradient else fd_gradient(obj, x, fd_cfg, f0=f_new)
            bfgs_update(bfgs_state, t_k * d, g_new - g)
            g_cache = g_new

        if stochastic:
            true_f = obj.true_value(x)
        else:
            f_base = h_accept if h_accept is not None else obj.value(x)
            true_f = f_base

        trace.records.append(
            IterationRecord(k, t_k, dir_kind, ledger.fevals - fev0, ledger.gevals - gev0, outcome.probes, true_f, False)
        )
        k += 1

    trace.x = x
    trace.f = true_f
    trace.reason = reason
    trace.fevals, trace.gevals, trace.dd_evals = ledger.fevals, ledger.gevals, ledger.dd_evals
    obj.view = None
    return trace


@dataclass
class NelderMeadState:
    """Simplex vertices/values and the standard coefficient set."""

    simplex: np.ndarray
    values: np.ndarray
    reflection: float = 1.0
    expansion: float = 2.0
    contraction: float = 0.5
    shrink: float = 0.5


def _initial_simplex(x0: np.ndarray) -> np.ndarray:
    """x0 plus per-coordinate bumps: 5% of the coordinate, 0.00025 if zero."""
    n = x0.size
    sim = np.tile(x0, (n + 1, 1))
    for i in range(n):
        if sim[i + 1, i] != 0.0:
            sim[i + 1, i] *= 1.05
        else:
            sim[i + 1, i] = 0.00025
    return sim


def nelder_mead(obj: Objective, x0, stop: StopRule, initial_simplex=None) -> DescentTrace:
    """Reflect/expand/contract/shrink simplex minimization.

    Stops on the StopRule (checked once per simplex iteration against the
    best vertex) or when the simplex diameter falls below 1e-12.
    """
    x0 = as_vector(x0, obj.dim)
    n = x0.size
    ledger = obj.ledger
    trace = DescentTrace()
    before = ledger.fevals

    sim = _initial_simplex(x0) if initial_simplex is None else np.asarray(initial_simplex, dtype=np.float64).copy()
    vals = np.array([obj.value(v) for v in sim])
    state = NelderMeadState(simplex=sim, values=vals)
    trace.setup_fevals = ledger.fevals - before
    order = np.argsort(vals, kind="stable")
    sim, vals = sim[order], vals[order]
    trace.f0 = float(vals[0])
    if stop.f0 is None:
        stop = replace(stop, f0=float(vals[0]))

    reason = "budget"
    k = 0
    while True:
        halt, why = check_stop(stop, float(vals[0]), ledger, iters=k)
        if halt:
            reason = why
            break
        if float(np.max(np.abs(sim[1:] - sim[0]))) < 1e-12:
            reason = "stalled"
            break

        fev0 = ledger.fevals
        centroid = np.mean(sim[:-1], axis=0)
        worst = sim[-1]
        xr = centroid + state.reflection * (centroid - worst)
        fr = obj.value(xr)
        if fr < vals[0]:
            xe = centroid + state.expansion * (centroid - worst)
            fe = obj.value(xe)
            if fe < fr:
                sim[-1], vals[-1] = xe, fe
            else:
                sim[-1], vals[-1] = xr, fr
        elif fr < vals[-2]:
            sim[-1], vals[-1] = xr, fr
        else:
            if fr < vals[-1]:
                xc = centroid + state.contraction * (centroid - worst)
                fc = obj.value(xc)
                if fc <= fr:
                    sim[-1], vals[-1] = xc, fc
                else:
                    sim, vals = _shrink(obj, sim, vals, state.shrink)
            else:
                xcc = centroid - state.contraction * (centroid - worst)
                fcc = obj.value(xcc)
                if fcc < vals[-1]:
                    sim[-1], vals[-1] = xcc, fcc
                else:
                    sim, vals = _shrink(obj, sim, vals, state.shrink)
        order = np.argsort(vals, kind="stable")
        sim, vals = sim[order], vals[order]
        trace.records.append(
            IterationRecord(k, 0.0, "simplex", ledger.fevals - fev0, 0, 0, float(vals[0]), False)
        )
        k += 1

    trace.x = sim[0].copy()
    trace.f = float(vals[0])
    trace.reason = reason
    trace.fevals, trace.gevals, trace.dd_evals = ledger.fevals, ledger.gevals, ledger.dd_evals
    return trace


def _shrink(obj, sim, vals, factor):
    for i in range(1, sim.shape[0]):
        sim[i] = sim[0] + factor * (sim[i] - sim[0])
        vals[i] = obj.value(sim[i])
    return sim, vals
