"""Analytic oracles and executable complexity bounds for the line searches.

Everything here is an independent check path: closed-form quadratic step
sizes, a brute-force golden-section minimizer, the step-size intervals
implied by strong convexity and gradient smoothness, and the iteration /
function-evaluation envelopes for the geometric bracketing search and the
strong-Wolfe search.  ``run_theory_checks`` executes the whole battery on
random quadratics and reports one verdict per bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from aels.core import RngStream
from aels.linesearch import INV_GOLDEN
from aels.objectives import QuadraticProblem


@dataclass
class TheoryParams:
    """Problem and algorithm constants the bounds are evaluated at.

    ``c1`` defaults to 1/2, the analysis convention for the sufficient-
    decrease boundary; runtime searches use their own config (1e-4) and
    the two never mix.
    """

    m: float
    L: float
    beta: float = INV_GOLDEN
    c1: float = 0.5
    c2: float = 0.9
    gamma_min: float = 1.0
    gamma_max: float = 1.0
    sigma_tilde: float | None = None
    Delta: float | None = None
    n: int | None = None
    T0: float = 1.0
    rho: float | None = None

    def __post_init__(self):
        if not 0.0 < self.m <= self.L:
            raise ValueError("need 0 < m <= L")
        if not 0.0 < self.beta < 1.0:
            raise ValueError("beta must lie in (0, 1)")
        if not 0.0 < self.c1 < self.c2 < 1.0:
            raise ValueError("need 0 < c1 < c2 < 1")
        if not 0.0 < self.gamma_min <= self.gamma_max:
            raise ValueError("need 0 < gamma_min <= gamma_max")
        if self.sigma_tilde is not None and not 0.0 < self.sigma_tilde < 1.0:
            raise ValueError("sigma_tilde must lie in (0, 1)")

    @property
    def contraction_root(self) -> float:
        """sqrt(1 - m/L), the recurring conditioning term."""
        return math.sqrt(1.0 - self.m / self.L)


@dataclass
class StepInterval:
    lo: float
    hi: float

    def __post_init__(self):
        if self.lo > self.hi:
            raise ValueError("interval endpoints out of order")

    def contains(self, t: float, rel_slack: float = 1e-9) -> bool:
        pad = rel_slack * max(abs(self.lo), abs(self.hi), 1.0)
        return self.lo - pad <= t <= self.hi + pad


def exact_quadratic_step(problem: QuadraticProblem, x, d) -> float:
    """Closed-form 1-D minimizer t* = -d'(Ax+b) / d'Ad along d from x."""
    d = np.asarray(d, dtype=np.float64)
    if not np.any(d):
        raise ValueError("direction must be nonzero")
    curv = float(d @ (problem.A @ d))
    if curv <= 0.0:
        raise ValueError("direction has nonpositive curvature")
    return float(-(d @ problem.gradient(x)) / curv)


def oracle_line_minimizer(h, bracket: tuple[float, float], tol: float = 1e-12) -> float:
    """Golden-section refinement of a strictly unimodal h on [a, b].

    Brute-force oracle, deliberately independent of every search code
    path it is used to audit.
    """
    a, b = float(bracket[0]), float(bracket[1])
    if b <= a:
        raise ValueError("bracket must satisfy a < b")
    ratio = (math.sqrt(5.0) - 1.0) / 2.0
    c = b - ratio * (b - a)
    d = a + ratio * (b - a)
    hc, hd = h(c), h(d)
    while (b - a) > tol:
        if hc < hd:
            b, d, hd = d, c, hc
            c = b - ratio * (b - a)
            hc = h(c)
        else:
            a, c, hc = c, d, hd
            d = a + ratio * (b - a)
            hd = h(d)
    return 0.5 * (a + b)


def armijo_boundary_step(h, slope: float, hint: float = 1.0, tol: float = 1e-10) -> float:
    """Positive root of h(t) = h(0) + (t/2) slope, found by bisection.

    This is the largest sufficient-decrease step at the analysis constant
    c1 = 1/2; ``slope`` is h'(0) < 0.
    """
    if slope >= 0.0:
        raise ValueError("slope must be negative")
    h0 = h(0.0)

    def g(t):
        return h(t) - h0 - 0.5 * t * slope

    hi = float(hint)
    while g(hi) <= 0.0:
        hi *= 2.0
        if hi > 1e30:
            raise RuntimeError("failed to bracket the sufficient-decrease boundary")
    lo = 0.5 * hi if g(0.5 * hi) > 0.0 else 0.0
    while g(lo) > 0.0:
        lo *= 0.5
    while hi - lo > tol * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        if g(mid) > 0.0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def step_size_intervals(p: TheoryParams, gamma: float) -> tuple[StepInterval, StepInterval, StepInterval]:
    """(sufficient-decrease, exact-minimizer, strong-Wolfe) step intervals.

    With gamma = -d'grad f / ||d||^2:
      armijo boundary t_a in gamma [1/L, 1/m]
      exact minimizer t*  in (gamma/m) [1 - r, 1 + r],  r = sqrt(1 - m/L)
      Wolfe-accepted  t_w in gamma [(1 - c2)/L, 1/m]
    """
    r = p.contraction_root
    armijo = StepInterval(gamma / p.L, gamma / p.m)
    exact = StepInterval((gamma / p.m) * (1.0 - r), (gamma / p.m) * (1.0 + r))
    wolfe = StepInterval(gamma * (1.0 - p.c2) / p.L, gamma / p.m)
    return armijo, exact, wolfe


def _log_inv_beta(x: float, beta: float) -> float:
    return math.log(x) / math.log(1.0 / beta)


@dataclass
class ComplexityBounds:
    aels_contraction: float
    aels_fevals_per_step: int
    aels_first_step_extra: int
    wolfe_fevals_per_search: float


def complexity_bounds(p: TheoryParams) -> ComplexityBounds:
    """Per-step contraction and evaluation-count envelopes.

    * ``aels_contraction``: worst gap ratio per step with gamma = 1,
      1 - beta^2 (1 - sqrt(1 - m/L)).
    * ``aels_fevals_per_step``: probe cap for every warm-started step,
      4 + ceil(log_{1/beta} of the worst-case t* drift between steps).
    * ``aels_first_step_extra``: the additional initial-step term in the
      cumulative k-step evaluation bound, from the distance of T0 to the
      reachable t* range.
    * ``wolfe_fevals_per_search``: function evaluations per strong-Wolfe
      search with two-point finite-difference directional derivatives
      (each costing one extra feval), evaluated at gamma = gamma_max and
      initial step T0.
    """
    r = p.contraction_root
    beta = p.beta
    contraction = 1.0 - beta * beta * (1.0 - r)
    ratio = (p.gamma_max * (1.0 + r)) / (p.gamma_min * (1.0 - r))
    per_step = 4 + math.ceil(_log_inv_beta(ratio, beta))
    extra_arg = max(
        beta * beta * p.gamma_min * (1.0 - r) / (p.m * p.T0),
        p.m * p.T0 / (beta * p.gamma_max * (1.0 + r)),
    )
    first_extra = math.ceil(_log_inv_beta(extra_arg, beta))
    g = p.gamma_max
    wolfe = (
        2.0
        + 2.0 * math.log2(p.L / (p.m * p.c2))
        + max(2.0 + 2.0 * _log_inv_beta(g / (p.m * p.T0), beta), math.log2(p.T0 * p.L / g))
    )
    return ComplexityBounds(contraction, per_step, first_extra, wolfe)


def aels_first_step_evals(p: TheoryParams) -> int:
    """Probe cap for the very first search, whose trial step is T0."""
    r = p.contraction_root
    arg = max(
        p.gamma_max * (1.0 + r) / (p.m * p.T0),
        p.m * p.T0 / (p.beta**3 * p.gamma_min * (1.0 - r)),
    )
    return 1 + math.ceil(_log_inv_beta(arg, p.beta))


def aels_probe_cap(beta: float, t_prev: float, t_star: float) -> int:
    """Tight per-step probe cap given the previous step and the true t*."""
    up = math.ceil(_log_inv_beta(max(t_star / t_prev, 1.0), beta))
    down = math.ceil(_log_inv_beta(max(t_prev / t_star, 1.0), beta))
    return 1 + max(up, 3 + down)


def wolfe_feval_bound(p: TheoryParams, gamma: float, T: float) -> float:
    """Per-search feval cap for the strong-Wolfe search started at T."""
    return (
        2.0
        + 2.0 * math.log2(p.L / (p.m * p.c2))
        + max(2.0 + 2.0 * _log_inv_beta(gamma / (p.m * T), p.beta), math.log2(T * p.L / gamma))
    )


def rate_envelope(
    p: TheoryParams,
    mode: str,
    k: int,
    f0_gap: float,
    x0_dist: float | None = None,
    t_min: float | None = None,
) -> float:
    """Upper bound on the optimality gap after k steps.

    Modes:
      ``gradient``      gap * contraction^k for the bracketing search with
                        the true gradient.
      ``fd_gradient``   the two-term minimum for a finite-difference
                        gradient with relative radius sigma_tilde and
                        termination tolerance Delta (both required).
      ``random``        gap * (1 - (beta^2/n)(1 - sqrt(1-m/L)))^k in
                        expectation over uniform random directions.
      ``armijo``        gap * (1 - m t_min)^k for any sufficient-decrease
                        search whose steps stay >= t_min (true gradient).

    ``x0_dist`` (||x0 - x*||) defaults to the strong-convexity bound
    sqrt(2 f0_gap / m).
    """
    if k < 0 or f0_gap < 0:
        raise ValueError("need k >= 0 and f0_gap >= 0")
    r = p.contraction_root
    beta2 = p.beta * p.beta
    if mode == "gradient":
        return f0_gap * (1.0 - beta2 * (1.0 - r)) ** k
    if mode == "random":
        if p.n is None:
            raise ValueError("random mode needs the dimension n")
        return f0_gap * (1.0 - (beta2 / p.n) * (1.0 - r)) ** k
    if mode == "armijo":
        if t_min is None:
            raise ValueError("armijo mode needs t_min")
        return f0_gap * (1.0 - p.m * t_min) ** k
    if mode == "fd_gradient":
        if p.sigma_tilde is None or p.Delta is None:
            raise ValueError("fd_gradient mode needs sigma_tilde and Delta")
        st, D = p.sigma_tilde, p.Delta
        if x0_dist is None:
            x0_dist = math.sqrt(2.0 * f0_gap / p.m)
        shrink = (1.0 - st) / (1.0 + st) ** 2
        denom = (1.0 - st) ** 2 * beta2 * (1.0 - r)
        term1 = f0_gap * (1.0 - beta2 * (1.0 - r) * shrink) ** k + st * (1.0 + st) ** 2 * D * p.L * x0_dist / denom
        term2 = f0_gap * (1.0 - 0.5 * beta2 * (1.0 - r) * shrink) ** k + st**2 * p.m * (1.0 + st) ** 2 * D**2 / denom
        return min(term1, term2)
    raise ValueError(f"unknown rate mode {mode!r}")


# ---------------------------------------------------------------------------
# Executable bound battery (backs the `check-theory` CLI subcommand)
# ---------------------------------------------------------------------------

BOUND_SLACK = 1e-9  # relative slack absorbing floating-point roundoff


def random_quadratic(rng: RngStream, n_max: int = 10, m_range=(0.1, 1.0), L_range=(1.0, 100.0)):
    """Random diagonal SPD quadratic with exactly known extreme eigenvalues."""
    n = 2 + rng.integer(n_max - 1)
    m = m_range[0] + (m_range[1] - m_range[0]) * rng.uniform()
    L = L_range[0] + (L_range[1] - L_range[0]) * rng.uniform()
    if L < m:
        L = m * (1.0 + rng.uniform())
    diag = np.empty(n)
    diag[0] = m
    diag[1] = L
    if n > 2:
        diag[2:] = m + (L - m) * rng.uniform(n - 2)
    return QuadraticProblem.from_diagonal(diag)


def run_theory_checks(seed: int = 20240, trials: int = 200) -> list[tuple[str, bool, str]]:
    """Run every interval/rate/feval bound on random quadratics.

    Returns (name, passed, detail) triples; used by tests and the CLI.
    """
    from aels.directions import FdConfig, fd_directional, fd_gradient
    from aels.linesearch import LineProbe, LineSearchConfig, aels, wolfe_search
    from aels.objectives import Objective

    results = []
    rng = RngStream(seed)
    cfg = LineSearchConfig()

    def record(name, violations, total):
        ok = violations == 0
        results.append((name, ok, f"{violations} violations over {total} cases"))

    # --- step-size intervals (t_a, t*, t_w) and the bracket invariant ---
    viol_ta = viol_tstar = viol_tw = viol_inv = 0
    for trial in range(trials):
        prob = random_quadratic(rng.derive(1000 + trial))
        sub = rng.derive(2000 + trial)
        x = sub.normal(prob.dim)
        g = prob.gradient(x)
        if np.linalg.norm(g) < 1e-10:
            continue
        d = -g
        gamma = float(-(d @ g) / (d @ d))
        params = TheoryParams(m=prob.m, L=prob.L)
        armijo_iv, exact_iv, wolfe_iv = step_size_intervals(params, gamma)
        obj = Objective(prob)

        def h(t, x=x, d=d, prob=prob):
            return prob.value(x + t * d)

        slope = float(d @ g)
        t_a = armijo_boundary_step(h, slope, hint=1.0 / prob.L)
        if not armijo_iv.contains(t_a):
            viol_ta += 1
        t_star = exact_quadratic_step(prob, x, d)
        if not exact_iv.contains(t_star):
            viol_tstar += 1
        probe = LineProbe(obj, x, d, h(0.0), deriv="exact")
        out = wolfe_search(probe, slope, 1.0, cfg)
        if out.abandoned or not wolfe_iv.contains(out.step):
            viol_tw += 1
        probe2 = LineProbe(Objective(prob), x, d, h(0.0))
        out2 = aels(probe2, 3.0 * t_star, cfg)
        lo, hi = cfg.beta**2 * t_star, t_star
        pad = BOUND_SLACK * max(hi, 1.0)
        if out2.abandoned or not (lo - pad <= out2.step <= hi + pad):
            viol_inv += 1
    record("sufficient-decrease boundary interval", viol_ta, trials)
    record("exact-minimizer interval", viol_tstar, trials)
    record("strong-Wolfe step interval", viol_tw, trials)
    record("bracket invariant [beta^2 t*, t*]", viol_inv, trials)

    # --- finite-difference error bounds ---
    viol_grad = viol_dir = 0
    fd_trials = 100
    for trial in range(fd_trials):
        prob = random_quadratic(rng.derive(3000 + trial))
        sub = rng.derive(4000 + trial)
        x = 0.05 * sub.normal(prob.dim)
        sigma = 10.0 ** -(4 + sub.integer(5))
        fdc = FdConfig(sigma=sigma)
        obj = Objective(prob)
        g_hat = fd_gradient(obj, x, fdc)
        err = float(np.linalg.norm(g_hat - prob.gradient(x)))
        bound = prob.L * sigma * math.sqrt(prob.dim) / 2.0
        if err > bound * (1.0 + BOUND_SLACK) + 1e-12 * prob.L:
            viol_grad += 1
        from aels.core import random_unit_vector

        v = random_unit_vector(sub, prob.dim)
        mu = fd_directional(obj, x, v, fdc)
        true_slope = float(v @ prob.gradient(x))
        if abs(mu - true_slope) > prob.L * sigma / 2.0 * (1.0 + BOUND_SLACK) + 1e-12 * prob.L:
            viol_dir += 1
    record("FD gradient error bound (L sigma sqrt(n)/2)", viol_grad, fd_trials)
    record("FD directional error bound (L sigma / 2)", viol_dir, fd_trials)

    # --- per-step rate and feval envelopes over full descents ---
    from aels.driver import StopRule, run_descent

    viol_rate = viol_feval = 0
    rate_trials = 30
    for trial in range(rate_trials):
        prob = random_quadratic(rng.derive(5000 + trial))
        sub = rng.derive(6000 + trial)
        x0 = sub.normal(prob.dim)
        params = TheoryParams(m=prob.m, L=prob.L)
        bounds = complexity_bounds(params)
        stop = StopRule(kind="relative_error", epsilon=1e-10, f_star=prob.min_value(), max_iters=100)
        trace = run_descent(
            Objective(prob), "gradient", "aels", T0=1.0, cfg=cfg, stop=stop, rng=sub, x0=x0
        )
        f_star = prob.min_value()
        gaps = [rec.f for rec in trace.records]
        for a, b in zip(gaps, gaps[1:]):
            ga, gb = a - f_star, b - f_star
            if ga <= 0:
                break
            if gb / ga > bounds.aels_contraction * (1.0 + BOUND_SLACK):
                viol_rate += 1
        first_cap = aels_first_step_evals(params)
        for i, rec in enumerate(trace.records):
            cap = first_cap if i == 0 else bounds.aels_fevals_per_step
            if rec.fevals > cap:
                viol_feval += 1
    record("per-step gap contraction envelope", viol_rate, rate_trials)
    record("per-step probe-count envelope", viol_feval, rate_trials)

    # --- Wolfe per-search feval bound with FD directional derivatives ---
    viol_wb = 0
    wolfe_trials = 100
    for trial in range(wolfe_trials):
        prob = random_quadratic(rng.derive(7000 + trial))
        sub = rng.derive(8000 + trial)
        x = sub.normal(prob.dim)
        g = prob.gradient(x)
        if np.linalg.norm(g) < 1e-10:
            continue
        d = -g
        params = TheoryParams(m=prob.m, L=prob.L)
        obj = Objective(prob)
        probe = LineProbe(obj, x, d, prob.value(x), deriv="fd")
        T = 1.0
        out = wolfe_search(probe, float(d @ g), T, cfg)
        bound = wolfe_feval_bound(params, 1.0, T)
        if out.abandoned or out.probes > bound * (1.0 + BOUND_SLACK):
            viol_wb += 1
    record("Wolfe per-search feval bound", viol_wb, wolfe_trials)

    return results
