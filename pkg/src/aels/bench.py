"""Experiment harness: suite grids, trial records, performance profiles.

Cost is measured in function evaluations (wall time is logged for
information only, since it is machine-dependent).  Profiles follow the
solved-fraction-vs-performance-ratio convention: for each problem the
cost of every algorithm is divided by the best cost on that problem, and
rho_a(tau) is the fraction of problems algorithm a solved within ratio
tau.  Unsolved cells contribute ratio infinity.
"""

from __future__ import annotations

import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from aels.core import RngStream
from aels.driver import StopRule, nelder_mead, run_descent
from aels.linesearch import LineSearchConfig
from aels.mgh import mgh_problem
from aels.objectives import (
    LogisticProblem,
    Objective,
    QuadraticProblem,
    SparseDataset,
    bb_initial_step,
    parse_libsvm,
    sigmoid,
)

RECORD_COLUMNS = (
    "problem",
    "algorithm",
    "seed",
    "t0",
    "batch",
    "fevals",
    "gevals",
    "iters",
    "final_f",
    "converged",
    "reason",
    "wall_ms",
)


@dataclass
class TrialRecord:
    problem: str
    algorithm: str
    seed: int
    t0: float
    batch: int | None
    fevals: int
    gevals: int
    iters: int
    final_f: float
    converged: bool
    reason: str
    wall_ms: float

    def csv_row(self) -> str:
        batch = "" if self.batch is None else str(self.batch)
        return ",".join(
            [
                self.problem,
                self.algorithm,
                str(self.seed),
                repr(self.t0),
                batch,
                str(self.fevals),
                str(self.gevals),
                str(self.iters),
                repr(self.final_f),
                "true" if self.converged else "false",
                self.reason,
                repr(self.wall_ms),
            ]
        )


@dataclass
class ProfileCurve:
    """Monotone step function rho(tau) over a problem suite."""

    algorithm: str
    breakpoints: list  # sorted (tau, rho) pairs
    n_problems: int = 0

    def value_at(self, tau: float) -> float:
        rho = 0.0
        for t, r in self.breakpoints:
            if t <= tau:
                rho = r
            else:
                break
        return rho


def mw_convergence_test(f_current: float, f0: float, f_L: float, tau: float) -> bool:
    """Solved test: f <= f_L + tau (f0 - f_L), given the best-known f_L."""
    if f0 < f_L:
        raise ValueError("f0 must be >= f_L")
    if tau <= 0:
        raise ValueError("tau must be positive")
    return f_current <= f_L + tau * (f0 - f_L)


def _fnv1a(s: str) -> int:
    h = 0xCBF29CE484222325
    for b in s.encode():
        h ^= b
        h = (h * 0x100000001B3) % (1 << 64)
    return h


def make_synthetic_logistic(N: int, n: int, seed: int, lam: float | None = None) -> LogisticProblem:
    """Well-conditioned random logistic instance, bit-reproducible by seed.

    Covariates are N(0, 1/n) with an appended bias column; labels are
    drawn from the model at a moderate true weight vector, so the
    optimum is finite and the data term dominates the curvature.
    """
    rng = RngStream(seed, key=_fnv1a("synthetic-logistic"))
    Z = rng.normal(N * n).reshape(N, n) / math.sqrt(n)
    w_true = 2.0 * rng.normal(n)
    margins = Z @ w_true
    labels = np.where(rng.uniform(N) < sigmoid(margins), 1.0, -1.0)
    dense = np.hstack([Z, np.ones((N, 1))])
    indptr = np.arange(N + 1) * (n + 1)
    indices = np.tile(np.arange(n + 1), N)
    dataset = SparseDataset(indptr, indices, dense.ravel(), labels, n + 1)
    dataset._dense = dense
    return LogisticProblem(dataset, lam)


def build_problem(spec: str):
    """Instantiate a problem from a spec string.

    Grammar: ``quad:d1,d2,...`` (diagonal quadratic), ``mgh:<name>``,
    ``synthlog:N,n,seed[,lam]`` and ``logistic:<path>`` (LIBSVM file,
    resolved against $AELS_DATA_DIR when relative).
    """
    kind, _, rest = spec.partition(":")
    if kind == "quad":
        diag = [float(v) for v in rest.split(",") if v]
        return QuadraticProblem.from_diagonal(diag)
    if kind == "mgh":
        return mgh_problem(rest)
    if kind == "synthlog":
        parts = rest.split(",")
        N, n, seed = int(parts[0]), int(parts[1]), int(parts[2])
        lam = float(parts[3]) if len(parts) > 3 else None
        return make_synthetic_logistic(N, n, seed, lam)
    if kind == "logistic":
        path = rest
        if not os.path.isabs(path):
            path = os.path.join(os.environ.get("AELS_DATA_DIR", "."), path)
        with open(path, "rb") as fh:
            return LogisticProblem(parse_libsvm(fh.read()))
    raise ValueError(f"unknown problem spec {spec!r}")


def default_start(problem) -> np.ndarray:
    if hasattr(problem, "start_point"):
        return problem.start_point()
    return np.zeros(problem.dim)


def base_step(problem) -> float:
    """Reference initial step: curvature probe when a gradient exists, else 1.

    Estimated once per problem at the standard start on the full data,
    outside any trial's ledger.
    """
    if not hasattr(problem, "gradient"):
        return 1.0
    t, fallback = bb_initial_step(Objective(problem), default_start(problem))
    return 1.0 if fallback else t


@dataclass
class SuiteConfig:
    problems: list
    algorithms: list  # "direction:search" strings, or "nelder_mead"
    t0_multipliers: tuple = (0.01, 0.1, 1.0, 10.0, 100.0)
    seeds: tuple = tuple(range(10))
    batch_sizes: tuple | None = None
    stop: dict = field(default_factory=dict)  # StopRule kwargs; f_star may be per-problem
    f_star: dict = field(default_factory=dict)  # problem spec -> known optimum
    line_search: dict = field(default_factory=dict)
    parallelism: int = 1

    def __post_init__(self):
        if not self.problems or not self.algorithms:
            raise ValueError("suite needs at least one problem and one algorithm")


def _trial_stream(seed: int, problem: str, algorithm: str, t0_mult: float, batch) -> RngStream:
    ident = f"{problem}|{algorithm}|{t0_mult!r}|{batch}"
    return RngStream(seed, key=_fnv1a(ident))


def run_trial(
    problem_spec: str,
    algorithm: str,
    seed: int,
    t0_mult: float,
    batch: int | None,
    stop_kwargs: dict,
    f_star: float | None = None,
    line_search_kwargs: dict | None = None,
    problem=None,
    t_base: float | None = None,
) -> TrialRecord:
    """Run one isolated trial and summarize it as a record."""
    if problem is None:
        problem = build_problem(problem_spec)
    if t_base is None:
        t_base = base_step(problem)
    T0 = t0_mult * t_base
    rng = _trial_stream(seed, problem_spec, algorithm, t0_mult, batch)
    stop_kwargs = dict(stop_kwargs)
    if f_star is not None:
        stop_kwargs.setdefault("f_star", f_star)
    stop = StopRule(**stop_kwargs)
    cfg = LineSearchConfig(**(line_search_kwargs or {}))
    obj = Objective(problem)
    x0 = default_start(problem)
    started = time.perf_counter()
    if algorithm == "nelder_mead":
        trace = nelder_mead(obj, x0, stop)
    else:
        direction, _, search = algorithm.partition(":")
        trace = run_descent(
            obj, direction, search, T0=T0, cfg=cfg, stop=stop, rng=rng, x0=x0, batch_size=batch
        )
    wall_ms = 1000.0 * (time.perf_counter() - started)
    record = TrialRecord(
        problem=problem_spec,
        algorithm=algorithm,
        seed=seed,
        t0=T0,
        batch=batch,
        fevals=trace.fevals,
        gevals=trace.gevals,
        iters=trace.iterations,
        final_f=trace.f,
        converged=trace.converged,
        reason=trace.reason,
        wall_ms=wall_ms,
    )
    record._trace = trace  # kept for in-process audits; not serialized
    return record


def _grid(cfg: SuiteConfig):
    batches = cfg.batch_sizes if cfg.batch_sizes is not None else (None,)
    idx = 0
    for problem in cfg.problems:
        for algorithm in cfg.algorithms:
            for mult in cfg.t0_multipliers:
                for batch in batches:
                    for seed in cfg.seeds:
                        yield idx, (problem, algorithm, seed, mult, batch)
                        idx += 1


def _run_indexed(args):
    idx, (problem, algorithm, seed, mult, batch), stop_kwargs, f_star, ls_kwargs = args
    rec = run_trial(problem, algorithm, seed, mult, batch, stop_kwargs, f_star, ls_kwargs)
    rec._trace = None  # traces do not cross process boundaries
    return idx, rec


def run_suite(cfg: SuiteConfig, journal_path: str | None = None) -> list[TrialRecord]:
    """Run the full Cartesian grid; records come back in grid order.

    Every trial owns a private ledger and a stream derived from its seed
    and identity, so results are independent of execution order and of
    ``cfg.parallelism``.  When ``journal_path`` is set, rows are appended
    as trials complete (completion order).
    """
    # fail fast on unresolvable problems/algorithms before any trial runs
    prepared = {spec: build_problem(spec) for spec in cfg.problems}
    bases = {spec: base_step(prob) for spec, prob in prepared.items()}
    for algorithm in cfg.algorithms:
        if algorithm != "nelder_mead":
            direction, _, search = algorithm.partition(":")
            from aels.driver import DIRECTION_KINDS, SEARCH_KINDS

            if direction not in DIRECTION_KINDS or search not in SEARCH_KINDS:
                raise ValueError(f"unknown algorithm id {algorithm!r}")

    tasks = list(_grid(cfg))
    journal = open(journal_path, "a") if journal_path else None
    results: dict[int, TrialRecord] = {}
    try:
        if cfg.parallelism > 1:
            payload = [(i, t, cfg.stop, cfg.f_star.get(t[0]), cfg.line_search) for i, t in tasks]
            with ProcessPoolExecutor(max_workers=cfg.parallelism) as pool:
                for idx, rec in pool.map(_run_indexed, payload):
                    results[idx] = rec
                    if journal:
                        journal.write(rec.csv_row() + "\n")
        else:
            for idx, (problem, algorithm, seed, mult, batch) in tasks:
                rec = run_trial(
                    problem,
                    algorithm,
                    seed,
                    mult,
                    batch,
                    cfg.stop,
                    cfg.f_star.get(problem),
                    cfg.line_search,
                    problem=prepared[problem],
                    t_base=bases[problem],
                )
                results[idx] = rec
                if journal:
                    journal.write(rec.csv_row() + "\n")
    finally:
        if journal:
            journal.close()
    return [results[i] for i in sorted(results)]


def performance_profile(
    records: list[TrialRecord],
    cost_metric: str = "fevals",
    per_problem_key=None,
) -> list[ProfileCurve]:
    """Solved-fraction curves over performance ratios.

    An algorithm unit is (algorithm, t0); a problem is identified by
    ``per_problem_key`` (default: the problem spec, plus the batch size
    when batches vary).  Multi-seed cells aggregate by the median cost
    over converged seeds and count as unsolved when a majority of seeds
    failed.
    """
    if not records:
        raise ValueError("no records to profile")
    if cost_metric not in ("fevals", "wall_ms"):
        raise ValueError("cost_metric must be 'fevals' or 'wall_ms'")
    batches = {r.batch for r in records}
    if per_problem_key is None:
        if len(batches) > 1:
            per_problem_key = lambda r: f"{r.problem}|B={r.batch}"
        else:
            per_problem_key = lambda r: r.problem
    t0s_by_algo: dict[str, set] = {}
    for r in records:
        t0s_by_algo.setdefault(r.algorithm, set()).add(r.t0)

    def algo_label(r: TrialRecord) -> str:
        if len(t0s_by_algo[r.algorithm]) > 1:
            return f"{r.algorithm}@{r.t0:g}"
        return r.algorithm

    cells: dict[tuple[str, str], list[TrialRecord]] = {}
    problems, algos = [], []
    for r in records:
        p, a = per_problem_key(r), algo_label(r)
        if p not in problems:
            problems.append(p)
        if a not in algos:
            algos.append(a)
        cells.setdefault((p, a), []).append(r)

    cost: dict[tuple[str, str], float] = {}
    for (p, a), recs in cells.items():
        solved = [getattr(r, cost_metric) for r in recs if r.converged]
        if not solved or 2 * len(solved) < len(recs):
            cost[(p, a)] = math.inf
        else:
            cost[(p, a)] = float(np.median(solved))

    ratios: dict[str, list[float]] = {a: [] for a in algos}
    for p in problems:
        best = min(cost.get((p, a), math.inf) for a in algos)
        for a in algos:
            c = cost.get((p, a), math.inf)
            if best == math.inf or c == math.inf:
                ratios[a].append(math.inf)
            else:
                ratios[a].append(c / best)

    curves = []
    n = len(problems)
    for a in algos:
        finite = sorted(r for r in ratios[a] if r != math.inf)
        points = []
        for tau in sorted(set(finite)):
            rho = sum(1 for r in finite if r <= tau) / n
            points.append((tau, rho))
        curves.append(ProfileCurve(algorithm=a, breakpoints=points, n_problems=n))
    return curves


def dfo_benchmark(
    problem_names: list[str],
    algorithms: list[str],
    budget: int = 1300,
    tau: float = 1e-5,
    T0: float = 1.0,
    seed: int = 0,
) -> tuple[list[TrialRecord], list[ProfileCurve]]:
    """Budgeted derivative-free comparison with the best-known-value test.

    Every algorithm runs once per problem under a pure feval budget; the
    target f_L for each problem is the best value any contender reached,
    and a run counts as solved at the first iteration whose value passes
    :func:`mw_convergence_test`, at the cost in fevals accumulated by
    then.  Unsolved runs keep their total cost and converged=False.
    """
    traces = {}
    for name in problem_names:
        problem = mgh_problem(name)
        x0 = problem.start_point()
        for algorithm in algorithms:
            obj = Objective(problem)
            stop = StopRule(kind="budget_only", max_fevals=budget, max_iters=50 * budget)
            rng = _trial_stream(seed, f"mgh:{name}", algorithm, 1.0, None)
            started = time.perf_counter()
            if algorithm == "nelder_mead":
                trace = nelder_mead(obj, x0, stop)
            else:
                direction, _, search = algorithm.partition(":")
                trace = run_descent(obj, direction, search, T0=T0, stop=stop, rng=rng, x0=x0)
            traces[(name, algorithm)] = (trace, 1000.0 * (time.perf_counter() - started))

    records = []
    for name in problem_names:
        f0 = mgh_problem(name).value(mgh_problem(name).start_point())
        f_L = min(
            min((rec.f for rec in traces[(name, a)][0].records), default=f0) for a in algorithms
        )
        f_L = min(f_L, f0)
        for a in algorithms:
            trace, wall = traces[(name, a)]
            crossing = None
            for cum, f in trace.feval_curve():
                if cum > budget:
                    break
                if mw_convergence_test(f, f0, f_L, tau):
                    crossing = cum
                    break
            records.append(
                TrialRecord(
                    problem=f"mgh:{name}",
                    algorithm=a,
                    seed=seed,
                    t0=T0,
                    batch=None,
                    fevals=crossing if crossing is not None else trace.fevals,
                    gevals=trace.gevals,
                    iters=trace.iterations,
                    final_f=trace.f,
                    converged=crossing is not None,
                    reason="converged" if crossing is not None else trace.reason,
                    wall_ms=wall,
                )
            )
    return records, performance_profile(records, "fevals")


def _slug(label: str) -> str:
    return "".join(c if c.isalnum() or c in "-_." else "_" for c in label)


def emit_outputs(records: list[TrialRecord], curves: list[ProfileCurve], out_dir: str) -> list[str]:
    """Write records.csv plus per-curve breakpoint CSVs and SVG plots."""
    os.makedirs(out_dir, exist_ok=True)
    written = []
    records_path = os.path.join(out_dir, "records.csv")
    with open(records_path, "w") as fh:
        fh.write(",".join(RECORD_COLUMNS) + "\n")
        for rec in records:
            fh.write(rec.csv_row() + "\n")
    written.append(records_path)

    for curve in curves:
        slug = _slug(curve.algorithm)
        csv_path = os.path.join(out_dir, f"profile_{slug}.csv")
        with open(csv_path, "w") as fh:
            fh.write("tau,rho\n")
            for tau, rho in curve.breakpoints:
                fh.write(f"{tau!r},{rho!r}\n")
        written.append(csv_path)
        written.append(_plot_curve(curve, os.path.join(out_dir, f"profile_{slug}.svg")))
    return written


def _plot_curve(curve: ProfileCurve, path: str) -> str:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(5, 3.5))
    if curve.breakpoints:
        taus = [t for t, _ in curve.breakpoints]
        rhos = [r for _, r in curve.breakpoints]
        taus.append(max(taus) * 2)
        rhos.append(rhos[-1])
        ax.step(taus, rhos, where="post")
        ax.set_xscale("log", base=2)
    ax.set_xlabel("performance ratio")
    ax.set_ylabel("fraction of problems solved")
    ax.set_ylim(0.0, 1.05)
    ax.set_title(curve.algorithm)
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)
    return path
