"""Command-line entry points.

Subcommands:
  run           one trial, prints its record line
  suite         a full grid (or budgeted DFO comparison) from a JSON config
  profile       performance profiles + plots from a records CSV
  check-theory  run the analytic bound battery and report per-bound verdicts
"""

from __future__ import annotations

import argparse
import json
import sys

from aels.bench import (
    RECORD_COLUMNS,
    SuiteConfig,
    TrialRecord,
    dfo_benchmark,
    emit_outputs,
    performance_profile,
    run_suite,
    run_trial,
)


def _cmd_run(args):
    stop_kwargs = {"kind": args.stop, "epsilon": args.eps, "max_iters": args.max_iters}
    if args.max_fevals is not None:
        stop_kwargs["max_fevals"] = args.max_fevals
    if args.f_star is not None:
        stop_kwargs["f_star"] = args.f_star
    rec = run_trial(
        args.problem,
        args.algo,
        seed=args.seed,
        t0_mult=args.t0,
        batch=args.batch,
        stop_kwargs=stop_kwargs,
    )
    print(",".join(RECORD_COLUMNS))
    print(rec.csv_row())
    return 0


def _cmd_suite(args):
    with open(args.config) as fh:
        config = json.load(fh)
    if config.get("mode") == "dfo":
        records, curves = dfo_benchmark(
            config["problems"],
            config["algorithms"],
            budget=config.get("budget", 1300),
            tau=config.get("tau", 1e-5),
            T0=config.get("t0", 1.0),
            seed=config.get("seed", 0),
        )
    else:
        cfg = SuiteConfig(
            problems=config["problems"],
            algorithms=config["algorithms"],
            t0_multipliers=tuple(config.get("t0_multipliers", (0.01, 0.1, 1.0, 10.0, 100.0))),
            seeds=tuple(config.get("seeds", range(10))),
            batch_sizes=tuple(config["batch_sizes"]) if config.get("batch_sizes") else None,
            stop=config.get("stop", {}),
            f_star={k: float(v) for k, v in config.get("f_star", {}).items()},
            line_search=config.get("line_search", {}),
            parallelism=config.get("parallelism", 1),
        )
        records = run_suite(cfg, journal_path=args.journal)
        curves = performance_profile(records, args.metric)
    written = emit_outputs(records, curves, args.out)
    for path in written:
        print(path)
    return 0


def _parse_records_csv(path):
    records = []
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        if tuple(header) != RECORD_COLUMNS:
            raise ValueError(f"unexpected records header in {path}")
        for line in fh:
            line = line.strip()
            if not line:
                continue
            vals = line.split(",")
            row = dict(zip(RECORD_COLUMNS, vals))
            records.append(
                TrialRecord(
                    problem=row["problem"],
                    algorithm=row["algorithm"],
                    seed=int(row["seed"]),
                    t0=float(row["t0"]),
                    batch=int(row["batch"]) if row["batch"] else None,
                    fevals=int(row["fevals"]),
                    gevals=int(row["gevals"]),
                    iters=int(row["iters"]),
                    final_f=float(row["final_f"]),
                    converged=row["converged"] == "true",
                    reason=row["reason"],
                    wall_ms=float(row["wall_ms"]),
                )
            )
    return records


def _cmd_profile(args):
    records = _parse_records_csv(args.records)
    curves = performance_profile(records, args.metric)
    for path in emit_outputs(records, curves, args.out):
        print(path)
    return 0


def _cmd_check_theory(args):
    from aels.theory import run_theory_checks

    results = run_theory_checks(seed=args.seed, trials=args.trials)
    failures = 0
    for name, ok, detail in results:
        print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
        failures += 0 if ok else 1
    return 1 if failures else 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="aels", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one trial")
    p_run.add_argument("--problem", required=True, help="e.g. quad:1,4 | mgh:rosenbrock | synthlog:2000,20,0 | logistic:adult")
    p_run.add_argument("--algo", required=True, help="direction:search (e.g. gradient:aels) or nelder_mead")
    p_run.add_argument("--t0", type=float, default=1.0, help="multiplier on the problem's reference initial step")
    p_run.add_argument("--batch", type=int, default=None, help="minibatch size (stochastic runs)")
    p_run.add_argument("--seed", type=int, default=0)
    p_run.add_argument("--eps", type=float, default=1e-4)
    p_run.add_argument("--stop", default="budget_only", choices=["relative_error", "mw_test", "grad_norm", "budget_only"])
    p_run.add_argument("--f-star", type=float, default=None, dest="f_star")
    p_run.add_argument("--max-fevals", type=int, default=None, dest="max_fevals")
    p_run.add_argument("--max-iters", type=int, default=10_000, dest="max_iters")
    p_run.set_defaults(func=_cmd_run)

    p_suite = sub.add_parser("suite", help="run a grid from a JSON config")
    p_suite.add_argument("--config", required=True)
    p_suite.add_argument("--out", default="out")
    p_suite.add_argument("--metric", default="fevals", choices=["fevals", "wall_ms"])
    p_suite.add_argument("--journal", default=None, help="append records here as trials complete")
    p_suite.set_defaults(func=_cmd_suite)

    p_prof = sub.add_parser("profile", help="profiles from a records CSV")
    p_prof.add_argument("--records", required=True)
    p_prof.add_argument("--metric", default="fevals", choices=["fevals", "wall_ms"])
    p_prof.add_argument("--out", default="out")
    p_prof.set_defaults(func=_cmd_profile)

    p_check = sub.add_parser("check-theory", help="run the analytic bound battery")
    p_check.add_argument("--seed", type=int, default=20240)
    p_check.add_argument("--trials", type=int, default=200)
    p_check.set_defaults(func=_cmd_check_theory)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
