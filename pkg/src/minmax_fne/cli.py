"""Command-line harness: schedules, solves, invariant checks, benchmarks.

Subcommands
-----------
schedule
    Resolve a problem from the config, derive the full solver schedule for
    the requested accuracies, and print it as JSON (budget included).
solve
    Run the outer solver and persist ``trace.csv`` and ``summary.json``
    into the output directory. The trace is bit-reproducible for a fixed
    (problem, seed, accuracy) triple; wall time lives only in the summary.
check
    Run the fast invariant suite; lists every failure and exits 1 if any.
bench
    Sweep problems x accuracy pairs from the config and write one
    aggregate ``bench.csv`` with counters and iteration-budget factors.
plot
    Render measure and step-size decay curves from an existing trace CSV.

Configuration is a JSON object; command-line flags override config values:

.. code-block:: json

    {
      "problem": {"name": "strongly-concave-toy", "seed": 7,
                  "dims": {"d": 5}},
      "eps_x": 0.01, "eps_y": 0.01,
      "mode": "strongly-concave", "termination": "adaptive",
      "select": "step", "out": "runs/toy",
      "overrides": {"Tbar_x": 200},
      "bench": {"problems": [{"name": "quad-bilinear"}],
                "eps": [[0.1, 0.05], [0.05, 0.05]]}
    }

``overrides`` may only tighten the schedule (raise iteration counts).
Exit codes: 0 success, 1 invariant-check failures, 2 malformed
configuration or usage, 3 oracle-call budget exceeded. The environment
variable ``MINMAX_FNE_LOG`` (error, info, debug) sets the log level.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from .problems import FAMILIES, ProblemInstance, build_problem
from .saddle import (MODES, SELECT_RULES, TERMINATIONS, ScheduleBudgetError,
                     SolverSchedule, SolveTrace, complexity_factors,
                     compute_schedule, fne_search, tighten_schedule)

logger = logging.getLogger("minmax_fne")

TRACE_COLUMNS = ("outer_t", "step_norm", "S_x", "S_y", "W_x", "W_y",
                 "grad_calls_cum", "proj_calls_cum")
BENCH_COLUMNS = ("problem", "seed", "eps_x", "eps_y", "mode", "termination",
                 "status", "tau", "S_x_final", "S_y_final", "grad_calls",
                 "proj_calls", "budget", "wall_seconds", "primal_factor",
                 "dual_factor")
_CONFIG_KEYS = frozenset({"problem", "eps_x", "eps_y", "mode", "termination",
                          "select", "out", "overrides", "lambda_y", "bench"})
_LOG_LEVELS = {"error": logging.ERROR, "info": logging.INFO,
               "debug": logging.DEBUG}


class ConfigError(ValueError):
    """Raised for malformed or inconsistent run configuration."""


@dataclass
class RunConfig:
    """Merged view of config file and command-line flags."""

    problem: Optional[Dict] = None
    eps_x: Optional[float] = None
    eps_y: Optional[float] = None
    mode: Optional[str] = None
    termination: str = "adaptive"
    select: str = "step"
    out: str = "."
    overrides: Dict[str, int] = field(default_factory=dict)
    lambda_y: Optional[float] = None
    bench: Optional[Dict] = None


def _init_logging() -> None:
    level = _LOG_LEVELS.get(os.environ.get("MINMAX_FNE_LOG", "").lower(),
                            logging.WARNING)
    if not logger.handlers:
        handler = logging.StreamHandler(sys.stderr)
        handler.setFormatter(
            logging.Formatter("%(levelname)s %(name)s: %(message)s"))
        logger.addHandler(handler)
    logger.setLevel(level)


def _load_config(path: str) -> Dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"config {path} is not valid JSON "
            f"(line {exc.lineno}, column {exc.colno}: {exc.msg})") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"config {path} must hold a JSON object")
    unknown = sorted(set(raw) - _CONFIG_KEYS)
    if unknown:
        raise ConfigError(
            f"unknown config keys {unknown}; allowed keys are "
            f"{sorted(_CONFIG_KEYS)}")
    return raw


def _normalize_problem(entry, where: str = "problem") -> Dict:
    if isinstance(entry, str):
        entry = {"name": entry}
    if not isinstance(entry, dict):
        raise ConfigError(f"{where} must be a name or an object "
                          "{name, seed, dims}")
    unknown = sorted(set(entry) - {"name", "seed", "dims"})
    if unknown:
        raise ConfigError(f"{where} has unknown keys {unknown}")
    name = entry.get("name")
    if name not in FAMILIES:
        raise ConfigError(f"{where}.name must be one of {list(FAMILIES)}, "
                          f"got {name!r}")
    seed = entry.get("seed", 0)
    if not isinstance(seed, int) or seed < 0:
        raise ConfigError(f"{where}.seed must be a nonnegative integer")
    dims = entry.get("dims", {})
    if not isinstance(dims, dict):
        raise ConfigError(f"{where}.dims must be an object")
    return {"name": name, "seed": seed, "dims": dims}


def _positive(value, key: str) -> float:
    if not isinstance(value, (int, float)) or isinstance(value, bool) \
            or not value > 0.0:
        raise ConfigError(f"{key} must be a positive number, got {value!r}")
    return float(value)


def _choice(value, key: str, allowed: Sequence[str]) -> str:
    if value not in allowed:
        raise ConfigError(f"{key} must be one of {list(allowed)}, "
                          f"got {value!r}")
    return value


def _merge_config(args: argparse.Namespace) -> RunConfig:
    raw = _load_config(args.config) if args.config else {}
    cfg = RunConfig()
    if "problem" in raw:
        cfg.problem = _normalize_problem(raw["problem"])
    if "eps_x" in raw:
        cfg.eps_x = _positive(raw["eps_x"], "eps_x")
    if "eps_y" in raw:
        cfg.eps_y = _positive(raw["eps_y"], "eps_y")
    if "mode" in raw:
        cfg.mode = _choice(raw["mode"], "mode", MODES)
    if "termination" in raw:
        cfg.termination = _choice(raw["termination"], "termination",
                                  TERMINATIONS)
    if "select" in raw:
        cfg.select = _choice(raw["select"], "select", SELECT_RULES)
    if "out" in raw:
        if not isinstance(raw["out"], str):
            raise ConfigError("out must be a path string")
        cfg.out = raw["out"]
    if "overrides" in raw:
        if not isinstance(raw["overrides"], dict):
            raise ConfigError("overrides must be an object of integers")
        cfg.overrides = raw["overrides"]
    if "lambda_y" in raw:
        cfg.lambda_y = _positive(raw["lambda_y"], "lambda_y")
    if "bench" in raw:
        cfg.bench = raw["bench"]

    # flags override config
    if args.eps_x is not None:
        cfg.eps_x = _positive(args.eps_x, "--eps-x")
    if args.eps_y is not None:
        cfg.eps_y = _positive(args.eps_y, "--eps-y")
    if args.mode is not None:
        cfg.mode = args.mode
    if args.termination is not None:
        cfg.termination = args.termination
    if args.select is not None:
        cfg.select = args.select
    if args.out is not None:
        cfg.out = args.out
    if args.seed is not None:
        if cfg.problem is None:
            raise ConfigError("--seed given but no problem is configured")
        cfg.problem["seed"] = args.seed
    return cfg


def _require_instance(cfg: RunConfig) -> ProblemInstance:
    if cfg.problem is None:
        raise ConfigError("a problem must be configured (config key "
                          "\"problem\": name or {name, seed, dims})")
    return build_problem(cfg.problem["name"], seed=cfg.problem["seed"],
                         dims=cfg.problem["dims"])


def _require_eps(cfg: RunConfig) -> Tuple[float, float]:
    if cfg.eps_x is None or cfg.eps_y is None:
        raise ConfigError("target accuracies are required (config keys "
                          "eps_x/eps_y or flags --eps-x/--eps-y)")
    return cfg.eps_x, cfg.eps_y


def _resolve_mode(cfg: RunConfig, inst: ProblemInstance
                  ) -> Tuple[str, Optional[float]]:
    mode = cfg.mode
    if mode is None:
        mode = ("strongly-concave" if inst.strong_concavity is not None
                else "concave")
    lam = cfg.lambda_y if cfg.lambda_y is not None else inst.strong_concavity
    if mode == "strongly-concave" and lam is None:
        raise ConfigError("strongly-concave mode needs a concavity modulus "
                          "(config key lambda_y) for this problem")
    if mode == "concave":
        lam = None
    return mode, lam


def _build_schedule(cfg: RunConfig, inst: ProblemInstance
                    ) -> Tuple[SolverSchedule, str, Optional[float]]:
    eps_x, eps_y = _require_eps(cfg)
    mode, lam = _resolve_mode(cfg, inst)
    sched = compute_schedule(inst.spec, eps_x, eps_y, mode=mode,
                             lambda_y=lam)
    if cfg.overrides:
        try:
            sched = tighten_schedule(sched, **cfg.overrides)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad schedule overrides: {exc}") from exc
    return sched, mode, lam


def _schedule_json(sched: SolverSchedule, inst: ProblemInstance) -> Dict:
    primal, dual = complexity_factors(inst.spec, sched.eps_x, sched.eps_y)
    out = {k: getattr(sched, k) for k in (
        "mode", "eps_x", "eps_y", "lambda_y", "reg_lambda", "delta",
        "gamma_x", "gamma_y", "Tbar_x", "Tbar_y", "S_y", "T_o", "S_o",
        "Theta", "Theta_plus", "budget", "budget_product")}
    out["problem"] = inst.name
    out["seed"] = inst.seed
    out["primal_factor"] = primal
    out["dual_factor"] = dual
    return out


def _write_trace(path: str, trace: SolveTrace) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(TRACE_COLUMNS)
        for row in trace.rows:
            writer.writerow([
                row.outer_t, repr(row.step_norm), repr(row.S_x),
                repr(row.S_y), repr(row.W_x), repr(row.W_y),
                row.grad_calls_cum, row.proj_calls_cum])


def _summary_dict(trace: SolveTrace, wall: float) -> Dict:
    return {
        "status": trace.status,
        "tau": trace.tau,
        "S_x_final": trace.S_x_final,
        "S_y_final": trace.S_y_final,
        "grad_calls": trace.grad_calls,
        "proj_calls": trace.proj_calls,
        "budget": trace.budget,
        "wall_seconds": wall,
    }


def _write_json(path: str, payload: Dict) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


# ----------------- subcommands -----------------

def _cmd_schedule(args: argparse.Namespace) -> int:
    cfg = _merge_config(args)
    inst = _require_instance(cfg)
    sched, _, _ = _build_schedule(cfg, inst)
    print(json.dumps(_schedule_json(sched, inst), indent=2))
    return 0


def _cmd_solve(args: argparse.Namespace) -> int:
    cfg = _merge_config(args)
    inst = _require_instance(cfg)
    sched, mode, lam = _build_schedule(cfg, inst)
    start = time.perf_counter()
    _, _, trace = fne_search(inst.spec, sched.eps_x, sched.eps_y, mode=mode,
                             termination=cfg.termination, lambda_y=lam,
                             select=cfg.select, schedule=sched)
    wall = time.perf_counter() - start
    os.makedirs(cfg.out, exist_ok=True)
    trace_path = os.path.join(cfg.out, "trace.csv")
    summary_path = os.path.join(cfg.out, "summary.json")
    _write_trace(trace_path, trace)
    summary = _summary_dict(trace, wall)
    _write_json(summary_path, summary)
    print(json.dumps(summary, indent=2))
    logger.info("solve: wrote %s and %s", trace_path, summary_path)
    return 3 if trace.status == "budget-exceeded" else 0


def _cmd_check(args: argparse.Namespace) -> int:
    del args
    from .selfcheck import run_all
    failures = run_all()
    if failures:
        for msg in failures:
            print(f"FAIL {msg}")
        print(f"{len(failures)} invariant check(s) failed")
        return 1
    print("ok: all invariant checks passed")
    return 0


def _cmd_bench(args: argparse.Namespace) -> int:
    cfg = _merge_config(args)
    if not isinstance(cfg.bench, dict):
        raise ConfigError("bench needs a config object under key \"bench\" "
                          "with \"problems\" and \"eps\" lists")
    problems = cfg.bench.get("problems")
    eps_pairs = cfg.bench.get("eps")
    if not isinstance(problems, list) or not problems:
        raise ConfigError("bench.problems must be a nonempty list")
    if not isinstance(eps_pairs, list) or not eps_pairs:
        raise ConfigError("bench.eps must be a nonempty list of "
                          "[eps_x, eps_y] pairs")
    entries = [_normalize_problem(p, where=f"bench.problems[{i}]")
               for i, p in enumerate(problems)]
    pairs = []
    for i, pair in enumerate(eps_pairs):
        if (not isinstance(pair, list)) or len(pair) != 2:
            raise ConfigError(f"bench.eps[{i}] must be [eps_x, eps_y]")
        pairs.append((_positive(pair[0], f"bench.eps[{i}][0]"),
                      _positive(pair[1], f"bench.eps[{i}][1]")))

    os.makedirs(cfg.out, exist_ok=True)
    out_path = os.path.join(cfg.out, "bench.csv")
    rows: List[List] = []
    for entry in entries:
        inst = build_problem(entry["name"], seed=entry["seed"],
                             dims=entry["dims"])
        for eps_x, eps_y in pairs:
            sub = RunConfig(problem=entry, eps_x=eps_x, eps_y=eps_y,
                            mode=cfg.mode, termination=cfg.termination,
                            select=cfg.select, overrides=cfg.overrides,
                            lambda_y=cfg.lambda_y)
            mode, lam = _resolve_mode(sub, inst)
            primal, dual = complexity_factors(inst.spec, eps_x, eps_y)
            base = [inst.name, inst.seed, repr(eps_x), repr(eps_y), mode,
                    cfg.termination]
            try:
                sched, mode, lam = _build_schedule(sub, inst)
            except ScheduleBudgetError as exc:
                logger.warning("bench: %s at (%g, %g) over the call cap "
                               "(%d)", inst.name, eps_x, eps_y, exc.budget)
                rows.append(base + ["over-cap", 0, "", "", 0, 0,
                                    exc.budget, "", repr(primal),
                                    repr(dual)])
                continue
            start = time.perf_counter()
            _, _, trace = fne_search(inst.spec, eps_x, eps_y, mode=mode,
                                     termination=cfg.termination,
                                     lambda_y=lam, select=cfg.select,
                                     schedule=sched)
            wall = time.perf_counter() - start
            rows.append(base + [trace.status, trace.tau,
                                repr(trace.S_x_final),
                                repr(trace.S_y_final), trace.grad_calls,
                                trace.proj_calls, trace.budget, repr(wall),
                                repr(primal), repr(dual)])
            logger.info("bench: %s eps=(%g, %g) status=%s grad=%d "
                        "wall=%.2fs", inst.name, eps_x, eps_y, trace.status,
                        trace.grad_calls, wall)
    with open(out_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(BENCH_COLUMNS)
        writer.writerows(rows)
    print(f"wrote {out_path} ({len(rows)} runs)")
    return 0


def _cmd_plot(args: argparse.Namespace) -> int:
    cfg = _merge_config(args)
    trace_path = args.trace or os.path.join(cfg.out, "trace.csv")
    if not os.path.exists(trace_path):
        raise ConfigError(f"trace file {trace_path} does not exist")
    with open(trace_path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None \
                or tuple(reader.fieldnames) != TRACE_COLUMNS:
            raise ConfigError(f"{trace_path} does not look like a solver "
                              f"trace (columns {reader.fieldnames})")
        data = {k: [] for k in TRACE_COLUMNS}
        for rec in reader:
            for k in TRACE_COLUMNS:
                data[k].append(float(rec[k]))
    if not data["outer_t"]:
        raise ConfigError(f"{trace_path} holds no iterations")

    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    os.makedirs(cfg.out, exist_ok=True)
    t = data["outer_t"]
    # a run that converges immediately logs only zeros, which a log axis
    # cannot display
    measures = ("S_x", "W_x", "S_y", "W_y")
    log_ok = any(v > 0.0 for key in measures for v in data[key])
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for key, style in (("S_x", "-"), ("W_x", "--"), ("S_y", "-"),
                       ("W_y", "--")):
        ax.plot(t, data[key], style, label=key)
    if log_ok:
        ax.set_yscale("log")
    ax.set_xlabel("outer iteration")
    ax.set_ylabel("stationarity measure")
    ax.legend()
    ax.grid(True, which="both", alpha=0.3)
    measures_path = os.path.join(cfg.out, "measures.png")
    fig.savefig(measures_path, dpi=150, bbox_inches="tight")
    plt.close(fig)

    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.plot(t, data["step_norm"], "-o", markersize=3)
    if any(v > 0.0 for v in data["step_norm"]):
        ax.set_yscale("log")
    ax.set_xlabel("outer iteration")
    ax.set_ylabel("step norm")
    ax.grid(True, which="both", alpha=0.3)
    steps_path = os.path.join(cfg.out, "steps.png")
    fig.savefig(steps_path, dpi=150, bbox_inches="tight")
    plt.close(fig)

    print(f"wrote {measures_path} and {steps_path}")
    return 0


# ----------------- driver -----------------

def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH",
                        help="JSON run configuration")
    common.add_argument("--out", metavar="DIR",
                        help="output directory (default: config out or .)")
    common.add_argument("--seed", type=int, metavar="N",
                        help="override the configured problem seed")
    common.add_argument("--eps-x", type=float, metavar="F", dest="eps_x",
                        help="primal target accuracy")
    common.add_argument("--eps-y", type=float, metavar="F", dest="eps_y",
                        help="dual target accuracy")
    common.add_argument("--mode", choices=MODES,
                        help="dual curvature handling")
    common.add_argument("--termination", choices=TERMINATIONS,
                        help="outer-loop stopping rule")
    common.add_argument("--select", choices=SELECT_RULES,
                        help="output selection rule for fixed runs")

    parser = argparse.ArgumentParser(
        prog="minmax-fne",
        description="First-order solver for smooth min-max problems")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("schedule", parents=[common],
                   help="derive and print the solver schedule")
    sub.add_parser("solve", parents=[common],
                   help="run the solver; write trace.csv and summary.json")
    sub.add_parser("check", parents=[common],
                   help="run the fast invariant suite")
    sub.add_parser("bench", parents=[common],
                   help="sweep problems x accuracies; write bench.csv")
    plot = sub.add_parser("plot", parents=[common],
                          help="render decay curves from a trace CSV")
    plot.add_argument("trace", nargs="?", metavar="TRACE",
                      help="trace CSV (default: <out>/trace.csv)")
    return parser


_HANDLERS = {"schedule": _cmd_schedule, "solve": _cmd_solve,
             "check": _cmd_check, "bench": _cmd_bench, "plot": _cmd_plot}


def run_cli(argv: Optional[Sequence[str]] = None) -> int:
    """Entry point used by the console script; returns the exit code."""
    _init_logging()
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _HANDLERS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except ScheduleBudgetError as exc:
        print(f"budget error: {exc}", file=sys.stderr)
        return 3


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
