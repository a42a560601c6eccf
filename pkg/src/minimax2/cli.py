"""Benchmark front end: experiment configs, trace files, summaries, plots.

Experiments are described by INI-style config files::

    [experiment]
    epsilon = 0.01
    algorithms = grtr, lmnegcur, gda, minimax_tr
    repetitions = 1
    output_dir = runs
    seed = 0

    [problem]
    kind = saddle_chain
    n = 10
    m = 5
    L = 1.0
    gamma = 1.0

    [grtr]            ; optional per-algorithm overrides
    L2 = 16.0

Each run writes one CSV trace (one row per applied outer step) plus a
key-value summary file.  Identical config and seed reproduce identical
iterate sequences; trace bytes differ only in the wall-time column unless
a deterministic clock is injected.
"""
from __future__ import annotations

import argparse
import configparser
import csv
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from . import drivers, problems
from .errors import ConfigError, ParseError, SolverError
from .oracle import MinimaxProblem, validate_derivatives
from .drivers import IterationRecord, SolverConfig, StationarityReport

Clock = Callable[[], float]

_ALGORITHMS = ("grtr", "lmnegcur", "gda", "minimax_tr")

TRACE_COLUMNS = (
    "t",
    "x_norm",
    "g_norm",
    "lambda",
    "lambda_min_H",
    "step_norm",
    "step_kind",
    "P_estimate",
    "inner_iters",
    "wall_time_s",
    "backtracks",
)


@dataclass(frozen=True)
class ProblemSpec:
    kind: str  # saddle_chain | quadratic
    options: dict = field(default_factory=dict)


@dataclass(frozen=True)
class AlgorithmSpec:
    name: str
    options: dict = field(default_factory=dict)


@dataclass
class ExperimentConfig:
    problem: ProblemSpec
    algorithms: list[AlgorithmSpec]
    epsilon: float
    repetitions: int = 1
    output_dir: Path = Path("runs")
    time_limit: Optional[float] = None
    seed: int = 0

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ConfigError("epsilon must be positive")
        if not self.algorithms:
            raise ConfigError("at least one algorithm is required")
        if self.repetitions < 0:
            raise ConfigError("repetitions must be nonnegative")
        self.output_dir = Path(self.output_dir)


@dataclass
class RunSummary:
    algorithm: str
    repetition: int
    iterations: int
    inner_iterations_total: int
    final_gap: Optional[float]
    certificate: Optional[StationarityReport]
    wall_time: float
    stop_reason: str
    trace_path: Optional[str] = None


# ---------------------------------------------------------------------------
# Config parsing


def parse_config(path: str | Path) -> ExperimentConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    if not cp.read(path):
        raise ConfigError(f"cannot read config file {path}")
    if "experiment" not in cp:
        raise ConfigError(f"{path}: missing [experiment] section")
    if "problem" not in cp:
        raise ConfigError(f"{path}: missing [problem] section")
    exp = cp["experiment"]
    try:
        algo_names = [a.strip() for a in exp.get("algorithms", "").split(",") if a.strip()]
        for name in algo_names:
            if name not in _ALGORITHMS:
                raise ConfigError(
                    f"{path}: unknown algorithm {name!r} (choose from {_ALGORITHMS})"
                )
        algorithms = [
            AlgorithmSpec(name=name, options=_section_options(cp, name))
            for name in algo_names
        ]
        prob_sec = dict(cp["problem"])
        kind = prob_sec.pop("kind", None)
        if kind not in ("saddle_chain", "quadratic"):
            raise ConfigError(f"{path}: [problem] kind must be saddle_chain or quadratic")
        config = ExperimentConfig(
            problem=ProblemSpec(kind=kind, options=_coerce_values(prob_sec)),
            algorithms=algorithms,
            epsilon=exp.getfloat("epsilon"),
            repetitions=exp.getint("repetitions", 1),
            output_dir=Path(exp.get("output_dir", "runs")),
            time_limit=exp.getfloat("time_limit", fallback=None),
            seed=exp.getint("seed", 0),
        )
    except (ValueError, TypeError, KeyError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return config


def _section_options(cp: configparser.ConfigParser, name: str) -> dict:
    return _coerce_values(dict(cp[name])) if name in cp else {}


def _coerce_values(raw: dict) -> dict:
    out = {}
    for key, value in raw.items():
        text = value.strip()
        low = text.lower()
        if low in ("true", "false"):
            out[key] = low == "true"
            continue
        try:
            out[key] = int(text)
            continue
        except ValueError:
            pass
        try:
            out[key] = float(text)
            continue
        except ValueError:
            pass
        out[key] = text
    return out


def build_problem(spec: ProblemSpec) -> tuple[MinimaxProblem, Optional[float], np.ndarray]:
    """Instantiate a problem; returns (problem, optimal value or None, x0)."""
    opts = dict(spec.options)
    if spec.kind == "saddle_chain":
        try:
            # configparser lowercases keys, so "L" arrives as "l".
            params = problems.SaddleChainParams(
                n=int(opts.pop("n")),
                m=int(opts.pop("m", 5)),
                L=float(opts.pop("l", 1.0)),
                gamma=float(opts.pop("gamma", 1.0)),
                tau=float(opts.pop("tau", math.e)),
            )
        except KeyError as exc:
            raise ConfigError(f"saddle_chain problem needs field {exc}") from exc
        ell = opts.pop("ell", None)
        rho = opts.pop("rho", None)
        x0_fill = float(opts.pop("x0", 1e-3))
        if opts:
            raise ConfigError(f"unknown [problem] fields {sorted(opts)}")
        problem = problems.saddle_chain_problem(
            params,
            ell=float(ell) if ell is not None else None,
            rho=float(rho) if rho is not None else None,
        )
        return problem, params.P_star, np.full(params.n, x0_fill)
    if spec.kind == "quadratic":
        try:
            seed = int(opts.pop("seed"))
            n = int(opts.pop("n"))
            m = int(opts.pop("m"))
        except KeyError as exc:
            raise ConfigError(f"quadratic problem needs field {exc}") from exc
        x0_scale = float(opts.pop("x0_scale", 1.0))
        if opts:
            raise ConfigError(f"unknown [problem] fields {sorted(opts)}")
        problem = problems.random_quadratic(seed, n, m)
        rng = np.random.default_rng(seed)
        x0 = x0_scale * rng.standard_normal(n)
        return problem, 0.0, x0
    raise ConfigError(f"unknown problem kind {spec.kind!r}")


# ---------------------------------------------------------------------------
# Trace persistence


def write_trace(
    path: str | Path, records: Sequence[IterationRecord], meta: Optional[dict] = None
) -> None:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        if meta:
            pairs = " ".join(f"{k}={v}" for k, v in sorted(meta.items()))
            fh.write(f"# {pairs}\n")
        writer = csv.writer(fh)
        writer.writerow(TRACE_COLUMNS)
        for rec in records:
            writer.writerow(
                [
                    rec.t,
                    repr(float(rec.x_norm)),
                    repr(float(rec.g_norm)),
                    "" if rec.lam is None else repr(float(rec.lam)),
                    "" if rec.lambda_min_H is None else repr(float(rec.lambda_min_H)),
                    repr(float(rec.step_norm)),
                    rec.step_kind,
                    repr(float(rec.P_estimate)),
                    rec.inner_iters,
                    repr(float(rec.wall_time)),
                    rec.backtracks,
                ]
            )


def read_trace(path: str | Path) -> tuple[list[IterationRecord], dict]:
    path = Path(path)
    meta: dict = {}
    records: list[IterationRecord] = []
    try:
        with open(path, newline="") as fh:
            first = fh.readline()
            if first.startswith("#"):
                for token in first[1:].strip().split():
                    if "=" in token:
                        key, _, value = token.partition("=")
                        meta[key] = value
                header_line = fh.readline()
            else:
                header_line = first
            header = next(csv.reader([header_line]))
            if tuple(header) != TRACE_COLUMNS:
                raise ParseError(f"{path}: unexpected trace header {header}")
            for row in csv.reader(fh):
                if not row:
                    continue
                if len(row) != len(TRACE_COLUMNS):
                    raise ParseError(f"{path}: malformed row {row}")
                records.append(
                    IterationRecord(
                        t=int(row[0]),
                        x_norm=float(row[1]),
                        g_norm=float(row[2]),
                        lam=None if row[3] == "" else float(row[3]),
                        lambda_min_H=None if row[4] == "" else float(row[4]),
                        step_norm=float(row[5]),
                        step_kind=row[6],
                        P_estimate=float(row[7]),
                        inner_iters=int(row[8]),
                        wall_time=float(row[9]),
                        backtracks=int(row[10]),
                    )
                )
    except OSError as exc:
        raise ParseError(f"cannot read trace {path}: {exc}") from exc
    except ValueError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    return records, meta


# ---------------------------------------------------------------------------
# Experiment runner


def _solver_config(config: ExperimentConfig, spec: AlgorithmSpec) -> SolverConfig:
    opts = dict(spec.options)
    known = {
        "max_outer_iters", "sigma", "r", "eps1", "eps2", "subproblem_mode",
        "seed", "l1", "l2", "fixed_radius", "accelerated_inner", "inner_iters_cap",
    }
    unknown = set(opts) - known
    if unknown:
        raise ConfigError(f"unknown option(s) {sorted(unknown)} for algorithm {spec.name}")
    kwargs = {("L1" if k == "l1" else "L2" if k == "l2" else k): v for k, v in opts.items()}
    try:
        return SolverConfig(
            epsilon=config.epsilon, time_limit_s=config.time_limit, **kwargs
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad options for algorithm {spec.name}: {exc}") from exc


def run_single(
    config: ExperimentConfig,
    spec: AlgorithmSpec,
    repetition: int,
    clock: Clock = time.monotonic,
) -> RunSummary:
    """Execute one (algorithm, repetition) pair and write its trace file."""
    problem, p_star, x0 = build_problem(config.problem)
    rng = np.random.default_rng(config.seed + repetition)
    y0 = rng.standard_normal(problem.dim_y)

    if spec.name == "gda":
        opts = spec.options
        unknown = set(opts) - {"step_x", "step_y", "max_iters"}
        if unknown:
            raise ConfigError(f"unknown option(s) {sorted(unknown)} for algorithm gda")
        run = drivers.run_gda(
            problem,
            x0,
            y0,
            step_x=float(opts.get("step_x", 0.01)),
            step_y=float(opts.get("step_y", 0.01)),
            max_iters=int(opts.get("max_iters", 10**5)),
            clock=clock,
            time_limit_s=config.time_limit,
        )
    else:
        cfg = _solver_config(config, spec)
        cfg = SolverConfig(**{**cfg.__dict__, "seed": config.seed + repetition})
        runner = {
            "grtr": drivers.run_grtr,
            "lmnegcur": drivers.run_lmnegcur,
            "minimax_tr": drivers.run_minimax_tr,
        }[spec.name]
        run = runner(problem, x0, y0, cfg, clock=clock)

    final_gap = None
    if p_star is not None:
        final_gap = drivers.evaluate_primal(problem, run.x, accuracy=1e-10) - p_star

    config.output_dir.mkdir(parents=True, exist_ok=True)
    trace_path = config.output_dir / f"{spec.name}_rep{repetition}.csv"
    meta = {"algorithm": spec.name, "problem": problem.name, "seed": config.seed + repetition}
    if p_star is not None:
        meta["p_star"] = repr(p_star)
    write_trace(trace_path, run.trace, meta)
    return RunSummary(
        algorithm=spec.name,
        repetition=repetition,
        iterations=run.iterations,
        inner_iterations_total=run.inner_iters_total,
        final_gap=final_gap,
        certificate=run.report,
        wall_time=run.wall_time_s,
        stop_reason=run.stop_reason,
        trace_path=str(trace_path),
    )


def run_experiment(
    config: ExperimentConfig, jobs: int = 1, clock: Clock = time.monotonic
) -> list[RunSummary]:
    """Run every (algorithm, repetition) pair, persist traces and a summary.

    ``jobs > 1`` fans the runs out to worker processes (the injected clock
    applies only to inline runs, so parallel runs always use real time).
    """
    tasks = [
        (spec, rep)
        for spec in config.algorithms
        for rep in range(config.repetitions)
    ]
    summaries: list[RunSummary] = []
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(run_single, config, spec, rep) for spec, rep in tasks]
            summaries = [f.result() for f in futures]
    else:
        for spec, rep in tasks:
            summaries.append(run_single(config, spec, rep, clock=clock))
    if summaries:
        write_summary(config.output_dir / "summary.txt", summaries)
    return summaries


def write_summary(path: str | Path, summaries: Sequence[RunSummary]) -> None:
    cp = configparser.ConfigParser()
    for s in summaries:
        section = f"{s.algorithm}_rep{s.repetition}"
        entry = {
            "algorithm": s.algorithm,
            "repetition": str(s.repetition),
            "iterations": str(s.iterations),
            "inner_iterations_total": str(s.inner_iterations_total),
            "wall_time_s": repr(s.wall_time),
            "stop_reason": s.stop_reason,
        }
        if s.final_gap is not None:
            entry["final_gap"] = repr(s.final_gap)
        if s.trace_path is not None:
            entry["trace"] = s.trace_path
        if s.certificate is not None:
            entry["grad_norm"] = repr(s.certificate.grad_norm)
            entry["min_eig"] = repr(s.certificate.min_eig)
            entry["xi_bound"] = repr(s.certificate.xi_bound)
            entry["theta_bound"] = repr(s.certificate.theta_bound)
            entry["satisfied"] = str(s.certificate.satisfied).lower()
        cp[section] = entry
    with open(path, "w") as fh:
        cp.write(fh)


# ---------------------------------------------------------------------------
# Plotting


def emit_plot(
    trace_paths: Sequence[str | Path], mode: str, out_path: str | Path
) -> None:
    """Write a vector plot of the given traces (one labeled curve each)."""
    if mode not in ("gap_vs_time", "gnorm_vs_iter"):
        raise ValueError(f"unknown plot mode {mode!r}")
    if not trace_paths:
        raise ValueError("no trace files given")
    loaded = [(Path(p), *read_trace(p)) for p in trace_paths]

    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(7, 4.5))
    for path, records, meta in loaded:
        if not records:
            continue
        label = meta.get("algorithm", path.stem)
        if mode == "gnorm_vs_iter":
            xs = [r.t for r in records]
            ys = [max(r.g_norm, 1e-16) for r in records]
        else:
            p_star = _reference_value(meta, loaded)
            xs = [r.wall_time for r in records]
            ys = [max(r.P_estimate - p_star, 1e-16) for r in records]
        ax.plot(xs, ys, label=label)
    ax.set_yscale("log")
    if mode == "gnorm_vs_iter":
        ax.set_xlabel("outer iteration")
        ax.set_ylabel("gradient surrogate norm")
    else:
        ax.set_xlabel("wall time (s)")
        ax.set_ylabel("primal gap")
    ax.legend()
    fig.tight_layout()
    fig.savefig(out_path)
    plt.close(fig)


def _reference_value(meta: dict, loaded: list) -> float:
    if "p_star" in meta:
        return float(meta["p_star"])
    # Fall back to the best value seen across all traces.
    best = min(
        min((r.P_estimate for r in records), default=np.inf)
        for _, records, _ in loaded
    )
    return best if np.isfinite(best) else 0.0


# ---------------------------------------------------------------------------
# Command line interface


def _cmd_run(args: argparse.Namespace) -> int:
    config = parse_config(args.config)
    if args.out is not None:
        config.output_dir = Path(args.out)
    if args.seed is not None:
        config.seed = args.seed
    summaries = run_experiment(config, jobs=args.jobs)
    for s in summaries:
        gap = "n/a" if s.final_gap is None else f"{s.final_gap:.3e}"
        print(
            f"{s.algorithm} rep {s.repetition}: {s.iterations} iterations, "
            f"gap {gap}, wall {s.wall_time:.2f}s, stop {s.stop_reason}"
        )
    return 0


def _cmd_plot(args: argparse.Namespace) -> int:
    emit_plot(args.traces, args.mode, args.out)
    print(f"wrote {args.out}")
    return 0


def _cmd_certify(args: argparse.Namespace) -> int:
    problem, _ = problems.load_instance(args.problem)
    x = np.loadtxt(args.x, ndmin=1)
    report = drivers.certify(
        problem, x, args.epsilon, inner_tol=args.inner_tol, constants=args.constants
    )
    print(f"grad_norm   {report.grad_norm:.6e} (bound {report.xi_bound:.6e})")
    print(f"min_eig     {report.min_eig:.6e} (bound {-report.theta_bound:.6e})")
    print(f"satisfied   {str(report.satisfied).lower()}")
    return 0


def _cmd_validate(args: argparse.Namespace) -> int:
    problem, params = problems.load_instance(args.problem)
    rng = np.random.default_rng(args.seed)
    worst = None
    for _ in range(args.points):
        # Interior points of the first piecewise region.
        x = rng.uniform(0.05 * params.tau, 0.95 * params.tau, size=problem.dim_x)
        y = rng.standard_normal(problem.dim_y)
        z = np.concatenate([x, y])
        report = validate_derivatives(problem, z, step=1e-5 * (1.0 + np.linalg.norm(z)))
        if worst is None or report.max_error() > worst.max_error():
            worst = report
    assert worst is not None
    print(f"grad_x   max rel err {worst.grad_x:.3e}")
    print(f"grad_y   max rel err {worst.grad_y:.3e}")
    print(f"hess_xx  max rel err {worst.hess_xx:.3e}")
    print(f"hess_xy  max rel err {worst.hess_xy:.3e}")
    print(f"hess_yy  max rel err {worst.hess_yy:.3e}")
    ok = worst.max_error() <= args.tol
    print("derivative check", "passed" if ok else "FAILED")
    return 0 if ok else 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="minimax2",
        description="Second-order solvers and benchmarks for nonconvex-strongly-concave minimax problems.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a configured experiment")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--out", default=None, help="override output directory")
    p_run.add_argument("--seed", type=int, default=None, help="override base seed")
    p_run.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    p_run.set_defaults(func=_cmd_run)

    p_plot = sub.add_parser("plot", help="render trace files to a vector plot")
    p_plot.add_argument("--mode", required=True, choices=("gap_vs_time", "gnorm_vs_iter"))
    p_plot.add_argument("--out", required=True)
    p_plot.add_argument("traces", nargs="+")
    p_plot.set_defaults(func=_cmd_plot)

    p_cert = sub.add_parser("certify", help="stationarity certificate at a point")
    p_cert.add_argument("--problem", required=True, help="instance file")
    p_cert.add_argument("--x", required=True, help="text file with the point")
    p_cert.add_argument("--epsilon", type=float, required=True)
    p_cert.add_argument("--constants", choices=("grtr", "lmnegcur"), default="grtr")
    p_cert.add_argument("--inner-tol", type=float, default=1e-2)
    p_cert.set_defaults(func=_cmd_certify)

    p_val = sub.add_parser("validate", help="finite-difference derivative checks")
    p_val.add_argument("--problem", required=True, help="instance file")
    p_val.add_argument("--points", type=int, default=5)
    p_val.add_argument("--seed", type=int, default=0)
    p_val.add_argument("--tol", type=float, default=1e-3)
    p_val.set_defaults(func=_cmd_validate)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (SolverError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


def entry() -> None:  # console-script hook
    sys.exit(main())


if __name__ == "__main__":
    sys.exit(main())
