"""Command-line experiment runner.

Subcommands ``maxcut``, ``classify``, ``regress`` and ``poisson`` write their
results plus a ``manifest.json`` into ``--out``; ``rerun`` replays a
manifest.  Exit codes: 0 success, 2 usage or configuration error, 3 solver
failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .classical_opt import BRUTE_FORCE_MAX_NODES, AnnealSchedule, brute_force_qubo, local_search_1flip, simulated_annealing
from .hqnn.datasets import DatasetError, load_csv_dataset, make_circles, make_housing_like
from .hqnn.training import TrainConfig, TrainingError, repeated_runs
from .maxcut import OptResult, random_weighted_graph, read_graph
from .quenc import QuencConfig, hybrid_pipeline, quenc_optimize
from .tensornet.amen import ConvergenceError, SolveConfig
from .tensornet.laplacian import PoissonProblem, exact_solution_1d
from .tensornet.poisson import CG_MAX_POINTS, CGNotConverged, benchmark, write_bench_csv

EXIT_OK, EXIT_USAGE, EXIT_SOLVER = 0, 2, 3
MAXCUT_METHODS = ("quenc", "sa", "local", "pipeline", "brute")


class UsageError(Exception):
    """Bad flags or configuration; maps to exit code 2."""


# --- shared helpers --------------------------------------------------------

def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="milliseconds")


def _write_json(path: Path, payload) -> None:
    path.write_text(json.dumps(payload, indent=2, default=_json_default))


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, Path):
        return str(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _resolved_config(args) -> dict:
    skip = {"func", "config", "out", "verbose", "command"}
    return {k: v for k, v in vars(args).items() if k not in skip}


def _write_manifest(args, out: Path, seeds, artifacts, started: str, argv) -> None:
    _write_json(out / "manifest.json", {
        "subcommand": args.command,
        "config": _resolved_config(args),
        "out": str(out),
        "seeds": list(seeds),
        "artifacts": sorted(str(a) for a in artifacts),
        "version": __version__,
        "started": started,
        "finished": _now(),
        "argv": list(argv),
    })


def _csv_list(text: str) -> list[str]:
    return [t.strip() for t in text.split(",") if t.strip()]


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return value


def _positive_float(text: str) -> float:
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError("must be > 0")
    return value


def read_config_file(path) -> dict[str, str]:
    """Flat ``key = value`` lines; ``#`` starts a comment; dashes in keys map to underscores."""
    path = Path(path)
    if not path.is_file():
        raise UsageError(f"config file not found: {path}")
    values = {}
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        values[key.replace("-", "_")] = value
    return values


def _apply_config(parser: argparse.ArgumentParser, sub: argparse.ArgumentParser, argv) -> argparse.Namespace:
    """Parse ``argv``; values from ``--config`` fill in whatever the flags left at default."""
    args = parser.parse_args(argv)
    if not getattr(args, "config", None):
        return args
    file_values = read_config_file(args.config)
    actions = {a.dest: a for a in sub._actions}
    defaults = {}
    for key, raw in file_values.items():
        action = actions.get(key)
        if action is None or key in ("config", "out", "help"):
            raise UsageError(f"unknown config key {key!r} for {args.command}")
        try:
            if isinstance(action, argparse._StoreTrueAction):
                value = raw.lower() in ("1", "true", "yes", "on")
            else:
                value = action.type(raw) if action.type else raw
        except (ValueError, argparse.ArgumentTypeError) as exc:
            raise UsageError(f"config key {key!r}: {exc}") from None
        if action.choices is not None and value not in action.choices:
            raise UsageError(f"config key {key!r}: {value!r} not in {list(action.choices)}")
        defaults[key] = value
    sub.set_defaults(**defaults)
    return parser.parse_args(argv)


# --- maxcut ------------------------------------------------------------------

def _trace_csv(path: Path, trace) -> None:
    fields = ["iter", "cost", "energy", "best_energy", "elapsed_ms"]
    with path.open("w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=fields, extrasaction="ignore")
        w.writeheader()
        w.writerows(trace)


def cmd_maxcut(args) -> tuple[list[int], list[Path]]:
    if args.graph_file:
        try:
            graph = read_graph(args.graph_file)
        except (OSError, ValueError) as exc:
            raise UsageError(f"cannot read graph: {exc}") from None
    else:
        if args.nodes < 2:
            raise UsageError("--nodes must be >= 2")
        graph = random_weighted_graph(args.nodes, args.seed)
    n = graph.num_nodes
    if args.method == "brute" and n > BRUTE_FORCE_MAX_NODES:
        raise UsageError(f"brute force is limited to {BRUTE_FORCE_MAX_NODES} nodes, graph has {n}")
    qcfg = QuencConfig(layers=args.layers, learning_rate=args.lr, max_iter=args.iters, seed=args.seed)
    t0 = time.perf_counter()
    if args.method == "quenc":
        result = quenc_optimize(graph, qcfg)
    elif args.method == "pipeline":
        result = hybrid_pipeline(graph, qcfg)
    elif args.method == "sa":
        sched = AnnealSchedule(args.t_initial, args.t_final, args.sweeps, args.seed)
        x, e, trace = simulated_annealing(graph, sched, return_trace=True)
        result = OptResult(x, e, [{"iter": i, "cost": float(b), "energy": float(b), "best_energy": float(b),
                                   "elapsed_ms": None} for i, b in enumerate(trace)])
    elif args.method == "local":
        start = np.random.default_rng(args.seed).integers(0, 2, n)
        x, e = local_search_1flip(graph, start)
        result = OptResult(x, e, [{"iter": 0, "cost": e, "energy": e, "best_energy": e, "elapsed_ms": None}])
    else:
        x, e = brute_force_qubo(graph)
        result = OptResult(x, e, [{"iter": 0, "cost": e, "energy": e, "best_energy": e, "elapsed_ms": None}])
    wall = (time.perf_counter() - t0) * 1e3
    for row in result.trace:
        if row.get("elapsed_ms") is None:
            row["elapsed_ms"] = wall
    payload = result.to_dict()
    payload.update(method=args.method, nodes=n, seed=args.seed)
    if "quenc_energy" in result.extra:
        payload["quenc_energy"] = float(result.extra["quenc_energy"])
    out = args.out
    _write_json(out / "result.json", payload)
    _trace_csv(out / "trace.csv", result.trace)
    print(f"{args.method}: n={n} best energy {result.best_energy:.6f} cut {-result.best_energy:.6f}")
    return [args.seed], [out / "result.json", out / "trace.csv"]


# --- classify / regress ------------------------------------------------------

def _run_repeats(task, dataset, args, cfg, seeds, extra_metrics, out: Path):
    """One repeat per seed, optionally in worker processes; results are keyed by seed."""
    jobs = [(task, dataset, args.model, cfg, s, args.train_size, extra_metrics) for s in seeds]
    if args.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = dict(zip(seeds, pool.map(_one_repeat, jobs)))
    else:
        results = {s: _one_repeat(j) for s, j in zip(seeds, jobs)}
    artifacts = []
    for s in seeds:
        path = out / f"history_seed{s}.csv"
        results[s]["history"].to_csv(path)
        artifacts.append(path)
    return results, artifacts


def _one_repeat(job):
    task, dataset, model, cfg, seed, train_size, extra_metrics = job
    histories = []
    summary = repeated_runs(dataset, task, model, cfg, repeats=1, train_size=train_size, seed=seed,
                            extra_metrics=extra_metrics, on_history=lambda r, s, h: histories.append(h))
    return {"final": summary.per_repeat[0], "train_size": summary.train_size,
            "extra": {m: v["per_repeat"][0] for m, v in summary.extra.items()}, "history": histories[0]}


def _summary(results, seeds, key="final") -> dict:
    vals = np.array([results[s][key] if key == "final" else results[s]["extra"][key] for s in seeds])
    return {"per_repeat": vals.tolist(), "mean": float(vals.mean()), "stddev": float(vals.std())}


def cmd_classify(args):
    ds = make_circles(args.samples, noise=args.noise, factor=args.factor, seed=args.data_seed)
    frac = args.train_fraction
    n_train = int(round(frac * len(ds)))
    if args.train_size is not None and not 1 <= args.train_size <= n_train:
        raise UsageError(f"--train-size must be between 1 and {n_train}")
    cfg = TrainConfig.classification(epochs=args.epochs, learning_rate=args.lr, batch_size=args.batch_size,
                                     train_fraction=frac, test_fraction=1.0 - frac)
    seeds = [args.seed + r for r in range(args.repeats)]
    results, artifacts = _run_repeats("classification", ds, args, cfg, seeds, (), args.out)
    summary = {"model": args.model, "train_size": results[seeds[0]]["train_size"], "metric": "accuracy",
               "seeds": seeds, **_summary(results, seeds)}
    _write_json(args.out / "summary.json", summary)
    print(f"{args.model}: accuracy {summary['mean']:.4f} +- {summary['stddev']:.4f} over {len(seeds)} repeats")
    return seeds, artifacts + [args.out / "summary.json"]


def cmd_regress(args):
    if args.data_csv:
        features = _csv_list(args.features)
        if len(features) != 2:
            raise UsageError("--features must name exactly two columns")
        try:
            ds = load_csv_dataset(args.data_csv, features, args.target)
        except DatasetError as exc:
            raise UsageError(str(exc)) from None
    else:
        ds = make_housing_like(args.samples, seed=args.data_seed)
    frac = args.train_fraction
    n_train = int(round(frac * len(ds)))
    if args.train_size is not None and not 1 <= args.train_size <= n_train:
        raise UsageError(f"--train-size must be between 1 and {n_train}")
    cfg = TrainConfig.regression(epochs=args.epochs, learning_rate=args.lr, batch_size=args.batch_size,
                                 metric="mse", train_fraction=frac, test_fraction=1.0 - frac)
    seeds = [args.seed + r for r in range(args.repeats)]
    results, artifacts = _run_repeats("regression", ds, args, cfg, seeds, ("mae",), args.out)
    summary = {"model": args.model, "train_size": results[seeds[0]]["train_size"], "seeds": seeds,
               "mse": _summary(results, seeds), "mae": _summary(results, seeds, "mae")}
    summary.update(per_repeat=summary["mse"]["per_repeat"], mean=summary["mse"]["mean"],
                   stddev=summary["mse"]["stddev"])
    _write_json(args.out / "summary.json", summary)
    print(f"{args.model}: test MSE {summary['mse']['mean']:.5f}, MAE {summary['mae']['mean']:.5f}")
    return seeds, artifacts + [args.out / "summary.json"]


# --- poisson ---------------------------------------------------------------

def cmd_poisson(args):
    methods = _csv_list(args.methods)
    bad = set(methods) - {"tt", "cg"}
    if not methods or bad:
        raise UsageError(f"--methods must be a subset of tt,cg (got {args.methods!r})")
    problem = PoissonProblem(args.dim, args.levels)
    if "cg" in methods and problem.num_points > CG_MAX_POINTS:
        raise UsageError(f"cg needs a dense grid of {problem.num_points} points; the limit is {CG_MAX_POINTS}")
    config = SolveConfig(tol=args.tol, max_rank=args.max_rank, max_sweeps=args.max_sweeps)
    rows, sols = benchmark(args.dim, args.levels, methods, args.tol, config,
                           keep_solutions=problem.num_points <= 2**24)
    report = {"rows": [r.as_dict() for r in rows]}
    if args.dim == 1 and "tt" in sols:
        err = float(np.abs(np.asarray(sols["tt"]) - exact_solution_1d(args.levels)).max())
        report["max_abs_error_vs_exact"] = err
        print(f"max abs error vs x(1-x)/2: {err:.3e}")
    if rows and rows[0].rel_diff is not None:
        report["rel_diff"] = rows[0].rel_diff
        print(f"relative L2 difference tt vs cg: {rows[0].rel_diff:.3e}")
    for r in rows:
        print(f"{r.method}: d={r.d} points={r.points} wall={r.wall_ms:.1f} ms residual={r.residual:.3e}")
    write_bench_csv(rows, args.out / "bench.csv")
    _write_json(args.out / "report.json", report)
    return [], [args.out / "bench.csv", args.out / "report.json"]


# --- parser ------------------------------------------------------------------

def build_parser() -> tuple[argparse.ArgumentParser, dict[str, argparse.ArgumentParser]]:
    parser = argparse.ArgumentParser(prog="hybridbench", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subs = parser.add_subparsers(dest="command", required=True)
    table = {}

    def add(name, func, help_):
        p = subs.add_parser(name, help=help_)
        p.add_argument("--out", type=Path, default=Path("runs") / name, help="output directory")
        p.add_argument("--config", help="flat key = value file; flags override it")
        p.add_argument("-v", "--verbose", action="store_true")
        p.set_defaults(func=func)
        table[name] = p
        return p

    p = add("maxcut", cmd_maxcut, "QuEnc and classical MaxCut solvers")
    p.add_argument("--nodes", type=int, default=16)
    p.add_argument("--graph-file", help="graph file ('n m' then 'i j w' lines); overrides --nodes")
    p.add_argument("--method", choices=MAXCUT_METHODS, default="quenc")
    p.add_argument("--layers", type=_positive_int, default=8)
    p.add_argument("--iters", type=_positive_int, default=2000)
    p.add_argument("--lr", type=_positive_float, default=0.05)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sweeps", type=_positive_int, default=1000, help="annealing sweeps")
    p.add_argument("--t-initial", type=_positive_float, default=2.0)
    p.add_argument("--t-final", type=_positive_float, default=0.01)

    for name, func, task in (("classify", cmd_classify, "classification"), ("regress", cmd_regress, "regression")):
        p = add(name, func, f"train {task} networks")
        p.add_argument("--model", choices=("classical", "hybrid"), default="hybrid")
        p.add_argument("--train-size", type=_positive_int, default=None,
                       help="use only this many training samples")
        p.add_argument("--epochs", type=_positive_int, default=100)
        p.add_argument("--batch-size", type=_positive_int, default=32)
        p.add_argument("--repeats", type=_positive_int, default=10)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--data-seed", type=int, default=0)
        p.add_argument("--jobs", type=_positive_int, default=1, help="worker processes for repeats")
        if name == "classify":
            p.add_argument("--samples", type=_positive_int, default=1000)
            p.add_argument("--noise", type=float, default=0.1)
            p.add_argument("--factor", type=float, default=0.5)
            p.add_argument("--lr", type=_positive_float, default=1e-2)
            p.add_argument("--train-fraction", type=float, default=0.3)
        else:
            p.add_argument("--data-csv", help="CSV with a header row; synthetic data when omitted")
            p.add_argument("--features", default="rooms,lstat")
            p.add_argument("--target", default="price")
            p.add_argument("--samples", type=_positive_int, default=506)
            p.add_argument("--lr", type=_positive_float, default=3e-3)
            p.add_argument("--train-fraction", type=float, default=0.8)

    p = add("poisson", cmd_poisson, "3D/1D Poisson benchmark: tensor train vs conjugate gradient")
    p.add_argument("--dim", type=int, choices=(1, 3), default=3)
    p.add_argument("--levels", type=_positive_int, default=5)
    p.add_argument("--methods", default="tt,cg")
    p.add_argument("--tol", type=_positive_float, default=1e-8)
    p.add_argument("--max-rank", type=_positive_int, default=64)
    p.add_argument("--max-sweeps", type=_positive_int, default=40)

    p = subs.add_parser("rerun", help="replay the run recorded in a manifest")
    p.add_argument("manifest", type=Path)
    p.add_argument("--out", type=Path, help="write into this directory instead")
    table["rerun"] = p
    return parser, table


def _rerun_argv(args) -> list[str]:
    """Flags reproducing the resolved configuration stored in a manifest."""
    try:
        manifest = json.loads(Path(args.manifest).read_text())
        argv = [manifest["subcommand"]]
        for key, value in manifest["config"].items():
            if key == "command" or value is None:
                continue
            argv += [f"--{key.replace('_', '-')}", str(value)]
        argv += ["--out", str(args.out if args.out is not None else manifest["out"])]
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise UsageError(f"cannot read manifest: {exc}") from None
    return argv


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser, table = build_parser()
    try:
        if argv and argv[0] == "rerun":
            argv = _rerun_argv(parser.parse_args(argv))
        try:
            # argparse exits with status 2 on its own errors
            first = parser.parse_args(argv)
        except SystemExit as exc:
            return int(exc.code or 0)
        args = _apply_config(parser, table[first.command], argv)
        logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        if args.command in ("classify", "regress") and not 0 < args.train_fraction < 1:
            raise UsageError("--train-fraction must lie in (0, 1)")
        args.out.mkdir(parents=True, exist_ok=True)
        started = _now()
        seeds, artifacts = args.func(args)
        _write_manifest(args, args.out, seeds, artifacts, started, argv)
        return EXIT_OK
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ConvergenceError, CGNotConverged, TrainingError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
