"""Command-line entry point: ``nads run|heuristic|solve|verify|gaps``."""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path

from . import bench
from .errors import DivergenceError, NadsError, SizeError, ValidationError
from .gip import GipParams, SeedSet, objective
from .graph import WeightScheme, read_graph
from .heuristics import HEURISTICS, pseudo_random_start, run_heuristic
from .oracle import verify_local_maximum
from .search import SearchConfig, cds, nads

EXIT_OK, EXIT_VALIDATION, EXIT_IO, EXIT_INFEASIBLE = 0, 2, 3, 4

log = logging.getLogger("nads")


def _global_flags() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("propagation parameters")
    g.add_argument("--gamma", type=float, default=argparse.SUPPRESS)
    g.add_argument("--epsilon", type=float, default=argparse.SUPPRESS)
    g.add_argument("--theta-l", dest="theta_l", type=float, default=argparse.SUPPRESS)
    g.add_argument("--theta-h", dest="theta_h", type=float, default=argparse.SUPPRESS)
    g.add_argument("--l0", type=float, default=argparse.SUPPRESS)
    g.add_argument("--h0", type=float, default=argparse.SUPPRESS)
    g.add_argument("--include-t0", dest="include_t0", action="store_true", default=argparse.SUPPRESS)
    g.add_argument("--rng-seed", dest="rng_seed", type=int, default=argparse.SUPPRESS)
    g.add_argument("--out", default=argparse.SUPPRESS, help="output directory")
    g.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS)
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _global_flags()
    parser = argparse.ArgumentParser(prog="nads", parents=[common],
                                     description="Influence maximization by network-aware direct search.")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", parents=[common], help="run an experiment config")
    run.add_argument("--config", required=True)

    h = sub.add_parser("heuristic", parents=[common], help="run one baseline heuristic")
    h.add_argument("--graph", required=True)
    h.add_argument("--method", required=True, choices=HEURISTICS)
    h.add_argument("--budget", type=int, required=True)
    h.add_argument("--weights", default="uniform:0.1")

    s = sub.add_parser("solve", parents=[common], help="run NaDS or CDS")
    s.add_argument("--graph", required=True)
    s.add_argument("--method", choices=("nads", "cds"), default="nads")
    s.add_argument("--budget", type=int, required=True)
    s.add_argument("--start", default="sd", help="sd|sg|kc|cc|ci|random:<seed>")
    s.add_argument("--weights", default="uniform:0.1")
    s.add_argument("--time-budget", dest="time_budget", type=float)
    s.add_argument("--eval-budget", dest="eval_budget", type=int)
    s.add_argument("--zeta0", type=float, default=0.01)
    s.add_argument("--delta", type=float, default=0.5)
    s.add_argument("--dmax", type=int, default=2)
    s.add_argument("--phase3", action="store_true")
    s.add_argument("--ordering", default="lexicographic", choices=("lexicographic", "degree_descending"))

    v = sub.add_parser("verify", parents=[common], help="check a seed set is a d-local maximum")
    v.add_argument("--graph", required=True)
    v.add_argument("--seeds", required=True, help="comma-separated external node ids")
    v.add_argument("--d", type=int, default=2)
    v.add_argument("--weights", default="uniform:0.1")

    gp = sub.add_parser("gaps", parents=[common], help="gap tables from a directory of trace files")
    gp.add_argument("--traces", required=True)
    return parser


def _params(args) -> GipParams:
    kwargs = {f.name: getattr(args, f.name) for f in dataclasses.fields(GipParams) if hasattr(args, f.name)}
    return GipParams(**kwargs)


def _to_internal(graph, ids) -> tuple[int, ...]:
    mapping = graph.internal_ids()
    try:
        return tuple(sorted(mapping[int(i)] for i in ids))
    except KeyError as exc:
        raise ValidationError(f"node {exc.args[0]} is not in the graph") from None
    except ValueError:
        raise ValidationError(f"bad node id list {ids}") from None


def _external(graph, seeds) -> list[int]:
    return [graph.external(i) for i in seeds]


def _emit(payload: dict) -> None:
    print(json.dumps(payload, indent=2))


def cmd_run(args) -> int:
    config = bench.load_config(args.config)
    overrides = {f.name: getattr(args, f.name) for f in dataclasses.fields(GipParams) if hasattr(args, f.name)}
    if overrides:
        config.params = dataclasses.replace(config.params, **overrides)
    if hasattr(args, "rng_seed"):
        config.starts.rng_seed = args.rng_seed
    out = getattr(args, "out", None) or config.output_dir
    report = bench.run_experiment(config)
    files = bench.emit_outputs(report, out)
    for row in report.summary_rows():
        print(f"{row['method']:>5} B={row['B']:<3} start={row['start']:<9} score={row['score']:.6f}")
    print(f"wrote {len(files)} files to {out}")
    return EXIT_OK


def cmd_heuristic(args) -> int:
    graph = read_graph(args.graph, WeightScheme.parse(args.weights))
    params = _params(args)
    ranking = run_heuristic(args.method, graph, params, args.budget)
    score = ranking.objective if ranking.objective is not None else objective(graph, params, ranking.selected)
    _emit({"method": args.method, "budget": args.budget,
           "seeds": _external(graph, ranking.selected.nodes), "score": score})
    return EXIT_OK


def cmd_solve(args) -> int:
    graph = read_graph(args.graph, WeightScheme.parse(args.weights))
    params = _params(args)
    params.check_feasible(graph.avg_edge_weight)
    if args.start.startswith("random"):
        _, _, seed = args.start.partition(":")
        start = pseudo_random_start(graph, args.budget, int(seed or getattr(args, "rng_seed", 0)))
    elif args.start in HEURISTICS:
        start = run_heuristic(args.start, graph, params, args.budget).selected
    else:
        raise ValidationError(f"unknown start {args.start!r}")
    config = SearchConfig(zeta0=args.zeta0, delta=args.delta, d_max=args.dmax,
                          phase3_enabled=args.phase3, time_budget=args.time_budget,
                          eval_budget=args.eval_budget, ordering=args.ordering,
                          rng_seed=getattr(args, "rng_seed", 0))
    solver = nads if args.method == "nads" else cds
    res = solver(graph, params, config, start=start)
    out = getattr(args, "out", None)
    if out:
        Path(out).mkdir(parents=True, exist_ok=True)
        record = bench.RunRecord(args.method, args.budget, args.start.replace(":", ""), res.seeds,
                                 res.score, res.trace[-1].elapsed, res.trace[-1].evals, res.trace)
        bench._write_csv(Path(out) / f"trace_{record.method}_{record.budget}_{record.start}.csv",
                         ["elapsed_s", "evals", "score"],
                         [(p.elapsed, p.evals, p.score) for p in res.trace])
    _emit({"method": args.method, "budget": args.budget,
           "start": _external(graph, start.nodes), "seeds": _external(graph, res.seeds.nodes),
           "score": res.score, "termination": str(res.termination),
           "evaluations": res.stats.evaluations, "stats": dataclasses.asdict(res.stats)})
    return EXIT_OK


def cmd_verify(args) -> int:
    graph = read_graph(args.graph, WeightScheme.parse(args.weights))
    params = _params(args)
    seeds = _to_internal(graph, [s for s in args.seeds.split(",") if s.strip()])
    report = verify_local_maximum(graph, params, SeedSet.of(seeds), args.d)
    base = objective(graph, params, SeedSet.of(seeds))
    _emit({"seeds": _external(graph, seeds), "d": args.d, "score": base,
           "is_local_maximum": report.is_local_maximum, "evaluated": report.evaluated,
           "witnesses": [{"seeds": _external(graph, w.nodes), "score": s}
                         for w, s in report.witnesses[:20]],
           "witness_count": len(report.witnesses)})
    return EXIT_OK


def cmd_gaps(args) -> int:
    grouped = bench.read_trace_dir(args.traces)
    out = Path(getattr(args, "out", None) or args.traces)
    out.mkdir(parents=True, exist_ok=True)
    for budget, traces in sorted(grouped.items()):
        m = max(points[-1].score for _, _, points in traces)
        series = bench.compute_gap_series(traces, m, None, "time")
        bench.write_gap_tables(series, out, budget)
        print(f"B={budget}: m={m:.6f}, {len(series)} runs -> {out}/gaps_{budget}.csv")
    return EXIT_OK


COMMANDS = {"run": cmd_run, "heuristic": cmd_heuristic, "solve": cmd_solve,
            "verify": cmd_verify, "gaps": cmd_gaps}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except DivergenceError as exc:
        print(f"infeasible parameters: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (ValidationError, SizeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except NadsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
