"""Experiment driver: multi-method runs, relative-gap series and CSV output."""

from __future__ import annotations

import configparser
import csv
import logging
import os
import time
from collections import defaultdict
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from .errors import ValidationError
from .gip import EvalCache, GipParams, SeedSet, objective
from .graph import WeightScheme, WeightedGraph, read_graph, write_id_map
from .heuristics import HEURISTICS, pseudo_random_start, run_heuristic
from .search import SearchConfig, SearchResult, TracePoint, cds, nads

log = logging.getLogger(__name__)

METHODS = ("nads", "cds") + HEURISTICS
GAP_PERCENTS = (15, 30, 50, 75, 100)
LONG_MULTIPLIER = 200.0  # seconds per unit of budget, full-length runs
SHORT_MULTIPLIER = 2.0  # quick runs


@dataclass
class StartSpec:
    kind: str = "heuristic"  # heuristic | pseudo_random
    heuristic: str = "sd"
    count: int = 10
    rng_seed: int = 0

    @classmethod
    def parse(cls, text: str) -> "StartSpec":
        """``sd`` / ``heuristic:sd`` or ``pseudo_random:<count>:<seed>``."""
        parts = [p.strip() for p in text.strip().split(":")]
        if parts[0] in ("pseudo_random", "random"):
            try:
                count = int(parts[1]) if len(parts) > 1 else 10
                seed = int(parts[2]) if len(parts) > 2 else 0
            except ValueError:
                raise ValidationError(f"bad pseudo_random start {text!r}") from None
            if count < 1:
                raise ValidationError("pseudo_random count must be >= 1")
            return cls("pseudo_random", count=count, rng_seed=seed)
        name = parts[1] if parts[0] == "heuristic" and len(parts) > 1 else parts[0]
        if name not in HEURISTICS:
            raise ValidationError(f"unknown start heuristic {name!r}")
        return cls("heuristic", heuristic=name)

    def labels(self) -> list[str]:
        if self.kind == "heuristic":
            return [self.heuristic]
        return [f"random{i}" for i in range(self.count)]


@dataclass
class ExperimentConfig:
    graph_path: str
    methods: list[str]
    budgets: list[int]
    weights: WeightScheme = field(default_factory=WeightScheme)
    params: GipParams = field(default_factory=GipParams)
    search: SearchConfig = field(default_factory=SearchConfig)
    starts: StartSpec = field(default_factory=StartSpec)
    time_budget_per_B: float | None = None
    eval_budget: int | None = None
    output_dir: str = "results"
    dataset: str | None = None

    def __post_init__(self):
        if not self.methods:
            raise ValidationError("at least one method is required")
        bad = [m for m in self.methods if m not in METHODS]
        if bad:
            raise ValidationError(f"unknown methods {bad}; expected a subset of {METHODS}")
        if not self.budgets or any(b < 1 for b in self.budgets):
            raise ValidationError("budgets must be a non-empty list of positive integers")
        if self.time_budget_per_B is not None and self.time_budget_per_B <= 0:
            raise ValidationError("time_budget_per_B must be positive")
        if self.dataset is None:
            name = Path(str(self.graph_path)).name
            for suffix in (".gz", ".txt", ".edges", ".csv"):
                name = name.removesuffix(suffix)
            self.dataset = name.replace("synthetic:", "").replace(":", "_") or "graph"


def _split(value: str) -> list[str]:
    return [v.strip() for v in value.replace(";", ",").split(",") if v.strip()]


def _opt_float(value):
    return None if value in (None, "", "none") else float(value)


def load_config(path: str | os.PathLike) -> ExperimentConfig:
    """Read an INI experiment file with ``[experiment]``, ``[gip]`` and ``[search]`` sections."""
    parser = configparser.ConfigParser()
    with open(path) as fh:
        parser.read_file(fh)
    if "experiment" not in parser:
        raise ValidationError(f"{path}: missing [experiment] section")
    return config_from_sections({s: dict(parser[s]) for s in parser.sections()})


def config_from_sections(sections: dict) -> ExperimentConfig:
    # keys are case-insensitive (configparser lowercases them anyway)
    sections = {name: {k.lower(): v for k, v in body.items()} for name, body in sections.items()}
    exp = sections.get("experiment", {})
    try:
        gip_kwargs = {}
        for f in fields(GipParams):
            raw = sections.get("gip", {}).get(f.name)
            if raw is None:
                continue
            if f.name == "include_t0":
                gip_kwargs[f.name] = raw.strip().lower() in ("1", "true", "yes", "on")
            elif f.name == "max_steps":
                gip_kwargs[f.name] = int(raw)
            else:
                gip_kwargs[f.name] = float(raw)
        srch = sections.get("search", {})
        search = SearchConfig(
            zeta0=float(srch.get("zeta0", 0.01)),
            delta=float(srch.get("delta", 0.5)),
            d_max=int(srch.get("d_max", 2)),
            phase3_enabled=srch.get("phase3", srch.get("phase3_enabled", "false")).lower()
            in ("1", "true", "yes", "on"),
            ordering=srch.get("ordering", "lexicographic"),
            rng_seed=int(srch.get("rng_seed", exp.get("rng_seed", 0))),
        )
        eval_budget = exp.get("eval_budget")
        return ExperimentConfig(
            graph_path=exp["graph_path"],
            methods=_split(exp.get("methods", "")),
            budgets=[int(b) for b in _split(exp.get("budgets", ""))],
            weights=WeightScheme.parse(exp.get("weights", "uniform:0.1")),
            params=GipParams(**gip_kwargs),
            search=search,
            starts=StartSpec.parse(exp.get("starts", "sd")),
            time_budget_per_B=_opt_float(exp.get("time_budget_per_b")),
            eval_budget=int(eval_budget) if eval_budget not in (None, "", "none") else None,
            output_dir=exp.get("output_dir", "results"),
            dataset=exp.get("dataset"),
        )
    except KeyError as exc:
        raise ValidationError(f"missing config key {exc}") from None
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ValidationError):
            raise
        raise ValidationError(f"bad config value: {exc}") from None


# -- running -----------------------------------------------------------------

@dataclass
class RunRecord:
    method: str
    budget: int
    start: str
    seeds: SeedSet
    score: float
    time_s: float
    evals: int
    trace: list[TracePoint]
    termination: str = ""


@dataclass
class ExperimentReport:
    dataset: str
    config: ExperimentConfig
    graph: WeightedGraph
    runs: list[RunRecord]
    gaps: dict = field(default_factory=dict)  # budget -> list[GapSeries]

    def summary_rows(self) -> list[dict]:
        rows = []
        grouped = defaultdict(list)
        for r in self.runs:
            rows.append(dict(method=r.method, B=r.budget, start=r.start, score=r.score,
                             time_s=r.time_s, evals=r.evals))
            if r.start.startswith("random"):
                grouped[(r.method, r.budget)].append(r)
        for (method, budget), runs in grouped.items():
            scores = [r.score for r in runs]
            rows.append(dict(method=method, B=budget, start="mean", score=float(np.mean(scores)),
                             time_s=float(np.mean([r.time_s for r in runs])),
                             evals=float(np.mean([r.evals for r in runs]))))
            best = max(runs, key=lambda r: r.score)
            rows.append(dict(method=method, B=budget, start="best", score=best.score,
                             time_s=best.time_s, evals=best.evals))
        return rows


def run_experiment(config: ExperimentConfig, graph: WeightedGraph | None = None) -> ExperimentReport:
    """Run every (method, budget, start) combination of the config."""
    if graph is None:
        graph = read_graph(config.graph_path, config.weights)
    params = config.params
    params.check_feasible(graph.avg_edge_weight)
    for b in config.budgets:
        if b > graph.node_count:
            raise ValidationError(f"budget {b} exceeds node count {graph.node_count}")

    runs: list[RunRecord] = []
    for budget in config.budgets:
        time_budget = None if config.time_budget_per_B is None else config.time_budget_per_B * budget
        starts = _start_points(config, graph, params, budget)
        for method in config.methods:
            if method in HEURISTICS:
                runs.append(_run_heuristic(method, graph, params, budget))
                continue
            for label, start in starts:
                search = SearchConfig(**{**config.search.__dict__, "time_budget": time_budget,
                                         "eval_budget": config.eval_budget})
                solver = nads if method == "nads" else cds
                t0 = time.perf_counter()
                res: SearchResult = solver(graph, params, search, start=start)
                elapsed = time.perf_counter() - t0
                log.info("%s B=%d start=%s -> %.6f (%s)", method, budget, label, res.score,
                         res.termination)
                runs.append(RunRecord(method, budget, label, res.seeds, res.score, elapsed,
                                      res.trace[-1].evals, res.trace, str(res.termination)))

    report = ExperimentReport(config.dataset, config, graph, runs)
    for budget in config.budgets:
        mine = [r for r in runs if r.budget == budget]
        m = max(r.score for r in mine)
        span, axis = _gap_span(config, budget, mine)
        try:
            report.gaps[budget] = compute_gap_series(mine, m, span, axis)
        except ValidationError as exc:
            log.warning("no gap table for B=%d: %s", budget, exc)
    return report


def _start_points(config, graph, params, budget):
    spec = config.starts
    if spec.kind == "heuristic":
        return [(spec.heuristic, run_heuristic(spec.heuristic, graph, params, budget).selected)]
    return [(f"random{i}", pseudo_random_start(graph, budget, spec.rng_seed + i))
            for i in range(spec.count)]


def _run_heuristic(method, graph, params, budget) -> RunRecord:
    cache = EvalCache()
    t0 = time.perf_counter()
    ranking = run_heuristic(method, graph, params, budget, cache=cache)
    elapsed = time.perf_counter() - t0
    score = ranking.objective
    if score is None:
        score = objective(graph, params, ranking.selected, cache)
    evals = cache.eval_count
    return RunRecord(method, budget, "none", ranking.selected, score, elapsed, evals,
                     [TracePoint(elapsed, evals, score)])


def _gap_span(config, budget, runs):
    if config.time_budget_per_B is not None:
        return config.time_budget_per_B * budget, "time"
    if config.eval_budget is not None:
        return float(config.eval_budget), "evals"
    return max(r.trace[-1].elapsed for r in runs) or 1.0, "time"


# -- gaps --------------------------------------------------------------------

@dataclass
class GapSeries:
    method: str
    start: str
    reference_m: float
    rows: list[tuple[float, int, float]]  # (elapsed_s, evals, gap)
    sampled: dict[int, float]  # percent of budget -> gap


def compute_gap_series(traces, reference_m: float, span: float | None = None,
                       axis: str = "time") -> list[GapSeries]:
    """Relative gaps (m - s(t)) / m of each run's incumbent against ``reference_m``.

    ``traces`` holds RunRecords or ``(method, start, [TracePoint...])`` tuples.
    Gaps are also sampled at 15/30/50/75/100% of ``span`` on the chosen axis
    (``time`` or ``evals``); before a run's first point the gap is 1.
    """
    if not reference_m > 0:
        raise ValidationError(f"degenerate reference m = {reference_m}; gaps need m > 0")
    out = []
    for item in traces:
        if isinstance(item, RunRecord):
            method, start, trace = item.method, item.start, item.trace
        else:
            method, start, trace = item
        rows = [(p.elapsed, p.evals, _gap(p.score, reference_m)) for p in trace]
        if span is None:
            span_here = max((p.elapsed if axis == "time" else p.evals) for p in trace) or 1.0
        else:
            span_here = span
        sampled = {}
        for pct in GAP_PERCENTS:
            cut = span_here * pct / 100.0
            g = 1.0
            for p, row in zip(trace, rows):
                pos = p.elapsed if axis == "time" else p.evals
                if pos <= cut:
                    g = row[2]
            if pct == 100:
                g = rows[-1][2] if rows else 1.0
            sampled[pct] = g
        out.append(GapSeries(method, start, reference_m, rows, sampled))
    return out


def _gap(score: float, m: float) -> float:
    g = (m - score) / m
    return min(max(g, 0.0), 1.0)


# -- output ------------------------------------------------------------------

def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.6f}"


def _write_csv(path: Path, header: list[str], rows) -> None:
    try:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in rows:
                w.writerow([v if isinstance(v, str) else _fmt(v) for v in row])
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc


def emit_outputs(report: ExperimentReport, output_dir: str | os.PathLike) -> list[Path]:
    """Write summary.csv, one trace file per run, gap tables and the id map."""
    out = Path(output_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create {out}: {exc.strerror or exc}") from exc
    written = []

    path = out / "summary.csv"
    rows = [(report.dataset, r["method"], r["B"], r["start"], r["score"], r["time_s"], r["evals"])
            for r in report.summary_rows()]
    _write_csv(path, ["dataset", "method", "B", "start", "score", "time_s", "evals"], rows)
    written.append(path)

    for r in report.runs:
        path = out / f"trace_{r.method}_{r.budget}_{r.start}.csv"
        _write_csv(path, ["elapsed_s", "evals", "score"],
                   [(p.elapsed, p.evals, p.score) for p in r.trace])
        written.append(path)

    for budget, series in sorted(report.gaps.items()):
        written.extend(write_gap_tables(series, out, budget))

    path = out / f"{report.dataset}.ids"
    write_id_map(report.graph, path)
    written.append(path)
    return written


def write_gap_tables(series: list[GapSeries], out: Path, budget: int) -> list[Path]:
    cols = [f"g{p}" for p in GAP_PERCENTS]
    rows = [(s.method, s.start, *[s.sampled[p] for p in GAP_PERCENTS]) for s in series]
    by_method = defaultdict(list)
    for s in series:
        by_method[s.method].append(s)
    for method, group in by_method.items():
        if len(group) > 1:
            rows.append((method, "mean", *[float(np.mean([s.sampled[p] for s in group]))
                                           for p in GAP_PERCENTS]))
    table = out / f"gaps_{budget}.csv"
    _write_csv(table, ["method", "start", *cols], rows)
    full = out / f"gap_series_{budget}.csv"
    _write_csv(full, ["method", "start", "elapsed_s", "evals", "gap"],
               [(s.method, s.start, e, k, g) for s in series for e, k, g in s.rows])
    return [table, full]


def read_trace_dir(directory: str | os.PathLike) -> dict[int, list[tuple[str, str, list[TracePoint]]]]:
    """Load ``trace_<method>_<B>_<start>.csv`` files grouped by budget."""
    grouped = defaultdict(list)
    files = sorted(Path(directory).glob("trace_*.csv"))
    if not files:
        raise OSError(f"no trace_*.csv files in {directory}")
    for path in files:
        try:
            _, method, budget, start = path.stem.split("_", 3)
            budget = int(budget)
        except ValueError:
            raise ValidationError(f"unexpected trace file name {path.name}") from None
        with open(path, newline="") as fh:
            points = [TracePoint(float(r["elapsed_s"]), int(float(r["evals"])), float(r["score"]))
                      for r in csv.DictReader(fh)]
        if points:
            grouped[budget].append((method, start, points))
    return dict(grouped)
