"""Combinatorial direct search over fixed-size seed sets (CDS and NaDS)."""

from __future__ import annotations

import itertools
import logging
import math
import time
from bisect import insort
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator

import numpy as np

from .errors import ValidationError
from .gip import BARRIER, EvalCache, GipParams, SeedSet, objective
from .graph import WeightedGraph

log = logging.getLogger(__name__)

ORDERINGS = ("lexicographic", "degree_descending")


@dataclass
class SearchConfig:
    zeta0: float = 0.01
    delta: float = 0.5
    d_max: int = 2
    phase3_enabled: bool = False
    time_budget: float | None = None
    eval_budget: int | None = None
    ordering: str = "lexicographic"
    # search_step(z, score, rng) -> iterable of candidate node tuples
    search_step: Callable | None = None
    rng_seed: int = 0

    def __post_init__(self):
        if not 0 < self.zeta0 < 1 or not 0 < self.delta < 1:
            raise ValidationError("zeta0 and delta must lie in (0, 1)")
        if self.d_max < 2 or self.d_max % 2:
            raise ValidationError(f"d_max must be an even integer >= 2, got {self.d_max}")
        if self.ordering not in ORDERINGS:
            raise ValidationError(f"ordering must be one of {ORDERINGS}")
        if self.time_budget is not None and self.time_budget <= 0:
            raise ValidationError("time_budget must be positive")
        if self.eval_budget is not None and self.eval_budget < 0:
            raise ValidationError("eval_budget must be non-negative")


@dataclass(frozen=True)
class Termination:
    kind: str  # local_optimum | time_budget | eval_budget
    d: int | None = None

    def __str__(self):
        return f"local_optimum({self.d})" if self.kind == "local_optimum" else self.kind


@dataclass
class TracePoint:
    elapsed: float
    evals: int
    score: float


@dataclass
class SearchStats:
    search_accepts: int = 0
    poll_accepts: int = 0
    phase1_accepts: int = 0
    phase2_accepts: int = 0
    phase3_accepts: int = 0
    polls: int = 0
    candidates_scanned: int = 0
    filtered: int = 0
    evaluations: int = 0
    cache_hits: int = 0


@dataclass
class SearchResult:
    seeds: SeedSet
    score: float
    trace: list[TracePoint]
    termination: Termination
    stats: SearchStats = field(default_factory=SearchStats)


@dataclass(frozen=True)
class PollOutcome:
    kind: str  # sufficient | insufficient_best | exhausted
    point: tuple[int, ...] | None = None
    score: float = BARRIER
    scanned: int = 0


class BudgetExhausted(Exception):
    def __init__(self, kind):
        super().__init__(kind)
        self.kind = kind


class Evaluator:
    """Barrier objective bound to one instance, with budget accounting.

    Only cache misses count against ``eval_budget``; the first evaluation
    (the start point) is free. Budgets are checked before each candidate.
    """

    def __init__(self, graph: WeightedGraph, params: GipParams, budget: int,
                 cache: EvalCache | None = None, eval_budget: int | None = None,
                 time_budget: float | None = None):
        self.graph = graph
        self.params = params
        self.budget = budget
        self.cache = cache if cache is not None else EvalCache()
        self.eval_budget = eval_budget
        self.started = time.perf_counter()
        self.deadline = None if time_budget is None else self.started + time_budget
        self.evals = 0
        self.fresh = 0
        self.hits = 0

    def elapsed(self) -> float:
        return time.perf_counter() - self.started

    def __call__(self, nodes: tuple[int, ...], free: bool = False) -> float:
        if not free and self.deadline is not None and time.perf_counter() >= self.deadline:
            raise BudgetExhausted("time_budget")
        key = tuple(nodes)
        hit = self.cache.lookup(key)
        if hit is not None:
            self.hits += 1
            return hit
        if not free:
            if self.eval_budget is not None and self.evals >= self.eval_budget:
                raise BudgetExhausted("eval_budget")
            self.evals += 1
        self.fresh += 1
        return objective(self.graph, self.params, SeedSet(key, self.budget), self.cache)


# -- neighbourhoods ----------------------------------------------------------

def _check_d(d: int) -> None:
    if d < 2 or d % 2:
        raise ValidationError(f"d must be an even integer >= 2, got {d}")


def _swaps(z: tuple[int, ...], k: int, adds: list[int]) -> Iterator[tuple[int, ...]]:
    """All k-swaps of ``z``: removed tuples ascending, then ``adds`` in order."""
    if k == 1:
        for r in z:
            rest = [v for v in z if v != r]
            for a in adds:
                y = list(rest)
                insort(y, a)
                yield tuple(y)
        return
    for removed in itertools.combinations(z, k):
        gone = set(removed)
        rest = [v for v in z if v not in gone]
        for added in itertools.combinations(adds, k):
            yield tuple(sorted(rest + list(added)))


def _non_seeds(z: tuple[int, ...], n: int) -> list[int]:
    zs = set(z)
    return [v for v in range(n) if v not in zs]


def swap_neighborhood(z: SeedSet | tuple[int, ...], d: int, n: int) -> Iterator[SeedSet]:
    """Every mesh point within L1 distance ``d`` of ``z`` (excluding ``z``).

    Ordered by swap size, then removed tuple, then added tuple.
    """
    _check_d(d)
    nodes = tuple(z.nodes if isinstance(z, SeedSet) else sorted(z))
    budget = len(nodes)
    adds = _non_seeds(nodes, n)
    for k in range(1, min(d // 2, budget, len(adds)) + 1):
        for y in _swaps(nodes, k, adds):
            yield SeedSet(y, budget)


def restricted_add_candidates(graph: WeightedGraph, z: SeedSet | tuple[int, ...]) -> set[int]:
    """Nodes allowed in a network-aware neighbour: seeds and their neighbours."""
    nodes = z.nodes if isinstance(z, SeedSet) else tuple(z)
    allowed = set(nodes)
    for v in nodes:
        allowed.update(graph.neighbors(v).tolist())
    return allowed


def phase_streams(graph: WeightedGraph, z: tuple[int, ...], ordering: str = "lexicographic"):
    """Split N(z, 2) into the C(z)-restricted stream and its remainder.

    Returns ``(phase1_adds, phase2_adds)``; each stream is ``_swaps(z, 1, adds)``.
    """
    allowed = restricted_add_candidates(graph, z)
    zs = set(z)
    near = [v for v in sorted(allowed) if v not in zs]
    far = [v for v in range(graph.node_count) if v not in allowed]
    if ordering == "degree_descending":
        deg = graph.degree
        near.sort(key=lambda v: (-deg[v], v))
        far.sort(key=lambda v: (-deg[v], v))
    return near, far


def _ordered_adds(graph: WeightedGraph, z: tuple[int, ...], ordering: str) -> list[int]:
    adds = _non_seeds(z, graph.node_count)
    if ordering == "degree_descending":
        deg = graph.degree
        adds.sort(key=lambda v: (-deg[v], v))
    return adds


# -- poll --------------------------------------------------------------------

def is_sufficient(candidate: float, incumbent: float, zeta: float) -> bool:
    if incumbent <= 0:
        return candidate > incumbent
    return candidate > (1 + zeta) * incumbent


def poll(evaluator: Callable, z_score: float, candidates: Iterable, zeta: float) -> PollOutcome:
    """Scan ``candidates`` until one is a sufficient improvement over ``z_score``.

    Falls back to the best strict improvement seen, or ``exhausted``.
    """
    best, best_score, scanned = None, z_score, 0
    for y in candidates:
        nodes = y.nodes if isinstance(y, SeedSet) else y
        s = evaluator(nodes)
        scanned += 1
        if is_sufficient(s, z_score, zeta):
            return PollOutcome("sufficient", nodes, s, scanned)
        if s > best_score:
            best, best_score = nodes, s
    if best is not None:
        return PollOutcome("insufficient_best", best, best_score, scanned)
    return PollOutcome("exhausted", None, z_score, scanned)


def is_local_maximum(evaluator: Callable, z: SeedSet | tuple[int, ...], d: int, n: int | None = None) -> bool:
    """True when no point of N(z, d) scores above ``z``; scans all of it."""
    nodes = z.nodes if isinstance(z, SeedSet) else tuple(sorted(z))
    if n is None:
        n = evaluator.graph.node_count
    base = evaluator(nodes)
    better = False
    for y in swap_neighborhood(nodes, d, n):
        if evaluator(y.nodes) > base:
            better = True
    return not better


# -- drivers -----------------------------------------------------------------

def _run(graph, params, config, start, network_aware, cache):
    if not isinstance(start, SeedSet):
        start = SeedSet.of(start)
    budget = start.budget
    if not start.in_mesh(graph.node_count):
        raise ValidationError(f"start {start.nodes} is not a feasible {budget}-seed set")
    params.check_feasible(graph.avg_edge_weight)
    ev = Evaluator(graph, params, budget, cache, config.eval_budget, config.time_budget)
    rng = np.random.default_rng(config.rng_seed)
    stats = SearchStats()

    z = start.nodes
    score = ev(z, free=True)
    trace = [TracePoint(ev.elapsed(), ev.evals, score)]
    zeta = config.zeta0
    termination = None

    while termination is None:
        try:
            outcome, phase, d = _iterate(graph, config, ev, z, score, zeta, rng, network_aware, stats)
        except BudgetExhausted as stop:
            termination = Termination(stop.kind)
            break
        if outcome.kind == "exhausted":
            termination = Termination("local_optimum", d)
            break
        z, score = outcome.point, outcome.score
        trace.append(TracePoint(ev.elapsed(), ev.evals, score))
        setattr(stats, f"{phase}_accepts", getattr(stats, f"{phase}_accepts") + 1)
        if outcome.kind == "insufficient_best":
            zeta *= config.delta
        log.debug("accepted %s score=%.6g via %s (zeta=%.3g)", z, score, phase, zeta)

    stats.evaluations = ev.fresh
    stats.cache_hits = ev.hits
    return SearchResult(SeedSet(z, budget), score, trace, termination, stats)


def _iterate(graph, config, ev, z, score, zeta, rng, network_aware, stats):
    n = graph.node_count
    if config.search_step is not None:
        trial = config.search_step(SeedSet(z, len(z)), score, rng)
        out = poll(ev, score, trial, zeta)
        if out.kind == "sufficient":
            return out, "search", 2

    stats.polls += 1
    if not network_aware:
        out = poll(ev, score, _swaps(z, 1, _ordered_adds(graph, z, config.ordering)), zeta)
        stats.candidates_scanned += out.scanned
        return out, "poll", 2

    near, far = phase_streams(graph, z, config.ordering)
    stats.filtered += len(z) * len(far)
    out = poll(ev, score, _swaps(z, 1, near), zeta)
    stats.candidates_scanned += out.scanned
    if out.kind != "exhausted":
        return out, "phase1", 2
    out = poll(ev, score, _swaps(z, 1, far), zeta)
    stats.candidates_scanned += out.scanned
    if out.kind != "exhausted":
        return out, "phase2", 2

    d = 2
    if config.phase3_enabled:
        adds = _ordered_adds(graph, z, config.ordering)
        while d < config.d_max:
            d += 2
            k = d // 2
            if k > min(len(z), len(adds)):
                continue
            out = poll(ev, score, _swaps(z, k, adds), zeta)
            stats.candidates_scanned += out.scanned
            if out.kind != "exhausted":
                return out, "phase3", d
    return out, "phase3" if d > 2 else "phase2", d


def cds(graph: WeightedGraph, params: GipParams, config: SearchConfig | None = None,
        start: SeedSet | None = None, budget: int | None = None,
        cache: EvalCache | None = None) -> SearchResult:
    """Customized direct search: poll the full 1-swap neighbourhood each iteration.

    Without ``start`` the Katz top-``budget`` set is used.
    """
    config = config or SearchConfig()
    if start is None:
        if budget is None:
            raise ValidationError("need a start point or a budget")
        from .heuristics import katz_top
        start = katz_top(graph, params, budget).selected
    return _run(graph, params, config, start, False, cache)


def nads(graph: WeightedGraph, params: GipParams, config: SearchConfig | None = None,
         start: SeedSet | None = None, budget: int | None = None,
         cache: EvalCache | None = None) -> SearchResult:
    """Network-aware direct search.

    Each poll first tries swap-ins adjacent to the current seeds, then the
    rest of the 1-swap neighbourhood, then (optionally) larger swaps up to
    ``config.d_max``. Without ``start`` the Single Discount set is used.
    """
    config = config or SearchConfig()
    if start is None:
        if budget is None:
            raise ValidationError("need a start point or a budget")
        from .heuristics import single_discount
        start = single_discount(graph, budget).selected
    return _run(graph, params, config, start, True, cache)
