"""Baseline seed-selection heuristics and start-point generators.

Every ranking breaks ties towards the lowest node id.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DivergenceError, ValidationError
from .gip import EvalCache, GipParams, SeedSet, propagate
from .graph import WeightedGraph, arc_positions

HEURISTICS = ("sd", "sg", "kc", "cc", "ci")


@dataclass
class HeuristicRanking:
    scores: np.ndarray
    selected: SeedSet
    tie_breaks: int = 0
    order: list[int] | None = None  # selection order, when meaningful
    objective: float | None = None


def _check_budget(graph: WeightedGraph, budget: int) -> None:
    if not 0 <= budget <= graph.node_count:
        raise ValidationError(f"budget {budget} out of range for {graph.node_count} nodes")


def _top(scores: np.ndarray, budget: int, *secondary: np.ndarray):
    """Indices of the ``budget`` best nodes under (scores, *secondary) descending, id ascending."""
    ids = np.arange(len(scores))
    keys = (ids,) + tuple(-s for s in reversed(secondary)) + (-scores,)
    order = np.lexsort(keys)
    chosen = order[:budget]
    ties = 0
    if 0 < budget < len(scores):
        last = order[budget - 1]
        same = scores == scores[last]
        for s in secondary:
            same &= s == s[last]
        ties = int(same.sum()) - 1
    return chosen, ties


def single_discount(graph: WeightedGraph, budget: int) -> HeuristicRanking:
    """Pick the highest-degree node, discount its neighbours by one, repeat."""
    _check_budget(graph, budget)
    score = graph.degree.astype(np.float64)
    taken = np.zeros(graph.node_count, dtype=bool)
    picked_score = np.zeros(graph.node_count)
    order, ties = [], 0
    for _ in range(budget):
        masked = np.where(taken, -np.inf, score)
        u = int(np.argmax(masked))
        ties += int(np.count_nonzero(masked == masked[u])) - 1
        order.append(u)
        taken[u] = True
        picked_score[u] = score[u]
        nb = graph.neighbors(u)
        nb = nb[~taken[nb]]
        score[nb] -= 1
    scores = np.where(taken, picked_score, score)
    return HeuristicRanking(scores, SeedSet.of(order), ties, order)


def simple_greedy(graph: WeightedGraph, params: GipParams, budget: int,
                  cache: EvalCache | None = None) -> HeuristicRanking:
    """Add the node with the largest marginal gain, re-evaluating every candidate each round."""
    _check_budget(graph, budget)
    params.check_feasible(graph.avg_edge_weight)
    cache = cache if cache is not None else EvalCache()
    n = graph.node_count
    chosen: list[int] = []
    current = 0.0
    gains = np.zeros(n)
    ties = 0
    for _ in range(budget):
        best, best_score, tied = -1, -np.inf, 0
        for v in range(n):
            if v in chosen:
                continue
            key = tuple(sorted(chosen + [v]))
            s = cache.lookup(key)
            if s is None:
                s = propagate(graph, params, key).score
                cache.store(key, s)
            if s > best_score:
                best, best_score, tied = v, s, 0
            elif s == best_score:
                tied += 1
        ties += tied
        gains[best] = best_score - current
        current = best_score
        chosen.append(best)
    return HeuristicRanking(gains, SeedSet.of(chosen), ties, chosen, objective=current)


def katz_scores(graph: WeightedGraph, gamma: float, tol: float = 1e-10,
                max_terms: int = 10_000) -> np.ndarray:
    """Katz centrality ``sum_{t>=1} ((1-gamma) W)^t 1`` by repeated sparse products."""
    beta = 1.0 - gamma
    n = graph.node_count
    src, tgt, w = graph.arc_sources, graph.csr_targets, graph.csr_weights

    def step(v):
        return beta * np.bincount(src, weights=w * v[tgt], minlength=n)

    total = np.zeros(n)
    v = step(np.ones(n))
    prev = np.inf
    growing = 0
    for _ in range(max_terms):
        total += v
        size = float(np.max(np.abs(v), initial=0.0))
        if size < tol:
            break
        if size > prev:
            growing += 1
            if growing >= 10:
                raise DivergenceError(f"Katz series diverges (increment ratio {size / prev:.4g})")
        else:
            growing = 0
        prev = size
        v = step(v)
    return total


def katz_top(graph: WeightedGraph, params: GipParams, budget: int,
             tol: float = 1e-10, max_terms: int = 10_000) -> HeuristicRanking:
    _check_budget(graph, budget)
    c = params.h0 * katz_scores(graph, params.gamma, tol, max_terms)
    chosen, ties = _top(c, budget)
    return HeuristicRanking(c, SeedSet.of(chosen.tolist()), ties, chosen.tolist())


def core_numbers(graph: WeightedGraph) -> np.ndarray:
    """Core number of every node (bucket peeling, Batagelj-Zaversnik)."""
    n = graph.node_count
    deg = graph.degree.astype(np.int64).copy()
    max_deg = int(deg.max(initial=0))
    bins = np.bincount(deg, minlength=max_deg + 1)
    start = np.concatenate([[0], np.cumsum(bins)[:-1]])
    order = np.argsort(deg, kind="stable")
    pos = np.empty(n, dtype=np.int64)
    pos[order] = np.arange(n)
    vert = order.copy()
    offsets, targets = graph.csr_offsets, graph.csr_targets
    deg_l, pos_l, vert_l, start_l = deg.tolist(), pos.tolist(), vert.tolist(), start.tolist()
    for i in range(n):
        v = vert_l[i]
        for u in targets[offsets[v]:offsets[v + 1]].tolist():
            if deg_l[u] > deg_l[v]:
                du = deg_l[u]
                pu = pos_l[u]
                pw = start_l[du]
                w = vert_l[pw]
                if u != w:
                    vert_l[pu], vert_l[pw] = w, u
                    pos_l[u], pos_l[w] = pw, pu
                start_l[du] += 1
                deg_l[u] -= 1
    return np.array(deg_l, dtype=np.int64)


def kcore_top(graph: WeightedGraph, budget: int) -> HeuristicRanking:
    """Rank by core number, then degree, then id."""
    _check_budget(graph, budget)
    core = core_numbers(graph)
    chosen, ties = _top(core.astype(np.float64), budget, graph.degree.astype(np.float64))
    return HeuristicRanking(core.astype(np.float64), SeedSet.of(chosen.tolist()), ties, chosen.tolist())


def _ci_values(graph: WeightedGraph, radius: int, alive: np.ndarray) -> np.ndarray:
    """(k_i - 1) * sum of (k_j - 1) over nodes at distance exactly ``radius``, on the alive subgraph."""
    n = graph.node_count
    offsets, targets = graph.csr_offsets, graph.csr_targets
    alive_arc = alive[targets] & alive[graph.arc_sources]
    k = np.bincount(graph.arc_sources[alive_arc], minlength=n)
    excess = np.where(alive, np.maximum(k - 1, 0), 0)
    ci = np.zeros(n)
    seen = np.zeros(n, dtype=bool)
    for i in np.flatnonzero(alive & (excess > 0)):
        seen[:] = False
        seen[i] = True
        frontier = np.array([i])
        for _ in range(radius):
            pos = arc_positions(offsets, frontier)
            nxt = targets[pos[alive_arc[pos]]]
            nxt = nxt[~seen[nxt]]
            if nxt.size == 0:
                frontier = nxt
                break
            frontier = np.unique(nxt)
            seen[frontier] = True
        ci[i] = excess[i] * float(excess[frontier].sum())
    return ci


def collective_influence(graph: WeightedGraph, budget: int, radius: int = 2,
                         mode: str = "static") -> HeuristicRanking:
    """Collective Influence ranking on the ball boundary of the given radius.

    ``adaptive`` removes each pick and recomputes CI before the next one.
    """
    _check_budget(graph, budget)
    if radius < 1:
        raise ValidationError("radius must be >= 1")
    alive = np.ones(graph.node_count, dtype=bool)
    ci = _ci_values(graph, radius, alive)
    if mode == "static":
        chosen, ties = _top(ci, budget)
        return HeuristicRanking(ci, SeedSet.of(chosen.tolist()), ties, chosen.tolist())
    if mode != "adaptive":
        raise ValidationError(f"unknown CI mode {mode!r}")
    first_scores = ci.copy()
    order, ties = [], 0
    for _ in range(budget):
        masked = np.where(alive, ci, -np.inf)
        u = int(np.argmax(masked))
        ties += int(np.count_nonzero(masked == masked[u])) - 1
        order.append(u)
        alive[u] = False
        ci = _ci_values(graph, radius, alive)
    return HeuristicRanking(first_scores, SeedSet.of(order), ties, order)


def pseudo_random_start(graph: WeightedGraph, budget: int, rng_seed: int) -> SeedSet:
    """Draw ``budget`` nodes uniformly from the Single Discount top-4B list."""
    _check_budget(graph, budget)
    pool = single_discount(graph, min(4 * budget, graph.node_count)).order
    rng = np.random.default_rng(rng_seed)
    picks = rng.choice(np.array(pool, dtype=np.int64), size=budget, replace=False)
    return SeedSet.of(sorted(picks.tolist()))


def run_heuristic(name: str, graph: WeightedGraph, params: GipParams, budget: int,
                  cache: EvalCache | None = None, ci_radius: int = 2,
                  ci_mode: str = "static") -> HeuristicRanking:
    if name == "sd":
        return single_discount(graph, budget)
    if name == "sg":
        return simple_greedy(graph, params, budget, cache)
    if name == "kc":
        return katz_top(graph, params, budget)
    if name == "cc":
        return kcore_top(graph, budget)
    if name == "ci":
        return collective_influence(graph, budget, ci_radius, ci_mode)
    raise ValidationError(f"unknown heuristic {name!r}; expected one of {HEURISTICS}")
