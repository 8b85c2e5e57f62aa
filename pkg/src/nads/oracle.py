"""Brute-force reference implementations used to certify the engine and search.

Nothing here calls into ``nads.gip`` propagation: the dense iteration below
is written against the raw CSR arrays so that agreement between the two
paths means something.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DivergenceError, SizeError, ValidationError
from .gip import GipParams, SeedSet
from .graph import WeightedGraph

DENSE_GUARD = 10_000
ENUM_GUARD = 10**6


@dataclass
class OracleReport:
    optimum: SeedSet
    optimum_score: float
    evaluated: int
    witnesses: list[tuple[SeedSet, float]] = field(default_factory=list)

    @property
    def is_local_maximum(self) -> bool:
        return not self.witnesses


def dense_matrix(graph: WeightedGraph) -> np.ndarray:
    n = graph.node_count
    if n > DENSE_GUARD:
        raise SizeError(f"dense oracle limited to {DENSE_GUARD} nodes, graph has {n}")
    W = np.zeros((n, n))
    for i in range(n):
        lo, hi = graph.csr_offsets[i], graph.csr_offsets[i + 1]
        W[i, graph.csr_targets[lo:hi]] = graph.csr_weights[lo:hi]
    return W


def dense_propagate(graph: WeightedGraph, params: GipParams, seeds, W: np.ndarray | None = None) -> float:
    """Full-vector iteration x(t+1) = f_{t+1}(W^T x(t)) over every node."""
    if W is None:
        W = dense_matrix(graph)
    n = W.shape[0]
    alpha = graph.avg_edge_weight
    if params.theta_l * alpha >= 1:
        raise DivergenceError("theta_l * alpha >= 1")
    nodes = seeds.nodes if isinstance(seeds, SeedSet) else tuple(seeds)
    x = np.zeros(n)
    x[list(nodes)] = params.h0
    total = params.h0 * len(set(nodes)) if params.include_t0 else 0.0
    keep = 1.0 - params.gamma

    t = 0
    while np.max(np.abs(keep ** t * x), initial=0.0) > params.epsilon and t < params.max_steps:
        t += 1
        lo = (params.theta_l * alpha) ** t * params.l0
        hi = max(params.theta_h * params.theta_l ** (t - 1) * alpha ** t * params.h0, lo)
        # sources in ascending order, one row at a time
        y = np.zeros(n)
        for i in range(n):
            if x[i] != 0.0:
                y += W[i] * x[i]
        x = np.select([y < lo, y < hi], [0.0, y], default=hi)
        total += keep ** t * math.fsum(x.tolist())
    return total


def _evaluator(graph, params):
    W = dense_matrix(graph)
    return lambda nodes: dense_propagate(graph, params, nodes, W)


def brute_force_optimum(graph: WeightedGraph, params: GipParams, budget: int) -> OracleReport:
    """Enumerate every ``budget``-subset in lexicographic order; first maximiser wins."""
    n = graph.node_count
    if not 0 <= budget <= n:
        raise ValidationError(f"budget {budget} out of range for {n} nodes")
    if math.comb(n, budget) > ENUM_GUARD:
        raise SizeError(f"C({n},{budget}) exceeds the enumeration guard")
    score = _evaluator(graph, params)
    best, best_score, count = None, -math.inf, 0
    for combo in itertools.combinations(range(n), budget):
        count += 1
        s = score(combo)
        if s > best_score:
            best, best_score = combo, s
    return OracleReport(SeedSet(best, budget), best_score, count)


def neighborhood_size(n: int, budget: int, d: int) -> int:
    return sum(math.comb(budget, k) * math.comb(n - budget, k) for k in range(1, d // 2 + 1))


def verify_local_maximum(graph: WeightedGraph, params: GipParams, z, d: int) -> OracleReport:
    """Exhaustively check that no point within L1 distance ``d`` beats ``z``.

    ``witnesses`` lists every strictly better neighbour.
    """
    if d < 2 or d % 2:
        raise ValidationError("d must be an even integer >= 2")
    nodes = tuple(sorted(z.nodes if isinstance(z, SeedSet) else z))
    n, budget = graph.node_count, len(nodes)
    if len(set(nodes)) != budget or (nodes and (nodes[0] < 0 or nodes[-1] >= n)):
        raise ValidationError("z is not a valid seed set")
    if neighborhood_size(n, budget, d) > ENUM_GUARD:
        raise SizeError("neighbourhood exceeds the enumeration guard")
    score = _evaluator(graph, params)
    base = score(nodes)
    inside = set(nodes)
    others = [v for v in range(n) if v not in inside]

    best, best_score, count, witnesses = nodes, base, 0, []
    for k in range(1, min(d // 2, budget, len(others)) + 1):
        for kept in itertools.combinations(nodes, budget - k):
            for added in itertools.combinations(others, k):
                y = tuple(sorted(kept + added))
                s = score(y)
                count += 1
                if s > base:
                    witnesses.append((SeedSet(y, budget), s))
                if s > best_score:
                    best, best_score = y, s
    witnesses.sort(key=lambda w: (-w[1], w[0].nodes))
    return OracleReport(SeedSet(best, budget), best_score, count, witnesses)
