"""Deterministic GIP propagation and the barrier objective over seed sets."""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .errors import DivergenceError, ValidationError
from .graph import WeightedGraph, arc_positions

BARRIER = -math.inf
# switch to a sparse mat-vec once the active nodes own more than 1/DENSE_SWITCH of all arcs
DENSE_SWITCH = 8


@dataclass(frozen=True)
class GipParams:
    theta_l: float = 2.0
    theta_h: float = 50.0
    gamma: float = 0.1
    epsilon: float = 1e-6
    l0: float = 1.0
    h0: float = 1.0
    include_t0: bool = False
    max_steps: int = 10_000

    def __post_init__(self):
        if not self.theta_l > 0 or not self.theta_h > 0:
            raise ValidationError("theta_l and theta_h must be positive")
        if not 0 <= self.gamma < 1:
            raise ValidationError(f"gamma must lie in [0, 1), got {self.gamma}")
        if not self.epsilon > 0:
            raise ValidationError("epsilon must be positive")
        if not 0 < self.l0 <= self.h0:
            raise ValidationError(f"need 0 < l0 <= h0, got l0={self.l0}, h0={self.h0}")
        if int(self.max_steps) < 1:
            raise ValidationError("max_steps must be a positive integer")

    def check_feasible(self, alpha: float) -> None:
        if self.theta_l * alpha >= 1:
            raise DivergenceError(
                f"theta_l * alpha = {self.theta_l * alpha:.6g} >= 1; propagation bounds do not decay")


class Bounds(NamedTuple):
    lower: float
    upper: float
    clamped: bool


def bounds_at(params: GipParams, alpha: float, t: int) -> Bounds:
    """Uniform activation bounds for step ``t >= 1``.

    ``upper`` is raised to ``lower`` when the schedule would invert them.
    """
    if t < 1:
        raise ValidationError("bounds are defined for t >= 1")
    params.check_feasible(alpha)
    lo = (params.theta_l * alpha) ** t * params.l0
    hi = params.theta_h * params.theta_l ** (t - 1) * alpha ** t * params.h0
    if hi < lo:
        return Bounds(lo, lo, True)
    return Bounds(lo, hi, False)


def activation(y, lower: float, upper: float):
    """Clip ``y`` to the band [lower, upper]; anything below ``lower`` is 0.

    Works on scalars and numpy arrays.
    """
    if np.ndim(y) == 0:
        if y < lower:
            return 0.0
        return y if y < upper else upper
    y = np.asarray(y, dtype=np.float64)
    return np.where(y < lower, 0.0, np.minimum(y, upper))


@dataclass
class PropagationResult:
    score: float
    steps: int
    active_per_step: list[int]
    state_updates: int
    truncated: bool = False
    node_influence: np.ndarray | None = None


def _seed_array(seeds) -> np.ndarray:
    nodes = seeds.nodes if isinstance(seeds, SeedSet) else seeds
    return np.unique(np.asarray(nodes, dtype=np.int64))


def propagate(graph: WeightedGraph, params: GipParams, seeds,
              track_nodes: bool = False) -> PropagationResult:
    """Run the frontier propagation from ``seeds`` (a SeedSet or node ids).

    Only out-neighbours of the currently active nodes are re-evaluated at each
    step; the loop stops once the discounted infinity norm of the state drops
    to ``epsilon`` or ``max_steps`` is reached.
    """
    alpha = graph.avg_edge_weight
    params.check_feasible(alpha)
    offsets, targets, weights = graph.csr_offsets, graph.csr_targets, graph.csr_weights
    n = graph.node_count
    keep = 1.0 - params.gamma

    active = _seed_array(seeds)
    if active.size and (active[0] < 0 or active[-1] >= n):
        raise ValidationError("seed id out of range")
    state = np.full(active.size, params.h0)
    influence = np.zeros(n) if track_nodes else None
    score = 0.0
    if params.include_t0:
        score = float(active.size) * params.h0
        if track_nodes:
            influence[active] += params.h0

    counts = [int(active.size)]
    updates = 0
    last_nonzero = 0
    t = 0
    truncated = False
    dense_cutoff = len(targets) // DENSE_SWITCH
    while state.size and keep ** t * float(state.max()) > params.epsilon:
        if t >= params.max_steps:
            truncated = True
            break
        fanout = offsets[active + 1] - offsets[active]
        if int(fanout.sum()) > dense_cutoff:
            # every node's inputs summed over sources in ascending order, as below
            x = np.zeros(n)
            x[active] = state
            y = graph.incoming @ x
            reached = graph.incoming_pattern @ (x > 0).astype(np.float64)
            frontier = np.flatnonzero(reached)
        else:
            pos = arc_positions(offsets, active)
            tgt = targets[pos]
            y = np.bincount(tgt, weights=weights[pos] * np.repeat(state, fanout), minlength=n)
            hit = np.zeros(n, dtype=bool)
            hit[tgt] = True
            frontier = np.flatnonzero(hit)
        updates += int(frontier.size)

        lower, upper, _ = bounds_at(params, alpha, t + 1)
        x = activation(y[frontier], lower, upper)
        on = x > 0
        active = frontier[on]
        state = x[on]
        t += 1
        counts.append(int(active.size))
        if active.size:
            last_nonzero = t
            disc = keep ** t
            # correctly rounded, so the sum does not depend on frontier layout
            score += disc * math.fsum(state.tolist())
            if track_nodes:
                influence[active] += disc * state
    return PropagationResult(score=score, steps=last_nonzero, active_per_step=counts,
                             state_updates=updates, truncated=truncated,
                             node_influence=influence)


@dataclass(frozen=True)
class SeedSet:
    """A point of the mesh: ``budget`` nodes in ascending order.

    The constructor only canonicalises the ordering; ``in_mesh`` checks
    membership so that infeasible points can still reach the barrier.
    """

    nodes: tuple[int, ...]
    budget: int

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(sorted(int(v) for v in self.nodes)))

    @classmethod
    def of(cls, nodes: Iterable[int], budget: int | None = None) -> "SeedSet":
        nodes = tuple(nodes)
        return cls(nodes, len(nodes) if budget is None else budget)

    def in_mesh(self, n: int) -> bool:
        nd = self.nodes
        if len(nd) != self.budget:
            return False
        if nd and (nd[0] < 0 or nd[-1] >= n):
            return False
        return all(a < b for a, b in zip(nd, nd[1:]))

    def __len__(self):
        return len(self.nodes)

    def __iter__(self):
        return iter(self.nodes)


@dataclass
class EvalCache:
    """Seed-set -> score memo. Safe to share between threads."""

    memo: dict = field(default_factory=dict)
    eval_count: int = 0
    cache_hits: int = 0
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def lookup(self, key: tuple[int, ...]):
        with self._lock:
            value = self.memo.get(key)
            if value is not None:
                self.cache_hits += 1
            return value

    def store(self, key: tuple[int, ...], value: float) -> None:
        with self._lock:
            if key not in self.memo:
                self.memo[key] = value
                self.eval_count += 1

    def __contains__(self, key):
        return key in self.memo

    def __len__(self):
        return len(self.memo)


def objective(graph: WeightedGraph, params: GipParams, seeds: SeedSet | Sequence[int],
              cache: EvalCache | None = None, budget: int | None = None) -> float:
    """Barrier objective: propagation score inside the mesh, ``-inf`` outside."""
    if not isinstance(seeds, SeedSet):
        seeds = SeedSet(tuple(seeds), len(seeds) if budget is None else budget)
    elif budget is not None and budget != seeds.budget:
        return BARRIER
    if not seeds.in_mesh(graph.node_count):
        return BARRIER
    key = seeds.nodes
    if cache is not None:
        hit = cache.lookup(key)
        if hit is not None:
            return hit
    value = propagate(graph, params, key).score
    if cache is not None:
        cache.store(key, value)
    return value
