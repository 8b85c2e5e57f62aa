"""Undirected weighted graphs in CSR form, edge-list loading and test fixtures."""

from __future__ import annotations

import gzip
import io
import logging
import math
import os
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, TextIO

import numpy as np
import scipy.sparse as sp

from .errors import ParseError, ValidationError

log = logging.getLogger(__name__)

DATA_DIR_ENV = "NADS_DATA_DIR"


@dataclass(frozen=True)
class WeightScheme:
    """How edge weights are assigned.

    kind is one of ``uniform`` (every arc gets ``w``), ``inverse_degree``
    (arc i->j gets 1/deg(j)) or ``from_file`` (third edge-list column).
    """

    kind: str = "uniform"
    w: float = 0.1

    def __post_init__(self):
        if self.kind not in ("uniform", "inverse_degree", "from_file"):
            raise ValidationError(f"unknown weight scheme {self.kind!r}")
        if self.kind == "uniform" and not (self.w > 0 and math.isfinite(self.w)):
            raise ValidationError(f"uniform weight must be positive, got {self.w}")

    @classmethod
    def parse(cls, text: str) -> "WeightScheme":
        """Parse ``uniform:<w>``, ``invdeg`` / ``inverse_degree`` or ``file``."""
        text = text.strip().lower()
        if text.startswith("uniform"):
            _, _, w = text.partition(":")
            try:
                return cls("uniform", float(w) if w else 0.1)
            except ValueError:
                raise ValidationError(f"bad uniform weight in {text!r}") from None
        if text in ("invdeg", "inverse_degree"):
            return cls("inverse_degree")
        if text in ("file", "from_file"):
            return cls("from_file")
        raise ValidationError(f"unknown weight scheme {text!r}")

    def __str__(self):
        if self.kind == "uniform":
            return f"uniform:{self.w:g}"
        return "invdeg" if self.kind == "inverse_degree" else "file"


DEFAULT_SCHEME = WeightScheme("uniform", 0.1)


def _frozen(a):
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class WeightedGraph:
    """Immutable undirected graph; each edge is stored as two arcs.

    ``csr_weights[k]`` is W_ij for the arc i -> j at position k, so
    ``y_j = sum_i W_ij x_i`` is a scatter over the arcs leaving the active
    nodes. ``external_ids[i]`` is the id node ``i`` had in the input file.
    """

    node_count: int
    csr_offsets: np.ndarray
    csr_targets: np.ndarray
    csr_weights: np.ndarray
    edge_count: int
    avg_edge_weight: float
    external_ids: np.ndarray | None = None
    scheme: WeightScheme = DEFAULT_SCHEME
    _degree: np.ndarray = field(init=False, repr=False)
    _sources: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        deg = np.diff(self.csr_offsets)
        object.__setattr__(self, "_degree", _frozen(deg))
        src = np.repeat(np.arange(self.node_count, dtype=np.int64), deg)
        object.__setattr__(self, "_sources", _frozen(src))

    @property
    def n(self) -> int:
        return self.node_count

    @property
    def degree(self) -> np.ndarray:
        return self._degree

    @property
    def arc_sources(self) -> np.ndarray:
        """Source node of every arc, aligned with ``csr_targets``."""
        return self._sources

    @cached_property
    def incoming(self):
        """Sparse W^T: row ``j`` holds W_ij for every arc i -> j, sources ascending."""
        n = self.node_count
        return sp.csr_matrix((self.csr_weights, (self.csr_targets, self._sources)), shape=(n, n))

    @cached_property
    def incoming_pattern(self):
        n = self.node_count
        ones = np.ones(len(self.csr_targets))
        return sp.csr_matrix((ones, (self.csr_targets, self._sources)), shape=(n, n))

    def neighbors(self, i: int) -> np.ndarray:
        return self.csr_targets[self.csr_offsets[i]:self.csr_offsets[i + 1]]

    def arc_weights(self, i: int) -> np.ndarray:
        return self.csr_weights[self.csr_offsets[i]:self.csr_offsets[i + 1]]

    def has_edge(self, i: int, j: int) -> bool:
        nb = self.neighbors(i)
        k = np.searchsorted(nb, j)
        return bool(k < len(nb) and nb[k] == j)

    def edges(self) -> list[tuple[int, int]]:
        """Undirected edges as (i, j) with i < j, in CSR order."""
        mask = self._sources < self.csr_targets
        return list(zip(self._sources[mask].tolist(), self.csr_targets[mask].tolist()))

    def external(self, i: int) -> int:
        return int(self.external_ids[i]) if self.external_ids is not None else int(i)

    def internal_ids(self) -> dict[int, int]:
        if self.external_ids is None:
            return {i: i for i in range(self.node_count)}
        return {int(e): i for i, e in enumerate(self.external_ids)}

    def component_count(self) -> int:
        seen = np.zeros(self.node_count, dtype=bool)
        count = 0
        for root in range(self.node_count):
            if seen[root]:
                continue
            count += 1
            seen[root] = True
            frontier = np.array([root])
            while frontier.size:
                nxt = _gather(self, frontier)
                nxt = nxt[~seen[nxt]]
                seen[nxt] = True
                frontier = np.unique(nxt)
        return count


def _gather(graph: WeightedGraph, nodes: np.ndarray) -> np.ndarray:
    """Arc positions leaving ``nodes`` concatenated, mapped to their targets."""
    return graph.csr_targets[arc_positions(graph.csr_offsets, nodes)]


def arc_positions(offsets: np.ndarray, nodes: np.ndarray) -> np.ndarray:
    starts = offsets[nodes]
    counts = offsets[nodes + 1] - starts
    total = int(counts.sum())
    if total == 0:
        return np.empty(0, dtype=np.int64)
    shift = np.repeat(starts - np.cumsum(counts) + counts, counts)
    return shift + np.arange(total, dtype=np.int64)


def build_graph(edges: Iterable[tuple], scheme: WeightScheme = DEFAULT_SCHEME,
                node_ids: Iterable[int] | None = None) -> WeightedGraph:
    """Build a graph from ``(u, v)`` or ``(u, v, w)`` tuples over arbitrary ids.

    Ids are remapped to ``0..n-1`` in ascending order; self-loops are dropped
    and repeated pairs collapse onto their first occurrence.
    """
    seen: dict[tuple[int, int], float] = {}
    ids = set(node_ids) if node_ids is not None else set()
    for e in edges:
        u, v = int(e[0]), int(e[1])
        ids.add(u)
        ids.add(v)
        if u == v:
            continue
        key = (u, v) if u < v else (v, u)
        if key in seen:
            continue
        if scheme.kind == "from_file":
            if len(e) < 3:
                raise ValidationError(f"edge {key} has no weight under from_file")
            w = float(e[2])
            if not (w >= 0 and math.isfinite(w)):
                raise ValidationError(f"edge {key} has invalid weight {e[2]}")
        else:
            w = 0.0
        seen[key] = w
    if not ids or not seen:
        raise ValidationError("graph has no edges")

    ext = np.array(sorted(ids), dtype=np.int64)
    n = len(ext)
    keys = np.array(list(seen.keys()), dtype=np.int64).reshape(-1, 2)
    u = np.searchsorted(ext, keys[:, 0])
    v = np.searchsorted(ext, keys[:, 1])
    w = np.fromiter(seen.values(), dtype=np.float64, count=len(seen))
    return _from_arrays(n, u, v, w, scheme, ext)


def _from_arrays(n, u, v, w, scheme, ext=None) -> WeightedGraph:
    m = len(u)
    src = np.concatenate([u, v])
    dst = np.concatenate([v, u])
    wt = np.concatenate([w, w])
    order = np.lexsort((dst, src))
    src, dst, wt = src[order], dst[order], wt[order]
    offsets = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(src, minlength=n), out=offsets[1:])
    deg = np.diff(offsets)

    if scheme.kind == "uniform":
        wt = np.full(2 * m, scheme.w)
        alpha = scheme.w
    elif scheme.kind == "inverse_degree":
        wt = 1.0 / deg[dst]
        alpha = math.fsum(wt.tolist()) / (2 * m)
    else:
        alpha = math.fsum(w.tolist()) / m

    if ext is not None and np.array_equal(ext, np.arange(n)):
        ext = None
    g = WeightedGraph(
        node_count=n,
        csr_offsets=_frozen(offsets),
        csr_targets=_frozen(dst.astype(np.int64)),
        csr_weights=_frozen(wt.astype(np.float64)),
        edge_count=m,
        avg_edge_weight=float(alpha),
        external_ids=_frozen(ext) if ext is not None else None,
        scheme=scheme,
    )
    return g


def load_edge_list(source: TextIO | str, scheme: WeightScheme = DEFAULT_SCHEME) -> WeightedGraph:
    """Parse a whitespace-separated edge list (``u v`` or ``u v w``).

    ``source`` is a text stream or the literal text. Lines starting with ``#``
    are comments.
    """
    if isinstance(source, str):
        source = io.StringIO(source)
    edges = []
    for lineno, raw in enumerate(source, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) not in (2, 3):
            raise ParseError(f"expected 'u v' or 'u v w', got {line!r}", lineno)
        try:
            u, v = int(parts[0]), int(parts[1])
        except ValueError:
            raise ParseError(f"non-integer node id in {line!r}", lineno) from None
        if u < 0 or v < 0:
            raise ParseError(f"negative node id in {line!r}", lineno)
        if scheme.kind == "from_file":
            if len(parts) != 3:
                raise ParseError("missing weight column (scheme from_file)", lineno)
            try:
                w = float(parts[2])
            except ValueError:
                raise ParseError(f"bad weight {parts[2]!r}", lineno) from None
            if not math.isfinite(w):
                raise ParseError(f"bad weight {parts[2]!r}", lineno)
            if w < 0:
                raise ValidationError(f"line {lineno}: negative weight {w}")
            edges.append((u, v, w))
        else:
            edges.append((u, v))
    if not edges:
        raise ValidationError("empty graph")
    g = build_graph(edges, scheme)
    if g.component_count() > 1:
        log.warning("graph is disconnected (%d components)", g.component_count())
    return g


def resolve_path(path: str | os.PathLike) -> Path:
    p = Path(path)
    base = os.environ.get(DATA_DIR_ENV)
    if not p.is_absolute() and base and not p.exists():
        p = Path(base) / p
    return p


def read_graph(path: str | os.PathLike, scheme: WeightScheme = DEFAULT_SCHEME) -> WeightedGraph:
    """Load a graph file (plain or ``.gz``) or a ``synthetic:<description>`` fixture."""
    spath = str(path)
    if spath.startswith("synthetic:"):
        return synthetic_from_spec(spath[len("synthetic:"):], scheme)
    p = resolve_path(path)
    opener = gzip.open if p.suffix == ".gz" else open
    with opener(p, "rt") as fh:
        return load_edge_list(fh, scheme)


def write_id_map(graph: WeightedGraph, path: str | os.PathLike) -> None:
    with open(path, "w", newline="\n") as fh:
        for i in range(graph.node_count):
            fh.write(f"{graph.external(i)} {i}\n")


# -- synthetic fixtures ------------------------------------------------------

def generate_synthetic(kind: str, scheme: WeightScheme = DEFAULT_SCHEME,
                       rng_seed: int = 0, **params) -> WeightedGraph:
    """Deterministic fixture graphs.

    kinds: ``path(n)``, ``star(leaves)``, ``clique(n)``,
    ``barbell(clique_size, bridge)`` and ``random_attachment(n, m)``.
    """
    try:
        if kind == "path":
            n = int(params.get("n", 5))
            if n < 2:
                raise ValidationError("path needs n >= 2")
            edges = [(i, i + 1) for i in range(n - 1)]
        elif kind == "star":
            leaves = int(params.get("leaves", 3))
            if leaves < 1:
                raise ValidationError("star needs leaves >= 1")
            edges = [(0, i) for i in range(1, leaves + 1)]
        elif kind == "clique":
            n = int(params.get("n", 4))
            if n < 2:
                raise ValidationError("clique needs n >= 2")
            edges = [(i, j) for i in range(n) for j in range(i + 1, n)]
        elif kind == "barbell":
            k = int(params.get("clique_size", 3))
            bridge = int(params.get("bridge", 3))
            if k < 2 or bridge < 0:
                raise ValidationError("barbell needs clique_size >= 2 and bridge >= 0")
            right = k + bridge
            edges = [(i, j) for i in range(k) for j in range(i + 1, k)]
            edges += [(i, i + 1) for i in range(k - 1, right)]
            edges += [(i, j) for i in range(right, right + k) for j in range(i + 1, right + k)]
        elif kind == "random_attachment":
            n = int(params.get("n", 100))
            m = int(params.get("m", 2))
            if m < 1 or n <= m:
                raise ValidationError("random_attachment needs 1 <= m < n")
            edges = _preferential_attachment(n, m, rng_seed)
        else:
            raise ValidationError(f"unknown synthetic graph kind {kind!r}")
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ValidationError):
            raise
        raise ValidationError(f"bad parameters for {kind}: {exc}") from None
    if scheme.kind == "from_file":
        raise ValidationError("synthetic graphs have no file weights")
    return build_graph(edges, scheme)


def _preferential_attachment(n: int, m: int, seed: int) -> list[tuple[int, int]]:
    rng = np.random.default_rng(seed)
    edges = [(i, j) for i in range(m + 1) for j in range(i + 1, m + 1)]
    pool = [v for e in edges for v in e]
    for new in range(m + 1, n):
        targets: set[int] = set()
        while len(targets) < m:
            targets.add(pool[int(rng.integers(len(pool)))])
        for t in sorted(targets):
            edges.append((t, new))
            pool.extend((t, new))
    return edges


def star4(scheme: WeightScheme = DEFAULT_SCHEME) -> WeightedGraph:
    """Center 0 with leaves 1, 2, 3."""
    return generate_synthetic("star", scheme, leaves=3)


def barbell9(scheme: WeightScheme = DEFAULT_SCHEME) -> WeightedGraph:
    """Triangles {0,1,2} and {6,7,8} joined by the path 2-3-4-5-6."""
    return generate_synthetic("barbell", scheme, clique_size=3, bridge=3)


FIXTURES = {"star4": star4, "barbell9": barbell9}


def synthetic_from_spec(spec: str, scheme: WeightScheme = DEFAULT_SCHEME) -> WeightedGraph:
    """``star4``, ``barbell9`` or ``<kind>[:key=value,...]`` (``seed`` is the rng seed)."""
    if spec in FIXTURES:
        return FIXTURES[spec](scheme)
    kind, _, rest = spec.partition(":")
    params = {}
    for item in filter(None, rest.split(",")):
        key, sep, value = item.partition("=")
        if not sep:
            raise ValidationError(f"bad synthetic parameter {item!r}")
        params[key.strip()] = value.strip()
    seed = int(params.pop("seed", 0))
    return generate_synthetic(kind, scheme, rng_seed=seed, **params)
