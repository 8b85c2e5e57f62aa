"""Influence maximization under generalized independent propagation (GIP).

Network-aware direct search (NaDS), its plain coordinate variant (CDS),
baseline heuristics and brute-force oracles for small graphs.
"""

from .errors import DivergenceError, NadsError, ParseError, SizeError, ValidationError
from .gip import BARRIER, EvalCache, GipParams, SeedSet, activation, bounds_at, objective, propagate
from .graph import (WeightScheme, WeightedGraph, barbell9, build_graph, generate_synthetic,
                    load_edge_list, read_graph, star4)
from .heuristics import (HEURISTICS, collective_influence, core_numbers, katz_scores, katz_top,
                         kcore_top, pseudo_random_start, run_heuristic, simple_greedy,
                         single_discount)
from .oracle import brute_force_optimum, dense_propagate, verify_local_maximum
from .search import SearchConfig, SearchResult, cds, is_local_maximum, nads, swap_neighborhood

__version__ = "0.1.0"
