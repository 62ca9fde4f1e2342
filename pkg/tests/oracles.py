"""Brute-force reference computations the library results are checked against."""

from __future__ import annotations

import math
from functools import reduce
from typing import Dict, List

import numpy as np
from hypothesis import strategies as st

from kmslab.graph import FiniteGraph, graph_from_adjacency


def dense_matrix(graph: FiniteGraph) -> np.ndarray:
    return np.array(graph.matrix().toarray(), dtype=np.int64)


def path_count(graph: FiniteGraph, vertex, length: int) -> int:
    """sum_w (A^n)_vw by repeated dense products."""
    a = dense_matrix(graph)
    row = np.zeros(len(graph), dtype=np.int64)
    row[graph.index(vertex)] = 1
    for _ in range(length):
        row = row @ a
    return int(row.sum())


def closed_walk_gcd(graph: FiniteGraph, max_length: int = 16) -> int:
    """gcd of the lengths n <= max_length with a closed walk of length n."""
    a = dense_matrix(graph)
    power = np.eye(len(graph), dtype=np.int64)
    lengths: List[int] = []
    for n in range(1, max_length + 1):
        power = power @ a
        if np.trace(power) > 0:
            lengths.append(n)
    return reduce(math.gcd, lengths, 0)


def cubic_root(n: int, tol: float = 1e-15) -> float:
    """Real root of x^3 - x - n by bisection on [1, n + 1]."""
    low, high = 1.0, n + 1.0
    while high - low > tol:
        mid = 0.5 * (low + high)
        if mid**3 - mid - n > 0:
            high = mid
        else:
            low = mid
    return 0.5 * (low + high)


@st.composite
def strongly_connected_graphs(draw, max_vertices: int = 8, extra_edges: int = 2) -> FiniteGraph:
    """A Hamiltonian cycle on a random vertex order plus up to ``extra_edges`` random edges."""
    n = draw(st.integers(1, max_vertices))
    order = draw(st.permutations(range(n)))
    adjacency: Dict[int, Dict[int, int]] = {v: {} for v in range(n)}
    for i, v in enumerate(order):
        w = order[(i + 1) % n]
        adjacency[v][w] = adjacency[v].get(w, 0) + 1
    extra = draw(st.lists(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)), max_size=extra_edges))
    for v, w in extra:
        adjacency[v][w] = adjacency[v].get(w, 0) + 1
    return graph_from_adjacency(adjacency, name=f"random({n})")
