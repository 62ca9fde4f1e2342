"""
Row-finite, sink-free directed multigraphs and their finite paths.

A ``FiniteGraph`` is either a whole (explicit) graph or a truncation of an
infinite family. Truncations mark their ``frontier``: vertices whose out-edge
set is incomplete. Frontier vertices are boundary conditions, never sinks.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, Iterator, List, Mapping, Optional, Sequence, Tuple, Union

import networkx as nx
import numpy as np
from scipy import sparse

from .errors import GraphError


VertexId = Union[int, str]

_CHUNKS = re.compile(r"(-?\d+)")


def vertex_key(vertex: VertexId) -> Tuple:
    """Deterministic sort key: integers first, then strings in natural order (ties broken by the raw string)."""
    if isinstance(vertex, bool):
        raise GraphError(f"vertex ids must be int or str, got {vertex!r}")
    if isinstance(vertex, int):
        return (0, (vertex,))
    parts = _CHUNKS.split(str(vertex))
    key = tuple(int(part) if index % 2 else part for index, part in enumerate(parts))
    return (1, key, str(vertex))


def sort_vertices(vertices: Iterable[VertexId]) -> List[VertexId]:
    return sorted(vertices, key=vertex_key)


@dataclass(frozen=True)
class Edge:
    id: str
    src: VertexId
    dst: VertexId

    def sort_key(self) -> Tuple:
        return vertex_key(self.id)


class FiniteGraph:
    """Immutable finite multigraph with an optional truncation frontier."""

    def __init__(
        self,
        vertices: Iterable[VertexId],
        edges: Iterable[Edge],
        *,
        frontier: Iterable[VertexId] = (),
        name: str = "",
    ) -> None:
        ordered = sort_vertices(vertices)
        if len(set(ordered)) != len(ordered):
            raise GraphError("duplicate vertex id")
        self.name = name
        self.vertices: Tuple[VertexId, ...] = tuple(ordered)
        self._index: Dict[VertexId, int] = {v: i for i, v in enumerate(self.vertices)}

        edge_list = sorted(edges, key=Edge.sort_key)
        self._edges_by_id: Dict[str, Edge] = {}
        out: Dict[VertexId, List[Edge]] = {v: [] for v in self.vertices}
        adjacency: Dict[Tuple[VertexId, VertexId], int] = {}
        for edge in edge_list:
            if edge.id in self._edges_by_id:
                raise GraphError(f"duplicate edge id {edge.id!r}")
            if edge.src not in self._index or edge.dst not in self._index:
                raise GraphError(f"edge {edge.id!r} references an unknown vertex")
            self._edges_by_id[edge.id] = edge
            out[edge.src].append(edge)
            adjacency[(edge.src, edge.dst)] = adjacency.get((edge.src, edge.dst), 0) + 1
        self.edges: Tuple[Edge, ...] = tuple(edge_list)
        self._out: Dict[VertexId, Tuple[Edge, ...]] = {v: tuple(es) for v, es in out.items()}
        self.adjacency: Dict[Tuple[VertexId, VertexId], int] = adjacency

        frontier_set = frozenset(frontier)
        unknown = [v for v in frontier_set if v not in self._index]
        if unknown:
            raise GraphError(f"frontier vertex {unknown[0]!r} is not in the graph")
        self.frontier: FrozenSet[VertexId] = frontier_set

        for v in self.vertices:
            if not self._out[v] and v not in self.frontier:
                raise GraphError(f"sink at vertex {v!r}")

    # -- basic queries -------------------------------------------------

    def __contains__(self, vertex: object) -> bool:
        return vertex in self._index

    def __len__(self) -> int:
        return len(self.vertices)

    def __repr__(self) -> str:
        label = f" {self.name!r}" if self.name else ""
        return f"<FiniteGraph{label} |V|={len(self.vertices)} |E|={len(self.edges)} frontier={len(self.frontier)}>"

    @property
    def base_vertex(self) -> VertexId:
        """Lexicographically smallest vertex id, the default normalization point."""
        return min(self.vertices, key=lambda v: (str(v), vertex_key(v)))

    @property
    def interior(self) -> Tuple[VertexId, ...]:
        return tuple(v for v in self.vertices if v not in self.frontier)

    def index(self, vertex: VertexId) -> int:
        self.require(vertex)
        return self._index[vertex]

    def require(self, vertex: VertexId) -> None:
        if vertex not in self._index:
            raise GraphError(f"unknown vertex {vertex!r}")

    def edge(self, edge_id: str) -> Edge:
        try:
            return self._edges_by_id[edge_id]
        except KeyError as exc:
            raise GraphError(f"unknown edge {edge_id!r}") from exc

    def out_edges(self, vertex: VertexId) -> Tuple[Edge, ...]:
        self.require(vertex)
        return self._out[vertex]

    def successors(self, vertex: VertexId) -> Dict[VertexId, int]:
        """Map w -> A_vw over the out-edges of ``vertex`` (sorted by w)."""
        counts: Dict[VertexId, int] = {}
        for edge in self.out_edges(vertex):
            counts[edge.dst] = counts.get(edge.dst, 0) + 1
        return {w: counts[w] for w in sort_vertices(counts)}

    def count(self, src: VertexId, dst: VertexId) -> int:
        return self.adjacency.get((src, dst), 0)

    # -- derived structures --------------------------------------------

    def matrix(self, vertices: Optional[Sequence[VertexId]] = None) -> sparse.csr_matrix:
        """Adjacency matrix (float) restricted to ``vertices`` in the given order."""
        order = list(self.vertices) if vertices is None else list(vertices)
        position = {v: i for i, v in enumerate(order)}
        rows: List[int] = []
        cols: List[int] = []
        data: List[float] = []
        for (src, dst), count in self.adjacency.items():
            if src in position and dst in position:
                rows.append(position[src])
                cols.append(position[dst])
                data.append(float(count))
        size = len(order)
        return sparse.csr_matrix((np.array(data), (rows, cols)), shape=(size, size))

    def to_networkx(self) -> nx.DiGraph:
        digraph = nx.DiGraph()
        digraph.add_nodes_from(self.vertices)
        for (src, dst), count in self.adjacency.items():
            digraph.add_edge(src, dst, weight=count)
        return digraph

    def induced(
        self,
        vertices: Iterable[VertexId],
        *,
        frontier: Optional[Iterable[VertexId]] = None,
        name: str = "",
    ) -> "FiniteGraph":
        """Induced subgraph; vertices that lose out-edges become frontier."""
        keep = set(vertices)
        for v in keep:
            self.require(v)
        edges = [e for e in self.edges if e.src in keep and e.dst in keep]
        if frontier is None:
            kept_out = {v: 0 for v in keep}
            for edge in edges:
                kept_out[edge.src] += 1
            lost = {v for v in keep if kept_out[v] < len(self._out[v])}
            frontier = (set(self.frontier) & keep) | lost
        return FiniteGraph(keep, edges, frontier=frontier, name=name or self.name)


def graph_from_adjacency(
    adjacency: Mapping[VertexId, Mapping[VertexId, int]],
    *,
    frontier: Iterable[VertexId] = (),
    name: str = "",
) -> FiniteGraph:
    """Build a graph from ``{v: {w: A_vw}}``; edges are numbered e1, e2, ... in sorted order."""
    vertices = set(adjacency)
    for targets in adjacency.values():
        vertices.update(targets)
    edges: List[Edge] = []
    counter = 1
    for v in sort_vertices(adjacency):
        targets = adjacency[v]
        for w in sort_vertices(targets):
            multiplicity = targets[w]
            if multiplicity < 0:
                raise GraphError(f"negative multiplicity on {v!r}->{w!r}")
            for _ in range(multiplicity):
                edges.append(Edge(f"e{counter}", v, w))
                counter += 1
    return FiniteGraph(vertices, edges, frontier=frontier, name=name)


@dataclass(frozen=True)
class FinitePath:
    """A composable edge sequence; the empty path at ``start`` stands for C_v."""

    start: VertexId
    edges: Tuple[Edge, ...] = field(default=())

    def __post_init__(self) -> None:
        current = self.start
        for edge in self.edges:
            if edge.src != current:
                raise GraphError(f"edge {edge.id!r} does not continue a path ending at {current!r}")
            current = edge.dst

    def __len__(self) -> int:
        return len(self.edges)

    @property
    def source(self) -> VertexId:
        return self.start

    @property
    def range(self) -> VertexId:
        return self.edges[-1].dst if self.edges else self.start

    @property
    def edge_ids(self) -> Tuple[str, ...]:
        return tuple(edge.id for edge in self.edges)

    def extend(self, edge: Edge) -> "FinitePath":
        return FinitePath(self.start, self.edges + (edge,))

    def concat(self, other: "FinitePath") -> "FinitePath":
        if other.start != self.range:
            raise GraphError("paths are not composable")
        return FinitePath(self.start, self.edges + other.edges)

    def tail(self) -> "FinitePath":
        """The shifted path e2...en (empty path at r(e1) when |mu| = 1)."""
        if not self.edges:
            raise GraphError("the empty path has no shift")
        return FinitePath(self.edges[0].dst, self.edges[1:])

    @classmethod
    def empty(cls, vertex: VertexId) -> "FinitePath":
        return cls(vertex, ())

    @classmethod
    def from_edge_ids(
        cls, graph: FiniteGraph, edge_ids: Sequence[str], *, start: Optional[VertexId] = None
    ) -> "FinitePath":
        edges = tuple(graph.edge(edge_id) for edge_id in edge_ids)
        if not edges:
            if start is None:
                raise GraphError("an empty path needs a start vertex")
            graph.require(start)
            return cls(start, ())
        return cls(edges[0].src if start is None else start, edges)


def out_edges(graph: FiniteGraph, vertex: VertexId) -> Tuple[Edge, ...]:
    return graph.out_edges(vertex)


def iter_paths(graph: FiniteGraph, vertex: VertexId, length: int) -> Iterator[FinitePath]:
    """Yield every path of ``length`` from ``vertex`` in deterministic order."""
    graph.require(vertex)
    if length < 0:
        raise GraphError("path length must be nonnegative")
    stack: List[Tuple[VertexId, Tuple[Edge, ...]]] = [(vertex, ())]
    while stack:
        current, edges = stack.pop()
        if len(edges) == length:
            yield FinitePath(vertex, edges)
            continue
        for edge in reversed(graph.out_edges(current)):
            stack.append((edge.dst, edges + (edge,)))


def enumerate_paths(graph: FiniteGraph, vertex: VertexId, length: int) -> List[FinitePath]:
    return list(iter_paths(graph, vertex, length))
