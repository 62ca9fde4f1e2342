"""
Structural analysis: non-wandering part, cofinality, hereditary closures and
higher-block recoding.
"""

from __future__ import annotations

from typing import Iterable, List, Optional, Set

import networkx as nx

from .errors import GraphError, UndeterminedError
from .families import GraphFamily, forward_closure
from .graph import Edge, FiniteGraph, VertexId, iter_paths, sort_vertices
from .log import get_logger
from .schemas import StructureReport
from .settings import get_settings


logger = get_logger(__name__)


def strongly_connected_cores(graph: FiniteGraph) -> List[List[VertexId]]:
    """Strongly connected components that carry at least one edge, sorted."""
    digraph = graph.to_networkx()
    cores = []
    for component in nx.strongly_connected_components(digraph):
        if len(component) > 1:
            cores.append(sort_vertices(component))
        else:
            (v,) = tuple(component)
            if graph.count(v, v) > 0:
                cores.append([v])
    return sorted(cores, key=lambda core: graph.index(core[0]))


def nw_vertices(graph: FiniteGraph) -> List[VertexId]:
    """Vertices lying on a directed cycle."""
    members = {v for core in strongly_connected_cores(graph) for v in core}
    return [v for v in graph.vertices if v in members]


def non_wandering(family: GraphFamily, depth: Optional[int] = None) -> StructureReport:
    depth = get_settings().depth if depth is None else depth
    if depth < 1:
        raise GraphError("depth must be at least 1")
    graph = family.truncation(depth)
    found = nw_vertices(graph)
    notes: List[str] = []

    if family.is_finite:
        nw_class = "nonempty-finite" if found else "empty"
        cofinal = is_cofinal(graph)
    else:
        declared = family.traits.nw_class
        if declared is not None:
            nw_class = declared
            notes.append(f"nw_class declared by the {family.kind} family")
            if declared == "empty" and found:
                raise GraphError(f"{family.kind} declares no loops but depth {depth} has a cycle")
        else:
            nw_class = "undetermined"
            notes.append(
                f"{len(found)} loop vertices at depth {depth}; finiteness of the non-wandering "
                "part is not decidable from a truncation"
            )
        cofinal = family.traits.cofinal
        if cofinal is None:
            notes.append("cofinality undetermined: it quantifies over infinite paths")

    logger.debug("non-wandering part of %s at depth %d: %d vertices", family.name, depth, len(found))
    return StructureReport(
        depth=depth,
        nw_vertices=found,
        nw_class=nw_class,
        cofinal=cofinal,
        notes=notes,
    )


def is_cofinal(graph: FiniteGraph) -> bool:
    """
    A finite sink-free graph is cofinal iff it has exactly one strongly
    connected component carrying an edge and every vertex reaches it.
    """
    if graph.frontier:
        raise UndeterminedError(
            "cofinality of a truncation is undetermined; use the family's declared metadata"
        )
    cores = strongly_connected_cores(graph)
    if len(cores) != 1:
        return False
    core = set(cores[0])
    upstream = nx.ancestors(graph.to_networkx(), cores[0][0]) | core
    return len(upstream) == len(graph)


def hereditary_closure(graph: FiniteGraph, seeds: Iterable[VertexId]) -> Set[VertexId]:
    """Smallest set containing ``seeds`` that is closed under out-edges."""
    return set(forward_closure(graph, seeds))


def _block_id(edges: Iterable[Edge]) -> str:
    return ".".join(edge.id for edge in edges)


def recode(graph: FiniteGraph, k: int) -> FiniteGraph:
    """
    Higher-block recoding: vertices are the length-k paths, and each length
    k+1 path e1..e(k+1) is an edge from e1..ek to e2..e(k+1).
    """
    if k < 1:
        raise GraphError("recode needs k >= 1")
    blocks = []
    for v in graph.vertices:
        blocks.extend(iter_paths(graph, v, k))
    vertices = [_block_id(path.edges) for path in blocks]
    edges: List[Edge] = []
    frontier: List[str] = []
    for path in blocks:
        source = _block_id(path.edges)
        if path.range in graph.frontier:
            frontier.append(source)
        for edge in graph.out_edges(path.range):
            word = path.edges + (edge,)
            edges.append(Edge(_block_id(word), source, _block_id(word[1:])))
    recoded = FiniteGraph(vertices, edges, frontier=frontier, name=f"{graph.name or 'graph'}^[{k}]")
    logger.debug("recoded %s at k=%d: %d vertices, %d edges", graph.name, k, len(vertices), len(edges))
    return recoded
