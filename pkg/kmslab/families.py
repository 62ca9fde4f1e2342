"""
Graph families: explicit finite graphs and lazy infinite graphs presented by
nested finite truncations.

Built-in generators:

* ``arms(n)``   vertex ``"1"`` with n arms; arm ``a`` is ``a1 -> a2 -> ...``
  with a return route ``ak -> a-k -> ... -> a-1 -> "1"`` at every level
* ``ladder()``  ``"1" -> x0, y0``; ``xn -> yn``; ``yn -> x(n+1), y(n+1)``
* ``rose(n)``   one vertex ``"v"`` with n loops ``e1 .. en``
* ``cycle(p)``  vertices ``0 .. p-1`` on a directed cycle
* ``lattice_walk(walk)``  translation-invariant graph on Z^d with A_vw = mu(w - v)

Truncation at depth D keeps every vertex within D levels (box radius D for
lattices) and marks the vertices whose out-edges were cut as the frontier.
"""

from __future__ import annotations

import json
import string
from dataclasses import dataclass, field
from itertools import product
from typing import Any, Callable, Dict, Iterable, List, Mapping, Optional, Sequence, Set, Tuple, Union

import networkx as nx
import numpy as np
from pydantic import ValidationError

from .errors import GraphError
from .graph import Edge, FiniteGraph, VertexId, graph_from_adjacency, sort_vertices
from .schemas import ExplicitGraphDocument, FamilyDocument, GraphDescriptor, LatticeParams


FINITE_KINDS = ("explicit-finite", "rose", "cycle")
DEFAULT_SCHEDULE: Tuple[int, ...] = (5, 10, 20, 30, 40, 50)


@dataclass(frozen=True)
class FamilyTraits:
    """Certified structural metadata a family declares about its infinite graph."""

    nw_class: Optional[str] = None
    cofinal: Optional[bool] = None
    bounded_out_degree: Optional[bool] = None
    d_prime: Optional[int] = None
    d_prime_note: str = ""
    closed_form: bool = False


@dataclass(frozen=True)
class SymmetricRoot:
    """
    A hereditary set whose bounded path-pair witnesses are checked from a few
    representative start vertices; ``symmetry`` names the graph automorphism
    that carries the representatives onto every vertex of the set.
    """

    root: VertexId
    starts: Tuple[VertexId, ...]
    symmetry: str
    depth_for: Callable[[int, int], int] = field(compare=False)


# -- lattice walks -----------------------------------------------------


def lattice_vertex(point: Sequence[int]) -> str:
    return ":".join(str(int(x)) for x in point)


def lattice_point(vertex: VertexId) -> Tuple[int, ...]:
    try:
        return tuple(int(part) for part in str(vertex).split(":"))
    except ValueError as exc:
        raise GraphError(f"not a lattice vertex: {vertex!r}") from exc


@dataclass(frozen=True)
class LatticeWalk:
    """Finitely supported step distribution mu on Z^d (steps sorted, counts > 0)."""

    d: int
    steps: Tuple[Tuple[Tuple[int, ...], int], ...]

    def __post_init__(self) -> None:
        if self.d < 1:
            raise GraphError("lattice dimension must be at least 1")
        if not self.steps:
            raise GraphError("lattice walk needs a nonempty support")
        for w, count in self.steps:
            if len(w) != self.d:
                raise GraphError(f"step {list(w)} does not have dimension {self.d}")
            if count <= 0:
                raise GraphError("negative multiplicity" if count < 0 else "zero step count")

    @classmethod
    def from_mapping(cls, mu: Mapping[Sequence[int], int], d: Optional[int] = None) -> "LatticeWalk":
        merged: Dict[Tuple[int, ...], int] = {}
        for w, count in mu.items():
            if count < 0:
                raise GraphError("negative multiplicity")
            if count == 0:
                continue
            key = tuple(int(x) for x in w)
            merged[key] = merged.get(key, 0) + int(count)
        if not merged:
            raise GraphError("lattice walk needs a nonempty support")
        dims = {len(w) for w in merged}
        if len(dims) != 1:
            raise GraphError("lattice steps have mixed dimensions")
        dim = dims.pop()
        if d is not None and d != dim:
            raise GraphError(f"declared d={d} but steps have dimension {dim}")
        return cls(dim, tuple(sorted(merged.items())))

    @classmethod
    def parse(cls, text: str, d: Optional[int] = None) -> "LatticeWalk":
        """Parse ``"1:2;-1:1"`` (d=1) or ``"1,0:1;-1,0:1"`` (d=2) into a walk."""
        mu: Dict[Tuple[int, ...], int] = {}
        for chunk in text.split(";"):
            chunk = chunk.strip()
            if not chunk:
                continue
            step, sep, count = chunk.rpartition(":")
            if not sep:
                raise GraphError(f"parse error: lattice step {chunk!r} needs 'w:count'")
            try:
                w = tuple(int(x) for x in step.split(","))
                mu[w] = mu.get(w, 0) + int(count)
            except ValueError as exc:
                raise GraphError(f"parse error: lattice step {chunk!r}") from exc
        return cls.from_mapping(mu, d)

    @property
    def support(self) -> np.ndarray:
        return np.array([w for w, _ in self.steps], dtype=float)

    @property
    def weights(self) -> np.ndarray:
        return np.array([count for _, count in self.steps], dtype=float)

    @property
    def total_weight(self) -> int:
        return sum(count for _, count in self.steps)

    @property
    def support_radius(self) -> int:
        return max(max(abs(x) for x in w) for w, _ in self.steps)

    @property
    def drift(self) -> np.ndarray:
        return self.weights @ self.support

    def spans(self) -> bool:
        return int(np.linalg.matrix_rank(self.support)) == self.d

    def generates(self, word_length: Optional[int] = None) -> bool:
        """
        Sampled check that the semigroup generated by the support is Z^d:
        0 and every +-unit vector are sums of at most ``word_length`` steps.
        """
        limit = word_length or 4 * self.support_radius * self.d + 4
        targets = {tuple(0 for _ in range(self.d))}
        for i in range(self.d):
            for sign in (1, -1):
                targets.add(tuple(sign if j == i else 0 for j in range(self.d)))
        found = set()
        frontier = {tuple(0 for _ in range(self.d))}
        box = limit * self.support_radius
        for _ in range(limit):
            step_set = set()
            for point in frontier:
                for w, _ in self.steps:
                    nxt = tuple(p + q for p, q in zip(point, w))
                    if max(abs(x) for x in nxt) <= box:
                        step_set.add(nxt)
            found |= step_set & targets
            if found == targets:
                return True
            frontier = step_set
        return False

    def to_params(self) -> Dict[str, Any]:
        return {"d": self.d, "mu": [{"w": list(w), "count": count} for w, count in self.steps]}

    def window(self, radius: int) -> FiniteGraph:
        """The box ``max|v_i| <= radius``; vertices with a step leaving the box are frontier."""
        if radius < 1:
            raise GraphError("window radius must be at least 1")
        axis = range(-radius, radius + 1)
        vertices: List[str] = []
        edges: List[Edge] = []
        frontier: List[str] = []
        for point in product(axis, repeat=self.d):
            v = lattice_vertex(point)
            vertices.append(v)
            cut = False
            for w, count in self.steps:
                target = tuple(p + q for p, q in zip(point, w))
                if max(abs(x) for x in target) > radius:
                    cut = True
                    continue
                t = lattice_vertex(target)
                if count == 1:
                    edges.append(Edge(f"{v}>{t}", v, t))
                else:
                    edges.extend(Edge(f"{v}>{t}#{k}", v, t) for k in range(1, count + 1))
            if cut:
                frontier.append(v)
        return FiniteGraph(vertices, edges, frontier=frontier, name=f"lattice-walk(d={self.d})@{radius}")


# -- the family container ----------------------------------------------


class GraphFamily:
    """A named graph presented by truncations; finite kinds ignore the depth."""

    def __init__(
        self,
        kind: str,
        truncate: Callable[[int], FiniteGraph],
        *,
        name: str = "",
        params: Optional[Dict[str, Any]] = None,
        base_vertex: Optional[VertexId] = None,
        traits: FamilyTraits = FamilyTraits(),
        schedule: Sequence[int] = DEFAULT_SCHEDULE,
        symmetric_root: Optional[SymmetricRoot] = None,
        walk: Optional[LatticeWalk] = None,
    ) -> None:
        self.kind = kind
        self.name = name or kind
        self.params: Dict[str, Any] = dict(params or {})
        self.traits = traits
        self.schedule = tuple(schedule)
        self.symmetric_root = symmetric_root
        self.walk = walk
        self._truncate = truncate
        self._base_vertex = base_vertex
        self._cache: Dict[int, FiniteGraph] = {}

    def __repr__(self) -> str:
        return f"<GraphFamily {self.kind} {self.params}>"

    @property
    def is_finite(self) -> bool:
        return self.kind in FINITE_KINDS

    @property
    def graph(self) -> FiniteGraph:
        if not self.is_finite:
            raise GraphError(f"{self.kind} is an infinite family; ask for a truncation")
        return self.truncation(1)

    def truncation(self, depth: int) -> FiniteGraph:
        if depth < 1:
            raise GraphError("depth must be at least 1")
        key = 1 if self.is_finite else depth
        if key not in self._cache:
            graph = self._truncate(key)
            if self.is_finite and graph.frontier:
                raise GraphError(f"{self.kind} graph must not have a frontier")
            self._cache[key] = graph
        return self._cache[key]

    def base_vertex(self, depth: int = 1) -> VertexId:
        if self._base_vertex is not None:
            return self._base_vertex
        return self.truncation(depth).base_vertex

    def depths(self, max_depth: int) -> List[int]:
        """Depth schedule for truncation estimates, capped at ``max_depth``."""
        if self.is_finite:
            return [1]
        cap = min(max_depth, self.schedule[-1])
        chosen = [d for d in self.schedule if d < cap]
        chosen.append(cap)
        return chosen

    def descriptor(self) -> GraphDescriptor:
        return GraphDescriptor(kind=self.kind, name=self.name, params=self.params)

    @classmethod
    def from_graph(cls, graph: FiniteGraph, *, name: str = "") -> "GraphFamily":
        if graph.frontier:
            raise GraphError("an explicit graph cannot carry a frontier")
        return cls("explicit-finite", lambda depth: graph, name=name or graph.name or "explicit")

    @classmethod
    def from_oracle(
        cls,
        truncate: Callable[[int], FiniteGraph],
        *,
        name: str = "user-oracle",
        base_vertex: Optional[VertexId] = None,
        traits: FamilyTraits = FamilyTraits(),
        schedule: Sequence[int] = DEFAULT_SCHEDULE,
    ) -> "GraphFamily":
        """Wrap a trusted Python callable ``depth -> FiniteGraph`` as a family."""
        return cls(
            "user-oracle",
            truncate,
            name=name,
            base_vertex=base_vertex,
            traits=traits,
            schedule=schedule,
        )


# -- built-in generators -----------------------------------------------


def arm_letters(n: int) -> List[str]:
    if not 1 <= n <= len(string.ascii_lowercase):
        raise GraphError(f"arms needs 1 <= n <= 26, got {n}")
    return list(string.ascii_lowercase[:n])


def _arms_truncation(n: int, depth: int) -> FiniteGraph:
    letters = arm_letters(n)
    vertices: List[str] = ["1"]
    edges: List[Edge] = []
    for x in letters:
        edges.append(Edge(f"1>{x}1", "1", f"{x}1"))
        for k in range(1, depth + 1):
            up, down = f"{x}{k}", f"{x}-{k}"
            vertices.extend([up, down])
            edges.append(Edge(f"{up}>{down}", up, down))
            if k < depth:
                edges.append(Edge(f"{up}>{x}{k + 1}", up, f"{x}{k + 1}"))
            target = "1" if k == 1 else f"{x}-{k - 1}"
            edges.append(Edge(f"{down}>{target}", down, target))
    frontier = [f"{x}{depth}" for x in letters]
    return FiniteGraph(vertices, edges, frontier=frontier, name=f"arms({n})@{depth}")


def arms(n: int = 3) -> GraphFamily:
    arm_letters(n)
    traits = FamilyTraits(
        nw_class="nonempty-infinite",
        cofinal=True,
        bounded_out_degree=True,
        d_prime=0,
        d_prime_note=(
            "the arms carry no uniform bounded path pairs: the return routes from level k "
            "have length 2k+1, so only 0 is witnessed on every hereditary set"
        ),
        closed_form=True,
    )
    return GraphFamily(
        "arms",
        lambda depth: _arms_truncation(n, depth),
        name=f"arms({n})",
        params={"n": n},
        base_vertex="1",
        traits=traits,
        schedule=(4, 8, 16, 32, 50),
    )


def _ladder_truncation(depth: int) -> FiniteGraph:
    vertices: List[str] = ["1"]
    edges = [Edge("1>x0", "1", "x0"), Edge("1>y0", "1", "y0")]
    for k in range(depth + 1):
        x, y = f"x{k}", f"y{k}"
        vertices.extend([x, y])
        edges.append(Edge(f"{x}>{y}", x, y))
        if k < depth:
            edges.append(Edge(f"{y}>x{k + 1}", y, f"x{k + 1}"))
            edges.append(Edge(f"{y}>y{k + 1}", y, f"y{k + 1}"))
    return FiniteGraph(vertices, edges, frontier=[f"y{depth}"], name=f"ladder@{depth}")


def ladder() -> GraphFamily:
    traits = FamilyTraits(
        nw_class="empty",
        cofinal=True,
        bounded_out_degree=True,
        closed_form=True,
    )
    root = SymmetricRoot(
        root="y0",
        starts=("y0", "x1"),
        symmetry="level shift x_n -> x_(n+1), y_n -> y_(n+1)",
        depth_for=lambda m, l: m + l + 2,
    )
    return GraphFamily(
        "ladder",
        _ladder_truncation,
        name="ladder",
        base_vertex="1",
        traits=traits,
        schedule=(4, 8, 16),
        symmetric_root=root,
    )


def rose(n: int = 2) -> GraphFamily:
    if n < 1:
        raise GraphError("rose needs at least one loop")
    graph = graph_from_adjacency({"v": {"v": n}}, name=f"rose({n})")
    traits = FamilyTraits(nw_class="nonempty-finite", cofinal=True, bounded_out_degree=True)
    return GraphFamily("rose", lambda depth: graph, name=f"rose({n})", params={"n": n}, base_vertex="v", traits=traits)


def cycle(p: int = 3) -> GraphFamily:
    if p < 1:
        raise GraphError("cycle needs p >= 1")
    graph = graph_from_adjacency({i: {(i + 1) % p: 1} for i in range(p)}, name=f"cycle({p})")
    traits = FamilyTraits(nw_class="nonempty-finite", cofinal=True, bounded_out_degree=True)
    return GraphFamily("cycle", lambda depth: graph, name=f"cycle({p})", params={"p": p}, base_vertex=0, traits=traits)


def lattice_walk(walk: LatticeWalk) -> GraphFamily:
    generating = walk.generates()
    traits = FamilyTraits(
        nw_class="nonempty-infinite" if generating else None,
        cofinal=True if generating else None,
        bounded_out_degree=True,
        closed_form=generating,
    )
    origin = lattice_vertex([0] * walk.d)
    radius = walk.support_radius
    root = SymmetricRoot(
        root=origin,
        starts=(origin,),
        symmetry="translation by Z^d",
        depth_for=lambda m, l: (m + l) * radius + 1,
    )
    schedule = (5, 10, 20, 30) if walk.d == 1 else (2, 4, 8, 16)
    return GraphFamily(
        "lattice-walk",
        walk.window,
        name=f"lattice-walk(d={walk.d})",
        params=walk.to_params(),
        base_vertex=origin,
        traits=traits,
        schedule=schedule,
        symmetric_root=root if generating else None,
        walk=walk,
    )


# -- documents ---------------------------------------------------------


def _int_param(params: Mapping[str, Any], key: str, default: int) -> int:
    value = params.get(key, default)
    try:
        return int(value)
    except (TypeError, ValueError) as exc:
        raise GraphError(f"parameter {key!r} must be an integer, got {value!r}") from exc


def make_family(name: str, params: Optional[Mapping[str, Any]] = None) -> GraphFamily:
    """Instantiate a built-in family from its name and (possibly string) parameters."""
    params = dict(params or {})
    if name == "arms":
        return arms(_int_param(params, "n", 3))
    if name == "ladder":
        return ladder()
    if name == "rose":
        return rose(_int_param(params, "n", 2))
    if name == "cycle":
        return cycle(_int_param(params, "p", 3))
    if name == "lattice-walk":
        mu = params.get("mu", "1:1;-1:1")
        d = None if params.get("d") is None else _int_param(params, "d", 1)
        if isinstance(mu, str):
            return lattice_walk(LatticeWalk.parse(mu, d))
        try:
            parsed = LatticeParams.model_validate({"d": d, "mu": mu})
        except ValidationError as exc:
            raise GraphError(_validation_message(exc)) from exc
        walk = LatticeWalk.from_mapping({tuple(step.w): step.count for step in parsed.mu}, parsed.d)
        return lattice_walk(walk)
    raise GraphError(f"unknown family {name!r}")


def _validation_message(exc: ValidationError) -> str:
    first = exc.errors()[0]
    location = ".".join(str(part) for part in first.get("loc", ()))
    message = str(first.get("msg", "invalid document")).removeprefix("Value error, ")
    return f"parse error at {location or 'document'}: {message}"


def _explicit_graph(document: ExplicitGraphDocument) -> FiniteGraph:
    edges: List[Edge] = []
    counter = 1
    for entry in document.edges:
        for k in range(1, entry.count + 1):
            if entry.id is None:
                edge_id = f"e{counter}"
                counter += 1
            elif entry.count == 1:
                edge_id = entry.id
            else:
                edge_id = f"{entry.id}#{k}"
            edges.append(Edge(edge_id, entry.src, entry.dst))
    return FiniteGraph(document.vertices, edges, name=document.name)


def load_graph(document: Union[str, bytes, Mapping[str, Any]]) -> GraphFamily:
    """Parse a graph document (JSON text or an already decoded mapping)."""
    if isinstance(document, (str, bytes)):
        try:
            raw = json.loads(document)
        except json.JSONDecodeError as exc:
            raise GraphError(f"parse error: {exc.msg} (line {exc.lineno})") from exc
    else:
        raw = dict(document)
    if not isinstance(raw, dict):
        raise GraphError("parse error: a graph document must be a JSON object")
    try:
        if "family" in raw:
            family_doc = FamilyDocument.model_validate(raw)
            return make_family(family_doc.family, family_doc.params)
        explicit = ExplicitGraphDocument.model_validate(raw)
    except ValidationError as exc:
        raise GraphError(_validation_message(exc)) from exc
    graph = _explicit_graph(explicit)
    return GraphFamily.from_graph(graph, name=explicit.name or "explicit")


def forward_closure(graph: FiniteGraph, seeds: Iterable[VertexId]) -> List[VertexId]:
    """Vertices reachable from ``seeds`` (seeds included), in vertex order."""
    digraph = graph.to_networkx()
    reached: Set[VertexId] = set()
    for v in seeds:
        graph.require(v)
        if v not in reached:
            reached |= nx.descendants(digraph, v) | {v}
    return sort_vertices(reached)
