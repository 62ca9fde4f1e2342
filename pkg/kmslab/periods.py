"""
Period invariants of a graph and the factor type they imply.

``d_G`` generates the intersection over vertices v of the groups Delta_v of
path-length differences |mu| - |nu| (mu, nu from v with a common range).
``d'_G`` generates the group of differences witnessed uniformly on a
hereditary set by bounded path pairs; the search certifies elements of that
group and never reports a value it has not checked on every path.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from functools import reduce
from typing import Dict, List, NamedTuple, Optional, Sequence, Set, Tuple, Union

from .families import GraphFamily, forward_closure
from .graph import Edge, FiniteGraph, VertexId, sort_vertices
from .log import get_logger
from .schemas import (
    CertificateEntry,
    DPrimeCertificate,
    DPrimeResult,
    FactorType,
    PeriodReport,
    WitnessPair,
)
from .settings import get_settings
from .structure import is_cofinal


logger = get_logger(__name__)

_STABLE_RUN = 3
_MAX_WITNESSES = 32


class PeriodValue(NamedTuple):
    value: int
    method: str
    history: List[CertificateEntry]


def vertex_period(graph: FiniteGraph, vertex: VertexId) -> int:
    """d_v: gcd of ref(u) + 1 - ref(w) over edges reachable from ``vertex`` (0 if none)."""
    ref: Dict[VertexId, int] = {vertex: 0}
    queue = deque([vertex])
    divisor = 0
    while queue:
        u = queue.popleft()
        for edge in graph.out_edges(u):
            w = edge.dst
            if w not in ref:
                ref[w] = ref[u] + 1
                queue.append(w)
            else:
                divisor = math.gcd(divisor, abs(ref[u] + 1 - ref[w]))
    return divisor


def _intersection_generator(periods: Sequence[int]) -> int:
    """Generator of the intersection of the groups Z*d_v (Z*0 = {0})."""
    if not periods or any(p == 0 for p in periods):
        return 0
    return reduce(math.lcm, periods)


def graph_period(graph: FiniteGraph, vertices: Optional[Sequence[VertexId]] = None) -> int:
    chosen = graph.vertices if vertices is None else vertices
    return _intersection_generator([vertex_period(graph, v) for v in chosen])


def d_G(g: Union[FiniteGraph, GraphFamily], *, depth: Optional[int] = None) -> PeriodValue:
    if isinstance(g, FiniteGraph):
        value = graph_period(g)
        return PeriodValue(value, "exact-finite", [CertificateEntry(depth=1, estimate=float(value))])
    if g.is_finite:
        return d_G(g.graph)

    history: List[CertificateEntry] = []
    for d in g.depths(get_settings().depth if depth is None else depth):
        core = g.truncation(max(1, d // 2)).interior
        value = graph_period(g.truncation(d), core)
        history.append(CertificateEntry(depth=d, estimate=float(value)))
        recent = {int(entry.estimate) for entry in history[-_STABLE_RUN:]}
        if len(history) >= _STABLE_RUN and len(recent) == 1:
            break
    else:
        logger.warning("d_G of %s did not stabilize over %d depths", g.name, _STABLE_RUN)
    return PeriodValue(int(history[-1].estimate), "truncation-stabilized", history)


# -- d'_G search -------------------------------------------------------


@dataclass
class _Layers:
    """Vertices reachable from ``start`` in exactly k steps, k = 0..L."""

    start: VertexId
    levels: List[Dict[VertexId, None]]

    @classmethod
    def build(cls, graph: FiniteGraph, start: VertexId, length: int) -> "_Layers":
        levels: List[Dict[VertexId, None]] = [{start: None}]
        for _ in range(length):
            nxt: Dict[VertexId, None] = {}
            for v in levels[-1]:
                for edge in graph.out_edges(v):
                    nxt.setdefault(edge.dst, None)
            levels.append(nxt)
        return cls(start, levels)

    def lengths(self, target: VertexId) -> List[int]:
        return [k for k, level in enumerate(self.levels) if target in level]

    def path(self, graph: FiniteGraph, target: VertexId, length: int) -> List[str]:
        """Edge ids of one path of ``length`` to ``target`` (smallest ids first)."""
        edges: List[Edge] = []
        current = target
        for k in range(length, 0, -1):
            previous = self.levels[k - 1]
            edge = next(
                e
                for u in sort_vertices(previous)
                for e in graph.out_edges(u)
                if e.dst == current
            )
            edges.append(edge)
            current = edge.src
        return [edge.id for edge in reversed(edges)]


@dataclass
class _Certificate:
    root: VertexId
    m: int
    d: int
    values: List[int]
    witnesses: List[WitnessPair]


def _certify_root(
    graph: FiniteGraph,
    root: VertexId,
    starts: Sequence[VertexId],
    m_max: int,
    l_max: int,
) -> List[_Certificate]:
    layers = {u: _Layers.build(graph, u, max(m_max, l_max)) for u in starts}
    found: List[_Certificate] = []
    for m in range(1, m_max + 1):
        pairs = [(u, w) for u in starts for w in sort_vertices(layers[u].levels[m])]
        if not pairs:
            break
        common: Optional[Set[int]] = None
        for u, w in pairs:
            lengths = [k for k in layers[u].lengths(w) if k <= l_max]
            differences = {a - b for a in lengths for b in lengths}
            common = differences if common is None else common & differences
            if common <= {0}:
                break
        positives = sorted(x for x in (common or ()) if x > 0)
        if not positives:
            continue
        d = positives[0]
        witnesses: List[WitnessPair] = []
        for u, w in pairs[:_MAX_WITNESSES]:
            lengths = [k for k in layers[u].lengths(w) if k <= l_max]
            longer = next(a for a in lengths if a - d in lengths)
            witnesses.append(
                WitnessPair(
                    start=u,
                    end=w,
                    mu=layers[u].path(graph, w, m),
                    plus=layers[u].path(graph, w, longer),
                    minus=layers[u].path(graph, w, longer - d),
                )
            )
        found.append(_Certificate(root, m, d, positives, witnesses))
        logger.debug("root %r: M=%d certifies %s", root, m, positives)
    return found


def _candidates(
    g: Union[FiniteGraph, GraphFamily], m_max: int, l_max: int, depth: Optional[int]
) -> Tuple[FiniteGraph, List[Tuple[VertexId, Tuple[VertexId, ...]]], str, bool]:
    """Search graph, (root, starts) pairs, symmetry note and whether results are sound."""
    if isinstance(g, GraphFamily) and g.is_finite:
        g = g.graph
    if isinstance(g, FiniteGraph):
        roots = [(v, tuple(forward_closure(g, [v]))) for v in g.vertices]
        return g, roots, "every vertex of H", not g.frontier

    if g.symmetric_root is not None:
        sym = g.symmetric_root
        graph = g.truncation(sym.depth_for(m_max, l_max))
        return graph, [(sym.root, sym.starts)], sym.symmetry, True

    d = depth or (m_max + l_max + 2)
    graph = g.truncation(d)
    inner = set(g.truncation(max(1, d // 2)).interior)
    base = g.base_vertex(d)
    starts = tuple(v for v in forward_closure(graph, [base]) if v in inner)
    return graph, [(base, starts)], "truncation evidence", False


def d_prime_search(
    g: Union[FiniteGraph, GraphFamily],
    m_max: Optional[int] = None,
    l_max: Optional[int] = None,
    *,
    depth: Optional[int] = None,
    upper: Optional[int] = None,
) -> DPrimeResult:
    settings = get_settings()
    m_max = settings.m_max if m_max is None else m_max
    l_max = settings.l_max if l_max is None else l_max
    if upper is None:
        upper = d_G(g, depth=depth).value

    graph, roots, symmetry, sound = _candidates(g, m_max, l_max, depth)
    certificates: List[_Certificate] = []
    for root, starts in roots:
        certificates.extend(_certify_root(graph, root, starts, m_max, l_max))
        lower = reduce(math.gcd, (v for c in certificates for v in c.values), 0)
        if sound and upper > 0 and lower == upper:
            break
    values = sorted({v for c in certificates for v in c.values})
    lower = reduce(math.gcd, values, 0)
    if upper > 0 and lower > 0 and lower % upper:
        logger.warning("certified d=%d is not a multiple of d_G=%d", lower, upper)

    best = None
    if certificates:
        best = min(certificates, key=lambda c: (c.d != lower, c.d, c.m))
    certificate = None
    if best is not None:
        certificate = DPrimeCertificate(
            root=best.root, m=best.m, l=l_max, d=best.d, symmetry=symmetry, witnesses=best.witnesses
        )

    declared = g.traits.d_prime if isinstance(g, GraphFamily) and not g.is_finite else None
    if declared is not None:
        return DPrimeResult(
            status="declared",
            value=declared,
            lower_certificate=lower,
            upper_bound=upper,
            evidence=values,
            provenance=g.traits.d_prime_note,
            certificate=certificate,
        )
    if not sound:
        logger.warning("d'_G of %s rests on truncation evidence only", getattr(g, "name", "graph"))
        return DPrimeResult(
            status="interval",
            lower_certificate=lower,
            upper_bound=upper,
            evidence=values,
            provenance="search on a truncation without a symmetry argument",
            certificate=certificate,
        )
    if upper > 0 and lower == upper:
        return DPrimeResult(
            status="exact",
            value=upper,
            lower_certificate=lower,
            upper_bound=upper,
            certified=values,
            provenance=f"bounded path pairs checked on every length-M path ({symmetry})",
            certificate=certificate,
        )
    return DPrimeResult(
        status="interval",
        lower_certificate=lower,
        upper_bound=upper,
        certified=values,
        provenance=f"search exhausted at M<={m_max}, L<={l_max}",
        certificate=certificate,
    )


# -- reports and factor type -------------------------------------------


def _span(k: int) -> str:
    if k == 0:
        return "{0}"
    return "ℤβ" if k == 1 else f"ℤ{k}β"


def _hypotheses(family: GraphFamily) -> Dict[str, Optional[bool]]:
    if family.is_finite:
        return {"cofinal": is_cofinal(family.graph), "bounded_out_degree": True}
    return {
        "cofinal": family.traits.cofinal,
        "bounded_out_degree": family.traits.bounded_out_degree,
    }


def period_report(
    family: GraphFamily,
    *,
    depth: Optional[int] = None,
    m_max: Optional[int] = None,
    l_max: Optional[int] = None,
) -> PeriodReport:
    dg = d_G(family, depth=depth)
    prime = d_prime_search(family, m_max, l_max, upper=dg.value)
    if prime.value is not None and prime.value == dg.value:
        gamma = f"Γ = {_span(dg.value)}"
    else:
        lower = prime.value if prime.value is not None else prime.lower_certificate
        gamma = f"{_span(lower)} ⊆ Γ ⊆ {_span(dg.value)}"
    return PeriodReport(
        d_G=dg.value,
        d_G_method=dg.method,
        d_G_history=dg.history,
        d_prime_G=prime,
        gamma=gamma,
        hypotheses=_hypotheses(family),
    )


def factor_type(report: PeriodReport, beta: float, *, tol: Optional[float] = None) -> FactorType:
    """III_lambda / II_infinity when d'_G = d_G > 0, otherwise the sandwich only."""
    tol = get_settings().tol if tol is None else tol
    d = report.d_G
    prime = report.d_prime_G
    lower = prime.value if prime.value is not None else prime.lower_certificate
    sandwich = f"{_span(lower)} ⊆ Γ ⊆ {_span(d)}, β = {beta!r}"
    hypotheses = dict(report.hypotheses)
    agree = prime.value is not None and prime.value == d and d > 0
    if agree and False not in hypotheses.values():
        if abs(beta) <= tol:
            return FactorType(kind="II_infinity", beta=beta, sandwich=sandwich, hypotheses=hypotheses)
        lam = math.exp(-d * abs(beta))
        return FactorType(kind="III_lambda", beta=beta, lam=lam, sandwich=sandwich, hypotheses=hypotheses)
    return FactorType(kind="inconclusive", beta=beta, sandwich=sandwich, hypotheses=hypotheses)
