"""
Critical inverse temperature beta0 from loop counting and Perron roots of
finite (truncated) adjacency matrices.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import optimize, sparse
from scipy.sparse import linalg as sparse_linalg

from .errors import ComputationError, NoLoopsError
from .families import GraphFamily
from .graph import FiniteGraph, VertexId
from .log import get_logger
from .periods import vertex_period
from .schemas import Beta0Result, CertificateEntry, RecurrenceResult, VertexEstimate
from .settings import get_settings
from .structure import strongly_connected_cores


logger = get_logger(__name__)

_POLISH_STEPS = 50
_GROWTH_TERMS = 96


@dataclass(frozen=True)
class PerronPair:
    value: float
    vector: np.ndarray
    iterations: int
    method: str


def perron_pair(
    matrix,
    *,
    tol: Optional[float] = None,
    max_iter: Optional[int] = None,
    arpack_threshold: Optional[int] = None,
) -> PerronPair:
    """
    Perron root and nonnegative eigenvector of an irreducible nonnegative matrix.

    Power iteration runs on A + I, which is primitive whenever A is irreducible,
    and stops once the Collatz-Wielandt bracket min/max (Bx)_i / x_i is tighter
    than ``tol`` relative to the root. The vector is scaled to max 1.
    """
    settings = get_settings()
    tol = settings.tol if tol is None else tol
    max_iter = settings.max_iter if max_iter is None else max_iter
    threshold = settings.arpack_threshold if arpack_threshold is None else arpack_threshold

    a = sparse.csr_matrix(matrix, dtype=float)
    size = a.shape[0]
    if size == 0 or a.shape[0] != a.shape[1]:
        raise ComputationError("perron_pair needs a nonempty square matrix")
    if a.nnz == 0:
        return PerronPair(0.0, np.ones(size), 0, "trivial")
    if size > threshold:
        return _arpack_pair(a)

    shifted = a + sparse.identity(size, format="csr")
    x = np.ones(size)
    best: Optional[Tuple[float, float, np.ndarray]] = None
    converged_at: Optional[int] = None
    for iteration in range(1, max_iter + 1):
        y = shifted @ x
        ratios = y / x
        low, high = float(ratios.min()), float(ratios.max())
        x = y / y.max()
        spread = high - low
        if best is None or spread < best[0]:
            best = (spread, 0.5 * (low + high), x)
        if converged_at is None and spread <= tol * high:
            converged_at = iteration
        if converged_at is not None and iteration - converged_at >= _POLISH_STEPS:
            break
        if spread == 0.0:
            break
    if converged_at is None:
        logger.warning("power iteration stalled after %d steps; falling back to a dense eigensolver", max_iter)
        return _dense_pair(a)
    _, midpoint, vector = best
    logger.debug("power iteration converged in %d steps (root %.15g)", converged_at, midpoint - 1.0)
    return PerronPair(max(midpoint - 1.0, 0.0), vector / vector.max(), iteration, "power-iteration")


def _normalized(vector: np.ndarray) -> np.ndarray:
    vector = np.abs(np.real(vector))
    return vector / vector.max()


def _arpack_pair(a: sparse.csr_matrix) -> PerronPair:
    try:
        values, vectors = sparse_linalg.eigs(a, k=1, which="LR")
    except sparse_linalg.ArpackNoConvergence:
        logger.warning("ARPACK did not converge on a %d-vertex block; using a dense eigensolver", a.shape[0])
        return _dense_pair(a)
    return PerronPair(float(np.real(values[0])), _normalized(vectors[:, 0]), 0, "arpack")


def _dense_pair(a: sparse.csr_matrix) -> PerronPair:
    values, vectors = np.linalg.eig(a.toarray())
    index = int(np.argmax(np.real(values)))
    return PerronPair(float(np.real(values[index])), _normalized(vectors[:, index]), 0, "dense")


def spectral_radius(graph: FiniteGraph) -> float:
    """Largest Perron root over the strongly connected cores (0 if none)."""
    radius = 0.0
    for core in strongly_connected_cores(graph):
        radius = max(radius, perron_pair(graph.matrix(core)).value)
    return radius


def loop_counts(graph: FiniteGraph, vertex: VertexId, n_max: int) -> List[int]:
    """Exact (A^n)_vv for n = 1..n_max by big-integer vector propagation."""
    graph.require(vertex)
    if n_max < 1:
        raise ComputationError("n_max must be at least 1")
    successors = {v: graph.successors(v) for v in graph.vertices}
    current: Dict[VertexId, int] = {vertex: 1}
    counts: List[int] = []
    for _ in range(n_max):
        nxt: Dict[VertexId, int] = {}
        for v, paths in current.items():
            for w, multiplicity in successors[v].items():
                nxt[w] = nxt.get(w, 0) + paths * multiplicity
        current = nxt
        counts.append(current.get(vertex, 0))
    return counts


def loop_growth(graph: FiniteGraph, vertex: VertexId, n_max: int = _GROWTH_TERMS) -> VertexEstimate:
    """Estimate log limsup (A^n_vv)^(1/n) along multiples of the period at ``vertex``."""
    period = vertex_period(graph, vertex)
    counts = loop_counts(graph, vertex, n_max)
    estimate = 0.0
    terms = 0
    if period > 0:
        for n in range(n_max - n_max % period, 0, -period):
            if counts[n - 1] > 0:
                estimate = math.log(counts[n - 1]) / n
                terms = n
                break
    if terms == 0:
        raise NoLoopsError(f"no loops at vertex {vertex!r} up to length {n_max}")
    return VertexEstimate(vertex=vertex, period=period, terms=terms, estimate=estimate)


def _arms_beta_min(n: int) -> float:
    root = optimize.brentq(lambda x: x**3 - x - n, 1.0, n + 1.0, xtol=1e-15, rtol=4 * np.finfo(float).eps)
    return math.log(root)


def closed_form_beta0(family: GraphFamily) -> Optional[float]:
    if family.kind == "arms":
        return _arms_beta_min(int(family.params["n"]))
    if family.kind == "lattice-walk" and family.traits.closed_form:
        from .lattice import minimize_mgf

        return minimize_mgf(family.walk).beta0
    return None


def beta0(
    family: GraphFamily,
    *,
    depth: Optional[int] = None,
    tol: Optional[float] = None,
    schedule: Optional[Sequence[int]] = None,
) -> Beta0Result:
    settings = get_settings()
    tol = settings.tol if tol is None else tol
    depth = settings.depth if depth is None else depth
    if family.traits.nw_class == "empty":
        raise NoLoopsError(f"no loops: the non-wandering part of {family.name} is empty")

    if family.is_finite:
        graph = family.graph
        cores = strongly_connected_cores(graph)
        if not cores:
            raise NoLoopsError(f"no loops: the non-wandering part of {family.name} is empty")
        value = math.log(max(perron_pair(graph.matrix(core)).value for core in cores))
        estimates = _vertex_estimates(graph, [core[0] for core in cores[:3]])
        if len(cores) == 1:
            _cross_check(family, value, estimates)
        return Beta0Result(
            value=value,
            method="finite-perron",
            certificate=[CertificateEntry(depth=1, estimate=value)],
            tolerance=tol,
            vertex_estimates=estimates,
        )

    depths = list(schedule) if schedule else family.depths(depth)
    certificate: List[CertificateEntry] = []
    converged = False
    for d in depths:
        graph = family.truncation(d)
        radius = spectral_radius(graph)
        if radius <= 0.0:
            logger.debug("%s at depth %d: no loops yet", family.name, d)
            continue
        estimate = math.log(radius)
        if certificate:
            previous = certificate[-1].estimate
            if estimate < previous - 10 * tol * max(1.0, abs(previous)):
                raise ComputationError(
                    f"truncation estimates decreased from {previous!r} to {estimate!r} at depth {d}"
                )
            if abs(estimate - previous) < tol * max(1.0, abs(previous)):
                converged = True
        certificate.append(CertificateEntry(depth=d, estimate=estimate))
        logger.debug("%s at depth %d: log rho = %.15g", family.name, d, estimate)
        if converged:
            break
    if not certificate:
        raise NoLoopsError(f"no loops found in {family.name} up to depth {depths[-1]}")

    last_graph = family.truncation(certificate[-1].depth)
    base = family.base_vertex(certificate[-1].depth)
    estimates = _vertex_estimates(last_graph, [base]) if vertex_on_loop(last_graph, base) else []

    closed = closed_form_beta0(family)
    if closed is not None:
        top = max(entry.estimate for entry in certificate)
        if top > closed + 1e-9 * max(1.0, abs(closed)):
            raise ComputationError(f"truncation estimate {top!r} exceeds the closed form {closed!r}")
        return Beta0Result(
            value=closed,
            method="exact-closed-form",
            certificate=certificate,
            tolerance=tol,
            vertex_estimates=estimates,
        )

    growing = False
    if not converged and len(certificate) >= 3:
        last = certificate[-1].estimate - certificate[-2].estimate
        before = certificate[-2].estimate - certificate[-3].estimate
        growing = last > 0.5 * before
    if not converged:
        logger.warning(
            "beta0 of %s did not settle by depth %d; reporting a lower bound",
            family.name,
            certificate[-1].depth,
        )
    return Beta0Result(
        value=certificate[-1].estimate,
        method="truncation-limit",
        certificate=certificate,
        tolerance=tol,
        lower_bound_only=not converged,
        growing=growing,
        vertex_estimates=estimates,
    )


def vertex_on_loop(graph: FiniteGraph, vertex: VertexId) -> bool:
    return any(vertex in core for core in strongly_connected_cores(graph))


def _vertex_estimates(graph: FiniteGraph, vertices: Sequence[VertexId]) -> List[VertexEstimate]:
    return [loop_growth(graph, v) for v in vertices]


def _cross_check(family: GraphFamily, value: float, estimates: Sequence[VertexEstimate]) -> None:
    for item in estimates:
        if abs(item.estimate - value) > 0.1 * max(1.0, value):
            logger.warning(
                "loop growth at %r (%.6g over %d terms) is far from beta0 %.6g on %s",
                item.vertex,
                item.estimate,
                item.terms,
                value,
                family.name,
            )


def recurrence_test(
    family: GraphFamily,
    beta: float,
    vertex: VertexId,
    n_max: Optional[int] = None,
    *,
    depth: Optional[int] = None,
    bound: Optional[float] = None,
) -> RecurrenceResult:
    """
    Partial sums of sum_n A^n_vv e^(-n beta), starting at n = 0.

    Divergent when the partial sum passes ``bound`` while the mean term over
    the last quarter is at least half the mean over the quarter before it.
    """
    settings = get_settings()
    n_max = settings.recurrence_terms if n_max is None else n_max
    bound = settings.recurrence_bound if bound is None else bound
    graph = family.truncation(settings.depth if depth is None else depth)
    counts = loop_counts(graph, vertex, n_max)

    terms = [1.0]
    total = 1.0
    for n, count in enumerate(counts, start=1):
        if count == 0:
            terms.append(0.0)
            continue
        exponent = math.log(count) - n * beta
        if exponent > 700.0:
            logger.debug("recurrence terms overflow at n=%d; series diverges", n)
            return RecurrenceResult(
                vertex=vertex, beta=beta, status="divergent", terms=n - 1, partial_sum=total
            )
        term = math.exp(exponent)
        terms.append(term)
        total += term

    window = max(1, len(terms) // 4)
    recent = sum(terms[-window:]) / window
    earlier = sum(terms[-2 * window : -window]) / window
    if total > bound and recent >= 0.5 * earlier and recent > 0.0:
        return RecurrenceResult(vertex=vertex, beta=beta, status="divergent", terms=n_max, partial_sum=total)

    tail = None
    if earlier > 0.0 and recent < earlier:
        # per-term ratio of the window means, continued geometrically
        ratio = (recent / earlier) ** (1.0 / window)
        tail = recent * ratio / (1.0 - ratio)
    return RecurrenceResult(
        vertex=vertex,
        beta=beta,
        status="convergent-so-far",
        terms=n_max,
        partial_sum=total,
        tail_estimate=tail,
    )
