"""
Nonnegative solutions of sum_w A_vw xi_w = e^(beta F0(v)) xi_v.

``solve_finite`` handles explicit graphs (Perron pair or a beta search for a
sign-definite potential); ``solve_family`` dispatches to the closed forms of
the built-in families and otherwise solves a truncation with a boundary
policy on its frontier.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Literal, Mapping, Optional, Sequence, Union

import networkx as nx
import numpy as np
from pydantic import ValidationError
from scipy import sparse
from scipy.sparse import linalg as sparse_linalg

from .errors import (
    ComputationError,
    ConvergenceError,
    GraphError,
    InfeasibleBetaError,
    PotentialError,
    ReducibleGraphError,
    ResidualError,
)
from .families import GraphFamily, arm_letters
from .graph import FiniteGraph, FinitePath, VertexId
from .log import get_logger
from .schemas import EigenSolutionModel, PotentialDocument, ResidualReport, keyed
from .settings import get_settings
from .spectral import perron_pair, spectral_radius
from .structure import is_cofinal, strongly_connected_cores


logger = get_logger(__name__)

# relative distance within which a requested beta is taken to be the admissible one
_SNAP = 1e-6
# largest exponent kept for xi entries, with headroom for sums over out-edges
_LOG_MAX = float(np.log(np.finfo(float).max)) - 2.0


@dataclass(frozen=True)
class VertexPotential:
    """F0 on vertices: ``default`` everywhere except ``overrides`` (keyed by str(vertex))."""

    default: float = 1.0
    overrides: Mapping[str, float] = field(default_factory=dict)

    def __call__(self, vertex: VertexId) -> float:
        return float(self.overrides.get(str(vertex), self.default))

    @classmethod
    def gauge(cls) -> "VertexPotential":
        return cls()

    @classmethod
    def constant(cls, value: float) -> "VertexPotential":
        return cls(default=float(value))

    @classmethod
    def from_document(cls, document: Union[str, bytes, Mapping[str, Any]]) -> "VertexPotential":
        try:
            if isinstance(document, (str, bytes)):
                parsed = PotentialDocument.model_validate_json(document)
            else:
                parsed = PotentialDocument.model_validate(dict(document))
        except ValidationError as exc:
            raise PotentialError(f"invalid potential document: {exc.errors()[0]['msg']}") from exc
        return cls(default=parsed.default, overrides={str(k): v for k, v in parsed.overrides.items()})

    @property
    def is_gauge(self) -> bool:
        return self.default == 1.0 and all(value == 1.0 for value in self.overrides.values())

    def of_path(self, path: FinitePath) -> float:
        """F0(mu) = sum of F0(s(e_i))."""
        return sum(self(edge.src) for edge in path.edges)

    def values(self, vertices: Sequence[VertexId]) -> np.ndarray:
        return np.array([self(v) for v in vertices], dtype=float)

    def constant_on(self, vertices: Sequence[VertexId]) -> Optional[float]:
        values = {self(v) for v in vertices}
        return values.pop() if len(values) == 1 else None

    def to_json(self) -> str:
        return json.dumps({"default": self.default, "overrides": dict(self.overrides)}, sort_keys=True)


@dataclass
class EigenSolution:
    beta: float
    xi: Dict[VertexId, float]
    base_vertex: VertexId
    residual: float
    exactness: Literal["closed-form", "numeric"]
    potential: VertexPotential = field(default_factory=VertexPotential.gauge)
    graph: Optional[FiniteGraph] = field(default=None, repr=False, compare=False)
    label: str = ""
    parameters: Dict[str, float] = field(default_factory=dict)

    def to_model(self) -> EigenSolutionModel:
        return EigenSolutionModel(
            beta=self.beta,
            base_vertex=self.base_vertex,
            exactness=self.exactness,
            residual=self.residual,
            label=self.label,
            parameters=self.parameters,
            xi=keyed(self.xi),
        )

    def scaled(self, factor: float) -> "EigenSolution":
        if factor <= 0:
            raise PotentialError("scaling factor must be positive")
        return EigenSolution(
            beta=self.beta,
            xi={v: factor * value for v, value in self.xi.items()},
            base_vertex=self.base_vertex,
            residual=self.residual,
            exactness=self.exactness,
            potential=self.potential,
            graph=self.graph,
            label=self.label,
            parameters=dict(self.parameters),
        )


@dataclass(frozen=True)
class BoundaryPolicy:
    """
    Frontier values for truncation solves. ``zero`` pins the base vertex to 1
    and the frontier to 0 (the minimal solution); ``profile`` pins the
    frontier to the given values and normalizes at the base afterwards.
    """

    kind: Literal["zero", "profile"] = "zero"
    profile: Optional[Callable[[VertexId], float]] = field(default=None, compare=False)

    @classmethod
    def zero(cls) -> "BoundaryPolicy":
        return cls("zero")

    @classmethod
    def from_profile(cls, profile: Union[Mapping[VertexId, float], Callable[[VertexId], float]]) -> "BoundaryPolicy":
        if callable(profile):
            return cls("profile", profile)
        values = dict(profile)

        def lookup(vertex: VertexId) -> float:
            try:
                return float(values[vertex])
            except KeyError as exc:
                raise PotentialError(f"boundary profile has no value for {vertex!r}") from exc

        return cls("profile", lookup)


def verify(
    graph: FiniteGraph,
    beta: float,
    potential: Optional[VertexPotential],
    xi: Mapping[VertexId, float],
    *,
    tol: Optional[float] = None,
) -> ResidualReport:
    """Per-vertex residuals |sum_w A_vw xi_w - e^(beta F0(v)) xi_v| / max(1, xi_v)."""
    tol = get_settings().residual_tol if tol is None else tol
    potential = potential or VertexPotential.gauge()
    for v in graph.vertices:
        if v not in xi:
            raise PotentialError(f"missing value for vertex {v!r}")
    residuals: Dict[VertexId, float] = {}
    for v in graph.interior:
        total = sum(xi[edge.dst] for edge in graph.out_edges(v))
        scale = math.exp(beta * potential(v))
        residuals[v] = abs(total - scale * xi[v]) / max(1.0, abs(xi[v]))
    values = [float(xi[v]) for v in graph.vertices]
    peak = max((abs(x) for x in values), default=0.0)
    worst = max(residuals.values(), default=0.0)
    nonnegative = min(values, default=0.0) >= -tol * max(1.0, peak)
    nonzero = peak > 0.0
    return ResidualReport(
        residuals=keyed(residuals),
        max_residual=worst,
        tolerance=tol,
        nonnegative=nonnegative,
        nonzero=nonzero,
        passed=worst <= tol and nonnegative and nonzero,
        frontier_excluded=[v for v in graph.vertices if v in graph.frontier],
    )


def _finished(
    graph: FiniteGraph,
    beta: float,
    potential: VertexPotential,
    values: Mapping[VertexId, float],
    base: VertexId,
    exactness: str,
    *,
    label: str = "",
    parameters: Optional[Dict[str, float]] = None,
) -> EigenSolution:
    pivot = values[base]
    if pivot <= 0.0:
        raise ComputationError(f"solution vanishes at the base vertex {base!r}")
    xi = {v: float(values[v]) / pivot for v in graph.vertices}
    report = verify(graph, beta, potential, xi)
    return EigenSolution(
        beta=beta,
        xi=xi,
        base_vertex=base,
        residual=report.max_residual,
        exactness=exactness,
        potential=potential,
        graph=graph,
        label=label,
        parameters=dict(parameters or {}),
    )


# -- explicit finite graphs --------------------------------------------


def _log_radius(matrix: sparse.csr_matrix) -> float:
    radius = perron_pair(matrix).value
    return math.log(radius) if radius > 0.0 else -math.inf


def _beta_search(matrix: sparse.csr_matrix, potential: np.ndarray, tol: float) -> float:
    """Find beta with rho(D(beta)^-1 A) = 1; h below is monotone because F0 has one sign."""
    reach = 700.0 / float(np.max(np.abs(potential)))

    def h(beta: float) -> float:
        scaled = sparse.diags(np.exp(-beta * potential)) @ matrix
        return _log_radius(sparse.csr_matrix(scaled))

    low, high = -1.0, 1.0
    lo_val, hi_val = h(low), h(high)
    while (lo_val > 0) == (hi_val > 0):
        if 2.0 * high > reach:
            raise ConvergenceError("could not bracket beta for the given potential")
        low, high = 2.0 * low, 2.0 * high
        lo_val, hi_val = h(low), h(high)
    for _ in range(400):
        mid = 0.5 * (low + high)
        mid_val = h(mid)
        if (mid_val > 0) == (lo_val > 0):
            low, lo_val = mid, mid_val
        else:
            high = mid
        if high - low <= tol * max(1.0, abs(mid)):
            return 0.5 * (low + high)
    raise ConvergenceError("beta bisection did not converge")


def _core_solution(
    graph: FiniteGraph, core: List[VertexId], potential: VertexPotential, tol: float
) -> tuple:
    matrix = graph.matrix(core)
    constant = potential.constant_on(core)
    if constant is not None:
        if constant == 0.0:
            raise PotentialError("a zero potential admits no beta search")
        pair = perron_pair(matrix)
        return math.log(pair.value) / constant, pair.vector
    values = potential.values(core)
    if np.any(values == 0.0) or (np.any(values > 0) and np.any(values < 0)):
        raise PotentialError(
            "potential with mixed signs or zeros: the beta search needs a sign-definite F0; use verify instead"
        )
    beta = _beta_search(matrix, values, tol)
    scaled = sparse.csr_matrix(sparse.diags(np.exp(-beta * values)) @ matrix)
    return beta, perron_pair(scaled).vector


def solve_finite(
    graph: FiniteGraph,
    potential: Optional[VertexPotential] = None,
    *,
    base: Optional[VertexId] = None,
    tol: Optional[float] = None,
) -> EigenSolution:
    """
    The unique admissible beta and its eigenvector on a strongly connected
    (or cofinal, with an acyclic tail) explicit graph.
    """
    tol = get_settings().tol if tol is None else tol
    potential = potential or VertexPotential.gauge()
    if graph.frontier:
        raise GraphError("solve_finite needs an explicit graph without a frontier")
    base = graph.base_vertex if base is None else base
    graph.require(base)

    cores = strongly_connected_cores(graph)
    if len(cores) == 1 and len(cores[0]) == len(graph):
        core = cores[0]
    elif is_cofinal(graph):
        core = cores[0]
        logger.info("graph %s is cofinal but not strongly connected; solving the tail by substitution", graph.name)
    else:
        raise ReducibleGraphError(f"graph {graph.name or '(unnamed)'} is not strongly connected or cofinal")

    beta, vector = _core_solution(graph, core, potential, tol)
    values: Dict[VertexId, float] = dict(zip(core, (float(x) for x in vector)))
    tail = [v for v in graph.vertices if v not in values]
    if tail:
        order = list(nx.topological_sort(graph.to_networkx().subgraph(tail)))
        for v in reversed(order):
            total = sum(values[edge.dst] for edge in graph.out_edges(v))
            values[v] = math.exp(-beta * potential(v)) * total
    solution = _finished(graph, beta, potential, values, base, "numeric", label="perron")
    if solution.residual > get_settings().residual_tol:
        raise ConvergenceError(f"eigenvector residual {solution.residual:.3g} above tolerance")
    return solution


# -- families ----------------------------------------------------------


def arms_floor(beta: float) -> float:
    """Smallest value xi at the first vertex of an arm can take: e^(-2b) / (1 - e^(-2b))."""
    return math.exp(-2.0 * beta) / -math.expm1(-2.0 * beta)


def _check_growth(name: str, beta: float, depth: int, offset: float, growth: float) -> None:
    """Raise when e^(offset + depth * growth), the largest entry of xi, is past the float range."""
    if offset + max(growth, 0.0) * depth <= _LOG_MAX:
        return
    fits = math.floor((_LOG_MAX - offset) / growth) if growth > 0.0 else -1
    hint = f"depth {fits} or less fits" if fits >= 1 else "no truncation depth fits"
    raise ComputationError(f"{name} eigenvector at beta={beta!r} overflows double precision at depth {depth}; {hint}")


def arms_solution_values(graph: FiniteGraph, beta: float, first: Mapping[str, float]) -> Dict[VertexId, float]:
    """Closed-form xi on an arms truncation given t_x = xi at x1 for every arm x."""
    floor = arms_floor(beta)
    geometric = 1.0 / -math.expm1(-2.0 * beta)
    excess = {x: t - floor for x, t in first.items()}
    values: Dict[VertexId, float] = {"1": 1.0}
    for v in graph.vertices:
        if v == "1":
            continue
        letter, k = v[0], int(v[1:])
        if k < 0:
            values[v] = math.exp(beta * k)
            continue
        tail = math.exp(-beta * (k + 1)) * geometric
        if excess[letter] != 0.0:
            grown = math.exp((k - 1) * beta + math.log(abs(excess[letter])))
            tail += math.copysign(grown, excess[letter])
        values[v] = tail
    return values


def _arms_solutions(family: GraphFamily, beta: float, depth: int, tol: float) -> List[EigenSolution]:
    n = int(family.params["n"])
    letters = arm_letters(n)
    if beta <= 0.0:
        raise InfeasibleBetaError(f"beta={beta!r} is infeasible for arms({n}): the arm floors need beta > 0")
    _check_growth(family.name, beta, depth, beta, 0.0)
    floor = arms_floor(beta)
    budget = math.exp(beta)
    slack = budget - n * floor
    if slack < -1e-9 * budget:
        raise InfeasibleBetaError(
            f"beta={beta!r} is infeasible for arms({n}): the floors n*e^(-2b)/(1-e^(-2b)) = {n * floor!r} "
            f"exceed e^b = {budget!r}"
        )
    graph = family.truncation(depth)
    gauge = VertexPotential.gauge()
    if slack <= 1e-9 * budget:
        first = {x: budget / n for x in letters}
        parameters = {"floor": floor, **{f"t_{x}": first[x] for x in letters}}
        values = arms_solution_values(graph, beta, first)
        return [_finished(graph, beta, gauge, values, "1", "closed-form", label="unique ray", parameters=parameters)]
    # xi at x_depth on the heavy arm is about e^((depth-1) b) * slack
    _check_growth(family.name, beta, depth, math.log(slack) - beta, beta)
    solutions = []
    for heavy in letters:
        first = {x: floor for x in letters}
        first[heavy] = budget - (n - 1) * floor
        parameters = {"floor": floor, **{f"t_{x}": first[x] for x in letters}}
        values = arms_solution_values(graph, beta, first)
        solutions.append(
            _finished(graph, beta, gauge, values, "1", "closed-form", label=f"extreme ray {heavy}", parameters=parameters)
        )
    return solutions


def ladder_log_ratio(beta: float) -> float:
    """log r for r = e^(2b) / (1 + e^b), finite for every real beta."""
    return beta - float(np.logaddexp(0.0, -beta))


def ladder_ratio(beta: float) -> float:
    """e^(2b) / (1 + e^b), the growth factor per level of the ladder eigenvector."""
    log_r = ladder_log_ratio(beta)
    if log_r > _LOG_MAX:
        raise ComputationError(f"ladder ratio at beta={beta!r} overflows double precision")
    return math.exp(log_r)


def ladder_solution_values(graph: FiniteGraph, beta: float) -> Dict[VertexId, float]:
    log_r = ladder_log_ratio(beta)
    values: Dict[VertexId, float] = {}
    for v in graph.vertices:
        if v == "1":
            values[v] = 1.0
            continue
        exponent = (int(v[1:]) + 1) * log_r
        values[v] = math.exp(exponent if v[0] == "y" else exponent - beta)
    return values


def _ladder_solutions(family: GraphFamily, beta: float, depth: int) -> List[EigenSolution]:
    log_r = ladder_log_ratio(beta)
    # xi at y_depth is r^(depth+1)
    _check_growth(family.name, beta, depth, log_r, log_r)
    graph = family.truncation(depth)
    values = ladder_solution_values(graph, beta)
    return [
        _finished(
            graph,
            beta,
            VertexPotential.gauge(),
            values,
            "1",
            "closed-form",
            label="ladder",
            parameters={"ratio": ladder_ratio(beta)},
        )
    ]


def _truncation_solve(
    family: GraphFamily,
    beta: float,
    potential: VertexPotential,
    boundary: BoundaryPolicy,
    depth: int,
    base: Optional[VertexId],
    tol: float,
) -> EigenSolution:
    graph = family.truncation(depth)
    base = family.base_vertex(depth) if base is None else base
    graph.require(base)
    if base in graph.frontier:
        raise GraphError(f"base vertex {base!r} lies on the frontier")

    if potential.is_gauge:
        radius = spectral_radius(graph)
        if radius > 0.0 and beta < math.log(radius) - tol:
            raise InfeasibleBetaError(
                f"beta={beta!r} is below log rho = {math.log(radius)!r} of the depth-{depth} truncation"
            )

    pinned: Dict[VertexId, float] = {}
    if boundary.kind == "zero":
        pinned = {v: 0.0 for v in graph.frontier}
        pinned[base] = 1.0
    else:
        pinned = {v: float(boundary.profile(v)) for v in graph.frontier}
    unknown = [v for v in graph.vertices if v not in pinned]
    values = dict(pinned)

    subgraph = graph.to_networkx().subgraph(unknown)
    if nx.is_directed_acyclic_graph(subgraph):
        for v in reversed(list(nx.topological_sort(subgraph))):
            total = sum(values[edge.dst] for edge in graph.out_edges(v))
            values[v] = math.exp(-beta * potential(v)) * total
    else:
        position = {v: i for i, v in enumerate(unknown)}
        diagonal = sparse.diags(np.exp(beta * potential.values(unknown)))
        system = sparse.csc_matrix(diagonal - graph.matrix(unknown))
        rhs = np.zeros(len(unknown))
        for v in unknown:
            for edge in graph.out_edges(v):
                if edge.dst in pinned:
                    rhs[position[v]] += pinned[edge.dst]
        solved = sparse_linalg.spsolve(system, rhs)
        if not np.all(np.isfinite(solved)):
            raise InfeasibleBetaError(f"the depth-{depth} truncation system is singular at beta={beta!r}")
        values.update({v: float(solved[position[v]]) for v in unknown})

    peak = max(abs(x) for x in values.values())
    if min(values.values()) < -tol * max(1.0, peak):
        worst = min(values, key=values.get)
        raise InfeasibleBetaError(f"no nonnegative solution at beta={beta!r}: xi is negative at {worst!r}")
    values = {v: max(x, 0.0) for v, x in values.items()}
    solution = _finished(graph, beta, potential, values, base, "numeric", label=f"{boundary.kind} boundary")
    report = verify(graph, beta, potential, solution.xi)
    if not report.passed:
        worst = max(report.residuals, key=report.residuals.get, default=base)
        note = " (transient regime: the pinned base is not an eigenvector entry)" if boundary.kind == "zero" else ""
        raise ResidualError(
            f"the {boundary.kind}-boundary solve of {family.name} at depth {depth} misses the equation at "
            f"{worst!r} by {report.max_residual:.3g} > {report.tolerance:g} at beta={beta!r}{note}"
        )
    return solution


def solve_family(
    family: GraphFamily,
    beta: float,
    potential: Optional[VertexPotential] = None,
    *,
    boundary: Optional[BoundaryPolicy] = None,
    depth: Optional[int] = None,
    base: Optional[VertexId] = None,
    method: Literal["auto", "numeric"] = "auto",
    tol: Optional[float] = None,
) -> List[EigenSolution]:
    """
    Extreme rays (closed forms) or the minimal normalized truncation solution
    at ``beta``, sorted by label.
    """
    settings = get_settings()
    tol = settings.tol if tol is None else tol
    potential = potential or VertexPotential.gauge()
    boundary = boundary or BoundaryPolicy.zero()
    d = settings.depth if depth is None else depth

    if family.is_finite:
        solution = solve_finite(family.graph, potential, base=base, tol=tol)
        if abs(beta - solution.beta) > _SNAP * max(1.0, abs(solution.beta)):
            raise InfeasibleBetaError(
                f"no nonnegative eigenvector at beta={beta!r}: {family.name} admits only beta={solution.beta!r}"
            )
        return [solution]

    closed = (
        method == "auto"
        and boundary.kind == "zero"
        and potential.is_gauge
        and (base is None or base == family.base_vertex())
    )
    if closed and family.kind == "arms":
        return _arms_solutions(family, beta, d, tol)
    if closed and family.kind == "ladder":
        return _ladder_solutions(family, beta, d)
    if closed and family.kind == "lattice-walk" and family.traits.closed_form:
        from .lattice import family_solutions

        return family_solutions(family.walk, beta, radius=depth)
    return [_truncation_solve(family, beta, potential, boundary, d, base, tol)]


def to_stochastic(
    graph: FiniteGraph,
    beta: float,
    xi: Mapping[VertexId, float],
    potential: Optional[VertexPotential] = None,
) -> sparse.csr_matrix:
    """B_vw = e^(-beta F0(v)) xi_w A_vw / xi_v; interior rows sum to 1 exactly when xi solves the equation."""
    potential = potential or VertexPotential.gauge()
    position = {v: i for i, v in enumerate(graph.vertices)}
    rows: List[int] = []
    cols: List[int] = []
    data: List[float] = []
    for (v, w), count in sorted(graph.adjacency.items(), key=lambda item: (position[item[0][0]], position[item[0][1]])):
        if xi[v] <= 0.0:
            raise PotentialError(f"zero xi at emitting vertex {v!r}")
        rows.append(position[v])
        cols.append(position[w])
        data.append(math.exp(-beta * potential(v)) * count * xi[w] / xi[v])
    size = len(graph.vertices)
    return sparse.csr_matrix((np.array(data), (rows, cols)), shape=(size, size))
