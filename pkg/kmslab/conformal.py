"""
Conformal measures on cylinder sets and the KMS state / weight decision.

An eigenvector xi at beta defines m(Z(mu)) = e^(-beta F0(mu)) xi_r(mu) on the
cylinder algebra; the checks below confirm additivity and invariance under the
dual Ruelle operator one cylinder at a time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

from .eigensolver import EigenSolution, arms_floor, ladder_log_ratio, solve_family
from .errors import ComputationError, FrontierError, GraphError, InfeasibleBetaError
from .families import GraphFamily, arm_letters
from .graph import FiniteGraph, FinitePath, VertexId
from .lattice import divergence_certificate
from .log import get_logger
from .schemas import CertificateEntry, CheckResult, StateCheckResult, keyed
from .settings import get_settings


logger = get_logger(__name__)

_PARAMETER_MATCH = 1e-9


@dataclass(frozen=True)
class CylinderMeasure:
    """Lazy evaluation of the measure attached to ``solution`` on its graph."""

    solution: EigenSolution
    graph: FiniteGraph

    @classmethod
    def from_solution(cls, solution: EigenSolution) -> "CylinderMeasure":
        if solution.graph is None:
            raise GraphError("solution carries no graph to evaluate cylinders on")
        return cls(solution, solution.graph)

    @property
    def beta(self) -> float:
        return self.solution.beta

    def __call__(self, mu: FinitePath) -> float:
        return measure_of(self, mu)


def measure_of(m: CylinderMeasure, mu: FinitePath) -> float:
    """m(Z(mu)) = e^(-beta F0(mu)) xi_r(mu); the empty path at v gives xi_v."""
    m.graph.require(mu.start)
    for edge in mu.edges:
        try:
            known = m.graph.edge(edge.id)
        except GraphError as exc:
            raise GraphError(f"path not in graph: unknown edge {edge.id!r}") from exc
        if known != edge:
            raise GraphError(f"path not in graph: edge {edge.id!r} has other endpoints")
    potential = m.solution.potential
    return math.exp(-m.beta * potential.of_path(mu)) * m.solution.xi[mu.range]


def _relative(a: float, b: float) -> float:
    scale = max(abs(a), abs(b))
    return abs(a - b) / scale if scale > 0.0 else 0.0


def _require_interior(m: CylinderMeasure, mu: FinitePath) -> None:
    if mu.range in m.graph.frontier:
        raise FrontierError(f"cylinder {list(mu.edge_ids)} ends on the frontier vertex {mu.range!r}")


def _split_defect(m: CylinderMeasure, mu: FinitePath) -> float:
    parent = measure_of(m, mu)
    children = sum(measure_of(m, mu.extend(edge)) for edge in m.graph.out_edges(mu.range))
    return _relative(children, parent)


def check_additivity(
    m: CylinderMeasure,
    mu: FinitePath,
    depth: int = 1,
    *,
    tol: Optional[float] = None,
) -> CheckResult:
    """Refine Z(mu) ``depth`` levels and compare each cylinder with its children."""
    tol = get_settings().residual_tol if tol is None else tol
    if depth < 1:
        raise GraphError("refinement depth must be at least 1")
    worst, worst_path, checked = 0.0, mu, 0
    level = [mu]
    for _ in range(depth):
        refined: List[FinitePath] = []
        for nu in level:
            _require_interior(m, nu)
            defect = _split_defect(m, nu)
            checked += 1
            if defect > worst:
                worst, worst_path = defect, nu
            refined.extend(nu.extend(edge) for edge in m.graph.out_edges(nu.range))
        level = refined
    return CheckResult(
        passed=worst <= tol,
        worst_defect=worst,
        checked=checked,
        worst_cylinder=list(worst_path.edge_ids),
    )


def _ruelle_defect(m: CylinderMeasure, mu: FinitePath) -> float:
    shifted = mu.tail()
    image = sum(measure_of(m, shifted.extend(edge)) for edge in m.graph.out_edges(shifted.range))
    lhs = math.exp(-m.beta * m.solution.potential(mu.source)) * image
    return _relative(lhs, measure_of(m, mu))


def ruelle_dual_check(m: CylinderMeasure, mu: FinitePath, *, tol: Optional[float] = None) -> CheckResult:
    """
    e^(-beta F0(s(mu))) m(sigma(Z(mu))) = m(Z(mu)), with sigma(Z(mu)) = Z(mu2..mun)
    measured through its next-level partition.
    """
    tol = get_settings().residual_tol if tol is None else tol
    if not mu.edges:
        raise GraphError("the Ruelle check needs a nonempty cylinder")
    _require_interior(m, mu)
    defect = _ruelle_defect(m, mu)
    return CheckResult(passed=defect <= tol, worst_defect=defect, checked=1, worst_cylinder=list(mu.edge_ids))


@dataclass
class _Tally:
    worst: float = 0.0
    cylinder: Tuple[str, ...] = ()
    checked: int = 0

    def record(self, defect: float, path: FinitePath) -> None:
        self.checked += 1
        if defect > self.worst:
            self.worst, self.cylinder = defect, path.edge_ids

    def result(self, tol: float) -> CheckResult:
        return CheckResult(
            passed=self.worst <= tol,
            worst_defect=self.worst,
            checked=self.checked,
            worst_cylinder=list(self.cylinder),
        )


def sweep_cylinders(
    m: CylinderMeasure,
    max_length: int,
    *,
    start: Optional[VertexId] = None,
    tol: Optional[float] = None,
) -> Tuple[CheckResult, CheckResult]:
    """Additivity and Ruelle checks on every cylinder of length <= ``max_length`` ending off the frontier."""
    tol = get_settings().residual_tol if tol is None else tol
    starts: Sequence[VertexId] = m.graph.vertices if start is None else [start]
    additivity, ruelle = _Tally(), _Tally()
    for v in starts:
        stack: List[FinitePath] = [FinitePath.empty(v)]
        while stack:
            mu = stack.pop()
            if mu.range not in m.graph.frontier:
                additivity.record(_split_defect(m, mu), mu)
                if mu.edges:
                    ruelle.record(_ruelle_defect(m, mu), mu)
            if len(mu) < max_length:
                stack.extend(mu.extend(edge) for edge in reversed(m.graph.out_edges(mu.range)))
    logger.debug("swept %d cylinders up to length %d", additivity.checked, max_length)
    return additivity.result(tol), ruelle.result(tol)


# -- states ------------------------------------------------------------


def _normalized(xi: Dict[VertexId, float], total: float) -> Dict[str, float]:
    return keyed({v: value / total for v, value in xi.items()})


def _arms_state(family: GraphFamily, solution: EigenSolution) -> StateCheckResult:
    beta = solution.beta
    floor = arms_floor(beta)
    letters = arm_letters(int(family.params["n"]))
    heavy = [x for x in letters if abs(solution.parameters[f"t_{x}"] - floor) > _PARAMETER_MATCH * max(1.0, floor)]
    if heavy:
        return StateCheckResult(
            status="weight-only",
            certificate=f"xi grows like e^(k*beta) (t - floor) along arm {heavy[0]}",
        )
    q = math.exp(-beta)
    outward = q * q / ((1.0 - q) * (1.0 - q * q))
    inward = q / (1.0 - q)
    total = 1.0 + len(letters) * (outward + inward)
    return StateCheckResult(
        status="state",
        total=total,
        normalized=_normalized(solution.xi, total),
        certificate="geometric tails: xi(xk) = e^(-beta(k+1))/(1-e^(-2beta)), xi(x-k) = e^(-beta k)",
    )


def _ladder_state(solution: EigenSolution) -> StateCheckResult:
    beta = solution.beta
    log_r = ladder_log_ratio(beta)
    if log_r >= 0.0:
        return StateCheckResult(
            status="weight-only",
            certificate=f"xi(yn) = r^(n+1) with log r = {log_r!r} >= 0",
        )
    r = math.exp(log_r)
    # xi(xn) + xi(yn) = e^b r^n, so the tail sums to e^b / (1 - r)
    total = 1.0 + math.exp(beta) / (1.0 - r)
    return StateCheckResult(
        status="state",
        total=total,
        normalized=_normalized(solution.xi, total),
        certificate=f"geometric tail with ratio r = {r!r} < 1",
    )


def _partial_sums(family: GraphFamily, solution: EigenSolution, depth: int) -> StateCheckResult:
    sums: List[CertificateEntry] = []
    for d in family.depths(depth):
        vertices = family.truncation(d).vertices
        if any(v not in solution.xi for v in vertices):
            break
        sums.append(CertificateEntry(depth=d, estimate=sum(solution.xi[v] for v in vertices)))
    return StateCheckResult(
        status="undetermined",
        partial_sums=sums,
        certificate="partial sums only: summability is not decidable from finitely many terms",
    )


def state_check(
    family: GraphFamily,
    solution: EigenSolution,
    *,
    depth: Optional[int] = None,
) -> StateCheckResult:
    """Decide whether sum_v xi_v is finite, returning xi normalized to a state when it is."""
    depth = get_settings().depth if depth is None else depth
    if family.is_finite:
        total = sum(solution.xi.values())
        return StateCheckResult(
            status="state",
            total=total,
            normalized=_normalized(solution.xi, total),
            certificate="finite vertex set",
        )
    closed = solution.exactness == "closed-form"
    if closed and family.kind == "arms":
        return _arms_state(family, solution)
    if closed and family.kind == "ladder":
        return _ladder_state(solution)
    if closed and family.kind == "lattice-walk":
        c = [solution.parameters[f"c{i + 1}"] for i in range(family.walk.d)]
        return StateCheckResult(status="weight-only", certificate=divergence_certificate(family.walk, c))
    return _partial_sums(family, solution, depth)


def is_state(family: GraphFamily, beta: float, *, depth: Optional[int] = None) -> bool:
    try:
        solutions = solve_family(family, beta, depth=depth)
    except InfeasibleBetaError:
        return False
    return any(state_check(family, s, depth=depth).status == "state" for s in solutions)


def state_threshold(
    family: GraphFamily,
    lo: float = -1.0,
    hi: float = 2.0,
    *,
    tol: float = 1e-12,
    depth: Optional[int] = None,
) -> float:
    """Bisection for the beta where the state status flips on [lo, hi]."""
    low_state = is_state(family, lo, depth=depth)
    if low_state == is_state(family, hi, depth=depth):
        raise ComputationError(f"state status of {family.name} does not change on [{lo!r}, {hi!r}]")
    while hi - lo > tol * max(1.0, abs(lo)):
        mid = 0.5 * (lo + hi)
        if is_state(family, mid, depth=depth) == low_state:
            lo = mid
        else:
            hi = mid
    logger.debug("state threshold of %s bracketed in [%.17g, %.17g]", family.name, lo, hi)
    return 0.5 * (lo + hi)
