"""
Closed forms for translation-invariant walks on Z^d (A_vw = mu(w - v)).

Exponential functions f_c(v) = exp(<c, v>) are eigenvectors with
e^beta = MGF(c) = sum_w mu(w) e^<c, w>; beta0 is the log of the minimum of
the strictly convex MGF and the extreme rays at beta are the level set
{c : MGF(c) = e^beta}.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, NamedTuple, Optional, Sequence

import numpy as np
from scipy import optimize

from .eigensolver import EigenSolution, VertexPotential, verify
from .errors import ConvergenceError, GraphError, InfeasibleBetaError
from .families import LatticeWalk, lattice_point, lattice_vertex
from .log import get_logger
from .schemas import MgfSolutionModel, RayStructure
from .settings import get_settings


logger = get_logger(__name__)

_MAX_NEWTON = 100
_MAX_HALVINGS = 60
_BETA0_MATCH = 1e-9


class MgfValue(NamedTuple):
    value: float
    gradient: np.ndarray
    hessian: np.ndarray


@dataclass(frozen=True)
class MgfSolution:
    c_min: np.ndarray
    beta0: float
    drift: np.ndarray
    degenerate: bool
    spans: bool
    iterations: int

    def to_model(self) -> MgfSolutionModel:
        return MgfSolutionModel(
            c_min=[float(x) for x in self.c_min],
            beta0=self.beta0,
            drift=[float(x) for x in self.drift],
            degenerate=self.degenerate,
            spans=self.spans,
            iterations=self.iterations,
        )


def mgf(walk: LatticeWalk, c: Sequence[float]) -> MgfValue:
    c = np.asarray(c, dtype=float).reshape(walk.d)
    support = walk.support
    terms = walk.weights * np.exp(support @ c)
    value = float(terms.sum())
    gradient = terms @ support
    hessian = (support * terms[:, None]).T @ support
    return MgfValue(value, gradient, hessian)


def _span_basis(walk: LatticeWalk) -> np.ndarray:
    """Orthonormal rows spanning the linear span of the support."""
    _, singular, vt = np.linalg.svd(walk.support, full_matrices=True)
    rank = int(np.sum(singular > 1e-12 * max(1.0, singular.max())))
    return vt[:rank]


def minimize_mgf(walk: LatticeWalk, tol: Optional[float] = None) -> MgfSolution:
    """Newton's method with step halving from c = 0, restricted to the support span."""
    tol = get_settings().tol if tol is None else tol
    basis = _span_basis(walk)
    y = np.zeros(basis.shape[0])
    current = mgf(walk, basis.T @ y)
    for iteration in range(1, _MAX_NEWTON + 1):
        gradient = basis @ current.gradient
        if np.linalg.norm(gradient) <= tol * max(1.0, current.value):
            break
        hessian = basis @ current.hessian @ basis.T
        step = np.linalg.solve(hessian, -gradient)
        scale = 1.0
        for _ in range(_MAX_HALVINGS):
            trial = mgf(walk, basis.T @ (y + scale * step))
            if trial.value <= current.value * (1.0 + 4.0 * np.finfo(float).eps):
                break
            scale *= 0.5
        else:
            raise ConvergenceError("Newton step halving found no descent")
        y = y + scale * step
        current = trial
        logger.debug("newton %d: mgf=%.17g |grad|=%.3g", iteration, current.value, np.linalg.norm(gradient))
    else:
        raise ConvergenceError(
            f"Newton iteration on the MGF did not converge in {_MAX_NEWTON} steps "
            "(does the support generate the lattice?)"
        )
    drift = walk.drift
    return MgfSolution(
        c_min=basis.T @ y,
        beta0=math.log(current.value),
        drift=drift,
        degenerate=bool(np.all(drift == 0)),
        spans=basis.shape[0] == walk.d,
        iterations=iteration,
    )


def default_radius(walk: LatticeWalk) -> int:
    return 3 * walk.support_radius


def exponential_eigenvector(
    walk: LatticeWalk,
    c: Sequence[float],
    *,
    radius: Optional[int] = None,
    label: str = "",
) -> EigenSolution:
    """f_c sampled on the box of ``radius``, with beta = log MGF(c)."""
    radius = default_radius(walk) if radius is None else radius
    if radius < walk.support_radius:
        raise GraphError(f"window radius {radius} is smaller than the support radius {walk.support_radius}")
    c = np.asarray(c, dtype=float).reshape(walk.d)
    beta = math.log(mgf(walk, c).value)
    graph = walk.window(radius)
    xi = {v: math.exp(float(np.dot(c, lattice_point(v)))) for v in graph.vertices}
    potential = VertexPotential.gauge()
    report = verify(graph, beta, potential, xi)
    parameters = {f"c{i + 1}": float(x) for i, x in enumerate(c)}
    return EigenSolution(
        beta=beta,
        xi=xi,
        base_vertex=lattice_vertex([0] * walk.d),
        residual=report.max_residual,
        exactness="closed-form",
        potential=potential,
        graph=graph,
        label=label or "f_c",
        parameters=parameters,
    )


def _level_point(walk: LatticeWalk, origin: np.ndarray, direction: np.ndarray, target: float) -> np.ndarray:
    """The point origin + s*direction (s > 0) where the MGF equals ``target``."""

    def excess(s: float) -> float:
        return math.log(mgf(walk, origin + s * direction).value) - target

    high = 1.0
    while excess(high) < 0:
        high *= 2.0
        if high > 1e6:
            raise ConvergenceError("the MGF does not reach e^beta along a sampled direction")
    s = optimize.brentq(excess, 0.0, high, xtol=1e-15, rtol=4 * np.finfo(float).eps)
    return origin + s * direction


def level_set(walk: LatticeWalk, beta: float, solution: Optional[MgfSolution] = None) -> List[np.ndarray]:
    """
    Points c with MGF(c) = e^beta: both roots for d = 1, the 2d points along
    +-e_i from c_min otherwise. At beta0 this is the single point c_min.
    """
    solution = solution or minimize_mgf(walk)
    if beta < solution.beta0 - _BETA0_MATCH * max(1.0, abs(solution.beta0)):
        raise InfeasibleBetaError(
            f"beta={beta!r} is below beta0={solution.beta0!r}: no exponential eigenvector exists"
        )
    if beta <= solution.beta0 + _BETA0_MATCH * max(1.0, abs(solution.beta0)):
        return [solution.c_min]
    points = []
    for i in range(walk.d):
        for sign in (-1.0, 1.0):
            direction = np.zeros(walk.d)
            direction[i] = sign
            points.append(_level_point(walk, solution.c_min, direction, beta))
    return sorted(points, key=lambda p: tuple(p))


def ray_structure(walk: LatticeWalk, beta: float, *, tol: Optional[float] = None) -> RayStructure:
    solution = minimize_mgf(walk, tol)
    points = level_set(walk, beta, solution)
    notes: List[str] = []
    at_beta0 = len(points) == 1
    if at_beta0:
        kind = "single-ray"
        if solution.degenerate:
            notes.append(
                "drift zero at beta0: the eigenvector is unique up to scaling (for d in {1, 2} "
                "this rests on recurrence of the walk); stated, not computed"
            )
        else:
            notes.append("the level set at beta0 is the single minimizer c_min")
    else:
        kind = "sphere"
        if walk.d == 1:
            notes.append("the level set is S^0: both roots are listed")
        else:
            notes.append(f"the level set is homeomorphic to S^{walk.d - 1}; 2d sampled points along +-e_i")
    return RayStructure(
        beta=beta,
        beta0=solution.beta0,
        dimension=walk.d,
        kind=kind,
        complete=at_beta0 or walk.d == 1,
        rays=[[float(x) for x in p] for p in points],
        notes=notes,
    )


def family_solutions(walk: LatticeWalk, beta: float, *, radius: Optional[int] = None) -> List[EigenSolution]:
    """Exponential eigenvectors for the rays at ``beta``, sorted by c."""
    return [
        exponential_eigenvector(walk, point, radius=radius, label=f"f_c ray {index}")
        for index, point in enumerate(level_set(walk, beta), start=1)
    ]


def divergence_certificate(walk: LatticeWalk, c: Sequence[float]) -> str:
    """Lattice direction along which every term e^<c, v> is at least 1."""
    c = np.asarray(c, dtype=float).reshape(walk.d)
    axis = int(np.argmax(np.abs(c)))
    sign = 1 if c[axis] >= 0 else -1
    direction = [0] * walk.d
    direction[axis] = sign
    return (
        f"sum of xi diverges: e^<c,v> >= 1 for every v = k*{direction}, k >= 0 "
        f"(c = {[float(x) for x in c]})"
    )
