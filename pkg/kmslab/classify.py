"""
Classification of KMS weights and states over the whole beta line.

For a cofinal graph the weights exist for every beta when the non-wandering
part is empty, exactly at beta0 when it is finite and nonempty, and for
beta >= beta0 when it is infinite. ``classify`` assembles that verdict with
the per-beta details (rays, state or weight, factor type) into one report.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from importlib import resources
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

from .conformal import is_state, state_check, state_threshold
from .eigensolver import EigenSolution, solve_family
from .errors import (
    ComputationError,
    ConfigError,
    GoldenMismatchError,
    HypothesisError,
    InfeasibleBetaError,
    KmsLabError,
    NoLoopsError,
)
from .families import GraphFamily, make_family
from .lattice import minimize_mgf
from .log import get_logger
from .periods import factor_type, period_report
from .schemas import (
    Beta0Result,
    BetaSample,
    GoldenReport,
    GoldenRow,
    InvariantReport,
    PeriodReport,
    RecurrenceResult,
    StateRange,
    StructureReport,
    WeightRange,
)
from .settings import get_settings
from .spectral import beta0 as compute_beta0
from .spectral import recurrence_test, vertex_on_loop
from .structure import non_wandering, recode


logger = get_logger(__name__)

GOLDEN_RESOURCE = "golden_examples.json"
_LADDER_SAMPLES = (-1.0, 0.0, 0.3, 1.0)

Number = Union[float, int, str]


def _weight_range(structure: StructureReport, b0: Optional[Beta0Result]) -> WeightRange:
    lower = b0.value if b0 is not None else None
    if structure.nw_class == "empty":
        return WeightRange(kind="all-of-R")
    if structure.nw_class == "nonempty-finite":
        return WeightRange(kind="singleton", lower=lower)
    if structure.nw_class == "nonempty-infinite":
        return WeightRange(kind="half-line", lower=lower)
    return WeightRange(kind="undetermined", lower=lower)


def default_betas(weights: WeightRange) -> List[float]:
    """Samples probing each regime, clipped to the feasible betas."""
    if weights.kind == "all-of-R" or weights.lower is None:
        return list(_LADDER_SAMPLES)
    b0 = weights.lower
    if weights.kind == "singleton":
        return [b0]
    if weights.kind == "half-line":
        return [b0, b0 + 0.1, b0 + 1.0]
    return [b0 - 0.1, b0, b0 + 0.1, b0 + 1.0]


def _rays(family: GraphFamily, solutions: Sequence[EigenSolution]) -> Tuple[Optional[int], str]:
    if family.kind == "lattice-walk" and family.walk.d >= 2 and len(solutions) > 1:
        return None, f"continuum: the level set is homeomorphic to S^{family.walk.d - 1}; {len(solutions)} sampled"
    if family.is_finite or all(s.exactness == "closed-form" for s in solutions):
        return len(solutions), ""
    return None, "minimal truncation solution only"


def sample_beta(
    family: GraphFamily,
    beta: float,
    periods: PeriodReport,
    *,
    depth: Optional[int] = None,
    tol: Optional[float] = None,
) -> BetaSample:
    try:
        solutions = solve_family(family, beta, depth=depth, tol=tol)
    except InfeasibleBetaError as exc:
        logger.debug("beta=%r infeasible for %s: %s", beta, family.name, exc)
        return BetaSample(beta=beta, weight=False, rays_note=str(exc))
    except ComputationError as exc:
        logger.warning("beta=%r left undecided for %s: %s", beta, family.name, exc)
        return BetaSample(beta=beta, weight=None, rays_note=str(exc), state="undetermined")
    rays, note = _rays(family, solutions)
    statuses = {state_check(family, s, depth=depth).status for s in solutions}
    if "state" in statuses:
        state = "state"
    elif statuses == {"weight-only"}:
        state = "weight-only"
    else:
        state = "undetermined"
    return BetaSample(
        beta=beta,
        weight=True,
        rays=rays,
        rays_note=note,
        state=state,
        factor=factor_type(periods, beta, tol=tol),
    )


def _state_range(family: GraphFamily, b0: Optional[Beta0Result], depth: Optional[int]) -> StateRange:
    if family.is_finite:
        return StateRange(kind="singleton", value=b0.value, notes=["a finite vertex set always normalizes"])
    if family.kind == "ladder":
        return StateRange(
            kind="below",
            upper=state_threshold(family, depth=depth),
            notes=["states for beta below the threshold where the ladder ratio reaches 1"],
        )
    if family.kind == "arms" and b0 is not None:
        if is_state(family, b0.value, depth=depth):
            return StateRange(kind="singleton", value=b0.value, notes=["only the unique ray at beta0 is summable"])
        return StateRange(kind="empty")
    if family.kind == "lattice-walk" and family.traits.closed_form:
        return StateRange(kind="empty", notes=["sum of e^<c,v> over Z^d diverges for every c"])
    return StateRange(kind="undetermined", notes=["no summability test for this family"])


def _uniqueness(family: GraphFamily, b0: Optional[Beta0Result], depth: Optional[int]) -> Optional[str]:
    if b0 is None:
        return None
    if family.is_finite:
        return "unique-ray"
    if family.traits.closed_form:
        try:
            count = len(solve_family(family, b0.value, depth=depth))
        except ComputationError:
            return "undetermined"
        return "unique-ray" if count == 1 else "multiple"
    recurrence = base_recurrence(family, b0, depth)
    if recurrence is None:
        return "undetermined"
    return "unique-ray" if recurrence.status == "divergent" else "undetermined"


def base_recurrence(family: GraphFamily, b0: Optional[Beta0Result], depth: Optional[int]) -> Optional[RecurrenceResult]:
    """Recurrence of the series sum_n A^n_vv e^(-n beta0) at the base vertex, when it lies on a loop."""
    if b0 is None:
        return None
    d = get_settings().depth if depth is None else depth
    base = family.base_vertex(d)
    if not vertex_on_loop(family.truncation(d), base):
        return None
    return recurrence_test(family, b0.value, base, depth=d)


def classify(
    family: GraphFamily,
    betas: Optional[Sequence[float]] = None,
    *,
    depth: Optional[int] = None,
    tol: Optional[float] = None,
    jobs: int = 1,
) -> InvariantReport:
    """Weight and state ranges, uniqueness at beta0, periods and per-beta samples."""
    settings = get_settings()
    structure = non_wandering(family, family.depths(settings.depth if depth is None else depth)[0])
    if structure.cofinal is None:
        raise HypothesisError(f"cofinality of {family.name} is neither established nor declared")
    if structure.cofinal is False:
        raise HypothesisError(f"{family.name} is not cofinal")

    b0: Optional[Beta0Result] = None
    if structure.nw_class != "empty":
        try:
            b0 = compute_beta0(family, depth=depth, tol=tol)
        except NoLoopsError:
            if structure.nw_class != "undetermined":
                raise
    weights = _weight_range(structure, b0)
    periods = period_report(family, depth=depth)
    logger.info("%s: weights %s, d_G=%d", family.name, weights.kind, periods.d_G)

    chosen = list(betas) if betas is not None else default_betas(weights)
    with ThreadPoolExecutor(max_workers=max(1, jobs)) as pool:
        samples = list(pool.map(lambda b: sample_beta(family, b, periods, depth=depth, tol=tol), chosen))

    return InvariantReport(
        graph=family.descriptor(),
        structure=structure,
        beta0=b0,
        kms_weight_range=weights,
        kms_state_range=_state_range(family, b0, depth),
        uniqueness_at_beta0=_uniqueness(family, b0, depth),
        periods=periods,
        samples=samples,
    )


# -- golden examples ---------------------------------------------------


class _Workbench:
    """Per-example caches so each pipeline stage runs once per family."""

    def __init__(self) -> None:
        self._families: Dict[str, GraphFamily] = {}
        self._reports: Dict[str, InvariantReport] = {}

    @staticmethod
    def _key(row: Dict[str, Any]) -> str:
        return json.dumps([row["family"], row.get("params", {})], sort_keys=True)

    def family(self, row: Dict[str, Any]) -> GraphFamily:
        key = self._key(row)
        if key not in self._families:
            self._families[key] = make_family(row["family"], row.get("params", {}))
        return self._families[key]

    def report(self, row: Dict[str, Any]) -> InvariantReport:
        key = self._key(row)
        if key not in self._reports:
            self._reports[key] = classify(self.family(row))
        return self._reports[key]


def _beta0_value(bench: _Workbench, row: Dict[str, Any]) -> float:
    return compute_beta0(bench.family(row)).value


def _rays_at(bench: _Workbench, row: Dict[str, Any]) -> int:
    family = bench.family(row)
    beta = compute_beta0(family).value + float(row.get("offset", 0.0))
    return len(solve_family(family, beta))


def _xi(bench: _Workbench, row: Dict[str, Any]) -> float:
    (solution,) = solve_family(bench.family(row), float(row["beta"]))
    return solution.xi[row["vertex"]]


def _factor(bench: _Workbench, row: Dict[str, Any]) -> Number:
    result = factor_type(bench.report(row).periods, float(row["beta"]))
    return result.kind if row["quantity"] == "factor_kind" else result.lam


def _prime(bench: _Workbench, row: Dict[str, Any]) -> Number:
    prime = bench.report(row).periods.d_prime_G
    return prime.value if prime.value is not None else f"interval [{prime.lower_certificate}, {prime.upper_bound}]"


def _recode(bench: _Workbench, row: Dict[str, Any]) -> Number:
    graph = recode(bench.family(row).graph, int(row["k"]))
    if row["quantity"] == "recode_vertices":
        return len(graph)
    return compute_beta0(GraphFamily.from_graph(graph)).value


_QUANTITIES: Dict[str, Callable[[_Workbench, Dict[str, Any]], Number]] = {
    "beta0": _beta0_value,
    "c_min": lambda bench, row: float(minimize_mgf(bench.family(row).walk).c_min[0]),
    "d_G": lambda bench, row: bench.report(row).periods.d_G,
    "d_prime_G": _prime,
    "rays": _rays_at,
    "weight_range": lambda bench, row: bench.report(row).kms_weight_range.kind,
    "state_range": lambda bench, row: bench.report(row).kms_state_range.kind,
    "state_threshold": lambda bench, row: state_threshold(bench.family(row)),
    "uniqueness": lambda bench, row: bench.report(row).uniqueness_at_beta0 or "none",
    "factor_kind": _factor,
    "factor_lambda": _factor,
    "xi": _xi,
    "recode_vertices": _recode,
    "recode_beta0": _recode,
}


def load_golden() -> List[Dict[str, Any]]:
    text = (resources.files("kmslab") / "data" / GOLDEN_RESOURCE).read_text(encoding="utf-8")
    return json.loads(text)["rows"]


def _matches(expected: Number, computed: Number, tolerance: float) -> bool:
    if isinstance(expected, str) or isinstance(computed, str):
        return expected == computed
    if not math.isfinite(float(computed)):
        return False
    return abs(float(computed) - float(expected)) <= tolerance


def reproduce_examples(rows: Optional[List[Dict[str, Any]]] = None, *, strict: bool = False) -> GoldenReport:
    """Run the pipeline on the stored examples and compare against their expected values."""
    bench = _Workbench()
    results: List[GoldenRow] = []
    for row in rows if rows is not None else load_golden():
        tolerance = float(row.get("tolerance", 0.0))
        compute = _QUANTITIES.get(row["quantity"])
        if compute is None:
            raise ConfigError(f"unknown golden quantity {row['quantity']!r}")
        try:
            computed = compute(bench, row)
        except KmsLabError as exc:
            logger.error("%s %s failed: %s", row["example"], row["quantity"], exc)
            computed = f"error: {exc}"
        if computed is None:
            computed = "none"
        ok = _matches(row["expected"], computed, tolerance)
        if not ok:
            logger.warning("%s %s: expected %r, computed %r", row["example"], row["quantity"], row["expected"], computed)
        results.append(
            GoldenRow(
                example=row["example"],
                quantity=row["quantity"],
                expected=row["expected"],
                computed=computed,
                tolerance=tolerance,
                ok=ok,
            )
        )
    report = GoldenReport(rows=results, passed=all(r.ok for r in results))
    if strict and not report.passed:
        failing = ", ".join(f"{r.example}/{r.quantity}" for r in results if not r.ok)
        raise GoldenMismatchError(f"golden mismatch: {failing}")
    return report
