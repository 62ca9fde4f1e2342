"""
Pydantic models for input documents and for every report the CLI emits.

Maps keyed by vertex use ``str(vertex)`` keys and are always built in sorted
vertex order, so a report serializes to the same bytes after a parse.
"""

from __future__ import annotations

from typing import Any, Dict, List, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator


SCHEMA_VERSION = "kms-graph-lab/1"

VertexId = Union[int, str]


# -- input documents ---------------------------------------------------


class EdgeDocument(BaseModel):
    src: VertexId
    dst: VertexId
    id: Optional[str] = None
    count: int = 1

    @field_validator("count")
    @classmethod
    def _nonnegative(cls, value: int) -> int:
        if value < 0:
            raise ValueError("negative multiplicity")
        return value


class ExplicitGraphDocument(BaseModel):
    model_config = ConfigDict(extra="forbid")

    vertices: List[VertexId]
    edges: List[EdgeDocument]
    name: str = ""


class LatticeStep(BaseModel):
    w: List[int]
    count: int

    @field_validator("count")
    @classmethod
    def _nonnegative(cls, value: int) -> int:
        if value < 0:
            raise ValueError("negative multiplicity")
        return value


class LatticeParams(BaseModel):
    d: Optional[int] = None
    mu: List[LatticeStep]


class FamilyDocument(BaseModel):
    model_config = ConfigDict(extra="forbid")

    family: Literal["arms", "ladder", "rose", "cycle", "lattice-walk"]
    params: Dict[str, Any] = Field(default_factory=dict)


class PotentialDocument(BaseModel):
    default: float = 1.0
    overrides: Dict[str, float] = Field(default_factory=dict)


# -- report building blocks --------------------------------------------


class GraphDescriptor(BaseModel):
    kind: str
    name: str
    params: Dict[str, Any] = Field(default_factory=dict)


class StructureReport(BaseModel):
    depth: int
    nw_vertices: List[VertexId]
    nw_class: Literal["empty", "nonempty-finite", "nonempty-infinite", "undetermined"]
    cofinal: Optional[bool] = None
    notes: List[str] = Field(default_factory=list)


class CertificateEntry(BaseModel):
    depth: int
    estimate: float


class VertexEstimate(BaseModel):
    vertex: VertexId
    period: int
    terms: int
    estimate: float


class Beta0Result(BaseModel):
    value: float
    method: Literal["exact-closed-form", "finite-perron", "truncation-limit"]
    certificate: List[CertificateEntry] = Field(default_factory=list)
    tolerance: float
    lower_bound_only: bool = False
    growing: bool = False
    vertex_estimates: List[VertexEstimate] = Field(default_factory=list)


class RecurrenceResult(BaseModel):
    vertex: VertexId
    beta: float
    status: Literal["divergent", "convergent-so-far"]
    terms: int
    partial_sum: float
    tail_estimate: Optional[float] = None


class ResidualReport(BaseModel):
    residuals: Dict[str, float]
    max_residual: float
    tolerance: float
    nonnegative: bool
    nonzero: bool
    passed: bool
    frontier_excluded: List[VertexId] = Field(default_factory=list)


class EigenSolutionModel(BaseModel):
    beta: float
    base_vertex: VertexId
    exactness: Literal["closed-form", "numeric"]
    residual: float
    label: str = ""
    parameters: Dict[str, float] = Field(default_factory=dict)
    xi: Dict[str, float]


class StateCheckResult(BaseModel):
    status: Literal["state", "weight-only", "undetermined"]
    total: Optional[float] = None
    normalized: Optional[Dict[str, float]] = None
    partial_sums: List[CertificateEntry] = Field(default_factory=list)
    certificate: str = ""


class CheckResult(BaseModel):
    passed: bool
    worst_defect: float
    checked: int
    worst_cylinder: List[str] = Field(default_factory=list)


class MeasureReport(BaseModel):
    start: VertexId
    cylinder: List[str]
    value: float
    additivity: CheckResult
    ruelle: CheckResult


class WitnessPair(BaseModel):
    start: VertexId
    end: VertexId
    mu: List[str]
    plus: List[str]
    minus: List[str]


class DPrimeCertificate(BaseModel):
    root: VertexId
    m: int
    l: int
    d: int
    symmetry: str
    witnesses: List[WitnessPair] = Field(default_factory=list)


class DPrimeResult(BaseModel):
    status: Literal["exact", "interval", "declared"]
    value: Optional[int] = None
    lower_certificate: int
    upper_bound: int
    certified: List[int] = Field(default_factory=list)
    evidence: List[int] = Field(default_factory=list)
    provenance: str = ""
    certificate: Optional[DPrimeCertificate] = None


class PeriodReport(BaseModel):
    d_G: int
    d_G_method: Literal["exact-finite", "truncation-stabilized"]
    d_G_history: List[CertificateEntry] = Field(default_factory=list)
    d_prime_G: DPrimeResult
    gamma: str
    hypotheses: Dict[str, Optional[bool]] = Field(default_factory=dict)


class FactorType(BaseModel):
    kind: Literal["III_lambda", "II_infinity", "inconclusive"]
    beta: float
    lam: Optional[float] = None
    sandwich: str
    hypotheses: Dict[str, Optional[bool]] = Field(default_factory=dict)


class MgfSolutionModel(BaseModel):
    c_min: List[float]
    beta0: float
    drift: List[float]
    degenerate: bool
    spans: bool
    iterations: int


class RayStructure(BaseModel):
    beta: float
    beta0: float
    dimension: int
    kind: Literal["single-ray", "sphere"]
    complete: bool
    rays: List[List[float]]
    notes: List[str] = Field(default_factory=list)


class LatticeReport(BaseModel):
    mgf: MgfSolutionModel
    rays: Optional[RayStructure] = None
    generates: bool


class WeightRange(BaseModel):
    kind: Literal["all-of-R", "singleton", "half-line", "undetermined"]
    lower: Optional[float] = None


class StateRange(BaseModel):
    kind: Literal["empty", "singleton", "below", "undetermined"]
    value: Optional[float] = None
    upper: Optional[float] = None
    notes: List[str] = Field(default_factory=list)


class BetaSample(BaseModel):
    beta: float
    weight: Optional[bool] = None
    rays: Optional[int] = None
    rays_note: str = ""
    state: Optional[str] = None
    factor: Optional[FactorType] = None


class InvariantReport(BaseModel):
    graph: GraphDescriptor
    structure: StructureReport
    beta0: Optional[Beta0Result] = None
    kms_weight_range: WeightRange
    kms_state_range: StateRange
    uniqueness_at_beta0: Optional[Literal["unique-ray", "multiple", "undetermined"]] = None
    periods: PeriodReport
    samples: List[BetaSample] = Field(default_factory=list)


class RecodeReport(BaseModel):
    k: int
    vertices: int
    edges: int
    beta0_original: Optional[float] = None
    beta0_recoded: Optional[float] = None


class GoldenRow(BaseModel):
    example: str
    quantity: str
    expected: Union[float, int, str]
    computed: Union[float, int, str]
    tolerance: float
    ok: bool


class GoldenReport(BaseModel):
    rows: List[GoldenRow]
    passed: bool


class Report(BaseModel):
    """Top-level JSON envelope written by the CLI."""

    model_config = ConfigDict(populate_by_name=True)

    schema_: str = Field(default=SCHEMA_VERSION, alias="schema")
    command: str
    graph: Optional[GraphDescriptor] = None
    structure: Optional[StructureReport] = None
    beta0: Optional[Beta0Result] = None
    recurrence: Optional[RecurrenceResult] = None
    eigensolution: Optional[List[EigenSolutionModel]] = None
    state: Optional[StateCheckResult] = None
    measure: Optional[MeasureReport] = None
    periods: Optional[PeriodReport] = None
    factor_type: Optional[FactorType] = None
    classification: Optional[InvariantReport] = None
    recode: Optional[RecodeReport] = None
    lattice: Optional[LatticeReport] = None
    golden: Optional[GoldenReport] = None

    def to_json(self) -> str:
        return self.model_dump_json(indent=2, by_alias=True, exclude_none=True)

    @classmethod
    def from_json(cls, text: str) -> "Report":
        return cls.model_validate_json(text)


def keyed(values: Dict[Any, float]) -> Dict[str, float]:
    """Vertex-keyed floats as a JSON map, preserving the caller's order."""
    return {str(vertex): float(value) for vertex, value in values.items()}
