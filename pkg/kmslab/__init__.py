"""
kmslab: KMS weights and states of graph C*-algebras under generalized gauge
actions, computed from nonnegative eigenvectors of the adjacency matrix.
"""

from .classify import classify, reproduce_examples
from .conformal import (
    CylinderMeasure,
    check_additivity,
    measure_of,
    ruelle_dual_check,
    state_check,
    state_threshold,
    sweep_cylinders,
)
from .eigensolver import (
    BoundaryPolicy,
    EigenSolution,
    VertexPotential,
    solve_family,
    solve_finite,
    to_stochastic,
    verify,
)
from .errors import KmsLabError
from .families import GraphFamily, LatticeWalk, arms, cycle, ladder, lattice_walk, load_graph, make_family, rose
from .graph import Edge, FiniteGraph, FinitePath, enumerate_paths, graph_from_adjacency, out_edges
from .lattice import minimize_mgf, ray_structure
from .periods import d_G, d_prime_search, factor_type, period_report
from .spectral import beta0, recurrence_test
from .structure import hereditary_closure, is_cofinal, non_wandering, recode

__all__ = [
    "BoundaryPolicy",
    "CylinderMeasure",
    "Edge",
    "EigenSolution",
    "FiniteGraph",
    "FinitePath",
    "GraphFamily",
    "KmsLabError",
    "LatticeWalk",
    "VertexPotential",
    "arms",
    "beta0",
    "check_additivity",
    "classify",
    "cycle",
    "d_G",
    "d_prime_search",
    "enumerate_paths",
    "factor_type",
    "graph_from_adjacency",
    "hereditary_closure",
    "is_cofinal",
    "ladder",
    "lattice_walk",
    "load_graph",
    "make_family",
    "measure_of",
    "minimize_mgf",
    "non_wandering",
    "out_edges",
    "period_report",
    "ray_structure",
    "recode",
    "recurrence_test",
    "reproduce_examples",
    "rose",
    "ruelle_dual_check",
    "solve_family",
    "solve_finite",
    "state_check",
    "state_threshold",
    "sweep_cylinders",
    "to_stochastic",
    "verify",
]
