"""
Cylinder measures built from eigenvectors, and the state / weight decision.
"""

import dataclasses
import math

import pytest

from kmslab.conformal import (
    CylinderMeasure,
    check_additivity,
    is_state,
    measure_of,
    ruelle_dual_check,
    state_check,
    state_threshold,
    sweep_cylinders,
)
from kmslab.eigensolver import BoundaryPolicy, ladder_solution_values, solve_family, solve_finite
from kmslab.errors import ComputationError, FrontierError, GraphError
from kmslab.families import GraphFamily, LatticeWalk, arms, ladder, lattice_walk, rose
from kmslab.graph import Edge, FinitePath, graph_from_adjacency
from kmslab.spectral import beta0

PHI = (1 + math.sqrt(5)) / 2
LOG_PHI = 0.48121182505960347


@pytest.fixture
def golden_graph():
    # e1: a->a, e2: a->b, e3: b->a
    return graph_from_adjacency({"a": {"a": 1, "b": 1}, "b": {"a": 1}}, name="golden")


@pytest.fixture
def golden_measure(golden_graph):
    return CylinderMeasure.from_solution(solve_finite(golden_graph))


def test_measure_of_cylinders(golden_measure, golden_graph):
    assert measure_of(golden_measure, FinitePath.empty("a")) == 1.0
    mu = FinitePath.from_edge_ids(golden_graph, ["e2"])
    assert golden_measure(mu) == pytest.approx(1 / PHI**2, rel=1e-11)
    loop = FinitePath.from_edge_ids(golden_graph, ["e1", "e1", "e2"])
    assert golden_measure(loop) == pytest.approx(PHI**-4, rel=1e-11)


def test_unknown_edges_are_rejected(golden_measure):
    stray = FinitePath("a", (Edge("zz", "a", "b"),))
    with pytest.raises(GraphError, match="path not in graph"):
        measure_of(golden_measure, stray)
    moved = FinitePath("b", (Edge("e2", "b", "a"),))
    with pytest.raises(GraphError, match="other endpoints"):
        measure_of(golden_measure, moved)


def test_measure_needs_a_graph(golden_graph):
    solution = dataclasses.replace(solve_finite(golden_graph), graph=None)
    with pytest.raises(GraphError):
        CylinderMeasure.from_solution(solution)


def test_additivity_holds_on_refinements(golden_measure):
    result = check_additivity(golden_measure, FinitePath.empty("a"), depth=4, tol=1e-11)
    assert result.passed
    assert result.checked == 1 + 2 + 3 + 5


def test_sweep_checks_every_short_cylinder(golden_measure):
    additivity, ruelle = sweep_cylinders(golden_measure, 4, tol=1e-11)
    assert additivity.passed and ruelle.passed
    assert ruelle.checked > 0
    assert additivity.checked > ruelle.checked


def test_perturbed_vector_fails_both_checks(golden_graph):
    solution = solve_finite(golden_graph)
    xi = dict(solution.xi)
    xi["b"] *= 1.01
    m = CylinderMeasure.from_solution(dataclasses.replace(solution, xi=xi))

    additivity = check_additivity(m, FinitePath.empty("b"))
    assert not additivity.passed
    assert additivity.worst_defect == pytest.approx(0.01, rel=0.02)

    ruelle = ruelle_dual_check(m, FinitePath.from_edge_ids(golden_graph, ["e2"]))
    assert not ruelle.passed
    assert ruelle.worst_cylinder == ["e2"]


def test_ruelle_needs_a_nonempty_cylinder(golden_measure):
    with pytest.raises(GraphError):
        ruelle_dual_check(golden_measure, FinitePath.empty("a"))


def test_frontier_cylinders_are_refused():
    (solution,) = solve_family(ladder(), 0.0, depth=2)
    m = CylinderMeasure.from_solution(solution)
    assert check_additivity(m, FinitePath.empty("1"), depth=2).passed
    mu = FinitePath.from_edge_ids(solution.graph, ["1>y0", "y0>y1", "y1>y2"])
    with pytest.raises(FrontierError):
        check_additivity(m, mu)
    with pytest.raises(FrontierError):
        ruelle_dual_check(m, mu)


def test_finite_graphs_always_give_states(golden_graph):
    solution = solve_finite(golden_graph)
    result = state_check(GraphFamily.from_graph(golden_graph), solution)
    assert result.status == "state"
    assert result.total == pytest.approx(1 + 1 / PHI, rel=1e-11)
    assert sum(result.normalized.values()) == pytest.approx(1.0)
    assert result.certificate == "finite vertex set"


def test_arms_unique_ray_is_a_state():
    family = arms(3)
    b0 = beta0(family).value
    (solution,) = solve_family(family, b0)
    result = state_check(family, solution)
    assert result.status == "state"
    assert result.total == pytest.approx(sum(solution.xi.values()), rel=1e-9)
    assert is_state(family, b0)


def test_arms_extreme_rays_are_weights_only():
    family = arms(3)
    beta = beta0(family).value + 0.5
    statuses = {state_check(family, s).status for s in solve_family(family, beta)}
    assert statuses == {"weight-only"}
    assert not is_state(family, beta)
    assert not is_state(family, 0.0)


def test_ladder_state_threshold_is_log_phi():
    family = ladder()
    assert is_state(family, 0.0)
    assert not is_state(family, 1.0)
    assert state_threshold(family) == pytest.approx(LOG_PHI, abs=1e-10)


def test_ladder_state_total():
    family = ladder()
    (solution,) = solve_family(family, -1.0)
    result = state_check(family, solution)
    assert result.status == "state"
    assert result.total == pytest.approx(sum(solution.xi.values()), rel=1e-12)


def test_threshold_needs_a_change_of_status():
    with pytest.raises(ComputationError):
        state_threshold(arms(3), 1.0, 2.0)


def test_lattice_weights_never_normalize():
    family = lattice_walk(LatticeWalk.parse("1:1;-1:1"))
    (solution,) = solve_family(family, math.log(2))
    result = state_check(family, solution)
    assert result.status == "weight-only"
    assert "diverges" in result.certificate


def test_oracle_family_reports_partial_sums():
    family = GraphFamily.from_oracle(ladder().truncation, base_vertex="1", schedule=(4, 8))
    profile = BoundaryPolicy.from_profile(ladder_solution_values(ladder().truncation(8), -1.0))
    (solution,) = solve_family(family, -1.0, boundary=profile, depth=8)
    result = state_check(family, solution, depth=8)
    assert result.status == "undetermined"
    assert [entry.depth for entry in result.partial_sums] == [4, 8]


def test_rose_sweep_from_one_start():
    m = CylinderMeasure.from_solution(solve_finite(rose(3).graph))
    additivity, ruelle = sweep_cylinders(m, 3, start="v")
    assert additivity.checked == 1 + 3 + 9 + 27
    assert ruelle.checked == 3 + 9 + 27
    assert additivity.worst_defect <= 1e-12


def test_ladder_states_far_from_zero():
    family = ladder()
    (solution,) = solve_family(family, -800.0)
    result = state_check(family, solution)
    assert result.status == "state"
    assert result.total == 1.0
    assert not is_state(family, 15.0, depth=40)
    with pytest.raises(ComputationError, match="overflows"):
        state_threshold(family, -800.0, 800.0)


def test_zero_tolerance_is_honoured(golden_graph):
    solution = solve_finite(golden_graph)
    xi = dict(solution.xi)
    xi["b"] *= 1 + 1e-12
    m = CylinderMeasure.from_solution(dataclasses.replace(solution, xi=xi))
    assert check_additivity(m, FinitePath.empty("b")).passed
    assert not check_additivity(m, FinitePath.empty("b"), tol=0.0).passed
