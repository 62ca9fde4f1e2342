import math

import numpy as np
import pytest

from kmslab.errors import GraphError, InfeasibleBetaError
from kmslab.families import LatticeWalk, lattice_walk
from kmslab.lattice import (
    divergence_certificate,
    exponential_eigenvector,
    family_solutions,
    level_set,
    mgf,
    minimize_mgf,
    ray_structure,
)

SYMMETRIC = LatticeWalk.parse("1:1;-1:1")
ASYMMETRIC = LatticeWalk.parse("1:2;-1:1")
PLANE = LatticeWalk.parse("1,0:1;-1,0:1;0,1:1;0,-1:1")


def test_mgf_value_and_derivatives():
    value = mgf(SYMMETRIC, [0.0])
    assert value.value == 2.0
    np.testing.assert_allclose(value.gradient, [0.0])
    np.testing.assert_allclose(value.hessian, [[2.0]])
    assert mgf(ASYMMETRIC, [1.0]).value == pytest.approx(2 * math.e + 1 / math.e)


def test_symmetric_walk_minimum():
    solution = minimize_mgf(SYMMETRIC)
    assert solution.beta0 == pytest.approx(math.log(2), abs=1e-14)
    assert solution.degenerate
    assert solution.spans


def test_asymmetric_walk_minimum():
    solution = minimize_mgf(ASYMMETRIC)
    assert solution.c_min[0] == pytest.approx(-0.34657359027997264, abs=1e-12)
    assert solution.beta0 == pytest.approx(1.0397207708399179, abs=1e-12)
    assert not solution.degenerate
    np.testing.assert_allclose(solution.drift, [1.0])


def test_plane_walk_minimum():
    solution = minimize_mgf(PLANE)
    assert solution.beta0 == pytest.approx(math.log(4), abs=1e-14)
    np.testing.assert_allclose(solution.c_min, [0.0, 0.0], atol=1e-14)


def test_level_set_points_solve_the_mgf_equation():
    beta = 1.0397207708399179 + 0.5
    points = level_set(ASYMMETRIC, beta)
    assert len(points) == 2
    assert points[0][0] < -0.34657359027997264 < points[1][0]
    for point in points:
        assert mgf(ASYMMETRIC, point).value == pytest.approx(math.exp(beta), rel=1e-12)


def test_level_set_below_beta0():
    with pytest.raises(InfeasibleBetaError, match="below beta0"):
        level_set(SYMMETRIC, 0.5)


def test_ray_structure_at_beta0_is_a_single_ray():
    rays = ray_structure(SYMMETRIC, math.log(2))
    assert rays.kind == "single-ray"
    assert rays.complete
    assert "recurrence" in rays.notes[0]
    asymmetric = ray_structure(ASYMMETRIC, 1.0397207708399179)
    assert asymmetric.kind == "single-ray"
    assert "c_min" in asymmetric.notes[0]


def test_ray_structure_above_beta0():
    line = ray_structure(ASYMMETRIC, 2.0)
    assert line.kind == "sphere"
    assert line.complete
    assert len(line.rays) == 2
    plane = ray_structure(PLANE, math.log(4) + 0.5)
    assert plane.kind == "sphere"
    assert not plane.complete
    assert len(plane.rays) == 4
    assert "S^1" in plane.notes[0]


def test_exponential_eigenvector_solves_the_window():
    solution = exponential_eigenvector(ASYMMETRIC, [-0.2], radius=5)
    assert solution.beta == pytest.approx(math.log(2 * math.exp(-0.2) + math.exp(0.2)))
    assert solution.residual <= 1e-12
    assert solution.xi["0"] == 1.0
    assert solution.xi["2"] == pytest.approx(math.exp(-0.4))
    assert solution.parameters == {"c1": -0.2}


def test_window_must_hold_a_step():
    walk = LatticeWalk.parse("2:1;-1:1")
    with pytest.raises(GraphError, match="support radius"):
        exponential_eigenvector(walk, [0.0], radius=1)


def test_family_solutions_at_beta0_are_constant_for_a_symmetric_walk():
    (solution,) = family_solutions(SYMMETRIC, math.log(2))
    assert solution.label == "f_c ray 1"
    for value in solution.xi.values():
        assert value == pytest.approx(1.0, abs=1e-12)


def test_lattice_family_declares_closed_forms():
    family = lattice_walk(SYMMETRIC)
    assert family.traits.closed_form
    assert family.base_vertex() == "0"
    assert not lattice_walk(LatticeWalk.parse("2:1;-2:1")).traits.closed_form


def test_divergence_certificate_points_along_c():
    text = divergence_certificate(ASYMMETRIC, [-0.3])
    assert "k*[-1]" in text
    assert "diverges" in text
