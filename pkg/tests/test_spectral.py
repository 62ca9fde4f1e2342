import math

import numpy as np
import pytest

from kmslab.errors import NoLoopsError
from kmslab.families import GraphFamily, LatticeWalk, arms, cycle, ladder, lattice_walk, rose
from kmslab.graph import graph_from_adjacency
from kmslab.spectral import beta0, loop_counts, loop_growth, perron_pair, recurrence_test, spectral_radius

from oracles import cubic_root


def test_perron_pair_of_a_periodic_matrix():
    pair = perron_pair(np.array([[0.0, 1.0], [1.0, 0.0]]))
    assert pair.value == pytest.approx(1.0, abs=1e-12)
    np.testing.assert_allclose(pair.vector, [1.0, 1.0])


def test_perron_pair_of_the_golden_matrix():
    pair = perron_pair(np.array([[1.0, 1.0], [1.0, 0.0]]))
    assert pair.value == pytest.approx((1 + math.sqrt(5)) / 2, rel=1e-10)
    assert pair.method == "power-iteration"
    assert pair.vector.max() == 1.0
    assert (pair.vector > 0).all()


def test_large_blocks_use_arpack():
    pair = perron_pair(np.ones((6, 6)), arpack_threshold=2)
    assert pair.method == "arpack"
    assert pair.value == pytest.approx(6.0, rel=1e-10)
    np.testing.assert_allclose(pair.vector, np.ones(6), rtol=1e-8)


def test_spectral_radius_takes_the_largest_core():
    graph = graph_from_adjacency({"a": {"a": 1, "b": 1}, "b": {"b": 3}})
    assert spectral_radius(graph) == pytest.approx(3.0, rel=1e-10)


def test_loop_counts_are_exact():
    assert loop_counts(rose(2).graph, "v", 5) == [2, 4, 8, 16, 32]
    assert loop_counts(cycle(3).graph, 0, 6) == [0, 0, 1, 0, 0, 1]
    counts = loop_counts(arms(3).truncation(6), "1", 3)
    assert counts[1] == 0
    assert counts[2] == 3


def test_loop_growth_at_a_rose():
    estimate = loop_growth(rose(2).graph, "v")
    assert estimate.period == 1
    assert estimate.estimate == pytest.approx(math.log(2), abs=1e-12)


def test_loop_growth_without_loops():
    graph = graph_from_adjacency({"a": {"b": 1}, "b": {"b": 1}})
    with pytest.raises(NoLoopsError):
        loop_growth(graph, "a")


def test_beta0_of_rose():
    result = beta0(rose(2))
    assert result.method == "finite-perron"
    assert result.value == pytest.approx(math.log(2), abs=1e-12)
    assert result.vertex_estimates[0].vertex == "v"


def test_beta0_of_arms_matches_the_cubic_root():
    result = beta0(arms(3))
    assert result.method == "exact-closed-form"
    assert result.value == pytest.approx(math.log(cubic_root(3)), abs=1e-12)
    assert abs(result.value - 0.513865) < 1e-4
    estimates = [entry.estimate for entry in result.certificate]
    assert estimates == sorted(estimates)
    assert max(estimates) <= result.value + 1e-9


@pytest.mark.parametrize("n", [1, 2, 4])
def test_beta0_of_other_arm_counts(n):
    assert beta0(arms(n)).value == pytest.approx(math.log(cubic_root(n)), abs=1e-12)


def test_ladder_has_no_beta0():
    with pytest.raises(NoLoopsError, match="no loops"):
        beta0(ladder())


def test_lattice_truncations_approach_log_two_from_below():
    result = beta0(lattice_walk(LatticeWalk.parse("1:1;-1:1")))
    assert result.method == "exact-closed-form"
    assert result.value == pytest.approx(math.log(2), abs=1e-10)
    last = result.certificate[-1]
    assert last.depth == 30
    assert last.estimate == pytest.approx(math.log(2 * math.cos(math.pi / 62)), abs=1e-9)
    assert 0 < math.log(2) - last.estimate < 2e-3


def test_oracle_family_reports_a_truncation_limit():
    family = GraphFamily.from_oracle(arms(3).truncation, schedule=(4, 8, 16))
    result = beta0(family, depth=16)
    assert result.method == "truncation-limit"
    assert [entry.depth for entry in result.certificate] == [4, 8, 16]
    assert result.value <= math.log(cubic_root(3)) + 1e-9


def test_recurrence_at_beta0_of_a_rose_diverges():
    result = recurrence_test(rose(2), math.log(2), "v")
    assert result.status == "divergent"


def test_recurrence_above_beta0_converges():
    result = recurrence_test(rose(2), math.log(2) + 0.5, "v")
    assert result.status == "convergent-so-far"
    assert result.partial_sum == pytest.approx(1 / (1 - math.exp(-0.5)), rel=1e-9)


@pytest.mark.parametrize(
    "family, beta, vertex, status",
    [
        (rose(2), math.log(2), "v", "divergent"),
        (rose(2), math.log(3), "v", "convergent-so-far"),
        (cycle(3), 0.0, 0, "divergent"),
    ],
)
def test_recurrence_verdicts(family, beta, vertex, status):
    assert recurrence_test(family, beta, vertex).status == status


def test_recurrence_partial_sum_of_a_geometric_series():
    result = recurrence_test(rose(2), math.log(3), "v")
    assert result.partial_sum == pytest.approx(3.0, rel=1e-9)
    assert result.terms == 400
