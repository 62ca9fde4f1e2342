import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kmslab.errors import GraphError
from kmslab.families import arms, ladder, load_graph, rose
from kmslab.graph import Edge, FiniteGraph, FinitePath, enumerate_paths, graph_from_adjacency, out_edges, sort_vertices

from oracles import path_count, strongly_connected_graphs


def test_rose_has_one_vertex_with_two_loops():
    graph = rose(2).graph
    assert graph.vertices == ("v",)
    assert len(graph.edges) == 2
    assert graph.count("v", "v") == 2


def test_arms_truncation_at_depth_four_has_25_vertices():
    graph = arms(3).truncation(4)
    assert len(graph) == 25
    assert "1" in graph and "a4" in graph and "c-4" in graph
    assert graph.frontier == frozenset({"a4", "b4", "c4"})


def test_explicit_graph_with_a_sink_is_rejected():
    document = {"vertices": ["a", "b"], "edges": [{"src": "a", "dst": "b"}]}
    with pytest.raises(GraphError, match="sink"):
        load_graph(document)


def test_negative_multiplicity_is_rejected():
    document = {"vertices": ["a"], "edges": [{"src": "a", "dst": "a", "count": -1}]}
    with pytest.raises(GraphError, match="negative multiplicity"):
        load_graph(document)


def test_malformed_json_is_a_parse_error():
    with pytest.raises(GraphError, match="^parse error"):
        load_graph("{not json")


def test_edge_counts_expand_to_parallel_edges():
    document = {"vertices": ["a"], "edges": [{"src": "a", "dst": "a", "id": "loop", "count": 2}]}
    graph = load_graph(document).graph
    assert [edge.id for edge in graph.edges] == ["loop#1", "loop#2"]
    assert graph.count("a", "a") == 2


def test_unknown_vertex_in_out_edges():
    with pytest.raises(GraphError, match="unknown vertex"):
        out_edges(rose(2).graph, "w")


def test_ladder_out_edges():
    graph = ladder().truncation(10)
    (single,) = out_edges(graph, "x3")
    assert single.dst == "y3"
    assert sorted(edge.dst for edge in out_edges(graph, "y3")) == ["x4", "y4"]


def test_out_edges_are_sorted_by_id():
    graph = graph_from_adjacency({"a": {"a": 1, "b": 2}, "b": {"a": 1}})
    assert [edge.id for edge in out_edges(graph, "a")] == ["e1", "e2", "e3"]


def test_enumerate_paths_on_rose():
    graph = rose(2).graph
    assert len(enumerate_paths(graph, "v", 3)) == 8
    (empty,) = enumerate_paths(graph, "v", 0)
    assert len(empty) == 0 and empty.range == "v"


def test_enumerate_paths_from_the_arms_hub():
    paths = enumerate_paths(arms(3).truncation(4), "1", 2)
    assert len(paths) == 6
    assert {path.range for path in paths} == {"a2", "a-1", "b2", "b-1", "c2", "c-1"}


@settings(max_examples=30, deadline=None)
@given(graph=strongly_connected_graphs(), pick=st.integers(0, 7))
def test_enumerate_paths_matches_matrix_powers(graph, pick):
    v = graph.vertices[pick % len(graph)]
    for n in range(0, 7):
        assert len(enumerate_paths(graph, v, n)) == path_count(graph, v, n)


@pytest.mark.parametrize("family", [arms(3), ladder()])
def test_truncations_are_nested(family):
    for k in (2, 3, 5):
        small, large = family.truncation(k), family.truncation(k + 1)
        for v in small.interior:
            assert [e.id for e in small.out_edges(v)] == [e.id for e in large.out_edges(v)]
        restricted = large.induced(small.vertices)
        assert [e.id for e in restricted.edges] == [e.id for e in small.edges]
        assert restricted.frontier == small.frontier


def test_natural_vertex_order():
    assert sort_vertices(["a10", "a2", "a-1", 1]) == [1, "a-1", "a2", "a10"]


def test_paths_must_compose():
    graph = graph_from_adjacency({"a": {"b": 1}, "b": {"a": 1}})
    first = graph.edge("e1")
    with pytest.raises(GraphError, match="does not continue"):
        FinitePath("a", (first, first))


def test_path_from_edge_ids_and_shift():
    graph = rose(2).graph
    path = FinitePath.from_edge_ids(graph, ["e1", "e2"])
    assert path.source == "v" and path.range == "v"
    assert path.tail().edge_ids == ("e2",)
    with pytest.raises(GraphError, match="unknown edge"):
        FinitePath.from_edge_ids(graph, ["e9"])


def test_duplicate_edge_id_is_rejected():
    with pytest.raises(GraphError, match="duplicate edge id"):
        FiniteGraph(["a"], [Edge("x", "a", "a"), Edge("x", "a", "a")])


def test_equal_natural_keys_fall_back_to_the_raw_string():
    assert sort_vertices(["a1", "a01"]) == sort_vertices(["a01", "a1"]) == ["a01", "a1"]


def test_base_vertex_is_lexicographically_smallest():
    graph = graph_from_adjacency({"v9": {"v10": 1}, "v10": {"v9": 1}})
    assert graph.vertices == ("v9", "v10")
    assert graph.base_vertex == "v10"
    assert graph_from_adjacency({2: {10: 1}, 10: {2: 1}}).base_vertex == 10
