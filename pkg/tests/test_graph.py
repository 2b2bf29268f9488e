import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qwalk.classical import chain_matrix, transition_matrix
from qwalk.ctqw import evolve_quantum, generator_from_graph
from qwalk.graph import (
    GraphSizeError,
    LabeledGraph,
    build_family,
    complete_graph,
    from_edges,
    glued_trees_columns,
    pad_self_loops,
    reduce_glued_trees_generator,
    reduce_hypercube_chain,
    validate_labeling,
)


def test_line_window_embedding_and_ports():
    g = build_family("line-window", W=3)
    assert g.vertex_count == 7
    np.testing.assert_array_equal(g.coordinates, np.arange(-3, 4))
    v = g.index_of(0)
    assert g.coordinates[g.neighbor(v, 1)] == 1
    assert g.coordinates[g.neighbor(v, 2)] == -1
    assert g.neighbor(g.index_of(3), 1) is None
    assert g.neighbor_table[0, g.index_of(3)] == -1


@pytest.mark.parametrize("N", [3, 4, 9])
def test_circle_labels_step_forward_and_back(N):
    g = build_family("circle", N=N)
    for v in range(N):
        assert g.neighbor(v, 1) == (v + 1) % N
        assert g.neighbor(v, 2) == (v - 1) % N
    assert validate_labeling(g)


@pytest.mark.parametrize("d", [1, 2, 5])
def test_hypercube_label_flips_one_bit(d):
    g = build_family("hypercube", d=d)
    assert g.vertex_count == 2**d
    for v in range(2**d):
        for j in range(1, d + 1):
            assert g.neighbor(v, j) == v ^ (1 << (j - 1))
    assert validate_labeling(g)


@pytest.mark.parametrize("n", [1, 2, 3, 5])
def test_glued_trees_shape(n):
    g = build_family("glued-trees", n=n)
    assert g.vertex_count == 3 * 2**n - 2
    cols = glued_trees_columns(n)
    assert cols.size == g.vertex_count
    degrees = np.array([g.degree(v) for v in range(g.vertex_count)])
    assert set(degrees[np.isin(cols, [0, n, 2 * n])]) == {2}
    assert set(degrees[~np.isin(cols, [0, n, 2 * n])]) <= {3}
    for v, w in g.edges():
        assert abs(cols[v] - cols[w]) == 1
    assert validate_labeling(g)


@pytest.mark.parametrize(
    "family, params",
    [("circle", {"N": 2}), ("hypercube", {"d": 0}), ("line-window", {"W": 0}), ("glued-trees", {})],
)
def test_size_errors(family, params):
    with pytest.raises(GraphSizeError):
        build_family(family, **params)


def test_unknown_family():
    with pytest.raises(ValueError, match="unknown family"):
        build_family("torus", N=3)


def test_json_roundtrip_preserves_ports_and_coords():
    g = build_family("line-window", W=2)
    h = LabeledGraph.from_json(g.to_json())
    assert h.ports == g.ports
    np.testing.assert_array_equal(h.coordinates, g.coordinates)
    doc = json.loads(g.to_json())
    assert doc["family"] == "line-window"
    assert [0, 1, 1] in doc["ports"]


def test_validate_labeling_reports_offenders():
    bad = LabeledGraph((((1, 1), (1, 2)), ((1, 0),), ((1, 0),)), 2)
    check = validate_labeling(bad)
    assert not check
    assert 0 in check.offenders
    one_way = LabeledGraph((((1, 1),), ()), 1)
    assert validate_labeling(one_way).offenders == (0,)


def test_pad_self_loops_makes_graph_regular():
    g = pad_self_loops(from_edges([(0, 1), (1, 2), (1, 3)]))
    assert {g.degree(v) for v in range(4)} == {3}
    assert g.neighbor(0, 2) == 0 and g.neighbor(0, 3) == 0
    assert validate_labeling(g)


def test_complete_graph():
    g = complete_graph(4)
    assert all(g.degree(v) == 3 for v in range(4))
    assert validate_labeling(g)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 7), st.integers(0, 7)).filter(lambda e: e[0] != e[1]),
                max_size=20))
def test_from_edges_always_yields_valid_labeling(edges):
    g = from_edges(edges, 8)
    assert validate_labeling(g)
    assert sum(g.degree(v) for v in range(8)) == 2 * len(edges)


@pytest.mark.parametrize("d", [2, 3, 4, 6])
def test_hypercube_chain_matches_lumped_full_walk(d):
    full = transition_matrix(build_family("hypercube", d=d)).matrix
    reduced = chain_matrix(reduce_hypercube_chain(d)).matrix
    weight = np.array([bin(v).count("1") for v in range(2**d)])
    lump = np.zeros((d + 1, 2**d))
    lump[weight, np.arange(2**d)] = 1.0
    p = np.zeros(2**d)
    p[0] = 1.0
    q = np.zeros(d + 1)
    q[0] = 1.0
    for _ in range(3 * d):
        p, q = full @ p, reduced @ q
        np.testing.assert_allclose(lump @ p, q, atol=1e-12)


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_glued_trees_reduction_matches_full_generator(n):
    g = build_family("glued-trees", n=n)
    full = generator_from_graph(g)
    red = reduce_glued_trees_generator(n)
    cols = glued_trees_columns(n)
    start = np.zeros(g.vertex_count)
    start[0] = 1.0
    red_start = np.zeros(2 * n + 1)
    red_start[0] = 1.0
    t = np.linspace(0, 3 * n, 7)
    a_full = evolve_quantum(full, start, t)
    a_red = evolve_quantum(red, red_start, t)
    col_prob = np.stack([np.bincount(cols, np.abs(a) ** 2, 2 * n + 1) for a in a_full])
    np.testing.assert_allclose(col_prob, np.abs(a_red) ** 2, atol=1e-10)
