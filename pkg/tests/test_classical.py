import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qwalk.analysis import empirical_mixing_time
from qwalk.classical import (
    ClassicalWalk,
    CnfFormula,
    StochasticMatrix,
    absorbing_walk,
    chain_matrix,
    evolve_classical,
    expected_hitting,
    line_absorbing,
    mixing_bounds,
    parse_dimacs,
    random_planted_2sat,
    st_connectivity,
    stationary_and_gap,
    transition_matrix,
    two_sat_walk,
)
from qwalk.distribution import point_mass
from qwalk.graph import build_family, complete_graph, from_edges, reduce_hypercube_chain

CLASSICAL_TABLE_T5 = {-5: 1 / 32, -3: 5 / 32, -1: 5 / 16, 1: 5 / 16, 3: 5 / 32, 5: 1 / 32}
WORKED_2SAT = ((1, -2), (-1, 3), (2, 3), (-1, -3))


def _line(W):
    g = build_family("line-window", W=W)
    return g, transition_matrix(g)


def test_stochastic_matrix_validation():
    with pytest.raises(ValueError):
        StochasticMatrix(np.array([[0.5, 0.5], [0.6, 0.5]]))
    with pytest.raises(ValueError):
        StochasticMatrix(np.array([[1.5, 0.0], [-0.5, 1.0]]))
    with pytest.raises(ValueError, match="isolated"):
        transition_matrix(from_edges([(0, 1)], 3))


def test_circle_matrix_has_half_on_off_diagonals():
    m = transition_matrix(build_family("circle", N=6)).matrix
    expected = 0.5 * (np.roll(np.eye(6), 1, axis=0) + np.roll(np.eye(6), -1, axis=0))
    np.testing.assert_array_equal(m, expected)


def test_complete_graph_and_hypercube_entries():
    m = transition_matrix(complete_graph(3)).matrix
    np.testing.assert_array_equal(m, (np.ones((3, 3)) - np.eye(3)) / 2)
    h = transition_matrix(build_family("hypercube", d=3)).matrix
    for v, w in itertools.product(range(8), repeat=2):
        assert h[w, v] == (1 / 3 if bin(v ^ w).count("1") == 1 else 0)


@pytest.mark.parametrize("T", range(6))
def test_classical_table(T):
    g, m = _line(6)
    p = evolve_classical(m, point_mass(g.coordinates, 0), T)
    from math import comb
    for x in range(-T, T + 1):
        expected = comb(T, (T + x) // 2) / 2**T if (T + x) % 2 == 0 else 0
        assert p[x] == pytest.approx(expected, abs=1e-12)
    if T == 5:
        assert p.as_dict(1e-15) == pytest.approx(CLASSICAL_TABLE_T5, abs=1e-12)


def test_circle_two_steps():
    g = build_family("circle", N=8)
    p = evolve_classical(transition_matrix(g), point_mass(g.coordinates, 0), 2)
    np.testing.assert_allclose(p.values, [0.5, 0, 0.25, 0, 0, 0, 0.25, 0])


def test_line_variance_equals_time():
    g, m = _line(300)
    walk = ClassicalWalk(m, point_mass(g.coordinates, 0))
    for t, dist in enumerate(walk.distributions(300)):
        assert np.dot(dist.values, dist.support.astype(float) ** 2) == pytest.approx(t, abs=1e-9)


def test_stationary_regular_graph_uniform_and_complete_graph_gap():
    spec = stationary_and_gap(transition_matrix(complete_graph(3)))
    np.testing.assert_allclose(spec.stationary.values, 1 / 3)
    assert spec.lambda2 == pytest.approx(-0.5)
    assert not spec.bipartite


def test_stationary_of_irregular_graph_proportional_to_degree():
    g = from_edges([(0, 1), (1, 2), (1, 3), (2, 3)])
    spec = stationary_and_gap(transition_matrix(g))
    np.testing.assert_allclose(spec.stationary.values, np.array([1, 3, 2, 2]) / 8, atol=1e-12)


@pytest.mark.parametrize("N, bipartite", [(4, True), (6, True), (5, False), (9, False)])
def test_bipartite_flag(N, bipartite):
    assert stationary_and_gap(transition_matrix(build_family("circle", N=N))).bipartite is bipartite


def test_mixing_bounds_bracket_complete_graph():
    m = transition_matrix(complete_graph(5))
    spec = stationary_and_gap(m)
    walk = ClassicalWalk(m, point_mass(m.support, 0))
    t = empirical_mixing_time(walk, spec.stationary, 0.1, 200)
    lo, hi = mixing_bounds(spec.lambda_star, spec.stationary, 0.1)
    assert lo <= t <= hi


@pytest.mark.parametrize("N", [5, 7, 9, 13])
def test_mixing_bounds_bracket_odd_cycles(N):
    m = transition_matrix(build_family("circle", N=N))
    spec = stationary_and_gap(m)
    walk = ClassicalWalk(m, point_mass(m.support, 0))
    t = empirical_mixing_time(walk, spec.stationary, 0.25, 5000)
    lo, hi = mixing_bounds(spec.lambda_star, spec.stationary, 0.25)
    assert lo <= t <= hi


def test_mixing_bounds_shape():
    pi = np.full(4, 0.25)
    _, hi1 = mixing_bounds(0.5, pi, 0.1)
    _, hi2 = mixing_bounds(0.5, pi, 0.01)
    assert hi2 - hi1 == pytest.approx(np.log(10) / 0.5)
    assert mixing_bounds(0.999, pi, 0.1)[1] > 100 * mixing_bounds(0.5, pi, 0.1)[1]
    with pytest.raises(ValueError):
        mixing_bounds(1.0, pi, 0.1)


def test_expected_hitting_examples():
    chain = chain_matrix(reduce_hypercube_chain(3))
    assert expected_hitting(chain, 0, 3) == pytest.approx(10.0)
    full = transition_matrix(build_family("hypercube", d=3))
    assert expected_hitting(full, 0, 7) == pytest.approx(10.0)
    for N in (4, 8, 12):
        m = transition_matrix(build_family("circle", N=N))
        assert expected_hitting(m, 0, N // 2) == pytest.approx(N * N / 4)
    assert expected_hitting(chain, 2, 2) == 0


def test_expected_hitting_unreachable():
    m = transition_matrix(from_edges([(0, 1), (2, 3)]))
    with pytest.raises(ValueError):
        expected_hitting(m, 0, 3)


def test_hypercube_hitting_ratio_tends_to_two():
    h = [expected_hitting(chain_matrix(reduce_hypercube_chain(d)), 0, d) for d in range(3, 21)]
    ratios = np.array(h[1:]) / np.array(h[:-1])
    assert np.all(np.abs(ratios - 2) <= 0.2)
    assert abs(ratios[-1] - 2) < abs(ratios[0] - 2)


def test_absorbing_walk_matches_line_absorbing():
    g, m = _line(40)
    rec = absorbing_walk(m, point_mass(g.coordinates, 1), [g.index_of(0)], 30)
    fast = line_absorbing(1, [0], 30)
    np.testing.assert_allclose(rec.cumulative, fast.cumulative, atol=1e-14)


def test_line_absorption_tends_to_one():
    rec = line_absorbing(1, [0], 10_000)
    assert np.all(np.diff(rec.cumulative) >= 0)
    assert 0.97 <= rec.cumulative[-1] <= 1
    assert rec.cumulative[100] < rec.cumulative[1000] < rec.cumulative[10_000]


def _brute_force(f):
    return [bits for bits in itertools.product((0, 1), repeat=f.n) if f.is_satisfied(bits)]


def test_worked_formula_has_unique_solution_110():
    f = CnfFormula(3, WORKED_2SAT, true_value=0)
    assert _brute_force(f) == [(1, 1, 0)]
    for seed in range(20):
        res = two_sat_walk(f, seed, 1000)
        assert res.assignment == (1, 1, 0)


def test_worked_formula_under_usual_semantics_differs():
    # with unnegated literals true at 1 the satisfying assignment is the complement
    assert _brute_force(CnfFormula(3, WORKED_2SAT)) == [(0, 0, 1)]


def test_unsatisfiable_formula():
    f = CnfFormula(1, ((1, 1), (-1, -1)))
    res = two_sat_walk(f, 0, 500)
    assert not res.satisfied and res.assignment is None and res.flips == 500


def test_clause_validation():
    with pytest.raises(ValueError):
        CnfFormula(2, ((1, 3),))
    with pytest.raises(ValueError):
        CnfFormula(2, ((1, 2, -1),))


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 8), st.integers(1, 20), st.integers(0, 2**31))
def test_planted_instances_are_satisfiable_and_solved(n, m, seed):
    f, planted = random_planted_2sat(n, m, seed)
    assert f.is_satisfied(planted)
    res = two_sat_walk(f, seed, 100 * n * n)
    assert res.satisfied and f.is_satisfied(res.assignment)


def test_median_flips_quadratic():
    # c = 0.25 frozen from a seeded sweep; observed medians stay below 0.1 n^2
    rng = np.random.default_rng(0)
    for n in (10, 30, 50):
        flips = []
        for _ in range(40):
            f, _ = random_planted_2sat(n, 2 * n, rng)
            flips.append(two_sat_walk(f, rng, 100 * n * n).flips)
        assert np.median(flips) <= 0.25 * n * n


def test_dimacs_roundtrip():
    f = CnfFormula(3, WORKED_2SAT)
    g = parse_dimacs("c comment\n" + f.to_dimacs())
    assert g == f
    with pytest.raises(ValueError):
        parse_dimacs("p cnf 2 2\n1 2 0\n")
    with pytest.raises(ValueError):
        parse_dimacs("1 2 0\n")
    with pytest.raises(ValueError):
        parse_dimacs("p cnf 2 1\n1 2\n")


def test_st_connectivity_one_sided():
    g = from_edges([(0, 1), (1, 2), (3, 4)])
    assert not any(st_connectivity(g, 0, 4, seed) for seed in range(50))
    assert st_connectivity(g, 2, 2, 0)
    path = from_edges([(i, i + 1) for i in range(9)])
    assert np.mean([st_connectivity(path, 0, 9, seed) for seed in range(100)]) >= 0.5


def test_st_connectivity_deterministic_given_seed():
    g = from_edges([(i, i + 1) for i in range(9)])
    runs = [st_connectivity(g, 0, 9, 5, steps=40) for _ in range(3)]
    assert len(set(runs)) == 1
