import math

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings, strategies as st

from backbone import (
    Exact,
    InfeasibleStrategyError,
    Sampled,
    WeightedGraph,
    backbone,
    communicability,
    edge_failure_setfunction,
    erdos_renyi_graph,
    matrix_exponential,
    structural_synergy_backbone,
    verify_desiderata,
)
from backbone.graph import mean_offdiagonal


def power_series_expm(a, terms=80):
    out = np.eye(len(a))
    term = np.eye(len(a))
    for j in range(1, terms):
        term = term @ a / j
        out = out + term
    return out


def triangle():
    return WeightedGraph.from_edges([(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)])


def test_two_node_graph_is_sinh():
    for w in (0.1, 1.0, 2.5):
        g = WeightedGraph.from_edges([(0, 1, w)])
        c = communicability(g)
        assert c.matrix[0, 1] == pytest.approx(math.sinh(w), abs=1e-12)
        assert c.matrix[0, 0] == pytest.approx(math.cosh(w), abs=1e-12)
        spec = structural_synergy_backbone(g)
        np.testing.assert_allclose(spec.partial_atoms, [math.sinh(w)], atol=1e-12)


def test_triangle_closed_forms():
    e = math.e
    total = (e ** 2 - 1 / e) / 3
    r2 = math.sqrt(2)
    path = (2 * math.sinh(r2) / r2 + (math.cosh(r2) - 1) / 2) / 3
    single = math.sinh(1) / 3
    spec = structural_synergy_backbone(triangle(), "min")
    assert communicability(triangle()).mean_offdiagonal == pytest.approx(total, abs=1e-12)
    np.testing.assert_allclose(spec.alpha_synergy, [total - path, total - single, total], atol=1e-12)
    # all edges equivalent, so every aggregator agrees
    for agg in ("max", "mean"):
        np.testing.assert_allclose(structural_synergy_backbone(triangle(), agg).alpha_synergy,
                                   spec.alpha_synergy, atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 7), st.booleans())
def test_matrix_exponential_against_oracles(seed, n, symmetric):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(n, n))
    if symmetric:
        a = (a + a.T) / 2
    got = matrix_exponential(a)
    np.testing.assert_allclose(got, scipy.linalg.expm(a), rtol=1e-10, atol=1e-10)
    np.testing.assert_allclose(got, power_series_expm(a), rtol=1e-9, atol=1e-9)


def test_matrix_exponential_large_norm_and_errors():
    a = np.array([[0.0, 6.0], [-1.0, 0.5]])
    np.testing.assert_allclose(matrix_exponential(a), scipy.linalg.expm(a), rtol=1e-10)
    with pytest.raises(ValueError):
        matrix_exponential(np.ones((2, 3)))
    with pytest.raises(ValueError):
        matrix_exponential(np.array([[np.nan]]))


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_batched_evaluation_matches_per_mask(seed):
    rng = np.random.default_rng(seed)
    g = erdos_renyi_graph(6, 7, rng)
    sf = edge_failure_setfunction(g)
    masks = np.arange(1 << g.num_edges, dtype=np.int64)
    want = [mean_offdiagonal(scipy.linalg.expm(g.adjacency(int(m)))) for m in masks]
    np.testing.assert_allclose([sf.raw(int(m)) for m in masks], want, rtol=1e-10, atol=1e-12)


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_structural_backbone_desiderata_and_sum(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(3, 7))
    m = int(rng.integers(1, min(10, n * (n - 1) // 2) + 1))
    g = erdos_renyi_graph(n, m, rng)
    assert verify_desiderata(edge_failure_setfunction(g)).admissible
    for agg in ("min", "max", "mean"):
        spec = structural_synergy_backbone(g, agg)
        assert spec.monotone_violations == ()
        assert np.all(spec.alpha_synergy >= -1e-12)
        assert spec.partial_atoms.sum() == pytest.approx(communicability(g).mean_offdiagonal, abs=1e-9)


def test_node_relabeling_leaves_spectrum_unchanged():
    g = erdos_renyi_graph(6, 8, np.random.default_rng(3))
    h = g.relabel([5, 3, 1, 0, 2, 4])
    np.testing.assert_allclose(structural_synergy_backbone(g).alpha_synergy,
                               structural_synergy_backbone(h).alpha_synergy, atol=1e-12)


def test_exact_cap_and_sampled_fallback():
    g = erdos_renyi_graph(10, 21, np.random.default_rng(0))
    with pytest.raises(InfeasibleStrategyError):
        structural_synergy_backbone(g, "min", Exact())
    spec = structural_synergy_backbone(g, "min", Sampled(50, seed=0))
    assert spec.ground_size == 21
    assert spec.total == pytest.approx(communicability(g).mean_offdiagonal, abs=1e-9)


def test_empty_and_single_node_graphs():
    spec = structural_synergy_backbone(WeightedGraph(3, ()))
    assert spec.ground_size == 0 and spec.total == 0.0
    assert communicability(WeightedGraph(1, ())).mean_offdiagonal == 0.0


def test_zero_weight_edges_contribute_nothing():
    g = WeightedGraph.from_edges([(0, 1, 0.0), (1, 2, 0.0)])
    np.testing.assert_allclose(structural_synergy_backbone(g).alpha_synergy, 0.0, atol=1e-15)


@pytest.mark.parametrize("edges,msg", [
    ([(0, 1, -1.0)], "non-negative"),
    ([(0, 1, float("inf"))], "non-negative"),
    ([(0, 0, 1.0)], "self-loop"),
    ([(0, 1, 1.0), (1, 0, 2.0)], "duplicates"),
])
def test_graph_validation(edges, msg):
    with pytest.raises(ValueError, match=msg):
        WeightedGraph.from_edges(edges)


def test_directed_graph_uses_general_exponential():
    g = WeightedGraph.from_edges([(0, 1, 1.0), (1, 2, 1.0)], directed=True)
    # walks only go forward: 0->1, 1->2 weight 1, 0->2 weight 1/2
    c = communicability(g)
    assert c.mean_offdiagonal == pytest.approx(2.5 / 6, abs=1e-12)
    spec = structural_synergy_backbone(g)
    assert spec.total == pytest.approx(2.5 / 6, abs=1e-12)


def test_erdos_renyi_graph_shape():
    g = erdos_renyi_graph(10, 19, np.random.default_rng(0))
    assert g.num_nodes == 10 and g.num_edges == 19
    assert all(e.w >= 0 for e in g.edges)
    assert backbone(edge_failure_setfunction(g), "min", Sampled(10, seed=1)).ground_size == 19
