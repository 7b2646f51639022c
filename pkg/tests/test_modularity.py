import numpy as np
import pytest

from ucode.graph import AttributedGraph
from ucode.modularity import (EmptyGraphError, community_modularity_matrix,
                              conductance, modularity_score, one_hot)
from ucode.partition import Partition

from oracles import dense_qm, per_community_modularity


def test_hard_bowtie_qm(bowtie, hard_bowtie):
    q = community_modularity_matrix(bowtie, hard_bowtie)
    np.testing.assert_allclose(q, [[2 / 3, -2 / 3], [-2 / 3, 2 / 3]], atol=1e-12)


def test_overlap_bowtie_qm(bowtie, overlap_bowtie):
    q = community_modularity_matrix(bowtie, overlap_bowtie)
    np.testing.assert_allclose(q, [[1, -1], [-1, 1]], atol=1e-12)


def test_all_ones_column_is_null(make_random_graph):
    g = make_random_graph(3, 9)
    c = np.column_stack([np.ones(9), np.zeros(9)])
    q = community_modularity_matrix(g, c)
    assert abs(q[0, 0]) < 1e-10
    c = np.column_stack([np.ones(9), np.random.default_rng(0).random(9)])
    q = community_modularity_matrix(g, c)
    assert np.abs(q[0]).max() < 1e-10 and np.abs(q[:, 0]).max() < 1e-10


def test_zero_edge_graph_rejected():
    g = AttributedGraph.from_edges(3, [])
    with pytest.raises(EmptyGraphError):
        community_modularity_matrix(g, np.ones((3, 2)))
    with pytest.raises(EmptyGraphError):
        modularity_score(g, [0, 0, 1])


def test_row_mismatch_rejected(bowtie):
    with pytest.raises(ValueError):
        community_modularity_matrix(bowtie, np.ones((4, 2)))


def test_bowtie_modularity_normalizations(bowtie):
    labels = [0, 0, 1, 1, 1]
    assert modularity_score(bowtie, labels, "standard_half") == pytest.approx(4 / 36, abs=1e-12)
    assert modularity_score(bowtie, labels, "paper_quarter") == pytest.approx(2 / 36, abs=1e-12)


def test_single_community_modularity_is_zero(bowtie):
    assert abs(modularity_score(bowtie, [0] * 5, "standard_half")) < 1e-15
    assert abs(modularity_score(bowtie, Partition([0] * 5), "paper_quarter")) < 1e-15


def test_unknown_norm(bowtie):
    with pytest.raises(ValueError):
        modularity_score(bowtie, [0, 0, 1, 1, 1], "tenth")


@pytest.mark.parametrize("seed", range(50))
def test_sparse_matches_dense(seed, make_random_graph):
    rng = np.random.default_rng(1000 + seed)
    n = int(rng.integers(2, 31))
    g = make_random_graph(seed, n, p=float(rng.uniform(0.1, 0.6)))
    c = rng.random((n, int(rng.integers(2, 6))))
    expected = dense_qm(n, g.edges.tolist(), c)
    q = community_modularity_matrix(g, c)
    np.testing.assert_allclose(q, expected, atol=1e-8)
    assert abs(np.trace(q) - np.trace(expected)) < 1e-8
    assert np.abs(q - q.T).max() < 1e-10


@pytest.mark.parametrize("seed", range(20))
def test_column_permutation_equivariance(seed, make_random_graph):
    rng = np.random.default_rng(seed)
    g = make_random_graph(seed, 12)
    c = rng.random((12, 4))
    perm = rng.permutation(4)
    q = community_modularity_matrix(g, c)
    qp = community_modularity_matrix(g, c[:, perm])
    np.testing.assert_allclose(qp, q[np.ix_(perm, perm)], atol=1e-12)
    assert np.trace(qp) == pytest.approx(np.trace(q), abs=1e-12)


@pytest.mark.parametrize("seed", range(20))
def test_hard_partition_matches_per_community_formula(seed, make_random_graph):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(4, 20))
    g = make_random_graph(seed, n, p=0.3)
    labels = rng.integers(0, 3, size=n).tolist()
    expected = per_community_modularity(n, g.edges.tolist(), labels)
    assert modularity_score(g, labels) == pytest.approx(expected, abs=1e-10)


@pytest.mark.parametrize("seed", range(10))
def test_partition_qm_sums_to_zero(seed, make_random_graph):
    rng = np.random.default_rng(seed)
    g = make_random_graph(seed, 15)
    c = one_hot(rng.integers(0, 4, size=15), 4)
    assert abs(community_modularity_matrix(g, c).sum()) < 1e-8


def test_one_hot_pads_to_two_columns():
    np.testing.assert_array_equal(one_hot([0, 0, 0]), [[1, 0], [1, 0], [1, 0]])
    assert one_hot([2, 0]).shape == (2, 3)


def test_bowtie_conductance(bowtie):
    per, mean = conductance(bowtie, Partition([0, 0, 1, 1, 1]))
    assert per[0] == pytest.approx(0.5, abs=1e-10)
    assert per[1] == pytest.approx(0.25, abs=1e-10)
    assert mean == pytest.approx(0.375, abs=1e-10)


def test_whole_graph_conductance_is_zero(bowtie):
    per, mean = conductance(bowtie, [0] * 5)
    assert per == {0: 0.0} and mean == 0.0


def test_zero_volume_community_scores_zero():
    g = AttributedGraph.from_edges(3, [(0, 1)])
    per, mean = conductance(g, Partition([0, 0, 1]))
    assert per[1] == 0.0
    assert mean == pytest.approx(0.0)
