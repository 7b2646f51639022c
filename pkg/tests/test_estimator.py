import numpy as np
import pytest
import scipy.sparse as sp
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from ucode import UCoDe
from ucode.data import SbmConfig, bowtie, sbm_generate
from ucode.metrics import nmi
from ucode.partition import Cover
from ucode.validation import check_graph, edges_from_adjacency

FAST = dict(epochs=40, hidden=16, n_communities=2)


def test_params_round_trip():
    est = UCoDe(n_communities=4, delta=0.85, overlap=True)
    params = est.get_params()
    assert params["n_communities"] == 4 and params["delta"] == 0.85 and params["qm_norm"] == "paper_quarter"
    twin = clone(est)
    assert twin.get_params() == params
    twin.set_params(hidden=32)
    assert twin.hidden == 32 and est.hidden == 256


def test_fit_on_graph_object():
    est = UCoDe(**FAST).fit(bowtie())
    assert est.membership_.shape == (5, 2)
    assert est.labels_.shape == (5,)
    assert est.n_features_in_ == 5
    assert len(est.history_.records) == 40
    np.testing.assert_array_equal(est.transform(), est.membership_)
    np.testing.assert_array_equal(est.predict(), est.labels_)


def test_fit_on_features_and_adjacency_matches_graph():
    g = bowtie()
    dense = g.adjacency.toarray()
    a = UCoDe(**FAST).fit(g.features, adjacency=dense)
    b = UCoDe(**FAST).fit(g)
    np.testing.assert_array_equal(a.membership_, b.membership_)
    c = UCoDe(**FAST).fit(g.features, adjacency=sp.csr_matrix(dense))
    np.testing.assert_array_equal(c.membership_, b.membership_)
    d = UCoDe(**FAST).fit(g.features, adjacency=np.array(g.edges))
    np.testing.assert_array_equal(d.membership_, b.membership_)


def test_fit_predict_and_fit_transform():
    g = bowtie()
    labels = UCoDe(**FAST).fit_predict(g.features, adjacency=g.adjacency)
    assert np.array_equal(labels, UCoDe(**FAST).fit(g).labels_)
    c = UCoDe(**FAST).fit_transform(g)
    assert c.shape == (5, 2) and c.min() >= 0 and c.max() <= 1


def test_overlap_outputs():
    est = UCoDe(**FAST, overlap=True).fit(bowtie())
    assert isinstance(est.covers_, Cover) and est.covers_.is_complete()
    assert est.threshold_ == pytest.approx(np.mean(np.exp(est.membership_)))
    assert est.predict_cover() == est.covers_


def test_kmeans_assignment_recovers_sbm():
    g = sbm_generate(SbmConfig(n=100, k_planted=4, seed=1))
    est = UCoDe(n_communities=4, epochs=300, assign="kmeans", random_state=1).fit(g)
    assert nmi(g.ground_truth, est.labels_) >= 0.8


def test_unfitted_and_bad_input():
    with pytest.raises(NotFittedError):
        UCoDe().predict()
    with pytest.raises(ValueError):
        UCoDe(**FAST).fit(np.ones((5, 2)))
    with pytest.raises(ValueError):
        UCoDe(**FAST, assign="spectral").fit(bowtie())
    est = UCoDe(**FAST).fit(bowtie())
    with pytest.raises(ValueError, match="features"):
        est.transform(np.ones((5, 3)), adjacency=bowtie().adjacency)


def test_transform_on_new_graph():
    est = UCoDe(**FAST).fit(bowtie())
    other = np.random.default_rng(0).normal(size=(4, 5))
    out = est.transform(other, adjacency=[(0, 1), (2, 3)])
    assert out.shape == (4, 2)


def test_edges_from_adjacency_rejects():
    with pytest.raises(ValueError, match="symmetric"):
        edges_from_adjacency(np.array([[0, 1], [0, 0]]), 2)
    with pytest.raises(ValueError, match="self-loops"):
        edges_from_adjacency(np.eye(2), 2)
    with pytest.raises(ValueError, match="unweighted"):
        edges_from_adjacency(np.array([[0, 2], [2, 0]]), 2)
    with pytest.raises(ValueError):
        edges_from_adjacency(np.array([[0.5, 1.0]]), 3)
    with pytest.raises(ValueError):
        edges_from_adjacency(np.ones((3, 3, 3)), 3)


def test_check_graph_rejects_mixed_input():
    with pytest.raises(ValueError):
        check_graph(bowtie(), adjacency=np.zeros((5, 5)))
    with pytest.raises(ValueError):
        check_graph(np.array([[np.nan]]), adjacency=np.zeros((1, 1)))
