"""scikit-learn compatible front end."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClusterMixin, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .assignment import hard_assign, kmeans_assign, overlap_assign, threshold_p1
from .trainer import TrainConfig, predict_membership, train
from .validation import check_graph


class UCoDe(ClusterMixin, TransformerMixin, BaseEstimator, auto_wrap_output_keys=None):
    """Community detection with a GCN trained on a contrastive modularity loss.

    Works for disjoint communities (``delta=0``) and overlapping ones
    (``delta`` around 0.85, ``overlap=True``). The estimator is
    transductive: ``fit`` learns on one graph and ``transform``/``predict``
    default to that graph, but may be applied to another graph with the same
    feature width.

    Parameters
    ----------
    n_communities : int, default=16
        Number of output communities ``k``.
    hidden : int, default=256
        Width of the hidden graph-convolution layer.
    epochs : int, default=1000
    lr : float, default=1e-3
        Adam learning rate.
    weight_decay : float, default=0.1
        Decoupled weight decay on the two weight matrices.
    delta : float, default=0.0
        Target for inter-community similarity; larger values tolerate overlap.
    amplify : bool, default=False
        Take the log of the row-normalized assignment before the modularity.
    perm_policy : {"resample_each_epoch", "fixed_derangement"}
    dropout : float, default=0.0
    qm_norm : {"paper_quarter", "standard_half", "none"}
        Scaling of the community-wise modularity matrix inside the loss.
    overlap : bool, default=False
        Also compute an overlapping cover (``covers_``) thresholded at the
        mean of ``exp(C)``.
    assign : {"argmax", "kmeans"}, default="argmax"
        How ``labels_`` are derived: row-wise argmax of the membership, or
        k-means on the network output.
    random_state : int, default=0

    Attributes
    ----------
    membership_ : ndarray of shape (n, k)
        Soft assignments of the training graph, clipped to ``[0, 1]``.
    labels_ : ndarray of shape (n,)
    covers_ : Cover
        Only when ``overlap=True``.
    params_ : ModelParams
    history_ : TrainHistory
    n_features_in_ : int
    """

    def __init__(self, n_communities=16, hidden=256, epochs=1000, lr=1e-3,
                 weight_decay=0.1, delta=0.0, amplify=False,
                 perm_policy="resample_each_epoch", dropout=0.0,
                 qm_norm="paper_quarter", overlap=False, assign="argmax",
                 random_state=0):
        self.n_communities = n_communities
        self.hidden = hidden
        self.epochs = epochs
        self.lr = lr
        self.weight_decay = weight_decay
        self.delta = delta
        self.amplify = amplify
        self.perm_policy = perm_policy
        self.dropout = dropout
        self.qm_norm = qm_norm
        self.overlap = overlap
        self.assign = assign
        self.random_state = random_state

    def _train_config(self) -> TrainConfig:
        return TrainConfig(
            epochs=self.epochs, lr=self.lr, hidden=self.hidden,
            k=self.n_communities, delta=self.delta,
            weight_decay=self.weight_decay, seed=int(self.random_state or 0),
            amplify=self.amplify, perm_policy=self.perm_policy,
            dropout=self.dropout, qm_norm=self.qm_norm)

    def fit(self, X, y=None, adjacency=None):
        """Train on a graph.

        Parameters
        ----------
        X : AttributedGraph or array-like of shape (n, l)
        y : ignored
        adjacency : sparse matrix, array or edge list, optional
            Required when ``X`` is a feature matrix.
        """
        if self.assign not in ("argmax", "kmeans"):
            raise ValueError(f"assign must be 'argmax' or 'kmeans', got {self.assign!r}")
        g = check_graph(X, adjacency)
        self.params_, self.history_ = train(g, self._train_config())
        self.graph_ = g
        self.n_features_in_ = g.n_features
        raw = predict_membership(g, self.params_, raw=True)
        self.membership_ = np.clip(raw, 0.0, 1.0)
        self.labels_ = self._labels(raw)
        if self.overlap:
            self.threshold_ = threshold_p1(self.membership_)
            self.covers_ = overlap_assign(self.membership_, self.threshold_)
        return self

    def _labels(self, raw):
        if self.assign == "kmeans":
            return kmeans_assign(raw, self.n_communities, seed=self.random_state).labels
        return hard_assign(np.clip(raw, 0.0, 1.0)).labels

    def _graph(self, X, adjacency):
        check_is_fitted(self, "params_")
        if X is None:
            return self.graph_
        g = check_graph(X, adjacency)
        if g.n_features != self.n_features_in_:
            raise ValueError(f"X has {g.n_features} features, the model was fit on {self.n_features_in_}")
        return g

    def transform(self, X=None, adjacency=None):
        """Soft membership matrix in ``[0, 1]``, shape ``(n, k)``."""
        return predict_membership(self._graph(X, adjacency), self.params_)

    def fit_transform(self, X, y=None, adjacency=None):
        return self.fit(X, y, adjacency=adjacency).membership_

    def fit_predict(self, X, y=None, adjacency=None):
        return self.fit(X, y, adjacency=adjacency).labels_

    def predict(self, X=None, adjacency=None):
        """Hard community label per node."""
        raw = predict_membership(self._graph(X, adjacency), self.params_, raw=True)
        return self._labels(raw)

    def predict_cover(self, X=None, adjacency=None, threshold=None):
        """Overlapping cover; ``threshold`` defaults to the mean of ``exp(C)``."""
        c = self.transform(X, adjacency)
        return overlap_assign(c, threshold_p1(c) if threshold is None else threshold)
