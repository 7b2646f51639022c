"""Immutable attributed graphs and the matrices derived from them."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional, Union

import numpy as np
import scipy.sparse as sp

from .partition import Cover, Partition


class GraphValidationError(ValueError):
    """Raised when an :class:`AttributedGraph` violates one of its invariants."""


@dataclass(frozen=True, eq=False)
class AttributedGraph:
    """Undirected, unweighted graph whose nodes carry real feature vectors.

    Parameters
    ----------
    n : int
        Number of nodes. Nodes are the dense indices ``0..n-1``.
    edges : ndarray of shape (m, 2)
        Unordered node pairs. Stored canonically with ``u < v`` and sorted.
    features : ndarray of shape (n, l)
        Node attributes, float64.
    ground_truth : Partition or Cover, optional
        Known community structure, if any.
    node_labels : tuple, optional
        Original label of every node when the graph was loaded from a file
        using arbitrary identifiers.
    """

    n: int
    edges: np.ndarray
    features: np.ndarray
    ground_truth: Optional[Union[Partition, Cover]] = None
    node_labels: Optional[tuple] = field(default=None, repr=False)

    @classmethod
    def from_edges(cls, n, edges, features=None, ground_truth=None,
                   node_labels=None, check=True) -> "AttributedGraph":
        """Build a graph, canonicalizing edge orientation and order.

        ``features=None`` gives one-hot identity features. With
        ``check=True`` the result is validated and duplicate edges raise;
        callers that want deduplication should do it before.
        """
        edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        if features is None:
            features = np.eye(n)
        features = np.array(features, dtype=np.float64)
        if features.ndim == 1:
            features = features[:, None]
        labels = None if node_labels is None else tuple(node_labels)
        if check:
            # validate before canonicalizing so reported indices match the input
            validate(cls(int(n), edges, features, ground_truth, labels))
        edges = np.sort(edges, axis=1)
        if len(edges):
            edges = edges[np.lexsort((edges[:, 1], edges[:, 0]))]
        edges.setflags(write=False)
        features.setflags(write=False)
        return cls(int(n), edges, features, ground_truth, labels)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    @cached_property
    def degrees(self) -> np.ndarray:
        return degrees(self)

    @cached_property
    def adjacency(self) -> sp.csr_matrix:
        return adjacency(self)

    @cached_property
    def normalized_adjacency(self) -> sp.csr_matrix:
        return normalized_adjacency(self)

    def with_ground_truth(self, truth) -> "AttributedGraph":
        return AttributedGraph(self.n, self.edges, self.features, truth,
                               self.node_labels)


def validate(g: AttributedGraph) -> None:
    """Check every graph invariant, raising on the first violation.

    Raises
    ------
    GraphValidationError
        On an out-of-range endpoint, a self-loop, a duplicate edge, or a
        feature matrix whose row count differs from ``n``.
    """
    if g.n < 1:
        raise GraphValidationError(f"graph must have at least one node, got n={g.n}")
    edges = np.asarray(g.edges)
    if edges.ndim != 2 or edges.shape[1] != 2:
        raise GraphValidationError(f"edges must have shape (m, 2), got {edges.shape}")
    if len(edges):
        out = (edges < 0) | (edges >= g.n)
        if out.any():
            idx = int(np.flatnonzero(out.any(axis=1))[0])
            u, v = edges[idx]
            raise GraphValidationError(
                f"edge {idx} ({u}, {v}) has an endpoint outside [0, {g.n})")
        loops = np.flatnonzero(edges[:, 0] == edges[:, 1])
        if len(loops):
            idx = int(loops[0])
            raise GraphValidationError(
                f"edge {idx} is a self-loop on node {edges[idx, 0]}")
    if len(edges):
        lo = np.minimum(edges[:, 0], edges[:, 1])
        hi = np.maximum(edges[:, 0], edges[:, 1])
        keys = lo * g.n + hi
        _, first, inverse = np.unique(keys, return_index=True, return_inverse=True)
        repeated = np.flatnonzero(first[inverse] != np.arange(len(keys)))
        if len(repeated):
            idx = int(repeated[0])
            raise GraphValidationError(
                f"edge {idx} ({edges[idx, 0]}, {edges[idx, 1]}) duplicates "
                f"edge {int(first[inverse[idx]])}")
    feats = np.asarray(g.features)
    if feats.ndim != 2 or feats.shape[0] != g.n:
        raise GraphValidationError(
            f"features have {feats.shape[0] if feats.ndim else 0} rows, expected n={g.n}")
    if feats.shape[1] < 1:
        raise GraphValidationError("features must have at least one column")
    if not np.all(np.isfinite(feats)):
        row = int(np.argwhere(~np.isfinite(feats))[0, 0])
        raise GraphValidationError(f"non-finite feature value in row {row}")
    truth = g.ground_truth
    if truth is not None and truth.n != g.n:
        raise GraphValidationError(
            f"ground truth covers {truth.n} nodes, expected n={g.n}")


def degrees(g: AttributedGraph) -> np.ndarray:
    d = np.bincount(np.asarray(g.edges).ravel(), minlength=g.n)
    d.setflags(write=False)
    return d


def adjacency(g: AttributedGraph) -> sp.csr_matrix:
    """Symmetric 0/1 adjacency in CSR form, with ``2 * n_edges`` nonzeros."""
    e = np.asarray(g.edges)
    rows = np.concatenate([e[:, 0], e[:, 1]])
    cols = np.concatenate([e[:, 1], e[:, 0]])
    data = np.ones(len(rows), dtype=np.float64)
    a = sp.csr_matrix((data, (rows, cols)), shape=(g.n, g.n))
    a.sort_indices()
    return a


def normalized_adjacency(g: AttributedGraph) -> sp.csr_matrix:
    """``D^-1/2 (A + I) D^-1/2`` where ``D`` is the degree matrix of ``A + I``."""
    a_tilde = adjacency(g) + sp.identity(g.n, format="csr")
    inv_sqrt = 1.0 / np.sqrt(np.asarray(degrees(g), dtype=np.float64) + 1.0)
    scale = sp.diags(inv_sqrt)
    out = (scale @ a_tilde @ scale).tocsr()
    out.sort_indices()
    return out

