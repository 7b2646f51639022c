"""Input checks shared by the estimator and the command line."""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp
from sklearn.utils.validation import check_array

from .graph import AttributedGraph


def edges_from_adjacency(adjacency, n: int) -> np.ndarray:
    """Extract an undirected edge list from an adjacency matrix or edge array.

    Accepts a square dense or sparse 0/1 symmetric matrix without self
    loops, or an ``(m, 2)`` integer array of node pairs. An ``(n, n)``
    array is always read as a matrix, even when ``n == 2``.
    """
    if sp.issparse(adjacency):
        a = sp.coo_matrix(adjacency)
        if a.shape != (n, n):
            raise ValueError(f"adjacency has shape {a.shape}, expected ({n}, {n})")
        a.sum_duplicates()
        a.eliminate_zeros()
        if np.any(a.row == a.col):
            raise ValueError("adjacency has self-loops")
        if not np.all(a.data == 1):
            raise ValueError("adjacency must be unweighted (entries 0 or 1)")
        if (abs(a - a.T) > 0).nnz:
            raise ValueError("adjacency must be symmetric")
        upper = a.row < a.col
        return np.column_stack([a.row[upper], a.col[upper]])
    arr = np.asarray(adjacency)
    if arr.ndim == 2 and arr.shape == (n, n):
        return edges_from_adjacency(sp.coo_matrix(arr), n)
    if arr.ndim == 2 and arr.shape[1] == 2:
        edges = arr.astype(np.int64)
        if not np.array_equal(edges, arr):
            raise ValueError("edge list must contain integer node indices")
        return np.unique(np.sort(edges, axis=1), axis=0)
    raise ValueError(f"cannot interpret adjacency of shape {arr.shape} for {n} nodes")


def check_graph(X, adjacency=None) -> AttributedGraph:
    """Coerce estimator input into a validated :class:`AttributedGraph`.

    ``X`` is either an :class:`AttributedGraph` (``adjacency`` must then be
    omitted) or an ``(n, l)`` feature matrix accompanied by ``adjacency``.
    """
    if isinstance(X, AttributedGraph):
        if adjacency is not None:
            raise ValueError("pass either an AttributedGraph or features plus adjacency, not both")
        return X
    if adjacency is None:
        raise ValueError("feature input requires an adjacency matrix or edge list")
    x = check_array(X, dtype=np.float64, ensure_min_samples=1)
    edges = edges_from_adjacency(adjacency, x.shape[0])
    return AttributedGraph.from_edges(x.shape[0], edges, x)
