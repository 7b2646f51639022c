"""Community-wise modularity, scalar modularity and conductance.

Everything goes through the factored form ``C^T A C - (C^T d)(d^T C) / 2m``
so the dense ``n x n`` modularity matrix is never built.
"""

from __future__ import annotations

import logging

import numpy as np

from .graph import AttributedGraph
from .partition import Partition

logger = logging.getLogger(__name__)

NORMS = ("standard_half", "paper_quarter")


class EmptyGraphError(ValueError):
    """The degree-preserving null model is undefined on a graph with no edges."""


def _as_assignment(g: AttributedGraph, c) -> np.ndarray:
    c = np.asarray(c, dtype=np.float64)
    if c.ndim == 1:
        c = c[:, None]
    if c.ndim != 2 or c.shape[0] != g.n:
        raise ValueError(f"assignment has shape {c.shape}, expected ({g.n}, k)")
    return c


def community_modularity_matrix(g: AttributedGraph, c) -> np.ndarray:
    """Return the ``k x k`` matrix ``C^T B C`` with ``B = A - d d^T / 2m``.

    Costs ``O(m k + n k^2)``. ``c`` is not required to lie in ``[0, 1]``,
    since the training loss consumes raw network outputs.
    """
    c = _as_assignment(g, c)
    m = g.n_edges
    if m == 0:
        raise EmptyGraphError("modularity is undefined for a graph with no edges")
    ac = g.adjacency @ c
    dc = g.degrees @ c
    return c.T @ ac - np.outer(dc, dc) / (2.0 * m)


def modularity_score(g: AttributedGraph, c, norm: str = "standard_half") -> float:
    """Scalar modularity ``trace(C^T B C)`` divided by ``2m`` or ``4m``.

    ``standard_half`` is the usual Newman normalization and the one reported
    by :func:`ucode.trainer.evaluate`; ``paper_quarter`` halves it.
    Hard partitions may be passed as a label vector or :class:`Partition`.
    """
    if norm not in NORMS:
        raise ValueError(f"norm must be one of {NORMS}, got {norm!r}")
    if isinstance(c, Partition) or (np.ndim(c) == 1 and len(c) == g.n
                                    and np.issubdtype(np.asarray(c).dtype, np.integer)):
        c = one_hot(c)
    tr = float(np.trace(community_modularity_matrix(g, c)))
    return tr / ((2.0 if norm == "standard_half" else 4.0) * g.n_edges)


def one_hot(labels, k=None) -> np.ndarray:
    labels = labels.labels if isinstance(labels, Partition) else np.asarray(labels, dtype=np.int64)
    k = int(labels.max()) + 1 if k is None else k
    out = np.zeros((len(labels), max(k, 2)))
    out[np.arange(len(labels)), labels] = 1.0
    return out


def conductance(g: AttributedGraph, p):
    """Per-community conductance ``cut / (2 * internal + cut)`` and its mean.

    Parameters
    ----------
    g : AttributedGraph
    p : Partition or array of int labels

    Returns
    -------
    per_community : dict
        ``{label: phi}`` for every non-empty community.
    mean : float
        Unweighted mean over the non-empty communities.
    """
    labels = p.labels if isinstance(p, Partition) else np.asarray(p, dtype=np.int64)
    if len(labels) != g.n:
        raise ValueError(f"partition has {len(labels)} nodes, graph has {g.n}")
    e = g.edges
    lu, lv = labels[e[:, 0]], labels[e[:, 1]]
    same = lu == lv
    present = np.unique(labels)
    size = int(present.max()) + 1 if len(present) else 0
    internal = np.bincount(lu[same], minlength=size)
    cut = np.bincount(lu[~same], minlength=size) + np.bincount(lv[~same], minlength=size)
    per = {}
    for s in present:
        vol = 2 * internal[s] + cut[s]
        if vol == 0:
            logger.info("community %d has zero volume; conductance set to 0", s)
            per[int(s)] = 0.0
        else:
            per[int(s)] = cut[s] / vol
    mean = float(np.mean(list(per.values()))) if per else 0.0
    return per, mean
