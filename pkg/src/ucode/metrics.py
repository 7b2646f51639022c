"""Comparison of detected communities against ground truth."""

from __future__ import annotations

import numpy as np
from sklearn.metrics import normalized_mutual_info_score

from .partition import Cover, Partition


def _labels(p) -> np.ndarray:
    return p.labels if isinstance(p, Partition) else np.asarray(p, dtype=np.int64)


def _cover(c) -> Cover:
    if isinstance(c, Cover):
        return c
    if isinstance(c, Partition):
        return c.to_cover()
    arr = np.asarray(c, dtype=object)
    if arr.ndim == 1 and all(isinstance(v, (int, np.integer)) for v in arr):
        return Partition(arr.astype(np.int64)).to_cover()
    sets = [frozenset(s) for s in c]
    n = 1 + max((max(s) for s in sets if s), default=-1)
    return Cover(sets, n)


def _same_length(a, b):
    if len(a) != len(b):
        raise ValueError(f"partitions cover {len(a)} and {len(b)} nodes")


def nmi(a, b) -> float:
    """Normalized mutual information, geometric-mean normalization."""
    a, b = _labels(a), _labels(b)
    _same_length(a, b)
    return float(normalized_mutual_info_score(a, b, average_method="geometric"))


def _h(p):
    p = np.asarray(p, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(p > 0, -p * np.log2(np.where(p > 0, p, 1.0)), 0.0)


def _conditional_entropy(x: np.ndarray, y: np.ndarray, n: int) -> np.ndarray:
    """``H(X_k | Y)`` for every column of the binary membership matrix ``x``.

    A pair ``(X_k, Y_l)`` only counts when the agreeing cells carry more
    information than the disagreeing ones; with no such pair the
    conditional entropy is ``H(X_k)`` itself.
    """
    sx, sy = x.sum(axis=0), y.sum(axis=0)
    p11 = (x.T @ y) / n
    p10 = sx[:, None] / n - p11
    p01 = sy[None, :] / n - p11
    p00 = 1.0 - p11 - p10 - p01
    h11, h10, h01, h00 = _h(p11), _h(p10), _h(p01), _h(np.maximum(p00, 0.0))
    hy = _h(sy / n) + _h(1.0 - sy / n)
    cond = h11 + h10 + h01 + h00 - hy[None, :]
    valid = h11 + h00 > h01 + h10
    hx = _h(sx / n) + _h(1.0 - sx / n)
    best = np.where(valid, cond, np.inf).min(axis=1) if y.shape[1] else np.full(len(sx), np.inf)
    return np.where(np.isfinite(best), best, hx), hx


def onmi(a, b) -> float:
    """Overlapping NMI between two covers (McDaid et al., max normalization).

    Partitions are accepted and treated as covers.
    """
    a, b = _cover(a), _cover(b)
    if len(a) == 0 or len(b) == 0:
        raise ValueError("covers must contain at least one non-empty set")
    if a.n != b.n:
        raise ValueError(f"covers span {a.n} and {b.n} nodes")
    n = a.n
    x, y = a.membership_matrix(), b.membership_matrix()
    hx_y, hx = _conditional_entropy(x, y, n)
    hy_x, hy = _conditional_entropy(y, x, n)
    h_x, h_y = hx.sum(), hy.sum()
    denom = max(h_x, h_y)
    if denom <= 0.0:
        # every set on both sides spans all nodes
        return 1.0
    mutual = 0.5 * (h_x - hx_y.sum() + h_y - hy_x.sum())
    return float(np.clip(mutual / denom, 0.0, 1.0))


def pairwise_f1(truth, pred) -> float:
    """F1 over all node pairs; a positive pair shares a ground-truth community.

    Returns 0 when no pair is correctly co-clustered, except that two
    partitions without any co-clustered pair at all agree perfectly (1).
    """
    t, p = _labels(truth), _labels(pred)
    _same_length(t, p)
    t_ids, t_idx = np.unique(t, return_inverse=True)
    p_ids, p_idx = np.unique(p, return_inverse=True)
    table = np.zeros((len(t_ids), len(p_ids)), dtype=np.int64)
    np.add.at(table, (t_idx, p_idx), 1)

    def pairs(x):
        return float(np.sum(x * (x - 1) // 2))

    tp = pairs(table)
    true_pairs = pairs(table.sum(axis=1))
    pred_pairs = pairs(table.sum(axis=0))
    if true_pairs == 0 and pred_pairs == 0:
        return 1.0
    if tp == 0:
        return 0.0
    precision, recall = tp / pred_pairs, tp / true_pairs
    return 2 * precision * recall / (precision + recall)


def recall_best_match(truth, pred) -> float:
    """Mean over ground-truth sets of the best recall achieved by a predicted set."""
    truth, pred = _cover(truth), _cover(pred)
    if len(truth) == 0 or len(pred) == 0:
        raise ValueError("covers must contain at least one non-empty set")
    scores = [max(len(t & s) for s in pred.sets) / len(t) for t in truth.sets]
    return float(np.mean(scores))
