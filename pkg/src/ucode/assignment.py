"""Turning soft membership matrices into partitions and covers."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.cluster import kmeans_plusplus

from .partition import Cover, Partition


def check_membership(c, clip=False) -> np.ndarray:
    """Validate a soft assignment matrix ``C`` of shape ``(n, k)``.

    With ``clip=True`` entries are clipped into ``[0, 1]`` instead of
    rejected, which is how raw network outputs become assignments.
    """
    c = np.asarray(c, dtype=np.float64)
    if c.ndim != 2 or c.shape[0] < 1 or c.shape[1] < 1:
        raise ValueError(f"membership must be a non-empty 2-D matrix, got shape {c.shape}")
    if not np.all(np.isfinite(c)):
        raise ValueError("membership contains non-finite values")
    if clip:
        return np.clip(c, 0.0, 1.0)
    if c.min() < 0.0 or c.max() > 1.0:
        raise ValueError("membership entries must lie in [0, 1]")
    return c


def hard_assign(c) -> Partition:
    """Row-wise argmax; ties go to the lowest column index."""
    c = np.asarray(c, dtype=np.float64)
    return Partition(np.argmax(c, axis=1))


def threshold_p1(c) -> float:
    """Mean of ``exp(c_ij)`` over all entries."""
    return float(np.mean(np.exp(np.asarray(c, dtype=np.float64))))


def overlap_assign(c, p=None) -> Cover:
    """Node ``i`` joins community ``j`` when ``exp(c_ij) >= p``.

    ``p`` defaults to :func:`threshold_p1`. Nodes that clear the threshold
    nowhere fall back to their argmax community, so the cover is complete.
    Communities that end up empty are dropped.
    """
    c = np.asarray(c, dtype=np.float64)
    if p is None:
        p = threshold_p1(c)
    if p <= 0:
        raise ValueError(f"threshold must be positive, got {p}")
    member = np.exp(c) >= p
    orphans = ~member.any(axis=1)
    member[orphans, np.argmax(c[orphans], axis=1)] = True
    return Cover([np.flatnonzero(member[:, j]) for j in range(c.shape[1])], c.shape[0])


@dataclass
class KMeansResult:
    labels: np.ndarray
    centers: np.ndarray
    inertia_history: list
    n_iter: int

    @property
    def inertia(self) -> float:
        return self.inertia_history[-1]


def _assign(h, centers):
    d2 = ((h[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
    labels = np.argmin(d2, axis=1)
    return labels, d2[np.arange(len(h)), labels]


def kmeans(h, k, seed=None, max_iter=300, tol=1e-8) -> KMeansResult:
    """k-means++ seeding followed by Lloyd iterations.

    Stops when no centroid moves more than ``tol`` or after ``max_iter``
    iterations. An empty cluster is re-seeded at the point farthest from
    its current centroid.
    """
    h = np.asarray(h, dtype=np.float64)
    if h.ndim != 2:
        raise ValueError(f"representations must be 2-D, got shape {h.shape}")
    n = h.shape[0]
    if n < k:
        raise ValueError(f"cannot form {k} clusters from {n} points")
    rng = np.random.default_rng(seed)
    centers, _ = kmeans_plusplus(h, k, random_state=int(rng.integers(2**31 - 1)))
    centers = centers.astype(np.float64)
    labels, dist = _assign(h, centers)
    history = [float(dist.sum())]
    n_iter = 0
    for n_iter in range(1, max_iter + 1):
        new_centers = centers.copy()
        counts = np.bincount(labels, minlength=k)
        for j in range(k):
            if counts[j]:
                new_centers[j] = h[labels == j].mean(axis=0)
            else:
                far = int(np.argmax(dist))
                new_centers[j] = h[far]
                dist[far] = 0.0
        shift = np.max(np.linalg.norm(new_centers - centers, axis=1))
        centers = new_centers
        labels, dist = _assign(h, centers)
        history.append(float(dist.sum()))
        if shift < tol:
            break
    return KMeansResult(labels, centers, history, n_iter)


def kmeans_assign(h, k, seed=None) -> Partition:
    return Partition(kmeans(h, k, seed).labels)
