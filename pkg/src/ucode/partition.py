"""Hard partitions and overlapping covers of a node set."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np


@dataclass(frozen=True, eq=False)
class Partition:
    """One community label per node."""

    labels: np.ndarray

    def __post_init__(self):
        labels = np.asarray(self.labels)
        if labels.ndim != 1:
            raise ValueError(f"labels must be one-dimensional, got shape {labels.shape}")
        if labels.size and not np.issubdtype(labels.dtype, np.integer):
            if not np.all(labels == np.round(labels)):
                raise ValueError("labels must be integers")
        labels = labels.astype(np.int64)
        if labels.size and labels.min() < 0:
            raise ValueError("labels must be non-negative")
        labels.setflags(write=False)
        object.__setattr__(self, "labels", labels)

    @property
    def n(self) -> int:
        return len(self.labels)

    @property
    def n_communities(self) -> int:
        return len(np.unique(self.labels))

    def to_cover(self) -> "Cover":
        ids = np.unique(self.labels)
        return Cover([np.flatnonzero(self.labels == c) for c in ids], self.n)

    def __eq__(self, other):
        return isinstance(other, Partition) and np.array_equal(self.labels, other.labels)

    def __hash__(self):
        return hash(self.labels.tobytes())


@dataclass(frozen=True, eq=False)
class Cover:
    """A collection of possibly overlapping node sets over ``n`` nodes.

    Empty sets are dropped. Every node should belong to at least one set;
    :meth:`is_complete` reports whether that holds.
    """

    sets: tuple
    n: int

    def __init__(self, sets: Iterable[Iterable[int]], n: int):
        frozen = tuple(frozenset(int(v) for v in s) for s in sets)
        frozen = tuple(s for s in frozen if s)
        for s in frozen:
            if min(s) < 0 or max(s) >= n:
                raise ValueError(f"cover references a node outside [0, {n})")
        object.__setattr__(self, "sets", frozen)
        object.__setattr__(self, "n", int(n))

    def __len__(self):
        return len(self.sets)

    def __iter__(self):
        return iter(self.sets)

    def __eq__(self, other):
        return (isinstance(other, Cover) and self.n == other.n
                and sorted(map(sorted, self.sets)) == sorted(map(sorted, other.sets)))

    def __hash__(self):
        return hash((self.n, frozenset(self.sets)))

    def is_complete(self) -> bool:
        covered = set().union(*self.sets) if self.sets else set()
        return len(covered) == self.n

    def membership_matrix(self) -> np.ndarray:
        """Binary ``n x len(self)`` indicator matrix."""
        m = np.zeros((self.n, len(self.sets)))
        for j, s in enumerate(self.sets):
            m[sorted(s), j] = 1.0
        return m

    @classmethod
    def from_labels(cls, labels) -> "Cover":
        return Partition(np.asarray(labels)).to_cover()
