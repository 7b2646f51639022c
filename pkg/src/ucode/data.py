"""Dataset files, builtin toy graphs and a planted-partition generator.

File formats (UTF-8, LF or CRLF):

``edges.tsv``
    ``u<TAB>v`` per line; ``#`` starts a comment. Reversed and repeated
    pairs collapse to one undirected edge.
``features.csv``
    One comma-separated row of reals per node, in node order.
``labels.txt``
    One integer community id per line, in node order.
``cover.tsv``
    ``community<TAB>node`` pairs, one membership per line.
"""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .graph import AttributedGraph
from .partition import Cover, Partition

logger = logging.getLogger(__name__)


class DataFormatError(ValueError):
    """A dataset file could not be parsed."""


@dataclass
class DatasetBundle:
    """Paths making up one dataset. Only ``edges`` is required."""

    edges: os.PathLike
    features: Optional[os.PathLike] = None
    labels: Optional[os.PathLike] = None
    cover: Optional[os.PathLike] = None

    @classmethod
    def from_dir(cls, root) -> "DatasetBundle":
        root = Path(root)

        def opt(name):
            return root / name if (root / name).exists() else None

        return cls(root / "edges.tsv", opt("features.csv"), opt("labels.txt"), opt("cover.tsv"))


def _lines(path):
    with open(path, encoding="utf-8", newline=None) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if line:
                yield lineno, line


def read_edge_list(path) -> list:
    pairs = []
    for lineno, line in _lines(path):
        parts = line.split("\t") if "\t" in line else line.split()
        if len(parts) != 2:
            raise DataFormatError(f"{path}:{lineno}: expected 'u<TAB>v', got {line!r}")
        pairs.append((parts[0].strip(), parts[1].strip()))
    return pairs


def read_features(path) -> np.ndarray:
    rows = []
    for lineno, line in _lines(path):
        try:
            rows.append([float(v) for v in line.split(",")])
        except ValueError:
            raise DataFormatError(f"{path}:{lineno}: non-numeric feature value") from None
        if len(rows[-1]) != len(rows[0]):
            raise DataFormatError(
                f"{path}:{lineno}: {len(rows[-1])} columns, expected {len(rows[0])}")
    if not rows:
        raise DataFormatError(f"{path}: no feature rows")
    return np.asarray(rows, dtype=np.float64)


def read_labels(path) -> Partition:
    out = []
    for lineno, line in _lines(path):
        try:
            out.append(int(line))
        except ValueError:
            raise DataFormatError(f"{path}:{lineno}: expected an integer label, got {line!r}") from None
    return Partition(np.asarray(out, dtype=np.int64))


def read_cover_pairs(path) -> list:
    pairs = []
    for lineno, line in _lines(path):
        parts = line.split("\t") if "\t" in line else line.split()
        if len(parts) != 2:
            raise DataFormatError(f"{path}:{lineno}: expected 'community<TAB>node', got {line!r}")
        pairs.append((parts[0].strip(), parts[1].strip()))
    return pairs


def read_cover(path, n=None, index=None) -> Cover:
    """Read a cover file; ``index`` maps node tokens to dense indices."""
    groups = {}
    for comm, node in read_cover_pairs(path):
        if index is not None:
            if node not in index:
                raise DataFormatError(f"{path}: unknown node {node!r}")
            v = index[node]
        else:
            try:
                v = int(node)
            except ValueError:
                raise DataFormatError(f"{path}: node id {node!r} is not an integer") from None
        groups.setdefault(comm, set()).add(v)
    if n is None:
        n = 1 + max((max(s) for s in groups.values()), default=-1)
    return Cover([groups[c] for c in sorted(groups, key=_natural_key)], n)


def _natural_key(token):
    try:
        return (0, int(token), "")
    except ValueError:
        return (1, 0, token)


def _index_nodes(tokens, n_rows):
    """Map node tokens to dense indices.

    Integer tokens that all fit below the feature row count are used as-is;
    anything else is sorted (integers numerically, before strings) and
    numbered in that order.
    """
    uniq = sorted(set(tokens), key=_natural_key)
    ints = [t for t in uniq if _natural_key(t)[0] == 0]
    if len(ints) == len(uniq):
        values = [int(t) for t in uniq]
        if values and min(values) >= 0:
            n = max(max(values) + 1, n_rows or 0)
            if n_rows is None or n == n_rows:
                labels = None
                return {t: int(t) for t in uniq}, n, labels
    index = {t: i for i, t in enumerate(uniq)}
    return index, len(uniq), tuple(uniq)


def load_bundle(b: DatasetBundle) -> AttributedGraph:
    """Parse and validate a dataset.

    Ground truth comes from the cover file when present, otherwise from the
    labels file. Missing features default to one-hot node identity.
    """
    pairs = read_edge_list(b.edges)
    feats = read_features(b.features) if b.features else None
    n_rows = None if feats is None else feats.shape[0]
    tokens = [t for p in pairs for t in p]
    index, n, node_labels = _index_nodes(tokens, n_rows)
    if feats is not None and feats.shape[0] != n:
        raise DataFormatError(
            f"{b.features}: {feats.shape[0]} feature rows but the edge list names {n} nodes")
    seen, edges = set(), []
    for lineno, (u, v) in enumerate(pairs, start=1):
        iu, iv = index[u], index[v]
        if iu == iv:
            raise DataFormatError(f"{b.edges}: self-loop on node {u!r} (edge {lineno})")
        key = (min(iu, iv), max(iu, iv))
        if key not in seen:
            seen.add(key)
            edges.append(key)
    truth = None
    if b.cover:
        truth = read_cover(b.cover, n, index if node_labels is not None else None)
    elif b.labels:
        truth = read_labels(b.labels)
        if truth.n != n:
            raise DataFormatError(f"{b.labels}: {truth.n} labels for {n} nodes")
    return AttributedGraph.from_edges(n, edges, feats, truth, node_labels)


def _fmt(x) -> str:
    return repr(float(x))


def write_edges(path, g: AttributedGraph) -> None:
    names = g.node_labels or range(g.n)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for u, v in g.edges:
            fh.write(f"{names[u]}\t{names[v]}\n")


def write_features(path, x) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for row in np.atleast_2d(x):
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def write_labels(path, p) -> None:
    labels = p.labels if isinstance(p, Partition) else np.asarray(p)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for v in labels:
            fh.write(f"{int(v)}\n")


def write_cover(path, cover: Cover, node_labels=None) -> None:
    names = node_labels or range(cover.n)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for j, s in enumerate(cover.sets):
            for v in sorted(s):
                fh.write(f"{j}\t{names[v]}\n")


def save_bundle(g: AttributedGraph, root) -> DatasetBundle:
    """Write ``g`` in the text formats; inverse of :func:`load_bundle`."""
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    b = DatasetBundle(root / "edges.tsv", root / "features.csv")
    write_edges(b.edges, g)
    write_features(b.features, g.features)
    if isinstance(g.ground_truth, Partition):
        b.labels = root / "labels.txt"
        write_labels(b.labels, g.ground_truth)
    elif isinstance(g.ground_truth, Cover):
        b.cover = root / "cover.tsv"
        write_cover(b.cover, g.ground_truth, g.node_labels)
    return b


BOWTIE_EDGES = [(0, 1), (0, 2), (1, 2), (2, 3), (2, 4), (3, 4)]


def bowtie() -> AttributedGraph:
    """Two triangles sharing node 2, with one-hot features.

    Ground truth is the cover ``{0, 1, 2}``, ``{2, 3, 4}``.
    """
    return AttributedGraph.from_edges(5, BOWTIE_EDGES, np.eye(5),
                                      Cover([{0, 1, 2}, {2, 3, 4}], 5))


def triangle() -> AttributedGraph:
    return AttributedGraph.from_edges(3, [(0, 1), (0, 2), (1, 2)], np.eye(3),
                                      Partition(np.zeros(3, dtype=np.int64)))


BUILTINS = {"bowtie": bowtie, "triangle": triangle}


def builtin(name: str) -> AttributedGraph:
    try:
        return BUILTINS[name]()
    except KeyError:
        raise ValueError(f"unknown builtin graph {name!r}; choose from {sorted(BUILTINS)}") from None


@dataclass(frozen=True)
class SbmConfig:
    n: int = 100
    k_planted: int = 4
    p_in: float = 0.3
    p_out: float = 0.02
    overlap_fraction: float = 0.0
    feature_dim: int = 16
    feature_separation: float = 2.0
    seed: int = 0

    def __post_init__(self):
        for name in ("p_in", "p_out"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")
        if not 0.0 <= self.overlap_fraction < 1.0:
            raise ValueError(f"overlap_fraction must lie in [0, 1), got {self.overlap_fraction}")
        if self.k_planted < 1 or self.n < self.k_planted:
            raise ValueError(f"need 1 <= k_planted <= n, got k={self.k_planted}, n={self.n}")
        if self.feature_dim < 1:
            raise ValueError("feature_dim must be positive")


def sbm_generate(cfg: SbmConfig) -> AttributedGraph:
    """Sample an attributed planted-partition graph.

    Nodes are split into ``k_planted`` contiguous blocks of near-equal size.
    A random ``overlap_fraction`` of nodes also joins one other block. Pairs
    sharing a block are linked with probability ``p_in``, other pairs with
    ``p_out``. Each block has a Gaussian feature mean at distance
    ``feature_separation`` from the origin along random orthogonal-ish
    directions; a node's features are the average of its blocks' means plus
    unit-variance noise.

    The ground truth is a :class:`Partition` without overlap and a
    :class:`Cover` otherwise.
    """
    if cfg.p_in <= cfg.p_out:
        logger.warning("p_in=%g <= p_out=%g: planted structure is not recoverable",
                       cfg.p_in, cfg.p_out)
    rng = np.random.default_rng(cfg.seed)
    n, k = cfg.n, cfg.k_planted
    primary = np.repeat(np.arange(k), [len(b) for b in np.array_split(np.arange(n), k)])
    member = np.zeros((n, k), dtype=bool)
    member[np.arange(n), primary] = True
    n_overlap = int(round(cfg.overlap_fraction * n))
    if n_overlap and k > 1:
        chosen = rng.choice(n, size=n_overlap, replace=False)
        extra = (primary[chosen] + rng.integers(1, k, size=n_overlap)) % k
        member[chosen, extra] = True

    iu, iv = np.triu_indices(n, k=1)
    share = (member[iu] & member[iv]).any(axis=1)
    prob = np.where(share, cfg.p_in, cfg.p_out)
    keep = rng.random(len(iu)) < prob
    edges = np.column_stack([iu[keep], iv[keep]])

    directions = rng.standard_normal((k, cfg.feature_dim))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    means = cfg.feature_separation * directions
    weights = member / member.sum(axis=1, keepdims=True)
    features = weights @ means + rng.standard_normal((n, cfg.feature_dim))

    if n_overlap:
        truth = Cover([np.flatnonzero(member[:, j]) for j in range(k)], n)
    else:
        truth = Partition(primary)
    return AttributedGraph.from_edges(n, edges, features, truth)


def expected_edge_count(cfg: SbmConfig) -> float:
    """Expected number of edges for a graph without overlap."""
    sizes = np.array([len(b) for b in np.array_split(np.arange(cfg.n), cfg.k_planted)])
    within = float(np.sum(sizes * (sizes - 1) / 2))
    total = cfg.n * (cfg.n - 1) / 2
    return within * cfg.p_in + (total - within) * cfg.p_out
