"""Brute-force minimization of the loss over a grid of membership values.

Only feasible for tiny graphs: the search space has ``len(levels) ** (n*k)``
points. It serves as ground truth for the loss and for checking which
community structure the loss prefers.
"""

from __future__ import annotations

import csv
import io
import itertools
from dataclasses import dataclass, field

import numpy as np

from .graph import AttributedGraph
from .loss import LossConfig, amplify, target_vector, ucode_loss

MAX_NODES = 8
DEFAULT_BUDGET = 10**8
CHUNK = 1 << 15

# loss values quoted for the bowtie's disjoint and overlapping clusterings
REPORTED_BOWTIE_LOSSES = {"disjoint": 0.124, "overlapping": 0.094}
REPORTED_TOLERANCE = 0.005


class OracleBudgetError(ValueError):
    """The requested search is larger than the configured budget."""


@dataclass(frozen=True)
class GridSpec:
    levels: tuple = (0.0, 0.5, 1.0)
    k: int = 2
    max_nodes: int = MAX_NODES
    budget: int = DEFAULT_BUDGET

    def __post_init__(self):
        levels = tuple(sorted(float(v) for v in self.levels))
        object.__setattr__(self, "levels", levels)
        if len(levels) < 2 or levels[0] != 0.0 or levels[-1] != 1.0:
            raise ValueError(f"levels must include 0 and 1, got {levels}")
        if len(set(levels)) != len(levels):
            raise ValueError("levels must be distinct")
        if self.k < 2:
            raise ValueError("k must be at least 2")
        if not 1 <= self.max_nodes <= MAX_NODES:
            raise ValueError(f"max_nodes must lie in [1, {MAX_NODES}]")

    def size(self, n: int) -> int:
        return len(self.levels) ** (n * self.k)


@dataclass
class RankedAssignment:
    loss: float
    c: np.ndarray

    @property
    def overlapping(self) -> bool:
        return bool(np.any((self.c > 0).sum(axis=1) > 1))

    def encode(self) -> str:
        return "|".join(",".join(f"{v:g}" for v in col) for col in self.c.T)


@dataclass
class OracleResult:
    best: np.ndarray
    loss: float
    table: list = field(default_factory=list)
    evaluated: int = 0

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["rank", "loss", "overlapping", "assignment"])
        for rank, row in enumerate(self.table, start=1):
            w.writerow([rank, repr(row.loss), int(row.overlapping), row.encode()])
        return buf.getvalue()


def _batch_qm(adj, deg, m, c):
    ac = np.einsum("ij,bjk->bik", adj, c)
    ctac = np.einsum("bik,bil->bkl", c, ac)
    dc = np.einsum("i,bik->bk", deg, c)
    return ctac - dc[:, :, None] * dc[:, None, :] / (2.0 * m)


def batch_loss(g: AttributedGraph, cs: np.ndarray, cfg: LossConfig, perm) -> np.ndarray:
    """Loss for a stack of assignments ``cs`` of shape ``(b, n, k)``."""
    cs = np.asarray(cs, dtype=np.float64)
    adj = g.adjacency.toarray()
    z = amplify(cs, cfg.epsilon) if cfg.amplify else cs
    qm = cfg.qm_factor(g.n_edges) * _batch_qm(adj, g.degrees.astype(np.float64), g.n_edges, z)
    return ucode_loss(qm, target_vector(cs.shape[2], cfg.delta), perm, cfg.epsilon)


def exhaustive_min(g: AttributedGraph, grid: GridSpec, cfg: LossConfig, perm, top=20) -> OracleResult:
    """Evaluate the loss on every grid assignment and return the minimizer.

    Assignments with an all-zero column are skipped. Assignments that only
    differ by a reordering of columns are reported once in the ranked
    table, represented by the lowest-loss member.

    Raises
    ------
    OracleBudgetError
        When ``n`` exceeds ``grid.max_nodes`` or the search space exceeds
        ``grid.budget``.
    """
    n, k = g.n, grid.k
    if n > grid.max_nodes:
        raise OracleBudgetError(f"graph has {n} nodes; exhaustive search is capped at {grid.max_nodes}")
    total = grid.size(n)
    if total > grid.budget:
        raise OracleBudgetError(f"search space of {total} assignments exceeds the budget of {grid.budget}")
    levels = np.asarray(grid.levels)
    n_levels = len(levels)
    row_codes = np.array(list(itertools.product(range(n_levels), repeat=k)))
    n_rows = len(row_codes)
    keep = max(top, 1) * int(np.prod(range(1, k + 1)))
    best_loss = np.empty(0)
    best_idx = np.empty(0, dtype=np.int64)
    powers = n_rows ** np.arange(n - 1, -1, -1, dtype=np.int64)
    evaluated = 0
    for start in range(0, total, CHUNK):
        idx = np.arange(start, min(start + CHUNK, total), dtype=np.int64)
        digits = (idx[:, None] // powers[None, :]) % n_rows
        codes = row_codes[digits]
        ok = codes.max(axis=1).min(axis=1) > 0
        if not ok.any():
            continue
        idx, codes = idx[ok], codes[ok]
        losses = batch_loss(g, levels[codes], cfg, perm)
        evaluated += len(idx)
        best_loss = np.concatenate([best_loss, losses])
        best_idx = np.concatenate([best_idx, idx])
        if len(best_loss) > keep:
            sel = np.lexsort((best_idx, best_loss))[:keep]
            best_loss, best_idx = best_loss[sel], best_idx[sel]
    if evaluated == 0:
        raise ValueError("no admissible assignment on this grid")
    order = np.lexsort((best_idx, best_loss))
    table, seen = [], set()
    for i in order:
        digits = (best_idx[i] // powers) % n_rows
        codes = row_codes[digits]
        key = tuple(sorted(tuple(col) for col in codes.T))
        if key in seen:
            continue
        seen.add(key)
        table.append(RankedAssignment(float(best_loss[i]), levels[codes]))
        if len(table) >= top:
            break
    return OracleResult(table[0].c, table[0].loss, table, evaluated)


def bowtie_references() -> dict:
    """The disjoint and the overlapping two-community clustering of the bowtie."""
    disjoint = np.array([[1, 0], [1, 0], [0, 1], [0, 1], [0, 1]], dtype=np.float64)
    overlapping = np.array([[1, 0], [1, 0], [0.5, 0.5], [0, 1], [0, 1]], dtype=np.float64)
    return {"disjoint": disjoint, "overlapping": overlapping}


def config_sweep(g: AttributedGraph, grid: GridSpec, perm, references=None,
                 deltas=(0.0, 0.85), amplify_options=(False, True),
                 qm_norms=("none",)) -> list:
    """Loss of the reference assignments and the grid argmin per configuration.

    Returns one dict per configuration. With both ``"disjoint"`` and
    ``"overlapping"`` references, the row also says whether the overlapping
    one wins and whether the pair matches the reported bowtie losses.
    """
    references = references or {}
    rows = []
    for qm_norm, delta, amp in itertools.product(qm_norms, deltas, amplify_options):
        cfg = LossConfig(delta=delta, amplify=amp, qm_norm=qm_norm)
        res = exhaustive_min(g, grid, cfg, perm, top=1)
        row = {"qm_norm": qm_norm, "delta": delta, "amplify": int(amp)}
        for name, c in references.items():
            row[f"loss_{name}"] = float(batch_loss(g, c[None], cfg, perm)[0])
        if {"disjoint", "overlapping"} <= set(references):
            row["overlap_wins"] = int(row["loss_overlapping"] < row["loss_disjoint"])
            row["matches_reported"] = int(all(
                abs(row[f"loss_{name}"] - v) <= REPORTED_TOLERANCE
                for name, v in REPORTED_BOWTIE_LOSSES.items()))
        best = RankedAssignment(res.loss, res.best)
        row.update(argmin_loss=res.loss, argmin=best.encode(), argmin_overlapping=int(best.overlapping))
        rows.append(row)
    return rows


def sweep_to_csv(rows) -> str:
    buf = io.StringIO()
    if rows:
        w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        for row in rows:
            w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})
    return buf.getvalue()
