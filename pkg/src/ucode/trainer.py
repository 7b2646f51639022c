"""Full-batch training loop and evaluation report."""

from __future__ import annotations

import json
import logging
import time
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .assignment import check_membership, hard_assign, overlap_assign, threshold_p1
from .gcn import AdamState, adam_step, backward, forward, init_params
from .graph import AttributedGraph
from .loss import LossConfig, loss_and_grad, sample_permutation
from .metrics import nmi, onmi, pairwise_f1, recall_best_match
from .modularity import EmptyGraphError, conductance, modularity_score
from .partition import Cover, Partition

logger = logging.getLogger(__name__)


class TrainingError(RuntimeError):
    """Training produced a non-finite loss."""

    def __init__(self, epoch, loss):
        super().__init__(f"non-finite loss {loss!r} at epoch {epoch}")
        self.epoch = epoch
        self.loss = loss


@dataclass
class TrainConfig:
    epochs: int = 1000
    lr: float = 1e-3
    hidden: int = 256
    k: int = 16
    delta: float = 0.0
    weight_decay: float = 1e-1
    seed: int = 0
    amplify: bool = False
    perm_policy: str = "resample_each_epoch"
    dropout: float = 0.0
    qm_norm: str = "paper_quarter"

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be at least 1")
        if self.lr <= 0:
            raise ValueError("lr must be positive")
        if self.k < 2:
            raise ValueError("k must be at least 2")
        if self.hidden < 1:
            raise ValueError("hidden must be positive")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must lie in [0, 1)")
        self.loss_config()

    @classmethod
    def overlapping(cls, **overrides) -> "TrainConfig":
        """Defaults for overlapping communities: narrower hidden layer,
        lighter weight decay and a relaxed inter-community target."""
        base = dict(hidden=128, weight_decay=1e-2, delta=0.85)
        base.update(overrides)
        return cls(**base)

    def loss_config(self) -> LossConfig:
        return LossConfig(delta=self.delta, amplify=self.amplify,
                          perm_policy=self.perm_policy, qm_norm=self.qm_norm)


@dataclass
class EpochRecord:
    epoch: int
    loss: float
    trace_qm: float
    modularity: float
    seconds: float


@dataclass
class TrainHistory:
    records: list = field(default_factory=list)

    def __len__(self):
        return len(self.records)

    @property
    def losses(self) -> np.ndarray:
        return np.array([r.loss for r in self.records])

    @property
    def modularity(self) -> np.ndarray:
        return np.array([r.modularity for r in self.records])

    def to_csv(self, path) -> None:
        """Write ``epoch,loss,trace_qm,modularity``; timings are left out so
        the file is reproducible byte for byte."""
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("epoch,loss,trace_qm,modularity\n")
            for r in self.records:
                fh.write(f"{r.epoch},{r.loss!r},{r.trace_qm!r},{r.modularity!r}\n")

    def timings_to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("epoch,seconds\n")
            for r in self.records:
                fh.write(f"{r.epoch},{r.seconds:.6f}\n")


def _streams(seed):
    init, rrelu, perm = np.random.SeedSequence(seed).spawn(3)
    return (np.random.default_rng(init), np.random.default_rng(rrelu),
            np.random.default_rng(perm))


def train(g: AttributedGraph, cfg: TrainConfig, callback=None):
    """Train the network on ``g``.

    Each epoch runs a train-mode forward pass, evaluates the loss with a
    derangement (resampled every epoch unless ``perm_policy`` is
    ``"fixed_derangement"``), back-propagates and takes one Adam step.

    Parameters
    ----------
    g : AttributedGraph
    cfg : TrainConfig
    callback : callable, optional
        Called as ``callback(epoch, record, params)`` after every epoch.

    Returns
    -------
    params : ModelParams
    history : TrainHistory

    Raises
    ------
    TrainingError
        When the loss becomes non-finite.
    """
    if g.n_edges == 0:
        raise EmptyGraphError("cannot train on a graph without edges")
    init_rng, act_rng, perm_rng = _streams(cfg.seed)
    params = init_params(g.n_features, cfg.hidden, cfg.k, init_rng, seed=cfg.seed)
    state = AdamState.zeros_like(params)
    loss_cfg = cfg.loss_config()
    ahat = g.normalized_adjacency
    ax = np.asarray(ahat @ g.features)
    perm = sample_permutation(cfg.k, perm_rng)
    history = TrainHistory()
    start = time.perf_counter()
    for epoch in range(1, cfg.epochs + 1):
        if loss_cfg.perm_policy == "resample_each_epoch" and epoch > 1:
            perm = sample_permutation(cfg.k, perm_rng)
        c, cache = forward(ahat, None, params, "train", act_rng,
                           dropout=cfg.dropout, ax=ax)
        loss, grad_c, qm = loss_and_grad(g, c, loss_cfg, perm)
        if not np.isfinite(loss):
            raise TrainingError(epoch, loss)
        grads = backward(cache, grad_c)
        params, state = adam_step(params, grads, state, cfg.lr, cfg.weight_decay)
        params.running_mean0 = cache.running["running_mean0"]
        params.running_var0 = cache.running["running_var0"]
        params.running_mean1 = cache.running["running_mean1"]
        params.running_var1 = cache.running["running_var1"]
        record = EpochRecord(epoch, loss, float(np.trace(qm)),
                             modularity_score(g, hard_assign(c).labels),
                             time.perf_counter() - start)
        history.records.append(record)
        if callback is not None:
            callback(epoch, record, params)
    return params, history


def predict_membership(g: AttributedGraph, params, raw=False) -> np.ndarray:
    """Eval-mode network output, clipped into ``[0, 1]`` unless ``raw``."""
    c, _ = forward(g.normalized_adjacency, g.features, params, "eval")
    return c if raw else check_membership(c, clip=True)


@dataclass
class MetricsReport:
    """Quality measures, in percent unless built with ``scale=1``."""

    mode: str
    values: dict
    scale: float = 100.0

    def to_dict(self) -> dict:
        return {"mode": self.mode, "scale": self.scale, **self.values}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def to_table(self) -> str:
        width = max(len(k) for k in self.values) if self.values else 0
        lines = [f"{k:<{width}}  {v:10.4f}" for k, v in self.values.items()]
        return "\n".join(lines)

    def __getitem__(self, key):
        return self.values[key]


def evaluate(g: Optional[AttributedGraph], c, truth, mode="hard", scale=100.0) -> MetricsReport:
    """Compare a soft assignment against ground truth.

    ``mode="hard"`` scores the argmax partition with NMI and pairwise F1;
    ``mode="overlap"`` thresholds at the mean of ``exp(C)`` and reports
    overlapping NMI and best-match recall. When ``g`` is given, conductance
    and modularity (both normalizations) of the argmax partition are added.
    """
    c = check_membership(c, clip=True)
    labels = hard_assign(c)
    cover = overlap_assign(c, threshold_p1(c)) if mode == "overlap" else None
    return evaluate_assignment(g, truth, labels, cover, mode, scale)


def evaluate_assignment(g, truth, labels=None, cover=None, mode="hard", scale=100.0) -> MetricsReport:
    """Score a hard partition and/or a cover against ground truth.

    Hard mode needs ``labels`` and a :class:`Partition` truth. Overlap mode
    needs ``cover`` and accepts either truth type. Intrinsic measures use
    ``labels`` when available; for a cover alone only modularity of its
    membership matrix is reported.
    """
    if mode not in ("hard", "overlap"):
        raise ValueError(f"mode must be 'hard' or 'overlap', got {mode!r}")
    pred = labels if mode == "hard" else cover
    if pred is None:
        raise ValueError(f"{mode} mode needs a {'partition' if mode == 'hard' else 'cover'}")
    if truth.n != pred.n:
        raise ValueError(f"truth covers {truth.n} nodes, prediction covers {pred.n}")
    values = {}
    if mode == "hard":
        if not isinstance(truth, Partition):
            raise ValueError("hard mode needs a partition as ground truth")
        values["nmi"] = nmi(truth, labels)
        values["f1"] = pairwise_f1(truth, labels)
    else:
        values["onmi"] = onmi(truth, cover)
        values["recall"] = recall_best_match(truth, cover)
    if g is not None and g.n_edges:
        if g.n != pred.n:
            raise ValueError(f"graph has {g.n} nodes, prediction covers {pred.n}")
        if labels is not None:
            values["conductance"] = conductance(g, labels)[1]
            member = labels.labels
        else:
            member = cover.membership_matrix()
        values["modularity"] = modularity_score(g, member, "standard_half")
        values["modularity_quarter"] = modularity_score(g, member, "paper_quarter")
    return MetricsReport(mode, {k: scale * v for k, v in values.items()}, scale)


def config_dict(cfg: TrainConfig) -> dict:
    return asdict(cfg)
