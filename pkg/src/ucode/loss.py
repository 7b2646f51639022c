"""Contrastive community-modularity loss and its analytic gradient.

The loss scores the ``k x k`` community-wise modularity matrix ``Q``:

    L = -1/(2k) * sum_i [ y_i log s(Q_ii) + (1 - y_{k+i}) log(1 - s(Q_{p(i), i})) ]

with ``s`` the sigmoid, ``y`` the target vector and ``p`` a derangement of
the communities, so that every community is pushed away from another one.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import AttributedGraph
from .modularity import community_modularity_matrix

PERM_POLICIES = ("resample_each_epoch", "fixed_derangement")
QM_NORMS = ("none", "standard_half", "paper_quarter")


@dataclass(frozen=True)
class LossConfig:
    """Loss settings.

    Attributes
    ----------
    delta : float
        Target for the permuted (inter-community) entries, in ``[0, 1)``.
        0 for disjoint communities, 0.85 for overlapping ones.
    amplify : bool
        Feed ``log(row_normalize(C))`` into the modularity instead of ``C``.
    perm_policy : str
        ``"resample_each_epoch"`` or ``"fixed_derangement"``.
    epsilon : float
        Floor for probabilities inside logarithms.
    qm_norm : str
        Divide ``C^T B C`` by nothing (``"none"``), by ``2m``
        (``"standard_half"``) or by ``4m`` (``"paper_quarter"``) before the
        sigmoid. Unscaled entries grow with the edge count and saturate the
        sigmoid on all but toy graphs, so training uses ``"paper_quarter"``.
    """

    delta: float = 0.0
    amplify: bool = False
    perm_policy: str = "resample_each_epoch"
    epsilon: float = 1e-12
    qm_norm: str = "none"

    def __post_init__(self):
        if not 0.0 <= self.delta < 1.0:
            raise ValueError(f"delta must lie in [0, 1), got {self.delta}")
        if not 0.0 < self.epsilon <= 1e-6:
            raise ValueError(f"epsilon must lie in (0, 1e-6], got {self.epsilon}")
        if self.perm_policy not in PERM_POLICIES:
            raise ValueError(f"perm_policy must be one of {PERM_POLICIES}")
        if self.qm_norm not in QM_NORMS:
            raise ValueError(f"qm_norm must be one of {QM_NORMS}")

    def qm_factor(self, n_edges: int) -> float:
        return {"none": 1.0, "standard_half": 1.0 / (2 * n_edges),
                "paper_quarter": 1.0 / (4 * n_edges)}[self.qm_norm]


def target_vector(k: int, delta: float) -> np.ndarray:
    if k < 2:
        raise ValueError(f"need at least two communities, got k={k}")
    if not 0.0 <= delta < 1.0:
        raise ValueError(f"delta must lie in [0, 1), got {delta}")
    return np.concatenate([np.ones(k), np.full(k, float(delta))])


def sample_permutation(k: int, rng: np.random.Generator) -> np.ndarray:
    """Uniformly random derangement of ``range(k)`` by rejection sampling.

    About ``1/e`` of uniform permutations are derangements, so the expected
    number of draws is below 3 for every ``k``.
    """
    if k < 2:
        raise ValueError(f"a derangement needs k >= 2, got {k}")
    idx = np.arange(k)
    while True:
        p = rng.permutation(k)
        if not np.any(p == idx):
            return p


def fixed_derangement(k: int) -> np.ndarray:
    """The cyclic shift ``i -> i + 1 (mod k)``; the swap when ``k == 2``."""
    if k < 2:
        raise ValueError(f"a derangement needs k >= 2, got {k}")
    return (np.arange(k) + 1) % k


def _check_perm(perm, k):
    perm = np.asarray(perm, dtype=np.int64)
    if perm.shape != (k,) or not np.array_equal(np.sort(perm), np.arange(k)):
        raise ValueError(f"perm must be a permutation of range({k}), got {perm.tolist()}")
    return perm


def _row_normalize(c: np.ndarray):
    pos = np.maximum(c, 0.0)
    s = pos.sum(axis=-1, keepdims=True)
    safe = np.where(s > 0, s, 1.0)
    k = c.shape[-1]
    p = np.where(s > 0, pos / safe, 1.0 / k)
    return pos, s, p


def amplify(c, epsilon: float = 1e-12) -> np.ndarray:
    """Row-normalize ``c`` then take ``log(max(., epsilon))`` elementwise.

    Negative entries are treated as 0; an all-zero row becomes uniform.
    Works on a single ``n x k`` matrix or a stack of them.
    """
    c = np.asarray(c, dtype=np.float64)
    _, _, p = _row_normalize(c)
    return np.log(np.maximum(p, epsilon))


def amplify_backward(c, grad_out, epsilon: float = 1e-12) -> np.ndarray:
    """Vector-Jacobian product of :func:`amplify` at ``c``."""
    c = np.asarray(c, dtype=np.float64)
    pos, s, p = _row_normalize(c)
    g_p = np.where(p > epsilon, grad_out / np.maximum(p, epsilon), 0.0)
    safe = np.where(s > 0, s, 1.0)
    g_pos = (g_p - np.sum(g_p * p, axis=-1, keepdims=True)) / safe
    return np.where((s > 0) & (c > 0), g_pos, 0.0)


def _log_sigmoid(x):
    return -np.logaddexp(0.0, -x)


def _loss_terms(qm, y, perm, epsilon):
    k = qm.shape[-1]
    cols = np.arange(k)
    diag = qm[..., cols, cols]
    cross = qm[..., perm, cols]
    floor = np.log(epsilon)
    # log s(x) and log(1 - s(x)) = log s(-x), floored at log(epsilon)
    log_pos = np.maximum(_log_sigmoid(diag), floor)
    log_neg = np.maximum(_log_sigmoid(-cross), floor)
    return diag, cross, log_pos, log_neg, floor


def ucode_loss(qm, y, perm, epsilon: float = 1e-12):
    """Loss value for one community-wise modularity matrix.

    ``qm`` may also be a stack ``(..., k, k)``; the result then has the
    leading shape.
    """
    qm = np.asarray(qm, dtype=np.float64)
    k = qm.shape[-1]
    y = np.asarray(y, dtype=np.float64)
    if qm.shape[-2] != k or y.shape != (2 * k,):
        raise ValueError(f"dimension mismatch: qm {qm.shape}, y {y.shape}")
    perm = _check_perm(perm, k)
    _, _, log_pos, log_neg, _ = _loss_terms(qm, y, perm, epsilon)
    total = np.sum(y[:k] * log_pos + (1.0 - y[k:]) * log_neg, axis=-1)
    return -total / (2 * k)


def ucode_loss_grad_q(qm, y, perm, epsilon: float = 1e-12) -> np.ndarray:
    """Gradient of :func:`ucode_loss` with respect to ``qm``.

    Only diagonal and permuted-diagonal entries are nonzero.
    """
    qm = np.asarray(qm, dtype=np.float64)
    k = qm.shape[0]
    perm = _check_perm(perm, k)
    y = np.asarray(y, dtype=np.float64)
    diag, cross, log_pos, log_neg, floor = _loss_terms(qm, y, perm, epsilon)
    cols = np.arange(k)
    grad = np.zeros_like(qm)
    # d/dx log s(x) = s(-x); d/dx log s(-x) = -s(x)
    d_pos = np.where(log_pos > floor, np.exp(_log_sigmoid(-diag)), 0.0)
    d_neg = np.where(log_neg > floor, -np.exp(_log_sigmoid(cross)), 0.0)
    grad[cols, cols] += -y[:k] * d_pos / (2 * k)
    np.add.at(grad, (perm, cols), -(1.0 - y[k:]) * d_neg / (2 * k))
    return grad


def loss_and_grad(g: AttributedGraph, c, cfg: LossConfig, perm):
    """Loss and its gradient with respect to the assignment matrix ``c``.

    Returns
    -------
    loss : float
    grad : ndarray, same shape as ``c``
    qm : ndarray
        The (scaled) community-wise modularity matrix the loss saw.
    """
    c = np.asarray(c, dtype=np.float64)
    k = c.shape[1]
    y = target_vector(k, cfg.delta)
    z = amplify(c, cfg.epsilon) if cfg.amplify else c
    f = cfg.qm_factor(g.n_edges)
    qm = f * community_modularity_matrix(g, z)
    loss = float(ucode_loss(qm, y, perm, cfg.epsilon))
    gq = f * ucode_loss_grad_q(qm, y, perm, cfg.epsilon)
    sym = gq + gq.T
    dz = g.degrees @ z
    grad_z = g.adjacency @ (z @ sym) - np.outer(g.degrees, dz @ sym) / (2.0 * g.n_edges)
    grad = amplify_backward(c, grad_z, cfg.epsilon) if cfg.amplify else grad_z
    return loss, grad, qm


def ucode_loss_grad(g: AttributedGraph, c, cfg: LossConfig, perm) -> np.ndarray:
    return loss_and_grad(g, c, cfg, perm)[1]


def assignment_loss(g: AttributedGraph, c, cfg: LossConfig, perm) -> float:
    """Loss of an assignment matrix, applying amplification when configured."""
    c = np.asarray(c, dtype=np.float64)
    z = amplify(c, cfg.epsilon) if cfg.amplify else c
    qm = cfg.qm_factor(g.n_edges) * community_modularity_matrix(g, z)
    return float(ucode_loss(qm, target_vector(c.shape[1], cfg.delta), perm, cfg.epsilon))
