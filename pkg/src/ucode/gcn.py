"""Two-layer graph convolution network with a hand-written backward pass.

The network computes

    C = RReLU(BN1(A_hat @ SiLU(BN0(A_hat @ X @ W0)) @ W1))

where ``A_hat`` is the self-looped symmetric-normalized adjacency and BN is
batch normalization over the node axis.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

RRELU_LOWER = 1.0 / 8.0
RRELU_UPPER = 1.0 / 3.0
RRELU_EVAL_SLOPE = (RRELU_LOWER + RRELU_UPPER) / 2.0
BN_EPS = 1e-5
BN_MOMENTUM = 0.9

CHECKPOINT_FORMAT = "ucode-checkpoint"
CHECKPOINT_VERSION = 1

TRAINABLE = ("w0", "w1", "gamma0", "beta0", "gamma1", "beta1")
DECAYED = ("w0", "w1")


def sigmoid(x):
    return np.exp(-np.logaddexp(0.0, -x))


def silu(x):
    return x * sigmoid(x)


def silu_grad(x):
    s = sigmoid(x)
    return s * (1.0 + x * (1.0 - s))


def rrelu(x, mode="eval", rng=None, slopes=None):
    """Randomized leaky ReLU.

    In train mode each negative element gets its own slope drawn from
    ``U[1/8, 1/3]`` (or taken from ``slopes`` when given, which freezes the
    randomness). In eval mode the slope is the midpoint ``11/48``.

    Returns
    -------
    out : ndarray
    slopes : ndarray
        Per-element slope actually applied to negative inputs.
    """
    x = np.asarray(x, dtype=np.float64)
    if slopes is None:
        if mode == "train":
            if rng is None:
                raise ValueError("train-mode rrelu needs an rng or fixed slopes")
            slopes = rng.uniform(RRELU_LOWER, RRELU_UPPER, size=x.shape)
        else:
            slopes = np.full(x.shape, RRELU_EVAL_SLOPE)
    return np.where(x >= 0, x, slopes * x), slopes


@dataclass
class BatchNormCache:
    x_hat: np.ndarray
    inv_std: np.ndarray
    gamma: np.ndarray


def batch_norm(x, gamma, beta, running_mean, running_var, mode="train",
               momentum=BN_MOMENTUM, eps=BN_EPS):
    """Column-wise batch normalization.

    Returns ``(out, cache, new_running_mean, new_running_var)``. Train mode
    normalizes with batch statistics (population variance) and blends them
    into the running statistics; eval mode uses the running statistics.
    """
    x = np.asarray(x, dtype=np.float64)
    if mode == "train":
        if x.shape[0] < 2:
            raise ValueError("train-mode batch norm needs at least two rows")
        mean = x.mean(axis=0)
        var = x.var(axis=0)
        new_mean = momentum * running_mean + (1.0 - momentum) * mean
        new_var = momentum * running_var + (1.0 - momentum) * var
    else:
        mean, var = running_mean, running_var
        new_mean, new_var = running_mean, running_var
    inv_std = 1.0 / np.sqrt(var + eps)
    x_hat = (x - mean) * inv_std
    return gamma * x_hat + beta, BatchNormCache(x_hat, inv_std, gamma), new_mean, new_var


def batch_norm_backward(grad_out, cache: BatchNormCache):
    """Train-mode batch-norm backward: ``(dx, dgamma, dbeta)``."""
    n = grad_out.shape[0]
    dgamma = np.sum(grad_out * cache.x_hat, axis=0)
    dbeta = np.sum(grad_out, axis=0)
    dx_hat = grad_out * cache.gamma
    dx = cache.inv_std / n * (n * dx_hat - dx_hat.sum(axis=0)
                              - cache.x_hat * np.sum(dx_hat * cache.x_hat, axis=0))
    return dx, dgamma, dbeta


@dataclass
class ModelParams:
    w0: np.ndarray
    w1: np.ndarray
    gamma0: np.ndarray
    beta0: np.ndarray
    gamma1: np.ndarray
    beta1: np.ndarray
    running_mean0: np.ndarray
    running_var0: np.ndarray
    running_mean1: np.ndarray
    running_var1: np.ndarray
    seed: Optional[int] = None

    @property
    def shape(self):
        """``(l, h, k)``: input, hidden and output widths."""
        return self.w0.shape[0], self.w0.shape[1], self.w1.shape[1]

    def trainable(self) -> dict:
        return {name: getattr(self, name) for name in TRAINABLE}

    def copy(self) -> "ModelParams":
        return replace(self, **{k: np.array(v) for k, v in self.arrays().items()})

    def arrays(self) -> dict:
        return {k: v for k, v in vars(self).items() if isinstance(v, np.ndarray)}


def glorot_uniform(fan_in, fan_out, rng):
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


def init_params(l, h, k, rng, seed=None) -> ModelParams:
    return ModelParams(
        w0=glorot_uniform(l, h, rng),
        w1=glorot_uniform(h, k, rng),
        gamma0=np.ones(h), beta0=np.zeros(h),
        gamma1=np.ones(k), beta1=np.zeros(k),
        running_mean0=np.zeros(h), running_var0=np.ones(h),
        running_mean1=np.zeros(k), running_var1=np.ones(k),
        seed=seed,
    )


@dataclass
class ForwardCache:
    mode: str
    params: ModelParams
    ahat: object
    ax: np.ndarray
    bn0: BatchNormCache
    u0: np.ndarray
    h1: np.ndarray
    dropout_mask: Optional[np.ndarray]
    ah1: np.ndarray
    bn1: BatchNormCache
    u1: np.ndarray
    slopes: np.ndarray
    output: np.ndarray
    running: dict = field(default_factory=dict)


def forward(ahat, x, params: ModelParams, mode="eval", rng=None, slopes=None,
            dropout=0.0, ax=None):
    """Run the network.

    Parameters
    ----------
    ahat : sparse matrix, (n, n)
        Normalized adjacency with self loops.
    x : ndarray, (n, l)
    params : ModelParams
    mode : {"train", "eval"}
    rng : numpy Generator, optional
        Source of RReLU slopes and dropout masks in train mode.
    slopes : ndarray, (n, k), optional
        Fixed RReLU slopes; overrides sampling.
    dropout : float
        Drop probability on the hidden representation (train mode only).
    ax : ndarray, optional
        Precomputed ``ahat @ x``.

    Returns
    -------
    c : ndarray, (n, k)
        Raw network output (not clipped to ``[0, 1]``).
    cache : ForwardCache
        Intermediates for :func:`backward`; ``cache.running`` holds the
        updated batch-norm running statistics in train mode.
    """
    if mode not in ("train", "eval"):
        raise ValueError(f"mode must be 'train' or 'eval', got {mode!r}")
    l, h, k = params.shape
    if ax is None:
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != l:
            raise ValueError(f"features have shape {np.shape(x)}, weights expect {l} columns")
        ax = np.asarray(ahat @ x)
    if params.w1.shape[0] != h:
        raise ValueError(f"w0 is {params.w0.shape} but w1 is {params.w1.shape}")
    if ax.shape[0] != ahat.shape[0]:
        raise ValueError("feature rows do not match the adjacency")

    z0 = ax @ params.w0
    u0, bn0, rm0, rv0 = batch_norm(z0, params.gamma0, params.beta0,
                                   params.running_mean0, params.running_var0, mode)
    h1 = silu(u0)
    mask = None
    if mode == "train" and dropout > 0.0:
        mask = (rng.random(h1.shape) >= dropout) / (1.0 - dropout)
        h1 = h1 * mask
    ah1 = np.asarray(ahat @ h1)
    z1 = ah1 @ params.w1
    u1, bn1, rm1, rv1 = batch_norm(z1, params.gamma1, params.beta1,
                                   params.running_mean1, params.running_var1, mode)
    c, slopes = rrelu(u1, mode, rng, slopes)
    running = dict(running_mean0=rm0, running_var0=rv0,
                   running_mean1=rm1, running_var1=rv1)
    cache = ForwardCache(mode, params, ahat, ax, bn0, u0, h1, mask, ah1, bn1,
                         u1, slopes, c, running)
    return c, cache


def backward(cache: ForwardCache, grad_c) -> dict:
    """Gradients of a scalar objective with respect to the trainable params.

    ``grad_c`` is the objective's gradient with respect to the raw output
    returned by the matching :func:`forward` call.
    """
    if cache.mode != "train":
        raise ValueError("backward requires a cache produced in train mode")
    grad_c = np.asarray(grad_c, dtype=np.float64)
    if grad_c.shape != cache.output.shape:
        raise ValueError(f"grad_c has shape {grad_c.shape}, output was {cache.output.shape}")
    p = cache.params
    du1 = np.where(cache.u1 >= 0, grad_c, cache.slopes * grad_c)
    dz1, dgamma1, dbeta1 = batch_norm_backward(du1, cache.bn1)
    dw1 = cache.ah1.T @ dz1
    dh1 = np.asarray(cache.ahat.T @ (dz1 @ p.w1.T))
    if cache.dropout_mask is not None:
        dh1 = dh1 * cache.dropout_mask
    du0 = dh1 * silu_grad(cache.u0)
    dz0, dgamma0, dbeta0 = batch_norm_backward(du0, cache.bn0)
    dw0 = cache.ax.T @ dz0
    return dict(w0=dw0, w1=dw1, gamma0=dgamma0, beta0=dbeta0,
                gamma1=dgamma1, beta1=dbeta1)


@dataclass
class AdamState:
    t: int
    m: dict
    v: dict

    @classmethod
    def zeros_like(cls, params: ModelParams) -> "AdamState":
        tr = params.trainable()
        return cls(0, {k: np.zeros_like(v) for k, v in tr.items()},
                   {k: np.zeros_like(v) for k, v in tr.items()})


def adam_step(params: ModelParams, grads: dict, state: AdamState, lr=1e-3,
              weight_decay=0.0, beta1=0.9, beta2=0.999, eps=1e-8):
    """One Adam update with decoupled weight decay on the weight matrices.

    Batch-norm scale and shift are not decayed. Returns new
    ``(params, state)``; the inputs are left untouched.
    """
    t = state.t + 1
    new_m, new_v, updates = {}, {}, {}
    for name in TRAINABLE:
        g = grads[name]
        m = beta1 * state.m[name] + (1.0 - beta1) * g
        v = beta2 * state.v[name] + (1.0 - beta2) * g * g
        m_hat = m / (1.0 - beta1 ** t)
        v_hat = v / (1.0 - beta2 ** t)
        w = getattr(params, name)
        step = lr * m_hat / (np.sqrt(v_hat) + eps)
        if name in DECAYED and weight_decay:
            step = step + lr * weight_decay * w
        updates[name] = w - step
        new_m[name], new_v[name] = m, v
    return replace(params, **updates), AdamState(t, new_m, new_v)


def save_checkpoint(params: ModelParams, path, extra=None) -> None:
    """Write parameters as JSON; float ``repr`` makes the round trip exact."""
    payload = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "shape": list(params.shape),
        "seed": params.seed,
        "tensors": {k: {"shape": list(v.shape), "data": v.ravel().tolist()}
                    for k, v in sorted(params.arrays().items())},
    }
    if extra:
        payload["extra"] = extra
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, sort_keys=True)
        fh.write("\n")


def load_checkpoint(path) -> ModelParams:
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    if payload.get("format") != CHECKPOINT_FORMAT:
        raise ValueError(f"{path} is not a ucode checkpoint")
    if payload.get("version") != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version {payload.get('version')}")
    tensors = {k: np.asarray(t["data"], dtype=np.float64).reshape(t["shape"])
               for k, t in payload["tensors"].items()}
    return ModelParams(seed=payload.get("seed"), **tensors)
