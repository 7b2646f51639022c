"""Shared drivers for checks that appear in more than one test module."""

from contextlib import contextmanager

import numpy as np

from ucode.gcn import TRAINABLE, backward, forward, init_params
from ucode.graph import AttributedGraph
from ucode.loss import LossConfig, loss_and_grad, sample_permutation

from oracles import random_graph, rel_error


def pipeline_instance(seed):
    """Random small graph, network and loss settings for a gradient check."""
    rng = np.random.default_rng(seed)
    n = int(rng.integers(6, 13))
    l, h = (int(v) for v in rng.integers(2, 7, size=2))
    k = int(rng.integers(2, 5))
    edges = random_graph(rng, n, float(rng.uniform(0.25, 0.6))) or [(0, 1)]
    g = AttributedGraph.from_edges(n, edges, rng.normal(size=(n, l)))
    params = init_params(l, h, k, rng)
    params.gamma0 = rng.uniform(0.5, 1.5, size=h)
    params.beta0 = rng.normal(scale=0.3, size=h)
    params.gamma1 = rng.uniform(0.5, 1.5, size=k)
    params.beta1 = rng.normal(scale=0.3, size=k)
    cfg = LossConfig(delta=float(rng.choice([0.0, 0.85])),
                     qm_norm=str(rng.choice(["none", "standard_half", "paper_quarter"])))
    perm = sample_permutation(k, rng)
    slopes = rng.uniform(1 / 8, 1 / 3, size=(n, k))
    return g, params, cfg, perm, slopes


def pipeline_gradcheck(seed, h=1e-5):
    """Worst per-tensor relative error of the analytic parameter gradient.

    RReLU slopes and the permutation are frozen so the objective is a
    deterministic function of the parameters.
    """
    g, params, cfg, perm, slopes = pipeline_instance(seed)
    ahat = g.normalized_adjacency

    def objective(p):
        c, _ = forward(ahat, g.features, p, "train", slopes=slopes)
        return loss_and_grad(g, c, cfg, perm)[0]

    c, cache = forward(ahat, g.features, params, "train", slopes=slopes)
    grads = backward(cache, loss_and_grad(g, c, cfg, perm)[1])
    worst = 0.0
    for name in TRAINABLE:
        base = getattr(params, name)
        num = np.zeros_like(base)
        for idx in np.ndindex(base.shape):
            plus, minus = params.copy(), params.copy()
            getattr(plus, name)[idx] += h
            getattr(minus, name)[idx] -= h
            num[idx] = (objective(plus) - objective(minus)) / (2 * h)
        worst = max(worst, rel_error(grads[name], num))
    return worst


ACCEPTANCE_RESULTS = []


@contextmanager
def criterion(number, summary):
    """Record one acceptance criterion as PASS or FAIL for the run summary.

    The block may fill the yielded dict with measured values, which are
    appended to the summary line.
    """
    measured = {}

    def line():
        extra = ", ".join(f"{k}={v}" for k, v in measured.items())
        return f"{summary} ({extra})" if extra else summary

    try:
        yield measured
    except BaseException:
        ACCEPTANCE_RESULTS.append((number, False, line()))
        raise
    ACCEPTANCE_RESULTS.append((number, True, line()))
