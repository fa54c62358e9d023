"""Shared test oracles: finite differences, grid search, rank statistics."""

from __future__ import annotations

import numpy as np

from causaldistill import nn


def finite_difference_gradients(net, X, y, h=1e-5, sample_weight=None):
    """Central finite differences of the loss over every parameter."""
    dW = [np.zeros_like(w) for w in net.weights]
    dA = [np.zeros_like(a) for a in net.intercepts]
    for params, grads in ((net.weights, dW), (net.intercepts, dA)):
        for p, g in zip(params, grads):
            it = np.nditer(p, flags=["multi_index"])
            for _ in it:
                i = it.multi_index
                orig = p[i]
                p[i] = orig + h
                lp, _ = nn.loss_and_grad(net, X, y, sample_weight=sample_weight)
                p[i] = orig - h
                lm, _ = nn.loss_and_grad(net, X, y, sample_weight=sample_weight)
                p[i] = orig
                g[i] = (lp - lm) / (2 * h)
    return dW, dA


def max_relative_gradient_error(net, X, y, h=1e-5, sample_weight=None) -> float:
    _, (dW, dA) = nn.loss_and_grad(net, X, y, sample_weight=sample_weight)
    fW, fA = finite_difference_gradients(net, X, y, h=h, sample_weight=sample_weight)
    worst = 0.0
    for analytic, numeric in ((dW, fW), (dA, fA)):
        for a, f in zip(analytic, numeric):
            denom = np.maximum(np.maximum(np.abs(a), np.abs(f)), 1e-6)
            worst = max(worst, float((np.abs(a - f) / denom).max()))
    return worst


def random_net_and_batch(head: nn.Head, seed: int, input_dim=3, hidden=(5, 4), n=8):
    """Small random net plus a matching batch for gradient checks."""
    rng = np.random.default_rng(seed)
    net = nn.GroupedNet.initialize(input_dim, list(hidden), head, seed=seed)
    # move off the zero-intercept init so gradients are generic
    for a in net.intercepts:
        a += rng.normal(0, 0.3, size=a.shape)
    X = rng.normal(size=(n, input_dim))
    if head.kind == "softmax":
        y = rng.integers(0, head.size, size=n)
    elif head.kind == "sigmoid":
        y = rng.integers(0, 2, size=n).astype(float)
    else:
        y = rng.normal(size=n)
    return net, X, y


def grid_search_prox(v: np.ndarray, t: float, rounds=4, width=201) -> np.ndarray:
    """2-D refined grid search minimizing 0.5*||u - v||^2 + t*||u||."""
    assert len(v) == 2
    center = np.zeros(2)
    radius = float(np.linalg.norm(v)) + t + 1.0
    best = None
    for _ in range(rounds):
        g0 = np.linspace(center[0] - radius, center[0] + radius, width)
        g1 = np.linspace(center[1] - radius, center[1] + radius, width)
        U0, U1 = np.meshgrid(g0, g1, indexing="ij")
        obj = 0.5 * ((U0 - v[0]) ** 2 + (U1 - v[1]) ** 2) + t * np.sqrt(U0**2 + U1**2)
        k = np.unravel_index(np.argmin(obj), obj.shape)
        best = np.array([U0[k], U1[k]])
        center = best
        radius = 2.5 * (g0[1] - g0[0])
    return best


def rank_auc(y_true, scores) -> float:
    """Mann-Whitney AUC from ranks (average over ties)."""
    y_true = np.asarray(y_true)
    scores = np.asarray(scores, dtype=np.float64)
    order = np.argsort(scores, kind="mergesort")
    ranks = np.empty(len(scores))
    sorted_scores = scores[order]
    i = 0
    r = 1
    while i < len(scores):
        j = i
        while j + 1 < len(scores) and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (r + r + (j - i))
        r += j - i + 1
        i = j + 1
    n_pos = int((y_true == 1).sum())
    n_neg = len(y_true) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("need both classes for AUC")
    return float((ranks[y_true == 1].sum() - n_pos * (n_pos + 1) / 2) / (n_pos * n_neg))


def partial_corr(x, y, z) -> float:
    """Correlation of x and y after regressing out z (with intercept)."""
    z = np.column_stack([np.ones(len(z)), z])
    rx = x - z @ np.linalg.lstsq(z, x, rcond=None)[0]
    ry = y - z @ np.linalg.lstsq(z, y, rcond=None)[0]
    return float(np.corrcoef(rx, ry)[0, 1])
