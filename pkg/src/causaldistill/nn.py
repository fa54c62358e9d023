"""Deterministic feedforward networks with exact gradients and group-sparse training.

Every model in the package is an instance of :class:`GroupedNet`: a small
tanh MLP whose first-layer weight columns are partitioned into one group per
input feature. Training is proximal gradient descent; the proximal step is
the group soft-threshold, which produces exact (not merely tiny) zeros, so a
feature can be removed outright by its penalty weight.

Heads: ``linear`` (squared loss), ``sigmoid`` (binary cross-entropy),
``softmax`` (categorical cross-entropy) and ``mdn`` (negative log-likelihood
of a Gaussian mixture whose parameters the network emits).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, asdict
from pathlib import Path

import numpy as np

from .errors import InputError, TrainingDivergedError

LOG_2PI = math.log(2.0 * math.pi)

HEAD_KINDS = ("linear", "sigmoid", "softmax", "mdn")

#: loss that each head is trained with; any other pairing is rejected
LOSS_FOR_HEAD = {
    "linear": "squared",
    "sigmoid": "binary_cross_entropy",
    "softmax": "cross_entropy",
    "mdn": "mdn_nll",
}

MODEL_FORMAT_VERSION = 1


@dataclass(frozen=True)
class Head:
    """Output head of a network.

    ``size`` is the class count for ``softmax`` and the mixture component
    count for ``mdn``; it is ignored (forced to 1) for scalar heads.
    ``sigma_min`` is the floor added to mixture standard deviations.
    """

    kind: str
    size: int = 1
    sigma_min: float = 1e-3

    def __post_init__(self):
        if self.kind not in HEAD_KINDS:
            raise InputError(f"unknown head kind {self.kind!r}")
        if self.kind in ("linear", "sigmoid") and self.size != 1:
            raise InputError(f"{self.kind} head has size 1, got {self.size}")
        if self.kind == "softmax" and self.size < 2:
            raise InputError("softmax head needs at least 2 classes")
        if self.kind == "mdn" and self.size < 1:
            raise InputError("mdn head needs at least 1 component")
        if self.sigma_min <= 0:
            raise InputError("sigma_min must be positive")

    @property
    def out_dim(self) -> int:
        if self.kind in ("linear", "sigmoid"):
            return 1
        if self.kind == "softmax":
            return self.size
        return 3 * self.size  # mdn: component logits, means, raw scales


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters of one training run.

    ``penalty`` is the group-Lasso strength (the tuning parameter of the
    penalized estimator); the per-group proximal threshold each step is
    ``learning_rate * penalty * group_weight``. ``seed`` fully determines
    initialization and batch order.
    """

    learning_rate: float = 0.01
    epochs: int = 300
    batch_size: int = 64
    penalty: float = 0.0
    seed: int = 0
    tol: float = 1e-6
    patience: int = 20
    settle_steps: int = 200

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise InputError("learning_rate must be positive")
        if self.epochs < 1 or self.batch_size < 1:
            raise InputError("epochs and batch_size must be positive")
        if self.penalty < 0:
            raise InputError("penalty must be non-negative")
        if self.tol <= 0:
            raise InputError("tol must be positive")
        if self.patience < 1:
            raise InputError("patience must be positive")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        return cls(**d)


def _as_groups(groups, d0: int) -> tuple[np.ndarray, ...]:
    """Validate a disjoint exhaustive partition of the input columns."""
    arrs = tuple(np.asarray(g, dtype=np.intp) for g in groups)
    seen = np.concatenate(arrs) if arrs else np.empty(0, dtype=np.intp)
    if len(seen) != d0 or len(np.unique(seen)) != d0 or (len(seen) and (seen.min() < 0 or seen.max() >= d0)):
        raise InputError("groups must partition the input columns exactly")
    return arrs


class GroupedNet:
    """Feedforward net whose first-layer columns are grouped per input feature."""

    def __init__(self, weights, intercepts, head: Head, groups=None):
        if len(weights) != len(intercepts) or not weights:
            raise InputError("weights and intercepts must align, one pair per layer")
        self.weights = [np.asarray(w, dtype=np.float64) for w in weights]
        self.intercepts = [np.asarray(a, dtype=np.float64) for a in intercepts]
        self.head = head
        for k, (w, a) in enumerate(zip(self.weights, self.intercepts)):
            if w.ndim != 2 or a.ndim != 1 or w.shape[0] != a.shape[0]:
                raise InputError(f"layer {k}: weight/intercept shapes inconsistent")
            if k > 0 and w.shape[1] != self.weights[k - 1].shape[0]:
                raise InputError(f"layer {k}: input width does not match previous layer")
        if self.weights[-1].shape[0] != head.out_dim:
            raise InputError("last layer width does not match head output size")
        d0 = self.weights[0].shape[1]
        if groups is None:
            groups = [[j] for j in range(d0)]
        self.groups = _as_groups(groups, d0)

    @property
    def layer_dims(self) -> tuple[int, ...]:
        return (self.weights[0].shape[1],) + tuple(w.shape[0] for w in self.weights)

    @property
    def input_dim(self) -> int:
        return self.weights[0].shape[1]

    @property
    def n_layers(self) -> int:
        return len(self.weights)

    def copy(self) -> "GroupedNet":
        return GroupedNet(
            [w.copy() for w in self.weights],
            [a.copy() for a in self.intercepts],
            self.head,
            [g.copy() for g in self.groups],
        )

    @classmethod
    def initialize(cls, input_dim: int, hidden_dims, head: Head, groups=None, seed: int = 0) -> "GroupedNet":
        """Seeded init: weights uniform in ±sqrt(6/(fan_in+fan_out)), intercepts zero."""
        rng = np.random.default_rng(seed)
        dims = [input_dim, *hidden_dims, head.out_dim]
        weights, intercepts = [], []
        for d_in, d_out in zip(dims[:-1], dims[1:]):
            limit = math.sqrt(6.0 / (d_in + d_out))
            weights.append(rng.uniform(-limit, limit, size=(d_out, d_in)))
            intercepts.append(np.zeros(d_out))
        return cls(weights, intercepts, head, groups)


def _softplus(x):
    return np.logaddexp(0.0, x)


def _sigmoid(x):
    # sigmoid(x) = (tanh(x/2) + 1) / 2, stable over the whole real line
    out = np.tanh(0.5 * x)
    out += 1.0
    out *= 0.5
    return out


def _softmax(z):
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def _hidden_activations(net: GroupedNet, X: np.ndarray) -> list:
    acts = [X]
    h = X
    for w, a in zip(net.weights[:-1], net.intercepts[:-1]):
        z = h @ w.T
        z += a
        np.tanh(z, out=z)
        acts.append(z)
        h = z
    return acts


def forward(net: GroupedNet, x):
    """Run the network on ``x`` (one row or a batch).

    Returns ``(output, activations)`` where ``activations[k]`` is the k-th
    hidden layer (``activations[0]`` is the input) — everything the backward
    pass needs. The output is the head value: probability for ``sigmoid``,
    a point on the simplex for ``softmax``, the raw scalar for ``linear``,
    and ``(component_weights, means, sds)`` arrays for ``mdn``.
    """
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    X = x[None, :] if single else x
    if X.ndim != 2 or X.shape[1] != net.input_dim:
        raise InputError(f"input width {x.shape[-1] if x.ndim else 0} != expected {net.input_dim}")
    if not all(np.all(np.isfinite(w)) for w in net.weights):
        raise InputError("network parameters are not finite")
    acts = _hidden_activations(net, X)
    z = acts[-1] @ net.weights[-1].T + net.intercepts[-1]
    kind = net.head.kind
    if kind == "linear":
        out = z[:, 0]
    elif kind == "sigmoid":
        out = _sigmoid(z[:, 0])
    elif kind == "softmax":
        out = _softmax(z)
    else:  # mdn
        m = net.head.size
        out = (
            _softmax(z[:, :m]),
            z[:, m : 2 * m],
            _softplus(z[:, 2 * m :]) + net.head.sigma_min,
        )
    if single:
        out = tuple(o[0] for o in out) if kind == "mdn" else out[0]
        return out, [a[0] for a in acts]
    return out, acts


def _head_loss_grad(net, z, y):
    """Per-sample loss vector and unscaled per-sample gradient w.r.t. ``z``."""
    kind = net.head.kind
    if kind == "sigmoid":
        zc = z[:, 0]
        # stable BCE on logits; float targets in [0,1] are allowed
        losses = np.logaddexp(0.0, zc) - zc * y
        dz = (_sigmoid(zc) - y)[:, None]
        return losses, dz
    if kind == "softmax":
        logp = z - z.max(axis=1, keepdims=True)
        logp -= np.log(np.exp(logp).sum(axis=1, keepdims=True))
        idx = y.astype(np.intp)
        if idx.min() < 0 or idx.max() >= net.head.size:
            raise InputError("class index outside head range")
        rows = np.arange(len(idx))
        losses = -logp[rows, idx]
        dz = np.exp(logp)
        dz[rows, idx] -= 1.0
        return losses, dz
    if kind == "linear":
        r = z[:, 0] - y
        return r * r, (2.0 * r)[:, None]
    # mdn
    m = net.head.size
    logits, means, sraw = z[:, :m], z[:, m : 2 * m], z[:, 2 * m :]
    sd = _softplus(sraw) + net.head.sigma_min
    logw = logits - logits.max(axis=1, keepdims=True)
    logw -= np.log(np.exp(logw).sum(axis=1, keepdims=True))
    diff = y[:, None] - means
    logn = -0.5 * (diff / sd) ** 2 - np.log(sd) - 0.5 * LOG_2PI
    a = logw + logn
    amax = a.max(axis=1, keepdims=True)
    lse = amax[:, 0] + np.log(np.exp(a - amax).sum(axis=1))
    losses = -lse
    resp = np.exp(a - lse[:, None])
    dlogits = np.exp(logw) - resp
    dmeans = -resp * diff / sd**2
    dsd = resp * (1.0 / sd - diff**2 / sd**3)
    dsraw = dsd * _sigmoid(sraw)
    dz = np.concatenate([dlogits, dmeans, dsraw], axis=1)
    return losses, dz


def _loss_grad_core(net: GroupedNet, X, y, w_norm=None):
    """Shared loss/gradient path. ``w_norm=None`` means the uniform mean."""
    acts = _hidden_activations(net, X)
    z = acts[-1] @ net.weights[-1].T
    z += net.intercepts[-1]
    losses, dz = _head_loss_grad(net, z, y)
    if w_norm is None:
        loss = float(losses.mean())
        dz *= 1.0 / losses.shape[0]
    else:
        loss = float(losses @ w_norm)
        dz *= w_norm[:, None]

    d_weights = [None] * net.n_layers
    d_intercepts = [None] * net.n_layers
    for k in range(net.n_layers - 1, -1, -1):
        d_weights[k] = dz.T @ acts[k]
        d_intercepts[k] = dz.sum(axis=0)
        if k > 0:
            dh = dz @ net.weights[k]
            t = acts[k] * acts[k]
            np.subtract(1.0, t, out=t)  # tanh'
            dh *= t
            dz = dh
    return loss, (d_weights, d_intercepts)


def loss_and_grad(net: GroupedNet, X, y, loss_kind: str | None = None, sample_weight=None):
    """Mean loss over the batch and the full parameter gradient.

    ``loss_kind`` must match the head (see :data:`LOSS_FOR_HEAD`); ``None``
    selects the matching loss. ``sample_weight`` reweights the mean
    (weights are normalized to sum to 1).
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    y = np.asarray(y)
    if X.shape[0] == 0:
        raise InputError("empty batch")
    if X.shape[0] != y.shape[0]:
        raise InputError("inputs and targets disagree on batch size")
    if X.shape[1] != net.input_dim:
        raise InputError(f"input width {X.shape[1]} != expected {net.input_dim}")
    expected = LOSS_FOR_HEAD[net.head.kind]
    if loss_kind is not None and loss_kind != expected:
        raise InputError(f"loss {loss_kind!r} does not match {net.head.kind} head (expected {expected!r})")
    if sample_weight is None:
        w_norm = None
    else:
        sw = np.asarray(sample_weight, dtype=np.float64)
        if sw.shape != (X.shape[0],) or sw.min() < 0 or sw.sum() <= 0:
            raise InputError("sample_weight must be non-negative with positive sum")
        w_norm = sw / sw.sum()
    y_f = y.astype(np.float64) if net.head.kind != "softmax" else y
    return _loss_grad_core(net, X, y_f, w_norm)


def group_lasso_prox(v, threshold: float):
    """Group soft-threshold: ``max(0, 1 - threshold/||v||) * v``.

    This is the closed-form minimizer of ``0.5*||u - v||^2 + threshold*||u||``
    over ``u``; the whole array is treated as one group (Frobenius norm). A
    zero vector maps to itself by convention.
    """
    if threshold < 0:
        raise InputError("threshold must be non-negative")
    v = np.asarray(v, dtype=np.float64)
    norm = float(np.sqrt((v * v).sum()))
    if norm <= threshold:
        return np.zeros_like(v)
    return (1.0 - threshold / norm) * v


def group_norms(net: GroupedNet) -> np.ndarray:
    """Euclidean norm of each first-layer group (impact measure per feature)."""
    b1 = net.weights[0]
    return np.array([float(np.sqrt((b1[:, g] ** 2).sum())) for g in net.groups])


class _ProxPlan:
    """Precomputed layout for applying the group prox quickly each step."""

    def __init__(self, net: GroupedNet, thresholds: np.ndarray):
        self.single_cols = []
        self.single_thresholds = []
        self.multi = []  # (cols, threshold)
        for g, t in zip(net.groups, thresholds):
            if t <= 0:
                continue
            if len(g) == 1:
                self.single_cols.append(g[0])
                self.single_thresholds.append(t)
            else:
                self.multi.append((g, t))
        self.single_cols = np.asarray(self.single_cols, dtype=np.intp)
        self.single_thresholds = np.asarray(self.single_thresholds)

    def apply(self, b1: np.ndarray) -> None:
        if len(self.single_cols):
            block = b1[:, self.single_cols]
            norms = np.sqrt(np.einsum("ij,ij->j", block, block))
            factor = np.zeros_like(norms)
            nz = norms > self.single_thresholds
            factor[nz] = 1.0 - self.single_thresholds[nz] / norms[nz]
            b1[:, self.single_cols] = block * factor
        for cols, t in self.multi:
            b1[:, cols] = group_lasso_prox(b1[:, cols], t)


def train(net: GroupedNet, X, y, config: TrainConfig, group_weights=None, sample_weight=None):
    """Proximal gradient descent on ``net`` (a copy; the input is untouched).

    Mini-batch epochs with a group soft-threshold after every step
    (threshold ``lr * penalty * weight_g``), then a short full-batch
    proximal phase that settles the sparsity pattern: mini-batch gradient
    noise can reopen a zeroed group, so exact support is decided on the
    full gradient. Returns ``(fitted_net, epoch_objective_trace)``.

    Stops early once the epoch objective has improved by less than
    ``config.tol`` for ``config.patience`` consecutive epochs. A non-finite
    loss raises :class:`TrainingDivergedError` with the epoch index.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    if X.ndim != 2 or X.shape[0] == 0:
        raise InputError("training data must be a non-empty matrix")
    lam = config.penalty
    if group_weights is None:
        gw = np.ones(len(net.groups))
    else:
        gw = np.asarray(group_weights, dtype=np.float64)
        if gw.shape != (len(net.groups),):
            raise InputError(f"need one penalty weight per group ({len(net.groups)}), got {gw.shape}")
        if gw.min() < 0:
            raise InputError("penalty weights must be non-negative")
    net = net.copy()
    n = X.shape[0]
    y_f = y.astype(np.float64) if net.head.kind != "softmax" else y
    if sample_weight is None:
        sw = None
    else:
        sw = np.asarray(sample_weight, dtype=np.float64)
        if sw.shape != (n,) or sw.min() < 0 or sw.sum() <= 0:
            raise InputError("sample_weight must be non-negative with positive sum")
    rng = np.random.default_rng(config.seed)
    lr = config.learning_rate
    thresholds = lr * lam * gw
    prox_active = lam > 0 and bool(np.any(thresholds > 0))
    plan = _ProxPlan(net, thresholds) if prox_active else None

    weights_list = net.weights
    intercepts_list = net.intercepts
    n_layers = net.n_layers
    trace = []
    best = math.inf
    stale = 0
    for epoch in range(config.epochs):
        order = rng.permutation(n)
        Xs, ys = X[order], y_f[order]
        sws = None if sw is None else sw[order]
        epoch_loss = 0.0
        for start in range(0, n, config.batch_size):
            stop = start + config.batch_size
            if sws is None:
                w_norm = None
            else:
                bw = sws[start:stop]
                w_norm = bw / bw.sum()
            loss, (dW, dA) = _loss_grad_core(net, Xs[start:stop], ys[start:stop], w_norm)
            if not math.isfinite(loss):
                raise TrainingDivergedError(epoch)
            epoch_loss += loss * (min(stop, n) - start)
            for k in range(n_layers):
                weights_list[k] -= lr * dW[k]
                intercepts_list[k] -= lr * dA[k]
            if prox_active:
                plan.apply(weights_list[0])
        obj = epoch_loss / n
        if lam > 0:
            obj += lam * float(np.dot(gw, group_norms(net)))
        trace.append(obj)
        if best - obj < config.tol:
            stale += 1
            if stale >= config.patience:
                break
        else:
            stale = 0
        best = min(best, obj)

    if prox_active:
        # full-batch settle: exact zeros are only stable against the full
        # gradient, so the support is decided here, free of batch noise
        full_w = None if sw is None else sw / sw.sum()
        prev_support = None
        prev_obj = math.inf
        for step in range(config.settle_steps):
            loss, (dW, dA) = _loss_grad_core(net, X, y_f, full_w)
            if not math.isfinite(loss):
                raise TrainingDivergedError(config.epochs + step)
            for k in range(net.n_layers):
                net.weights[k] -= lr * dW[k]
                net.intercepts[k] -= lr * dA[k]
            plan.apply(net.weights[0])
            norms = group_norms(net)
            support = tuple(bool(x > 0) for x in norms)
            obj = loss + lam * float(np.dot(gw, norms))
            if support == prev_support and prev_obj - obj < config.tol:
                break
            prev_support, prev_obj = support, obj

    if not all(np.all(np.isfinite(w)) for w in net.weights + net.intercepts):
        raise TrainingDivergedError(config.epochs)
    return net, trace


# -- serialization ------------------------------------------------------------

def _encode_array(a: np.ndarray) -> list:
    if a.ndim == 1:
        return [float(x).hex() for x in a]
    return [_encode_array(row) for row in a]


def _decode_array(rows) -> np.ndarray:
    if rows and isinstance(rows[0], list):
        return np.array([[float.fromhex(x) for x in row] for row in rows])
    return np.array([float.fromhex(x) for x in rows])


def net_to_dict(net: GroupedNet, seed: int | None = None, config: TrainConfig | None = None, extra: dict | None = None) -> dict:
    """JSON-safe dict; floats hex-encoded so the round trip is bit-exact."""
    doc = {
        "format_version": MODEL_FORMAT_VERSION,
        "layer_dims": list(net.layer_dims),
        "head": {"kind": net.head.kind, "size": net.head.size, "sigma_min": net.head.sigma_min},
        "weights": [_encode_array(w) for w in net.weights],
        "intercepts": [_encode_array(a) for a in net.intercepts],
        "groups": [[int(i) for i in g] for g in net.groups],
        "seed": seed,
        "config": config.to_dict() if config is not None else None,
    }
    if extra:
        doc["extra"] = extra
    return doc


def net_from_dict(doc: dict) -> GroupedNet:
    if doc.get("format_version") != MODEL_FORMAT_VERSION:
        raise InputError(f"unsupported model format version {doc.get('format_version')!r}")
    head = Head(**doc["head"])
    return GroupedNet(
        [_decode_array(w) for w in doc["weights"]],
        [_decode_array(a) for a in doc["intercepts"]],
        head,
        doc["groups"],
    )


def save_net(net: GroupedNet, path, **kwargs) -> None:
    Path(path).write_text(json.dumps(net_to_dict(net, **kwargs), sort_keys=True) + "\n", encoding="utf-8")


def load_net(path) -> GroupedNet:
    return net_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
