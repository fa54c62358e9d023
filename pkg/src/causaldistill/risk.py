"""Final-stage risk classifier on distilled (or raw) features.

Class-weighted log-loss counters the heavy label imbalance of risk data;
the decision threshold is then chosen to maximize F1 on a held-out
validation fold rather than defaulting to 0.5.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import nn
from .data import Dataset, Encoder
from .errors import DegenerateLabelsError, InputError

DEFAULT_HIDDEN = (32, 32)
VALIDATION_FRACTION = 0.2


@dataclass
class RiskClassifier:
    """Sigmoid-head network over the feature columns plus a decision threshold."""

    net: nn.GroupedNet
    encoder: Encoder
    threshold: float
    config: nn.TrainConfig

    def to_json(self) -> dict:
        return nn.net_to_dict(self.net, seed=self.config.seed, config=self.config,
                              extra={"model": "risk_classifier",
                                     "encoder": self.encoder.to_json(),
                                     "threshold": float(self.threshold).hex()})

    @classmethod
    def from_json(cls, doc: dict) -> "RiskClassifier":
        return cls(
            net=nn.net_from_dict(doc),
            encoder=Encoder.from_json(doc["extra"]["encoder"]),
            threshold=float.fromhex(doc["extra"]["threshold"]),
            config=nn.TrainConfig.from_dict(doc["config"]),
        )

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), sort_keys=True) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path) -> "RiskClassifier":
        return cls.from_json(json.loads(Path(path).read_text(encoding="utf-8")))


def _f1(y_true: np.ndarray, y_pred: np.ndarray) -> float:
    tp = np.sum((y_pred == 1) & (y_true == 1))
    fp = np.sum((y_pred == 1) & (y_true == 0))
    fn = np.sum((y_pred == 0) & (y_true == 1))
    denom = 2 * tp + fp + fn
    return 2 * tp / denom if denom > 0 else 0.0


def _best_f1_threshold(probs: np.ndarray, y: np.ndarray) -> float:
    """Scan candidate cuts; ties keep the first (lowest) candidate.

    Degenerate score distributions (constant predictions, or no threshold
    beating F1=0) fall back to 0.5.
    """
    uniq = np.unique(probs)
    if len(uniq) < 2:
        return 0.5
    # candidate thresholds between consecutive distinct scores, plus the scores themselves
    candidates = np.unique(np.concatenate([uniq, (uniq[:-1] + uniq[1:]) / 2.0]))
    best_t, best_f1 = 0.5, -1.0
    for t in candidates:
        f1 = _f1(y, (probs >= t).astype(int))
        if f1 > best_f1 + 1e-12:
            best_f1, best_t = f1, float(t)
    if best_f1 <= 0.0:
        return 0.5
    return best_t


def fit_risk_classifier(data: Dataset, config: nn.TrainConfig | None = None,
                        hidden=DEFAULT_HIDDEN, seed: int | None = None,
                        validation_fraction: float = VALIDATION_FRACTION) -> RiskClassifier:
    """Train the classifier with class-weighted log-loss and an F1-chosen threshold.

    Sample weights are inversely proportional to class frequency. A
    stratified validation fold (default 20%) is carved from the training
    data for threshold selection only; the network trains on the rest.
    """
    if data.schema.label_kind != "binary":
        raise InputError("risk classification needs binary labels")
    y = data.y
    if len(np.unique(y)) < 2:
        raise DegenerateLabelsError("both classes required to fit the classifier")
    if config is None:
        config = nn.TrainConfig(seed=0 if seed is None else seed)
    elif seed is not None:
        raise InputError("pass the seed inside config, or config=None")

    rng = np.random.default_rng(config.seed)
    val_mask = np.zeros(data.n, dtype=bool)
    for cls in (0, 1):
        members = np.flatnonzero(y == cls)
        k = max(1, int(round(len(members) * validation_fraction)))
        val_mask[rng.permutation(members)[:k]] = True
    if len(np.unique(y[~val_mask])) < 2:
        raise DegenerateLabelsError("training fold lost a class; need more data")

    encoder = Encoder.fit(data)
    X = encoder.encode(data.X)
    y_f = y.astype(np.float64)
    n_pos = float(y[~val_mask].sum())
    n_neg = float((~val_mask).sum() - n_pos)
    class_w = {1: (n_pos + n_neg) / (2.0 * n_pos), 0: (n_pos + n_neg) / (2.0 * n_neg)}
    sw = np.where(y == 1, class_w[1], class_w[0])

    net = nn.GroupedNet.initialize(encoder.width, list(hidden), nn.Head("sigmoid"),
                                   groups=encoder.groups, seed=config.seed)
    fitted, _ = nn.train(net, X[~val_mask], y_f[~val_mask], config, sample_weight=sw[~val_mask])
    val_probs, _ = nn.forward(fitted, X[val_mask])
    threshold = _best_f1_threshold(val_probs, y[val_mask])
    return RiskClassifier(fitted, encoder, threshold, config)


def predict_risk(clf: RiskClassifier, rows):
    """Probabilities and hard labels (probability >= threshold) for raw rows."""
    rows = np.asarray(rows, dtype=np.float64)
    single = rows.ndim == 1
    probs, _ = nn.forward(clf.net, clf.encoder.encode(rows))
    labels = (probs >= clf.threshold).astype(int)
    if single:
        return float(probs[0]), int(labels[0])
    return probs, labels
