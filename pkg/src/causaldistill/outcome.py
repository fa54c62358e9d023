"""Outcome screening: fit risk on all features with a group-Lasso first layer.

The fitted per-feature group norms ("predictive weights") measure each
feature's impact on the outcome; downstream they set the adaptive penalty
of every propensity model. Exact zeros mean a feature was screened out.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import nn
from .data import Dataset, Encoder
from .errors import DegenerateLabelsError, InputError

#: lambda_n = PENALTY_RATE * n^(-1/4) * PENALTY_FEATURE_SCALE * d, exposed in config
PENALTY_RATE = 0.01
PENALTY_FEATURE_SCALE = 4.0

DEFAULT_HIDDEN = (32, 32)


def default_penalty(n: int, d: int) -> float:
    """Default group-Lasso strength: decays as n^(-1/4), scaled by feature count."""
    return PENALTY_RATE * n ** -0.25 * PENALTY_FEATURE_SCALE * d


@dataclass
class OutcomeFit:
    """Fitted screening model plus per-feature predictive weights."""

    net: nn.GroupedNet
    encoder: Encoder
    predictive_weights: np.ndarray
    config: nn.TrainConfig

    @property
    def selected_mask(self) -> np.ndarray:
        return self.predictive_weights > 0

    @property
    def feature_names(self) -> tuple[str, ...]:
        return self.encoder.schema.names

    def to_json(self) -> dict:
        return nn.net_to_dict(self.net, seed=self.config.seed, config=self.config,
                              extra={"encoder": self.encoder.to_json(), "model": "outcome"})

    @classmethod
    def from_json(cls, doc: dict) -> "OutcomeFit":
        net = nn.net_from_dict(doc)
        encoder = Encoder.from_json(doc["extra"]["encoder"])
        config = nn.TrainConfig.from_dict(doc["config"])
        return cls(net, encoder, nn.group_norms(net), config)

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), sort_keys=True) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path) -> "OutcomeFit":
        return cls.from_json(json.loads(Path(path).read_text(encoding="utf-8")))


def fit_outcome(data: Dataset, config: nn.TrainConfig | None = None,
                hidden=DEFAULT_HIDDEN, seed: int | None = None) -> OutcomeFit:
    """Fit the group-Lasso outcome network on a binary-risk dataset.

    ``config.penalty`` of 0 with ``config is None`` semantics: when no
    config is given, the default penalty schedule is used. Passing an
    explicit config freezes everything, penalty included.
    """
    if data.schema.label_kind != "binary":
        raise InputError("outcome screening expects binary risk labels")
    classes = np.unique(data.y)
    if len(classes) < 2:
        raise DegenerateLabelsError(f"labels contain a single class ({classes.tolist()})")
    if config is None:
        config = nn.TrainConfig(penalty=default_penalty(data.n, data.d),
                                seed=0 if seed is None else seed)
    elif seed is not None:
        raise InputError("pass the seed inside config, or config=None")
    encoder = Encoder.fit(data)
    X = encoder.encode(data.X)
    net = nn.GroupedNet.initialize(encoder.width, list(hidden), nn.Head("sigmoid"),
                                   groups=encoder.groups, seed=config.seed)
    fitted, _ = nn.train(net, X, data.y.astype(np.float64), config)
    return OutcomeFit(fitted, encoder, nn.group_norms(fitted), config)


def predict_outcome(fit: OutcomeFit, x) -> np.ndarray | float:
    """Risk probability for raw feature rows (sigmoid head output)."""
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    out, _ = nn.forward(fit.net, fit.encoder.encode(x))
    return float(out[0]) if single else out


def write_weights_csv(fit: OutcomeFit, path) -> None:
    """Two-column CSV (feature, weight) for inspection."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["feature", "weight"])
        for name, w in zip(fit.feature_names, fit.predictive_weights):
            writer.writerow([name, repr(float(w))])
