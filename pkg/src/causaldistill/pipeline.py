"""End-to-end distillation: screen, per-feature propensity + response curves,
rewrite features as attributions, train and score the risk classifier.

Per-feature work (propensity fit, outcome regression, response curve) is
independent across features and fans out over a thread pool; every fit is
seeded per feature, so results are identical for any job count.
"""

from __future__ import annotations

import hashlib
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

from . import nn
from .attribution import (AttributionMap, SigmaModel, default_sigma_penalty,
                          fit_sigma, response_curve)
from .data import Dataset, Feature, FeatureSchema, stratified_split
from .errors import AlreadyDistilledError, InputError
from .metrics import ConfusionCounts, confusion_metrics
from .outcome import OutcomeFit, default_penalty, fit_outcome
from .propensity import (PropensityFit, adaptive_weights, default_theta, fit_propensity)
from .risk import RiskClassifier, fit_risk_classifier, predict_risk

#: seed offsets per stage (base seed, xor-ed per feature where applicable)
SIGMA_SEED_OFFSET = 1000003
CLASSIFIER_SEED_OFFSET = 7919
BASELINE_SEED_OFFSET = 104729
SPLIT_SEED_OFFSET = 31337


@dataclass(frozen=True)
class PipelineConfig:
    """Stage hyperparameters; ``None`` penalties mean the default schedules."""

    seed: int = 0
    lambda_: float | None = None     # outcome group-Lasso strength
    theta: float | None = None       # propensity adaptive group-Lasso strength
    sigma_theta: float | None = None  # sigma-regression group-Lasso strength
    gamma: float = 1.0               # adaptive weight power
    w_max: float = 1e6               # adaptive weight cap
    grid_size: int = 21              # continuous response grid points
    rep_dim: int = 8                 # propensity representation width
    mdn_components: int = 5
    hidden: tuple[int, ...] = (32, 32)            # outcome / sigma / classifier
    propensity_hidden: tuple[int, ...] = (32,)    # rep_dim layer is appended
    learning_rate: float = 0.01
    epochs: int = 300
    batch_size: int = 64
    tol: float = 1e-6
    patience: int = 20
    split_fraction: float = 0.2
    gradient_tau: float = 0.01
    baseline: str = "zero"

    _JSON_KEYS = {
        "seed", "lambda", "theta", "sigma_theta", "gamma", "w_max", "grid_size",
        "rep_dim", "mdn_components", "hidden", "propensity_hidden", "learning_rate",
        "epochs", "batch_size", "tol", "patience", "split_fraction",
        "gradient_tau", "baseline",
    }

    def __post_init__(self):
        if self.grid_size < 2:
            raise InputError("grid_size must be at least 2")
        if self.rep_dim < 1 or self.mdn_components < 1:
            raise InputError("rep_dim and mdn_components must be positive")
        if not 0 < self.split_fraction < 1:
            raise InputError("split_fraction must lie in (0, 1)")
        if self.gamma <= 0 or self.w_max <= 0:
            raise InputError("gamma and w_max must be positive")
        for name in ("lambda_", "theta", "sigma_theta"):
            v = getattr(self, name)
            if v is not None and v < 0:
                raise InputError(f"{name.rstrip('_')} must be non-negative")

    @classmethod
    def from_dict(cls, doc: dict) -> "PipelineConfig":
        unknown = set(doc) - cls._JSON_KEYS
        if unknown:
            raise InputError(f"unknown config keys: {sorted(unknown)}")
        kwargs = dict(doc)
        if "lambda" in kwargs:
            kwargs["lambda_"] = kwargs.pop("lambda")
        for key in ("hidden", "propensity_hidden"):
            if key in kwargs:
                kwargs[key] = tuple(int(v) for v in kwargs[key])
        return cls(**kwargs)

    def to_dict(self) -> dict:
        doc = asdict(self)
        doc["lambda"] = doc.pop("lambda_")
        doc["hidden"] = list(self.hidden)
        doc["propensity_hidden"] = list(self.propensity_hidden)
        return doc

    @classmethod
    def load(cls, path) -> "PipelineConfig":
        path = Path(path)
        if not path.exists():
            raise InputError(f"config file not found: {path}")
        try:
            doc = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise InputError(f"config {path} is not valid JSON: {exc}") from None
        if not isinstance(doc, dict):
            raise InputError("config must be a JSON object")
        return cls.from_dict(doc)

    def hash(self) -> str:
        canon = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode("utf-8")).hexdigest()

    def train_config(self, seed: int, penalty: float = 0.0) -> nn.TrainConfig:
        return nn.TrainConfig(learning_rate=self.learning_rate, epochs=self.epochs,
                              batch_size=self.batch_size, penalty=penalty, seed=seed,
                              tol=self.tol, patience=self.patience)


@dataclass
class FeatureArtifacts:
    propensity: PropensityFit
    sigma: SigmaModel
    map: AttributionMap


@dataclass
class DistillResult:
    """Distilled dataset plus every intermediate artifact and provenance."""

    distilled: Dataset
    outcome: OutcomeFit
    features: dict[str, FeatureArtifacts]
    provenance: dict
    warnings: list[str] = field(default_factory=list)

    @property
    def maps(self) -> dict[str, AttributionMap]:
        return {name: art.map for name, art in self.features.items()}


def _distilled_schema(maps: dict[str, AttributionMap], schema: FeatureSchema,
                      columns: np.ndarray) -> FeatureSchema:
    feats = []
    for j, f in enumerate(schema):
        col = columns[:, j]
        lo = min(0.0, float(col.min()))
        hi = max(1.0, float(col.max()))
        feats.append(Feature(f.name, "continuous", low=lo, high=hi))
    return FeatureSchema(feats, label_kind=schema.label_kind, distilled=True)


def apply_maps(maps: dict[str, AttributionMap], data: Dataset,
               on_unseen: str = "curve_mean") -> tuple[Dataset, list[str]]:
    """Rewrite every feature value as its attribution via the fitted maps.

    Continuous values outside a map's grid clamp to the endpoints; unseen
    categorical levels take the curve mean and are reported as warnings.
    """
    if data.schema.distilled:
        raise AlreadyDistilledError("dataset is already distilled")
    if set(maps) != set(data.schema.names):
        raise InputError("maps do not cover the dataset's features")
    cols = np.empty_like(data.X)
    warnings = []
    for j, f in enumerate(data.schema):
        values, unseen = maps[f.name].attribution_at(data.X[:, j], on_unseen=on_unseen)
        cols[:, j] = values
        if unseen:
            warnings.append(f"feature {f.name!r}: {unseen} unseen level value(s) mapped to the curve mean")
    schema = _distilled_schema(maps, data.schema, cols)
    return Dataset(cols, data.y.copy(), schema), warnings


def distill_dataset(data: Dataset, config: PipelineConfig | None = None,
                    jobs: int = 1) -> DistillResult:
    """Full distillation of one dataset (typically the training split).

    Stages: group-Lasso outcome screen (a barrier), then per feature in
    parallel - adaptive-penalty propensity fit, outcome regression on
    (value, representation), response curve - and finally the attribution
    lookup that rewrites the feature matrix. Labels pass through untouched.
    """
    if config is None:
        config = PipelineConfig()
    if data.schema.distilled:
        raise AlreadyDistilledError("dataset is already distilled; refusing to distill twice")
    if data.schema.label_kind != "binary":
        raise InputError("distillation serves binary risk tasks")
    lam = config.lambda_ if config.lambda_ is not None else default_penalty(data.n, data.d)
    theta = config.theta if config.theta is not None else default_theta(data.n)
    sigma_theta = (config.sigma_theta if config.sigma_theta is not None
                   else default_sigma_penalty(data.n))
    outcome_fit = fit_outcome(data, config.train_config(config.seed, lam), hidden=config.hidden)

    names = data.schema.names

    def build(j: int) -> FeatureArtifacts:
        w = adaptive_weights(outcome_fit.predictive_weights, j, names,
                             gamma=config.gamma, w_max=config.w_max)
        pf = fit_propensity(
            data, j, w, config.train_config(config.seed ^ j, theta),
            hidden=config.propensity_hidden, rep_dim=config.rep_dim,
            mdn_components=config.mdn_components,
        )
        # the sigma-stage penalty is adaptive like the propensity's: a
        # feature the outcome screen priced out gets a flat curve exactly
        pw_j = outcome_fit.predictive_weights[j]
        sigma_w = config.w_max if pw_j <= 0 else min(pw_j ** -config.gamma, config.w_max)
        sigma = fit_sigma(data, pf,
                          config.train_config((config.seed ^ j) + SIGMA_SEED_OFFSET, sigma_theta),
                          hidden=config.hidden, feature_penalty_weight=sigma_w)
        amap = response_curve(sigma, pf, data, grid_size=config.grid_size,
                              gradient_tau=config.gradient_tau)
        return FeatureArtifacts(pf, sigma, amap)

    if jobs <= 1 or data.d == 1:
        artifacts = [build(j) for j in range(data.d)]
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            artifacts = list(pool.map(build, range(data.d)))

    features = {names[j]: art for j, art in enumerate(artifacts)}
    distilled, warnings = apply_maps({n: a.map for n, a in features.items()}, data, on_unseen="error")
    provenance = {
        "config_hash": config.hash(),
        "seeds": {
            "outcome": config.seed,
            "propensity": {names[j]: config.seed ^ j for j in range(data.d)},
            "sigma": {names[j]: (config.seed ^ j) + SIGMA_SEED_OFFSET for j in range(data.d)},
        },
        "penalties": {"lambda": lam, "theta": theta, "sigma_theta": sigma_theta},
        "n": data.n,
    }
    return DistillResult(distilled, outcome_fit, features, provenance, warnings)


@dataclass
class EndToEndReport:
    """Test-split metrics for the distilled model and the raw-feature baseline."""

    distilled_metrics: dict
    baseline_metrics: dict
    threshold: float
    baseline_threshold: float
    provenance: dict
    warnings: list[str]

    def to_json(self) -> dict:
        return {
            "distilled": self.distilled_metrics,
            "raw_baseline": self.baseline_metrics,
            "threshold": self.threshold,
            "baseline_threshold": self.baseline_threshold,
            "provenance": self.provenance,
            "warnings": list(self.warnings),
        }


def run_end_to_end(data: Dataset, config: PipelineConfig | None = None,
                   jobs: int = 1) -> tuple[EndToEndReport, DistillResult, RiskClassifier]:
    """Split, distill on train only, apply maps to test, classify, evaluate.

    The raw-feature baseline classifier trains with the identical
    mechanism (class weighting, F1 threshold) for a fair comparison.
    """
    if config is None:
        config = PipelineConfig()
    train, test = stratified_split(data, config.split_fraction, config.seed + SPLIT_SEED_OFFSET)
    if len(np.unique(train.y)) < 2:
        raise InputError("training split has a single class")
    result = distill_dataset(train, config, jobs=jobs)
    test_distilled, warn_test = apply_maps(result.maps, test)
    result.warnings.extend(warn_test)

    clf = fit_risk_classifier(result.distilled,
                              config.train_config(config.seed + CLASSIFIER_SEED_OFFSET),
                              hidden=config.hidden)
    baseline = fit_risk_classifier(train,
                                   config.train_config(config.seed + BASELINE_SEED_OFFSET),
                                   hidden=config.hidden)

    _, pred_d = predict_risk(clf, test_distilled.X)
    _, pred_b = predict_risk(baseline, test.X)
    metrics_d = confusion_metrics(ConfusionCounts.from_predictions(test.y, pred_d)).to_json()
    metrics_b = confusion_metrics(ConfusionCounts.from_predictions(test.y, pred_b)).to_json()

    provenance = dict(result.provenance)
    provenance["seeds"] = dict(provenance["seeds"])
    provenance["seeds"]["classifier"] = config.seed + CLASSIFIER_SEED_OFFSET
    provenance["seeds"]["baseline"] = config.seed + BASELINE_SEED_OFFSET
    provenance["split"] = {"fraction": config.split_fraction, "seed": config.seed + SPLIT_SEED_OFFSET,
                           "n_train": train.n, "n_test": test.n}
    report = EndToEndReport(metrics_d, metrics_b, clf.threshold, baseline.threshold,
                            provenance, result.warnings)
    return report, result, clf
