"""Per-feature propensity models with adaptive group-Lasso covariate selection.

For a target feature the model maps the remaining covariates to the
conditional distribution of the target: a softmax head gives probability
mass for binary/categorical targets, a mixture density head gives a
density for continuous targets. Penalty weights come from the outcome
screen: ``w_m = min(||beta_m||^-gamma, w_max)``, so covariates the outcome
model zeroed are priced out entirely (the ``w_max`` cap stands in for an
infinite weight, and the proximal step turns it into exact removal).

The last hidden layer doubles as a low-dimensional propensity
representation used by the attribution stage.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import nn
from .data import Dataset, Encoder, Feature, FeatureSchema, drop_feature
from .errors import DegenerateFeatureError, InputError

DEFAULT_GAMMA = 1.0
DEFAULT_W_MAX = 1e6
DEFAULT_MDN_COMPONENTS = 5
DEFAULT_SIGMA_MIN = 1e-3
DEFAULT_REP_DIM = 8
DEFAULT_HIDDEN = (32,)  # representation layer of width rep_dim is appended

#: theta_n = THETA_RATE * n^(-1/4); a simple decaying schedule, exposed in config
THETA_RATE = 0.05


def default_theta(n: int) -> float:
    return THETA_RATE * n ** -0.25


@dataclass(frozen=True)
class AdaptiveWeights:
    """Per-covariate penalty weights for one target feature."""

    target_index: int
    covariate_names: tuple[str, ...]
    weights: np.ndarray
    gamma: float
    w_max: float

    def __post_init__(self):
        if len(self.covariate_names) != len(self.weights):
            raise InputError("one weight per covariate required")


def adaptive_weights(predictive_weights, j: int, names=None,
                     gamma: float = DEFAULT_GAMMA, w_max: float = DEFAULT_W_MAX) -> AdaptiveWeights:
    """Adaptive penalties ``min(||beta_m||^-gamma, w_max)`` over the covariates of ``j``.

    A zero predictive weight maps to exactly ``w_max`` (the 0/0-style cap:
    screened-out covariates get the maximal penalty and stay removed).
    """
    if gamma <= 0:
        raise InputError("gamma must be positive")
    if w_max <= 0:
        raise InputError("w_max must be positive")
    pw = np.asarray(predictive_weights, dtype=np.float64)
    if pw.ndim != 1:
        raise InputError("predictive weights must be a vector")
    if not 0 <= j < len(pw):
        raise InputError(f"target index {j} outside 0..{len(pw) - 1}")
    if names is None:
        names = tuple(f"f{k}" for k in range(len(pw)))
    keep = [k for k in range(len(pw)) if k != j]
    w = np.empty(len(keep))
    for pos, k in enumerate(keep):
        w[pos] = w_max if pw[k] <= 0 else min(pw[k] ** -gamma, w_max)
    return AdaptiveWeights(j, tuple(names[k] for k in keep), w, gamma, w_max)


@dataclass(frozen=True)
class MixtureDensityParams:
    """Parameters of a univariate Gaussian mixture."""

    weights: np.ndarray
    means: np.ndarray
    sds: np.ndarray

    def __post_init__(self):
        w, m, s = (np.asarray(a, dtype=np.float64) for a in (self.weights, self.means, self.sds))
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "means", m)
        object.__setattr__(self, "sds", s)
        if not (w.shape == m.shape == s.shape) or w.ndim != 1 or len(w) < 1:
            raise InputError("mixture parameter vectors must align")
        if abs(w.sum() - 1.0) > 1e-9 or w.min() < 0:
            raise InputError("component weights must form a simplex (sum 1 within 1e-9)")
        if s.min() <= 0:
            raise InputError("component sds must be positive")


def mdn_pdf(params: MixtureDensityParams, x: float) -> float:
    """Mixture density at ``x``."""
    z = (x - params.means) / params.sds
    return float(np.sum(params.weights * np.exp(-0.5 * z * z) / (params.sds * math.sqrt(2 * math.pi))))


def mdn_nll(params: MixtureDensityParams, x: float) -> float:
    """Negative log-likelihood ``-log sum_m w_m N(x; mu_m, sd_m)`` (stable)."""
    z = (x - params.means) / params.sds
    loga = np.log(params.weights) - 0.5 * z * z - np.log(params.sds) - 0.5 * math.log(2 * math.pi)
    top = loga.max()
    return float(-(top + math.log(np.exp(loga - top).sum())))


def mdn_nll_grad(params: MixtureDensityParams, x: float):
    """Gradient of :func:`mdn_nll` w.r.t. (weights, means, sds)."""
    z = (x - params.means) / params.sds
    loga = np.log(params.weights) - 0.5 * z * z - np.log(params.sds) - 0.5 * math.log(2 * math.pi)
    top = loga.max()
    lse = top + math.log(np.exp(loga - top).sum())
    resp = np.exp(loga - lse)
    d_w = -resp / params.weights
    d_mu = -resp * z / params.sds
    d_sd = resp * (1.0 / params.sds - z * z / params.sds)
    return d_w, d_mu, d_sd


@dataclass
class PropensityFit:
    """Fitted propensity model for one target feature."""

    target_index: int
    target: Feature
    net: nn.GroupedNet
    encoder: Encoder  # over the covariates (target excluded)
    config: nn.TrainConfig
    gamma: float
    target_mean: float = 0.0
    target_sd: float = 1.0

    @property
    def head_kind(self) -> str:
        return self.net.head.kind

    @property
    def representation_dim(self) -> int:
        return self.net.layer_dims[-2]

    @property
    def covariate_names(self) -> tuple[str, ...]:
        return self.encoder.schema.names

    def to_json(self) -> dict:
        extra = {
            "model": "propensity",
            "target_index": self.target_index,
            "target": {"name": self.target.name, **self.target.to_json()},
            "encoder": self.encoder.to_json(),
            "gamma": self.gamma,
            "target_mean": float(self.target_mean).hex(),
            "target_sd": float(self.target_sd).hex(),
        }
        return nn.net_to_dict(self.net, seed=self.config.seed, config=self.config, extra=extra)

    @classmethod
    def from_json(cls, doc: dict) -> "PropensityFit":
        extra = doc["extra"]
        tdoc = dict(extra["target"])
        target = Feature.from_json(tdoc.pop("name"), tdoc)
        return cls(
            target_index=extra["target_index"],
            target=target,
            net=nn.net_from_dict(doc),
            encoder=Encoder.from_json(extra["encoder"]),
            config=nn.TrainConfig.from_dict(doc["config"]),
            gamma=extra["gamma"],
            target_mean=float.fromhex(extra["target_mean"]),
            target_sd=float.fromhex(extra["target_sd"]),
        )

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), sort_keys=True) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path) -> "PropensityFit":
        return cls.from_json(json.loads(Path(path).read_text(encoding="utf-8")))


def fit_propensity(data: Dataset, j: int, weights: AdaptiveWeights,
                   config: nn.TrainConfig | None = None,
                   hidden=DEFAULT_HIDDEN, rep_dim: int = DEFAULT_REP_DIM,
                   mdn_components: int = DEFAULT_MDN_COMPONENTS,
                   sigma_min: float = DEFAULT_SIGMA_MIN,
                   seed: int | None = None) -> PropensityFit:
    """Train the propensity model of feature ``j`` on the other covariates.

    Labels never enter; only the feature matrix is used. Covariates whose
    adaptive weight is ``w_max`` end with exactly-zero first-layer groups.
    """
    if not 0 <= j < data.d:
        raise InputError(f"target index {j} outside 0..{data.d - 1}")
    if weights.target_index != j:
        raise InputError("adaptive weights were built for a different target")
    target_feature = data.schema[j]
    target = data.X[:, j]
    if len(np.unique(target)) < 2:
        raise DegenerateFeatureError(f"target feature {target_feature.name!r} is constant")
    cov_X, cov_schema = drop_feature(data, j)
    if weights.covariate_names != cov_schema.names:
        raise InputError("adaptive weights cover different covariates than the data")
    if config is None:
        config = nn.TrainConfig(penalty=default_theta(data.n), seed=0 if seed is None else seed)
    elif seed is not None:
        raise InputError("pass the seed inside config, or config=None")

    encoder = Encoder.fit(Dataset(cov_X, np.zeros(data.n, dtype=np.int64), cov_schema))
    X = encoder.encode(cov_X)

    t_mean, t_sd = 0.0, 1.0
    if target_feature.kind == "continuous":
        head = nn.Head("mdn", mdn_components, sigma_min=sigma_min)
        t_mean = float(target.mean())
        sd = float(target.std())
        t_sd = sd if sd > 0 else 1.0
        y = (target - t_mean) / t_sd
    else:
        k = 2 if target_feature.kind == "binary" else target_feature.levels
        head = nn.Head("softmax", k)
        y = target.astype(np.int64)

    net = nn.GroupedNet.initialize(encoder.width, [*hidden, rep_dim], head,
                                   groups=encoder.groups, seed=config.seed)
    fitted, _ = nn.train(net, X, y, config, group_weights=weights.weights)
    return PropensityFit(j, target_feature, fitted, encoder, config, weights.gamma, t_mean, t_sd)


def _encode_covariates(fit: PropensityFit, x_minus_j) -> np.ndarray:
    x = np.asarray(x_minus_j, dtype=np.float64)
    return fit.encoder.encode(x)


def propensity_score(fit: PropensityFit, x_j: float, x_minus_j) -> np.ndarray | float:
    """Propensity of the target taking value ``x_j`` given the covariates.

    Probability mass for binary/categorical targets, density for
    continuous ones (density values may exceed 1). ``x_minus_j`` may be a
    single covariate row or a batch.
    """
    if not fit.target.contains(float(x_j)):
        raise InputError(f"value {x_j!r} outside the domain of {fit.target.name!r}")
    x = np.asarray(x_minus_j, dtype=np.float64)
    single = x.ndim == 1
    out, _ = nn.forward(fit.net, _encode_covariates(fit, x))
    if fit.head_kind == "softmax":
        scores = out[:, int(x_j)]
    else:
        w, mu, sd = out
        z = ((float(x_j) - fit.target_mean) / fit.target_sd - mu) / sd
        dens = np.sum(w * np.exp(-0.5 * z * z) / (sd * math.sqrt(2 * math.pi)), axis=1)
        scores = dens / fit.target_sd  # back to the raw-value scale
    return float(scores[0]) if single else scores


def mixture_at(fit: PropensityFit, x_minus_j) -> MixtureDensityParams:
    """Mixture parameters (raw-value scale) the net emits for one covariate row."""
    if fit.head_kind != "mdn":
        raise InputError("mixture parameters exist only for continuous targets")
    x = np.asarray(x_minus_j, dtype=np.float64)
    if x.ndim != 1:
        raise InputError("one covariate row at a time")
    (w, mu, sd), _ = nn.forward(fit.net, _encode_covariates(fit, x))
    return MixtureDensityParams(w[0], mu[0] * fit.target_sd + fit.target_mean, sd[0] * fit.target_sd)


def propensity_representation(fit: PropensityFit, x_minus_j) -> np.ndarray:
    """Low-dimensional propensity vector: the last hidden-layer activation."""
    x = np.asarray(x_minus_j, dtype=np.float64)
    single = x.ndim == 1
    _, acts = nn.forward(fit.net, _encode_covariates(fit, x))
    reps = acts[-1]
    return reps[0] if single else reps


def fit_all_propensities(data: Dataset, predictive_weights, config_for=None,
                         gamma: float = DEFAULT_GAMMA, w_max: float = DEFAULT_W_MAX,
                         base_seed: int = 0, jobs: int = 1, **fit_kwargs) -> list[PropensityFit]:
    """Propensity fits for every feature; per-feature seed is ``base_seed ^ j``.

    Fits are independent, so ``jobs > 1`` fans them out across threads;
    results are identical for any job count. ``config_for(j)``, when given,
    overrides the default per-feature config.
    """
    names = data.schema.names

    def build(j: int) -> PropensityFit:
        w = adaptive_weights(predictive_weights, j, names, gamma=gamma, w_max=w_max)
        if config_for is not None:
            cfg = config_for(j)
        else:
            cfg = nn.TrainConfig(penalty=default_theta(data.n), seed=base_seed ^ j)
        return fit_propensity(data, j, w, cfg, **fit_kwargs)

    if jobs <= 1 or data.d == 1:
        return [build(j) for j in range(data.d)]
    from concurrent.futures import ThreadPoolExecutor

    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(build, range(data.d)))


def save_propensity_models(fits, directory, manifest_name: str = "propensity_manifest.json") -> Path:
    """One model file per feature plus a manifest mapping feature to file."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    entries = {}
    for fit in fits:
        fname = f"propensity_{fit.target.name}.json"
        fit.save(directory / fname)
        entries[fit.target.name] = {
            "file": fname,
            "head": fit.head_kind,
            "gamma": fit.gamma,
            "theta": fit.config.penalty,
            "seed": fit.config.seed,
        }
    manifest = directory / manifest_name
    manifest.write_text(json.dumps({"models": entries}, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return manifest
