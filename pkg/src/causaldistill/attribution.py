"""Causal response curves and feature attributions.

Two-step estimation for one feature: regress the observed outcome on the
feature value plus the propensity representation (the sigma model), then
average that regression over the whole population's representations at a
fixed intervention level. The resulting curve ``mu(x)`` is summarized as a
causal feature importance (mean above minimum under a uniform perturbation
over the grid), local gradient labels, and a baseline-shifted attribution
``cfa(x) = mu(x) - baseline``.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import nn
from .data import Dataset, Feature
from .errors import DegenerateLabelsError, InputError
from .propensity import PropensityFit, propensity_representation

DEFAULT_GRID_SIZE = 21
DEFAULT_GRADIENT_TAU = 0.01
BASELINE_KINDS = ("zero", "decision_boundary", "expert", "curve_mean")

#: sigma-regression group-Lasso rate: penalty = SIGMA_PENALTY_RATE * n^(-1/4),
#: applied to the feature's input block only (the representation coordinates
#: are never penalized - they are the adjustment machinery). The rate is
#: deliberately tiny: on its own it leaves real response curves essentially
#: unshrunk, and the pipeline scales the block's weight adaptively from the
#: outcome screen (capped like the propensity weights), which annihilates
#: screened-out features into exactly flat curves.
SIGMA_PENALTY_RATE = 0.01


def default_sigma_penalty(n: int) -> float:
    return SIGMA_PENALTY_RATE * n ** -0.25


def _encode_sigma_inputs(target: Feature, x_mean: float, x_sd: float,
                         x_values: np.ndarray, reps: np.ndarray,
                         rep_mean: np.ndarray, rep_sd: np.ndarray) -> np.ndarray:
    x_values = np.asarray(x_values, dtype=np.float64)
    reps = np.atleast_2d(reps)
    if target.kind == "categorical":
        lead = np.zeros((len(x_values), target.levels))
        lead[np.arange(len(x_values)), x_values.astype(np.intp)] = 1.0
    elif target.kind == "binary":
        lead = x_values[:, None]
    else:
        lead = ((x_values - x_mean) / x_sd)[:, None]
    return np.hstack([lead, (reps - rep_mean) / rep_sd])


@dataclass
class SigmaModel:
    """Outcome regression on (feature value, propensity representation).

    Representation coordinates are z-scored with training statistics: the
    penalized propensity net can leave them at tiny amplitudes, which would
    otherwise starve this regression's gradients.
    """

    target_index: int
    target: Feature
    net: nn.GroupedNet
    label_kind: str  # "binary" -> sigmoid head, "continuous" -> linear head
    x_mean: float
    x_sd: float
    rep_mean: np.ndarray
    rep_sd: np.ndarray
    config: nn.TrainConfig

    def encode_inputs(self, x_values: np.ndarray, reps: np.ndarray) -> np.ndarray:
        return _encode_sigma_inputs(self.target, self.x_mean, self.x_sd, x_values, reps,
                                    self.rep_mean, self.rep_sd)

    def predict(self, x_values, reps) -> np.ndarray:
        out, _ = nn.forward(self.net, self.encode_inputs(np.asarray(x_values, dtype=np.float64), reps))
        return out

    def to_json(self) -> dict:
        extra = {
            "model": "sigma",
            "target_index": self.target_index,
            "target": {"name": self.target.name, **self.target.to_json()},
            "label_kind": self.label_kind,
            "x_mean": float(self.x_mean).hex(),
            "x_sd": float(self.x_sd).hex(),
            "rep_mean": [float(v).hex() for v in self.rep_mean],
            "rep_sd": [float(v).hex() for v in self.rep_sd],
        }
        return nn.net_to_dict(self.net, seed=self.config.seed, config=self.config, extra=extra)

    @classmethod
    def from_json(cls, doc: dict) -> "SigmaModel":
        extra = doc["extra"]
        tdoc = dict(extra["target"])
        target = Feature.from_json(tdoc.pop("name"), tdoc)
        return cls(
            target_index=extra["target_index"],
            target=target,
            net=nn.net_from_dict(doc),
            label_kind=extra["label_kind"],
            x_mean=float.fromhex(extra["x_mean"]),
            x_sd=float.fromhex(extra["x_sd"]),
            rep_mean=np.array([float.fromhex(v) for v in extra["rep_mean"]]),
            rep_sd=np.array([float.fromhex(v) for v in extra["rep_sd"]]),
            config=nn.TrainConfig.from_dict(doc["config"]),
        )


def fit_sigma(data: Dataset, fit_j: PropensityFit, config: nn.TrainConfig | None = None,
              hidden=(32, 32), seed: int | None = None,
              feature_penalty_weight: float = 1.0) -> SigmaModel:
    """Fit the conditional-outcome model for the propensity fit's target feature.

    Binary labels train a sigmoid head under log-loss; continuous labels a
    linear head under squared loss. The feature's input block carries a
    group Lasso scaled by ``feature_penalty_weight`` (the representation is
    never penalized), so a feature priced out by the screen ends with an
    exactly flat response curve. Deterministic given the seed.
    """
    j = fit_j.target_index
    label_kind = data.schema.label_kind
    if label_kind == "binary" and len(np.unique(data.y)) < 2:
        raise DegenerateLabelsError("labels contain a single class")
    if config is None:
        config = nn.TrainConfig(seed=0 if seed is None else seed,
                                penalty=default_sigma_penalty(data.n))
    elif seed is not None:
        raise InputError("pass the seed inside config, or config=None")
    reps = propensity_representation(fit_j, np.delete(data.X, j, axis=1))
    target = data.schema[j]
    rep_mean = reps.mean(axis=0)
    rep_sd = reps.std(axis=0)
    rep_sd[rep_sd == 0] = 1.0
    inputs = _encode_sigma_inputs(target, fit_j.target_mean, fit_j.target_sd, data.X[:, j],
                                  reps, rep_mean, rep_sd)
    head = nn.Head("sigmoid") if label_kind == "binary" else nn.Head("linear")
    lead_width = target.levels if target.kind == "categorical" else 1
    groups = [list(range(lead_width))] + [[lead_width + r] for r in range(reps.shape[1])]
    if feature_penalty_weight < 0:
        raise InputError("feature_penalty_weight must be non-negative")
    group_weights = np.zeros(1 + reps.shape[1])
    group_weights[0] = feature_penalty_weight  # only the feature block is penalized
    net = nn.GroupedNet.initialize(inputs.shape[1], list(hidden), head,
                                   groups=groups, seed=config.seed)
    fitted, _ = nn.train(net, inputs, data.y.astype(np.float64), config,
                         group_weights=group_weights)
    return SigmaModel(j, target, fitted, label_kind, fit_j.target_mean, fit_j.target_sd,
                      rep_mean, rep_sd, config)


def _check_domain(target: Feature, x_value: float) -> None:
    if not target.contains(float(x_value)):
        raise InputError(f"value {x_value!r} outside the domain of {target.name!r}")


def _representations(fit_j: PropensityFit, data: Dataset) -> np.ndarray:
    return propensity_representation(fit_j, np.delete(data.X, fit_j.target_index, axis=1))


def _mu_at(sigma: SigmaModel, reps: np.ndarray, x_value: float) -> float:
    values = np.full(len(reps), float(x_value))
    return float(sigma.predict(values, reps).mean())


def causal_expectation(sigma: SigmaModel, fit_j: PropensityFit, data: Dataset, x_value: float) -> float:
    """Interventional expectation at one level: every unit's covariates are
    kept, the feature is set to ``x_value``, and the sigma model is averaged
    over the population's propensity representations."""
    _check_domain(sigma.target, x_value)
    return _mu_at(sigma, _representations(fit_j, data), x_value)


@dataclass
class AttributionMap:
    """Response curve of one feature plus its derived summaries.

    ``grid`` holds all levels for binary/categorical features or equally
    spaced points spanning the observed range for continuous ones;
    ``cfa = mu - baseline_value`` under the map's baseline.
    """

    feature: Feature
    feature_index: int
    grid: np.ndarray
    mu: np.ndarray
    baseline_kind: str = "zero"
    baseline_value: float = 0.0
    gradient_tau: float = DEFAULT_GRADIENT_TAU
    cfi: float = field(init=False, default=0.0)
    gradient_labels: tuple[str, ...] = field(init=False, default=())
    cfa: np.ndarray = field(init=False, default=None)

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=np.float64)
        self.mu = np.asarray(self.mu, dtype=np.float64)
        if self.grid.shape != self.mu.shape or self.grid.ndim != 1 or len(self.grid) < 1:
            raise InputError("grid and mu must be aligned vectors")
        if len(self.grid) > 1 and not np.all(np.diff(self.grid) > 0):
            raise InputError("grid must be strictly increasing")
        if self.baseline_kind not in BASELINE_KINDS:
            raise InputError(f"unknown baseline kind {self.baseline_kind!r}")
        self.cfi = causal_feature_importance(self)
        self.gradient_labels = local_causal_gradient(self, self.gradient_tau) if len(self.grid) > 1 else ()
        self.cfa = self.mu - self.baseline_value

    def mu_at(self, values) -> np.ndarray:
        """Curve value at arbitrary feature values (interpolated/level lookup)."""
        out, _ = self._lookup(self.mu, values, on_unseen="error")
        return out

    def attribution_at(self, values, on_unseen: str = "error") -> tuple[np.ndarray, int]:
        """CFA at arbitrary feature values.

        Continuous features clamp to the grid range and interpolate
        linearly; binary/categorical features use exact level lookup.
        ``on_unseen="curve_mean"`` maps unseen levels to the curve mean
        (returned count tells how many); ``"error"`` rejects them.
        """
        return self._lookup(self.cfa, values, on_unseen)

    def _lookup(self, curve: np.ndarray, values, on_unseen: str):
        values = np.asarray(values, dtype=np.float64)
        scalar = values.ndim == 0
        values = np.atleast_1d(values)
        if self.feature.kind == "continuous":
            clipped = np.clip(values, self.grid[0], self.grid[-1])
            out = np.interp(clipped, self.grid, curve)
            unseen = 0
        else:
            idx = np.searchsorted(self.grid, values)
            idx = np.clip(idx, 0, len(self.grid) - 1)
            match = self.grid[idx] == values
            unseen = int((~match).sum())
            if unseen and on_unseen == "error":
                bad = values[~match][0]
                raise InputError(f"unseen level {bad!r} for feature {self.feature.name!r}")
            out = curve[idx]
            if unseen:
                out = np.where(match, out, float(curve.mean()))
        return (float(out[0]) if scalar else out), unseen

    def to_json(self) -> dict:
        return {
            "feature": {"name": self.feature.name, **self.feature.to_json()},
            "feature_index": self.feature_index,
            "grid": [float(v).hex() for v in self.grid],
            "mu": [float(v).hex() for v in self.mu],
            "baseline_kind": self.baseline_kind,
            "baseline_value": float(self.baseline_value).hex(),
            "gradient_tau": self.gradient_tau,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "AttributionMap":
        fdoc = dict(doc["feature"])
        feature = Feature.from_json(fdoc.pop("name"), fdoc)
        return cls(
            feature=feature,
            feature_index=doc["feature_index"],
            grid=[float.fromhex(v) for v in doc["grid"]],
            mu=[float.fromhex(v) for v in doc["mu"]],
            baseline_kind=doc["baseline_kind"],
            baseline_value=float.fromhex(doc["baseline_value"]),
            gradient_tau=doc["gradient_tau"],
        )

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), sort_keys=True) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path) -> "AttributionMap":
        return cls.from_json(json.loads(Path(path).read_text(encoding="utf-8")))


def response_curve(sigma: SigmaModel, fit_j: PropensityFit, data: Dataset,
                   grid_size: int = DEFAULT_GRID_SIZE,
                   gradient_tau: float = DEFAULT_GRADIENT_TAU) -> AttributionMap:
    """Estimate the response curve of the sigma model's feature.

    The grid is every level for binary/categorical features, or
    ``grid_size`` equally spaced points spanning the observed min/max for
    continuous ones (endpoints included exactly). The returned map carries
    the zero baseline, so ``cfa == mu``.
    """
    target = sigma.target
    j = sigma.target_index
    if target.kind == "binary":
        grid = np.array([0.0, 1.0])
    elif target.kind == "categorical":
        grid = np.arange(target.levels, dtype=np.float64)
    else:
        if grid_size < 2:
            raise InputError("continuous grids need at least 2 points")
        col = data.X[:, j]
        lo, hi = float(col.min()), float(col.max())
        if lo == hi:
            raise InputError(f"feature {target.name!r} is constant; no grid")
        grid = np.linspace(lo, hi, grid_size)
    reps = _representations(fit_j, data)
    mu = np.array([_mu_at(sigma, reps, x) for x in grid])
    return AttributionMap(target, j, grid, mu, gradient_tau=gradient_tau)


def causal_feature_importance(map_: AttributionMap) -> float:
    """Uniform mean of the curve above its minimum (non-negative).

    Exactly zero for a constant curve (no rounding residue).
    """
    if np.all(map_.mu == map_.mu[0]):
        return 0.0
    return max(0.0, float(map_.mu.mean() - map_.mu.min()))


def local_causal_gradient(map_: AttributionMap, tau: float = DEFAULT_GRADIENT_TAU) -> tuple[str, ...]:
    """Label the curve's change over each adjacent grid pair.

    ``positive`` when mu rises by more than ``tau``, ``negative`` when it
    falls by more, ``neutral`` otherwise.
    """
    if len(map_.grid) < 2:
        raise InputError("need at least 2 grid points for gradients")
    steps = np.diff(map_.mu)
    return tuple("positive" if s > tau else "negative" if s < -tau else "neutral" for s in steps)


def causal_feature_attribution(map_: AttributionMap, baseline_kind: str,
                               baseline_param: float | None = None) -> AttributionMap:
    """Re-baseline a response curve; returns a new map with updated ``cfa``.

    Baselines: ``zero`` (attribution equals the curve — the binary-risk
    convention), ``decision_boundary`` (0.5), ``expert`` (the curve's own
    value at a domain value ``baseline_param``), ``curve_mean`` (the
    uniform curve average, making attributions mean-zero).
    """
    if baseline_kind == "zero":
        value = 0.0
    elif baseline_kind == "decision_boundary":
        value = 0.5
    elif baseline_kind == "expert":
        if baseline_param is None:
            raise InputError("expert baseline needs a feature value")
        _check_domain(map_.feature, baseline_param)
        if map_.feature.kind == "continuous" and not (map_.grid[0] <= baseline_param <= map_.grid[-1]):
            raise InputError(f"expert value {baseline_param!r} outside the estimated grid range")
        value = float(map_.mu_at(baseline_param))
    elif baseline_kind == "curve_mean":
        value = float(map_.mu.mean())
    else:
        raise InputError(f"unknown baseline kind {baseline_kind!r}")
    return AttributionMap(map_.feature, map_.feature_index, map_.grid.copy(), map_.mu.copy(),
                          baseline_kind=baseline_kind, baseline_value=value,
                          gradient_tau=map_.gradient_tau)


def write_curve_csv(map_: AttributionMap, path) -> None:
    """Per-grid-point CSV (value, mu, cfa, gradient_label).

    The gradient label on a row describes the step from that grid point to
    the next; the last row's label is empty.
    """
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["value", "mu", "cfa", "gradient_label"])
        labels = list(map_.gradient_labels) + [""]
        for x, m, c, lab in zip(map_.grid, map_.mu, map_.cfa, labels):
            writer.writerow([repr(float(x)), repr(float(m)), repr(float(c)), lab])


def write_curve_svg(map_: AttributionMap, path, width: int = 480, height: int = 320) -> None:
    """Minimal SVG line chart: axes, the response curve, the baseline line."""
    pad = 48
    x0, x1 = float(map_.grid[0]), float(map_.grid[-1])
    ys = np.concatenate([map_.mu, [map_.baseline_value]])
    y0, y1 = float(ys.min()), float(ys.max())
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 == y0:
        y0, y1 = y0 - 0.5, y1 + 0.5
    span_x, span_y = x1 - x0, y1 - y0
    y0 -= 0.08 * span_y
    y1 += 0.08 * span_y

    def sx(v):
        return pad + (v - x0) / (x1 - x0) * (width - 2 * pad)

    def sy(v):
        return height - pad - (v - y0) / (y1 - y0) * (height - 2 * pad)

    pts = " ".join(f"{sx(x):.2f},{sy(m):.2f}" for x, m in zip(map_.grid, map_.mu))
    base_y = sy(map_.baseline_value)
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" y2="{height - pad}" stroke="black"/>',
        f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height - pad}" stroke="black"/>',
        f'<line x1="{pad}" y1="{base_y:.2f}" x2="{width - pad}" y2="{base_y:.2f}" '
        'stroke="gray" stroke-dasharray="4 3"/>',
        f'<polyline points="{pts}" fill="none" stroke="crimson" stroke-width="1.5"/>',
        f'<text x="{pad}" y="{height - pad + 16}" font-size="10">{x0:.3g}</text>',
        f'<text x="{width - pad - 20}" y="{height - pad + 16}" font-size="10">{x1:.3g}</text>',
        f'<text x="4" y="{sy(y1 - 0.08 * span_y):.2f}" font-size="10">{y1 - 0.08 * span_y:.3g}</text>',
        f'<text x="4" y="{sy(y0 + 0.08 * span_y):.2f}" font-size="10">{y0 + 0.08 * span_y:.3g}</text>',
        f'<text x="{width / 2 - 30:.0f}" y="14" font-size="11">{map_.feature.name}</text>',
        "</svg>",
    ]
    Path(path).write_text("\n".join(parts) + "\n", encoding="utf-8")
