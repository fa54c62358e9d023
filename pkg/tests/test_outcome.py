"""Outcome screening: penalties, predictive weights, degenerate cases."""

from __future__ import annotations

import csv

import numpy as np
import pytest

from causaldistill import nn
from causaldistill.data import Dataset, Feature, FeatureSchema
from causaldistill.errors import DegenerateLabelsError, InputError
from causaldistill.outcome import (OutcomeFit, default_penalty, fit_outcome,
                                   predict_outcome, write_weights_csv)
from causaldistill.synth import role_labeled_benchmark


def _continuous_schema(d):
    return FeatureSchema([Feature(f"x{j}", "continuous", low=-9, high=9) for j in range(d)])


def _signal_dataset(seed=0, n=2000, d=5):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, d))
    y = (X[:, 0] > 0).astype(int)
    return Dataset(X, y, _continuous_schema(d))


def _noise_dataset(seed=0, n=1500, d=4):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, d))
    y = (rng.random(n) < 0.3).astype(int)
    return Dataset(X, y, _continuous_schema(d))


def test_pure_noise_with_strong_penalty_screens_everything():
    data = _noise_dataset()
    fit = fit_outcome(data, nn.TrainConfig(penalty=0.5, seed=0))
    assert np.all(fit.predictive_weights == 0.0)
    assert not fit.selected_mask.any()
    # prediction falls back to the (logit of the) prevalence
    probs = predict_outcome(fit, data.X)
    assert np.allclose(probs, probs[0])
    assert abs(probs[0] - data.y.mean()) < 0.02
    # constant-model log-loss is not beaten but also not exceeded materially
    p = np.clip(probs, 1e-12, 1 - 1e-12)
    model_ll = -np.mean(data.y * np.log(p) + (1 - data.y) * np.log(1 - p))
    prev = data.y.mean()
    const_ll = -(prev * np.log(prev) + (1 - prev) * np.log(1 - prev))
    assert model_ll <= const_ll + 1e-3


def test_signal_feature_selected_noise_zeroed_under_default():
    data = _signal_dataset(seed=0)
    fit = fit_outcome(data, seed=0)
    w = fit.predictive_weights
    assert w[0] == w.max() > 0
    assert np.all(w[1:] == 0.0)
    assert list(fit.selected_mask) == [True, False, False, False, False]


def test_zero_penalty_selects_everything():
    data = _noise_dataset(seed=1, n=400)
    fit = fit_outcome(data, nn.TrainConfig(penalty=0.0, seed=1, epochs=30))
    assert fit.selected_mask.all()


def test_training_log_loss_beats_constant_predictor():
    data = _signal_dataset(seed=2, n=1200)
    fit = fit_outcome(data, seed=2)
    p = np.clip(predict_outcome(fit, data.X), 1e-12, 1 - 1e-12)
    model_ll = -np.mean(data.y * np.log(p) + (1 - data.y) * np.log(1 - p))
    prev = data.y.mean()
    const_ll = -(prev * np.log(prev) + (1 - prev) * np.log(1 - prev))
    assert model_ll <= const_ll


def test_single_class_labels_rejected():
    data = _noise_dataset(seed=3, n=200)
    flat = Dataset(data.X, np.zeros(data.n, dtype=int), data.schema)
    with pytest.raises(DegenerateLabelsError):
        fit_outcome(flat, seed=0)


def test_continuous_labels_rejected():
    rng = np.random.default_rng(0)
    schema = FeatureSchema([Feature("x", "continuous", low=-9, high=9)], label_kind="continuous")
    data = Dataset(rng.normal(size=(50, 1)), rng.normal(size=50), schema)
    with pytest.raises(InputError):
        fit_outcome(data, seed=0)


def test_dead_feature_perturbation_never_changes_prediction():
    data = _signal_dataset(seed=4)
    fit = fit_outcome(data, seed=4)
    dead = np.flatnonzero(~fit.selected_mask)
    assert dead.size > 0
    rng = np.random.default_rng(4)
    rows = data.X[:50].copy()
    base = predict_outcome(fit, rows)
    rows[:, dead] = rng.normal(0, 100, size=(50, dead.size))
    np.testing.assert_array_equal(predict_outcome(fit, rows), base)


def test_prediction_matches_underlying_forward():
    data = _signal_dataset(seed=5, n=600)
    fit = fit_outcome(data, seed=5)
    rows = data.X[:7]
    direct, _ = nn.forward(fit.net, fit.encoder.encode(rows))
    np.testing.assert_array_equal(predict_outcome(fit, rows), direct)


def test_screening_separates_roles():
    # outcome-predictive covariates (confounder/adjustment) hold nearly all
    # of the weight mass; instrument/spurious weights are marginal
    data, spec = role_labeled_benchmark(5000, 11)
    fit = fit_outcome(data, seed=11)
    w = dict(zip(fit.feature_names, fit.predictive_weights))
    cp = np.mean([w[n] for n in spec.of_role("confounder", "adjustment")])
    is_ = np.mean([w[n] for n in spec.of_role("instrumental", "spurious")])
    assert is_ <= 0.05 * cp


def test_weights_csv_round_trip(tmp_path):
    data = _signal_dataset(seed=6, n=400)
    fit = fit_outcome(data, nn.TrainConfig(penalty=0.02, seed=6, epochs=40))
    path = tmp_path / "weights.csv"
    write_weights_csv(fit, path)
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["feature", "weight"]
    assert [r[0] for r in rows[1:]] == list(fit.feature_names)
    np.testing.assert_array_equal([float(r[1]) for r in rows[1:]], fit.predictive_weights)


def test_outcome_fit_serialization(tmp_path):
    data = _signal_dataset(seed=7, n=400)
    fit = fit_outcome(data, nn.TrainConfig(penalty=0.02, seed=7, epochs=30))
    path = tmp_path / "outcome.json"
    fit.save(path)
    loaded = OutcomeFit.load(path)
    np.testing.assert_array_equal(loaded.predictive_weights, fit.predictive_weights)
    rows = data.X[:5]
    np.testing.assert_array_equal(predict_outcome(loaded, rows), predict_outcome(fit, rows))


def test_default_penalty_schedule():
    assert default_penalty(5000, 9) == pytest.approx(0.01 * 5000**-0.25 * 4.0 * 9)
    assert default_penalty(10000, 4) < default_penalty(5000, 4)
