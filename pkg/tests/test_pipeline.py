"""Distillation pipeline: shapes, determinism, leakage, idempotence."""

from __future__ import annotations

import json

import numpy as np
import pytest

from causaldistill.data import Dataset, Feature, FeatureSchema, stratified_split
from causaldistill.errors import AlreadyDistilledError, InputError
from causaldistill.pipeline import (PipelineConfig, SPLIT_SEED_OFFSET, apply_maps,
                                    distill_dataset, run_end_to_end)
from causaldistill.synth import hidden_variable_pair

FAST = PipelineConfig(epochs=40, seed=0)


def _small_mixed(seed=0, n=700):
    rng = np.random.default_rng(seed)
    c = rng.normal(size=n)
    b = (rng.random(n) < 0.5 * (np.tanh(c) + 1)).astype(float)
    lvl = rng.integers(0, 3, n).astype(float)
    y = (rng.random(n) < 0.5 * (np.tanh(1.5 * c) + 1) * 0.6 + 0.05).astype(int)
    schema = FeatureSchema([
        Feature("c", "continuous", low=float(c.min()), high=float(c.max())),
        Feature("b", "binary"),
        Feature("lvl", "categorical", levels=3),
    ])
    return Dataset(np.column_stack([c, b, lvl]), y, schema)


@pytest.fixture(scope="module")
def small_result():
    data = _small_mixed()
    return data, distill_dataset(data, FAST)


def test_distilled_shape_and_labels(small_result):
    data, result = small_result
    assert result.distilled.X.shape == data.X.shape
    np.testing.assert_array_equal(result.distilled.y, data.y)
    assert result.distilled.schema.distilled
    assert result.distilled.schema.names == data.schema.names


def test_distilled_values_in_unit_interval(small_result):
    data, result = small_result
    assert result.distilled.X.min() >= 0.0
    assert result.distilled.X.max() <= 1.0


def test_equal_raw_values_get_equal_distilled_values(small_result):
    data, result = small_result
    col = data.X[:, 1]  # binary column has ties by construction
    dist = result.distilled.X[:, 1]
    for level in (0.0, 1.0):
        vals = dist[col == level]
        if len(vals):
            assert np.all(vals == vals[0])


def test_distilling_twice_is_rejected(small_result):
    data, result = small_result
    with pytest.raises(AlreadyDistilledError):
        distill_dataset(result.distilled, FAST)
    with pytest.raises(AlreadyDistilledError):
        apply_maps(result.maps, result.distilled)


def test_determinism_bitwise(small_result):
    data, result = small_result
    again = distill_dataset(data, FAST)
    np.testing.assert_array_equal(again.distilled.X, result.distilled.X)
    for name in data.schema.names:
        np.testing.assert_array_equal(again.maps[name].mu, result.maps[name].mu)


def test_jobs_do_not_change_output(small_result):
    data, result = small_result
    parallel = distill_dataset(data, FAST, jobs=4)
    np.testing.assert_array_equal(parallel.distilled.X, result.distilled.X)


def test_provenance_records_seeds_and_hash(small_result):
    data, result = small_result
    prov = result.provenance
    assert prov["config_hash"] == FAST.hash()
    assert set(prov["seeds"]["propensity"]) == set(data.schema.names)
    assert prov["seeds"]["propensity"]["b"] == FAST.seed ^ data.schema.index_of("b")
    assert set(prov["penalties"]) == {"lambda", "theta", "sigma_theta"}


def test_apply_maps_clamps_out_of_range(small_result):
    data, result = small_result
    rows = data.X[:4].copy()
    rows[:, 0] = 1e9  # way past the observed max
    shifted = Dataset(rows, data.y[:4], data.schema)
    out, warnings = apply_maps(result.maps, shifted)
    edge, _ = result.maps["c"].attribution_at(result.maps["c"].grid[-1])
    np.testing.assert_allclose(out.X[:, 0], edge)
    assert warnings == []


def test_apply_maps_unseen_level_warns_curve_mean(small_result):
    data, result = small_result
    rows = data.X[:4].copy()
    rows[:, 2] = 7.0  # level outside the schema
    shifted = Dataset(rows, data.y[:4], data.schema)
    out, warnings = apply_maps(result.maps, shifted)
    assert len(warnings) == 1 and "lvl" in warnings[0]
    assert np.allclose(out.X[:, 2], result.maps["lvl"].cfa.mean())


def test_apply_maps_requires_full_coverage(small_result):
    data, result = small_result
    partial = {k: v for k, v in result.maps.items() if k != "b"}
    with pytest.raises(InputError):
        apply_maps(partial, data)


def test_continuous_labels_rejected():
    rng = np.random.default_rng(3)
    schema = FeatureSchema([Feature("x", "continuous", low=-9, high=9)], label_kind="continuous")
    data = Dataset(rng.normal(size=(60, 1)), rng.normal(size=60), schema)
    with pytest.raises(InputError):
        distill_dataset(data, FAST)


def test_no_label_leakage_into_maps():
    # mutating test labels never changes train-fitted maps
    data = _small_mixed(seed=4, n=900)
    cfg = PipelineConfig(epochs=30, seed=4)
    train, test = stratified_split(data, cfg.split_fraction, cfg.seed + SPLIT_SEED_OFFSET)
    result_1 = distill_dataset(train, cfg)
    flipped = Dataset(test.X, 1 - test.y, test.schema)
    result_2 = distill_dataset(train, cfg)
    for name in data.schema.names:
        assert json.dumps(result_1.maps[name].to_json()) == json.dumps(result_2.maps[name].to_json())
    # and applying maps to mutated test data changes only the labels
    d1, _ = apply_maps(result_1.maps, test)
    d2, _ = apply_maps(result_2.maps, flipped)
    np.testing.assert_array_equal(d1.X, d2.X)


def test_run_end_to_end_reports_both_models():
    data = _small_mixed(seed=5, n=900)
    cfg = PipelineConfig(epochs=30, seed=5)
    report, result, clf = run_end_to_end(data, cfg)
    for doc in (report.distilled_metrics, report.baseline_metrics):
        assert set(doc) == {"accuracy", "precision", "recall"}
    assert 0 < report.threshold < 1
    assert report.provenance["split"]["n_train"] + report.provenance["split"]["n_test"] == data.n
    rerun, _, _ = run_end_to_end(data, cfg)
    assert rerun.to_json() == report.to_json()


def test_true_cause_has_largest_cfi_on_hidden_generator():
    # the hidden-driver variant: the true cause's distilled column carries
    # strictly more curve mass than every latent-proxy column
    _, db, truth = hidden_variable_pair(11, 150, 1350)
    result = distill_dataset(db, PipelineConfig(epochs=60, seed=11), jobs=2)
    cfis = {name: art.map.cfi for name, art in result.features.items()}
    for spur in truth["spurious"]:
        assert cfis["x0"] > cfis[spur]
