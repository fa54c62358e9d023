"""Propensity models: adaptive weights, heads, scores, representations, MDN."""

from __future__ import annotations

import json
import math

import numpy as np
import pytest

from causaldistill import nn
from causaldistill.data import Dataset, Feature, FeatureSchema
from causaldistill.errors import DegenerateFeatureError, InputError
from causaldistill.outcome import fit_outcome
from causaldistill.propensity import (AdaptiveWeights, MixtureDensityParams, PropensityFit,
                                      adaptive_weights, default_theta, fit_all_propensities,
                                      fit_propensity, mdn_nll, mdn_nll_grad, mdn_pdf,
                                      mixture_at, propensity_representation, propensity_score,
                                      save_propensity_models)
from causaldistill.synth import role_labeled_benchmark


# -- adaptive weights -----------------------------------------------------------

def test_adaptive_weight_inverse_norm():
    w = adaptive_weights(np.array([1.0, 2.0]), 0, gamma=1.0)
    assert w.weights[0] == 0.5  # covariate with norm 2


def test_adaptive_weight_cap_on_zero_norm():
    w = adaptive_weights(np.array([1.0, 0.0]), 0, w_max=1e6)
    assert w.weights[0] == 1e6


def test_adaptive_weight_gamma_power():
    w = adaptive_weights(np.array([1.0, 0.5]), 0, gamma=2.0)
    assert w.weights[0] == pytest.approx(4.0)


def test_adaptive_weights_exclude_target_and_keep_names():
    w = adaptive_weights(np.array([3.0, 1.0, 2.0]), 1, names=("a", "b", "c"))
    assert w.covariate_names == ("a", "c")
    np.testing.assert_allclose(w.weights, [1 / 3.0, 0.5])


def test_adaptive_weights_monotone_in_norm():
    norms = np.array([0.1, 0.5, 1.0, 3.0, 0.0])
    w = adaptive_weights(np.concatenate([norms, [1.0]]), 5)
    ordered = w.weights[np.argsort(norms)]
    assert np.all(np.diff(ordered) <= 0)


def test_adaptive_weights_validation():
    with pytest.raises(InputError):
        adaptive_weights(np.array([1.0]), 5)
    with pytest.raises(InputError):
        adaptive_weights(np.array([1.0, 1.0]), 0, gamma=0.0)


# -- mixture density ---------------------------------------------------------------

def test_standard_normal_density_value():
    params = MixtureDensityParams([1.0], [0.0], [1.0])
    assert mdn_pdf(params, 0.0) == pytest.approx(0.3989422804, abs=1e-9)


def test_single_gaussian_nll_closed_form():
    params = MixtureDensityParams([1.0], [0.0], [1.0])
    assert mdn_nll(params, 0.0) == pytest.approx(0.5 * math.log(2 * math.pi), abs=1e-12)


def test_duplicate_components_collapse():
    single = MixtureDensityParams([1.0], [0.3], [0.7])
    double = MixtureDensityParams([0.5, 0.5], [0.3, 0.3], [0.7, 0.7])
    x = 0.9
    assert mdn_pdf(double, x) == pytest.approx(mdn_pdf(single, x), rel=1e-12)


def test_mixture_nll_log_sum_bound():
    params = MixtureDensityParams([0.2, 0.5, 0.3], [-1.0, 0.0, 2.0], [0.5, 1.0, 0.8])
    x = 0.4
    nll = mdn_nll(params, x)
    for m in range(3):
        comp = MixtureDensityParams([1.0], [params.means[m]], [params.sds[m]])
        bound = -math.log(params.weights[m]) + mdn_nll(comp, x)
        assert nll <= bound + 1e-12


def test_mdn_nll_gradient_matches_finite_differences():
    params = MixtureDensityParams([0.3, 0.7], [-0.5, 1.0], [0.6, 1.4])
    x = 0.25
    d_w, d_mu, d_sd = mdn_nll_grad(params, x)
    h = 1e-6
    for field, grad in (("weights", d_w), ("means", d_mu), ("sds", d_sd)):
        base = getattr(params, field).copy()
        for i in range(2):
            plus, minus = base.copy(), base.copy()
            plus[i] += h
            minus[i] -= h
            # re-normalization is deliberately skipped: the gradient is of the raw formula
            p_plus = MixtureDensityParams.__new__(MixtureDensityParams)
            p_minus = MixtureDensityParams.__new__(MixtureDensityParams)
            for obj, vec in ((p_plus, plus), (p_minus, minus)):
                object.__setattr__(obj, "weights", params.weights if field != "weights" else vec)
                object.__setattr__(obj, "means", params.means if field != "means" else vec)
                object.__setattr__(obj, "sds", params.sds if field != "sds" else vec)
            num = (mdn_nll(p_plus, x) - mdn_nll(p_minus, x)) / (2 * h)
            denom = max(abs(num), abs(grad[i]), 1e-8)
            assert abs(num - grad[i]) / denom < 1e-4


def test_mixture_validation():
    with pytest.raises(InputError):
        MixtureDensityParams([0.5, 0.6], [0.0, 0.0], [1.0, 1.0])
    with pytest.raises(InputError):
        MixtureDensityParams([1.0], [0.0], [0.0])


def test_mdn_density_integrates_to_one():
    params = MixtureDensityParams([0.4, 0.6], [-1.0, 2.0], [0.5, 1.5])
    lo = float(params.means.min() - 8 * params.sds.max())
    hi = float(params.means.max() + 8 * params.sds.max())
    xs = np.linspace(lo, hi, 20001)
    dens = np.array([mdn_pdf(params, x) for x in xs])
    assert abs(np.trapezoid(dens, xs) - 1.0) < 1e-3


# -- propensity fitting ----------------------------------------------------------------

def _mixed_dataset(seed=0, n=3000):
    rng = np.random.default_rng(seed)
    c = rng.normal(size=n)
    b = (rng.random(n) < 0.5 * (np.tanh(c) + 1)).astype(float)  # binary driven by c
    z = c + rng.normal(0, 0.8, n)                                # continuous driven by c
    lvl = rng.integers(0, 3, n).astype(float)                    # independent categorical
    y = (rng.random(n) < 0.3).astype(int)
    schema = FeatureSchema([
        Feature("b", "binary"),
        Feature("c", "continuous", low=float(c.min()), high=float(c.max())),
        Feature("z", "continuous", low=float(z.min()), high=float(z.max())),
        Feature("lvl", "categorical", levels=3),
    ])
    return Dataset(np.column_stack([b, c, z, lvl]), y, schema)


def _uniform_weights(data, j):
    return adaptive_weights(np.ones(data.d), j, data.schema.names)


def test_head_matches_target_kind():
    data = _mixed_dataset()
    cfg = nn.TrainConfig(epochs=15, seed=0, penalty=0.0)
    assert fit_propensity(data, 0, _uniform_weights(data, 0), cfg).head_kind == "softmax"
    assert fit_propensity(data, 2, _uniform_weights(data, 2), cfg).head_kind == "mdn"
    fit = fit_propensity(data, 3, _uniform_weights(data, 3), cfg)
    assert fit.head_kind == "softmax" and fit.net.head.size == 3


def test_softmax_scores_sum_to_one():
    data = _mixed_dataset()
    fit = fit_propensity(data, 3, _uniform_weights(data, 3), nn.TrainConfig(epochs=10, seed=1))
    row = np.delete(data.X[0], 3)
    total = sum(propensity_score(fit, lvl, row) for lvl in (0.0, 1.0, 2.0))
    assert total == pytest.approx(1.0, abs=1e-9)


def test_score_outside_domain_rejected():
    data = _mixed_dataset()
    fit = fit_propensity(data, 0, _uniform_weights(data, 0), nn.TrainConfig(epochs=5, seed=2))
    with pytest.raises(InputError):
        propensity_score(fit, 2.0, np.delete(data.X[0], 0))


def test_constant_target_rejected():
    data = _mixed_dataset()
    flat = Dataset(np.column_stack([np.ones(data.n), data.X[:, 1:]]), data.y, data.schema)
    with pytest.raises(DegenerateFeatureError):
        fit_propensity(flat, 0, _uniform_weights(flat, 0), nn.TrainConfig(epochs=5, seed=0))


def test_capped_covariates_end_with_zero_groups():
    data = _mixed_dataset(seed=3)
    pw = np.array([1.0, 1.0, 0.0, 0.0])  # z, lvl get the cap when predicting b
    w = adaptive_weights(pw, 0, data.schema.names)
    fit = fit_propensity(data, 0, w, nn.TrainConfig(epochs=20, seed=3,
                                                    penalty=default_theta(data.n)))
    norms = nn.group_norms(fit.net)
    by = dict(zip(fit.covariate_names, norms))
    assert by["z"] == 0.0 and by["lvl"] == 0.0
    assert by["c"] > 0.0


def test_all_capped_reduces_to_marginal():
    # every covariate priced out: the model can only express the marginal
    data = _mixed_dataset(seed=4, n=5000)
    w = AdaptiveWeights(0, data.schema.names[1:], np.full(3, 1e6), 1.0, 1e6)
    fit = fit_propensity(data, 0, w, nn.TrainConfig(epochs=30, seed=4,
                                                    penalty=default_theta(data.n)))
    assert np.all(nn.group_norms(fit.net) == 0.0)
    marginal = data.X[:, 0].mean()
    rng = np.random.default_rng(4)
    rows = np.delete(data.X[rng.integers(0, data.n, 50)], 0, axis=1)
    scores = propensity_score(fit, 1.0, rows)
    # total variation between the predicted and empirical marginal
    assert np.abs(scores - marginal).max() < 0.02


def test_binary_copy_of_confounder_gets_extreme_scores():
    rng = np.random.default_rng(5)
    n = 4000
    c = (rng.random(n) < 0.5).astype(float)
    target = c.copy()  # deterministic copy
    other = rng.normal(size=n)
    schema = FeatureSchema([
        Feature("t", "binary"), Feature("c", "binary"),
        Feature("o", "continuous", low=float(other.min()), high=float(other.max())),
    ])
    data = Dataset(np.column_stack([target, c, other]), np.zeros(n, dtype=int), schema)
    w = adaptive_weights(np.array([1.0, 1.0, 1.0]), 0, schema.names)
    fit = fit_propensity(data, 0, w, nn.TrainConfig(epochs=60, seed=5))
    rows_c1 = np.column_stack([np.ones(5), rng.normal(size=5)])
    rows_c0 = np.column_stack([np.zeros(5), rng.normal(size=5)])
    assert np.all(propensity_score(fit, 1.0, rows_c1) > 0.95)
    assert np.all(propensity_score(fit, 1.0, rows_c0) < 0.05)


def test_theta_zero_leaves_no_exact_zeros():
    data = _mixed_dataset(seed=6, n=800)
    fit = fit_propensity(data, 1, _uniform_weights(data, 1),
                         nn.TrainConfig(epochs=10, seed=6, penalty=0.0))
    assert np.all(nn.group_norms(fit.net) > 0.0)


def test_mdn_density_scores_on_raw_scale():
    data = _mixed_dataset(seed=7)
    fit = fit_propensity(data, 2, _uniform_weights(data, 2), nn.TrainConfig(epochs=30, seed=7))
    row = np.delete(data.X[0], 2)
    params = mixture_at(fit, row)
    x = float(data.X[0, 2])
    assert propensity_score(fit, x, row) == pytest.approx(mdn_pdf(params, x), rel=1e-9)


# -- representation ---------------------------------------------------------------------

def test_zeroed_net_representation_is_zero():
    data = _mixed_dataset(seed=8, n=400)
    fit = fit_propensity(data, 0, _uniform_weights(data, 0), nn.TrainConfig(epochs=3, seed=8))
    for w in fit.net.weights:
        w[:] = 0.0
    for a in fit.net.intercepts:
        a[:] = 0.0
    rep = propensity_representation(fit, np.delete(data.X[0], 0))
    np.testing.assert_array_equal(rep, np.zeros(fit.representation_dim))


def test_representation_width_matches_configured_dim():
    data = _mixed_dataset(seed=9, n=400)
    fit = fit_propensity(data, 1, _uniform_weights(data, 1),
                         nn.TrainConfig(epochs=3, seed=9), rep_dim=6)
    rep = propensity_representation(fit, np.delete(data.X[:8], 1, axis=1))
    assert rep.shape == (8, 6)


def test_removed_covariate_never_moves_representation():
    data = _mixed_dataset(seed=10)
    pw = np.array([1.0, 1.0, 0.0, 1.0])  # cap z when predicting b
    w = adaptive_weights(pw, 0, data.schema.names)
    fit = fit_propensity(data, 0, w, nn.TrainConfig(epochs=15, seed=10,
                                                    penalty=default_theta(data.n)))
    row = np.delete(data.X[0], 0).copy()
    base = propensity_representation(fit, row)
    z_pos = fit.covariate_names.index("z")
    row[z_pos] = 1e3
    np.testing.assert_array_equal(propensity_representation(fit, row), base)


# -- calibration and selection properties ---------------------------------------------------

def test_binary_propensity_decile_calibration():
    data, _ = role_labeled_benchmark(5000, 21)
    j = data.schema.index_of("t")
    fit = fit_propensity(data, j, _uniform_weights(data, j),
                         nn.TrainConfig(seed=21, penalty=default_theta(data.n)))
    rows = np.delete(data.X, j, axis=1)
    scores = propensity_score(fit, 1.0, rows)
    t = data.X[:, j]
    edges = np.quantile(scores, np.linspace(0, 1, 11))
    gaps = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        cell = (scores >= lo) & (scores <= hi)
        if cell.sum() >= 50:
            gaps.append(abs(scores[cell].mean() - t[cell].mean()))
    assert np.mean(gaps) <= 0.05


def test_variable_selection_property():
    # summed propensity group norms over instrument+spurious covariates are
    # marginal next to confounder+adjustment ones after adaptive fitting
    data, spec = role_labeled_benchmark(5000, 22)
    ofit = fit_outcome(data, seed=22)
    j = data.schema.index_of("t")
    w = adaptive_weights(ofit.predictive_weights, j, data.schema.names)
    fit = fit_propensity(data, j, w, nn.TrainConfig(seed=22, penalty=default_theta(data.n)))
    by = dict(zip(fit.covariate_names, nn.group_norms(fit.net)))
    is_sum = sum(by[n] for n in spec.of_role("instrumental", "spurious"))
    cp_sum = sum(by[n] for n in spec.of_role("confounder", "adjustment"))
    assert is_sum <= 0.05 * cp_sum


# -- persistence -------------------------------------------------------------------------

def test_propensity_fit_round_trip(tmp_path):
    data = _mixed_dataset(seed=11, n=500)
    fit = fit_propensity(data, 2, _uniform_weights(data, 2), nn.TrainConfig(epochs=5, seed=11))
    path = tmp_path / "p.json"
    fit.save(path)
    loaded = PropensityFit.load(path)
    row = np.delete(data.X[0], 2)
    assert propensity_score(loaded, 0.0, row) == propensity_score(fit, 0.0, row)
    np.testing.assert_array_equal(propensity_representation(loaded, row),
                                  propensity_representation(fit, row))


def test_manifest_lists_every_feature(tmp_path):
    data = _mixed_dataset(seed=12, n=400)
    cfg = lambda j: nn.TrainConfig(epochs=3, seed=12 ^ j, penalty=default_theta(data.n))
    fits = fit_all_propensities(data, np.ones(data.d), config_for=cfg)
    manifest = save_propensity_models(fits, tmp_path)
    doc = json.loads(manifest.read_text())
    assert set(doc["models"]) == set(data.schema.names)
    for name, entry in doc["models"].items():
        assert (tmp_path / entry["file"]).exists()
        assert entry["seed"] == 12 ^ data.schema.index_of(name)


def test_parallel_fits_identical_to_serial():
    data = _mixed_dataset(seed=13, n=600)
    cfg = lambda j: nn.TrainConfig(epochs=4, seed=13 ^ j, penalty=default_theta(data.n))
    serial = fit_all_propensities(data, np.ones(data.d), config_for=cfg, jobs=1)
    parallel = fit_all_propensities(data, np.ones(data.d), config_for=cfg, jobs=4)
    for a, b in zip(serial, parallel):
        for wa, wb in zip(a.net.weights, b.net.weights):
            np.testing.assert_array_equal(wa, wb)
