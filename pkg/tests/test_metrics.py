"""Metrics, effect errors, and the statistical tests against independent oracles."""

from __future__ import annotations

import itertools
import math

import numpy as np
import pytest
from scipy import special
from scipy import stats as sps

from causaldistill.data import Dataset, Feature, FeatureSchema
from causaldistill.errors import InputError
from causaldistill.metrics import (ClassificationMetrics, ConfusionCounts, EffectReport,
                                   ate_error, chi_square_test, confusion_metrics,
                                   mate_error, significance_screen, welch_t_test)
from causaldistill.stats import (chi_square_sf, reg_inc_beta, reg_upper_gamma,
                                 student_t_two_sided_p)


# -- confusion metrics -----------------------------------------------------------

def test_confusion_metrics_basic():
    m = confusion_metrics(ConfusionCounts(8, 2, 2, 88))
    assert m == ClassificationMetrics(0.96, 0.8, 0.8)


def test_all_negative_predictor_has_absent_precision():
    # 10 positives among 100; the degenerate always-negative predictor
    m = confusion_metrics(ConfusionCounts(tp=0, fp=0, fn=10, tn=90))
    assert m.accuracy == 0.9
    assert m.recall == 0.0
    assert m.precision is None


def test_perfect_predictor():
    m = confusion_metrics(ConfusionCounts(10, 0, 0, 90))
    assert (m.accuracy, m.precision, m.recall) == (1.0, 1.0, 1.0)


def test_empty_table_rejected():
    with pytest.raises(InputError):
        confusion_metrics(ConfusionCounts(0, 0, 0, 0))


def test_counts_from_predictions():
    c = ConfusionCounts.from_predictions([1, 1, 0, 0], [1, 0, 1, 0])
    assert (c.tp, c.fn, c.fp, c.tn) == (1, 1, 1, 1)


# -- effect errors ----------------------------------------------------------------

def test_ate_error_examples():
    assert ate_error(2.0, 1.5) == 0.5
    assert ate_error(3.3, 3.3) == 0.0
    assert ate_error(1.0, 4.0) == ate_error(4.0, 1.0)


def test_mate_error_single_pair():
    assert mate_error({(1, 0): 0.7}, 2) == 0.7


def test_mate_error_three_levels():
    assert mate_error({(1, 0): 1.0, (2, 0): 2.0, (2, 1): 3.0}, 3) == 2.0


def test_mate_error_zero():
    pairs = {(i, j): 0.0 for i in range(4) for j in range(i)}
    assert mate_error(pairs, 4) == 0.0


def test_mate_error_missing_pair_rejected():
    with pytest.raises(InputError):
        mate_error({(1, 0): 1.0, (2, 0): 2.0}, 3)


def test_mate_error_duplicate_orientation_rejected():
    with pytest.raises(InputError):
        mate_error({(1, 0): 1.0, (0, 1): 1.0, (2, 0): 0.0}, 3)


@pytest.mark.parametrize("k", [2, 3, 4, 8])
def test_mate_error_equals_brute_force_enumeration(k):
    rng = np.random.default_rng(k)
    true_means = rng.normal(size=k)
    est_means = rng.normal(size=k)
    report = EffectReport.from_means(true_means, est_means)
    # oracle: enumerate all ordered pairs; fsum makes both sides exactly
    # rounded, so equality is exact (0 tolerance)
    errors = [
        abs((true_means[i] - true_means[j]) - (est_means[i] - est_means[j]))
        for i, j in itertools.permutations(range(k), 2)
    ]
    brute = math.fsum(errors) / (k * (k - 1))
    assert report.aggregate == brute
    assert report.aggregate == mate_error(report.pair_errors, k)
    assert len(report.pair_errors) == k * (k - 1) // 2


# -- Welch t test -------------------------------------------------------------------

def test_welch_identical_samples():
    r = welch_t_test([1.0, 2.0, 3.0], [1.0, 2.0, 3.0])
    assert r.statistic == 0.0 and r.p_value == 1.0


def test_welch_closed_form_example():
    # means 0 vs 1, both sd exactly 1, n=100 each -> t = -1/sqrt(2/100)
    a = np.linspace(-1, 1, 100)
    a = (a - a.mean()) / a.std(ddof=1)
    b = a + 1.0
    r = welch_t_test(a, b)
    assert r.statistic == pytest.approx(-1.0 / math.sqrt(2.0 / 100.0), abs=1e-6)
    assert r.statistic == pytest.approx(-7.0710678, abs=1e-6)


def test_welch_swap_negates_t_preserves_p():
    rng = np.random.default_rng(5)
    a, b = rng.normal(0, 1, 30), rng.normal(0.5, 2, 40)
    r1, r2 = welch_t_test(a, b), welch_t_test(b, a)
    assert r1.statistic == -r2.statistic
    assert r1.p_value == r2.p_value


def test_welch_matches_scipy():
    rng = np.random.default_rng(6)
    for _ in range(20):
        a = rng.normal(0, 1, rng.integers(5, 60))
        b = rng.normal(0.3, 1.7, rng.integers(5, 60))
        ours = welch_t_test(a, b)
        ref = sps.ttest_ind(a, b, equal_var=False)
        assert ours.statistic == pytest.approx(ref.statistic, rel=1e-12)
        assert ours.p_value == pytest.approx(ref.pvalue, abs=1e-10)


def test_welch_degenerate_inputs():
    with pytest.raises(InputError):
        welch_t_test([1.0], [1.0, 2.0])
    with pytest.raises(InputError):
        welch_t_test([2.0, 2.0], [3.0, 3.0])


# -- chi-square test ------------------------------------------------------------------

def test_chi_square_uniform_table():
    r = chi_square_test([[20, 20], [20, 20]])
    assert r.statistic == 0.0 and r.p_value == 1.0 and r.dof == 1.0


def test_chi_square_hand_computed():
    r = chi_square_test([[30, 10], [10, 30]])
    assert r.statistic == pytest.approx(20.0, abs=1e-12)
    assert r.dof == 1.0


def test_chi_square_dof():
    table = np.ones((3, 4))
    assert chi_square_test(table).dof == 6.0


def test_chi_square_zero_margin_rejected():
    with pytest.raises(InputError):
        chi_square_test([[0, 0], [5, 5]])
    with pytest.raises(InputError):
        chi_square_test([[5, 0], [5, 0]])


def test_chi_square_matches_scipy():
    rng = np.random.default_rng(7)
    for _ in range(20):
        table = rng.integers(1, 50, size=(rng.integers(2, 5), rng.integers(2, 5)))
        ours = chi_square_test(table)
        stat, p, dof, _ = sps.chi2_contingency(table, correction=False)
        assert ours.statistic == pytest.approx(stat, rel=1e-12)
        assert ours.dof == dof
        assert ours.p_value == pytest.approx(p, abs=1e-10)


# -- internal special functions -------------------------------------------------------

def test_incomplete_beta_accuracy():
    rng = np.random.default_rng(8)
    for _ in range(300):
        a, b = rng.uniform(0.3, 80, 2)
        x = rng.random()
        assert abs(reg_inc_beta(a, b, x) - special.betainc(a, b, x)) < 1e-8


def test_incomplete_gamma_accuracy():
    rng = np.random.default_rng(9)
    for _ in range(300):
        a = rng.uniform(0.3, 80)
        x = rng.uniform(0.0, 160)
        assert abs(reg_upper_gamma(a, x) - special.gammaincc(a, x)) < 1e-8


def test_t_tail_accuracy_against_series():
    # small-df spot values from the closed forms: df=1 -> 2*(1 - (atan(t)/pi + 1/2));
    # df=2 -> 1 - t/sqrt(2 + t^2)
    for t in (0.5, 1.0, 2.5, 7.0):
        closed_1 = 2 * (0.5 - math.atan(t) / math.pi)
        assert student_t_two_sided_p(t, 1) == pytest.approx(closed_1, abs=1e-10)
        closed_2 = 1 - t / math.sqrt(2 + t * t)
        assert student_t_two_sided_p(t, 2) == pytest.approx(closed_2, abs=1e-10)
    rng = np.random.default_rng(10)
    for _ in range(200):
        t = rng.uniform(-9, 9)
        df = rng.uniform(1, 300)
        ref = 2 * special.stdtr(df, -abs(t))
        assert abs(student_t_two_sided_p(t, df) - ref) < 1e-8


def test_chi_square_sf_series_identity():
    # df=2 is exactly exp(-x/2)
    for x in (0.3, 1.0, 4.2, 11.0):
        assert chi_square_sf(x, 2) == pytest.approx(math.exp(-x / 2), abs=1e-12)


# -- significance screen ------------------------------------------------------------

def _paired_datasets(seed=0, n=600):
    rng = np.random.default_rng(seed)
    schema = FeatureSchema([
        Feature("signal", "continuous", low=-9, high=9),
        Feature("noise", "continuous", low=-9, high=9),
        Feature("lvl", "categorical", levels=3),
    ])
    y = (rng.random(n) < 0.3).astype(int)
    X = np.column_stack([
        rng.normal(0, 1, n) + 0.8 * y,
        rng.normal(0, 1, n),
        rng.integers(0, 3, n).astype(float),
    ])
    return Dataset(X, y, schema)


def test_screen_identity_gives_identical_flags():
    data = _paired_datasets()
    rep = significance_screen(data, data, alpha=0.05)
    assert rep.original_significant == rep.distilled_significant
    assert not rep.only_original and not rep.only_distilled


def test_screen_flags_class_separated_feature_only():
    data = _paired_datasets()
    rep = significance_screen(data, data, alpha=1e-4)
    assert "signal" in rep.original_significant
    assert "noise" not in rep.original_significant


def test_screen_constant_feature_not_significant():
    data = _paired_datasets()
    flat = Dataset(np.column_stack([data.X[:, 0], np.zeros(data.n), data.X[:, 2]]),
                   data.y, data.schema)
    rep = significance_screen(flat, flat, alpha=0.05)
    row = {f.feature: f for f in rep.features}["noise"]
    assert not row.original_significant and "constant" in row.note


def test_screen_requires_matching_features():
    data = _paired_datasets()
    other = Dataset(data.X[:, :2], data.y,
                    FeatureSchema([data.schema[0], data.schema[1]]))
    with pytest.raises(InputError):
        significance_screen(data, other)


def test_screen_json_shape():
    data = _paired_datasets()
    doc = significance_screen(data, data, alpha=0.05).to_json()
    assert doc["count_original"] == doc["count_distilled"]
    assert {f["feature"] for f in doc["features"]} == {"signal", "noise", "lvl"}
