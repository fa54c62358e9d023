"""Classification metrics, treatment-effect errors, and significance tests."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .errors import InputError
from .stats import chi_square_sf, student_t_two_sided_p


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    fn: int
    tn: int

    def __post_init__(self):
        if min(self.tp, self.fp, self.fn, self.tn) < 0:
            raise InputError("confusion counts must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    @classmethod
    def from_predictions(cls, y_true, y_pred) -> "ConfusionCounts":
        y_true = np.asarray(y_true).astype(int)
        y_pred = np.asarray(y_pred).astype(int)
        if y_true.shape != y_pred.shape:
            raise InputError("prediction/label lengths differ")
        return cls(
            tp=int(np.sum((y_pred == 1) & (y_true == 1))),
            fp=int(np.sum((y_pred == 1) & (y_true == 0))),
            fn=int(np.sum((y_pred == 0) & (y_true == 1))),
            tn=int(np.sum((y_pred == 0) & (y_true == 0))),
        )


@dataclass(frozen=True)
class ClassificationMetrics:
    """Accuracy always; precision/recall are ``None`` when undefined (0/0)."""

    accuracy: float
    precision: float | None
    recall: float | None

    def to_json(self) -> dict:
        return {"accuracy": self.accuracy, "precision": self.precision, "recall": self.recall}


def confusion_metrics(c: ConfusionCounts) -> ClassificationMetrics:
    """Accuracy, precision, recall — undefined ratios reported as absent, never 0/0."""
    if c.total == 0:
        raise InputError("empty confusion table")
    precision = c.tp / (c.tp + c.fp) if (c.tp + c.fp) > 0 else None
    recall = c.tp / (c.tp + c.fn) if (c.tp + c.fn) > 0 else None
    return ClassificationMetrics((c.tp + c.tn) / c.total, precision, recall)


def ate_error(true_ate: float, est_ate: float) -> float:
    """Absolute error of an average-treatment-effect estimate."""
    return abs(true_ate - est_ate)


def _pair_key(i: int, j: int) -> tuple[int, int]:
    if i == j:
        raise InputError("intervention pairs need two distinct levels")
    return (max(i, j), min(i, j))


def mate_error(pair_errors, k: int) -> float:
    """Mean ATE error over every unordered pair of ``k`` intervention levels.

    ``pair_errors`` maps ``(i, j)`` to that pair's absolute ATE error and
    must contain exactly the C(k, 2) unordered pairs of ``0..k-1``.
    """
    if k < 2:
        raise InputError("need at least 2 intervention levels")
    seen: dict[tuple[int, int], float] = {}
    for (i, j), err in dict(pair_errors).items():
        if not (0 <= i < k and 0 <= j < k):
            raise InputError(f"pair ({i}, {j}) outside 0..{k - 1}")
        key = _pair_key(i, j)
        if key in seen:
            raise InputError(f"duplicate pair {key}")
        if err < 0:
            raise InputError("pair errors must be non-negative")
        seen[key] = float(err)
    expected = k * (k - 1) // 2
    if len(seen) != expected:
        raise InputError(f"need all {expected} pairs, got {len(seen)}")
    # fsum: correctly-rounded sum, so the mean is independent of pair order
    return math.fsum(seen.values()) / expected


@dataclass(frozen=True)
class EffectReport:
    """Per-pair ATE errors with their mean; ``k`` intervention levels."""

    k: int
    pair_errors: dict[tuple[int, int], float]
    aggregate: float

    @classmethod
    def from_means(cls, true_means, est_means) -> "EffectReport":
        true_means = np.asarray(true_means, dtype=np.float64)
        est_means = np.asarray(est_means, dtype=np.float64)
        if true_means.shape != est_means.shape or true_means.ndim != 1:
            raise InputError("true/estimated means must be equal-length vectors")
        k = len(true_means)
        pairs = {}
        for i in range(k):
            for j in range(i):
                pairs[(i, j)] = ate_error(true_means[i] - true_means[j], est_means[i] - est_means[j])
        return cls(k, pairs, mate_error(pairs, k))


@dataclass(frozen=True)
class TestResult:
    statistic: float
    p_value: float
    dof: float

    def __post_init__(self):
        for name in ("statistic", "p_value", "dof"):
            object.__setattr__(self, name, float(getattr(self, name)))


def welch_t_test(sample_a, sample_b) -> TestResult:
    """Welch's unequal-variance t test with two-sided p.

    Degrees of freedom by Welch–Satterthwaite; the p-value comes from the
    internal t survival function (accurate to ~1e-12).
    """
    a = np.asarray(sample_a, dtype=np.float64)
    b = np.asarray(sample_b, dtype=np.float64)
    if a.size < 2 or b.size < 2:
        raise InputError("each sample needs at least 2 observations")
    va = a.var(ddof=1)
    vb = b.var(ddof=1)
    if va == 0 and vb == 0:
        if a.mean() == b.mean():
            return TestResult(0.0, 1.0, float(a.size + b.size - 2))
        raise InputError("both samples are constant with different means")
    sa, sb = va / a.size, vb / b.size
    t = (a.mean() - b.mean()) / math.sqrt(sa + sb)
    dof = (sa + sb) ** 2 / (sa**2 / (a.size - 1) + sb**2 / (b.size - 1))
    return TestResult(float(t), student_t_two_sided_p(t, dof), float(dof))


def chi_square_test(table) -> TestResult:
    """Pearson chi-square test of independence on an r x c count table."""
    obs = np.asarray(table, dtype=np.float64)
    if obs.ndim != 2 or obs.shape[0] < 2 or obs.shape[1] < 2:
        raise InputError("need an r x c table with r, c >= 2")
    if obs.min() < 0:
        raise InputError("counts must be non-negative")
    row = obs.sum(axis=1, keepdims=True)
    col = obs.sum(axis=0, keepdims=True)
    total = obs.sum()
    if np.any(row == 0) or np.any(col == 0):
        raise InputError("zero-margin row or column")
    expected = row @ col / total
    stat = float(((obs - expected) ** 2 / expected).sum())
    dof = (obs.shape[0] - 1) * (obs.shape[1] - 1)
    return TestResult(stat, chi_square_sf(stat, dof), float(dof))


@dataclass(frozen=True)
class FeatureScreen:
    feature: str
    test: str  # "t" or "chi-square"
    original: TestResult | None
    distilled: TestResult | None
    original_significant: bool
    distilled_significant: bool
    note: str = ""


@dataclass(frozen=True)
class ScreenReport:
    alpha: float
    features: tuple[FeatureScreen, ...]
    original_significant: tuple[str, ...]
    distilled_significant: tuple[str, ...]

    @property
    def only_original(self) -> tuple[str, ...]:
        return tuple(f for f in self.original_significant if f not in self.distilled_significant)

    @property
    def only_distilled(self) -> tuple[str, ...]:
        return tuple(f for f in self.distilled_significant if f not in self.original_significant)

    def to_json(self) -> dict:
        return {
            "alpha": self.alpha,
            "features": [
                {
                    "feature": f.feature,
                    "test": f.test,
                    "original": None if f.original is None else
                        {"statistic": f.original.statistic, "p_value": f.original.p_value, "dof": f.original.dof},
                    "distilled": None if f.distilled is None else
                        {"statistic": f.distilled.statistic, "p_value": f.distilled.p_value, "dof": f.distilled.dof},
                    "original_significant": f.original_significant,
                    "distilled_significant": f.distilled_significant,
                    "note": f.note,
                }
                for f in self.features
            ],
            "count_original": len(self.original_significant),
            "count_distilled": len(self.distilled_significant),
            "only_original": list(self.only_original),
            "only_distilled": list(self.only_distilled),
        }


def _class_split(dataset: Dataset, j: int) -> tuple[np.ndarray, np.ndarray]:
    col = dataset.X[:, j]
    return col[dataset.y == 1], col[dataset.y == 0]


def _feature_test(values_pos: np.ndarray, values_neg: np.ndarray, continuous: bool) -> tuple[TestResult | None, str]:
    """Between-class test for one column; returns (result, note)."""
    values = np.concatenate([values_pos, values_neg])
    if len(np.unique(values)) < 2:
        return None, "constant column"
    if continuous:
        if values_pos.var(ddof=1) == 0 and values_neg.var(ddof=1) == 0:
            return None, "both classes constant"
        return welch_t_test(values_pos, values_neg), ""
    levels = np.unique(values)
    table = np.stack([
        np.array([np.sum(values_pos == lv) for lv in levels], dtype=float),
        np.array([np.sum(values_neg == lv) for lv in levels], dtype=float),
    ])
    return chi_square_test(table), ""


def significance_screen(data_original: Dataset, data_distilled: Dataset, alpha: float = 0.05) -> ScreenReport:
    """Per-feature class-difference tests on the original vs the distilled data.

    Continuous features get a Welch t test between positive- and negative-class
    values, binary/categorical features a chi-square test on the level-by-class
    table. Distilled columns are tested the same way their source feature kind
    dictates (distilled values of a categorical feature form discrete lookup
    levels). A feature with no between-class variation is reported not
    significant with a note.
    """
    if not 0 < alpha < 1:
        raise InputError("alpha must lie in (0, 1)")
    if data_original.schema.names != data_distilled.schema.names:
        raise InputError("datasets must share the same feature set")
    if data_original.n == 0 or data_distilled.n == 0:
        raise InputError("empty dataset")
    rows = []
    orig_sig, dist_sig = [], []
    for j, f in enumerate(data_original.schema):
        continuous = f.kind == "continuous"
        res_o, note_o = _feature_test(*_class_split(data_original, j), continuous)
        res_d, note_d = _feature_test(*_class_split(data_distilled, j), continuous)
        sig_o = bool(res_o is not None and res_o.p_value < alpha)
        sig_d = bool(res_d is not None and res_d.p_value < alpha)
        note = "; ".join(x for x in (note_o and f"original: {note_o}", note_d and f"distilled: {note_d}") if x)
        rows.append(FeatureScreen(f.name, "t" if continuous else "chi-square", res_o, res_d, sig_o, sig_d, note))
        if sig_o:
            orig_sig.append(f.name)
        if sig_d:
            dist_sig.append(f.name)
    return ScreenReport(alpha, tuple(rows), tuple(orig_sig), tuple(dist_sig))
