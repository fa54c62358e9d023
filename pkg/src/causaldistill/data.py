"""Dataset and feature-schema types plus the CSV/JSON interchange format.

A dataset is a float matrix with one column per feature, a label vector,
and a schema describing each column: ``binary`` (0/1), ``categorical``
(integer level codes ``0..levels-1``) or ``continuous`` with domain bounds
``[low, high]``. On disk a dataset is a header CSV (UTF-8, ``.`` decimal,
``\\n`` line ends, label column ``risk``) next to a schema JSON mapping
column name to its kind; a reserved ``_meta`` key carries the label kind
and the distilled-provenance flag.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InputError

LABEL_COLUMN = "risk"
FEATURE_KINDS = ("binary", "categorical", "continuous")


@dataclass(frozen=True)
class Feature:
    """One column: its kind and domain."""

    name: str
    kind: str
    levels: int = 0  # categorical only; level codes are 0..levels-1
    low: float = 0.0
    high: float = 1.0

    def __post_init__(self):
        if self.kind not in FEATURE_KINDS:
            raise InputError(f"unknown feature kind {self.kind!r} for {self.name!r}")
        if self.kind == "categorical" and self.levels < 2:
            raise InputError(f"categorical feature {self.name!r} needs >= 2 levels")
        if self.kind == "continuous" and not self.low < self.high:
            raise InputError(f"continuous feature {self.name!r} needs low < high")

    @property
    def domain(self) -> tuple[float, float]:
        if self.kind == "binary":
            return (0.0, 1.0)
        if self.kind == "categorical":
            return (0.0, float(self.levels - 1))
        return (self.low, self.high)

    def contains(self, value: float) -> bool:
        if self.kind == "binary":
            return value in (0.0, 1.0)
        if self.kind == "categorical":
            return float(value).is_integer() and 0 <= value < self.levels
        return self.low <= value <= self.high

    def to_json(self) -> dict:
        if self.kind == "continuous":
            return {"kind": self.kind, "domain": [self.low, self.high]}
        if self.kind == "categorical":
            return {"kind": self.kind, "levels": self.levels}
        return {"kind": self.kind}

    @classmethod
    def from_json(cls, name: str, doc: dict) -> "Feature":
        kind = doc.get("kind")
        if kind == "continuous":
            low, high = doc.get("domain", (0.0, 1.0))
            return cls(name, kind, low=float(low), high=float(high))
        if kind == "categorical":
            return cls(name, kind, levels=int(doc["levels"]))
        if kind == "binary":
            return cls(name, kind)
        raise InputError(f"feature {name!r}: unknown kind {kind!r}")


class FeatureSchema:
    """Ordered feature descriptions; the contract every stage validates against."""

    def __init__(self, features, label_kind: str = "binary", distilled: bool = False):
        self.features = tuple(features)
        names = [f.name for f in self.features]
        if len(set(names)) != len(names):
            raise InputError("duplicate feature names in schema")
        if LABEL_COLUMN in names:
            raise InputError(f"{LABEL_COLUMN!r} is reserved for the label column")
        if label_kind not in ("binary", "continuous"):
            raise InputError(f"unknown label kind {label_kind!r}")
        self.label_kind = label_kind
        self.distilled = distilled
        self._index = {f.name: j for j, f in enumerate(self.features)}

    def __len__(self):
        return len(self.features)

    def __iter__(self):
        return iter(self.features)

    def __getitem__(self, key) -> Feature:
        if isinstance(key, str):
            return self.features[self._index[key]]
        return self.features[key]

    def index_of(self, name: str) -> int:
        if name not in self._index:
            raise InputError(f"unknown feature {name!r}")
        return self._index[name]

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(f.name for f in self.features)

    def to_json(self) -> dict:
        doc = {f.name: f.to_json() for f in self.features}
        meta = {}
        if self.label_kind != "binary":
            meta["label"] = self.label_kind
        if self.distilled:
            meta["distilled"] = True
        if meta:
            doc["_meta"] = meta
        return doc

    @classmethod
    def from_json(cls, doc: dict) -> "FeatureSchema":
        meta = doc.get("_meta", {})
        feats = [Feature.from_json(name, spec) for name, spec in doc.items() if name != "_meta"]
        return cls(feats, label_kind=meta.get("label", "binary"), distilled=bool(meta.get("distilled", False)))

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=2, sort_keys=False) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path) -> "FeatureSchema":
        path = Path(path)
        if not path.exists():
            raise InputError(f"schema file not found: {path}")
        return cls.from_json(json.loads(path.read_text(encoding="utf-8")))


@dataclass
class Dataset:
    """Feature matrix (n, d), labels (n,), and the schema describing columns."""

    X: np.ndarray
    y: np.ndarray
    schema: FeatureSchema

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=np.float64)
        self.y = np.asarray(self.y)
        if self.X.ndim != 2:
            raise InputError("X must be a 2-D matrix")
        if self.y.shape != (self.X.shape[0],):
            raise InputError("labels must align with rows")
        if self.X.shape[1] != len(self.schema):
            raise InputError(f"{self.X.shape[1]} columns vs {len(self.schema)} schema features")
        if self.schema.label_kind == "binary":
            vals = np.unique(self.y)
            if not np.all(np.isin(vals, (0, 1))):
                raise InputError("binary labels must be 0/1")
            self.y = self.y.astype(np.int64)
        else:
            self.y = self.y.astype(np.float64)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]

    def column(self, name: str) -> np.ndarray:
        return self.X[:, self.schema.index_of(name)]

    def validate_domains(self) -> None:
        """Reject values outside each feature's declared kind/domain."""
        for j, f in enumerate(self.schema):
            col = self.X[:, j]
            if f.kind == "binary" and not np.all(np.isin(col, (0.0, 1.0))):
                raise InputError(f"feature {f.name!r}: non-binary values")
            if f.kind == "categorical":
                if not np.all((col == np.round(col)) & (col >= 0) & (col < f.levels)):
                    raise InputError(f"feature {f.name!r}: level codes outside 0..{f.levels - 1}")
            if f.kind == "continuous" and (col.min() < f.low or col.max() > f.high):
                raise InputError(f"feature {f.name!r}: values outside [{f.low}, {f.high}]")


def _format_value(x: float) -> str:
    # repr() is the shortest exact round-trip form; integers print bare
    if float(x).is_integer() and abs(x) < 1e15:
        return str(int(x))
    return repr(float(x))


def write_csv(dataset: Dataset, path) -> None:
    """Write a dataset as header CSV with the label in column ``risk``."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(list(dataset.schema.names) + [LABEL_COLUMN])
        label_int = dataset.schema.label_kind == "binary"
        for row, label in zip(dataset.X, dataset.y):
            out = [_format_value(v) for v in row]
            out.append(str(int(label)) if label_int else _format_value(label))
            writer.writerow(out)


def read_csv(path, schema: FeatureSchema) -> Dataset:
    """Read a dataset CSV; the header must be the schema's features plus ``risk``."""
    path = Path(path)
    if not path.exists():
        raise InputError(f"dataset file not found: {path}")
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise InputError(f"empty dataset file: {path}") from None
        expected = list(schema.names) + [LABEL_COLUMN]
        if header != expected:
            raise InputError(f"CSV header {header} does not match schema columns {expected}")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(expected):
                raise InputError(f"{path}:{lineno}: expected {len(expected)} fields, got {len(row)}")
            try:
                rows.append([float(v) for v in row])
            except ValueError as exc:
                raise InputError(f"{path}:{lineno}: {exc}") from None
    if not rows:
        raise InputError(f"dataset {path} has no rows")
    arr = np.asarray(rows, dtype=np.float64)
    return Dataset(arr[:, :-1], arr[:, -1], schema)


def load_dataset(csv_path, schema_path) -> Dataset:
    return read_csv(csv_path, FeatureSchema.load(schema_path))


def save_dataset(dataset: Dataset, csv_path, schema_path) -> None:
    write_csv(dataset, csv_path)
    dataset.schema.save(schema_path)


def stratified_split(dataset: Dataset, test_fraction: float, seed: int) -> tuple[Dataset, Dataset]:
    """Seeded split preserving the label mix (per-class proportional counts)."""
    if not 0 < test_fraction < 1:
        raise InputError("test_fraction must be in (0, 1)")
    rng = np.random.default_rng(seed)
    test_idx = []
    if dataset.schema.label_kind == "binary":
        for cls in (0, 1):
            members = np.flatnonzero(dataset.y == cls)
            k = int(round(len(members) * test_fraction))
            test_idx.append(rng.permutation(members)[:k])
    else:
        members = np.arange(dataset.n)
        k = int(round(dataset.n * test_fraction))
        test_idx.append(rng.permutation(members)[:k])
    test_mask = np.zeros(dataset.n, dtype=bool)
    test_mask[np.concatenate(test_idx)] = True
    train = Dataset(dataset.X[~test_mask], dataset.y[~test_mask], dataset.schema)
    test = Dataset(dataset.X[test_mask], dataset.y[test_mask], dataset.schema)
    return train, test


class Encoder:
    """Model-input encoding fit on training data.

    Continuous columns are z-scored, binary kept 0/1, categorical one-hot
    over all levels; every encoded column of a feature lands in that
    feature's single first-layer group, so group norms stay per-feature.
    """

    def __init__(self, schema: FeatureSchema, means, sds):
        self.schema = schema
        self.means = np.asarray(means, dtype=np.float64)
        self.sds = np.asarray(sds, dtype=np.float64)
        self.groups: list[np.ndarray] = []
        cols = 0
        for f in schema:
            width = f.levels if f.kind == "categorical" else 1
            self.groups.append(np.arange(cols, cols + width))
            cols += width
        self.width = cols

    @classmethod
    def fit(cls, dataset: Dataset) -> "Encoder":
        means = np.zeros(dataset.d)
        sds = np.ones(dataset.d)
        for j, f in enumerate(dataset.schema):
            if f.kind == "continuous":
                col = dataset.X[:, j]
                means[j] = col.mean()
                sd = col.std()
                sds[j] = sd if sd > 0 else 1.0
        return cls(dataset.schema, means, sds)

    def encode(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != len(self.schema):
            raise InputError(f"expected {len(self.schema)} raw columns, got {X.shape[1]}")
        out = np.zeros((X.shape[0], self.width))
        for j, (f, cols) in enumerate(zip(self.schema, self.groups)):
            col = X[:, j]
            if f.kind == "continuous":
                out[:, cols[0]] = (col - self.means[j]) / self.sds[j]
            elif f.kind == "binary":
                out[:, cols[0]] = col
            else:
                codes = col.astype(np.intp)
                if codes.min() < 0 or codes.max() >= f.levels:
                    raise InputError(f"feature {f.name!r}: level code outside 0..{f.levels - 1}")
                out[np.arange(X.shape[0]), cols[0] + codes] = 1.0
        return out

    def to_json(self) -> dict:
        return {
            "schema": self.schema.to_json(),
            "means": [float(m).hex() for m in self.means],
            "sds": [float(s).hex() for s in self.sds],
        }

    @classmethod
    def from_json(cls, doc: dict) -> "Encoder":
        return cls(
            FeatureSchema.from_json(doc["schema"]),
            [float.fromhex(m) for m in doc["means"]],
            [float.fromhex(s) for s in doc["sds"]],
        )


def drop_feature(dataset: Dataset, j: int) -> tuple[np.ndarray, FeatureSchema]:
    """Covariate view for propensity fitting: all columns except ``j``."""
    keep = [k for k in range(dataset.d) if k != j]
    schema = FeatureSchema(
        [dataset.schema[k] for k in keep],
        label_kind=dataset.schema.label_kind,
        distilled=dataset.schema.distilled,
    )
    return dataset.X[:, keep], schema
