"""CSV ingestion, schema mapping, splitting and standardisation.

The schema is one declarative JSON file of key/value pairs naming the
numeric feature columns and the explicit category-to-group mappings;
nothing is inferred from the data, because the disparate impact ratio is
not symmetric under swapping the protected groups.

Schema keys::

    feature_columns            list of numeric column names
    protected_column           column holding the protected attribute
    protected_minority_value   category mapped to s = 0
    protected_default_value    category mapped to s = 1
    target_column              optional; column holding the outcome
    target_success_value       category mapped to y = 1
    na_policy                  "drop" (default) or "error"

Numeric cells are parsed as decimal reals (thousands separators are
rejected); the tokens "", "?" and "NA" count as missing. Floats are
written back with ``repr``, which round-trips exactly.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np

from .measures import LabeledDataset
from .repair import RepairedDataset

NA_TOKENS = {"", "?", "NA"}


@dataclass(frozen=True)
class SchemaConfig:
    feature_columns: tuple[str, ...]
    protected_column: str
    protected_minority_value: str
    protected_default_value: str
    target_column: str | None = None
    target_success_value: str | None = None
    na_policy: str = "drop"

    def __post_init__(self):
        if self.na_policy not in ("drop", "error"):
            raise ValueError("na_policy must be 'drop' or 'error'")
        if self.protected_minority_value == self.protected_default_value:
            raise ValueError("protected values must name two distinct categories")
        if (self.target_column is None) != (self.target_success_value is None):
            raise ValueError("target_column and target_success_value go together")
        object.__setattr__(self, "feature_columns", tuple(self.feature_columns))

    @classmethod
    def from_json(cls, path) -> "SchemaConfig":
        with open(path, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
        return cls(
            feature_columns=tuple(payload["feature_columns"]),
            protected_column=payload["protected_column"],
            protected_minority_value=str(payload["protected_minority_value"]),
            protected_default_value=str(payload["protected_default_value"]),
            target_column=payload.get("target_column"),
            target_success_value=(
                None
                if payload.get("target_success_value") is None
                else str(payload["target_success_value"])
            ),
            na_policy=payload.get("na_policy", "drop"),
        )

    def to_json_dict(self) -> dict:
        return {
            "feature_columns": list(self.feature_columns),
            "protected_column": self.protected_column,
            "protected_minority_value": self.protected_minority_value,
            "protected_default_value": self.protected_default_value,
            "target_column": self.target_column,
            "target_success_value": self.target_success_value,
            "na_policy": self.na_policy,
        }


def generic_schema(dim: int, with_target: bool = True) -> SchemaConfig:
    """Schema for the plain x_1..x_d / s / y layout written by this package."""
    return SchemaConfig(
        feature_columns=tuple(f"x_{k + 1}" for k in range(dim)),
        protected_column="s",
        protected_minority_value="0",
        protected_default_value="1",
        target_column="y" if with_target else None,
        target_success_value="1" if with_target else None,
    )


def load_dataset(path, schema: SchemaConfig) -> LabeledDataset:
    """Parse a CSV file into a labelled dataset according to the schema."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        needed = list(schema.feature_columns) + [schema.protected_column]
        if schema.target_column is not None:
            needed.append(schema.target_column)
        missing = [c for c in needed if c not in header]
        if missing:
            raise ValueError(f"missing columns: {', '.join(missing)}")

        rows_x: list[list[float]] = []
        rows_s: list[int] = []
        rows_y: list[int] = []
        for line_no, row in enumerate(reader, start=2):
            cells = [str(row[c]).strip() for c in needed]
            if any(cell in NA_TOKENS for cell in cells):
                if schema.na_policy == "error":
                    raise ValueError(f"missing value at line {line_no}")
                continue
            feats = []
            for col in schema.feature_columns:
                cell = str(row[col]).strip()
                try:
                    feats.append(float(cell))
                except ValueError:
                    raise ValueError(
                        f"non-numeric value {cell!r} in column {col!r} at line {line_no}"
                    ) from None
            prot = str(row[schema.protected_column]).strip()
            if prot == schema.protected_minority_value:
                rows_s.append(0)
            elif prot == schema.protected_default_value:
                rows_s.append(1)
            else:
                raise ValueError(
                    f"unmapped value {prot!r} in protected column at line {line_no}"
                )
            if schema.target_column is not None:
                tgt = str(row[schema.target_column]).strip()
                rows_y.append(1 if tgt == schema.target_success_value else 0)
            rows_x.append(feats)

    if not rows_x:
        raise ValueError("no usable rows in the file")
    X = np.asarray(rows_x, dtype=float)
    s = np.asarray(rows_s, dtype=np.int8)
    y = np.asarray(rows_y, dtype=np.int8) if schema.target_column is not None else None
    return LabeledDataset(X, s, y)


def write_dataset_csv(data: LabeledDataset, path) -> None:
    """Write the x_1..x_d / s / y layout; numeric fields round-trip exactly."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        header = [f"x_{k + 1}" for k in range(data.dim)] + ["s"]
        if data.y is not None:
            header.append("y")
        writer.writerow(header)
        for k in range(data.n):
            row = [repr(float(v)) for v in data.X[k]] + [str(int(data.s[k]))]
            if data.y is not None:
                row.append(str(int(data.y[k])))
            writer.writerow(row)


def split(data: LabeledDataset, test_size: int, seed: int):
    """Seeded uniform split without replacement into (train, test).

    Row order inside each part follows the original dataset, so repeated
    runs with one seed are byte-identical.
    """
    if not 0 < test_size < data.n:
        raise ValueError(f"test_size must lie in (0, {data.n})")
    rng = np.random.Generator(np.random.Philox(key=seed))
    perm = rng.permutation(data.n)
    test_idx = np.sort(perm[:test_size])
    train_idx = np.sort(perm[test_size:])
    return data.subset(train_idx), data.subset(test_idx)


@dataclass(frozen=True, eq=False)
class StandardizeParams:
    """Per-column centering/scaling fitted on the training split."""

    mean: np.ndarray
    scale: np.ndarray
    constant_columns: tuple[int, ...]

    def transform(self, X: np.ndarray) -> np.ndarray:
        return (np.asarray(X, dtype=float) - self.mean) / self.scale

    def inverse(self, X: np.ndarray) -> np.ndarray:
        return np.asarray(X, dtype=float) * self.scale + self.mean

    def to_json_dict(self) -> dict:
        return {
            "mean": [float(v) for v in self.mean],
            "scale": [float(v) for v in self.scale],
            "constant_columns": list(self.constant_columns),
        }

    @classmethod
    def from_json_dict(cls, payload: dict) -> "StandardizeParams":
        return cls(
            mean=np.asarray(payload["mean"], dtype=float),
            scale=np.asarray(payload["scale"], dtype=float),
            constant_columns=tuple(payload.get("constant_columns", ())),
        )


def standardize(train: LabeledDataset, test: LabeledDataset):
    """Center/scale both splits with statistics of the training split.

    Zero-variance columns pass through unscaled and are flagged in the
    returned parameters.
    """
    if train.dim != test.dim:
        raise ValueError("train and test must share the feature dimension")
    mean = train.X.mean(axis=0)
    sd = train.X.std(axis=0)
    constant = np.flatnonzero(sd < 1e-12)
    scale = sd.copy()
    scale[constant] = 1.0
    mean = mean.copy()
    mean[constant] = 0.0
    params = StandardizeParams(
        mean=mean, scale=scale, constant_columns=tuple(int(c) for c in constant)
    )
    train_std = LabeledDataset(params.transform(train.X), train.s, train.y)
    test_std = LabeledDataset(params.transform(test.X), test.s, test.y)
    return train_std, test_std, params


REPAIRED_FIXED_COLUMNS = ("weight", "s", "y", "origin", "method", "lambda", "seed")


def write_repaired_csv(repaired: RepairedDataset, path) -> None:
    """Serialise a repaired dataset with weights and provenance columns."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        header = [f"x_{k + 1}" for k in range(repaired.dim)] + list(
            REPAIRED_FIXED_COLUMNS
        )
        writer.writerow(header)
        for k in range(repaired.n_rows):
            row = [repr(float(v)) for v in repaired.X[k]]
            row.append(repr(float(repaired.weights[k])))
            row.append(str(int(repaired.s[k])))
            row.append("" if repaired.y is None else str(int(repaired.y[k])))
            row.append(str(int(repaired.origins[k])))
            row.append(repaired.method)
            row.append(repr(float(repaired.lam)))
            row.append("" if repaired.seed is None else str(int(repaired.seed)))
            writer.writerow(row)


def read_repaired_csv(path) -> RepairedDataset:
    """Load a repaired dataset written by :func:`write_repaired_csv`."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        dim = sum(1 for c in header if c.startswith("x_"))
        if dim == 0 or any(c not in header for c in REPAIRED_FIXED_COLUMNS):
            raise ValueError("not a repaired-dataset CSV")
        X, w, s, y, origins = [], [], [], [], []
        method, lam, seed = "", 0.0, None
        for row in reader:
            X.append([float(row[f"x_{k + 1}"]) for k in range(dim)])
            w.append(float(row["weight"]))
            s.append(int(row["s"]))
            y.append(None if row["y"] == "" else int(row["y"]))
            origins.append(int(row["origin"]))
            method = row["method"]
            lam = float(row["lambda"])
            seed = None if row["seed"] == "" else int(row["seed"])
    if not X:
        raise ValueError("no rows in the file")
    has_y = all(v is not None for v in y)
    # group proportions are not stored per row; recover them from the
    # distinct origin rows of each group
    origin_groups: dict[int, int] = {}
    for o, g in zip(origins, s):
        origin_groups[o] = g
    src0 = sum(1 for g in origin_groups.values() if g == 0)
    src1 = len(origin_groups) - src0
    total = max(src0 + src1, 1)
    return RepairedDataset(
        X=np.asarray(X, dtype=float),
        weights=np.asarray(w, dtype=float),
        s=np.asarray(s, dtype=np.int8),
        origins=np.asarray(origins, dtype=np.int64),
        y=np.asarray([v for v in y], dtype=np.int8) if has_y else None,
        lam=lam,
        method=method,
        seed=seed,
        pi0=src0 / total,
        pi1=src1 / total,
    )
