"""Weighted empirical measures and group-labelled datasets.

Core value types shared by the transport, repair, fairness and risk
modules. Everything is immutable after construction, so instances can be
read concurrently without locking.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# Support points count as coincident when equal after rounding to this many
# significant digits. Points shared between repaired groups are produced by
# identical arithmetic, so the rounding only guards platform-level noise.
COINCIDENCE_DIGITS = 12

_WEIGHT_SUM_TOL = 1e-8


class EmptyGroupError(ValueError):
    """A protected class has no rows."""


class DimensionMismatchError(ValueError):
    """Operands live in different feature dimensions."""


def _as_point_array(points) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts.reshape(-1, 1)
    if pts.ndim != 2 or pts.shape[0] == 0:
        raise ValueError("points must form a non-empty (n, d) array")
    if not np.all(np.isfinite(pts)):
        raise ValueError("points contain NaN or Inf")
    return pts


def round_significant(values, digits: int = COINCIDENCE_DIGITS) -> np.ndarray:
    """Round each entry to ``digits`` significant decimal digits."""
    vals = np.asarray(values, dtype=float)
    out = vals.copy()
    nz = vals != 0.0
    if np.any(nz):
        mag = np.floor(np.log10(np.abs(vals[nz])))
        exp = np.minimum(digits - 1 - mag, 300.0)
        scale = np.power(10.0, exp)
        out[nz] = np.round(vals[nz] * scale) / scale
    return out


def support_keys(points: np.ndarray) -> list[tuple]:
    """Canonical hashable key per point, used to aggregate coincident atoms."""
    rounded = round_significant(points)
    return [tuple(row) for row in rounded]


@dataclass(frozen=True, eq=False)
class EmpiricalMeasure:
    """Finitely supported probability measure: points in R^d with weights.

    Weights must be nonnegative and sum to one (within ``1e-8`` on input);
    they are renormalised exactly once at construction and never again.
    Omitting ``weights`` yields the uniform measure on the points.
    """

    points: np.ndarray
    weights: np.ndarray | None = None

    def __post_init__(self):
        pts = _as_point_array(self.points)
        n = pts.shape[0]
        if self.weights is None:
            w = np.full(n, 1.0 / n)
        else:
            w = np.array(self.weights, dtype=float)
        if w.shape != (n,):
            raise ValueError(f"weights shape {w.shape} does not match {n} points")
        if not np.all(np.isfinite(w)) or np.any(w < 0):
            raise ValueError("weights must be finite and nonnegative")
        total = math.fsum(w.tolist())
        if abs(total - 1.0) > _WEIGHT_SUM_TOL:
            raise ValueError(f"weights sum to {total!r}, expected 1")
        w = w / total
        pts.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def atoms(self) -> dict[tuple, float]:
        """Masses aggregated over coincident support points."""
        acc: dict[tuple, list] = {}
        for key, w in zip(support_keys(self.points), self.weights):
            acc.setdefault(key, []).append(float(w))
        return {key: math.fsum(ws) for key, ws in acc.items()}


def tv_distance_discrete(p: EmpiricalMeasure, q: EmpiricalMeasure) -> float:
    """Total variation distance between two discrete measures.

    Computed on the union of the supports: half the sum of absolute mass
    differences, aggregating masses of coincident points first. Per-point
    masses are accumulated with exact (fsum) summation so that measures
    with identical weighted supports compare to exactly zero regardless of
    atom ordering.
    """
    if p.dim != q.dim:
        raise DimensionMismatchError(f"dim {p.dim} vs {q.dim}")
    acc: dict[tuple, tuple[list, list]] = {}
    for key, w in zip(support_keys(p.points), p.weights):
        acc.setdefault(key, ([], []))[0].append(float(w))
    for key, w in zip(support_keys(q.points), q.weights):
        acc.setdefault(key, ([], []))[1].append(float(w))
    tv = 0.5 * math.fsum(
        abs(math.fsum(wp) - math.fsum(wq)) for wp, wq in acc.values()
    )
    return min(max(tv, 0.0), 1.0)


@dataclass(frozen=True, eq=False)
class LabeledDataset:
    """Rows (x, s, optional y) with a binary protected attribute s.

    Group ``s=0`` is the minority / unfavored class. Row order is preserved
    everywhere so that coupling indices stay stable and reproducible.
    """

    X: np.ndarray
    s: np.ndarray
    y: np.ndarray | None = None

    def __post_init__(self):
        X = _as_point_array(self.X)
        s = np.asarray(self.s)
        if s.shape != (X.shape[0],):
            raise ValueError("s must be one group label per row")
        if not np.all(np.isin(s, (0, 1))):
            raise ValueError("protected attribute must take values in {0, 1}")
        s = s.astype(np.int8)
        y = self.y
        if y is not None:
            y = np.asarray(y)
            if y.shape != (X.shape[0],):
                raise ValueError("y must be one label per row")
            if not np.all(np.isin(y, (0, 1))):
                raise ValueError("labels must take values in {0, 1}")
            y = y.astype(np.int8)
            y.setflags(write=False)
        X.setflags(write=False)
        s.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def dim(self) -> int:
        return self.X.shape[1]

    @property
    def n0(self) -> int:
        return int(np.sum(self.s == 0))

    @property
    def n1(self) -> int:
        return int(np.sum(self.s == 1))

    @property
    def pi0(self) -> float:
        return self.n0 / self.n

    @property
    def pi1(self) -> float:
        return self.n1 / self.n

    def group_indices(self, group: int) -> np.ndarray:
        return np.flatnonzero(self.s == group)

    def subset(self, idx) -> "LabeledDataset":
        idx = np.asarray(idx)
        return LabeledDataset(
            self.X[idx], self.s[idx], None if self.y is None else self.y[idx]
        )


@dataclass(frozen=True, eq=False)
class WeightedRow:
    """One (possibly mass-split) repaired row.

    ``weight`` is the group-conditional mass; ``origin`` indexes the source
    row in the dataset the row was derived from.
    """

    x: np.ndarray
    weight: float
    group: int
    origin: int
    y: int | None = None

    def __post_init__(self):
        if not self.weight > 0:
            raise ValueError("row weight must be strictly positive")


def group_measure(data: LabeledDataset, group: int) -> EmpiricalMeasure:
    """Uniform empirical measure on the rows of one protected class.

    Row order within the group is preserved.
    """
    idx = data.group_indices(group)
    if idx.size == 0:
        raise EmptyGroupError(f"empty protected class s={group}")
    return EmpiricalMeasure(data.X[idx])
