"""Repair procedures removing group information from a labelled dataset.

All procedures move the two group-conditional distributions toward their
weighted Wasserstein-2 barycenter, read off the exact optimal coupling:

* ``total_repair_A``   -- each row replaced by the mass-weighted average of
  its barycentric targets (one output row per input row; the two repaired
  groups generally differ, so parity is approximate).
* ``total_repair_B``   -- each row split into all of its targets with the
  coupling masses; both repaired groups equal the barycenter exactly.
* ``total_repair_C``   -- coordinate-wise one-dimensional quantile repair.
* ``geometric_repair`` -- partial repair: every target interpolated a
  fraction ``lam`` along its transport ray.
* ``random_repair``    -- per-row Bernoulli(lam) choice between the original
  point and its full split-target set.

Mass-split rows carry explicit weights; labels are duplicated onto every
fragment since repair only modifies the feature vector.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .measures import (
    EmpiricalMeasure,
    LabeledDataset,
    WeightedRow,
    group_measure,
)
from .transport import solve_transport

_PLAN_MASS_TOL = 1e-10

TOTAL_METHODS = ("TotalA", "TotalB", "TotalC")


@dataclass(frozen=True, eq=False)
class RepairPlan:
    """Barycentric transport plan for one dataset.

    Holds the positive coupling entries in row-major order together with
    the barycentric target of every entry. ``rows0``/``rows1`` map
    group-local indices back to dataset row indices; ``w0``/``w1`` are the
    per-row marginal masses the fragments of each row sum to.
    ``total_cost`` is the optimal transport cost in the units the coupling
    was solved in (the cost features when those were supplied).
    """

    x0: np.ndarray
    x1: np.ndarray
    rows0: np.ndarray
    rows1: np.ndarray
    w0: np.ndarray
    w1: np.ndarray
    frag_i: np.ndarray
    frag_j: np.ndarray
    frag_mass: np.ndarray
    targets: np.ndarray
    pi0: float
    pi1: float
    total_cost: float

    @property
    def n0(self) -> int:
        return self.x0.shape[0]

    @property
    def n1(self) -> int:
        return self.x1.shape[0]

    @property
    def dim(self) -> int:
        return self.x0.shape[1]

    @property
    def n_fragments(self) -> int:
        return self.frag_mass.shape[0]

    @property
    def order_by_col(self) -> np.ndarray:
        """Fragment permutation sorted by (column, row)."""
        return np.lexsort((self.frag_i, self.frag_j))

    def row_slices(self, group: int) -> np.ndarray:
        """Offsets delimiting each row's fragments (after ordering)."""
        if group == 0:
            return np.searchsorted(self.frag_i, np.arange(self.n0 + 1))
        order = self.order_by_col
        return np.searchsorted(self.frag_j[order], np.arange(self.n1 + 1))

    def row_targets(self, group: int, local_index: int):
        """Targets and masses of one source row, as (points, masses)."""
        if group == 0:
            lo, hi = self.row_slices(0)[local_index : local_index + 2]
            return self.targets[lo:hi], self.frag_mass[lo:hi]
        order = self.order_by_col
        lo, hi = self.row_slices(1)[local_index : local_index + 2]
        sel = order[lo:hi]
        return self.targets[sel], self.frag_mass[sel]


def build_repair_plan(
    data: LabeledDataset, cost_features: np.ndarray | None = None
) -> RepairPlan:
    """Solve the group transport problem and assemble the repair plan.

    ``cost_features`` optionally supplies transformed per-row features
    (e.g. standardised columns) that drive the transport cost only; the
    plan's points and targets always stay in the dataset's own units.
    Per-column affine maps commute with barycentric combinations, so this
    is the same repair expressed in the original coordinates.
    """
    mu0 = group_measure(data, 0)
    mu1 = group_measure(data, 1)
    if cost_features is None:
        result = solve_transport(mu0, mu1)
    else:
        cost_features = np.asarray(cost_features, dtype=float)
        if cost_features.shape != data.X.shape:
            raise ValueError("cost_features must match the dataset's shape")
        cost_data = LabeledDataset(cost_features, data.s, data.y)
        result = solve_transport(
            group_measure(cost_data, 0), group_measure(cost_data, 1)
        )
    frag_i, frag_j, frag_mass = result.coupling.triplets()

    pi0 = data.n0 / data.n
    pi1 = data.n1 / data.n
    targets = pi0 * mu0.points[frag_i] + pi1 * mu1.points[frag_j]

    row_sum0 = np.bincount(frag_i, weights=frag_mass, minlength=mu0.n)
    row_sum1 = np.bincount(frag_j, weights=frag_mass, minlength=mu1.n)
    if (
        np.max(np.abs(row_sum0 - mu0.weights)) > _PLAN_MASS_TOL
        or np.max(np.abs(row_sum1 - mu1.weights)) > _PLAN_MASS_TOL
    ):  # pragma: no cover - solver guarantees this
        raise RuntimeError("fragment masses do not match the group marginals")

    return RepairPlan(
        x0=mu0.points,
        x1=mu1.points,
        rows0=data.group_indices(0),
        rows1=data.group_indices(1),
        w0=mu0.weights,
        w1=mu1.weights,
        frag_i=frag_i,
        frag_j=frag_j,
        frag_mass=frag_mass,
        targets=targets,
        pi0=pi0,
        pi1=pi1,
        total_cost=result.cost,
    )


@dataclass(frozen=True, eq=False)
class RepairedDataset:
    """Weighted rows produced by a repair procedure.

    ``weights`` are group-conditional masses: they sum to one within each
    protected group. ``joint_weights`` rescales them by the original group
    proportions so the rows weight a single joint distribution.
    """

    X: np.ndarray
    weights: np.ndarray
    s: np.ndarray
    origins: np.ndarray
    y: np.ndarray | None
    lam: float
    method: str
    seed: int | None
    pi0: float
    pi1: float

    def __post_init__(self):
        if self.method in TOTAL_METHODS and self.lam != 1.0:
            raise ValueError("total repairs always have lam == 1")
        for group in (0, 1):
            total = math.fsum(self.weights[self.s == group].tolist())
            if abs(total - 1.0) > 1e-10:
                raise ValueError(
                    f"group {group} weights sum to {total!r}, expected 1"
                )

    @property
    def n_rows(self) -> int:
        return self.X.shape[0]

    @property
    def dim(self) -> int:
        return self.X.shape[1]

    @property
    def joint_weights(self) -> np.ndarray:
        return np.where(self.s == 0, self.pi0, self.pi1) * self.weights

    @property
    def rows(self) -> tuple[WeightedRow, ...]:
        return tuple(
            WeightedRow(
                x=self.X[k],
                weight=float(self.weights[k]),
                group=int(self.s[k]),
                origin=int(self.origins[k]),
                y=None if self.y is None else int(self.y[k]),
            )
            for k in range(self.n_rows)
        )

    def group_measure(self, group: int) -> EmpiricalMeasure:
        mask = self.s == group
        return EmpiricalMeasure(self.X[mask], self.weights[mask])


def _labels_for(data: LabeledDataset, origins: np.ndarray):
    return None if data.y is None else data.y[origins]


def _assemble(data, X, weights, s, origins, lam, method, seed, pi0, pi1):
    return RepairedDataset(
        X=np.ascontiguousarray(X),
        weights=np.asarray(weights, dtype=float),
        s=np.asarray(s, dtype=np.int8),
        origins=np.asarray(origins, dtype=np.int64),
        y=_labels_for(data, np.asarray(origins, dtype=np.int64)),
        lam=lam,
        method=method,
        seed=seed,
        pi0=pi0,
        pi1=pi1,
    )


def total_repair_A(data: LabeledDataset, plan: RepairPlan | None = None) -> RepairedDataset:
    """Averaging repair: one barycentric point per source row.

    Group-0 rows map to ``pi0 * x0_i + n0 * pi1 * sum_j gamma_ij x1_j`` and
    symmetrically for group 1. Output has exactly ``n0 + n1`` rows with
    uniform within-group weights; the two repaired supports generally
    differ, so this does not achieve exact parity.
    """
    plan = plan if plan is not None else build_repair_plan(data)
    n0, n1, d = plan.n0, plan.n1, plan.dim

    avg0 = np.zeros((n0, d))
    np.add.at(avg0, plan.frag_i, plan.frag_mass[:, None] * plan.x1[plan.frag_j])
    new0 = plan.pi0 * plan.x0 + n0 * plan.pi1 * avg0

    avg1 = np.zeros((n1, d))
    np.add.at(avg1, plan.frag_j, plan.frag_mass[:, None] * plan.x0[plan.frag_i])
    new1 = n1 * plan.pi0 * avg1 + plan.pi1 * plan.x1

    X = np.concatenate([new0, new1])
    weights = np.concatenate([np.full(n0, 1.0 / n0), np.full(n1, 1.0 / n1)])
    s = np.concatenate([np.zeros(n0, np.int8), np.ones(n1, np.int8)])
    origins = np.concatenate([plan.rows0, plan.rows1])
    return _assemble(data, X, weights, s, origins, 1.0, "TotalA", None, plan.pi0, plan.pi1)


def total_repair_B(data: LabeledDataset, plan: RepairPlan | None = None) -> RepairedDataset:
    """Mass-splitting repair: both groups become the barycenter exactly.

    Every source row splits into its targets with the coupling masses, so
    the repaired group measures are identical weighted point sets and every
    downstream classifier attains statistical parity on the output.
    """
    plan = plan if plan is not None else build_repair_plan(data)
    order1 = plan.order_by_col
    X = np.concatenate([plan.targets, plan.targets[order1]])
    weights = np.concatenate([plan.frag_mass, plan.frag_mass[order1]])
    k = plan.n_fragments
    s = np.concatenate([np.zeros(k, np.int8), np.ones(k, np.int8)])
    origins = np.concatenate(
        [plan.rows0[plan.frag_i], plan.rows1[plan.frag_j[order1]]]
    )
    return _assemble(data, X, weights, s, origins, 1.0, "TotalB", None, plan.pi0, plan.pi1)


def _rank_in_group(values: np.ndarray) -> np.ndarray:
    """1-based ranks within a sorted copy; ties resolved by position."""
    order = np.argsort(values, kind="stable")
    ranks = np.empty(values.shape[0], dtype=np.int64)
    ranks[order] = np.arange(1, values.shape[0] + 1)
    return ranks


def total_repair_C(data: LabeledDataset) -> RepairedDataset:
    """Coordinate-wise quantile repair.

    Per coordinate, each row at rank ``k`` of its group's sorted sample is
    mapped to ``pi0 * F0^-1(k/n_s) + pi1 * F1^-1(k/n_s)`` with the
    left-continuous empirical quantile; quantile indices are computed in
    integer arithmetic, which reproduces the monotone coupling in one
    dimension. One output row per input row.
    """
    idx0 = data.group_indices(0)
    idx1 = data.group_indices(1)
    if idx0.size == 0 or idx1.size == 0:
        raise ValueError("both protected classes must be non-empty")
    n0, n1 = idx0.size, idx1.size
    pi0, pi1 = data.pi0, data.pi1

    X = data.X
    out = np.empty_like(X)
    for c in range(data.dim):
        sorted0 = np.sort(X[idx0, c], kind="stable")
        sorted1 = np.sort(X[idx1, c], kind="stable")
        for idx, n_own in ((idx0, n0), (idx1, n1)):
            ranks = _rank_in_group(X[idx, c])
            q0 = sorted0[(ranks * n0 + n_own - 1) // n_own - 1]
            q1 = sorted1[(ranks * n1 + n_own - 1) // n_own - 1]
            out[idx, c] = pi0 * q0 + pi1 * q1

    weights = np.where(data.s == 0, 1.0 / n0, 1.0 / n1)
    origins = np.arange(data.n)
    return _assemble(data, out, weights, data.s, origins, 1.0, "TotalC", None, pi0, pi1)


def _original_rows(data, plan, lam, method, seed):
    X = np.concatenate([plan.x0, plan.x1])
    weights = np.concatenate([plan.w0, plan.w1])
    s = np.concatenate([np.zeros(plan.n0, np.int8), np.ones(plan.n1, np.int8)])
    origins = np.concatenate([plan.rows0, plan.rows1])
    return _assemble(data, X, weights, s, origins, lam, method, seed, plan.pi0, plan.pi1)


def geometric_repair(
    data: LabeledDataset, lam: float, plan: RepairPlan | None = None
) -> RepairedDataset:
    """Partial repair along the transport rays.

    Every fragment target is replaced by ``(1 - lam) * source + lam *
    target`` before mass-splitting. ``lam = 0`` returns the original rows
    unsplit; ``lam = 1`` coincides with ``total_repair_B`` exactly.
    """
    if not 0.0 <= lam <= 1.0:
        raise ValueError("repair amount lam must lie in [0, 1]")
    plan = plan if plan is not None else build_repair_plan(data)
    if lam == 0.0:
        return _original_rows(data, plan, 0.0, "Geometric", None)

    order1 = plan.order_by_col
    pts0 = (1.0 - lam) * plan.x0[plan.frag_i] + lam * plan.targets
    pts1 = (1.0 - lam) * plan.x1[plan.frag_j[order1]] + lam * plan.targets[order1]
    X = np.concatenate([pts0, pts1])
    weights = np.concatenate([plan.frag_mass, plan.frag_mass[order1]])
    k = plan.n_fragments
    s = np.concatenate([np.zeros(k, np.int8), np.ones(k, np.int8)])
    origins = np.concatenate(
        [plan.rows0[plan.frag_i], plan.rows1[plan.frag_j[order1]]]
    )
    return _assemble(data, X, weights, s, origins, lam, "Geometric", None, plan.pi0, plan.pi1)


def bernoulli_stream(lam: float, size: int, seed: int) -> np.ndarray:
    """Deterministic Bernoulli(lam) draws from a counter-based generator.

    Indexed by row position in the s-ordered dataset (group 0 first), so a
    given seed always repairs the same rows.
    """
    rng = np.random.Generator(np.random.Philox(key=seed))
    return rng.random(size) < lam


def random_repair(
    data: LabeledDataset, lam: float, seed: int, plan: RepairPlan | None = None
) -> RepairedDataset:
    """Bernoulli random repair.

    Draws one Bernoulli(lam) value per row (group 0 rows first, then group
    1). A row with draw 0 keeps its original point and full marginal mass;
    a row with draw 1 is replaced by its complete split-target set.
    """
    if not 0.0 <= lam <= 1.0:
        raise ValueError("repair amount lam must lie in [0, 1]")
    plan = plan if plan is not None else build_repair_plan(data)
    draws = bernoulli_stream(lam, plan.n0 + plan.n1, seed)
    return random_repair_from_draws(data, draws, lam=lam, seed=seed, plan=plan)


def random_repair_from_draws(
    data: LabeledDataset,
    draws,
    *,
    lam: float = math.nan,
    seed: int | None = None,
    plan: RepairPlan | None = None,
) -> RepairedDataset:
    """Random repair with an explicit vector of keep/split decisions.

    ``draws`` holds one boolean per row in s-order; useful for reproducing
    a specific repair pattern or for paired comparisons across methods.
    """
    plan = plan if plan is not None else build_repair_plan(data)
    draws = np.asarray(draws, dtype=bool)
    if draws.shape != (plan.n0 + plan.n1,):
        raise ValueError("one Bernoulli draw per dataset row required")
    if math.isnan(lam):
        lam = float(np.mean(draws))

    slices0 = plan.row_slices(0)
    order1 = plan.order_by_col
    slices1 = plan.row_slices(1)

    X_parts, w_parts, s_parts, o_parts = [], [], [], []
    for i in range(plan.n0):
        if draws[i]:
            lo, hi = slices0[i], slices0[i + 1]
            X_parts.append(plan.targets[lo:hi])
            w_parts.append(plan.frag_mass[lo:hi])
            o_parts.append(plan.rows0[plan.frag_i[lo:hi]])
        else:
            X_parts.append(plan.x0[i : i + 1])
            w_parts.append(plan.w0[i : i + 1])
            o_parts.append(plan.rows0[i : i + 1])
        s_parts.append(np.zeros(len(w_parts[-1]), np.int8))
    for j in range(plan.n1):
        if draws[plan.n0 + j]:
            lo, hi = slices1[j], slices1[j + 1]
            sel = order1[lo:hi]
            X_parts.append(plan.targets[sel])
            w_parts.append(plan.frag_mass[sel])
            o_parts.append(plan.rows1[plan.frag_j[sel]])
        else:
            X_parts.append(plan.x1[j : j + 1])
            w_parts.append(plan.w1[j : j + 1])
            o_parts.append(plan.rows1[j : j + 1])
        s_parts.append(np.ones(len(w_parts[-1]), np.int8))

    X = np.concatenate(X_parts)
    weights = np.concatenate(w_parts)
    s = np.concatenate(s_parts)
    origins = np.concatenate(o_parts)
    return _assemble(data, X, weights, s, origins, float(lam), "Random", seed, plan.pi0, plan.pi1)
