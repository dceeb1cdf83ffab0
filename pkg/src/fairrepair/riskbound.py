"""Numeric verification of the repair risk theory on synthetic problems.

Real data never exposes the true conditional success probabilities, so
the excess-risk bounds are checked on synthetic generators with known,
Lipschitz ``eta_s``. Excess risk is evaluated on the empirical repair
plan itself (the plan's coupling is only defined on its sample points)
with Monte Carlo slack from the row-level variance of the estimate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import expit

from .measures import LabeledDataset
from .repair import RepairPlan, build_repair_plan, random_repair

_Z_SLACK = 3.0


@dataclass(frozen=True)
class MCEstimate:
    """Monte Carlo estimate with its standard error."""

    value: float
    stderr: float


@dataclass(frozen=True, eq=False)
class SyntheticProblem:
    """Binary prediction problem with known group-conditional structure.

    ``eta0``/``eta1`` map feature arrays to success probabilities and are
    Lipschitz with the stated constants; the samplers draw group features
    and ``pi0`` fixes the group balance.
    """

    eta0: Callable[[np.ndarray], np.ndarray]
    eta1: Callable[[np.ndarray], np.ndarray]
    lipschitz_k0: float
    lipschitz_k1: float
    pi0: float
    sample_group0: Callable[[np.random.Generator, int], np.ndarray]
    sample_group1: Callable[[np.random.Generator, int], np.ndarray]
    dim: int = 1

    @property
    def k_max(self) -> float:
        return max(self.lipschitz_k0, self.lipschitz_k1)

    @property
    def pi1(self) -> float:
        return 1.0 - self.pi0

    def eta(self, X: np.ndarray, s: np.ndarray) -> np.ndarray:
        out = np.empty(X.shape[0])
        m0 = s == 0
        if np.any(m0):
            out[m0] = self.eta0(X[m0])
        if np.any(~m0):
            out[~m0] = self.eta1(X[~m0])
        return out

    def sample(self, n: int, seed: int) -> LabeledDataset:
        """Draw n rows (x, s, y); reseeds until both groups are non-empty."""
        for attempt in range(64):
            rng = np.random.Generator(np.random.Philox(key=seed + attempt))
            s = (rng.random(n) >= self.pi0).astype(np.int8)
            if np.any(s == 0) and np.any(s == 1):
                break
        else:  # pragma: no cover
            raise RuntimeError("could not draw both groups")
        X = np.empty((n, self.dim))
        m0 = s == 0
        X[m0] = self.sample_group0(rng, int(np.sum(m0)))
        X[~m0] = self.sample_group1(rng, int(np.sum(~m0)))
        y = (rng.random(n) < self.eta(X, s)).astype(np.int8)
        return LabeledDataset(X, s, y)


def _gaussian_sampler(loc: float, scale: float):
    def sample(rng: np.random.Generator, size: int) -> np.ndarray:
        return rng.normal(loc, scale, size=(size, 1))

    return sample


def make_logistic_problem(
    slope0: float = 1.2,
    intercept0: float = -0.3,
    slope1: float = 0.8,
    intercept1: float = 0.4,
    loc0: float = -1.0,
    loc1: float = 1.0,
    scale: float = 1.0,
    pi0: float = 0.4,
) -> SyntheticProblem:
    """1-d problem with sigmoid success curves; Lipschitz constant |slope|/4."""
    return SyntheticProblem(
        eta0=lambda X: expit(slope0 * X[:, 0] + intercept0),
        eta1=lambda X: expit(slope1 * X[:, 0] + intercept1),
        lipschitz_k0=abs(slope0) / 4,
        lipschitz_k1=abs(slope1) / 4,
        pi0=pi0,
        sample_group0=_gaussian_sampler(loc0, scale),
        sample_group1=_gaussian_sampler(loc1, scale),
    )


def make_ramp_problem(
    k0: float = 0.5,
    center0: float = -0.5,
    k1: float = 0.7,
    center1: float = 0.5,
    loc0: float = -1.0,
    loc1: float = 1.0,
    scale: float = 1.0,
    pi0: float = 0.5,
) -> SyntheticProblem:
    """1-d problem with clipped linear ramps; Lipschitz constant |k|."""

    def ramp(k, c):
        return lambda X: np.clip(0.5 + k * (X[:, 0] - c), 0.0, 1.0)

    return SyntheticProblem(
        eta0=ramp(k0, center0),
        eta1=ramp(k1, center1),
        lipschitz_k0=abs(k0),
        lipschitz_k1=abs(k1),
        pi0=pi0,
        sample_group0=_gaussian_sampler(loc0, scale),
        sample_group1=_gaussian_sampler(loc1, scale),
    )


def bayes_classifier(problem: SyntheticProblem):
    """Group-aware Bayes rule, 1 iff eta_s(x) > 1/2."""

    def rule(X: np.ndarray, s: np.ndarray) -> np.ndarray:
        return (problem.eta(X, s) > 0.5).astype(np.int8)

    return rule


def classifier_risk(problem: SyntheticProblem, rule, n: int, seed: int) -> MCEstimate:
    """Misclassification risk of a (x, s) rule via the conditional error form.

    Uses ``P(g != Y | x, s) = 1{g=0}(2 eta - 1) + 1 - eta`` pointwise,
    which has lower variance than comparing against sampled labels.
    """
    data = problem.sample(n, seed)
    eta = problem.eta(data.X, data.s)
    g = np.asarray(rule(data.X, data.s))
    vals = (g == 0) * (2 * eta - 1) + 1 - eta
    return MCEstimate(float(np.mean(vals)), float(np.std(vals, ddof=1) / math.sqrt(n)))


def _plan_fragment_table(plan: RepairPlan, lam: float = 1.0):
    """Per-fragment (dataset row, point, conditional probability) arrays.

    Conditional probabilities renormalise each row's fragment masses to
    one, i.e. the chance that the row is transported to that target.
    """
    if lam == 1.0:
        pts0 = plan.targets
        pts1 = plan.targets
    else:
        pts0 = (1 - lam) * plan.x0[plan.frag_i] + lam * plan.targets
        pts1 = (1 - lam) * plan.x1[plan.frag_j] + lam * plan.targets
    rows = np.concatenate([plan.rows0[plan.frag_i], plan.rows1[plan.frag_j]])
    pts = np.concatenate([pts0, pts1])
    groups = np.concatenate(
        [
            np.zeros(plan.n_fragments, np.int8),
            np.ones(plan.n_fragments, np.int8),
        ]
    )
    cond0 = plan.frag_mass / plan.w0[plan.frag_i]
    cond1 = plan.frag_mass / plan.w1[plan.frag_j]
    probs = np.concatenate([cond0, cond1])
    return rows, pts, groups, probs


def excess_risk(
    problem: SyntheticProblem,
    n: int,
    seed: int,
    *,
    method: str = "total",
    lam: float = 1.0,
) -> MCEstimate:
    """Risk increase from classifying through the repair transformation.

    Draws a dataset, builds its repair plan, and compares the Bayes rule
    applied to the (split) repaired points against the Bayes rule on the
    original rows; the conditional error terms shared by both sides cancel
    row by row. ``method`` is ``"total"`` or ``"geometric"`` (then ``lam``
    applies). The identity case ``lam = 0`` gives exactly zero.
    """
    if method not in ("total", "geometric"):
        raise ValueError("method must be 'total' or 'geometric'")
    use_lam = 1.0 if method == "total" else lam
    data = problem.sample(n, seed)
    plan = build_repair_plan(data)
    rule = bayes_classifier(problem)

    eta_orig = problem.eta(data.X, data.s)
    base = 2 * eta_orig - 1
    ind_orig = (rule(data.X, data.s) == 0).astype(float)

    rows, pts, groups, probs = _plan_fragment_table(plan, use_lam)
    ind_frag = (rule(pts, groups) == 0).astype(float)
    rep_ind = np.zeros(data.n)
    np.add.at(rep_ind, rows, probs * ind_frag)

    delta = base * (rep_ind - ind_orig)
    return MCEstimate(
        float(np.mean(delta)), float(np.std(delta, ddof=1) / math.sqrt(data.n))
    )


def barycenter_w2_terms(plan: RepairPlan) -> tuple[float, float]:
    """Squared W2 distances from each group to the barycenter.

    Along the optimal transport rays the displacement to the barycenter is
    the ``pi``-scaled displacement between the groups, so the terms are
    ``pi1^2 * cost`` and ``pi0^2 * cost``.
    """
    return plan.pi1**2 * plan.total_cost, plan.pi0**2 * plan.total_cost


def bound_theorem41(problem: SyntheticProblem, plan: RepairPlan) -> float:
    """Upper bound 2 sqrt(2) K (pi0 W2^2(mu0, nu) + pi1 W2^2(mu1, nu))^(1/2).

    With the barycenter as the target the bracketed sum collapses to
    ``pi0 * pi1 * cost``. Linear in the Lipschitz constant.
    """
    w0_sq, w1_sq = barycenter_w2_terms(plan)
    total = plan.pi0 * w0_sq + plan.pi1 * w1_sq
    return 2.0 * math.sqrt(2.0) * problem.k_max * math.sqrt(max(total, 0.0))


def lemma41_check(
    problem: SyntheticProblem, n: int, seed: int, z: float = _Z_SLACK
) -> bool:
    """Whether excess risk <= 2 E|eta_S(X) - eta_S(T_S(X))| within z sigma."""
    data = problem.sample(n, seed)
    plan = build_repair_plan(data)
    rule = bayes_classifier(problem)

    eta_orig = problem.eta(data.X, data.s)
    base = 2 * eta_orig - 1
    ind_orig = (rule(data.X, data.s) == 0).astype(float)

    rows, pts, groups, probs = _plan_fragment_table(plan)
    ind_frag = (rule(pts, groups) == 0).astype(float)
    eta_frag = problem.eta(pts, groups)

    rep_ind = np.zeros(data.n)
    np.add.at(rep_ind, rows, probs * ind_frag)
    lhs = base * (rep_ind - ind_orig)

    eta_shift = np.zeros(data.n)
    np.add.at(eta_shift, rows, probs * np.abs(eta_orig[rows] - eta_frag))
    rhs = 2 * eta_shift

    margin = rhs - lhs
    m = float(np.mean(margin))
    se = float(np.std(margin, ddof=1) / math.sqrt(data.n))
    return m >= -z * se


def random_repair_risk_mixture(
    problem: SyntheticProblem,
    lam: float,
    n: int,
    seed: int,
    *,
    plan_data: tuple[LabeledDataset, RepairPlan] | None = None,
) -> tuple[float, float, float]:
    """Risks (randomly repaired, original, fully repaired) for a fixed rule.

    The classifier sees only the feature vector (a threshold on the
    group-mixed success curve); labels keep the original conditional law,
    so the error of a repaired fragment evaluates ``eta`` at the source
    row. Pass ``plan_data`` to reuse one dataset and plan across seeds.
    """
    if not 0.0 <= lam <= 1.0:
        raise ValueError("repair amount lam must lie in [0, 1]")
    if plan_data is None:
        data_seed = int(np.random.SeedSequence(seed).generate_state(1)[0])
        data = problem.sample(n, data_seed)
        plan = build_repair_plan(data)
    else:
        data, plan = plan_data

    def mixed_rule(X: np.ndarray, _s=None) -> np.ndarray:
        mix = problem.pi0 * problem.eta0(X) + problem.pi1 * problem.eta1(X)
        return (mix > 0.5).astype(np.int8)

    eta_orig = problem.eta(data.X, data.s)

    def err(points: np.ndarray, source_rows: np.ndarray) -> np.ndarray:
        g = mixed_rule(points).astype(float)
        e = eta_orig[source_rows]
        return (1 - g) * e + g * (1 - e)

    e_orig = err(data.X, np.arange(data.n))
    rows, pts, _groups, probs = _plan_fragment_table(plan)
    e_full = np.zeros(data.n)
    np.add.at(e_full, rows, probs * err(pts, rows))

    repaired = random_repair(data, lam, seed, plan=plan)
    e_rep = err(repaired.X, repaired.origins)
    risk_rr = float(np.sum(repaired.joint_weights * e_rep))

    risk_orig = float(np.mean(e_orig))
    risk_full = float(np.mean(e_full))
    return risk_rr, risk_orig, risk_full
