"""Fairness and predictability metrics for binary classifiers.

Disparate impact with a log-ratio confidence interval, balanced error
rate, overall-accuracy-equality gap, the minimum-BER oracle (closed form
and exhaustive enumeration over all deterministic classifiers on a small
support), and the algebraic consistency checks tying those quantities
together. All rate computations accept optional per-row weights for
mass-split repaired data.

Exactness notes: group rates are accumulated with ``math.fsum``, so two
groups with identical weighted supports produce a disparate impact of
exactly 1.0; the minimum-BER routines run in exact rational arithmetic,
so the closed form and the exhaustive enumeration agree bit-for-bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.stats import norm

from .measures import DimensionMismatchError, EmpiricalMeasure, support_keys

EXHAUSTIVE_SUPPORT_CAP = 24


class DegenerateClassifierError(ValueError):
    """The classifier predicts no positives in one of the groups."""


def _weighted_fraction(values: np.ndarray, weights: np.ndarray) -> float:
    """fsum-based weighted mean of a 0/1 vector (order independent)."""
    num = math.fsum(weights[values].tolist())
    den = math.fsum(weights.tolist())
    if den <= 0:
        raise ValueError("weights in a group must have positive total mass")
    return num / den


def _group_arrays(pred, s, weights):
    pred = np.asarray(pred)
    s = np.asarray(s)
    if pred.shape != s.shape:
        raise ValueError("pred and s must have equal length")
    if not np.all(np.isin(pred, (0, 1))):
        raise ValueError("predictions must take values in {0, 1}")
    if weights is None:
        weights = np.ones(pred.shape[0])
    else:
        weights = np.asarray(weights, dtype=float)
        if weights.shape != pred.shape:
            raise ValueError("weights must have one entry per prediction")
        if np.any(weights < 0):
            raise ValueError("weights must be nonnegative")
    if not (np.any(s == 0) and np.any(s == 1)):
        raise ValueError("both protected classes must be present")
    return pred, s, weights


def _effective_size(weights: np.ndarray) -> float:
    """Kish effective sample size, (sum w)^2 / sum w^2."""
    total = math.fsum(weights.tolist())
    squares = math.fsum((weights * weights).tolist())
    return total * total / squares


@dataclass(frozen=True)
class FairnessReport:
    """Disparate impact audit of one classifier on one dataset."""

    a: float
    b: float
    di: float
    di_lo: float
    di_hi: float
    ber: float
    oae_gap: float | None
    n0: int
    n1: int
    confidence: float

    def to_json_dict(self) -> dict:
        return {
            "a": self.a,
            "b": self.b,
            "di": self.di,
            "di_lo": self.di_lo,
            "di_hi": self.di_hi,
            "ber": self.ber,
            "oae_gap": self.oae_gap,
            "n0": self.n0,
            "n1": self.n1,
            "confidence": self.confidence,
        }


def disparate_impact(
    pred,
    s,
    confidence: float = 0.95,
    *,
    weights=None,
    y=None,
) -> FairnessReport:
    """Disparate impact a/b with a log-ratio confidence interval.

    ``a`` and ``b`` are the positive-prediction rates of groups 0 and 1.
    The interval is the Katz interval for a ratio of binomial proportions,
    ``exp(log(a/b) +- z * sqrt((1-a)/(n0 a) + (1-b)/(n1 b)))``; for
    weighted rows the group sizes are Kish effective sample sizes, since
    mass-split fragments are not independent observations.
    """
    pred, s, w = _group_arrays(pred, s, weights)
    if not 0 < confidence < 1:
        raise ValueError("confidence must lie in (0, 1)")
    pos = pred == 1
    mask0 = s == 0
    mask1 = s == 1
    a = _weighted_fraction(pos[mask0], w[mask0])
    b = _weighted_fraction(pos[mask1], w[mask1])
    if a == 0 or b == 0:
        raise DegenerateClassifierError(
            "degenerate classifier: no positive predictions in one group"
        )
    di = a / b
    n0_eff = _effective_size(w[mask0])
    n1_eff = _effective_size(w[mask1])
    z = float(norm.ppf(0.5 + confidence / 2))
    se = math.sqrt(
        max(0.0, (1 - a) / (n0_eff * a)) + max(0.0, (1 - b) / (n1_eff * b))
    )
    # exp underflows to 0.0 on its own; only the upper bound can overflow,
    # and an uninformative rate estimate honestly means an infinite bound
    lo = di * math.exp(-z * se)
    hi = di * (math.exp(z * se) if z * se < 709.0 else math.inf)
    gap = None if y is None else oae_gap(pred, y, s, weights=weights)
    return FairnessReport(
        a=a,
        b=b,
        di=di,
        di_lo=lo,
        di_hi=hi,
        ber=balanced_error_rate(pred, s, weights=weights),
        oae_gap=gap,
        n0=int(np.sum(mask0)),
        n1=int(np.sum(mask1)),
        confidence=confidence,
    )


def balanced_error_rate(pred, s, *, weights=None) -> float:
    """Average class-conditional error of predicting the group from X."""
    pred, s, w = _group_arrays(pred, s, weights)
    miss1 = _weighted_fraction(pred[s == 1] == 0, w[s == 1])
    hit0 = _weighted_fraction(pred[s == 0] == 1, w[s == 0])
    return (miss1 + hit0) / 2


def oae_gap(pred, y, s, *, weights=None) -> float:
    """Absolute gap in per-group accuracy, |P(g=Y|S=0) - P(g=Y|S=1)|."""
    if y is None:
        raise ValueError("labels are required for the accuracy-equality gap")
    pred, s, w = _group_arrays(pred, s, weights)
    y = np.asarray(y)
    if y.shape != pred.shape:
        raise ValueError("y must have one entry per prediction")
    correct = pred == y
    acc0 = _weighted_fraction(correct[s == 0], w[s == 0])
    acc1 = _weighted_fraction(correct[s == 1], w[s == 1])
    return abs(acc0 - acc1)


@dataclass(frozen=True)
class PredictabilityReport:
    """How well the group can possibly be predicted from the features."""

    min_ber: float
    tv: float
    epsilon_star: float


def _exact_mass_diffs(mu0: EmpiricalMeasure, mu1: EmpiricalMeasure) -> list[Fraction]:
    """Per-support-point mass differences q_z - p_z in exact rationals.

    Each measure's float weights are renormalised exactly, so the diffs
    sum to exactly zero and the closed-form and exhaustive minimum-BER
    routes agree without floating-point slack.
    """
    if mu0.dim != mu1.dim:
        raise DimensionMismatchError(f"dim {mu0.dim} vs {mu1.dim}")
    masses: dict[tuple, list[Fraction]] = {}
    for side, mu in enumerate((mu0, mu1)):
        total = sum(Fraction(float(w)) for w in mu.weights)
        for key, w in zip(support_keys(mu.points), mu.weights):
            entry = masses.setdefault(key, [Fraction(0), Fraction(0)])
            entry[side] += Fraction(float(w)) / total
    return [q - p for p, q in masses.values()]


def min_ber_oracle(mu0: EmpiricalMeasure, mu1: EmpiricalMeasure) -> PredictabilityReport:
    """Closed-form minimum balanced error rate, (1 - TV) / 2.

    Evaluated in exact rational arithmetic on the aggregated union
    support; ``epsilon_star`` equals ``min_ber``.
    """
    diffs = _exact_mass_diffs(mu0, mu1)
    tv = sum(abs(d) for d in diffs) / 2
    min_ber = (1 - tv) / 2
    return PredictabilityReport(
        min_ber=float(min_ber), tv=float(tv), epsilon_star=float(min_ber)
    )


def exhaustive_min_ber(
    mu0: EmpiricalMeasure,
    mu1: EmpiricalMeasure,
    max_support: int = EXHAUSTIVE_SUPPORT_CAP,
) -> float:
    """True minimum BER by enumerating every deterministic classifier.

    Walks all 2^k subsets of the union support (k capped at
    ``max_support``) in Gray-code order, tracking the subset mass
    difference exactly. Agrees with ``min_ber_oracle`` bit-for-bit.
    """
    diffs = _exact_mass_diffs(mu0, mu1)
    k = len(diffs)
    if k > max_support:
        raise ValueError(
            f"support of size {k} too large for exhaustive enumeration (cap {max_support})"
        )
    best = running = Fraction(0)
    for step in range(1, 1 << k):
        bit = (step & -step).bit_length() - 1
        gray = step ^ (step >> 1)
        if (gray >> bit) & 1:
            running += diffs[bit]
        else:
            running -= diffs[bit]
        if running > best:
            best = running
    return float((1 - best) / 2)


def di_ber_equivalence_check(a, tau, ber) -> bool:
    """Whether ``ber <= 1/2 - (a/2) (1/tau - 1)``.

    Evaluated in exact rational arithmetic, so grid points sitting exactly
    on the boundary do not flip on rounding: for ``ber = (1 - b + a) / 2``
    the predicate holds iff ``a / b <= tau``.
    """
    a = Fraction(a)
    tau = Fraction(tau)
    ber = Fraction(ber)
    if tau == 0:
        raise ZeroDivisionError("tau must be positive")
    if not (0 < a <= 1 and 0 < tau <= 1):
        raise ValueError("require 0 < a <= 1 and 0 < tau <= 1")
    return ber <= Fraction(1, 2) - (a / 2) * (1 / tau - 1)


def tv_lower_bound_di(tv, a) -> float:
    """Lower bound 1 / (1 + tv / a) on any classifier's disparate impact."""
    if not 0.0 <= tv <= 1.0:
        raise ValueError("tv must lie in [0, 1]")
    if a <= 0:
        raise ZeroDivisionError("positive group-0 rate required")
    return 1.0 / (1.0 + tv / a)


def tv_ks_1d(values0, values1, *, weights0=None, weights1=None) -> float:
    """Estimate the TV distance of two 1-d samples by the weighted KS statistic.

    The sup-distance between the weighted empirical CDFs equals
    ``1 - 2 * min-BER`` over threshold classifiers, which for
    single-crossing density pairs (e.g. shifted uniforms) is a consistent
    estimate of the total variation distance of the underlying laws.
    """
    v0 = np.asarray(values0, dtype=float).ravel()
    v1 = np.asarray(values1, dtype=float).ravel()
    w0 = np.ones(v0.size) if weights0 is None else np.asarray(weights0, dtype=float)
    w1 = np.ones(v1.size) if weights1 is None else np.asarray(weights1, dtype=float)
    if w0.shape != v0.shape or w1.shape != v1.shape:
        raise ValueError("one weight per value required")
    ord0 = np.argsort(v0, kind="stable")
    ord1 = np.argsort(v1, kind="stable")
    v0, w0 = v0[ord0], w0[ord0]
    v1, w1 = v1[ord1], w1[ord1]
    c0 = np.cumsum(w0) / np.sum(w0)
    c1 = np.cumsum(w1) / np.sum(w1)
    grid = np.union1d(v0, v1)
    f0 = np.concatenate(([0.0], c0))[np.searchsorted(v0, grid, side="right")]
    f1 = np.concatenate(([0.0], c1))[np.searchsorted(v1, grid, side="right")]
    return float(np.max(np.abs(f0 - f1)))
