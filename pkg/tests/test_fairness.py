from fractions import Fraction

import numpy as np
import pytest

from fairrepair import (
    DegenerateClassifierError,
    EmpiricalMeasure,
    balanced_error_rate,
    di_ber_equivalence_check,
    disparate_impact,
    exhaustive_min_ber,
    min_ber_oracle,
    oae_gap,
    total_repair_B,
    tv_distance_discrete,
    tv_ks_1d,
    tv_lower_bound_di,
)
from conftest import make_random_dataset


class TestDisparateImpact:
    def test_equal_rates_give_one(self):
        pred = np.array([1, 0, 1, 0])
        s = np.array([0, 0, 1, 1])
        assert disparate_impact(pred, s).di == 1.0

    def test_ratio_by_definition(self):
        s = np.array([0] * 10 + [1] * 10)
        pred = np.array([1] * 2 + [0] * 8 + [1] * 4 + [0] * 6)
        report = disparate_impact(pred, s)
        assert report.a == 0.2 and report.b == 0.4
        assert report.di == 0.5

    def test_degenerate_classifier_rejected(self):
        s = np.array([0, 0, 1, 1])
        with pytest.raises(DegenerateClassifierError, match="degenerate classifier"):
            disparate_impact(np.array([0, 0, 1, 1]), s)

    def test_interval_contains_point_estimate(self):
        rng = np.random.default_rng(0)
        s = rng.integers(0, 2, size=400)
        pred = rng.integers(0, 2, size=400)
        report = disparate_impact(pred, s)
        assert report.di_lo <= report.di <= report.di_hi

    def test_interval_shrinks_like_root_n(self):
        rng = np.random.default_rng(1)

        def width(n):
            s = np.tile([0, 1], n // 2)
            pred = rng.random(n) < np.where(s == 0, 0.3, 0.6)
            r = disparate_impact(pred.astype(int), s)
            return np.log(r.di_hi) - np.log(r.di_lo)

        w_small = np.mean([width(400) for _ in range(30)])
        w_big = np.mean([width(1600) for _ in range(30)])
        assert w_big == pytest.approx(w_small / 2, rel=0.15)

    def test_report_json_fields(self):
        s = np.array([0, 0, 1, 1])
        pred = np.array([1, 0, 1, 0])
        payload = disparate_impact(pred, s, y=np.array([1, 0, 1, 1])).to_json_dict()
        assert set(payload) == {
            "a", "b", "di", "di_lo", "di_hi", "ber", "oae_gap", "n0", "n1", "confidence",
        }

    def test_ber_recomputable_from_rates(self):
        rng = np.random.default_rng(2)
        s = rng.integers(0, 2, size=200)
        pred = rng.integers(0, 2, size=200)
        r = disparate_impact(pred, s)
        assert r.ber == pytest.approx((1 - r.b + r.a) / 2, abs=1e-12)


class TestBalancedErrorRate:
    def test_perfect_group_predictor(self):
        s = np.array([0, 0, 1, 1])
        assert balanced_error_rate(s, s) == 0.0

    def test_inverted_predictor(self):
        s = np.array([0, 0, 1, 1])
        assert balanced_error_rate(1 - s, s) == 1.0

    def test_constant_predictor(self):
        s = np.array([0, 0, 1, 1])
        assert balanced_error_rate(np.ones(4, int), s) == 0.5
        assert balanced_error_rate(np.zeros(4, int), s) == 0.5


class TestOAEGap:
    def test_all_correct(self):
        s = np.array([0, 1, 0, 1])
        y = np.array([1, 0, 0, 1])
        assert oae_gap(y, y, s) == 0.0

    def test_one_group_wrong(self):
        s = np.array([0, 0, 1, 1])
        y = np.array([1, 1, 1, 1])
        pred = np.array([1, 1, 0, 0])
        assert oae_gap(pred, y, s) == 1.0

    def test_vanishes_for_random_predictions(self):
        rng = np.random.default_rng(3)
        n = 200_000
        s = rng.integers(0, 2, size=n)
        y = rng.integers(0, 2, size=n)
        pred = rng.integers(0, 2, size=n)
        assert oae_gap(pred, y, s) < 0.01

    def test_requires_labels(self):
        with pytest.raises(ValueError):
            oae_gap(np.array([0, 1]), None, np.array([0, 1]))


def binary_measure(mass0, mass1):
    return EmpiricalMeasure(np.array([[0.0], [1.0]]), np.array([mass0, mass1]))


class TestMinBEROracle:
    def test_equal_measures(self):
        mu = binary_measure(0.5, 0.5)
        report = min_ber_oracle(mu, mu)
        assert report.min_ber == 0.5 and report.tv == 0.0

    def test_disjoint_supports(self):
        mu0 = EmpiricalMeasure(np.array([[0.0]]))
        mu1 = EmpiricalMeasure(np.array([[1.0]]))
        report = min_ber_oracle(mu0, mu1)
        assert report.min_ber == 0.0 and report.tv == 1.0

    def test_frozen_example(self):
        report = min_ber_oracle(binary_measure(0.5, 0.5), binary_measure(0.25, 0.75))
        assert report.tv == 0.25
        assert report.min_ber == 0.375
        assert exhaustive_min_ber(binary_measure(0.5, 0.5), binary_measure(0.25, 0.75)) == 0.375

    def test_epsilon_star_is_min_ber(self):
        report = min_ber_oracle(binary_measure(0.3, 0.7), binary_measure(0.6, 0.4))
        assert report.epsilon_star == report.min_ber

    def test_exhaustive_equals_closed_form_exactly(self):
        rng = np.random.default_rng(4)
        for _ in range(60):
            size = int(rng.integers(2, 13))
            support = np.arange(size, dtype=float).reshape(-1, 1)
            w0 = rng.random(size) + 0.01
            w1 = rng.random(size) + 0.01
            mu0 = EmpiricalMeasure(support, w0 / w0.sum())
            mu1 = EmpiricalMeasure(support, w1 / w1.sum())
            report = min_ber_oracle(mu0, mu1)
            assert exhaustive_min_ber(mu0, mu1) == report.min_ber
            assert report.min_ber == pytest.approx((1 - report.tv) / 2, abs=1e-12)

    def test_support_cap(self):
        mu = EmpiricalMeasure(np.arange(30.0).reshape(-1, 1))
        with pytest.raises(ValueError, match="too large"):
            exhaustive_min_ber(mu, mu)

    def test_epsilon_predictability_equivalence(self):
        rng = np.random.default_rng(5)
        for _ in range(40):
            size = int(rng.integers(2, 10))
            support = np.arange(size, dtype=float).reshape(-1, 1)
            w0 = rng.random(size) + 0.01
            w1 = rng.random(size) + 0.01
            mu0 = EmpiricalMeasure(support, w0 / w0.sum())
            mu1 = EmpiricalMeasure(support, w1 / w1.sum())
            report = min_ber_oracle(mu0, mu1)
            eps = float(rng.random()) * 0.5
            if abs(report.min_ber - eps) < 1e-9:
                continue
            assert (report.min_ber > eps) == (report.tv < 1 - 2 * eps)


class TestTheorem21Equivalence:
    def test_boundary_triple_holds_with_equality(self):
        # di = 0.5 == tau and the BER threshold binds exactly
        a, b, tau = 0.3, 0.6, 0.5
        ber = Fraction(1) - Fraction(b) + Fraction(a)
        assert di_ber_equivalence_check(a, tau, ber / 2)
        assert Fraction(a) / Fraction(b) <= Fraction(tau)

    def test_tau_one_equal_rates(self):
        assert di_ber_equivalence_check(0.4, 1.0, (1 - 0.4 + 0.4) / 2)

    def test_grid_equivalence(self):
        for i in range(1, 31):
            a = Fraction(i, 30)
            for j in range(i, 31):
                b = Fraction(j, 30)
                ber = (1 - b + a) / 2
                for k in range(1, 6):
                    tau = Fraction(k, 5)
                    assert di_ber_equivalence_check(a, tau, ber) == (a / b <= tau)

    def test_tau_zero_rejected(self):
        with pytest.raises(ZeroDivisionError):
            di_ber_equivalence_check(0.5, 0.0, 0.5)


class TestTVLowerBound:
    def test_independence_forces_one(self):
        assert tv_lower_bound_di(0.0, 0.5) == 1.0

    def test_full_separation(self):
        assert tv_lower_bound_di(1.0, 1.0) == 0.5

    def test_zero_rate_rejected(self):
        with pytest.raises(ZeroDivisionError):
            tv_lower_bound_di(0.5, 0.0)

    def test_repaired_B_di_meets_bound(self):
        rng = np.random.default_rng(6)
        data = make_random_dataset(rng, 15, 20, 2)
        rep = total_repair_B(data)
        tv = tv_distance_discrete(rep.group_measure(0), rep.group_measure(1))
        assert tv == 0.0
        for _ in range(10):
            w = rng.normal(size=2)
            bias = -np.median(rep.X @ w)
            pred = (rep.X @ w + bias > 0).astype(int)
            if pred[rep.s == 0].sum() == 0 or pred[rep.s == 1].sum() == 0:
                continue
            report = disparate_impact(pred, rep.s, weights=rep.weights)
            assert report.di == 1.0
            assert report.di >= tv_lower_bound_di(tv, report.a) - 1e-12


class TestWeightedMetrics:
    def test_weighted_di_exactly_one_on_B(self):
        rng = np.random.default_rng(7)
        for _ in range(5):
            data = make_random_dataset(
                rng, int(rng.integers(4, 25)), int(rng.integers(4, 25)), 3
            )
            rep = total_repair_B(data)
            w = rng.normal(size=3)
            bias = -np.median(rep.X @ w)
            pred = (rep.X @ w + bias > 0).astype(int)
            if pred[rep.s == 0].sum() == 0 or pred[rep.s == 1].sum() == 0:
                continue
            report = disparate_impact(pred, rep.s, weights=rep.weights)
            assert report.di == 1.0
            assert report.ber == 0.5

    def test_weight_length_mismatch(self):
        with pytest.raises(ValueError):
            disparate_impact(
                np.array([1, 0]), np.array([0, 1]), weights=np.array([1.0])
            )


class TestTVKS1d:
    def test_identical_samples(self):
        x = np.array([0.0, 1.0, 2.0])
        assert tv_ks_1d(x, x) == 0.0

    def test_fully_separated(self):
        assert tv_ks_1d(np.array([0.0, 1.0]), np.array([5.0, 6.0])) == 1.0

    def test_shifted_uniforms(self):
        rng = np.random.default_rng(8)
        x0 = rng.uniform(0, 1, size=4000)
        x1 = rng.uniform(0.3, 1.3, size=4000)
        assert tv_ks_1d(x0, x1) == pytest.approx(0.3, abs=0.05)

    def test_weighted_agrees_with_replicated(self):
        x0 = np.array([0.0, 1.0])
        w0 = np.array([2.0, 1.0])
        x0_rep = np.array([0.0, 0.0, 1.0])
        x1 = np.array([0.5, 1.5])
        assert tv_ks_1d(x0, x1, weights0=w0) == tv_ks_1d(x0_rep, x1)
