import dataclasses
import math

import numpy as np
import pytest

from fairrepair import (
    EmpiricalMeasure,
    bayes_classifier,
    bound_theorem41,
    build_repair_plan,
    classifier_risk,
    excess_risk,
    lemma41_check,
    make_logistic_problem,
    make_ramp_problem,
    random_repair_risk_mixture,
    variance_functional,
    wasserstein2_1d,
)
from fairrepair.riskbound import barycenter_w2_terms


def problems_under_test():
    return [
        make_logistic_problem(),
        make_logistic_problem(slope0=2.0, slope1=0.5, loc0=-0.5, loc1=1.5, pi0=0.3),
        make_ramp_problem(),
        make_ramp_problem(k0=0.9, k1=0.2, pi0=0.6),
    ]


class TestSyntheticProblem:
    def test_lipschitz_spot_check(self):
        rng = np.random.default_rng(0)
        for problem in problems_under_test():
            x = rng.normal(scale=2.0, size=(10_000, 1))
            xp = x + rng.normal(scale=0.5, size=x.shape)
            for eta, k in (
                (problem.eta0, problem.lipschitz_k0),
                (problem.eta1, problem.lipschitz_k1),
            ):
                gap = np.abs(eta(x) - eta(xp))
                dist = np.abs(x[:, 0] - xp[:, 0])
                assert np.all(gap <= k * dist + 1e-12)

    def test_sampler_reproducible(self):
        problem = make_logistic_problem()
        d1 = problem.sample(500, seed=9)
        d2 = problem.sample(500, seed=9)
        assert np.array_equal(d1.X, d2.X)
        assert np.array_equal(d1.y, d2.y)

    def test_group_balance(self):
        problem = make_logistic_problem(pi0=0.25)
        data = problem.sample(20_000, seed=1)
        assert data.pi0 == pytest.approx(0.25, abs=0.02)


class TestBayesClassifier:
    def test_constant_eta_extremes(self):
        problem = dataclasses.replace(
            make_logistic_problem(),
            eta0=lambda X: np.ones(X.shape[0]),
            eta1=lambda X: np.ones(X.shape[0]),
            lipschitz_k0=0.0,
            lipschitz_k1=0.0,
        )
        rule = bayes_classifier(problem)
        data = problem.sample(200, seed=2)
        assert np.all(rule(data.X, data.s) == 1)
        assert classifier_risk(problem, rule, 2000, seed=2).value == 0.0

    def test_coin_flip_eta_has_half_risk(self):
        problem = dataclasses.replace(
            make_logistic_problem(),
            eta0=lambda X: np.full(X.shape[0], 0.5),
            eta1=lambda X: np.full(X.shape[0], 0.5),
            lipschitz_k0=0.0,
            lipschitz_k1=0.0,
        )
        rule = bayes_classifier(problem)
        assert classifier_risk(problem, rule, 3000, seed=3).value == pytest.approx(0.5)

    def test_two_gaussian_threshold_at_density_crossing(self):
        # class-conditional Gaussians N(-1, 1) / N(+1, 1) with prior q for
        # class 1: eta(x) = q f1 / (q f1 + (1-q) f0), so the Bayes rule
        # flips where q f1 = (1-q) f0 and its risk is the overlap integral
        from scipy.stats import norm as gaussian

        q = 0.35
        mu_neg, mu_pos = -1.0, 1.0

        def eta(X):
            f0 = gaussian.pdf(X[:, 0], mu_neg, 1.0)
            f1 = gaussian.pdf(X[:, 0], mu_pos, 1.0)
            return q * f1 / (q * f1 + (1 - q) * f0)

        problem = dataclasses.replace(
            make_logistic_problem(loc0=0.0, loc1=0.0, scale=1.6, pi0=0.5),
            eta0=eta,
            eta1=eta,
        )
        # crossing point: q f1 = (1-q) f0  =>  x = log((1-q)/q) / 2 here
        crossing = math.log((1 - q) / q) / (mu_pos - mu_neg)
        rule = bayes_classifier(problem)
        eps = 1e-6
        probe = np.array([[crossing - eps], [crossing + eps]])
        assert list(rule(probe, np.array([0, 0]))) == [0, 1]

        # closed-form risk: P(X drawn from the mixture lands on the wrong
        # side), with X | class ~ the class Gaussian
        risk_closed = (1 - q) * (1 - gaussian.cdf(crossing, mu_neg, 1.0)) + q * gaussian.cdf(
            crossing, mu_pos, 1.0
        )

        def sample_mixture(rng, size):
            cls = rng.random(size) < q
            return (rng.normal(0.0, 1.0, size=(size, 1)) + np.where(cls, mu_pos, mu_neg)[:, None])

        problem = dataclasses.replace(
            problem, sample_group0=sample_mixture, sample_group1=sample_mixture
        )
        est = classifier_risk(problem, rule, 100_000, seed=77)
        assert abs(est.value - risk_closed) <= 3 * est.stderr

    def test_beats_perturbed_rules(self):
        problem = make_logistic_problem()
        bayes = bayes_classifier(problem)
        rng = np.random.default_rng(4)
        base = classifier_risk(problem, bayes, 50_000, seed=5).value
        for _ in range(100):
            shift = rng.normal(scale=0.7)
            cut = rng.normal(scale=0.5)

            def perturbed(X, s, shift=shift, cut=cut):
                eta = problem.eta(X, s)
                return ((eta + shift * (X[:, 0] - cut)) > 0.5).astype(int)

            assert base <= classifier_risk(problem, perturbed, 50_000, seed=5).value + 1e-12


class TestExcessRisk:
    def test_identity_repair_is_zero(self):
        problem = make_logistic_problem()
        est = excess_risk(problem, 400, seed=6, method="geometric", lam=0.0)
        assert abs(est.value) <= 1e-12 and est.stderr <= 1e-12

    def test_identical_groups_give_tiny_excess(self):
        problem = make_logistic_problem(
            slope0=1.0, intercept0=0.0, slope1=1.0, intercept1=0.0, loc0=0.0, loc1=0.0
        )
        est = excess_risk(problem, 4000, seed=7)
        assert abs(est.value) <= 3 * est.stderr + 5e-3

    def test_bounded_by_theorem41_across_seeds(self):
        for k, problem in enumerate(problems_under_test()):
            for seed in (10 + k, 60 + k):
                est = excess_risk(problem, 1500, seed=seed)
                plan = build_repair_plan(problem.sample(1500, seed))
                bound = bound_theorem41(problem, plan)
                assert est.value <= bound + 3 * est.stderr

    def test_nonnegative_at_bayes_rule(self):
        # moving to the repaired representation can never beat the Bayes rule
        problem = make_ramp_problem()
        est = excess_risk(problem, 2000, seed=8)
        assert est.value >= -1e-12


class TestTheorem41Bound:
    def test_small_for_nearly_coincident_groups(self):
        problem = make_logistic_problem(loc0=0.5, loc1=0.5, scale=1.0)
        plan = build_repair_plan(problem.sample(300, seed=9))
        wide = make_logistic_problem()
        wide_plan = build_repair_plan(wide.sample(300, seed=9))
        assert 0.0 <= bound_theorem41(problem, plan) < bound_theorem41(wide, wide_plan)

    def test_zero_bound_and_excess_for_identical_group_supports(self):
        # both groups on the same points: the barycenter is the common
        # support, the transport never moves mass, bound and excess vanish
        from fairrepair import LabeledDataset

        pts = np.linspace(-2, 2, 9).reshape(-1, 1)
        data = LabeledDataset(np.vstack([pts, pts]), [0] * 9 + [1] * 9)
        plan = build_repair_plan(data)
        assert plan.total_cost == 0.0
        assert bound_theorem41(make_logistic_problem(), plan) == 0.0

    def test_doubling_k_doubles_bound(self):
        problem = make_logistic_problem()
        plan = build_repair_plan(problem.sample(500, seed=10))
        doubled = dataclasses.replace(
            problem,
            lipschitz_k0=2 * problem.lipschitz_k0,
            lipschitz_k1=2 * problem.lipschitz_k1,
        )
        assert bound_theorem41(doubled, plan) == pytest.approx(
            2 * bound_theorem41(problem, plan), rel=1e-12
        )

    def test_w2_terms_match_transport_module(self):
        problem = make_logistic_problem()
        plan = build_repair_plan(problem.sample(400, seed=11))
        bary = EmpiricalMeasure(plan.targets, plan.frag_mass)
        w0_sq, w1_sq = barycenter_w2_terms(plan)
        mu0 = EmpiricalMeasure(plan.x0, plan.w0)
        mu1 = EmpiricalMeasure(plan.x1, plan.w1)
        assert wasserstein2_1d(mu0, bary) ** 2 == pytest.approx(w0_sq, abs=1e-9)
        assert wasserstein2_1d(mu1, bary) ** 2 == pytest.approx(w1_sq, abs=1e-9)


class TestLemma41:
    def test_holds_on_random_problems(self):
        for k, problem in enumerate(problems_under_test()):
            for seed in (20 + k, 40 + k, 80 + k):
                assert lemma41_check(problem, 1200, seed=seed)

    def test_trivial_for_constant_eta(self):
        problem = dataclasses.replace(
            make_logistic_problem(),
            eta0=lambda X: np.full(X.shape[0], 0.8),
            eta1=lambda X: np.full(X.shape[0], 0.8),
            lipschitz_k0=0.0,
            lipschitz_k1=0.0,
        )
        assert lemma41_check(problem, 500, seed=21)


class TestRiskMixture:
    def test_endpoints(self):
        problem = make_logistic_problem()
        data = problem.sample(600, seed=22)
        plan = build_repair_plan(data)
        rr0, orig, _ = random_repair_risk_mixture(
            problem, 0.0, 600, seed=1, plan_data=(data, plan)
        )
        assert rr0 == pytest.approx(orig, abs=1e-12)
        rr1, _, full = random_repair_risk_mixture(
            problem, 1.0, 600, seed=1, plan_data=(data, plan)
        )
        assert rr1 == pytest.approx(full, abs=1e-12)

    def test_midpoint_within_three_sigma(self):
        problem = make_logistic_problem()
        data = problem.sample(800, seed=23)
        plan = build_repair_plan(data)
        devs = []
        for k in range(50):
            rr, orig, full = random_repair_risk_mixture(
                problem, 0.5, 800, seed=300 + k, plan_data=(data, plan)
            )
            devs.append(rr - 0.5 * (orig + full))
        mean = float(np.mean(devs))
        se = float(np.std(devs, ddof=1) / math.sqrt(len(devs)))
        assert abs(mean) <= 3 * se + 1e-12

    def test_invalid_lambda(self):
        with pytest.raises(ValueError):
            random_repair_risk_mixture(make_logistic_problem(), 1.5, 100, seed=0)


def test_barycenter_minimizes_weighted_w2_sum():
    problem = make_logistic_problem()
    plan = build_repair_plan(problem.sample(120, seed=24))
    mu0 = EmpiricalMeasure(plan.x0, plan.w0)
    mu1 = EmpiricalMeasure(plan.x1, plan.w1)
    bary = EmpiricalMeasure(plan.targets, plan.frag_mass)
    weights = [plan.pi0, plan.pi1]
    v_bary = variance_functional(bary, [mu0, mu1], weights)
    lo = min(plan.x0.min(), plan.x1.min())
    hi = max(plan.x0.max(), plan.x1.max())
    candidates = [mu0, mu1] + [
        EmpiricalMeasure(np.linspace(lo, hi, k).reshape(-1, 1)) for k in (5, 20, 60)
    ]
    for nu in candidates:
        assert v_bary <= variance_functional(nu, [mu0, mu1], weights) + 1e-10
