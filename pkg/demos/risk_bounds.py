"""Excess-risk bound and the random-repair risk mixture, numerically.

Uses synthetic problems with known Lipschitz success curves, so the true
Bayes rule and its risk are computable. The repaired-classification
penalty stays under the Lipschitz transport bound, and the risk on
randomly repaired data interpolates linearly between the original and the
fully repaired risks.

Run:  python3 demos/risk_bounds.py
"""

import numpy as np

import fairrepair as fr
from fairrepair import riskbound as rb

problem = rb.make_logistic_problem()
print("group balance pi0 = %.2f, Lipschitz K = %.3f" % (problem.pi0, problem.k_max))

print("\nexcess risk of classifying through the total repair vs its bound:")
for seed in range(5):
    est = rb.excess_risk(problem, 2000, seed)
    plan = fr.build_repair_plan(problem.sample(2000, seed))
    bound = rb.bound_theorem41(problem, plan)
    print(
        "  seed %d: excess = %.4f (+- %.4f)   bound = %.4f   lemma holds: %s"
        % (seed, est.value, est.stderr, bound, rb.lemma41_check(problem, 2000, seed))
    )

print("\nrisk on randomly repaired data vs the (1-lam)/lam mixture:")
data = problem.sample(1500, 99)
plan = fr.build_repair_plan(data)
for lam in (0.0, 0.25, 0.5, 0.75, 1.0):
    devs = []
    for k in range(40):
        rr, orig, full = rb.random_repair_risk_mixture(
            problem, lam, 1500, seed=k, plan_data=(data, plan)
        )
        devs.append(rr - ((1 - lam) * orig + lam * full))
    print(
        "  lam=%.2f: risk(original)=%.4f risk(repaired)=%.4f mean deviation=% .2e"
        % (lam, orig, full, np.mean(devs))
    )
