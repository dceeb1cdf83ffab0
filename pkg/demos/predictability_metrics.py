"""Group predictability and the fairness metrics around it.

Shows the two routes to the minimum balanced error rate (closed form vs
enumeration of every deterministic classifier), the TV distance driving
both, and the algebraic link between the BER threshold and the disparate
impact level.

Run:  python3 demos/predictability_metrics.py
"""

import numpy as np

import fairrepair as fr

# --- two small discrete feature distributions ------------------------------
support = np.arange(4.0).reshape(-1, 1)
mu0 = fr.EmpiricalMeasure(support, np.array([0.40, 0.30, 0.20, 0.10]))
mu1 = fr.EmpiricalMeasure(support, np.array([0.10, 0.20, 0.30, 0.40]))

print("TV distance:", fr.tv_distance_discrete(mu0, mu1))

report = fr.min_ber_oracle(mu0, mu1)
brute = fr.exhaustive_min_ber(mu0, mu1)
print("min BER, closed form (1 - TV)/2:", report.min_ber)
print("min BER, all 2^4 classifiers:   ", brute)
print("bitwise equal:", brute == report.min_ber)

# S is not eps-predictable below the floor, and the floor pins a DI bound
eps = 0.3
print(
    f"\nnot {eps}-predictable:",
    report.min_ber > eps,
    "  (equivalently TV < 1 - 2 eps:",
    report.tv < 1 - 2 * eps,
    ")",
)
rate0 = 0.35
print(
    "every classifier with group-0 rate a=%.2f has DI > %.4f"
    % (rate0, fr.tv_lower_bound_di(report.tv, rate0))
)

# --- the BER threshold is the same statement as a DI level -----------------
print("\nDI level tau vs BER threshold, at a=0.3, b=0.6 (so DI = 0.5):")
a, b = 0.3, 0.6
ber = (1 - b + a) / 2  # BER of the rate pair (a, b)
for tau in (0.4, 0.5, 0.6, 0.8):
    lhs = fr.di_ber_equivalence_check(a, tau, ber)
    print(f"  tau={tau}: BER bound holds = {lhs},  a/b <= tau = {a / b <= tau}")

# --- auditing an actual prediction vector ----------------------------------
rng = np.random.default_rng(0)
s = rng.integers(0, 2, size=1000)
pred = (rng.random(1000) < np.where(s == 0, 0.25, 0.5)).astype(int)
audit = fr.disparate_impact(pred, s)
print(
    "\nsimulated audit: a=%.3f b=%.3f DI=%.3f CI=(%.3f, %.3f) BER=%.3f"
    % (audit.a, audit.b, audit.di, audit.di_lo, audit.di_hi, audit.ber)
)
