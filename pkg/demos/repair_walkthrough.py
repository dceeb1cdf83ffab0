"""Walk through the repair machinery on a tiny 1-d dataset.

Two protected groups of sizes 4 and 7, strictly sorted points. We solve
the exact transportation problem between the group measures, read the
barycenter off the optimal coupling, and compare the repair procedures.

Run:  python3 demos/repair_walkthrough.py
"""

import numpy as np

import fairrepair as fr

np.set_printoptions(precision=4, suppress=True)

# --- the dataset: group 0 has 4 rows, group 1 has 7 -----------------------
x0 = np.array([0.5, 1.5, 2.5, 3.5])
x1 = np.array([0.2, 0.8, 1.4, 2.0, 2.6, 3.2, 3.8])
data = fr.LabeledDataset(
    np.concatenate([x0, x1]).reshape(-1, 1),
    np.array([0] * 4 + [1] * 7),
)

mu0 = fr.group_measure(data, 0)
mu1 = fr.group_measure(data, 1)
print("group sizes:", mu0.n, "and", mu1.n, "- uniform weights 1/4 and 1/7")

# --- exact optimal coupling ------------------------------------------------
result = fr.solve_transport(mu0, mu1)
print("\noptimal coupling (rows = group 0, cols = group 1):")
print(result.coupling.gamma)
print("transport cost:", round(result.cost, 6), " W2:", round(result.w2, 6))
print("positive entries:", result.coupling.support_size, "(at most 4 + 7 - 1)")

# the 1-d quantile route gives the same distance without the LP
print("quantile-function W2:", round(fr.wasserstein2_1d(mu0, mu1), 6))

# --- the barycenter --------------------------------------------------------
bary = fr.barycenter_from_coupling(mu0, mu1, result.coupling, 4 / 11, 7 / 11)
print("\nbarycenter support (%d points):" % bary.n)
print(np.column_stack([bary.points[:, 0], bary.weights]))

# --- total repairs ----------------------------------------------------------
plan = fr.build_repair_plan(data)

rep_a = fr.total_repair_A(data, plan)
print("\nprocedure A: one averaged point per row; groups stay different")
print("  group-0 points:", np.sort(rep_a.X[rep_a.s == 0, 0]))
print("  group-1 points:", np.sort(rep_a.X[rep_a.s == 1, 0]))
print(
    "  TV between repaired groups:",
    round(fr.tv_distance_discrete(rep_a.group_measure(0), rep_a.group_measure(1)), 4),
)

rep_b = fr.total_repair_B(data, plan)
print("\nprocedure B: mass splitting; both groups equal the barycenter")
print("  rows per group:", np.sum(rep_b.s == 0), "/", np.sum(rep_b.s == 1))
print(
    "  TV between repaired groups:",
    fr.tv_distance_discrete(rep_b.group_measure(0), rep_b.group_measure(1)),
)

# --- random repair with an explicit keep/split pattern ---------------------
draws = np.array([0, 1, 0, 1, 1, 0, 1, 1, 1, 0, 1], dtype=bool)
rep_r = fr.random_repair_from_draws(data, draws, lam=0.5, plan=plan)
print("\nrandom repair, keep/split pattern", draws.astype(int))
print("  group-0 support:", np.round(rep_r.X[rep_r.s == 0, 0], 4))
print("  group-1 support:", np.round(rep_r.X[rep_r.s == 1, 0], 4))
