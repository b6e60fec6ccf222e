"""
Auditing decisions across groups
================================

Denial rates per group, demographic disparity and its group-weighted
sum (CDD), plus a two-sample KS distance between groups.
"""

import numpy as np

from robsvm import StratifiedOutcome, cdd, demographic_disparity, denial_rates, fairness_report, ks_distance

rng = np.random.default_rng(11)
groups = rng.choice(["Female", "Male", "Joint"], size=600, p=[0.3, 0.5, 0.2])
amount = rng.lognormal(5.0, 0.6, size=600) * np.where(groups == "Joint", 1.4, 1.0)

# An approval rule that only looks at the amount requested.
predicted = np.where(amount < np.quantile(amount, 0.7), 1.0, -1.0)
s = StratifiedOutcome(tuple(groups), predicted)

rates = denial_rates(s)
print("overall denial rate:", round(rates.overall, 4))
for g, r in rates.by_stratum.items():
    print(f"  {g:6s} {r:.4f}   DD = {demographic_disparity(s, g):+.4f}")
print("CDD:", cdd(s))

for g in ("Female", "Male"):
    print(f"KS distance of amounts, Joint vs {g}:", round(ks_distance(amount[groups == "Joint"],
                                                                      amount[groups == g]), 4))

# A four-row table where the disparities cancel exactly.
tiny = StratifiedOutcome(("A", "A", "B", "B"), np.array([-1.0, 1.0, 1.0, 1.0]))
print("four-row CDD:", cdd(tiny))

print(fairness_report(s))
