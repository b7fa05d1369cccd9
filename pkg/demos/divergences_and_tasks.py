"""
Divergences and pairwise tasks
==============================

Rewards come from a one-parameter family. The divergence between two means
measures how hard they are to tell apart, and the task says which
comparisons matter.
"""

import numpy as np

from caetlab import RewardFamily, classify, make_task, pairs_of, rate_I

gauss = RewardFamily.gaussian(1.0)
bern = RewardFamily.bernoulli()

# A unit gap between Gaussian means costs 1/2 nat per sample.
print("Gaussian d(1, 0) =", gauss.d(1.0, 0.0))
print("Bernoulli d(0.5, 0.25) =", bern.d(0.5, 0.25))

# rate_I is the cheapest way to move both means to a common point m.
for alpha in np.linspace(0, 1, 5):
    print(f"alpha={alpha:.2f}  I = {rate_I(gauss, alpha, 1.0, 0.0):.4f}")

# %%
# Ranking needs every adjacent pair ordered; best-arm only the winner's pairs.
mu = (1.4, 0.8, 0.3)
for kind, m in (("ranking", None), ("best_arm", None), ("best_m", 2)):
    task = make_task(kind, 3, m)
    pid = classify(task, mu)
    print(f"{kind:9s} answer={pid!s:18s} pairs={pairs_of(task, pid)}")
