"""
Exploration cost as the confidence level tightens
=================================================

CAET is run at several confidence levels on the reference instance, and its
mean cost is compared with the lower bound T* ln(1/(2.4 delta)) and the
upper band theta T* ln(1/delta). A few runs per level keep this quick; the
acceptance suite uses 200.
"""

import math

from caetlab import ExperimentSpec, format_csv, gap_cost_instance, make_task, run_trials

spec = ExperimentSpec(
    instance=gap_cost_instance((1.4, 0.8, 0.3)),
    task=make_task("ranking", 3),
    algorithm={"r": 0.4, "theta": 1.2},
    delta_grid=(1e-2, 1e-4, 1e-6),
    runs_per_delta=10,
    seed=1,
)
summary = run_trials(spec)
print(format_csv(summary))

# %%
# Cost per nat of confidence shrinks toward the band as delta goes to 0.
t_star = summary.meta["t_star"]
for row in summary.rows:
    ratio = row["mean_cost"] / math.log(1 / row["delta"])
    print(f"delta={row['delta']:.0e}  cost/ln(1/delta) = {ratio:6.2f}   T* = {t_star:.2f}")
