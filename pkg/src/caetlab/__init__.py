"""Cost-aware pure exploration for pairwise bandit tasks."""

from .caet import Config, RunResult, run
from .harness import ExperimentSpec, emit_report, format_csv, format_json, run_etc_regret, run_trials
from .exp_family import RewardFamily, binary_kl, divergence, rate_I
from .oracle import (
    OracleResult,
    bai_gap_characteristic,
    grid_oracle,
    inner_inf,
    mix_alpha,
    solve_optimal,
    three_arm_closed_form,
    transform_gc,
)
from .sim import CostModel, Instance, gap_cost_instance, make_rng
from .task import PairwiseTask, TaskKind, classify, make_task, pairs_of, support

__version__ = "0.1.0"
