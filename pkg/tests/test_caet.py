import io
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from caetlab.caet import (
    AlgState,
    Config,
    candidate_partition,
    check_stop,
    glr,
    next_arm,
    project_linf,
    run,
    stopping_threshold,
    truncate_costs,
    update,
)
from caetlab.errors import InsufficientData, InvalidArgument, InvalidObservation
from caetlab.exp_family import RewardFamily
from caetlab.harness import wilson_interval
from caetlab.sim import CostModel, Instance, gap_cost_instance
from caetlab.task import make_task

GAUSS = RewardFamily.gaussian()
BERN = RewardFamily.bernoulli()

# Frozen with mpmath.
TRUNCATION_LEVEL_E10 = 0.07943282347242815
LN_40 = 3.6888794541139363
DEV_EXAMPLE = 7.368272297580946


def state_with(means, counts=None, costs=None):
    K = len(means)
    counts = counts or [1] * K
    s = AlgState(K)
    for a, (m, n) in enumerate(zip(means, counts)):
        for _ in range(n):
            s.update(a, m, costs[a] if costs else 1.0)
    return s


def unit_cost_pair():
    return Instance((1.0, 0.0), GAUSS, CostModel.deterministic((1.0, 1.0)))


class TestConfig:
    def test_alpha_and_truncation(self):
        cfg = Config(delta=math.exp(-10), r=0.4, r_prime=0.1, gamma0=0.1)
        assert cfg.alpha == pytest.approx(1 - 10**-0.4)
        assert cfg.truncation_level == pytest.approx(TRUNCATION_LEVEL_E10, rel=1e-14)

    def test_alpha_clamped_for_large_delta(self):
        assert Config(delta=0.5).alpha == 0.0

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"delta": 0.0},
            {"delta": 1.0},
            {"delta": 0.1, "r": 0.5},
            {"delta": 0.1, "r_prime": 0.2},
            {"delta": 0.1, "theta": 1.5},
            {"delta": 0.1, "threshold": "other"},
            {"delta": 0.1, "sampler": "greedy"},
            {"delta": 0.1, "solver": "newton"},
        ],
    )
    def test_rejects(self, kwargs):
        with pytest.raises(InvalidArgument):
            Config(**kwargs)


class TestTruncate:
    def test_example(self):
        assert truncate_costs((0.05, 0.5), math.exp(-10), 0.1, 0.1) == [0.0, 0.5]

    def test_all_above(self):
        assert truncate_costs((1.0, 2.0, 0.3), 1e-3, 0.1, 0.1) == [1.0, 2.0, 0.3]

    def test_negative_costs_zeroed(self):
        assert truncate_costs((-0.4, 1.0), 1e-3, 0.1, 0.1) == [0.0, 1.0]


def brute_linf(u, eps, step=1e-3):
    """Smallest max-norm distance from u to the eps-floored simplex, by grid."""
    K = len(u)
    n = int(round(1 / step))
    grid = np.arange(n + 1) * step
    if K == 2:
        W = np.stack([grid, 1 - grid], axis=1)
    else:
        A, B = np.meshgrid(grid, grid, indexing="ij")
        W = np.stack([A.ravel(), B.ravel(), 1 - A.ravel() - B.ravel()], axis=1)
    W = W[np.all(W >= eps - 1e-12, axis=1)]
    return float(np.min(np.max(np.abs(W - np.asarray(u)), axis=1)))


class TestProjectLinf:
    def test_two_arm(self):
        assert project_linf((1, 0), 0.25) == pytest.approx([0.75, 0.25])
        assert brute_linf((1, 0), 0.25) == pytest.approx(0.25, abs=1e-9)

    def test_inside_is_fixed(self):
        assert project_linf((0.3, 0.3, 0.4), 0.1) == pytest.approx([0.3, 0.3, 0.4])

    def test_three_arm(self):
        assert project_linf((1, 0, 0), 0.1) == pytest.approx([0.8, 0.1, 0.1])
        assert brute_linf((1, 0, 0), 0.1) == pytest.approx(0.2, abs=1e-9)

    def test_eps_too_large(self):
        with pytest.raises(InvalidArgument):
            project_linf((0.5, 0.5), 0.6)

    def test_brute_force_equivalence(self):
        rng = np.random.default_rng(2)
        for i in range(60):
            K = 2 + i % 2
            u = rng.dirichlet(np.ones(K) * 0.3)
            eps = rng.uniform(0, 1 / K)
            p = np.array(project_linf(u, eps))
            assert p.sum() == pytest.approx(1.0)
            assert np.all(p >= eps - 1e-12)
            dist = np.max(np.abs(p - u))
            brute = brute_linf(u, eps)
            # The grid can only miss the optimum, by at most two grid steps.
            assert brute - 2e-3 - 1e-12 <= dist <= brute + 1e-12

    @given(st.lists(st.floats(0, 1), min_size=2, max_size=8), st.floats(0, 1))
    def test_feasible(self, raw, frac):
        total = sum(raw)
        if total == 0:
            return
        u = [x / total for x in raw]
        eps = frac / len(u)
        p = project_linf(u, eps)
        assert sum(p) == pytest.approx(1.0)
        assert min(p) >= eps - 1e-12


class TestGLR:
    def test_example(self):
        assert glr(state_with([1.0, 0.0]), GAUSS, 0, 1) == pytest.approx(0.25)

    def test_equal_means(self):
        assert glr(state_with([0.4, 0.4]), GAUSS, 0, 1) == 0.0

    def test_unpulled(self):
        s = AlgState(2)
        s.update(0, 1.0, 1.0)
        with pytest.raises(InsufficientData):
            glr(s, GAUSS, 0, 1)

    @given(
        st.floats(0.02, 0.98),
        st.floats(0.02, 0.98),
        st.integers(1, 50),
        st.integers(1, 50),
    )
    def test_antisymmetric_and_signed(self, xa, xb, na, nb):
        for fam in (GAUSS, BERN):
            s = state_with([xa, xb], [na, nb])
            z = glr(s, fam, 0, 1)
            assert glr(s, fam, 1, 0) == -z or (z == 0 and glr(s, fam, 1, 0) == 0)
            if s.means[0] > s.means[1]:
                assert z >= 0
            if s.means[0] < s.means[1]:
                assert z <= 0


class TestThreshold:
    def test_informational(self):
        assert stopping_threshold("informational", 1, 0.1, 2) == pytest.approx(LN_40, rel=1e-14)

    def test_deviational(self):
        val = stopping_threshold("deviational", 10, 0.01, 3, theta=1.2, C=1.0)
        assert val == pytest.approx(DEV_EXAMPLE, rel=1e-14)

    def test_log_of_one(self):
        t, K = 3, 4
        assert stopping_threshold("informational", t, 2 * t * K * (K - 1), K) == 0.0

    def test_unknown(self):
        with pytest.raises(InvalidArgument):
            stopping_threshold("other", 1, 0.1, 2)


class TestCandidate:
    def test_best_arm(self):
        assert candidate_partition(state_with([0.2, 0.9, 0.5]), make_task("best_arm", 3)) == 1

    def test_tie_break(self):
        assert candidate_partition(state_with([0.5, 0.5]), make_task("ranking", 2)) == (0, 1)

    def test_reference(self):
        assert candidate_partition(state_with([1.4, 0.8, 0.3]), make_task("ranking", 3)) == (0, 1, 2)


class TestCheckStop:
    def test_below_threshold(self):
        s = state_with([1.0, 0.0])
        assert check_stop(s, make_task("best_arm", 2), Config(delta=0.1, threshold="informational"), GAUSS) is None

    def test_above_threshold(self):
        s = state_with([1.0, 0.0], [200, 200])
        cfg = Config(delta=0.1, threshold="informational")
        assert glr(s, GAUSS, 0, 1) == pytest.approx(50.0)
        assert check_stop(s, make_task("best_arm", 2), cfg, GAUSS) == 0

    def test_conjunction(self):
        # (0, 1) is far apart, (1, 2) is not.
        s = state_with([5.0, 0.0, -0.01], [100, 100, 100])
        cfg = Config(delta=0.1)
        assert glr(s, GAUSS, 0, 1) > cfg.beta(s.t, 3)
        assert glr(s, GAUSS, 1, 2) < cfg.beta(s.t, 3)
        assert check_stop(s, make_task("ranking", 3), cfg, GAUSS) is None


class TestUpdate:
    def test_single(self):
        s = update(AlgState(2), 0, 0.7, 0.2)
        assert (s.counts[0], s.means[0], s.costs[0]) == (1, 0.7, 0.2)

    def test_two_samples(self):
        s = update(update(AlgState(2), 0, 1.0, 0.0), 0, 0.0, 0.0)
        assert s.means[0] == 0.5

    def test_non_finite(self):
        with pytest.raises(InvalidObservation):
            update(AlgState(2), 0, math.nan, 0.0)

    def test_bookkeeping(self):
        rng = np.random.default_rng(0)
        s = AlgState(4)
        for _ in range(500):
            s.update(int(rng.integers(4)), rng.normal(), rng.uniform())
            assert sum(s.counts) == s.t


class TestNextArm:
    def test_round_robin_start(self):
        task, cfg = make_task("best_arm", 3), Config(delta=0.1)
        s = AlgState(3)
        picks = []
        for _ in range(3):
            a = next_arm(s, task, cfg, GAUSS)
            picks.append(a)
            s.update(a, 0.0, 1.0)
        assert picks == [0, 1, 2]

    def test_equal_targets_pick_lowest(self):
        s = state_with([0.5, -0.5])
        s.targets = [1.0, 1.0]
        cfg = Config(delta=0.1, sampler="uniform")
        assert next_arm(s, make_task("best_arm", 2), cfg, GAUSS) == 0

    def test_targets_sum_to_time(self):
        task, cfg = make_task("ranking", 3), Config(delta=1e-3)
        env = gap_cost_instance((1.4, 0.8, 0.3))
        rng = np.random.default_rng(0)
        s = AlgState(3)
        for _ in range(200):
            a = next_arm(s, task, cfg, GAUSS)
            s.update(a, *env.sample(a, rng, s))
            assert sum(s.targets) == pytest.approx(s.t)

    def test_trace_records(self):
        task, cfg = make_task("best_arm", 2), Config(delta=0.1)
        s = state_with([1.0, 0.0])
        buf = io.StringIO()
        next_arm(s, task, cfg, GAUSS, trace=buf)
        rec = json.loads(buf.getvalue())
        assert set(rec) == {"t", "arm", "u_alpha", "eps", "z", "beta"}
        assert rec["eps"] == pytest.approx(0.5 / math.sqrt(4 + 2))

    def test_uniform_sampler_cycles(self):
        task, cfg = make_task("best_arm", 3), Config(delta=0.1, sampler="uniform")
        s = AlgState(3)
        picks = []
        for _ in range(9):
            a = next_arm(s, task, cfg, GAUSS)
            picks.append(a)
            s.update(a, float(a), 1.0)
        assert picks == [0, 1, 2] * 3


class TestRun:
    def test_capped(self):
        res = run(unit_cost_pair(), make_task("best_arm", 2), Config(delta=1e-9, max_steps=10), seed=1)
        assert res.capped and res.tau == 10

    def test_deterministic(self):
        env, task = gap_cost_instance((1.4, 0.8, 0.3)), make_task("ranking", 3)
        a = run(env, task, Config(delta=0.01), seed=42)
        b = run(env, task, Config(delta=0.01), seed=42)
        assert a == b

    def test_arm_count_mismatch(self):
        with pytest.raises(InvalidArgument):
            run(unit_cost_pair(), make_task("best_arm", 3), Config(delta=0.1))

    def test_cost_accounting(self):
        env = gap_cost_instance((1.4, 0.8, 0.3))
        res = run(env, make_task("ranking", 3), Config(delta=0.05), seed=3)
        assert res.cumulative_cost == pytest.approx(0.6 * res.counts[1] + 1.1 * res.counts[2])
        assert res.realized_cost == pytest.approx(res.cumulative_cost)
        assert sum(res.counts) == res.tau

    def test_invariants_hold_online(self):
        env = gap_cost_instance((1.4, 0.8, 0.3))
        for seed in range(10):
            res = run(env, make_task("ranking", 3), Config(delta=1e-4, check_invariants=True), seed=seed)
            assert res.violations == []

    def test_two_arm_proportions(self):
        res = run(unit_cost_pair(), make_task("best_arm", 2), Config(delta=1e-30), seed=0)
        assert not res.capped
        assert res.counts[0] / res.tau == pytest.approx(0.5, abs=0.03)

    def test_uniform_sampler_stops(self):
        cfg = Config(delta=0.1, sampler="uniform", max_steps=100_000)
        for seed in range(50):
            assert not run(unit_cost_pair(), make_task("best_arm", 2), cfg, seed=seed).capped

    def test_cost_unaware_runs(self):
        env = gap_cost_instance((1.4, 0.8, 0.3))
        res = run(env, make_task("ranking", 3), Config(delta=0.05, sampler="cost_unaware", solver="slsqp"), seed=0)
        assert not res.capped

    @pytest.mark.slow
    def test_delta_pac(self):
        cfg, task = Config(delta=0.1), make_task("best_arm", 2)
        errors = sum(not run(unit_cost_pair(), task, cfg, seed=s).correct for s in range(1000))
        low, _ = wilson_interval(errors, 1000, 0.975)
        assert low <= 0.1
