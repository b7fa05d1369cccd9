"""Cost-aware track-and-stop (CAET) and its two baselines.

One run is a strictly sequential state machine:

1. pull every arm once (round robin);
2. at each later step, solve the allocation problem on the empirical
   instance (truncated empirical costs, empirical means), mix in uniform
   mass ``alpha`` on zero-cost arms, project onto the ``eps_t``-floored
   simplex and pull the arm whose cumulative target most exceeds its
   count;
3. stop as soon as every defining pair of the empirical partition has a
   GLR statistic above the threshold, and return that partition.

Only the empirical partition is ever tested for stopping: a positive GLR
for (a, b) forces mu_hat_a > mu_hat_b, so no other partition can pass all
of its pair tests.

The ``uniform`` sampler pulls arms round robin forever; ``cost_unaware``
runs the same tracking with every cost set to one.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import oracle
from .errors import InfeasibleTask, InsufficientData, InvalidArgument, InvalidObservation
from .exp_family import RewardFamily
from .task import PairwiseTask, classify, pairs_of, support

log = logging.getLogger(__name__)

INFORMATIONAL = "informational"
DEVIATIONAL = "deviational"
SAMPLERS = ("caet", "uniform", "cost_unaware")


@dataclass(frozen=True)
class Config:
    delta: float
    r: float = 0.4
    r_prime: float = 0.1
    gamma0: float = 0.1
    threshold: str = DEVIATIONAL
    theta: float = 1.2
    C: float = 1.0
    sampler: str = "caet"
    max_steps: int = 50_000_000
    resolve_every: int = 1
    check_invariants: bool = False
    solver: str = "subgradient"

    def __post_init__(self):
        if not 0 < self.delta < 1:
            raise InvalidArgument(f"delta must lie in (0, 1), got {self.delta}")
        if not 0 < self.r < 0.5:
            raise InvalidArgument(f"r must lie in (0, 1/2), got {self.r}")
        if not 0 < self.r_prime < 0.125:
            raise InvalidArgument(f"r_prime must lie in (0, 1/8), got {self.r_prime}")
        if not self.gamma0 > 0:
            raise InvalidArgument("gamma0 must be positive")
        if self.threshold not in (INFORMATIONAL, DEVIATIONAL):
            raise InvalidArgument(f"unknown threshold kind {self.threshold!r}")
        if self.threshold == DEVIATIONAL:
            if not 1.0 <= self.theta <= math.e / 2:
                raise InvalidArgument(f"theta must lie in [1, e/2], got {self.theta}")
            if not self.C > 0:
                raise InvalidArgument("C must be positive")
        if self.sampler not in SAMPLERS:
            raise InvalidArgument(f"unknown sampler {self.sampler!r}")
        if self.solver not in ("subgradient", "slsqp"):
            raise InvalidArgument(f"unknown solver {self.solver!r}")
        if self.max_steps < 1 or self.resolve_every < 1:
            raise InvalidArgument("max_steps and resolve_every must be positive")

    @property
    def alpha(self) -> float:
        # 1 - log(1/delta)^(-r) is negative for delta > 1/e; clamp into [0, 1].
        return min(1.0, max(0.0, 1.0 - math.log(1.0 / self.delta) ** (-self.r)))

    @property
    def truncation_level(self) -> float:
        return self.gamma0 * math.log(1.0 / self.delta) ** (-self.r_prime)

    def beta(self, t: int, K: int) -> float:
        return stopping_threshold(self.threshold, t, self.delta, K, self.theta, self.C)


class AlgState:
    """Running statistics of one run.

    ``targets[a]`` is the cumulative projected allocation of arm ``a``
    summed over all decisions made so far, so ``sum(targets) == t`` after
    every pull.
    """

    def __init__(self, K: int):
        self.K = K
        self.t = 0
        self.counts = [0] * K
        self.reward_sums = [0.0] * K
        self.cost_sums = [0.0] * K
        self.means = [math.nan] * K
        self.costs = [math.nan] * K
        self.targets = [0.0] * K
        self.u_last = [1.0 / K] * K
        self.omega_last = None
        self.fallbacks = 0
        self.violations = []
        self.realized_cost = 0.0

    def update(self, arm: int, reward: float, cost: float) -> "AlgState":
        if not 0 <= arm < self.K:
            raise InvalidArgument(f"arm {arm} out of range")
        if not (math.isfinite(reward) and math.isfinite(cost)):
            raise InvalidObservation(f"non-finite observation ({reward}, {cost})")
        self.t += 1
        n = self.counts[arm] + 1
        self.counts[arm] = n
        self.reward_sums[arm] += reward
        self.cost_sums[arm] += cost
        self.means[arm] = self.reward_sums[arm] / n
        self.costs[arm] = self.cost_sums[arm] / n
        self.realized_cost += cost
        return self

    def check_tracking(self) -> None:
        """Record violations of the tracking floor and deviation bounds."""
        t, K = self.t, self.K
        floor = math.sqrt(t + K * K) - 2 * K
        bound = K * (1.0 + math.sqrt(t))
        for a in range(K):
            if self.counts[a] < floor - 1e-9:
                self.violations.append(("floor", t, a, self.counts[a], floor))
            dev = abs(self.counts[a] - self.targets[a])
            if dev > bound + 1e-9:
                self.violations.append(("deviation", t, a, dev, bound))

    def empirical_best(self) -> int:
        best = -1
        for a in range(self.K):
            if self.counts[a] and (best < 0 or self.means[a] > self.means[best]):
                best = a
        return best


@dataclass
class RunResult:
    tau: int
    cumulative_cost: float
    realized_cost: float
    decision: object
    correct: bool
    counts: list
    capped: bool
    alpha: float
    fallbacks: int = 0
    violations: list = field(default_factory=list)


def update(state: AlgState, arm: int, reward: float, cost: float) -> AlgState:
    return state.update(arm, reward, cost)


def truncate_costs(c_hat, delta: float, gamma0: float, r_prime: float) -> list[float]:
    """Zero every empirical cost at or below ``gamma0 log(1/delta)^(-r_prime)``."""
    if not 0 < delta < 1:
        raise InvalidArgument(f"delta must lie in (0, 1), got {delta}")
    level = gamma0 * math.log(1.0 / delta) ** (-r_prime)
    return [float(x) if x > level else 0.0 for x in c_hat]


def project_linf(u, eps: float) -> list[float]:
    """Max-norm projection onto {w : w_i >= eps, sum(w) = 1}.

    Lowers every coordinate by a common shift and floors at ``eps``; the
    shift is the smallest one that restores unit mass, which is also the
    smallest achievable max-norm distance.
    """
    u = [float(x) for x in u]
    K = len(u)
    if eps * K > 1.0 + 1e-12:
        raise InvalidArgument(f"eps * K = {eps * K} exceeds 1")
    if eps * K >= 1.0 - 1e-15:
        return [1.0 / K] * K
    order = sorted(u, reverse=True)
    css = 0.0
    shift = 0.0
    for k in range(1, K + 1):
        css += order[k - 1]
        shift = (css - (1.0 - (K - k) * eps)) / k
        if order[k - 1] - shift >= eps and (k == K or order[k] - shift <= eps):
            break
    return [max(eps, x - shift) for x in u]


def glr(state: AlgState, family: RewardFamily, a: int, b: int) -> float:
    """Signed GLR statistic for "mu_a > mu_b"; negative when mu_hat_a < mu_hat_b."""
    na, nb = state.counts[a], state.counts[b]
    if na < 1 or nb < 1:
        raise InsufficientData(f"arms {a} and {b} need at least one sample each")
    xa, xb = state.means[a], state.means[b]
    if xa == xb:
        return 0.0
    pooled = (na * xa + nb * xb) / (na + nb)
    # Rounding in the Bernoulli divergence can dip a hair below zero.
    z = max(0.0, na * family.d(xa, pooled) + nb * family.d(xb, pooled))
    return z if xa > xb else -z


def stopping_threshold(kind: str, t: int, delta: float, K: int, theta: float = 1.2, C: float = 1.0) -> float:
    if kind == INFORMATIONAL:
        return math.log(2.0 * t * K * (K - 1) / delta)
    if kind == DEVIATIONAL:
        return math.log(C * t**theta / delta)
    raise InvalidArgument(f"unknown threshold kind {kind!r}")


def candidate_partition(state: AlgState, task: PairwiseTask):
    return classify(task, state.means, tie_break=True)


def check_stop(state: AlgState, task: PairwiseTask, config: Config, family: RewardFamily):
    """Partition to return if the stopping rule fires now, else ``None``."""
    pid = candidate_partition(state, task)
    beta = config.beta(state.t, task.K)
    for a, b in pairs_of(task, pid):
        if glr(state, family, a, b) <= beta:
            return None
    return pid


def tracked_allocation(state: AlgState, task: PairwiseTask, config: Config, family: RewardFamily) -> list[float]:
    """The mixture u_alpha on the current empirical instance (before projection)."""
    K = task.K
    if config.sampler == "uniform":
        return [1.0 / K] * K
    if config.sampler == "cost_unaware":
        c = [1.0] * K
    else:
        c = truncate_costs(state.costs, config.delta, config.gamma0, config.r_prime)
    pid = candidate_partition(state, task)
    arms = support(task, pid)
    try:
        obj = oracle.PairObjective(family, c, state.means, pairs_of(task, pid), arms)
    except InfeasibleTask:
        state.fallbacks += 1
        return [1.0 / K] * K
    init = None
    if obj.n > 2 and state.omega_last is not None and len(state.omega_last[0]) == obj.n and state.omega_last[1] == obj.active:
        init = state.omega_last[0]
    if config.solver == "slsqp":
        w, _, _, _ = oracle.maximize_slsqp(obj, init=init)
    else:
        w, _, _, _ = oracle.maximize(obj, init=init)
    state.omega_last = (w, obj.active)
    ratios = [x / c[a] for a, x in zip(obj.active, w)]
    total = sum(ratios)
    u = [0.0] * K
    if total > 0:
        for a, x in zip(obj.active, ratios):
            u[a] = x / total
    else:
        for a in obj.active:
            u[a] = 1.0 / obj.n
    zero = [a for a in sorted(arms) if c[a] == 0.0]
    if zero:
        alpha = config.alpha
        u = [(1.0 - alpha) * x for x in u]
        for a in zero:
            u[a] = alpha / len(zero)
    return u


def next_arm(state: AlgState, task: PairwiseTask, config: Config, family: RewardFamily, trace=None) -> int:
    """Advance the tracking targets by one projected allocation and pick an arm."""
    K, t = task.K, state.t
    if t < K:
        u = [1.0 / K] * K
    elif (t - K) % config.resolve_every == 0:
        u = tracked_allocation(state, task, config, family)
        state.u_last = u
    else:
        u = state.u_last
    eps = 0.5 / math.sqrt(K * K + t)
    u_eps = project_linf(u, eps)
    targets, counts = state.targets, state.counts
    arm, best = 0, -math.inf
    for a in range(K):
        targets[a] += u_eps[a]
        gap = targets[a] - counts[a]
        if gap > best:
            arm, best = a, gap
    if trace is not None:
        record = {"t": t, "arm": arm, "u_alpha": u, "eps": eps}
        if t >= K:
            pid = candidate_partition(state, task)
            record["z"] = [glr(state, family, a, b) for a, b in pairs_of(task, pid)]
            record["beta"] = config.beta(t, K)
        trace.write(json.dumps(record) + "\n")
    return arm


def run(env, task: PairwiseTask, config: Config, seed: int = 0, *, rng=None, trace=None) -> RunResult:
    """Run one identification episode on a simulated environment."""
    from .sim import make_rng

    K = task.K
    if env.K != K:
        raise InvalidArgument(f"environment has {env.K} arms, task expects {K}")
    if config.threshold == INFORMATIONAL and env.family.is_gaussian:
        log.warning("informational threshold is only guaranteed for Bernoulli rewards")
    if rng is None:
        rng = make_rng(seed)
    family = env.family
    state = AlgState(K)
    decision, capped = None, False
    while True:
        if state.t >= K:
            decision = check_stop(state, task, config, family)
            if decision is not None:
                break
        if state.t >= config.max_steps:
            capped = True
            break
        arm = next_arm(state, task, config, family, trace)
        reward, cost = env.sample(arm, rng, state)
        state.update(arm, reward, cost)
        if config.check_invariants:
            state.check_tracking()
    if decision is None:
        if min(state.counts) > 0:
            decision = candidate_partition(state, task)
        else:
            decision = classify(task, [0.0 if math.isnan(x) else x for x in state.means], tie_break=True)
    truth = classify(task, env.mu)
    expected = env.expected_costs()
    return RunResult(
        tau=state.t,
        cumulative_cost=float(sum(c * n for c, n in zip(expected, state.counts))),
        realized_cost=state.realized_cost,
        decision=decision,
        correct=decision == truth,
        counts=list(state.counts),
        capped=capped,
        alpha=config.alpha,
        fallbacks=state.fallbacks,
        violations=state.violations,
    )
