"""Simulated bandit environments with paired reward and cost observations.

Random streams are numpy ``Generator`` objects over the counter-based
Philox bit generator, keyed by ``(seed, *run keys)`` through
``SeedSequence``. A run draws from its own stream in a fixed order (reward
first, then cost when the cost model is stochastic), so results do not
depend on how runs are scheduled across workers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InvalidArgument, TieError
from .exp_family import RewardFamily

DETERMINISTIC = "deterministic"
BERNOULLI_COST = "bernoulli"
GAUSSIAN_COST = "gaussian"
GAP_ESTIMATE = "gap_estimate"


def make_rng(seed: int, *keys: int) -> np.random.Generator:
    """Independent stream for ``(seed, *keys)``, e.g. ``(seed, delta_index, run)``."""
    entropy = [int(seed), *(int(k) for k in keys)]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))


@dataclass(frozen=True)
class CostModel:
    kind: str
    c: tuple = ()
    sigma_c: float = 0.0

    @classmethod
    def deterministic(cls, c):
        return cls(DETERMINISTIC, tuple(float(x) for x in c))

    @classmethod
    def bernoulli(cls, c):
        return cls(BERNOULLI_COST, tuple(float(x) for x in c))

    @classmethod
    def gaussian(cls, c, sigma_c: float):
        return cls(GAUSSIAN_COST, tuple(float(x) for x in c), float(sigma_c))

    @classmethod
    def gap_estimate(cls):
        return cls(GAP_ESTIMATE)

    def __post_init__(self):
        if self.kind not in (DETERMINISTIC, BERNOULLI_COST, GAUSSIAN_COST, GAP_ESTIMATE):
            raise InvalidArgument(f"unknown cost model {self.kind!r}")
        if any(x < 0 or not math.isfinite(x) for x in self.c):
            raise InvalidArgument("expected costs must be finite and nonnegative")
        if self.kind == BERNOULLI_COST and any(x > 1 for x in self.c):
            raise InvalidArgument("Bernoulli cost means must lie in [0, 1]")
        if self.kind == GAUSSIAN_COST and not self.sigma_c > 0:
            raise InvalidArgument("sigma_c must be positive")

    def to_dict(self) -> dict:
        out = {"kind": self.kind}
        if self.kind != GAP_ESTIMATE:
            out["c"] = list(self.c)
        if self.kind == GAUSSIAN_COST:
            out["sigma_c"] = self.sigma_c
        return out


@dataclass(frozen=True)
class Instance:
    mu: tuple
    family: RewardFamily
    cost_model: CostModel

    def __post_init__(self):
        object.__setattr__(self, "mu", tuple(float(x) for x in self.mu))
        if len(self.mu) < 2:
            raise InvalidArgument("an instance needs at least two arms")
        if self.cost_model.kind != GAP_ESTIMATE and len(self.cost_model.c) != len(self.mu):
            raise InvalidArgument("cost vector and mean vector differ in length")
        if not self.family.is_gaussian and not all(0 < x < 1 for x in self.mu):
            raise InvalidArgument("Bernoulli means must lie in (0, 1)")

    @property
    def K(self) -> int:
        return len(self.mu)

    def expected_costs(self) -> list[float]:
        if self.cost_model.kind == GAP_ESTIMATE:
            return true_gap_costs(self)
        return list(self.cost_model.c)

    def sample(self, arm: int, rng: np.random.Generator, observer=None):
        return sample(self, arm, rng, observer)


def sample(instance: Instance, arm: int, rng: np.random.Generator, observer=None):
    """Draw one ``(reward, cost)`` pair for ``arm``.

    For the gap-estimate model ``observer`` must expose the current
    empirical ``means``/``counts`` (an ``AlgState`` does); the cost is the
    empirical best mean minus the arm's empirical mean, floored at 0, and 0
    for an arm that has no samples yet.
    """
    if not 0 <= arm < instance.K:
        raise InvalidArgument(f"arm {arm} out of range")
    mu = instance.mu[arm]
    if instance.family.is_gaussian:
        reward = mu + instance.family.sigma * rng.standard_normal()
    else:
        reward = 1.0 if rng.random() < mu else 0.0
    model = instance.cost_model
    kind = model.kind
    if kind == DETERMINISTIC:
        cost = model.c[arm]
    elif kind == BERNOULLI_COST:
        cost = 1.0 if rng.random() < model.c[arm] else 0.0
    elif kind == GAUSSIAN_COST:
        cost = model.c[arm] + model.sigma_c * rng.standard_normal()
    else:
        if observer is None:
            raise InvalidArgument("gap-estimate costs need the observer's empirical means")
        cost = _gap_cost(observer, arm)
    return reward, cost


def _gap_cost(observer, arm: int) -> float:
    means, counts = observer.means, observer.counts
    if not counts[arm]:
        return 0.0
    best = max(means[a] for a in range(len(means)) if counts[a])
    return max(0.0, best - means[arm])


def true_gap_costs(instance: Instance) -> list[float]:
    mu = instance.mu
    top = max(mu)
    if mu.count(top) > 1:
        raise TieError("best arm is not unique")
    return [top - x for x in mu]


def gap_cost_instance(mu: Sequence[float], family: RewardFamily | None = None) -> Instance:
    """Instance whose deterministic costs are the true suboptimality gaps."""
    family = family or RewardFamily.gaussian()
    probe = Instance(tuple(mu), family, CostModel.gap_estimate())
    return Instance(tuple(mu), family, CostModel.deterministic(true_gap_costs(probe)))
