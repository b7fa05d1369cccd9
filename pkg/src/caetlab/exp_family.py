"""Divergence and rate functions for Gaussian and Bernoulli rewards.

Everything here uses natural logarithms. Bernoulli means are clamped to
``[ETA, 1 - ETA]`` before a divergence is evaluated so that an early run of
all-zero or all-one samples does not produce infinities.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgument

ETA = 1e-9

GAUSSIAN = "gaussian"
BERNOULLI = "bernoulli"


@dataclass(frozen=True)
class RewardFamily:
    """Reward law of every arm: Gaussian with known ``sigma`` or Bernoulli."""

    kind: str = GAUSSIAN
    sigma: float = 1.0

    def __post_init__(self):
        if self.kind not in (GAUSSIAN, BERNOULLI):
            raise InvalidArgument(f"unknown reward family {self.kind!r}")
        if self.kind == GAUSSIAN and not self.sigma > 0:
            raise InvalidArgument(f"sigma must be positive, got {self.sigma}")

    @classmethod
    def gaussian(cls, sigma: float = 1.0) -> "RewardFamily":
        return cls(GAUSSIAN, float(sigma))

    @classmethod
    def bernoulli(cls) -> "RewardFamily":
        return cls(BERNOULLI, 1.0)

    @property
    def is_gaussian(self) -> bool:
        return self.kind == GAUSSIAN

    def clamp(self, x: float) -> float:
        if self.kind == GAUSSIAN:
            return x
        return min(max(x, ETA), 1.0 - ETA)

    def d(self, x: float, y: float) -> float:
        """Scalar divergence d(x, y) without validation (hot path)."""
        if self.kind == GAUSSIAN:
            diff = x - y
            return diff * diff / (2.0 * self.sigma * self.sigma)
        x = min(max(x, ETA), 1.0 - ETA)
        y = min(max(y, ETA), 1.0 - ETA)
        return x * math.log(x / y) + (1.0 - x) * math.log((1.0 - x) / (1.0 - y))

    def d_array(self, x, y):
        """Vectorised divergence over broadcastable arrays."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if self.kind == GAUSSIAN:
            return (x - y) ** 2 / (2.0 * self.sigma**2)
        x = np.clip(x, ETA, 1.0 - ETA)
        y = np.clip(y, ETA, 1.0 - ETA)
        return x * np.log(x / y) + (1.0 - x) * np.log((1.0 - x) / (1.0 - y))

    def check_mean(self, x: float) -> float:
        x = float(x)
        if not math.isfinite(x):
            raise InvalidArgument(f"mean must be finite, got {x}")
        if self.kind == BERNOULLI and not 0.0 <= x <= 1.0:
            raise InvalidArgument(f"Bernoulli mean outside [0, 1]: {x}")
        return x


def divergence(family: RewardFamily, x: float, y: float) -> float:
    """KL divergence between the family members with means ``x`` and ``y``.

    Gaussian: ``(x - y)**2 / (2 sigma**2)``; Bernoulli: ``kl(x, y)`` on the
    clamped means.
    """
    x = family.check_mean(x)
    y = family.check_mean(y)
    return family.d(x, y)


def rate_I(family: RewardFamily, alpha: float, x: float, y: float) -> float:
    """Weighted divergence to the ``alpha``-mixture of two means.

    Returns ``alpha d(x, m) + (1 - alpha) d(y, m)`` with
    ``m = alpha x + (1 - alpha) y``, which is also the minimum of that
    weighted sum over all ``m``.
    """
    if not 0.0 <= alpha <= 1.0:
        raise InvalidArgument(f"alpha must lie in [0, 1], got {alpha}")
    x = family.check_mean(x)
    y = family.check_mean(y)
    m = alpha * x + (1.0 - alpha) * y
    return alpha * family.d(x, m) + (1.0 - alpha) * family.d(y, m)


def binary_kl(p: float, q: float) -> float:
    """Bernoulli relative entropy kl(p, q) with the convention 0 log 0 = 0."""
    if not 0.0 <= p <= 1.0:
        raise InvalidArgument(f"p must lie in [0, 1], got {p}")
    if not 0.0 < q < 1.0:
        raise InvalidArgument(f"q must lie in (0, 1), got {q}")
    out = 0.0
    if p > 0.0:
        out += p * math.log(p / q)
    if p < 1.0:
        out += (1.0 - p) * math.log((1.0 - p) / (1.0 - q))
    return out
