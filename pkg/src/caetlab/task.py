"""Pairwise exploration tasks: ranking, best arm and best-m identification.

A task splits tie-free mean vectors into partitions, each one an
intersection of order constraints "arm i beats arm j". Partitions are
never listed explicitly (there are K! of them for ranking); a partition is
named by a ``PartitionId`` and everything else is derived from it:

* ranking: a tuple of all arms sorted from best to worst
* best arm: the index of the best arm
* best m: a frozenset holding the top-m arms

Arms are 0-based throughout. An ordered pair ``(i, j)`` means
"arm i has a strictly larger mean than arm j".
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterator, Sequence, Union

from .errors import InvalidArgument, TieError

PartitionId = Union[tuple, int, frozenset]


class TaskKind(str, Enum):
    RANKING = "ranking"
    BEST_ARM = "best_arm"
    BEST_M = "best_m"


@dataclass(frozen=True)
class PairwiseTask:
    kind: TaskKind
    K: int
    m: int | None = None

    @property
    def n_partitions(self) -> int:
        if self.kind is TaskKind.RANKING:
            return math.factorial(self.K)
        if self.kind is TaskKind.BEST_ARM:
            return self.K
        return math.comb(self.K, self.m)

    def partitions(self) -> Iterator[PartitionId]:
        """Enumerate every partition id. Only sensible for small K."""
        arms = range(self.K)
        if self.kind is TaskKind.RANKING:
            yield from itertools.permutations(arms)
        elif self.kind is TaskKind.BEST_ARM:
            yield from arms
        else:
            for subset in itertools.combinations(arms, self.m):
                yield frozenset(subset)

    def to_dict(self) -> dict:
        out = {"kind": self.kind.value, "K": self.K}
        if self.m is not None:
            out["m"] = self.m
        return out


def make_task(kind, K: int, m: int | None = None) -> PairwiseTask:
    try:
        kind = TaskKind(kind)
    except ValueError:
        raise InvalidArgument(f"unknown task kind {kind!r}") from None
    if int(K) != K or K < 2:
        raise InvalidArgument(f"need at least two arms, got K={K}")
    K = int(K)
    if kind is TaskKind.BEST_M:
        if m is None or int(m) != m or not 1 <= m < K:
            raise InvalidArgument(f"best_m needs 1 <= m < K, got m={m}")
        m = int(m)
    elif m is not None:
        raise InvalidArgument(f"m is only meaningful for best_m, got m={m}")
    return PairwiseTask(kind, K, m)


def _order(mu: Sequence[float], tie_break: bool) -> list[int]:
    # Stable sort on -mu: equal means keep lowest-index-first priority.
    order = sorted(range(len(mu)), key=lambda a: -mu[a])
    if not tie_break:
        for a, b in zip(order, order[1:]):
            if mu[a] == mu[b]:
                raise TieError(f"arms {a} and {b} share mean {mu[a]}")
    return order


def classify(task: PairwiseTask, mu: Sequence[float], tie_break: bool = False) -> PartitionId:
    """Return the partition that contains ``mu``.

    Ties that decide the answer raise ``TieError`` unless ``tie_break`` is
    set, in which case the lower arm index wins.
    """
    mu = [float(x) for x in mu]
    if len(mu) != task.K:
        raise InvalidArgument(f"expected {task.K} means, got {len(mu)}")
    if task.kind is TaskKind.RANKING:
        return tuple(_order(mu, tie_break))
    order = _order(mu, tie_break=True)
    cut = 1 if task.kind is TaskKind.BEST_ARM else task.m
    if not tie_break and mu[order[cut - 1]] == mu[order[cut]]:
        raise TieError(
            f"arms {order[cut - 1]} and {order[cut]} tie at the selection boundary"
        )
    if task.kind is TaskKind.BEST_ARM:
        return order[0]
    return frozenset(order[:cut])


def _check_pid(task: PairwiseTask, pid) -> None:
    K = task.K
    if task.kind is TaskKind.RANKING:
        ok = isinstance(pid, tuple) and sorted(pid) == list(range(K))
    elif task.kind is TaskKind.BEST_ARM:
        ok = isinstance(pid, int) and 0 <= pid < K
    else:
        ok = (
            isinstance(pid, (frozenset, set))
            and len(pid) == task.m
            and all(isinstance(a, int) and 0 <= a < K for a in pid)
        )
    if not ok:
        raise InvalidArgument(f"malformed partition id {pid!r} for {task.kind.value}")


def pairs_of(task: PairwiseTask, pid: PartitionId) -> list[tuple[int, int]]:
    """Defining ordered pairs of a partition, in a deterministic order."""
    _check_pid(task, pid)
    if task.kind is TaskKind.RANKING:
        return list(zip(pid, pid[1:]))
    if task.kind is TaskKind.BEST_ARM:
        return [(pid, j) for j in range(task.K) if j != pid]
    inside = sorted(pid)
    outside = [j for j in range(task.K) if j not in pid]
    return [(i, j) for i in inside for j in outside]


def support(task: PairwiseTask, pid: PartitionId) -> frozenset:
    return frozenset(a for pair in pairs_of(task, pid) for a in pair)


def is_alternative(task: PairwiseTask, mu, lam, positive_set) -> bool:
    """Whether ``lam`` is a confusing alternative to ``mu``.

    True when ``lam`` reverses at least one defining pair of ``mu``'s
    partition while every arm outside the positive-cost support keeps its
    mean from ``mu``.
    """
    pid = classify(task, mu)
    if len(lam) != task.K:
        raise InvalidArgument(f"expected {task.K} means, got {len(lam)}")
    free = set(positive_set) & support(task, pid)
    for i in range(task.K):
        if i not in free and lam[i] != mu[i]:
            return False
    return any(
        (lam[a] - lam[b]) * (mu[a] - mu[b]) < 0 for a, b in pairs_of(task, pid)
    )
