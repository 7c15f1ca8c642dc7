"""Instances, gaps, hardness, round schedules and the success-probability bound."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

IID = "iid"
NONIID = "noniid"


class DegenerateInstanceError(ValueError):
    """The m-th and (m+1)-th highest means coincide, so the hardness is infinite."""


@dataclass(frozen=True)
class Instance:
    """Arms with one reward distribution each, arm ``i`` (1-based) has mean ``means[i-1]``."""

    means: tuple[float, ...]
    distribution_kind: str = "bernoulli"
    labels: tuple[int, ...] | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "means", tuple(float(x) for x in self.means))
        if not self.means:
            raise ValueError("instance needs at least one arm")
        if any(not 0.0 <= x <= 1.0 for x in self.means):
            raise ValueError("all means must lie in [0, 1]")
        if self.labels is not None:
            object.__setattr__(self, "labels", tuple(self.labels))
            if len(self.labels) != len(self.means):
                raise ValueError("labels must match the number of arms")

    @property
    def n(self) -> int:
        return len(self.means)

    def mean(self, arm: int) -> float:
        return self.means[arm - 1]


@dataclass(frozen=True)
class NonIIDInstance:
    """K x n matrix of local means; row k is what agent k samples."""

    local_means: np.ndarray
    distribution_kind: str = "bernoulli"
    labels: tuple[int, ...] | None = field(default=None)

    def __post_init__(self) -> None:
        arr = np.array(self.local_means, dtype=np.float64)
        if arr.ndim != 2 or arr.size == 0:
            raise ValueError("local_means must be a nonempty K x n matrix")
        if np.any(arr < 0.0) or np.any(arr > 1.0):
            raise ValueError("all local means must lie in [0, 1]")
        arr.setflags(write=False)
        object.__setattr__(self, "local_means", arr)
        if self.labels is not None:
            object.__setattr__(self, "labels", tuple(self.labels))
            if len(self.labels) != arr.shape[1]:
                raise ValueError("labels must match the number of arms")

    @property
    def K(self) -> int:
        return self.local_means.shape[0]

    @property
    def n(self) -> int:
        return self.local_means.shape[1]

    def local_mean(self, agent: int, arm: int) -> float:
        return float(self.local_means[agent, arm - 1])

    @property
    def global_means(self) -> tuple[float, ...]:
        return global_means(self.local_means)


@dataclass(frozen=True)
class GapProfile:
    gaps: tuple[float, ...]
    hardness: float


@dataclass(frozen=True)
class RoundSchedule:
    """Per-round survivor counts ``n_r`` and cumulative per-arm budgets ``T_r``, r = 0..R."""

    R: int
    n_r: tuple[int, ...]
    T_r: tuple[int, ...]

    def keep(self, r: int) -> int:
        """Arms that survive round ``r``; the last round resolves every remaining arm."""
        if not 0 <= r < self.R:
            raise IndexError(f"round {r} outside [0, {self.R})")
        return 0 if r == self.R - 1 else self.n_r[r + 1]

    def increment(self, r: int) -> int:
        return self.T_r[r + 1] - self.T_r[r]


def _sorted_desc(means: Sequence[float]) -> list[float]:
    return sorted((float(x) for x in means), reverse=True)


def compute_gaps(means: Sequence[float], m: int) -> GapProfile:
    n = len(means)
    if not 1 <= m < n:
        raise ValueError(f"need 1 <= m < n, got m={m}, n={n}")
    ordered = _sorted_desc(means)
    mth, next_ = ordered[m - 1], ordered[m]
    if mth == next_:
        raise DegenerateInstanceError(
            f"m-th and (m+1)-th highest means are both {mth}; hardness is infinite"
        )
    gaps = tuple(max(x - next_, mth - x) for x in map(float, means))
    return GapProfile(gaps=gaps, hardness=sum(1.0 / (g * g) for g in gaps))


def top_m(means: Sequence[float], m: int) -> frozenset[int]:
    """1-based ids of the ``m`` highest means, ties going to the lower index."""
    if m < 0:
        raise ValueError("m must be nonnegative")
    order = sorted(range(len(means)), key=lambda i: (-float(means[i]), i))
    return frozenset(i + 1 for i in order[:m])


def global_means(local_means) -> tuple[float, ...]:
    arr = np.asarray(local_means, dtype=np.float64)
    if arr.ndim != 2 or arr.size == 0:
        raise ValueError("local_means must be a nonempty K x n matrix")
    K = arr.shape[0]
    # column sums in agent order so distributed averaging can reproduce them bit for bit
    return tuple(math.fsum(arr[:, j]) / K for j in range(arr.shape[1]))


def num_rounds(n: int) -> int:
    return max(1, (n - 1).bit_length())


def round_schedule(n: int, T: int, K: int, variant: str = IID) -> RoundSchedule:
    if n < 2:
        raise ValueError("need at least two arms")
    if T < 0 or K < 1:
        raise ValueError("need T >= 0 and K >= 1")
    if variant == IID:
        denom_factor = 4
    elif variant == NONIID:
        denom_factor = 2
    else:
        raise ValueError(f"unknown variant {variant!r}")
    R = num_rounds(n)
    n_r = tuple(n >> r for r in range(R + 1))
    denom = denom_factor * n * R
    T_r = (0,) + tuple((T * K * (1 << r)) // denom for r in range(1, R + 1))
    return RoundSchedule(R=R, n_r=n_r, T_r=T_r)


def success_bound(n: int, T: float, K: int, H: float) -> float:
    if H <= 0:
        raise ValueError("hardness must be positive")
    log2n2 = math.log2(2 * n)
    value = 1.0 - 2 * n * log2n2 * math.exp(-T * K / (128.0 * H * log2n2))
    return min(1.0, max(0.0, value))
