"""Distributed order statistics, balanced pull assignment and the elimination rule."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Iterable, Mapping, Sequence

from .fabric import COORDINATOR, Fabric

# Shipping the remaining windows is cheaper than another pivot iteration once the
# active elements number at most this many per active agent.
SHIP_FACTOR = 2


class _SelectAgent:
    """Agent side of ``collab_search``: a sorted local list and a live window into it."""

    def __init__(self, k: int, values: Iterable[Any]) -> None:
        self.k = k
        # (value, agent, position) keys are globally distinct, so every order statistic is unique
        self.items = [(v, k, pos) for pos, v in enumerate(sorted(values))]
        self.lo = 0
        self.hi = len(self.items)

    @property
    def size(self) -> int:
        return self.hi - self.lo

    def median(self):
        return self.items[self.lo + (self.size - 1) // 2]

    def count_below(self, pivot) -> int:
        lo, hi = self.lo, self.hi
        while lo < hi:
            mid = (lo + hi) // 2
            if self.items[mid] < pivot:
                lo = mid + 1
            else:
                hi = mid
        return lo - self.lo

    def keep_below(self, pivot) -> None:
        self.hi = self.lo + self.count_below(pivot)

    def keep_above(self, pivot) -> None:
        below = self.count_below(pivot)
        at = 1 if below < self.size and self.items[self.lo + below] == pivot else 0
        self.lo += below + at

    def window(self) -> list:
        return self.items[self.lo:self.hi]


def collab_search(sets: Sequence[Iterable[Any]], m: int, fabric: Fabric | None = None):
    """Return the ``m``-th smallest (1-based) element of the multiset union of ``sets``.

    Set ``k`` lives at agent ``k``; every exchange is metered on ``fabric``.
    Each pass the coordinator picks the size-weighted median of the agents'
    window medians as a pivot, learns its global rank from per-agent counts
    and discards at least a quarter of the live elements.
    """
    K = len(sets)
    if K == 0:
        raise ValueError("need at least one agent")
    if fabric is None:
        fabric = Fabric(K)
    elif fabric.num_agents < K:
        raise ValueError("fabric has fewer agents than sets")
    agents = [_SelectAgent(k, vals) for k, vals in enumerate(sets)]
    total = sum(a.size for a in agents)
    if not 1 <= m <= total:
        raise ValueError(f"rank {m} outside [1, {total}]")

    sizes = {}
    for a in agents:
        fabric.send(a.k, COORDINATOR, (a.size,))
        if a.size:
            sizes[a.k] = a.size
    medians: dict[int, Any] = {}
    stale = set(sizes)
    while True:
        live = sum(sizes.values())
        if live <= SHIP_FACTOR * len(sizes):
            pool = []
            for k in sorted(sizes):
                window = agents[k].window()
                fabric.send(k, COORDINATOR, window)
                pool.extend(window)
            pool.sort()
            return pool[m - 1][0]

        for k in sorted(stale):
            medians[k] = agents[k].median()
            fabric.send(k, COORDINATOR, (medians[k],))
        stale.clear()

        owner = _weighted_median_owner(medians, sizes, live)
        pivot = medians[owner]
        counts = {owner: (sizes[owner] - 1) // 2}
        for k in sorted(sizes):
            if k == owner:
                continue
            fabric.send(COORDINATOR, k, (pivot,))
            counts[k] = agents[k].count_below(pivot)
            fabric.send(k, COORDINATOR, (counts[k],))
        below = sum(counts.values())

        if m == below + 1:
            return pivot[0]
        go_low = m <= below
        if not go_low:
            m -= below + 1
        for k in sorted(sizes):
            if go_low:
                new = counts[k]
            else:
                new = sizes[k] - counts[k] - (1 if k == owner else 0)
            if new == sizes[k]:
                continue
            fabric.send(COORDINATOR, k, ("<" if go_low else ">",))
            if go_low:
                agents[k].keep_below(pivot)
            else:
                agents[k].keep_above(pivot)
            assert agents[k].size == new
            stale.add(k)
            if new:
                sizes[k] = new
            else:
                del sizes[k]
                medians.pop(k, None)
                stale.discard(k)


def _weighted_median_owner(medians: Mapping[int, Any], sizes: Mapping[int, int], live: int) -> int:
    acc = 0
    for k in sorted(medians, key=medians.__getitem__):
        acc += sizes[k]
        if 2 * acc >= live:
            return k
    raise AssertionError("weights do not cover the live elements")


@dataclass(frozen=True)
class Assignment:
    """Tuples ``(arm, agent, count)``: agent (0-based) pulls arm ``count`` times."""

    tuples: tuple[tuple[int, int, int], ...]

    def per_arm(self) -> dict[int, int]:
        out: dict[int, int] = {}
        for arm, _, t in self.tuples:
            out[arm] = out.get(arm, 0) + t
        return out

    def per_agent_load(self, K: int) -> list[int]:
        load = [0] * K
        for _, agent, t in self.tuples:
            load[agent] += t
        return load

    def per_agent_tuples(self, K: int) -> list[list[tuple[int, int]]]:
        out: list[list[tuple[int, int]]] = [[] for _ in range(K)]
        for arm, agent, t in self.tuples:
            out[agent].append((arm, t))
        return out


def balanced_pull_dist(arms: Sequence[int], B: int, K: int) -> Assignment:
    """Greedy left-to-right split giving each agent at most ceil(|I| B / K) pulls."""
    if B < 0 or K < 1:
        raise ValueError("need B >= 0 and K >= 1")
    arms = list(arms)
    remaining = [B] * len(arms)
    tuples = []
    i = 0
    for k in range(K):
        budget = -(-len(arms) * B // K)
        while i < len(arms) and budget > 0:
            t = min(remaining[i], budget)
            tuples.append((arms[i], k, t))
            remaining[i] -= t
            budget -= t
            if remaining[i] == 0:
                i += 1
    return Assignment(tuples=tuple(tuples))


def mean_key(arm: int, mu: float) -> tuple[float, int]:
    """Sort key for descending empirical mean with lower arm index first on ties."""
    return (-mu, arm)


def gap_estimate(mu: float, mth: float, next_: float) -> float:
    return max(mu - next_, mth - mu)


def elim_decide(
    mu_hat: Mapping[int, float], m_r: int, n_next: int
) -> tuple[frozenset[int], frozenset[int]]:
    """One elimination step over the live arms ``mu_hat`` (arm -> empirical mean).

    Exactly ``n_next`` arms survive, ranked by (estimated gap, arm). Eliminated
    arms ranked within the top ``m_r`` by (mean desc, arm) are accepted.
    """
    size = len(mu_hat)
    if not 0 <= m_r <= size:
        raise ValueError(f"m_r={m_r} inconsistent with {size} live arms")
    if not 0 <= n_next < size:
        raise ValueError(f"need 0 <= n_next < {size}, got {n_next}")
    by_mean = sorted(mu_hat, key=lambda a: mean_key(a, mu_hat[a]))
    if m_r == 0:
        survivors = by_mean[:n_next]
    elif m_r == size:
        survivors = by_mean[size - n_next:]
    else:
        mth = mu_hat[by_mean[m_r - 1]]
        next_ = mu_hat[by_mean[m_r]]
        by_gap = sorted(mu_hat, key=lambda a: (gap_estimate(mu_hat[a], mth, next_), a))
        survivors = by_gap[:n_next]
    keep = frozenset(survivors)
    top = set(by_mean[:m_r])
    accepted = frozenset(a for a in mu_hat if a not in keep and a in top)
    return keep, accepted
