"""Collaborative top-m with agent-specific (non-IID) reward distributions.

Also holds the one-round Uniform baseline and the set-disjointness instance
family used to exercise the non-IID communication lower bound.
"""

from __future__ import annotations

import math

import numpy as np

from .core import NONIID, Instance, NonIIDInstance, compute_gaps, round_schedule, top_m
from .fabric import BROADCAST, COORDINATOR, OUTPUT, Fabric
from .iid import Outcome, RoundTrace, make_outcome
from .sampling import Sampler, StreamBank, get_sampler
from .search import elim_decide


def replicate(instance: Instance, K: int) -> NonIIDInstance:
    """View an IID instance as K identical local copies."""
    rows = np.tile(np.asarray(instance.means, dtype=np.float64), (K, 1))
    return NonIIDInstance(rows, distribution_kind=instance.distribution_kind, labels=instance.labels)


def _coerce(instance, K: int) -> NonIIDInstance:
    if isinstance(instance, Instance):
        return replicate(instance, K)
    if not isinstance(instance, NonIIDInstance):
        instance = NonIIDInstance(np.asarray(instance, dtype=np.float64))
    if instance.K != K:
        raise ValueError(f"instance has {instance.K} agents, asked to run with K={K}")
    return instance


def _average(local: list[list[float]], j: int) -> float:
    # identical arithmetic to core.global_means so estimates and truth are comparable bit for bit
    return math.fsum(row[j] for row in local) / len(local)


def local_targets(schedule, K: int, T: int) -> list[int]:
    """Cumulative local pulls per surviving arm after each round, ceil(T_r / K).

    Rounding up can overrun the horizon by up to n pulls when T is tiny; in that
    case the whole schedule rounds down instead, which always fits.
    """
    up = [-(-t // K) for t in schedule.T_r]
    used = sum(schedule.n_r[r] * (up[r + 1] - up[r]) for r in range(schedule.R))
    if used <= T:
        return up
    return [t // K for t in schedule.T_r]


def run_noniid(
    instance: NonIIDInstance,
    m: int,
    K: int,
    T: int,
    seed: int,
    *,
    sampler: Sampler | None = None,
) -> Outcome:
    instance = _coerce(instance, K)
    n = instance.n
    if m < 1 or n < 2 * m:
        raise ValueError(f"need 1 <= m and n >= 2m, got n={n}, m={m}")
    if T < 0:
        raise ValueError("time horizon must be nonnegative")
    truth_means = instance.global_means
    compute_gaps(truth_means, m)

    schedule = round_schedule(n, T, K, NONIID)
    fabric = Fabric(K, horizon=T)
    streams = StreamBank(seed)
    sampler = sampler or get_sampler(instance.distribution_kind)
    local_pulls = [[0] * (n + 1) for _ in range(K)]
    sums = [[0.0] * (n + 1) for _ in range(K)]
    live = list(range(1, n + 1))
    Q: set[int] = set()
    m_r = m
    trace = []

    targets = local_targets(schedule, K, T)

    for r in range(schedule.R):
        fabric.advance_round()
        target = targets[r + 1]
        extra = target - targets[r]
        local = []
        for k in range(K):
            if extra:
                fabric.record_pulls(k, extra * len(live))
                for arm in live:
                    local_pulls[k][arm] += extra
                    sums[k][arm] += sampler(streams.get(k, arm), instance.local_mean(k, arm), extra)
            means = [sums[k][arm] / target if target else 0.0 for arm in live]
            fabric.send(k, COORDINATOR, means)
            local.append(means)
        mu = {arm: _average(local, j) for j, arm in enumerate(live)}
        survivors, accepted = elim_decide(mu, m_r, schedule.keep(r))
        Q |= accepted
        m_r -= len(accepted)
        live = sorted(survivors)
        if live:
            fabric.send(COORDINATOR, BROADCAST, live)
        trace.append(RoundTrace(
            r=r, phase="global", live=len(live), accepted=len(Q), m_next=m_r,
            survivor_pulls=frozenset(local_pulls[k][a] for k in range(K) for a in live),
        ))

    fabric.send(COORDINATOR, OUTPUT, sorted(Q))
    return make_outcome("noniid", Q, top_m(truth_means, m), fabric, trace)


def uniform_baseline(
    instance: NonIIDInstance,
    m: int,
    K: int,
    T: int,
    seed: int,
    *,
    sampler: Sampler | None = None,
) -> Outcome:
    """One round: every agent pulls every arm floor(T/n) times and reports local means."""
    instance = _coerce(instance, K)
    n = instance.n
    if T < n:
        raise ValueError(f"uniform baseline needs T >= n, got T={T}, n={n}")
    if not 1 <= m < n:
        raise ValueError("need 1 <= m < n")
    fabric = Fabric(K, horizon=T)
    streams = StreamBank(seed)
    sampler = sampler or get_sampler(instance.distribution_kind)
    per_arm = T // n
    fabric.advance_round()
    local = []
    for k in range(K):
        fabric.record_pulls(k, per_arm * n)
        means = [
            sampler(streams.get(k, arm), instance.local_mean(k, arm), per_arm) / per_arm
            for arm in range(1, n + 1)
        ]
        fabric.send(k, COORDINATOR, means)
        local.append(means)
    estimates = [_average(local, j) for j in range(n)]
    selected = top_m(estimates, m)
    fabric.send(COORDINATOR, OUTPUT, sorted(selected))
    trace = [RoundTrace(r=0, phase="global", live=0, accepted=m, m_next=0)]
    return make_outcome("uniform", selected, top_m(instance.global_means, m), fabric, trace)


def disj(X) -> int:
    """Multi-party set disjointness: 1 iff some coordinate is set for every agent."""
    X = np.asarray(X)
    return int(bool(np.any(np.all(X == 1, axis=0))))


def disj_threshold(K: int) -> float:
    return 2.0 / 3.0 - 1.0 / (6.0 * K)


def disj_instance(X) -> NonIIDInstance:
    """Top-1 instance whose best arm is the extra arm n+1 exactly when ``disj(X) == 0``.

    Arm i gets local means (1 + X[k, i]) / 3 + i / n^2; arm n+1 sits at
    2/3 - 1/(6K) for every agent, strictly between all-ones columns (global
    mean >= 2/3 + 1/n^2) and the rest (<= 2/3 - 1/(3K) + 1/n) once n > 6K.
    """
    X = np.asarray(X)
    if X.ndim != 2:
        raise ValueError("X must be a K x n binary matrix")
    if not np.isin(X, (0, 1)).all():
        raise ValueError("X must be binary")
    K, n = X.shape
    if n <= 6 * K:
        raise ValueError(f"separation needs n > 6K, got n={n}, K={K}")
    delta = 1.0 / (n * n)
    idx = np.arange(1, n + 1, dtype=np.float64)
    local = (1.0 + X.astype(np.float64)) / 3.0 + idx * delta
    special = np.full((K, 1), disj_threshold(K))
    return NonIIDInstance(np.hstack([local, special]))
