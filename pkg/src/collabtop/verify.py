"""Randomized oracle-equivalence checks, shared by ``collabtop verify`` and the test suite.

Each check returns (ok, detail) and compares a distributed routine with a
centralized reference computed independently.
"""

from __future__ import annotations

import math
from typing import Iterator

import numpy as np

from .core import Instance
from .iid import GLOBAL, IIDProtocol
from .search import balanced_pull_dist, collab_search, elim_decide
from .fabric import Fabric
from .hashing import is_balanced


def random_partition(rng: np.random.Generator, K: int, dup: bool):
    """A random multiset of 1-200 values split arbitrarily over K agents."""
    size = int(rng.integers(1, 201))
    if dup:
        values = rng.integers(0, max(1, size // 4), size=size).tolist()
    else:
        values = rng.permutation(10 * size)[:size].tolist()
    owners = rng.integers(0, K, size=size)
    sets = [[v for v, o in zip(values, owners) if o == k] for k in range(K)]
    return values, sets


def check_collab_search(cases: int, rng: np.random.Generator, Ks=(2, 5, 9)):
    worst = 0.0
    for case in range(cases):
        K = Ks[case % len(Ks)]
        values, sets = random_partition(rng, K, dup=rng.random() < 0.2)
        m = int(rng.integers(1, len(values) + 1))
        fab = Fabric(K)
        got = collab_search(sets, m, fab)
        want = sorted(values)[m - 1]
        if got != want:
            return False, f"case {case}: K={K} m={m} got {got}, sorted union gives {want}"
        budget = 8 * K * math.log2(len(values)) + 4 * K
        if fab.words_total > budget:
            return False, f"case {case}: {fab.words_total} words exceeds {budget:.1f}"
        worst = max(worst, fab.words_total / budget)
    return True, f"{cases} cases, worst words/budget {worst:.2f}"


def check_balanced_pull_dist(cases: int, rng: np.random.Generator):
    for case in range(cases):
        size = int(rng.integers(1, 101))
        B = int(rng.integers(0, 51))
        K = int(rng.integers(1, 11))
        arms = sorted(rng.choice(1000, size=size, replace=False).tolist())
        a = balanced_pull_dist(arms, B, K)
        per_arm = a.per_arm()
        if any(per_arm.get(arm, 0) != B for arm in arms):
            return False, f"case {case}: some arm does not receive exactly B={B}"
        cap = -(-size * B // K)
        if max(a.per_agent_load(K)) > cap:
            return False, f"case {case}: load {max(a.per_agent_load(K))} > {cap}"
        tuples = max(len(t) for t in a.per_agent_tuples(K))
        if tuples > size // K + 2:
            return False, f"case {case}: {tuples} tuples at one agent > {size // K + 2}"
    return True, f"{cases} cases"


def _bernoulli_instance(rng: np.random.Generator, n: int) -> Instance:
    # coarse means so that empirical ties between arms actually happen
    while True:
        means = tuple(float(x) for x in rng.integers(1, 10, size=n) / 10)
        if len(set(means)) > 1:
            return Instance(means)


def check_round_decisions(cases: int, rng: np.random.Generator):
    """Every round of the IID protocol matches elim_decide on the pooled estimates."""
    rounds = 0
    for case in range(cases):
        n = int(rng.integers(4, 40))
        m = int(rng.integers(1, n // 2 + 1))
        K = int(rng.integers(1, 6))
        T = int(rng.integers(n, 40 * n))
        inst = _bernoulli_instance(rng, n)
        proto = IIDProtocol(inst, m, K, T, seed=int(rng.integers(2**32)))
        proto.setup()
        phase_switched = False
        while proto.r < proto.schedule.R:
            if not phase_switched and proto.coord.phase != GLOBAL:
                if not is_balanced(proto.coord.sizes):
                    proto.handoff()
                    phase_switched = True
            before = proto.live_arms()
            accepted_before = proto.accepted_arms()
            m_r = proto.coord.m_r
            proto.fabric.advance_round()
            if proto.coord.phase == GLOBAL:
                proto.global_elim(proto.r)
                means = {a: proto.coord.mean(a) for a in before}
            else:
                proto.local_elim(proto.r)
                owner = {a: ag for ag in proto.agents for a in before if a in ag.counts}
                means = {a: owner[a].mean(a) for a in before}
            want_live, want_acc = elim_decide(means, m_r, proto.schedule.keep(proto.r))
            got_live = proto.live_arms()
            got_acc = proto.accepted_arms() - accepted_before
            if got_live != set(want_live) or got_acc != set(want_acc):
                return False, (
                    f"case {case} round {proto.r} ({proto.coord.phase}): n={n} m={m} K={K} T={T}, "
                    f"live {sorted(got_live)} vs {sorted(want_live)}, "
                    f"accepted {sorted(got_acc)} vs {sorted(want_acc)}"
                )
            proto.r += 1
            rounds += 1
        if len(proto.finish()) != m:
            return False, f"case {case}: selected set has the wrong size"
    return True, f"{cases} runs, {rounds} rounds"


def run_all(cases: int, rng: np.random.Generator) -> Iterator[tuple[str, bool, str]]:
    for name, check in (
        ("collab_search", check_collab_search),
        ("balanced_pull_dist", check_balanced_pull_dist),
        ("round_decisions", check_round_decisions),
    ):
        ok, detail = check(cases, rng)
        yield name, ok, detail
