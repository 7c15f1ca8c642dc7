"""Two-phase collaborative top-m identification with IID data.

Phase 1 keeps arms partitioned by a random hash and eliminates locally at the
agents, with the coordinator only locating order statistics. Once the agents'
subsets stop being balanced, the survivors move to the coordinator and Phase 2
spreads pulls evenly and decides centrally.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from .core import IID, Instance, compute_gaps, round_schedule, top_m
from .fabric import BROADCAST, COORDINATOR, OUTPUT, Fabric, Transcript
from .hashing import PolyHash, is_balanced, partition, sample_hash
from .sampling import Sampler, StreamBank, get_sampler
from .search import balanced_pull_dist, collab_search, elim_decide, gap_estimate, mean_key

LOCAL = "local"
GLOBAL = "global"


@dataclass
class AgentState:
    surviving: set[int] = field(default_factory=set)
    accepted: set[int] = field(default_factory=set)
    counts: dict[int, int] = field(default_factory=dict)
    sums: dict[int, float] = field(default_factory=dict)
    newly_accepted: int = 0

    def mean(self, arm: int) -> float:
        c = self.counts.get(arm, 0)
        return self.sums[arm] / c if c else 0.0


@dataclass
class CoordState:
    m: int
    m_r: int
    phase: str = LOCAL
    Q: set[int] = field(default_factory=set)
    I: set[int] | None = None
    sizes: list[int] = field(default_factory=list)
    accepted_by_agent: list[int] = field(default_factory=list)
    counts: dict[int, int] = field(default_factory=dict)
    sums: dict[int, float] = field(default_factory=dict)

    def mean(self, arm: int) -> float:
        c = self.counts.get(arm, 0)
        return self.sums[arm] / c if c else 0.0


@dataclass(frozen=True)
class RoundTrace:
    r: int
    phase: str
    live: int
    accepted: int
    m_next: int
    # distinct cumulative pull counts among surviving arms (per agent for non-IID)
    survivor_pulls: frozenset[int] = frozenset()


@dataclass(frozen=True)
class Outcome:
    algorithm: str
    selected: frozenset[int]
    success: bool
    words_total: int
    words_up: int
    words_down: int
    rounds: int
    max_pulls_per_agent: int
    pulls_by_agent: tuple[int, ...]
    trace: tuple[RoundTrace, ...] = ()
    transcript: Transcript | None = field(default=None, compare=False, repr=False)


def _validate(n: int, m: int, K: int, T: int) -> None:
    if m < 1 or n < 2 * m:
        raise ValueError(f"need 1 <= m and n >= 2m, got n={n}, m={m}")
    if K < 1:
        raise ValueError("need at least one agent")
    if T < 0:
        raise ValueError("time horizon must be nonnegative")


class IIDProtocol:
    """State of one run; ``run()`` executes it, the round methods are exposed for tests."""

    def __init__(
        self,
        instance: Instance | Sequence[float],
        m: int,
        K: int,
        T: int,
        seed: int,
        sampler: Sampler | None = None,
        hash_fn: PolyHash | None = None,
    ) -> None:
        if not isinstance(instance, Instance):
            instance = Instance(tuple(instance))
        n = instance.n
        _validate(n, m, K, T)
        self.instance = instance
        self.m, self.K, self.T = m, K, T
        self.schedule = round_schedule(n, T, K, IID)
        self.fabric = Fabric(K, horizon=T)
        self.streams = StreamBank(seed)
        self.sampler = sampler or get_sampler(instance.distribution_kind)
        self.hash = hash_fn or sample_hash(n, K, self.streams.hash_rng())
        if self.hash.num_agents != K:
            raise ValueError("hash range does not match the number of agents")
        self.agents = [AgentState() for _ in range(K)]
        self.coord = CoordState(m=m, m_r=m, sizes=[0] * K, accepted_by_agent=[0] * K)
        self.arm_pulls = [0] * (n + 1)
        self.trace: list[RoundTrace] = []
        self.r = 0

    # -- plumbing -------------------------------------------------------------

    def _pull(self, agent: int, arm: int, count: int) -> float:
        if count == 0:
            return 0.0
        self.fabric.record_pulls(agent, count)
        self.arm_pulls[arm] += count
        return self.sampler(self.streams.get(agent, arm), self.instance.mean(arm), count)

    def live_arms(self) -> set[int]:
        if self.coord.phase == GLOBAL:
            return set(self.coord.I)
        return set().union(*(a.surviving for a in self.agents))

    def accepted_arms(self) -> set[int]:
        if self.coord.phase == GLOBAL:
            return set(self.coord.Q)
        return set().union(*(a.accepted for a in self.agents))

    def empirical_means(self) -> dict[int, float]:
        """Observer view of the current estimates of all live arms."""
        if self.coord.phase == GLOBAL:
            return {a: self.coord.mean(a) for a in self.coord.I}
        return {a: ag.mean(a) for ag in self.agents for a in ag.surviving}

    def _record(self, r: int, phase: str) -> None:
        live = self.live_arms()
        self.trace.append(
            RoundTrace(r=r, phase=phase, live=len(live), accepted=len(self.accepted_arms()),
                       m_next=self.coord.m_r,
                       survivor_pulls=frozenset(self.arm_pulls[a] for a in live))
        )

    # -- protocol -------------------------------------------------------------

    def setup(self) -> None:
        fab = self.fabric
        fab.send(COORDINATOR, BROADCAST, self.hash.to_words())
        parts = partition(self.hash, range(1, self.instance.n + 1))
        for k, agent in enumerate(self.agents):
            agent.surviving = set(parts[k])
            fab.send(k, COORDINATOR, (len(agent.surviving),))
            self.coord.sizes[k] = len(agent.surviving)

    def local_elim(self, r: int) -> None:
        fab, coord, agents = self.fabric, self.coord, self.agents
        B = self.schedule.increment(r)
        n_next = self.schedule.keep(r)
        for k, agent in enumerate(agents):
            for arm in sorted(agent.surviving):
                s = self._pull(k, arm, B)
                agent.counts[arm] = agent.counts.get(arm, 0) + B
                agent.sums[arm] = agent.sums.get(arm, 0.0) + s
        n_r = sum(coord.sizes)
        m_r = coord.m_r

        def mean_keys(agent):
            return [mean_key(a, agent.mean(a)) for a in agent.surviving]

        if m_r == 0 or m_r == n_r:
            if m_r == 0:
                key_of = lambda ag, a: mean_key(a, ag.mean(a))  # noqa: E731
            else:
                key_of = lambda ag, a: (ag.mean(a), -a)  # noqa: E731
            threshold = None
            if n_next:
                threshold = collab_search(
                    [[key_of(ag, a) for a in ag.surviving] for ag in agents], n_next, fab
                )
                fab.send(COORDINATOR, BROADCAST, (threshold,))
            for ag in agents:
                keep = {a for a in ag.surviving if threshold is not None and key_of(ag, a) <= threshold}
                accepted = (ag.surviving - keep) if m_r == n_r else set()
                self._settle(ag, keep, accepted)
        else:
            kth = collab_search([mean_keys(ag) for ag in agents], m_r, fab)
            fab.send(COORDINATOR, BROADCAST, (kth,))
            candidates = []
            for k, ag in enumerate(agents):
                below = [key for key in mean_keys(ag) if key > kth]
                payload = (min(below),) if below else ()
                fab.send(k, COORDINATOR, payload)
                candidates.extend(payload)
            nxt = min(candidates)
            fab.send(COORDINATOR, BROADCAST, (nxt,))
            mth_val, next_val = -kth[0], -nxt[0]

            def gap_keys(ag):
                return {a: (gap_estimate(ag.mean(a), mth_val, next_val), a) for a in ag.surviving}

            gaps = [gap_keys(ag) for ag in agents]
            threshold = None
            if n_next:
                threshold = collab_search([list(g.values()) for g in gaps], n_next, fab)
                fab.send(COORDINATOR, BROADCAST, (threshold,))
            for ag, g in zip(agents, gaps):
                keep = {a for a in ag.surviving if threshold is not None and g[a] <= threshold}
                accepted = {a for a in ag.surviving - keep if mean_key(a, ag.mean(a)) <= kth}
                self._settle(ag, keep, accepted)

        newly = 0
        for k, ag in enumerate(agents):
            fab.send(k, COORDINATOR, (ag.newly_accepted, len(ag.surviving)))
            coord.sizes[k] = len(ag.surviving)
            coord.accepted_by_agent[k] += ag.newly_accepted
            newly += ag.newly_accepted
        coord.m_r -= newly
        self._record(r, LOCAL)

    @staticmethod
    def _settle(agent: AgentState, keep: set[int], accepted: set[int]) -> None:
        agent.surviving = keep
        agent.accepted |= accepted
        agent.newly_accepted = len(accepted)

    def handoff(self) -> None:
        """Agents ship their live arms, estimates and accepted arms to the coordinator."""
        fab, coord = self.fabric, self.coord
        T_r = self.schedule.T_r[self.r]
        coord.I = set()
        for k, ag in enumerate(self.agents):
            ids = sorted(ag.surviving)
            fab.send(k, COORDINATOR, ids)
            if T_r:
                # sums rather than means: same information given the known count T_r
                fab.send(k, COORDINATOR, [ag.sums[a] for a in ids])
            fab.send(k, COORDINATOR, sorted(ag.accepted))
            for a in ids:
                coord.counts[a] = ag.counts.get(a, 0)
                coord.sums[a] = ag.sums.get(a, 0.0)
            coord.I.update(ids)
            coord.Q.update(ag.accepted)
        coord.phase = GLOBAL

    def global_elim(self, r: int) -> None:
        fab, coord = self.fabric, self.coord
        B = self.schedule.increment(r)
        n_next = self.schedule.keep(r)
        assignment = balanced_pull_dist(sorted(coord.I), B, self.K)
        for k, tuples in enumerate(assignment.per_agent_tuples(self.K)):
            if not tuples:
                continue
            fab.send(COORDINATOR, k, [w for pair in tuples for w in pair])
            reports = [self._pull(k, arm, t) for arm, t in tuples]
            fab.send(k, COORDINATOR, reports)
            for (arm, t), s in zip(tuples, reports):
                coord.counts[arm] = coord.counts.get(arm, 0) + t
                coord.sums[arm] = coord.sums.get(arm, 0.0) + s
        mu = {a: coord.mean(a) for a in coord.I}
        survivors, accepted = elim_decide(mu, coord.m_r, n_next)
        coord.I = set(survivors)
        coord.Q |= accepted
        coord.m_r -= len(accepted)
        self._record(r, GLOBAL)

    def finish(self) -> frozenset[int]:
        fab, coord = self.fabric, self.coord
        if coord.phase == LOCAL:
            for k, ag in enumerate(self.agents):
                fab.send(k, COORDINATOR, sorted(ag.accepted))
                coord.Q |= ag.accepted
        fab.send(COORDINATOR, OUTPUT, sorted(coord.Q))
        return frozenset(coord.Q)

    def run(self) -> Outcome:
        R = self.schedule.R
        self.setup()
        while self.r < R and is_balanced(self.coord.sizes):
            self.fabric.advance_round()
            self.local_elim(self.r)
            self.r += 1
        if self.r < R:
            self.handoff()
            while self.r < R:
                self.fabric.advance_round()
                self.global_elim(self.r)
                self.r += 1
        selected = self.finish()
        return make_outcome("iid", selected, top_m(self.instance.means, self.m), self.fabric, self.trace)


def make_outcome(algorithm, selected, truth, fabric: Fabric, trace) -> Outcome:
    t = fabric.transcript
    return Outcome(
        algorithm=algorithm,
        selected=frozenset(selected),
        success=frozenset(selected) == frozenset(truth),
        words_total=t.words_total,
        words_up=t.words_up,
        words_down=t.words_down,
        rounds=t.rounds_used,
        max_pulls_per_agent=t.max_pulls_per_agent,
        pulls_by_agent=tuple(t.pulls_by_agent),
        trace=tuple(trace),
        transcript=t,
    )


def run_iid(
    instance: Instance | Sequence[float],
    m: int,
    K: int,
    T: int,
    seed: int,
    *,
    sampler: Sampler | None = None,
    hash_fn: PolyHash | None = None,
) -> Outcome:
    if not isinstance(instance, Instance):
        instance = Instance(tuple(instance))
    _validate(instance.n, m, K, T)
    compute_gaps(instance.means, m)
    return IIDProtocol(instance, m, K, T, seed, sampler=sampler, hash_fn=hash_fn).run()
