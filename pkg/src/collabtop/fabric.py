"""Simulated coordinator/agent message fabric with word metering and pull accounting.

A word is one numeric value or one arm index. Envelopes (sender, receiver,
round) are free. A broadcast reaches all K agents and is charged K times.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from typing import NamedTuple, TextIO, Union

COORDINATOR = "coordinator"
BROADCAST = "broadcast"
OUTPUT = "output"

Endpoint = Union[int, str]


class RoundMismatchError(RuntimeError):
    pass


class BudgetExceededError(RuntimeError):
    pass


@dataclass(frozen=True)
class Message:
    sender: Endpoint
    receiver: Endpoint
    payload: tuple
    round: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "payload", tuple(self.payload))

    @property
    def word_count(self) -> int:
        return len(self.payload)


class Receipt(NamedTuple):
    seq: int
    words: int


@dataclass
class Transcript:
    num_agents: int
    messages: list[Message] = field(default_factory=list)
    words_total: int = 0
    words_up: int = 0
    words_down: int = 0
    rounds_used: int = 0
    pulls_by_agent: list[int] = field(default_factory=list)

    def __post_init__(self) -> None:
        if not self.pulls_by_agent:
            self.pulls_by_agent = [0] * self.num_agents

    @property
    def max_pulls_per_agent(self) -> int:
        return max(self.pulls_by_agent)

    def dump(self, stream: TextIO) -> None:
        for msg in self.messages:
            stream.write(f"{msg.round}\t{msg.sender}\t{msg.receiver}\t{msg.word_count}\n")

    def dumps(self) -> str:
        buf = io.StringIO()
        self.dump(buf)
        return buf.getvalue()


def _valid_endpoint(ep: Endpoint, K: int) -> bool:
    if isinstance(ep, str):
        return ep in (COORDINATOR, BROADCAST, OUTPUT)
    return 0 <= ep < K


class Fabric:
    """One fabric per simulated run; not safe to share mutably between threads."""

    def __init__(self, num_agents: int, horizon: int | None = None) -> None:
        if num_agents < 1:
            raise ValueError("need at least one agent")
        self.num_agents = num_agents
        self.horizon = horizon
        self.round = 0
        self.transcript = Transcript(num_agents=num_agents)

    @property
    def words_total(self) -> int:
        return self.transcript.words_total

    def post(self, msg: Message) -> Receipt:
        if msg.round != self.round:
            raise RoundMismatchError(f"message for round {msg.round} posted in round {self.round}")
        K = self.num_agents
        if not (_valid_endpoint(msg.sender, K) and _valid_endpoint(msg.receiver, K)):
            raise ValueError(f"bad endpoint in {msg.sender!r} -> {msg.receiver!r}")
        if msg.sender in (BROADCAST, OUTPUT) or msg.receiver == msg.sender:
            raise ValueError(f"bad route {msg.sender!r} -> {msg.receiver!r}")
        if msg.receiver == BROADCAST and msg.sender != COORDINATOR:
            raise ValueError("only the coordinator broadcasts")
        if isinstance(msg.sender, int) and msg.receiver != COORDINATOR:
            raise ValueError("agents talk only to the coordinator")
        words = msg.word_count * (K if msg.receiver == BROADCAST else 1)
        t = self.transcript
        t.messages.append(msg)
        t.words_total += words
        if msg.receiver == COORDINATOR:
            t.words_up += words
        else:
            t.words_down += words
        return Receipt(seq=len(t.messages) - 1, words=words)

    def send(self, sender: Endpoint, receiver: Endpoint, payload=()) -> Receipt:
        return self.post(Message(sender, receiver, tuple(payload), self.round))

    def record_pulls(self, agent: int, count: int) -> None:
        if count < 0:
            raise ValueError("pull count must be nonnegative")
        pulls = self.transcript.pulls_by_agent
        if self.horizon is not None and pulls[agent] + count > self.horizon:
            raise BudgetExceededError(
                f"agent {agent} would make {pulls[agent] + count} pulls, horizon is {self.horizon}"
            )
        pulls[agent] += count

    def advance_round(self) -> int:
        self.round += 1
        self.transcript.rounds_used = self.round
        return self.round
