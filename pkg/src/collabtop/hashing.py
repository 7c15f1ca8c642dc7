"""Polynomial k-wise independent hash partitioning arms among agents."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

MERSENNE_61 = (1 << 61) - 1
_MASK32 = (1 << 32) - 1
_MASK29 = (1 << 29) - 1


def hash_degree(n: int) -> int:
    return math.ceil(10 * math.log(n))


@dataclass(frozen=True)
class PolyHash:
    """h(x) = (sum_j c_j x^j mod prime) mod K, coefficients stored lowest degree first."""

    coefficients: tuple[int, ...]
    num_agents: int
    prime: int = MERSENNE_61

    def __post_init__(self) -> None:
        if self.num_agents < 1:
            raise ValueError("need at least one agent")
        if not self.coefficients:
            raise ValueError("need at least one coefficient")
        object.__setattr__(self, "coefficients", tuple(int(c) % self.prime for c in self.coefficients))

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    def eval(self, i: int) -> int:
        acc = 0
        for c in reversed(self.coefficients):
            acc = (acc * i + c) % self.prime
        return acc % self.num_agents

    __call__ = eval

    def eval_many(self, arms) -> np.ndarray:
        """Vectorized ``eval`` for arm ids below 2**31 (Mersenne-prime arithmetic in uint64)."""
        if self.prime != MERSENNE_61:
            return np.array([self.eval(int(i)) for i in arms], dtype=np.int64)
        x = np.asarray(arms, dtype=np.uint64)
        if x.size and int(x.max()) >= 1 << 31:
            raise ValueError("eval_many supports arm ids below 2**31")
        acc = np.zeros_like(x)
        for c in reversed(self.coefficients):
            acc = _mulmod_small(acc, x)
            acc = _reduce(acc + np.uint64(c))
        return (acc % np.uint64(self.num_agents)).astype(np.int64)

    def to_words(self) -> tuple[int, ...]:
        """Wire form: the coefficients only, the prime is fixed by the format."""
        return self.coefficients

    @classmethod
    def from_words(cls, words: Sequence[int], num_agents: int) -> "PolyHash":
        return cls(coefficients=tuple(int(w) for w in words), num_agents=num_agents)


def _reduce(y: np.ndarray) -> np.ndarray:
    p = np.uint64(MERSENNE_61)
    y = (y & p) + (y >> np.uint64(61))
    return np.where(y >= p, y - p, y)


def _mulmod_small(acc: np.ndarray, x: np.ndarray) -> np.ndarray:
    # acc < 2**61, x < 2**31: split acc so every partial product stays below 2**63
    hi = acc >> np.uint64(32)
    lo = acc & np.uint64(_MASK32)
    hx = hi * x
    part_hi = (hx >> np.uint64(29)) + ((hx & np.uint64(_MASK29)) << np.uint64(32))
    return _reduce(_reduce(part_hi) + _reduce(lo * x))


def sample_hash(n: int, K: int, rng: np.random.Generator | int | None) -> PolyHash:
    if n < 2 or K < 1:
        raise ValueError("need n >= 2 and K >= 1")
    rng = np.random.default_rng(rng)
    coeffs = rng.integers(0, MERSENNE_61, size=hash_degree(n) + 1, dtype=np.int64)
    return PolyHash(coefficients=tuple(int(c) for c in coeffs), num_agents=K)


def partition(h: PolyHash, arms: Sequence[int]) -> list[list[int]]:
    """Split ``arms`` into ``K`` lists by hash value, preserving input order."""
    parts: list[list[int]] = [[] for _ in range(h.num_agents)]
    for arm in arms:
        parts[h.eval(arm)].append(arm)
    return parts


def is_balanced(sizes: Sequence[int]) -> bool:
    if len(sizes) == 0:
        raise ValueError("need at least one subset size")
    return max(sizes) <= 2 * min(sizes)
