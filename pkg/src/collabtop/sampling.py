"""Reward samplers and the seed hierarchy (trial seed -> per-(agent, arm) stream)."""

from __future__ import annotations

from typing import Callable

import numpy as np

# sampler(rng, mean, count) -> sum of ``count`` rewards in [0, 1] with the given mean
Sampler = Callable[[np.random.Generator, float, int], float]

_HASH_KEY = 0
_PULL_KEY = 1


def bernoulli(rng: np.random.Generator, mean: float, count: int) -> float:
    return float(rng.binomial(count, mean))


def beta(rng: np.random.Generator, mean: float, count: int, concentration: float = 4.0) -> float:
    if mean <= 0.0 or mean >= 1.0:
        return mean * count
    draws = rng.beta(mean * concentration, (1.0 - mean) * concentration, size=count)
    return float(draws.sum())


def noiseless(rng: np.random.Generator, mean: float, count: int) -> float:
    """Deterministic stand-in: every pull returns exactly the mean."""
    return mean * count


SAMPLERS: dict[str, Sampler] = {"bernoulli": bernoulli, "beta": beta, "noiseless": noiseless}


def get_sampler(kind: str) -> Sampler:
    try:
        return SAMPLERS[kind]
    except KeyError:
        raise ValueError(f"unknown distribution kind {kind!r}") from None


class StreamBank:
    """Independent generators keyed by (agent, arm), created on first use."""

    def __init__(self, seed: int) -> None:
        self.seed = seed
        self._streams: dict[tuple[int, int], np.random.Generator] = {}

    def hash_rng(self) -> np.random.Generator:
        return np.random.default_rng(np.random.SeedSequence(self.seed, spawn_key=(_HASH_KEY,)))

    def get(self, agent: int, arm: int) -> np.random.Generator:
        rng = self._streams.get((agent, arm))
        if rng is None:
            ss = np.random.SeedSequence(self.seed, spawn_key=(_PULL_KEY, agent, arm))
            rng = self._streams[(agent, arm)] = np.random.default_rng(ss)
        return rng


def trial_seed(master_seed: int, trial: int) -> int:
    ss = np.random.SeedSequence(master_seed, spawn_key=(trial,))
    return int(ss.generate_state(1, dtype=np.uint64)[0])
