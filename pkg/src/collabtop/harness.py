"""Experiment configuration, seeded trial orchestration and CSV records."""

from __future__ import annotations

import csv
import dataclasses
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .core import IID, NONIID, Instance, NonIIDInstance
from .iid import Outcome, run_iid
from .noniid import run_noniid, uniform_baseline
from .ratings import ingest_ratings
from .sampling import trial_seed

log = logging.getLogger(__name__)

ALGORITHMS = ("iid", "noniid", "uniform")
SWEEP_AXES = ("T", "K")
DEFAULT_TOP = 0.9
DEFAULT_BOTTOM = 0.1


@dataclass(frozen=True)
class ExperimentConfig:
    algorithm: str = "iid"
    n: int = 16
    m: int = 1
    K: int = 4
    T: int = 10_000
    trials: int = 100
    master_seed: int = 0
    sweep_axis: str | None = None
    sweep_values: tuple[int, ...] = ()
    means: tuple[float, ...] | None = None
    gap: float | None = None
    spread: float = 0.1
    ratings: str | None = None
    min_count: int = 1
    workers: int = 1

    def __post_init__(self) -> None:
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"algorithm must be one of {ALGORITHMS}, got {self.algorithm!r}")
        if self.trials < 1:
            raise ValueError("need at least one trial")
        if self.ratings is not None and (self.means is not None or self.gap is not None):
            raise ValueError("give either a ratings file or a synthetic instance, not both")
        if self.means is not None:
            object.__setattr__(self, "means", tuple(float(x) for x in self.means))
            object.__setattr__(self, "n", len(self.means))
        if self.sweep_axis is not None:
            if self.sweep_axis not in SWEEP_AXES:
                raise ValueError(f"sweep axis must be one of {SWEEP_AXES}")
            if not self.sweep_values:
                raise ValueError("a sweep needs at least one value")
        object.__setattr__(self, "sweep_values", tuple(int(v) for v in self.sweep_values))

    def points(self) -> list["ExperimentConfig"]:
        if self.sweep_axis is None:
            return [self]
        return [
            dataclasses.replace(self, sweep_axis=None, sweep_values=(), **{self.sweep_axis: v})
            for v in self.sweep_values
        ]


@dataclass(frozen=True)
class TrialRecord:
    trial: int
    algorithm: str
    n: int
    m: int
    K: int
    T: int
    success: int
    words_total: int
    rounds: int
    max_pulls_per_agent: int


FIELDS = tuple(f.name for f in dataclasses.fields(TrialRecord))


def spaced_means(n: int, gap: float | None = None) -> tuple[float, ...]:
    if gap is None:
        gap = (DEFAULT_TOP - DEFAULT_BOTTOM) / max(n - 1, 1)
    means = tuple(DEFAULT_TOP - gap * i for i in range(n))
    if means[-1] < 0:
        raise ValueError(f"gap {gap} too wide for {n} arms starting at {DEFAULT_TOP}")
    return means


def heterogeneous(means: Sequence[float], K: int, spread: float = 0.1) -> NonIIDInstance:
    """Agent-specific means averaging back to ``means`` exactly (up to rounding).

    Agent k shifts arm i by (-1)^i * s_i * (2k/(K-1) - 1), with s_i capped so
    every local mean stays in [0, 1]; the offsets cancel across agents.
    """
    mu = np.asarray(means, dtype=np.float64)
    if K == 1:
        return NonIIDInstance(mu[None, :])
    s = np.minimum(spread, np.minimum(mu, 1.0 - mu))
    sign = np.where(np.arange(mu.size) % 2 == 0, 1.0, -1.0)
    offsets = 2.0 * np.arange(K) / (K - 1) - 1.0
    local = mu[None, :] + offsets[:, None] * (sign * s)[None, :]
    return NonIIDInstance(np.clip(local, 0.0, 1.0))


def build_instance(config: ExperimentConfig) -> Instance | NonIIDInstance:
    mode = IID if config.algorithm == "iid" else NONIID
    if config.ratings is not None:
        return ingest_ratings(config.ratings, mode, config.K, config.min_count)
    means = config.means if config.means is not None else spaced_means(config.n, config.gap)
    if mode == IID:
        return Instance(means)
    return heterogeneous(means, config.K, config.spread)


def run_one(config: ExperimentConfig, instance, seed: int) -> Outcome:
    if config.algorithm == "iid":
        return run_iid(instance, config.m, config.K, config.T, seed)
    if config.algorithm == "noniid":
        return run_noniid(instance, config.m, config.K, config.T, seed)
    return uniform_baseline(instance, config.m, config.K, config.T, seed)


def _record(config: ExperimentConfig, n: int, trial: int, outcome: Outcome) -> TrialRecord:
    return TrialRecord(
        trial=trial,
        algorithm=config.algorithm,
        n=n,
        m=config.m,
        K=config.K,
        T=config.T,
        success=int(outcome.success),
        words_total=outcome.words_total,
        rounds=outcome.rounds,
        max_pulls_per_agent=outcome.max_pulls_per_agent,
    )


def run_trials(config: ExperimentConfig) -> list[TrialRecord]:
    """All trials at every sweep point, ordered by (point, trial) whatever the worker count.

    Trial t uses the same derived seed at every point, so sweeps share randomness.
    """
    jobs = []
    for p, point in enumerate(config.points()):
        instance = build_instance(point)
        for t in range(config.trials):
            jobs.append((p, point, instance, t))

    def work(job):
        p, point, instance, t = job
        outcome = run_one(point, instance, trial_seed(config.master_seed, t))
        return p, _record(point, instance.n, t, outcome)

    if config.workers > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            results = list(pool.map(work, jobs))
    else:
        results = [work(j) for j in jobs]
    results.sort(key=lambda pr: (pr[0], pr[1].trial))
    log.info("ran %d trials over %d points", len(results), len(config.points()))
    return [rec for _, rec in results]


def emit_csv(records: Iterable[TrialRecord], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        write_csv(records, fh)


def write_csv(records: Iterable[TrialRecord], stream) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(FIELDS)
    for rec in records:
        writer.writerow([getattr(rec, f) for f in FIELDS])


def read_csv(path: str | Path) -> list[TrialRecord]:
    types = {f.name: f.type for f in dataclasses.fields(TrialRecord)}
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            out.append(TrialRecord(**{
                k: (v if types[k] == "str" else int(v)) for k, v in row.items()
            }))
    return out


@dataclass
class PointSummary:
    algorithm: str
    n: int
    m: int
    K: int
    T: int
    trials: int = 0
    successes: int = 0
    words: list[int] = field(default_factory=list)

    @property
    def error_rate(self) -> float:
        return 1.0 - self.successes / self.trials

    @property
    def mean_words(self) -> float:
        return sum(self.words) / len(self.words)


def summarize(records: Iterable[TrialRecord]) -> list[PointSummary]:
    points: dict[tuple, PointSummary] = {}
    for rec in records:
        key = (rec.algorithm, rec.n, rec.m, rec.K, rec.T)
        s = points.setdefault(key, PointSummary(*key))
        s.trials += 1
        s.successes += rec.success
        s.words.append(rec.words_total)
    return list(points.values())


def error_rate(records: Sequence[TrialRecord]) -> float:
    return 1.0 - sum(r.success for r in records) / len(records)


# flat key = value config files; keys use the CLI flag spelling
_CONFIG_KEYS = {
    "algo": ("algorithm", str),
    "n": ("n", int),
    "m": ("m", int),
    "agents": ("K", int),
    "horizon": ("T", int),
    "trials": ("trials", int),
    "seed": ("master_seed", int),
    "ratings": ("ratings", str),
    "min-count": ("min_count", int),
    "sweep-axis": ("sweep_axis", str),
    "sweep-values": ("sweep_values", lambda s: tuple(int(v) for v in s.split(","))),
    "means": ("means", lambda s: tuple(float(v) for v in s.split(","))),
    "gap": ("gap", float),
    "spread": ("spread", float),
    "workers": ("workers", int),
    "out": ("out", str),
}


def parse_config_text(text: str) -> dict:
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"config line {lineno}: expected key = value")
        key, value = (part.strip() for part in line.split("=", 1))
        key = key.replace("_", "-")
        if key not in _CONFIG_KEYS:
            raise ValueError(f"config line {lineno}: unknown key {key!r}")
        name, conv = _CONFIG_KEYS[key]
        values[name] = conv(value)
    return values


def load_config(path: str | Path) -> dict:
    return parse_config_text(Path(path).read_text())
