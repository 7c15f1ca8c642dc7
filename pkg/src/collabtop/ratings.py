"""Turn a ``user_id,item_id,rating`` file into a bandit instance (ratings on a 0-5 scale)."""

from __future__ import annotations

import csv
from collections import defaultdict
from pathlib import Path

import numpy as np

from .core import IID, NONIID, Instance, NonIIDInstance

MAX_RATING = 5.0


class MalformedRowError(ValueError):
    pass


class EmptyInstanceError(ValueError):
    pass


def _rows(path):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise MalformedRowError(f"{path}: empty file, expected a header line")
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != 3:
                raise MalformedRowError(f"{path}:{lineno}: expected 3 fields, got {len(row)}")
            try:
                user, item, rating = int(row[0]), int(row[1]), float(row[2])
            except ValueError as exc:
                raise MalformedRowError(f"{path}:{lineno}: {exc}") from None
            if not 0.0 <= rating <= MAX_RATING:
                raise MalformedRowError(f"{path}:{lineno}: rating {rating} outside [0, 5]")
            yield user, item, rating


def ingest_ratings(
    path: str | Path, mode: str = IID, K: int = 10, min_count: int = 1
) -> Instance | NonIIDInstance:
    """IID: one arm per item with at least ``min_count`` ratings, mean = average / 5.

    Non-IID: users split into groups by ``user_id mod K``; an item is kept only
    if every group rated it at least ``min_count`` times, and its local mean for
    group k is that group's average / 5. Arms are ordered by item id and the
    item ids are kept as labels.
    """
    if mode not in (IID, NONIID):
        raise ValueError(f"unknown mode {mode!r}")
    if K < 1:
        raise ValueError("need K >= 1")
    groups = 1 if mode == IID else K
    totals: dict[int, list[float]] = defaultdict(lambda: [0.0] * groups)
    counts: dict[int, list[int]] = defaultdict(lambda: [0] * groups)
    for user, item, rating in _rows(path):
        g = user % groups
        totals[item][g] += rating
        counts[item][g] += 1

    items = sorted(i for i, c in counts.items() if min(c) >= min_count)
    if not items:
        raise EmptyInstanceError(f"{path}: no item has {min_count} ratings in every group")
    local = np.array(
        [[totals[i][g] / counts[i][g] / MAX_RATING for i in items] for g in range(groups)]
    )
    if mode == IID:
        return Instance(tuple(local[0]), labels=tuple(items))
    return NonIIDInstance(local, labels=tuple(items))
