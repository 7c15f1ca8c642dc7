import math
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, strategies as st

from collabtop.hashing import (
    MERSENNE_61,
    PolyHash,
    hash_degree,
    is_balanced,
    partition,
    sample_hash,
)


def horner_oracle(coeffs, p, K, x):
    # direct power-sum evaluation, independent of Horner's rule
    return sum(c * pow(x, j, p) for j, c in enumerate(coeffs)) % p % K


def test_degree_for_eight_arms():
    assert hash_degree(8) == 21
    h = sample_hash(8, 3, 0)
    assert len(h.to_words()) == 22


def test_same_seed_same_coefficients():
    assert sample_hash(100, 4, 17) == sample_hash(100, 4, 17)
    assert sample_hash(100, 4, 17) != sample_hash(100, 4, 18)


def test_single_agent_range():
    h = sample_hash(50, 1, 3)
    assert {h(i) for i in range(1, 51)} == {0}


@pytest.mark.parametrize("x,want", [(4, 0), (1, 1)])
def test_small_prime_examples(x, want):
    assert PolyHash((3, 2), num_agents=2, prime=11)(x) == want


def test_zero_polynomial():
    h = PolyHash((0, 0, 0), num_agents=5)
    assert {h(i) for i in range(100)} == {0}
    assert set(h.eval_many(range(100)).tolist()) == {0}


@given(
    st.lists(st.integers(0, MERSENNE_61 - 1), min_size=1, max_size=40),
    st.integers(1, 17),
    st.lists(st.integers(0, 2**31 - 1), min_size=1, max_size=50),
)
def test_eval_paths_agree_with_power_sum(coeffs, K, xs):
    h = PolyHash(tuple(coeffs), num_agents=K)
    want = [horner_oracle(coeffs, MERSENNE_61, K, x) for x in xs]
    assert [h(x) for x in xs] == want
    assert h.eval_many(xs).tolist() == want


def test_eval_many_rejects_large_ids():
    with pytest.raises(ValueError):
        sample_hash(8, 2, 0).eval_many([2**31])


def test_wire_round_trip():
    h = sample_hash(64, 7, 5)
    assert PolyHash.from_words(h.to_words(), 7) == h


def test_partition_covers_arms_once():
    h = sample_hash(200, 6, 11)
    parts = partition(h, range(1, 201))
    assert sorted(a for p in parts for a in p) == list(range(1, 201))
    for k, p in enumerate(parts):
        assert all(h(a) == k for a in p)


@pytest.mark.parametrize("sizes,want", [([4, 4], True), ([5, 2], False), ([3, 6], True), ([0, 0], True), ([0, 1], False)])
def test_balanced_examples(sizes, want):
    assert is_balanced(sizes) is want


def test_partition_is_roughly_uniform():
    # pairwise independence alone gives each agent about n/K arms
    n, K = 4096, 4
    counts = Counter(sample_hash(n, K, 99).eval_many(range(1, n + 1)).tolist())
    for k in range(K):
        assert abs(counts[k] - n / K) < 6 * math.sqrt(n / K)


def test_balanced_rate_large_partition():
    n, K = 4096, 2
    ok = sum(
        is_balanced(np.bincount(sample_hash(n, K, s).eval_many(range(1, n + 1)), minlength=K))
        for s in range(200)
    )
    assert ok == 200
