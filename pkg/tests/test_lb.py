import random
from collections import Counter

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import chisquare

from smartt_sim.lb import ObliviousPool, RepsPool, SinglePathPool, make_pool


def test_reps_recycles_clean_entropies_in_fifo_order():
    pool = RepsPool(16, random.Random(0))
    pool.on_feedback(3, congested=False)
    pool.on_feedback(7, congested=False)
    assert pool.next_entropy() == 3
    assert pool.next_entropy() == 7
    # pool now empty: falls back to the fresh cursor
    cursor = pool.fresh_cursor
    assert pool.next_entropy() == cursor
    assert pool.next_entropy() == (cursor + 1) % 16


def test_reps_discards_marked_entropies():
    pool = RepsPool(8, random.Random(0))
    pool.on_feedback(5, congested=True)
    assert not pool.recycled
    pool.on_feedback(2, congested=False)
    pool.on_feedback(5, congested=True)
    assert list(pool.recycled) == [2]


def test_reps_fresh_cursor_covers_domain():
    pool = RepsPool(10, random.Random(3))
    seen = [pool.next_entropy() for _ in range(10)]
    assert sorted(seen) == list(range(10))


def test_reps_ignores_out_of_range_feedback():
    pool = RepsPool(4, random.Random(0))
    pool.on_feedback(9, congested=False)
    assert not pool.recycled


def test_oblivious_is_uniform():
    pool = ObliviousPool(8, random.Random(42))
    n = 16_000
    counts = Counter(pool.next_entropy() for _ in range(n))
    assert sorted(counts) == list(range(8))
    _, pvalue = chisquare([counts[e] for e in range(8)])
    assert pvalue > 0.001


def test_oblivious_ignores_feedback():
    a = ObliviousPool(8, random.Random(1))
    b = ObliviousPool(8, random.Random(1))
    seq_a = []
    for i in range(50):
        seq_a.append(a.next_entropy())
        a.on_feedback(seq_a[-1], congested=bool(i % 2))
    assert seq_a == [b.next_entropy() for _ in range(50)]


def test_single_path_constant():
    pool = SinglePathPool(16, random.Random(9))
    first = pool.next_entropy()
    for _ in range(100):
        pool.on_feedback(first, congested=True)
        assert pool.next_entropy() == first


def test_make_pool_rejects_unknown_mode():
    with pytest.raises(ValueError):
        make_pool("ecmp", 4, random.Random())
    with pytest.raises(ValueError):
        make_pool("reps", 0, random.Random())


def test_usage_counter_tracks_picks():
    pool = make_pool("reps", 4, random.Random(2))
    for _ in range(12):
        pool.next_entropy()
    assert sum(pool.usage.values()) == 12
    assert set(pool.usage.values()) == {3}


@settings(max_examples=60, deadline=None)
@given(st.sampled_from(["reps", "oblivious", "single"]),
       st.integers(min_value=1, max_value=64),
       st.lists(st.tuples(st.booleans(), st.booleans()), max_size=200),
       st.integers(min_value=0, max_value=2**31))
def test_entropies_always_in_domain(mode, domain, ops, seed):
    pool = make_pool(mode, domain, random.Random(seed))
    outstanding = []
    for send, congested in ops:
        if send or not outstanding:
            e = pool.next_entropy()
            assert 0 <= e < domain
            outstanding.append(e)
        else:
            pool.on_feedback(outstanding.pop(0), congested)
    if mode == "reps":
        # only entropies that came back clean can be in the recycle queue
        assert all(0 <= e < domain for e in pool.recycled)
