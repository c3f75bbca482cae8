import numpy as np
import pytest
from hypothesis import given, strategies as st

from loadagg.aggregation import (LevelExceedsCorpus, MisalignedMembers, MixedClass, SplitMix64,
                                 aggregate, build_aggregates, derive_seed, level_schedule,
                                 sample_group)
from loadagg.core import LoadClass, SlotIndex, validate_series

S0 = SlotIndex(0, 1)


def _m(values, mid=1, cls=LoadClass.RESIDENTIAL, start=S0):
    return validate_series(values, start, mid, cls)


def test_splitmix_reference_values():
    # published SplitMix64 outputs for seed 0
    g = SplitMix64(0)
    assert [g.next() for _ in range(3)] == [0xE220A8397B1DCDAF, 0x6E789E6AA1B965F4,
                                            0x06C45D188009454F]


def test_derive_seed_is_order_sensitive():
    assert derive_seed(1, 2, 3) != derive_seed(1, 3, 2)
    assert derive_seed(1, 2, 3) == derive_seed(1, 2, 3)


def test_sample_group_examples():
    assert sample_group({1, 2, 3}, 3, 99).member_ids == (1, 2, 3)
    assert sample_group({1, 2, 3}, 2, 42) == sample_group([3, 1, 2], 2, 42)
    with pytest.raises(LevelExceedsCorpus):
        sample_group({1, 2, 3}, 4, 0)


@given(st.sets(st.integers(1, 10_000), min_size=1, max_size=40), st.integers(0, 2**63), st.data())
def test_sample_group_distinct_members(ids, seed, data):
    k = data.draw(st.integers(1, len(ids)))
    g = sample_group(ids, k, seed)
    assert len(set(g.member_ids)) == k and set(g.member_ids) <= ids


def test_sample_group_roughly_uniform():
    counts = np.zeros(10)
    for s in range(4000):
        for i in sample_group(range(10), 3, derive_seed(5, s)).member_ids:
            counts[i] += 1
    assert np.all(np.abs(counts / 4000 - 0.3) < 0.03)


def test_aggregate_examples():
    a = aggregate([_m([1, 2], 1), _m([3, 4], 2)])
    np.testing.assert_array_equal(a.values, [4, 6])
    np.testing.assert_array_equal(aggregate([_m([1.5, 2.5])]).values, [1.5, 2.5])
    flat = aggregate([_m(np.ones(48), i) for i in range(100)])
    np.testing.assert_array_equal(flat.values, np.full(48, 100.0))


def test_aggregate_errors():
    with pytest.raises(MisalignedMembers):
        aggregate([_m([1, 2]), _m([1, 2], 2, start=SlotIndex(0, 2))])
    with pytest.raises(MisalignedMembers):
        aggregate([_m([1, 2]), _m([1, 2, 3], 2)])
    with pytest.raises(MixedClass):
        aggregate([_m([1, 2]), _m([1, 2], 2, LoadClass.SME)])


def test_aggregate_linearity():
    rng = np.random.default_rng(3)
    ms = [_m(rng.random(20), i) for i in range(6)]
    np.testing.assert_allclose(aggregate(ms).values,
                               aggregate(ms[:2]).values + aggregate(ms[2:]).values, rtol=1e-14)


def test_level_schedule_examples():
    r = level_schedule(LoadClass.RESIDENTIAL, 1700)
    assert {5, 20, 100} <= set(r) and r[-1] == 1700
    s = level_schedule(LoadClass.SME, 250)
    assert {5, 20, 100} <= set(s) and s[-1] == 250
    assert level_schedule(LoadClass.RESIDENTIAL, 50) == [1, 5, 20, 50]
    assert level_schedule(LoadClass.RESIDENTIAL, 10, [3, 1, 3]) == [1, 3]


def test_build_aggregates_deterministic():
    rng = np.random.default_rng(4)
    corpus = {i: _m(rng.random(10), i) for i in range(1, 21)}
    a = build_aggregates(corpus, LoadClass.RESIDENTIAL, [1, 5], 3, 7)
    b = build_aggregates(corpus, LoadClass.RESIDENTIAL, [1, 5], 3, 7)
    assert [x.group for x in a] == [x.group for x in b]
    assert all(np.array_equal(x.values, y.values) for x, y in zip(a, b))


def test_smoothing_of_differenced_aggregate():
    # i.i.d.-perturbed meters around one shape: var(diff(agg)) / k^2 shrinks with k
    rng = np.random.default_rng(11)
    shape = 1 + np.sin(np.linspace(0, 12 * np.pi, 480))
    corpus = {i: _m(shape + rng.gamma(1.0, 0.5, 480), i) for i in range(1, 201)}
    prev = np.inf
    for k in (1, 5, 20, 100, 200):
        vals = [np.var(np.diff(a.values)) / k**2
                for a in build_aggregates(corpus, LoadClass.RESIDENTIAL, [k], 5, 123)]
        cur = float(np.mean(vals))
        assert cur <= 1.5 * prev
        prev = cur
