import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from loadagg.aggregation import GroupSample, aggregate
from loadagg.core import LoadClass, SeriesTooShort, SlotIndex, validate_series
from loadagg.predictability import (ApEnParams, InvalidParams, apen, difference,
                                    predictability_curve, summarize, undifference, write_curve)
from oracles import apen_bruteforce


def test_constant_series_is_zero():
    assert apen([5.0] * 50) == 0.0


def test_alternating_matches_oracle():
    x = [0.0, 1.0] * 50
    assert abs(apen(x) - apen_bruteforce(x)) <= 1e-12


def test_noise_more_complex_than_sine():
    rng = np.random.default_rng(0)
    noise = rng.random(500)
    sine = np.sin(np.linspace(0, 20 * np.pi, 500))
    assert apen(noise) > apen(sine)
    assert apen_bruteforce(noise[:200]) > apen_bruteforce(sine[:200])


def test_pinned_value():
    x = np.sin(np.arange(200) * 0.3) + 0.1 * np.cos(np.arange(200) * 1.7)
    assert apen(x) == pytest.approx(apen_bruteforce(x), abs=1e-12)
    assert apen(x, ApEnParams(1, 0.3)) == pytest.approx(apen_bruteforce(x, 1, 0.3), abs=1e-12)


def test_errors():
    with pytest.raises(SeriesTooShort):
        apen([1.0, 2.0, 3.0], ApEnParams(2))
    with pytest.raises(InvalidParams):
        ApEnParams(0)
    with pytest.raises(InvalidParams):
        ApEnParams(2, 0.0)
    with pytest.raises(InvalidParams):
        apen([1.0, np.nan, 2.0, 3.0, 4.0])


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-100, 100), min_size=4, max_size=40), st.integers(1, 2),
       st.floats(0.05, 1.0))
def test_matches_oracle_property(xs, m, r_rel):
    if len(xs) <= m + 1:
        return
    assert abs(apen(xs, ApEnParams(m, r_rel)) - apen_bruteforce(xs, m, r_rel)) <= 1e-10


def test_difference_examples():
    np.testing.assert_array_equal(difference([1, 3, 6]), [2, 3])
    np.testing.assert_array_equal(difference([4.0] * 5), np.zeros(4))
    np.testing.assert_array_equal(undifference(1, difference([1, 3, 6])), [1, 3, 6])
    np.testing.assert_array_equal(undifference(1, [2, 3]), [1, 3, 6])
    np.testing.assert_array_equal(undifference(0, []), [0])
    np.testing.assert_array_equal(undifference(2.5, np.zeros(3)), [2.5] * 4)
    with pytest.raises(SeriesTooShort):
        difference([1.0])


@given(st.lists(st.floats(-1e3, 1e3), min_size=2, max_size=100))
def test_difference_round_trip(xs):
    x = np.array(xs)
    np.testing.assert_allclose(undifference(x[0], difference(x)), x, atol=1e-12 * 1e4)


def _agg(values, level=1, index=0, cls=LoadClass.RESIDENTIAL):
    s = validate_series(values, SlotIndex(0, 1), 1, cls)
    return aggregate([s], GroupSample(level, (1,), 0, index))


def test_curve_single_record(tmp_path):
    rng = np.random.default_rng(2)
    recs = predictability_curve([_agg(rng.random(100))])
    assert len(recs) == 1
    write_curve(tmp_path / "c.csv", recs)
    lines = (tmp_path / "c.csv").read_text().splitlines()
    assert lines[0] == "class,level,group,apen_raw,apen_diff,m,r_rel,n" and len(lines) == 2


def test_curve_window_and_skip():
    rng = np.random.default_rng(2)
    recs = predictability_curve([_agg(rng.random(100)), _agg([1.0, 2.0, 3.0], 5)], window=60)
    assert len(recs) == 1 and recs[0].n == 60


def test_summarize_orders_levels_numerically():
    rng = np.random.default_rng(2)
    recs = predictability_curve([_agg(rng.random(50), lv) for lv in (120, 5, 20)])
    assert [k[1] for k in summarize(recs)] == [5, 20, 120]
