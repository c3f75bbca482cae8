import numpy as np
import pytest
from hypothesis import given, strategies as st

from loadagg.core import (EmptySeries, HorizonSpec, LoadClass, NegativeReading, NonFiniteReading,
                          SlotIndex, Underflow, slot_add, validate_series, weekday_mask)

S0 = SlotIndex(0, 1)


def test_validate_series_examples():
    assert len(validate_series([0.1, 0.2], S0)) == 2
    with pytest.raises(EmptySeries):
        validate_series([], S0)
    with pytest.raises(NegativeReading) as exc:
        validate_series([0.1, -0.5], S0)
    assert exc.value.position == 1
    with pytest.raises(NonFiniteReading):
        validate_series([0.1, float("nan")], S0)


def test_series_values_are_read_only():
    s = validate_series([1.0, 2.0], S0)
    with pytest.raises(ValueError):
        s.values[0] = 5.0


@given(st.lists(st.one_of(st.floats(allow_nan=True, allow_infinity=True),
                          st.floats(-1e6, 1e6)), max_size=30))
def test_validate_series_never_admits_bad_values(values):
    try:
        s = validate_series(values, S0)
    except (EmptySeries, NegativeReading, NonFiniteReading):
        return
    assert np.all(np.isfinite(s.values)) and np.all(s.values >= 0)


def test_slot_add_examples():
    assert slot_add(SlotIndex(0, 48), 1) == SlotIndex(1, 1)
    assert slot_add(SlotIndex(3, 10), 0) == SlotIndex(3, 10)
    assert slot_add(SlotIndex(1, 1), -1) == SlotIndex(0, 48)
    with pytest.raises(Underflow):
        slot_add(S0, -1)


@given(st.integers(0, 500), st.integers(1, 48), st.integers(-2000, 2000), st.integers(-2000, 2000))
def test_slot_add_associative_and_invertible(day, slot, a, b):
    s = SlotIndex(day, slot)
    try:
        ab = slot_add(slot_add(s, a), b)
    except Underflow:
        return
    assert ab == slot_add(s, a + b)
    assert slot_add(slot_add(s, a), -a) == s


def _days(n, wd):
    return weekday_mask(validate_series(np.ones(48 * n), S0), wd).reshape(n, 48)


def test_weekday_mask_monday_epoch():
    m = _days(8, 0)
    assert m[:5].all() and not m[5:7].any() and m[7].all()


def test_weekday_mask_saturday_epoch():
    m = _days(3, 5)
    assert not m[0].any() and not m[1].any() and m[2].all()


def test_weekday_mask_weekend_only():
    assert not _days(2, 5).any()


@pytest.mark.parametrize("wd", range(7))
def test_weekday_mask_weekly_period(wd):
    m = _days(21, wd)
    np.testing.assert_array_equal(m[:14], m[7:])


def test_enums():
    assert HorizonSpec.ONE_HOUR.steps == 2 and HorizonSpec.ONE_DAY.steps == 48
    assert HorizonSpec.parse("1d") is HorizonSpec.ONE_DAY
    assert LoadClass.from_code(1) is LoadClass.RESIDENTIAL
    assert LoadClass.from_code(2) is LoadClass.SME
    assert LoadClass.from_code(7) is LoadClass.OTHER
