import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from loadagg.core import LoadClass, SlotIndex, validate_series
from loadagg.ingest import (MissingClassRecord, NonNumericField, RawReading, SlotOutOfRange,
                            assemble_meters, classify, clean, format_reading, parse_reading_line,
                            read_cleaned_corpus, read_readings, write_cleaned_corpus,
                            write_readings)


def _readings(mid, days, skip=(), value=0.5):
    return [RawReading(mid, d, s, value) for d in days for s in range(1, 49) if (d, s) not in skip]


def test_parse_examples():
    assert parse_reading_line("1392 19503 0.14") == RawReading(1392, 195, 3, 0.14)
    with pytest.raises(SlotOutOfRange):
        parse_reading_line("1392 19500 0.14")
    with pytest.raises(SlotOutOfRange):
        parse_reading_line("1392 19549 0.14")
    with pytest.raises(NonNumericField):
        parse_reading_line("1392 195x3 0.14")


def test_format_parse_round_trip():
    r = RawReading(7, 3, 48, 0.1 + 0.2)
    assert parse_reading_line(format_reading(r)) == r


def test_assemble_complete_meter():
    asm = assemble_meters(_readings(1, [0, 1]), (0, 2))
    s = asm.meters[1]
    assert len(s.values) == 96 and s.gaps == 0


def test_assemble_marks_gap():
    asm = assemble_meters(_readings(1, [0, 1], skip={(0, 7)}), (0, 2))
    assert asm.meters[1].gaps == 1
    assert np.isnan(asm.meters[1].values[6])


def test_assemble_duplicate_last_wins():
    rs = _readings(1, [0]) + [RawReading(1, 0, 5, 0.1), RawReading(1, 0, 5, 0.3)]
    asm = assemble_meters(rs, (0, 1))
    assert asm.meters[1].values[4] == 0.3
    assert asm.duplicates == 2   # slot 5 seen three times


def test_assemble_discards_out_of_window():
    asm = assemble_meters(_readings(1, [0, 1, 2]), (1, 2))
    assert asm.out_of_window == 96
    assert asm.meters[1].start == SlotIndex(1, 1)


def test_clean_examples():
    rs = (_readings(1, [0, 1], skip={(1, 10)}) + _readings(2, [0, 1])
          + _readings(3, [0, 1]))
    rs[-1] = RawReading(3, 1, 48, -0.1)
    asm = assemble_meters(rs, (0, 2))
    kept, rep = clean(asm.meters, (0, 2))
    assert set(kept) == {2}
    assert rep.dropped_incomplete == 1 and rep.dropped_abnormal == 1
    assert rep.meters_kept + rep.dropped_incomplete + rep.dropped_abnormal == rep.meters_in


def test_clean_zero_day_limit():
    vals = np.ones(48 * 10)
    vals[48:48 * 5] = 0.0    # 4 whole zero days
    s = validate_series(vals, SlotIndex(0, 1), 1)
    assert clean({1: s}, zero_day_limit=4)[1].meters_kept == 1
    assert clean({1: s}, zero_day_limit=3)[1].dropped_abnormal == 1


@settings(max_examples=40, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 3), st.booleans(), st.booleans()), min_size=1, max_size=8))
def test_clean_report_reconciles_and_is_idempotent(spec):
    meters = {}
    for mid, (kind, gap, neg) in enumerate(spec, start=1):
        v = np.full(96, 0.2 + 0.1 * kind)
        if gap:
            v[3] = np.nan
        if neg:
            v[50] = -1.0
        from loadagg.ingest import GappedSeries
        meters[mid] = GappedSeries(mid, SlotIndex(0, 1), v)
    kept, rep = clean(meters, (0, 2))
    assert rep.meters_kept + rep.dropped_incomplete + rep.dropped_abnormal == rep.meters_in
    again, rep2 = clean(kept, (0, 2))
    assert rep2.meters_kept == len(kept) and set(again) == set(kept)


def test_classify_codes():
    cm = classify({1: 1, 2: 2, 3: 7}, [1, 2, 3])
    assert cm == {1: LoadClass.RESIDENTIAL, 2: LoadClass.SME, 3: LoadClass.OTHER}
    with pytest.raises(MissingClassRecord):
        classify({1: 1}, [1, 2])


def test_readings_file_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    s = validate_series(rng.random(96 * 2), SlotIndex(4, 1), 11, LoadClass.RESIDENTIAL)
    write_readings(tmp_path / "r.txt", [s])
    asm = assemble_meters(read_readings([tmp_path / "r.txt"]))
    kept, _ = clean(asm.meters, asm.window)
    np.testing.assert_array_equal(kept[11].values, s.values)
    assert kept[11].start == s.start


def test_cleaned_csv_round_trip(tmp_path):
    rng = np.random.default_rng(1)
    series = {i: validate_series(rng.random(48), SlotIndex(2, 1), i,
                                 LoadClass.SME if i % 2 else LoadClass.RESIDENTIAL)
              for i in range(1, 6)}
    write_cleaned_corpus(tmp_path, series)
    assert read_cleaned_corpus(tmp_path) == series
    assert (tmp_path / "cleaned_sme.csv").read_text().splitlines()[0] == "meter_id,day,slot,kwh"


def test_single_meter_cleaned_csv(tmp_path):
    s = {5: validate_series([1.0], SlotIndex(0, 1), 5, LoadClass.RESIDENTIAL)}
    write_cleaned_corpus(tmp_path, s)
    assert read_cleaned_corpus(tmp_path) == s
