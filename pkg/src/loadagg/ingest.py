"""CER-style reading files: parse, assemble per meter, clean, classify.

Reading files hold one reading per line, ``meter_id code kwh``, where
``code`` packs the day number (``code // 100``) and the half-hour slot
(``code % 100``, 1..48).  Class files are CSV ``meter_id,code``.
"""
from __future__ import annotations

import csv
import glob
import hashlib
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Mapping

import numpy as np

from .core import (SLOTS_PER_DAY, LoadAggError, LoadClass, MeterSeries, SlotIndex,
                   validate_series)

log = logging.getLogger(__name__)


class MalformedLine(LoadAggError):
    pass


class SlotOutOfRange(LoadAggError):
    pass


class NonNumericField(LoadAggError):
    pass


class MissingClassRecord(LoadAggError):
    def __init__(self, meter_id: int):
        super().__init__(f"no class record for meter {meter_id}")
        self.meter_id = meter_id


@dataclass(frozen=True)
class RawReading:
    meter_id: int
    day: int
    slot: int
    kwh: float

    @property
    def code(self) -> int:
        return self.day * 100 + self.slot


def parse_reading_line(line: str) -> RawReading:
    fields = line.split()
    if len(fields) != 3:
        raise MalformedLine(f"expected 3 fields, got {len(fields)}: {line!r}")
    mid, code, kwh = fields
    if not (mid.isdigit() and code.isdigit()):
        raise NonNumericField(f"non-integer meter id or code: {line!r}")
    try:
        value = float(kwh)
    except ValueError:
        raise NonNumericField(f"non-numeric kWh: {line!r}") from None
    if not math.isfinite(value):
        raise NonNumericField(f"non-finite kWh: {line!r}")
    meter_id = int(mid)
    if meter_id <= 0:
        raise MalformedLine(f"meter id must be positive: {line!r}")
    day, slot = divmod(int(code), 100)
    if not 1 <= slot <= SLOTS_PER_DAY:
        raise SlotOutOfRange(f"slot {slot} outside 1..48: {line!r}")
    return RawReading(meter_id, day, slot, value)


def format_reading(r: RawReading) -> str:
    return f"{r.meter_id} {r.code:05d} {r.kwh!r}"


def expand_inputs(pattern) -> list[Path]:
    """Resolve a file, a directory (all ``*.txt`` inside) or a glob."""
    if isinstance(pattern, (list, tuple)):
        out: list[Path] = []
        for p in pattern:
            out.extend(expand_inputs(p))
        return out
    p = Path(pattern)
    if p.is_dir():
        return sorted(p.glob("*.txt"))
    if p.exists():
        return [p]
    return sorted(Path(x) for x in glob.glob(str(pattern)))


@dataclass
class ParseStats:
    lines: int = 0
    skipped: int = 0
    errors: dict = field(default_factory=dict)


def read_readings(paths: Iterable, strict: bool = True,
                  stats: ParseStats | None = None) -> Iterator[RawReading]:
    """Stream readings from files in order; blank lines are ignored.

    With ``strict=False`` bad lines are counted in ``stats`` and skipped.
    """
    for path in paths:
        with open(path, "r", encoding="utf-8") as fh:
            for line in fh:
                if not line.strip():
                    continue
                if stats is not None:
                    stats.lines += 1
                try:
                    yield parse_reading_line(line)
                except (MalformedLine, NonNumericField, SlotOutOfRange) as exc:
                    if strict:
                        raise
                    if stats is not None:
                        stats.skipped += 1
                        key = type(exc).__name__
                        stats.errors[key] = stats.errors.get(key, 0) + 1


@dataclass(eq=False)
class GappedSeries:
    """Assembled readings over a window; missing slots are NaN."""

    meter_id: int
    start: SlotIndex
    values: np.ndarray

    @property
    def gaps(self) -> int:
        return int(np.isnan(self.values).sum())


@dataclass
class Assembly:
    meters: dict
    window: tuple
    readings: int = 0
    duplicates: int = 0
    out_of_window: int = 0


def assemble_meters(readings: Iterable[RawReading], window: tuple | None = None) -> Assembly:
    """Group readings into per-meter arrays over the half-open day window.

    Later readings for the same (meter, day, slot) overwrite earlier ones.
    With ``window=None`` the span of the readings is used.
    """
    if window is not None and window[1] <= window[0]:
        raise ValueError("window must be a non-empty half-open day range")
    ids, ords, vals = [], [], []
    for r in readings:
        ids.append(r.meter_id)
        ords.append(r.day * SLOTS_PER_DAY + r.slot - 1)
        vals.append(r.kwh)
    ids_a = np.asarray(ids, dtype=np.int64)
    ords_a = np.asarray(ords, dtype=np.int64)
    vals_a = np.asarray(vals, dtype=np.float64)
    if window is None:
        if ids_a.size == 0:
            raise ValueError("cannot infer a window from zero readings")
        window = (int(ords_a.min() // SLOTS_PER_DAY), int(ords_a.max() // SLOTS_PER_DAY) + 1)
    lo, hi = window[0] * SLOTS_PER_DAY, window[1] * SLOTS_PER_DAY
    keep = (ords_a >= lo) & (ords_a < hi)
    out = Assembly({}, tuple(window), readings=int(ids_a.size), out_of_window=int((~keep).sum()))
    ids_a, ords_a, vals_a = ids_a[keep], ords_a[keep], vals_a[keep]
    start = SlotIndex(window[0], 1)
    length = hi - lo
    # stable sort keeps file order within a meter, so fancy assignment is last-wins
    order = np.argsort(ids_a, kind="stable")
    ids_a, ords_a, vals_a = ids_a[order], ords_a[order], vals_a[order]
    bounds = np.flatnonzero(np.diff(ids_a)) + 1
    for seg_ids, seg_ord, seg_val in zip(np.split(ids_a, bounds), np.split(ords_a, bounds),
                                         np.split(vals_a, bounds)):
        if seg_ids.size == 0:
            continue
        arr = np.full(length, np.nan)
        arr[seg_ord - lo] = seg_val
        unique = np.unique(seg_ord).size
        out.duplicates += int(seg_ord.size - unique)
        mid = int(seg_ids[0])
        out.meters[mid] = GappedSeries(mid, start, arr)
    return out


@dataclass
class CleaningReport:
    meters_in: int = 0
    meters_kept: int = 0
    dropped_incomplete: int = 0
    dropped_abnormal: int = 0
    reasons: dict = field(default_factory=dict)

    def to_json(self) -> str:
        doc = {
            "meters_in": self.meters_in,
            "meters_kept": self.meters_kept,
            "dropped_incomplete": self.dropped_incomplete,
            "dropped_abnormal": self.dropped_abnormal,
            "reasons": {str(k): v for k, v in sorted(self.reasons.items())},
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "CleaningReport":
        doc = json.loads(text)
        doc["reasons"] = {int(k): v for k, v in doc["reasons"].items()}
        return cls(**doc)


def longest_zero_day_run(values: np.ndarray, start_slot: int = 1) -> int:
    """Longest run of consecutive whole days whose readings are all zero."""
    offset = (SLOTS_PER_DAY - (start_slot - 1)) % SLOTS_PER_DAY
    body = values[offset:]
    n_days = body.size // SLOTS_PER_DAY
    if n_days == 0:
        return 0
    zero_days = (body[: n_days * SLOTS_PER_DAY].reshape(n_days, SLOTS_PER_DAY) == 0).all(axis=1)
    best = cur = 0
    for z in zero_days:
        cur = cur + 1 if z else 0
        best = max(best, cur)
    return best


def clean(meters: Mapping, window: tuple | None = None, zero_day_limit: int = 30,
          classes: Mapping | None = None):
    """Drop incomplete and abnormal meters.

    ``meters`` maps ids to :class:`GappedSeries` or :class:`MeterSeries`.
    A meter is incomplete if any slot in the window is missing, abnormal
    if it has a negative reading or more than ``zero_day_limit``
    consecutive all-zero days.  Returns ``(kept, report)``.
    """
    report = CleaningReport(meters_in=len(meters))
    kept = {}
    for mid in sorted(meters):
        s = meters[mid]
        values = np.asarray(s.values, dtype=np.float64)
        start = s.start
        if window is not None:
            lo = window[0] * SLOTS_PER_DAY - start.ordinal
            hi = window[1] * SLOTS_PER_DAY - start.ordinal
            if lo < 0 or hi > values.size:
                report.dropped_incomplete += 1
                report.reasons[mid] = "incomplete: window not covered"
                continue
            values = values[lo:hi]
            start = SlotIndex(window[0], 1)
        n_missing = int(np.isnan(values).sum())
        if n_missing:
            report.dropped_incomplete += 1
            report.reasons[mid] = f"incomplete: {n_missing} missing slots"
            continue
        if not np.isfinite(values).all():
            report.dropped_abnormal += 1
            report.reasons[mid] = "abnormal: non-finite reading"
            continue
        n_neg = int((values < 0).sum())
        if n_neg:
            report.dropped_abnormal += 1
            report.reasons[mid] = f"abnormal: {n_neg} negative readings"
            continue
        run = longest_zero_day_run(values, start.slot)
        if run > zero_day_limit:
            report.dropped_abnormal += 1
            report.reasons[mid] = f"abnormal: {run} consecutive zero days"
            continue
        cls = getattr(s, "load_class", LoadClass.OTHER)
        if classes is not None and mid in classes:
            cls = classes[mid]
        kept[mid] = validate_series(values, start, mid, cls)
    report.meters_kept = len(kept)
    return kept, report


def read_class_file(path) -> dict:
    """Read ``meter_id,code`` rows; a non-numeric first row is a header."""
    codes = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for i, row in enumerate(csv.reader(fh)):
            if not row or not "".join(row).strip():
                continue
            if i == 0 and not row[0].strip().isdigit():
                continue
            if len(row) < 2:
                raise MalformedLine(f"class file row {i + 1}: {row!r}")
            try:
                codes[int(row[0])] = int(row[1])
            except ValueError:
                raise NonNumericField(f"class file row {i + 1}: {row!r}") from None
    return codes


def classify(class_file: Mapping, kept: Iterable[int]) -> dict:
    out = {}
    for mid in sorted(kept):
        if mid not in class_file:
            raise MissingClassRecord(mid)
        out[mid] = LoadClass.from_code(class_file[mid])
    return out


def apply_classes(series: Mapping, class_map: Mapping) -> dict:
    return {mid: MeterSeries(mid, class_map[mid], s.start, s.values) for mid, s in series.items()}


def cleaned_filename(cls: LoadClass) -> str:
    return f"cleaned_{cls.value}.csv"


def write_cleaned_corpus(out_dir, series: Mapping) -> list[Path]:
    """One CSV per class present, rows sorted by (meter_id, day, slot)."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    by_class: dict = {}
    for mid in sorted(series):
        by_class.setdefault(series[mid].load_class, []).append(series[mid])
    written = []
    for cls in LoadClass:
        if cls not in by_class:
            continue
        path = out_dir / cleaned_filename(cls)
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write("meter_id,day,slot,kwh\n")
            for s in by_class[cls]:
                ords = s.ordinals
                days, slots = np.divmod(ords, SLOTS_PER_DAY)
                fh.writelines(f"{s.meter_id},{d},{k + 1},{v!r}\n"
                              for d, k, v in zip(days.tolist(), slots.tolist(), s.values.tolist()))
        written.append(path)
    return written


def read_cleaned_corpus(in_dir) -> dict:
    in_dir = Path(in_dir)
    out = {}
    for cls in LoadClass:
        path = in_dir / cleaned_filename(cls)
        if not path.exists():
            continue
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=1,
                          dtype=[("m", np.int64), ("d", np.int64), ("s", np.int64), ("v", np.float64)])
        if data.size == 0:
            continue
        ids = data["m"]
        bounds = np.flatnonzero(np.diff(ids)) + 1
        for seg in np.split(np.arange(ids.size), bounds):
            mid = int(ids[seg[0]])
            ords = data["d"][seg] * SLOTS_PER_DAY + data["s"][seg] - 1
            if np.any(np.diff(ords) != 1):
                raise MalformedLine(f"{path.name}: meter {mid} rows are not contiguous")
            out[mid] = validate_series(data["v"][seg], SlotIndex.from_ordinal(int(ords[0])), mid, cls)
    return out


def write_readings(path, series: Iterable[MeterSeries]) -> Path:
    """Serialize complete series back to the reading-file format."""
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        for s in series:
            days, slots = np.divmod(s.ordinals, SLOTS_PER_DAY)
            fh.writelines(f"{s.meter_id} {d * 100 + k + 1:05d} {v!r}\n"
                          for d, k, v in zip(days.tolist(), slots.tolist(), s.values.tolist()))
    return path


def write_class_file(path, classes: Mapping) -> Path:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("meter_id,code\n")
        for mid in sorted(classes):
            fh.write(f"{mid},{classes[mid].code}\n")
    return Path(path)


def load_corpus(path, window: tuple | None = None, zero_day_limit: int = 30) -> dict:
    """Load a cleaned corpus directory, or ingest+clean raw CER files on the fly."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(str(path))
    if path.is_dir() and any((path / cleaned_filename(c)).exists() for c in LoadClass):
        corpus = read_cleaned_corpus(path)
        if window is not None:
            corpus, _ = clean(corpus, window, zero_day_limit)
        return corpus
    class_path = path / "classes.csv" if path.is_dir() else None
    files = expand_inputs(path)
    if not files:
        raise FileNotFoundError(f"no reading files under {path}")
    asm = assemble_meters(read_readings(files), window)
    kept, _ = clean(asm.meters, asm.window, zero_day_limit)
    if class_path is not None and class_path.exists():
        kept = apply_classes(kept, classify(read_class_file(class_path), kept))
    return kept


def file_sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()

