"""Shared domain types and 30-minute slot calendar arithmetic."""
from __future__ import annotations

import datetime as _dt
import enum
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

SLOTS_PER_DAY = 48
DEFAULT_EPOCH = _dt.date(2009, 1, 1)


class LoadAggError(Exception):
    """Base class for all package errors."""


class EmptySeries(LoadAggError):
    pass


class NegativeReading(LoadAggError):
    def __init__(self, position: int):
        super().__init__(f"negative reading at position {position}")
        self.position = position


class NonFiniteReading(LoadAggError):
    def __init__(self, position: int):
        super().__init__(f"non-finite reading at position {position}")
        self.position = position


class Underflow(LoadAggError):
    pass


class SeriesTooShort(LoadAggError):
    pass


@dataclass(frozen=True, order=True)
class SlotIndex:
    """A half-hour slot: ``day`` since the epoch, ``slot`` in 1..48.

    Slot 1 covers 00:00-00:30.  Ordering is by (day, slot).
    """

    day: int
    slot: int

    def __post_init__(self):
        if not 1 <= self.slot <= SLOTS_PER_DAY:
            raise ValueError(f"slot must be in 1..48, got {self.slot}")
        if self.day < 0:
            raise Underflow(f"day must be >= 0, got {self.day}")

    @property
    def ordinal(self) -> int:
        """Number of slots since (day 0, slot 1)."""
        return self.day * SLOTS_PER_DAY + self.slot - 1

    @classmethod
    def from_ordinal(cls, ordinal: int) -> "SlotIndex":
        if ordinal < 0:
            raise Underflow(f"slot ordinal {ordinal} precedes day 0 slot 1")
        day, rem = divmod(int(ordinal), SLOTS_PER_DAY)
        return cls(day, rem + 1)


def slot_add(s: SlotIndex, k: int) -> SlotIndex:
    """Advance ``s`` by ``k`` half-hours (``k`` may be negative)."""
    return SlotIndex.from_ordinal(s.ordinal + int(k))


class LoadClass(enum.Enum):
    RESIDENTIAL = "residential"
    SME = "sme"
    OTHER = "other"

    @classmethod
    def from_code(cls, code: int) -> "LoadClass":
        """CER customer-type code: 1 residential, 2 SME, anything else other."""
        if code == 1:
            return cls.RESIDENTIAL
        if code == 2:
            return cls.SME
        return cls.OTHER

    @property
    def code(self) -> int:
        return {LoadClass.RESIDENTIAL: 1, LoadClass.SME: 2, LoadClass.OTHER: 3}[self]


class HorizonSpec(enum.Enum):
    """Forecast lead; the value is the number of 30-minute steps."""

    ONE_HOUR = 2
    ONE_DAY = 48

    @property
    def steps(self) -> int:
        return self.value

    @property
    def label(self) -> str:
        return {HorizonSpec.ONE_HOUR: "1h", HorizonSpec.ONE_DAY: "1d"}[self]

    @classmethod
    def parse(cls, value) -> "HorizonSpec":
        if isinstance(value, HorizonSpec):
            return value
        if isinstance(value, str):
            key = value.strip().lower()
            aliases = {"1h": cls.ONE_HOUR, "one_hour": cls.ONE_HOUR, "onehour": cls.ONE_HOUR,
                       "1d": cls.ONE_DAY, "one_day": cls.ONE_DAY, "oneday": cls.ONE_DAY}
            if key in aliases:
                return aliases[key]
            value = int(key)
        return cls(int(value))


@dataclass(frozen=True, eq=False)
class MeterSeries:
    """One meter's contiguous half-hourly kWh readings.

    Build through :func:`validate_series`; the constructor itself trusts
    its input.  ``values`` is a read-only float64 array.
    """

    meter_id: int
    load_class: LoadClass
    start: SlotIndex
    values: np.ndarray

    def __len__(self) -> int:
        return self.values.shape[0]

    @property
    def end(self) -> SlotIndex:
        """Last slot covered (inclusive)."""
        return slot_add(self.start, len(self) - 1)

    @property
    def ordinals(self) -> np.ndarray:
        return self.start.ordinal + np.arange(len(self))

    def __eq__(self, other):
        if not isinstance(other, MeterSeries):
            return NotImplemented
        return (self.meter_id == other.meter_id and self.load_class == other.load_class
                and self.start == other.start and np.array_equal(self.values, other.values))

    def __hash__(self):
        return hash((self.meter_id, self.load_class, self.start, len(self)))


def validate_series(raw_values: Sequence[float], start: SlotIndex, meter_id: int = 0,
                    load_class: LoadClass = LoadClass.OTHER) -> MeterSeries:
    values = np.array(raw_values, dtype=np.float64).ravel()
    if values.size == 0:
        raise EmptySeries("series has no readings")
    bad = ~np.isfinite(values)
    if bad.any():
        raise NonFiniteReading(int(np.flatnonzero(bad)[0]))
    neg = values < 0
    if neg.any():
        raise NegativeReading(int(np.flatnonzero(neg)[0]))
    values.setflags(write=False)
    return MeterSeries(int(meter_id), load_class, start, values)


def epoch_weekday(epoch: _dt.date = DEFAULT_EPOCH) -> int:
    """Weekday of day 0 (Monday = 0)."""
    return epoch.weekday()


def day_weekday(day, epoch_wd: int):
    return (np.asarray(day) + epoch_wd) % 7


def weekday_mask(series: MeterSeries, epoch_weekday: int) -> np.ndarray:
    """True for every slot whose day falls Monday-Friday."""
    if not 0 <= epoch_weekday <= 6:
        raise ValueError("epoch_weekday must be in 0..6")
    days = series.ordinals // SLOTS_PER_DAY
    return day_weekday(days, epoch_weekday) < 5


def n_days_spanned(start: SlotIndex, length: int) -> int:
    return math.ceil((start.slot - 1 + length) / SLOTS_PER_DAY)
