"""Sampled meter groups summed pointwise into aggregate load series."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .core import SLOTS_PER_DAY, LoadAggError, LoadClass, MeterSeries, SlotIndex

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15

RESIDENTIAL_LEVELS = (1, 5, 20, 100, 200, 400, 800, 1200, 1700)
SME_LEVELS = (1, 5, 20, 50, 100, 250)


class LevelExceedsCorpus(LoadAggError):
    pass


class MisalignedMembers(LoadAggError):
    pass


class MixedClass(LoadAggError):
    pass


def _mix(z: int) -> int:
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


class SplitMix64:
    """SplitMix64 (Steele, Lea & Flood).  Pinned so samples never drift
    across numpy versions or platforms."""

    def __init__(self, seed: int):
        self.state = int(seed) & _MASK

    def next(self) -> int:
        self.state = (self.state + _GOLDEN) & _MASK
        return _mix(self.state)

    def below(self, n: int) -> int:
        """Uniform integer in [0, n) by rejection."""
        if n <= 0:
            raise ValueError("n must be positive")
        limit = (1 << 64) - ((1 << 64) % n)
        while True:
            r = self.next()
            if r < limit:
                return r % n


def derive_seed(root: int, *parts: int) -> int:
    """Child seed for a tuple of integer keys; order-sensitive."""
    s = _mix((int(root) + _GOLDEN) & _MASK)
    for p in parts:
        s = _mix(((s ^ (int(p) & _MASK)) + _GOLDEN) & _MASK)
    return s


@dataclass(frozen=True)
class GroupSample:
    level: int
    member_ids: tuple
    seed: int
    index: int = 0


@dataclass(frozen=True, eq=False)
class AggregateSeries:
    group: GroupSample
    load_class: LoadClass
    start: SlotIndex
    values: np.ndarray

    @property
    def level(self) -> int:
        return self.group.level

    def __len__(self) -> int:
        return self.values.shape[0]


def sample_group(corpus: Iterable[int], k: int, seed: int, index: int = 0) -> GroupSample:
    """Draw ``k`` distinct ids by a seeded partial Fisher-Yates shuffle of
    the ascending id list."""
    ids = sorted(set(int(i) for i in corpus))
    n = len(ids)
    if k < 1:
        raise ValueError("aggregation level must be >= 1")
    if k > n:
        raise LevelExceedsCorpus(f"level {k} exceeds corpus of {n} meters")
    rng = SplitMix64(seed)
    for i in range(k):
        j = i + rng.below(n - i)
        ids[i], ids[j] = ids[j], ids[i]
    return GroupSample(k, tuple(sorted(ids[:k])), int(seed), index)


def aggregate(members: Sequence[MeterSeries], group: GroupSample | None = None) -> AggregateSeries:
    if not members:
        raise ValueError("need at least one member")
    first = members[0]
    for s in members[1:]:
        if s.start != first.start or len(s) != len(first):
            raise MisalignedMembers(f"meter {s.meter_id} is not aligned with {first.meter_id}")
        if s.load_class != first.load_class:
            raise MixedClass(f"meter {s.meter_id} is {s.load_class.value}, "
                             f"expected {first.load_class.value}")
    total = np.zeros(len(first))
    for s in members:
        total += s.values
    total.setflags(write=False)
    if group is None:
        group = GroupSample(len(members), tuple(sorted(s.meter_id for s in members)), 0)
    return AggregateSeries(group, first.load_class, first.start, total)


def level_schedule(load_class: LoadClass, corpus_size: int,
                   levels: Sequence[int] | None = None) -> list[int]:
    """Strictly increasing levels capped at the corpus size."""
    if corpus_size < 1:
        raise ValueError("corpus_size must be >= 1")
    if levels is None:
        levels = SME_LEVELS if load_class is LoadClass.SME else RESIDENTIAL_LEVELS
    return sorted({min(int(k), corpus_size) for k in levels if int(k) >= 1})


def class_members(corpus: Mapping[int, MeterSeries], load_class: LoadClass) -> dict:
    return {mid: s for mid, s in corpus.items() if s.load_class is load_class}


def build_aggregates(corpus: Mapping[int, MeterSeries], load_class: LoadClass,
                     levels: Sequence[int], s_groups: int, root_seed: int) -> list[AggregateSeries]:
    """``s_groups`` independent groups per level, seeded per (class, level, group)."""
    members = class_members(corpus, load_class)
    out = []
    for k in levels:
        for g in range(s_groups):
            seed = derive_seed(root_seed, load_class.code, k, g)
            grp = sample_group(members, k, seed, g)
            out.append(aggregate([members[i] for i in grp.member_ids], grp))
    return out


def write_aggregates(path, aggregates: Iterable[AggregateSeries]) -> Path:
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("level,group,slot_day,slot,kwh\n")
        for a in aggregates:
            ords = a.start.ordinal + np.arange(len(a))
            days, slots = np.divmod(ords, SLOTS_PER_DAY)
            lv, gi = a.group.level, a.group.index
            fh.writelines(f"{lv},{gi},{d},{k + 1},{v!r}\n"
                          for d, k, v in zip(days.tolist(), slots.tolist(), a.values.tolist()))
    return path
