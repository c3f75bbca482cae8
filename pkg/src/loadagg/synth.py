"""Synthetic smart-meter corpora.

Residential meters: a cycling base load (refrigeration), plus, while
someone is home, morning / evening / late peaks jittered day to day and
gamma-distributed appliance usage in every slot.  Home/away spells last
hours; vacancy runs last days and leave only the base load.
``spike_prob`` adds single-slot bursts and ``regime_levels`` multi-week
occupancy regimes scaling everything above the base, and
``level_drift`` a seasonal log-linear trend in daily level.  All three
are off by default; the ``SPIKY`` preset turns on spikes and drift.

SME meters: a working-hours plateau Monday to Friday on top of the base
load, bounded uniform noise, and near-base weekends.  A fraction of SMEs
(``sme_irregular_fraction``) also get residential-style random events.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .aggregation import derive_seed
from .core import SLOTS_PER_DAY, LoadClass, MeterSeries, SlotIndex, day_weekday, validate_series

RESIDENTIAL_ID0 = 1000
SME_ID0 = 5000

# peak centres as fractional slot numbers (slot 19 = 09:00-09:30)
_PEAKS = (19.5, 38.5, 46.5)


@dataclass(frozen=True)
class SynthSpec:
    n_residential: int = 120
    n_sme: int = 60
    n_days: int = 100
    root_seed: int = 20090101
    start_day: int = 200
    epoch_weekday: int = 3
    peak_jitter: float = 2.0
    peak_scale: float = 1.2
    vacancy_prob: float = 0.04
    weekend_factor: float = 1.2
    usage_shape: float = 4.0
    usage_scale: float = 0.4
    home_spell: float = 16.0
    away_spell: float = 10.0
    away_activity: float = 0.3
    base_cycling: float = 0.5
    spike_prob: float = 0.0
    spike_mean: float = 0.5
    regime_levels: tuple = ()
    regime_dwell_days: float = 15.0
    level_drift: float = 0.0
    sme_noise: float = 0.03
    sme_irregular_fraction: float = 0.1

    def __post_init__(self):
        if self.n_residential < 0 or self.n_sme < 0:
            raise ValueError("meter counts must be >= 0")
        if self.n_days < 1:
            raise ValueError("n_days must be >= 1")
        if not 0 <= self.vacancy_prob <= 1 or not 0 <= self.spike_prob <= 1:
            raise ValueError("probabilities must lie in [0, 1]")
        object.__setattr__(self, "regime_levels", tuple(float(v) for v in self.regime_levels))

    def replace(self, **kw) -> "SynthSpec":
        return dataclasses.replace(self, **kw)


# volatile meters: weak daily shape, single-slot bursts, consumption
# easing off by 0.5% a day (e.g. lengthening spring evenings)
SPIKY = dict(peak_scale=0.25, usage_scale=0.05, away_spell=0.0, base_cycling=0.2,
             spike_prob=0.3, spike_mean=0.5, level_drift=-0.005)


def _bump(slots: np.ndarray, centre: float, width: float) -> np.ndarray:
    return np.exp(-0.5 * ((slots - centre) / width) ** 2)


def _spells(rng, n: int, home_spell: float, away_spell: float) -> np.ndarray:
    home = np.ones(n, dtype=bool)
    if away_spell <= 0:
        return home
    switch = rng.random(n)
    state = True
    for t in range(n):
        if state and switch[t] < 1.0 / home_spell:
            state = False
        elif not state and switch[t] < 1.0 / away_spell:
            state = True
        home[t] = state
    return home


def residential_meter(spec: SynthSpec, index: int) -> np.ndarray:
    rng = np.random.default_rng(derive_seed(spec.root_seed, LoadClass.RESIDENTIAL.code, index))
    n_days = spec.n_days
    n = n_days * SLOTS_PER_DAY
    slots = np.arange(1, SLOTS_PER_DAY + 1, dtype=float)
    base = rng.uniform(0.05, 0.2)
    amps = spec.peak_scale * np.array([rng.uniform(0.6, 1.0), rng.uniform(0.9, 1.3),
                                       rng.uniform(0.3, 0.5)])
    offsets = rng.normal(0.0, 1.5, 3)
    widths = rng.uniform(1.0, 2.0, 3)
    weekday = day_weekday(spec.start_day + np.arange(n_days), spec.epoch_weekday)

    vacant = np.zeros(n_days, dtype=bool)
    d = 0
    while d < n_days:
        if rng.random() < spec.vacancy_prob:
            run = int(rng.geometric(0.5))
            vacant[d:d + run] = True
            d += run
        else:
            d += 1

    regime = np.ones(n_days)
    if spec.regime_levels:
        levels = np.asarray(spec.regime_levels)
        cur = rng.integers(levels.size)
        for d in range(n_days):
            if d and rng.random() < 1.0 / spec.regime_dwell_days:
                cur = rng.integers(levels.size)
            regime[d] = levels[cur]

    profile = np.zeros((n_days, SLOTS_PER_DAY))
    for d in range(n_days):
        weekend = weekday[d] >= 5
        for p in range(3):
            centre = _PEAKS[p] + offsets[p] + rng.normal(0.0, spec.peak_jitter)
            amp = amps[p] * rng.lognormal(0.0, 0.3)
            if weekend and p == 0:
                centre += 2.0
                amp *= spec.weekend_factor
            profile[d] += amp * _bump(slots, centre, widths[p])

    home = _spells(rng, n, spec.home_spell, spec.away_spell)
    presence = np.where(home, 1.0, spec.away_activity) * np.repeat(~vacant, SLOTS_PER_DAY)
    usage = profile.ravel() + rng.gamma(spec.usage_shape, spec.usage_scale / spec.usage_shape, n)
    if spec.spike_prob > 0:
        hits = rng.random(n) < spec.spike_prob
        usage += hits * rng.exponential(spec.spike_mean, n)
    usage *= presence * np.repeat(regime, SLOTS_PER_DAY)
    out = base * rng.lognormal(0.0, spec.base_cycling, n) + usage
    if spec.level_drift:
        out *= np.repeat(np.exp(spec.level_drift * np.arange(n_days)), SLOTS_PER_DAY)
    return out


def sme_meter(spec: SynthSpec, index: int) -> np.ndarray:
    rng = np.random.default_rng(derive_seed(spec.root_seed, LoadClass.SME.code, index))
    n_days = spec.n_days
    slots = np.arange(1, SLOTS_PER_DAY + 1)
    base = rng.uniform(0.2, 0.6)
    open_slot = int(rng.integers(15, 20))
    close_slot = int(rng.integers(34, 39))
    amp = rng.uniform(1.0, 4.0)
    irregular = rng.random() < spec.sme_irregular_fraction
    weekday = day_weekday(spec.start_day + np.arange(n_days), spec.epoch_weekday)
    working = ((slots >= open_slot) & (slots <= close_slot)).astype(float)
    out = np.empty((n_days, SLOTS_PER_DAY))
    for d in range(n_days):
        noise = rng.uniform(-spec.sme_noise, spec.sme_noise, SLOTS_PER_DAY)
        day = base + noise
        if weekday[d] < 5:
            day = day + amp * rng.uniform(0.95, 1.05) * working
            if irregular:
                for _ in range(rng.poisson(3.0)):
                    t0 = int(rng.integers(0, SLOTS_PER_DAY))
                    day[t0:t0 + int(rng.geometric(0.3))] += rng.exponential(0.5 * amp)
        out[d] = day
    return out.ravel()


@dataclass
class SynthCorpus:
    spec: SynthSpec
    meters: dict = field(default_factory=dict)

    @property
    def classes(self) -> dict:
        return {mid: s.load_class for mid, s in self.meters.items()}


def generate(spec: SynthSpec) -> SynthCorpus:
    start = SlotIndex(spec.start_day, 1)
    corpus = SynthCorpus(spec)
    for i in range(spec.n_residential):
        mid = RESIDENTIAL_ID0 + i
        corpus.meters[mid] = validate_series(residential_meter(spec, i), start, mid, LoadClass.RESIDENTIAL)
    for i in range(spec.n_sme):
        mid = SME_ID0 + i
        corpus.meters[mid] = validate_series(sme_meter(spec, i), start, mid, LoadClass.SME)
    return corpus


def write_corpus(corpus: SynthCorpus, out_dir) -> list[Path]:
    """CER-format ``readings.txt`` plus ``classes.csv``."""
    from .ingest import write_class_file, write_readings

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    ordered = [corpus.meters[m] for m in sorted(corpus.meters)]
    return [write_readings(out_dir / "readings.txt", ordered),
            write_class_file(out_dir / "classes.csv", corpus.classes)]


def spiky_meters(n: int = 20, n_days: int = 100, root_seed: int = 20090101) -> list[MeterSeries]:
    """The pinned volatile residential meters used for differencing studies."""
    spec = SynthSpec(n_residential=n, n_sme=0, n_days=n_days, root_seed=root_seed, **SPIKY)
    corpus = generate(spec)
    return [corpus.meters[m] for m in sorted(corpus.meters)]
