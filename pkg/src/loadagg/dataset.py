"""Lag-window supervised datasets, chronological splits and scaling.

Row i of a dataset is anchored at series position t: the features are the
raw lag window x(t), x(t-1), ..., x(t-N+1) and the target is x(t+M)
(``Raw``) or x(t+M) - x(t) (``HorizonDiff``).  In HorizonDiff mode the
model sees first differences of the window instead of levels; column 0
is kept as the anchor that turns a predicted change back into a level.
"""
from __future__ import annotations

import csv
import enum
import logging
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .core import SLOTS_PER_DAY, HorizonSpec, LoadAggError, SeriesTooShort, SlotIndex

log = logging.getLogger(__name__)


class TooFewSamples(LoadAggError):
    pass


class InvalidSplit(LoadAggError):
    pass


class DegenerateScale(UserWarning):
    """A training column has zero spread; it is only mean-shifted."""


class TargetMode(enum.Enum):
    RAW = "raw"
    HORIZON_DIFF = "diff"

    @classmethod
    def parse(cls, value) -> "TargetMode":
        if isinstance(value, TargetMode):
            return value
        key = str(value).strip().lower()
        if key in ("horizondiff", "horizon_diff", "diff"):
            return cls.HORIZON_DIFF
        if key == "raw":
            return cls.RAW
        raise ValueError(f"unknown target mode {value!r}")


@dataclass(frozen=True)
class LagSpec:
    n_lags: int = 480
    horizon: HorizonSpec | int = HorizonSpec.ONE_HOUR

    def __post_init__(self):
        if int(self.n_lags) < 1:
            raise ValueError("n_lags must be >= 1")
        if self.steps < 1:
            raise ValueError("horizon must be >= 1 step")

    @property
    def steps(self) -> int:
        h = self.horizon
        return h.steps if isinstance(h, HorizonSpec) else int(h)


@dataclass(frozen=True)
class Scaler:
    x_mean: np.ndarray
    x_sd: np.ndarray
    y_mean: float
    y_sd: float

    def apply_x(self, x):
        return (np.asarray(x, dtype=np.float64) - self.x_mean) / self.x_sd

    def apply_y(self, y):
        return (np.asarray(y, dtype=np.float64) - self.y_mean) / self.y_sd

    def invert_x(self, z):
        return np.asarray(z) * self.x_sd + self.x_mean

    def invert_y(self, z):
        return np.asarray(z) * self.y_sd + self.y_mean


def _safe_sd(sd: np.ndarray, what: str) -> np.ndarray:
    sd = np.array(sd, dtype=np.float64, ndmin=1)
    flat = ~(sd > 0)
    if flat.any():
        warnings.warn(f"{int(flat.sum())} constant {what} column(s); shifting only",
                      DegenerateScale, stacklevel=3)
        sd[flat] = 1.0
    return sd


def fit_scaler(x, y) -> Scaler:
    """Per-column mean/SD of training regressors ``x`` and targets ``y``."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape[0] == 0:
        raise TooFewSamples("cannot fit a scaler on zero samples")
    x_sd = _safe_sd(x.std(axis=0), "feature")
    y_sd = _safe_sd(y.std(), "target")[0]
    return Scaler(x.mean(axis=0), x_sd, float(y.mean()), float(y_sd))


@dataclass(frozen=True, eq=False)
class SupervisedDataset:
    features: np.ndarray         # (n, n_lags), column j = x(t - j)
    targets: np.ndarray          # x(t+M) or x(t+M) - x(t)
    sample_times: np.ndarray     # slot ordinal of the anchor t
    horizon: int
    target_mode: TargetMode = TargetMode.RAW
    span: tuple = (0, 0)         # (first ordinal, length) of the source series
    scaler: Scaler | None = field(default=None)

    def __len__(self) -> int:
        return self.targets.shape[0]

    @property
    def n_lags(self) -> int:
        return self.features.shape[1]

    @property
    def anchor(self) -> np.ndarray:
        return self.features[:, 0]

    @property
    def regressors(self) -> np.ndarray:
        return regressors_of(self.features, self.target_mode)

    @property
    def target_times(self) -> np.ndarray:
        return self.sample_times + self.horizon

    @property
    def level_targets(self) -> np.ndarray:
        """x(t+M) regardless of mode."""
        return reconstruct(self.targets, self.features, self.target_mode)

    def slot(self, i: int) -> SlotIndex:
        return SlotIndex.from_ordinal(int(self.sample_times[i]))

    def subset(self, idx) -> "SupervisedDataset":
        if not isinstance(idx, slice):
            idx = np.asarray(idx, dtype=np.intp)
        return SupervisedDataset(self.features[idx], self.targets[idx], self.sample_times[idx],
                                 self.horizon, self.target_mode, self.span, self.scaler)


def regressors_of(features, mode: TargetMode) -> np.ndarray:
    f = np.asarray(features, dtype=np.float64)
    if mode is TargetMode.RAW:
        return f
    if f.shape[1] < 2:
        raise ValueError("HorizonDiff needs at least 2 lags")
    return f[:, :-1] - f[:, 1:]


def reconstruct(pred, features, mode: TargetMode) -> np.ndarray:
    pred = np.asarray(pred, dtype=np.float64)
    if mode is TargetMode.RAW:
        return pred
    return pred + np.asarray(features)[:, 0]


def _values_and_start(series):
    if hasattr(series, "values") and hasattr(series, "start"):
        return np.asarray(series.values, dtype=np.float64), series.start.ordinal
    return np.asarray(series, dtype=np.float64).ravel(), 0


def make_lag_dataset(series, spec: LagSpec, target_mode=TargetMode.RAW) -> SupervisedDataset:
    mode = TargetMode.parse(target_mode)
    x, origin = _values_and_start(series)
    n, m = int(spec.n_lags), spec.steps
    count = x.shape[0] - n - m + 1
    if count < 1:
        raise SeriesTooShort(f"length {x.shape[0]} < n_lags + horizon = {n + m}")
    if mode is TargetMode.HORIZON_DIFF and n < 2:
        raise ValueError("HorizonDiff needs at least 2 lags")
    windows = sliding_window_view(x, n)[:count]
    features = np.ascontiguousarray(windows[:, ::-1])
    t = np.arange(n - 1, n - 1 + count)
    targets = x[t + m].copy()
    if mode is TargetMode.HORIZON_DIFF:
        targets -= x[t]
    for a in (features, targets):
        a.setflags(write=False)
    return SupervisedDataset(features, targets, origin + t, m, mode, (origin, x.shape[0]))


@dataclass(frozen=True)
class SplitSpec:
    fractions: tuple = (0.70, 0.20, 0.10)
    ordering: str = "chronological"

    def __post_init__(self):
        f = tuple(float(v) for v in self.fractions)
        if len(f) != 3 or min(f) <= 0:
            raise InvalidSplit("need three positive fractions (train, val, test)")
        if abs(sum(f) - 1.0) > 1e-9:
            raise InvalidSplit(f"fractions sum to {sum(f)}, not 1")
        if self.ordering != "chronological":
            raise InvalidSplit(f"only chronological splits are supported, got {self.ordering!r}")
        object.__setattr__(self, "fractions", f)


def _counts(total: int, fractions: Sequence[float]) -> tuple[int, int, int]:
    n_train = int(round(fractions[0] * total))
    n_val = int(round(fractions[1] * total))
    return n_train, n_val, total - n_train - n_val


def split_days(n_days: int, spec: SplitSpec = SplitSpec()) -> tuple[int, int, int]:
    return _counts(n_days, spec.fractions)


def chrono_split(ds: SupervisedDataset, spec: SplitSpec = SplitSpec()):
    """(train, val, test) in time order.

    Partitions are whole days of the source series, each sample going to
    the partition holding its target time.  Sources shorter than three
    days, or day splits leaving a partition empty, fall back to splitting
    by sample count.
    """
    n = len(ds)
    if n < 3:
        raise TooFewSamples(f"need >= 3 samples to split, got {n}")
    if np.any(np.diff(ds.sample_times) <= 0):
        raise InvalidSplit("samples are not in chronological order")
    origin, length = ds.span
    first_day = origin // SLOTS_PER_DAY
    n_days = (origin + length - 1) // SLOTS_PER_DAY - first_day + 1
    parts = None
    if n_days >= 3:
        d_train, d_val, _ = split_days(n_days, spec)
        day = ds.target_times // SLOTS_PER_DAY - first_day
        cut1 = int(np.searchsorted(day, d_train))
        cut2 = int(np.searchsorted(day, d_train + d_val))
        if 0 < cut1 < cut2 < n:
            parts = (cut1, cut2)
    if parts is None:
        a, b, c = _counts(n, spec.fractions)
        if min(a, b, c) < 1:
            a, b = max(a, 1), max(b, 1)
        parts = (a, a + b)
    cut1, cut2 = parts
    train = ds.subset(slice(0, cut1))
    val = ds.subset(slice(cut1, cut2))
    test = ds.subset(slice(cut2, n))
    overlap = int(np.sum(val.sample_times - ds.n_lags + 1 <= train.target_times[-1]))
    if overlap:
        log.debug("%d validation windows reach back into training targets", overlap)
    return train, val, test


def weekday_only(ds: SupervisedDataset, epoch_weekday: int) -> SupervisedDataset:
    """Drop samples whose target falls on a weekend."""
    wd = (ds.target_times // SLOTS_PER_DAY + epoch_weekday) % 7
    return ds.subset(np.flatnonzero(wd < 5))


def write_dataset(path, ds: SupervisedDataset) -> Path:
    path = Path(path)
    header = [f"lag_{j}" for j in range(ds.n_lags)] + ["target", "day", "slot"]
    days, slots = np.divmod(ds.sample_times, SLOTS_PER_DAY)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row, y, d, s in zip(ds.features.tolist(), ds.targets.tolist(),
                                days.tolist(), slots.tolist()):
            w.writerow([repr(v) for v in row] + [repr(y), d, s + 1])
    return path
