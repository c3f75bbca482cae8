"""Approximate entropy and first differencing.

ApEn(m, r) = Phi_m(r) - Phi_{m+1}(r), where Phi_m is the mean log
fraction of length-m templates within Chebyshev distance r of each
template, self-matches included (Pincus' original formulation).  The
tolerance is relative: r = r_rel * SD(series), with the population SD.
"""
from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import _kernels
from .core import LoadAggError, SeriesTooShort

log = logging.getLogger(__name__)


class InvalidParams(LoadAggError):
    pass


@dataclass(frozen=True)
class ApEnParams:
    m: int = 2
    r_rel: float = 0.2

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 1:
            raise InvalidParams(f"m must be a positive integer, got {self.m}")
        if not self.r_rel > 0:
            raise InvalidParams(f"r_rel must be positive, got {self.r_rel}")


def _phi(counts: np.ndarray) -> float:
    return float(np.mean(np.log(counts / counts.shape[0])))


def apen(series, params: ApEnParams = ApEnParams()) -> float:
    x = np.ascontiguousarray(series, dtype=np.float64).ravel()
    m = int(params.m)
    if x.shape[0] <= m + 1:
        raise SeriesTooShort(f"ApEn needs N > m + 1 (N={x.shape[0]}, m={m})")
    if not np.isfinite(x).all():
        raise InvalidParams("series contains non-finite values")
    sd = float(np.std(x))
    if sd == 0.0:
        return 0.0
    cm, cm1 = _kernels.apen_counts(x, m, params.r_rel * sd)
    return _phi(cm) - _phi(cm1)


def difference(series) -> np.ndarray:
    x = np.asarray(series, dtype=np.float64).ravel()
    if x.shape[0] < 2:
        raise SeriesTooShort("differencing needs at least 2 values")
    return x[1:] - x[:-1]


def undifference(first_value: float, diffs) -> np.ndarray:
    d = np.asarray(diffs, dtype=np.float64).ravel()
    out = np.empty(d.shape[0] + 1)
    out[0] = first_value
    np.cumsum(d, out=out[1:])
    out[1:] += first_value
    return out


@dataclass(frozen=True)
class PredictabilityRecord:
    load_class: str
    subject: str
    level: int
    group: int
    apen_raw: float
    apen_diff: float
    params: ApEnParams
    n: int


CSV_HEADER = ("class", "level", "group", "apen_raw", "apen_diff", "m", "r_rel", "n")


def predictability_curve(aggregates: Iterable, params: ApEnParams = ApEnParams(),
                         window: int | None = None) -> list[PredictabilityRecord]:
    """One record per aggregate series (any object with ``values``,
    ``load_class`` and ``group``).  ``window`` truncates every series to
    its first ``window`` points so N stays fixed across levels.

    Subjects whose ApEn fails are logged and skipped.
    """
    out = []
    for a in aggregates:
        x = np.asarray(a.values, dtype=np.float64)
        if window is not None:
            x = x[:window]
        group = getattr(a, "group", None)
        level = group.level if group is not None else 1
        gidx = group.index if group is not None else 0
        cls = getattr(a, "load_class", None)
        cls_name = cls.value if cls is not None else "other"
        subject = ",".join(str(i) for i in group.member_ids) if group is not None else ""
        try:
            raw = apen(x, params)
            dif = apen(difference(x), params)
        except LoadAggError as exc:
            log.warning("skipping %s level %d group %d: %s", cls_name, level, gidx, exc)
            continue
        out.append(PredictabilityRecord(cls_name, subject, level, gidx, raw, dif, params, x.shape[0]))
    return out


def summarize(records: Sequence[PredictabilityRecord], field: str = "apen_raw") -> dict:
    """(class, level) -> (mean, std, count) of ``field``."""
    groups: dict = {}
    for r in records:
        groups.setdefault((r.load_class, r.level), []).append(getattr(r, field))
    return {k: (float(np.mean(v)), float(np.std(v)), len(v))
            for k, v in sorted(groups.items(), key=lambda kv: (kv[0][0], int(kv[0][1])))}


def write_curve(path, records: Iterable[PredictabilityRecord]) -> Path:
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in records:
            w.writerow([r.load_class, r.level, r.group, repr(r.apen_raw), repr(r.apen_diff),
                        r.params.m, repr(r.params.r_rel), r.n])
    return path
