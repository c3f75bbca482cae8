"""Forecast metrics, grid-search tuning and the aggregation-error-curve runner."""
from __future__ import annotations

import csv
import itertools
import json
import logging
import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .aggregation import build_aggregates, class_members, derive_seed
from .core import HorizonSpec, LoadAggError, LoadClass
from .dataset import (LagSpec, SplitSpec, SupervisedDataset, TargetMode, TooFewSamples,
                      chrono_split, make_lag_dataset, weekday_only)
from .models import Family, ModelSpec, fit, predict

log = logging.getLogger(__name__)

MAPE_TAU = 1e-3


class LengthMismatch(LoadAggError):
    pass


class ZeroDenominator(LoadAggError):
    pass


class AllPointsSkipped(LoadAggError):
    pass


def _pair(actual, predicted):
    a = np.asarray(actual, dtype=np.float64).ravel()
    p = np.asarray(predicted, dtype=np.float64).ravel()
    if a.shape != p.shape:
        raise LengthMismatch(f"{a.shape[0]} actuals vs {p.shape[0]} predictions")
    if a.shape[0] == 0:
        raise LengthMismatch("empty vectors")
    return a, p


def nmae(actual, predicted) -> float:
    """sum |x - x_hat| / sum |x|."""
    a, p = _pair(actual, predicted)
    den = np.abs(a).sum()
    if den == 0:
        raise ZeroDenominator("sum of |actual| is zero")
    return float(np.abs(a - p).sum() / den)


def mae(actual, predicted) -> float:
    a, p = _pair(actual, predicted)
    return float(np.abs(a - p).mean())


def rmse(actual, predicted) -> float:
    a, p = _pair(actual, predicted)
    return float(np.sqrt(np.mean((a - p) ** 2)))


def mape_safe(actual, predicted, tau: float = MAPE_TAU) -> tuple[float, int]:
    """Mean absolute percentage error over points with |actual| >= tau.

    Returns (percent, number of points skipped).
    """
    a, p = _pair(actual, predicted)
    keep = np.abs(a) >= tau
    if not keep.any():
        raise AllPointsSkipped(f"every actual is below {tau}")
    return float(100.0 * np.mean(np.abs((a[keep] - p[keep]) / a[keep]))), int((~keep).sum())


@dataclass(frozen=True)
class MetricSet:
    nmae: float
    mae: float
    rmse: float
    mape_safe: float
    n_points: int
    mape_skipped: int

    @classmethod
    def compute(cls, actual, predicted, tau: float = MAPE_TAU) -> "MetricSet":
        a, p = _pair(actual, predicted)
        try:
            mape, skipped = mape_safe(a, p, tau)
        except AllPointsSkipped:
            mape, skipped = math.nan, a.shape[0]
        return cls(nmae(a, p), mae(a, p), rmse(a, p), mape, a.shape[0], skipped)


# ---------------------------------------------------------------- tuning

DEFAULT_GRIDS = {
    "linear": {"ridge_lambda": [0.0, 0.1, 10.0]},
    "gbrt": {"learning_rate": [0.05, 0.1], "n_estimators": [50, 200], "max_depth": [2, 3]},
    "svr": {"c_penalty": [1.0, 10.0], "epsilon": [0.01, 0.1], "gamma": [0.1, 1.0]},
    "mlp": {"hidden": [[32], [64, 32]], "epochs": [100], "batch_size": [32],
            "activation": ["relu", "elu"]},
    "lstm": {"n_blocks": [16, 32], "epochs": [50], "batch_size": [32]},
}


@dataclass(frozen=True)
class Grid:
    """Ordered candidate lists per hyperparameter; points enumerate in
    declaration order with the last axis varying fastest."""

    family: Family
    axes: tuple  # ((name, (values...)), ...)

    @classmethod
    def make(cls, family, axes: Mapping[str, Sequence]) -> "Grid":
        fam = Family.parse(family)
        if not axes:
            raise ValueError(f"{fam.value}: empty grid")
        items = []
        for name, values in axes.items():
            vals = tuple(tuple(v) if isinstance(v, list) else v for v in values)
            if not vals:
                raise ValueError(f"{fam.value}: no candidates for {name}")
            items.append((name, vals))
        grid = cls(fam, tuple(items))
        for p in grid.points():
            ModelSpec.make(fam, 0, **p)
        return grid

    @classmethod
    def default(cls, family) -> "Grid":
        fam = Family.parse(family)
        return cls.make(fam, DEFAULT_GRIDS[fam.value])

    def points(self) -> list[dict]:
        names = [n for n, _ in self.axes]
        return [dict(zip(names, combo)) for combo in itertools.product(*(v for _, v in self.axes))]

    def __len__(self) -> int:
        return math.prod(len(v) for _, v in self.axes)

    def to_dict(self) -> dict:
        return {n: [list(x) if isinstance(x, tuple) else x for x in v] for n, v in self.axes}


@dataclass(frozen=True)
class GridResult:
    best: ModelSpec
    best_nmae: float
    table: tuple  # ((params, val_nmae), ...) in grid order
    model: object = None


def _score(spec: ModelSpec, train: SupervisedDataset, val: SupervisedDataset):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        model = fit(spec, train)
    pred = predict(model, val.features)
    score = nmae(val.level_targets, pred)
    if not math.isfinite(score):
        raise FloatingPointError("non-finite validation score")
    return score, model


def grid_search(family, grid: Grid | None, train: SupervisedDataset, val: SupervisedDataset,
                seed: int) -> GridResult:
    """Train one model per grid point, keep the lowest validation NMAE.

    Ties go to the earliest point; a point whose training fails scores
    infinity and the sweep carries on.
    """
    fam = Family.parse(family)
    grid = grid or Grid.default(fam)
    table = []
    best = None
    for params in grid.points():
        spec = ModelSpec.make(fam, seed, **params)
        try:
            score, model = _score(spec, train, val)
        except Exception as exc:  # noqa: BLE001 - every failure is scored, none abort
            log.warning("%s %s failed: %s", fam.value, params, exc)
            score, model = math.inf, None
        table.append((params, score))
        if best is None or score < best[1]:
            best = (spec, score, model)
    return GridResult(best[0], best[1], tuple(table), best[2])


# ---------------------------------------------------------------- AEC runner

@dataclass(frozen=True)
class CellResult:
    load_class: str
    level: int
    group: int
    family: str
    horizon: int
    seed: int
    metrics: MetricSet | None
    best_params: dict | None
    error: str = ""


@dataclass(frozen=True)
class AecRecord:
    load_class: str
    level: int
    family: str
    horizon: int
    mean_nmae: float
    std_nmae: float
    n_groups: int
    best_params: tuple
    seeds: tuple


@dataclass
class AecResult:
    records: list
    cells: list = field(default_factory=list)


def _jsonable_params(p: dict) -> dict:
    return {k: list(v) if isinstance(v, tuple) else v for k, v in p.items()}


@dataclass(frozen=True)
class Evaluation:
    metrics: MetricSet
    search: GridResult
    test: SupervisedDataset
    predicted: np.ndarray


def evaluate_series(series, family, horizon: int, grid: Grid | None, seed: int,
                    n_lags: int = 480, split: SplitSpec = SplitSpec(),
                    target_mode=TargetMode.RAW, weekday_epoch: int | None = None) -> Evaluation:
    """Tune on validation, score the chosen model on the test days."""
    ds = make_lag_dataset(series, LagSpec(n_lags, horizon), target_mode)
    train, val, test = chrono_split(ds, split)
    if weekday_epoch is not None:
        train, val, test = (weekday_only(p, weekday_epoch) for p in (train, val, test))
        if not (len(train) and len(val) and len(test)):
            raise TooFewSamples("a partition holds no weekday targets "
                                f"(train/val/test = {len(train)}/{len(val)}/{len(test)})")
    res = grid_search(family, grid, train, val, seed)
    if res.model is None:
        raise LoadAggError(f"every {Family.parse(family).value} grid point failed")
    pred = predict(res.model, test.features)
    return Evaluation(MetricSet.compute(test.level_targets, pred), res, test, pred)


def resolve_threads(threads: int) -> int:
    if threads < 0:
        raise ValueError("threads must be >= 0")
    return threads or (os.cpu_count() or 1)


def run_aec(corpus: Mapping, classes: Sequence[LoadClass], levels: Mapping | Sequence[int],
            families: Sequence, horizons: Sequence, split: SplitSpec = SplitSpec(),
            s_groups: int = 5, root_seed: int = 0, diff_mode=TargetMode.RAW,
            n_lags: int = 480, grids: Mapping | None = None, threads: int = 1,
            weekday_epoch: int | None = None) -> AecResult:
    """One tuned model per (class, level, group, family, horizon) cell,
    reduced to mean/std test NMAE per (class, level, family, horizon).

    ``levels`` is either one level list for every class or a mapping from
    class to levels.  Groups that draw exactly the same meters as an
    earlier group of their level (certain once the level equals the class
    size) reuse that group's result.  ``weekday_epoch`` restricts SME
    targets to weekdays.
    """
    mode = TargetMode.parse(diff_mode)
    fams = [Family.parse(f) for f in families]
    hors = [HorizonSpec.parse(h).steps if not isinstance(h, int) else int(h) for h in horizons]
    grids = grids or {}
    tasks = []     # (key, series, family, horizon, seed, weekday)
    alias = {}     # cell key -> key of the cell it reuses
    for cls in classes:
        cls_levels = levels.get(cls, levels.get(cls.value)) if isinstance(levels, Mapping) else levels
        n_members = len(class_members(corpus, cls))
        if not cls_levels or n_members == 0:
            continue
        aggs = build_aggregates(corpus, cls, [k for k in cls_levels if k <= n_members],
                                s_groups, root_seed)
        seen = {}
        for agg in aggs:
            lvl, g = agg.level, agg.group.index
            first = seen.setdefault((lvl, agg.group.member_ids), g)
            wd = weekday_epoch if cls is LoadClass.SME else None
            for fi, fam in enumerate(fams):
                for h in hors:
                    key = (cls.code, lvl, g, fi, h)
                    if first != g:
                        alias[key] = (cls.code, lvl, first, fi, h)
                        continue
                    seed = derive_seed(root_seed, cls.code, lvl, g, fi, h) & 0x7FFFFFFF
                    tasks.append((key, cls, agg, fam, h, seed, wd))

    def run(task):
        key, cls, agg, fam, h, seed, wd = task
        try:
            grid = grids.get(fam.value) or grids.get(fam)
            if grid is not None and not isinstance(grid, Grid):
                grid = Grid.make(fam, grid)
            ev = evaluate_series(agg, fam, h, grid, seed, n_lags, split, mode, wd)
            return CellResult(cls.value, key[1], key[2], fam.value, h, seed, ev.metrics,
                              _jsonable_params(_grid_params(ev.search.best, grid)))
        except Exception as exc:  # noqa: BLE001 - recorded per cell
            log.warning("cell %s failed: %s", key, exc)
            return CellResult(cls.value, key[1], key[2], fam.value, h, seed, None, None, str(exc))

    n_threads = resolve_threads(threads)
    if n_threads == 1:
        results = [run(t) for t in tasks]
    else:
        with ThreadPoolExecutor(max_workers=n_threads) as pool:
            results = list(pool.map(run, tasks))
    by_key = {t[0]: r for t, r in zip(tasks, results)}
    for key, src in alias.items():
        r = by_key[src]
        by_key[key] = CellResult(r.load_class, r.level, key[2], r.family, r.horizon, r.seed,
                                 r.metrics, r.best_params, r.error)
    cells = [by_key[k] for k in sorted(by_key)]
    return AecResult(reduce_cells(cells), cells)


def _grid_params(spec: ModelSpec, grid: Grid | None) -> dict:
    """The tuned subset of a spec's hyperparameters."""
    names = [n for n, _ in grid.axes] if grid is not None else \
        list(DEFAULT_GRIDS[spec.family.value])
    return {n: getattr(spec.params, n) for n in names}


def reduce_cells(cells: Sequence[CellResult]) -> list[AecRecord]:
    groups: dict = {}
    for c in cells:
        groups.setdefault((LoadClass(c.load_class).code, c.level, c.family, c.horizon), []).append(c)
    out = []
    for (_, level, family, horizon), cs in sorted(groups.items(),
                                                  key=lambda kv: (kv[0][0], kv[0][1],
                                                                  _FAMILY_ORDER[kv[0][2]], kv[0][3])):
        ok = [c for c in cs if c.metrics is not None]
        vals = np.array([c.metrics.nmae for c in ok])
        mean = float(vals.mean()) if ok else math.nan
        # identical groups must give exactly 0, not mean-rounding residue
        std = (float(vals.std()) if np.ptp(vals) > 0 else 0.0) if ok else math.nan
        out.append(AecRecord(cs[0].load_class, level, family, horizon, mean, std, len(ok),
                             tuple(c.best_params for c in ok), tuple(c.seed for c in cs)))
    return out


_FAMILY_ORDER = {f.value: i for i, f in enumerate(Family)}


@dataclass(frozen=True)
class DiffPair:
    meter_id: int
    nmae_raw: float
    nmae_diff: float


def run_diff_comparison(meters: Sequence, family="linear", horizon=2, root_seed: int = 0,
                        grid: Grid | None = None, n_lags: int = 480,
                        split: SplitSpec = SplitSpec()) -> list[DiffPair]:
    """Each meter forecast with Raw and HorizonDiff targets on the same
    split, grid and seed."""
    fam = Family.parse(family)
    h = HorizonSpec.parse(horizon).steps if not isinstance(horizon, int) else horizon
    if grid is not None and not isinstance(grid, Grid):
        grid = Grid.make(fam, grid)
    out = []
    for s in meters:
        seed = derive_seed(root_seed, s.meter_id, h) & 0x7FFFFFFF
        raw = evaluate_series(s, fam, h, grid, seed, n_lags, split, TargetMode.RAW)
        dif = evaluate_series(s, fam, h, grid, seed, n_lags, split, TargetMode.HORIZON_DIFF)
        out.append(DiffPair(s.meter_id, raw.metrics.nmae, dif.metrics.nmae))
    return out


# ---------------------------------------------------------------- artifacts

AEC_HEADER = ("class", "level", "family", "horizon", "mean_nmae", "std_nmae", "n_groups",
              "best_params_json")
CELL_HEADER = ("class", "level", "group", "family", "horizon", "seed", "nmae", "mae", "rmse",
               "mape_safe", "mape_skipped", "n_points", "best_params_json", "error")
DIFF_HEADER = ("meter_id", "nmae_raw", "nmae_diff")


def _dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def write_aec(path, records: Sequence[AecRecord]) -> Path:
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(AEC_HEADER)
        for r in records:
            w.writerow([r.load_class, r.level, r.family, r.horizon, repr(r.mean_nmae),
                        repr(r.std_nmae), r.n_groups, _dumps(list(r.best_params))])
    return path


def write_cells(path, cells: Sequence[CellResult]) -> Path:
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CELL_HEADER)
        for c in cells:
            m = c.metrics
            vals = ([repr(m.nmae), repr(m.mae), repr(m.rmse), repr(m.mape_safe), m.mape_skipped,
                     m.n_points] if m else ["", "", "", "", "", ""])
            w.writerow([c.load_class, c.level, c.group, c.family, c.horizon, c.seed, *vals,
                        _dumps(c.best_params) if c.best_params is not None else "", c.error])
    return path


def write_diff(path, pairs: Sequence[DiffPair]) -> Path:
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(DIFF_HEADER)
        for p in pairs:
            w.writerow([p.meter_id, repr(p.nmae_raw), repr(p.nmae_diff)])
    return path


def read_aec(path) -> list[dict]:
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.DictReader(fh))
    for r in rows:
        r["level"], r["horizon"], r["n_groups"] = int(r["level"]), int(r["horizon"]), int(r["n_groups"])
        r["mean_nmae"], r["std_nmae"] = float(r["mean_nmae"]), float(r["std_nmae"])
    return rows


_COLOURS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def svg_lines(series: Mapping[str, Sequence[tuple]], title: str, xlabel: str, ylabel: str,
              log_x: bool = False, width: int = 640, height: int = 400) -> str:
    """Standalone SVG line chart; ``series`` maps label -> [(x, y), ...]."""
    pts = [(x, y) for s in series.values() for x, y in s if math.isfinite(y)]
    if not pts:
        pts = [(1.0, 0.0)]
    fx = (lambda v: math.log10(v)) if log_x else float
    xs = [fx(x) for x, _ in pts]
    ys = [y for _, y in pts]
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(0.0, min(ys)), max(ys)
    x1 = x1 if x1 > x0 else x0 + 1
    y1 = y1 if y1 > y0 else y0 + 1
    ml, mr, mt, mb = 60, 130, 30, 50
    pw, ph = width - ml - mr, height - mt - mb

    def px(x):
        return ml + (fx(x) - x0) / (x1 - x0) * pw

    def py(y):
        return mt + ph - (y - y0) / (y1 - y0) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'font-family="sans-serif" font-size="12">',
           f'<rect width="{width}" height="{height}" fill="white"/>',
           f'<text x="{width / 2:.1f}" y="18" text-anchor="middle">{title}</text>',
           f'<line x1="{ml}" y1="{mt + ph}" x2="{ml + pw}" y2="{mt + ph}" stroke="black"/>',
           f'<line x1="{ml}" y1="{mt}" x2="{ml}" y2="{mt + ph}" stroke="black"/>',
           f'<text x="{ml + pw / 2:.1f}" y="{height - 10}" text-anchor="middle">{xlabel}</text>',
           f'<text x="15" y="{mt + ph / 2:.1f}" text-anchor="middle" '
           f'transform="rotate(-90 15 {mt + ph / 2:.1f})">{ylabel}</text>']
    ticks = sorted({x for s in series.values() for x, _ in s})
    for x in ticks:
        out.append(f'<text x="{px(x):.1f}" y="{mt + ph + 16}" text-anchor="middle">{x:g}</text>')
    for k in range(5):
        y = y0 + (y1 - y0) * k / 4
        out.append(f'<text x="{ml - 6}" y="{py(y) + 4:.1f}" text-anchor="end">{y:.3g}</text>')
    for i, (label, s) in enumerate(series.items()):
        col = _COLOURS[i % len(_COLOURS)]
        good = [(x, y) for x, y in s if math.isfinite(y)]
        poly = " ".join(f"{px(x):.1f},{py(y):.1f}" for x, y in good)
        out.append(f'<polyline points="{poly}" fill="none" stroke="{col}" stroke-width="2"/>')
        for x, y in good:
            out.append(f'<circle cx="{px(x):.1f}" cy="{py(y):.1f}" r="3" fill="{col}"/>')
        ly = mt + 14 + 16 * i
        out.append(f'<text x="{ml + pw + 10}" y="{ly}" fill="{col}">{label}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def aec_svgs(records: Sequence[AecRecord]) -> dict:
    """One chart per (class, horizon): file stem -> SVG text."""
    charts: dict = {}
    for r in records:
        charts.setdefault((r.load_class, r.horizon), {}).setdefault(r.family, []).append(
            (r.level, r.mean_nmae))
    return {f"aec_{cls}_{h}step": svg_lines(series, f"AEC {cls}, {h}-step ahead",
                                            "aggregation level", "NMAE", log_x=True)
            for (cls, h), series in sorted(charts.items())}


def diff_svg(pairs: Sequence[DiffPair]) -> str:
    series = {"raw": [(i + 1, p.nmae_raw) for i, p in enumerate(pairs)],
              "differenced": [(i + 1, p.nmae_diff) for i, p in enumerate(pairs)]}
    return svg_lines(series, "Raw vs differenced targets", "meter", "NMAE")
