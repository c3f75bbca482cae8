"""Run configuration: one JSON document, every key optional.

Unknown keys are rejected at every nesting level so typos fail loudly.
``RunConfig.to_dict()`` is the canonical echo written into manifests and
parses back to an equal config.
"""
from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

from .aggregation import RESIDENTIAL_LEVELS, SME_LEVELS
from .core import LoadAggError, LoadClass
from .dataset import SplitSpec, TargetMode
from .experiment import DEFAULT_GRIDS, Grid
from .models import Family
from .predictability import ApEnParams
from .synth import SPIKY, SynthSpec


class ConfigInvalid(LoadAggError):
    pass


def _default_levels():
    return {"residential": list(RESIDENTIAL_LEVELS), "sme": list(SME_LEVELS)}


@dataclass
class ApEnSection:
    m: int = 2
    r_rel: float = 0.2
    window: int | None = 4800     # points per series; None = whole series


@dataclass
class DiffSection:
    source: str = "spiky"         # "spiky" synthetic meters or "corpus" residential meters
    n_meters: int = 20
    n_days: int = 100
    family: str = "linear"
    horizon: int = 2


@dataclass
class ForecastSection:
    level: int = 1
    group: int = 0


@dataclass
class RunConfig:
    input: str | None = None
    out_dir: str = "out"
    root_seed: int = 20090101
    threads: int = 1
    classes: list = field(default_factory=lambda: ["residential", "sme"])
    aec_classes: list | None = None   # classes for aec; None = classes
    levels: dict = field(default_factory=_default_levels)
    families: list = field(default_factory=lambda: [f.value for f in Family])
    horizons: list = field(default_factory=lambda: [2, 48])
    n_lags: int = 480
    split: list = field(default_factory=lambda: [0.7, 0.2, 0.1])
    s_groups: int = 5
    diff_mode: str = "raw"
    weekday_mode: bool = False
    epoch_weekday: int = 3        # 2009-01-01 was a Thursday
    window: list | None = None    # half-open [start_day, end_day) for ingest/clean
    zero_day_limit: int = 30
    grids: dict = field(default_factory=dict)
    apen: ApEnSection = field(default_factory=ApEnSection)
    synth: dict = field(default_factory=dict)
    diffcmp: DiffSection = field(default_factory=DiffSection)
    forecast: ForecastSection = field(default_factory=ForecastSection)

    # ------------------------------------------------------------ views
    @property
    def load_classes(self) -> list[LoadClass]:
        return [LoadClass(c) for c in self.classes]

    @property
    def aec_load_classes(self) -> list[LoadClass]:
        return [LoadClass(c) for c in (self.classes if self.aec_classes is None else self.aec_classes)]

    @property
    def split_spec(self) -> SplitSpec:
        return SplitSpec(tuple(self.split))

    @property
    def apen_params(self) -> ApEnParams:
        return ApEnParams(self.apen.m, self.apen.r_rel)

    @property
    def target_mode(self) -> TargetMode:
        return TargetMode.parse(self.diff_mode)

    @property
    def horizon_steps(self) -> list[int]:
        return [int(h) for h in self.horizons]

    def levels_for(self, cls: LoadClass) -> list[int]:
        return [int(k) for k in self.levels.get(cls.value, [])]

    def grid_for(self, family) -> Grid:
        fam = Family.parse(family)
        return Grid.make(fam, self.grids.get(fam.value, DEFAULT_GRIDS[fam.value]))

    def synth_spec(self) -> SynthSpec:
        kw = dict(self.synth)
        preset = kw.pop("preset", "default")
        base = dict(SPIKY) if preset == "spiky" else {}
        base.update(kw)
        base.setdefault("root_seed", self.root_seed)
        return SynthSpec(**base)

    # ------------------------------------------------------------ io
    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        if not isinstance(data, dict):
            raise ConfigInvalid("config must be a JSON object")
        cfg = _build(cls, data, "")
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path) -> "RunConfig":
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigInvalid(f"cannot read config {path}: {exc}") from None
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigInvalid(f"{path}: {exc}") from None
        return cls.from_dict(data)

    def replace(self, **kw) -> "RunConfig":
        cfg = dataclasses.replace(self, **kw)
        cfg.validate()
        return cfg

    def validate(self) -> None:
        try:
            self._validate()
        except ConfigInvalid:
            raise
        except (ValueError, TypeError, KeyError, LoadAggError) as exc:
            raise ConfigInvalid(str(exc)) from None

    def _validate(self) -> None:
        if not isinstance(self.root_seed, int) or self.root_seed < 0:
            raise ConfigInvalid("root_seed must be a non-negative integer")
        if not isinstance(self.threads, int) or self.threads < 0:
            raise ConfigInvalid("threads must be >= 0 (0 = one per CPU)")
        self.load_classes
        self.aec_load_classes
        for k in self.levels:
            LoadClass(k)
            if any(int(v) < 1 for v in self.levels[k]):
                raise ConfigInvalid(f"levels[{k}] must be >= 1")
        for f in self.families:
            Family.parse(f)
            self.grid_for(f)
        for g in self.grids:
            Family.parse(g)
        for h in self.horizons:
            if int(h) < 1:
                raise ConfigInvalid("horizons must be >= 1 step")
        if int(self.n_lags) < 2:
            raise ConfigInvalid("n_lags must be >= 2")
        self.split_spec
        if int(self.s_groups) < 1:
            raise ConfigInvalid("s_groups must be >= 1")
        self.target_mode
        if not 0 <= self.epoch_weekday <= 6:
            raise ConfigInvalid("epoch_weekday must be in 0..6")
        if self.window is not None and (len(self.window) != 2 or self.window[1] <= self.window[0]):
            raise ConfigInvalid("window must be [start_day, end_day) with end > start")
        if int(self.zero_day_limit) < 1:
            raise ConfigInvalid("zero_day_limit must be >= 1")
        self.apen_params
        if self.apen.window is not None and int(self.apen.window) < 3:
            raise ConfigInvalid("apen.window must be >= 3 or null")
        self.synth_spec()
        if self.diffcmp.source not in ("spiky", "corpus"):
            raise ConfigInvalid("diffcmp.source must be 'spiky' or 'corpus'")
        Family.parse(self.diffcmp.family)
        if self.forecast.level < 1 or self.forecast.group < 0:
            raise ConfigInvalid("forecast.level must be >= 1 and forecast.group >= 0")


_SECTIONS = {"apen": ApEnSection, "diffcmp": DiffSection, "forecast": ForecastSection}


def _build(cls, data: dict, where: str):
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - names)
    if unknown:
        raise ConfigInvalid(f"unknown config key(s) {', '.join(where + k for k in unknown)}")
    kw = {}
    for k, v in data.items():
        sub = _SECTIONS.get(k) if cls is RunConfig else None
        if sub is not None:
            if not isinstance(v, dict):
                raise ConfigInvalid(f"{where}{k} must be an object")
            v = _build(sub, v, f"{where}{k}.")
        elif k == "synth":
            if not isinstance(v, dict):
                raise ConfigInvalid("synth must be an object")
            allowed = {f.name for f in dataclasses.fields(SynthSpec)} | {"preset"}
            bad = sorted(set(v) - allowed)
            if bad:
                raise ConfigInvalid(f"unknown config key(s) {', '.join('synth.' + b for b in bad)}")
            if v.get("preset", "default") not in ("default", "spiky"):
                raise ConfigInvalid("synth.preset must be 'default' or 'spiky'")
        kw[k] = v
    try:
        return cls(**kw)
    except TypeError as exc:
        raise ConfigInvalid(str(exc)) from None

