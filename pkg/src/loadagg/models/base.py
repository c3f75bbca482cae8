"""Model specs, the fitted-model container and the shared fit/predict path.

Every family implements ``fit_core(params, x, y, rng) -> (state, meta)``
and ``predict_core(params, state, x)`` on a plain regressor matrix.  The
wrappers here derive regressors from the lag window, attach a scaler for
the families that need standardised inputs and undo the HorizonDiff
target transform on the way out.
"""
from __future__ import annotations

import dataclasses
import enum
import io
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..core import LoadAggError
from ..dataset import Scaler, SupervisedDataset, TargetMode, fit_scaler, reconstruct, regressors_of

FORMAT_VERSION = 1


class ShapeMismatch(LoadAggError):
    pass


class InvalidHyperparameter(LoadAggError):
    pass


class DivergedLoss(LoadAggError):
    pass


class Family(enum.Enum):
    LINEAR = "linear"
    GBRT = "gbrt"
    SVR = "svr"
    MLP = "mlp"
    LSTM = "lstm"

    @classmethod
    def parse(cls, value) -> "Family":
        if isinstance(value, Family):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise InvalidHyperparameter(f"unknown model family {value!r}") from None


def _families():
    from . import gbrt, linear, lstm, mlp, svr
    return {Family.LINEAR: linear, Family.GBRT: gbrt, Family.SVR: svr,
            Family.MLP: mlp, Family.LSTM: lstm}


def family_module(family: Family):
    return _families()[Family.parse(family)]


@dataclass(frozen=True)
class ModelSpec:
    family: Family
    params: object
    seed: int = 0

    @classmethod
    def make(cls, family, seed: int = 0, **hyper) -> "ModelSpec":
        fam = Family.parse(family)
        mod = family_module(fam)
        names = {f.name for f in dataclasses.fields(mod.Params)}
        unknown = set(hyper) - names
        if unknown:
            raise InvalidHyperparameter(f"{fam.value}: unknown hyperparameter(s) {sorted(unknown)}")
        try:
            params = mod.Params(**hyper)
        except (TypeError, ValueError) as exc:
            raise InvalidHyperparameter(f"{fam.value}: {exc}") from None
        return cls(fam, params, int(seed))

    def to_dict(self) -> dict:
        return {"family": self.family.value, "seed": self.seed,
                "params": _jsonable(dataclasses.asdict(self.params))}

    @classmethod
    def from_dict(cls, d: dict) -> "ModelSpec":
        return cls.make(d["family"], d.get("seed", 0), **d.get("params", {}))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, enum.Enum):
        return obj.value
    return obj


@dataclass(frozen=True, eq=False)
class TrainedModel:
    spec: ModelSpec
    target_mode: TargetMode
    n_lags: int
    state: dict
    scaler: Scaler | None = None
    meta: dict = field(default_factory=dict)

    @property
    def family(self) -> Family:
        return self.spec.family


def fit(spec: ModelSpec, train: SupervisedDataset) -> TrainedModel:
    if len(train) < 1:
        raise ShapeMismatch("empty training set")
    mod = family_module(spec.family)
    x = train.regressors
    y = np.asarray(train.targets, dtype=np.float64)
    scaler = None
    if mod.STANDARDIZE:
        scaler = fit_scaler(x, y)
        x, y = scaler.apply_x(x), scaler.apply_y(y)
    rng = np.random.default_rng(spec.seed)
    state, meta = mod.fit_core(spec.params, x, y, rng)
    return TrainedModel(spec, train.target_mode, train.n_lags, state, scaler, meta)


def predict(model: TrainedModel, features) -> np.ndarray:
    """Level forecasts x(t+M) from raw lag windows (column 0 = x(t))."""
    f = np.atleast_2d(np.asarray(features, dtype=np.float64))
    if f.shape[1] != model.n_lags:
        raise ShapeMismatch(f"expected {model.n_lags} lag columns, got {f.shape[1]}")
    x = regressors_of(f, model.target_mode)
    if model.scaler is not None:
        x = model.scaler.apply_x(x)
    out = family_module(model.family).predict_core(model.spec.params, model.state, x)
    if model.scaler is not None:
        out = model.scaler.invert_y(out)
    return reconstruct(out, f, model.target_mode)


def save(model: TrainedModel, path) -> Path:
    """npz archive: arrays under ``state/<name>`` and ``scaler/<name>``,
    plus a JSON header with the format version, spec and metadata."""
    path = Path(path)
    header = {"format": "loadagg-model", "version": FORMAT_VERSION, "spec": model.spec.to_dict(),
              "target_mode": model.target_mode.value, "n_lags": model.n_lags,
              "meta": _jsonable(model.meta), "state_keys": sorted(model.state)}
    arrays = {f"state/{k}": np.asarray(v) for k, v in model.state.items()}
    if model.scaler is not None:
        s = model.scaler
        arrays.update({"scaler/x_mean": s.x_mean, "scaler/x_sd": s.x_sd,
                       "scaler/y": np.array([s.y_mean, s.y_sd])})
    arrays["header"] = np.frombuffer(json.dumps(header, sort_keys=True).encode(), dtype=np.uint8)
    buf = io.BytesIO()
    np.savez(buf, **arrays)
    path.write_bytes(buf.getvalue())
    return path


def load(path) -> TrainedModel:
    with np.load(Path(path), allow_pickle=False) as z:
        header = json.loads(bytes(z["header"]).decode())
        if header.get("format") != "loadagg-model":
            raise ValueError(f"{path}: not a saved model")
        if header["version"] != FORMAT_VERSION:
            raise ValueError(f"{path}: unsupported model format version {header['version']}")
        state = {k: z[f"state/{k}"] for k in header["state_keys"]}
        scaler = None
        if "scaler/x_mean" in z.files:
            y = z["scaler/y"]
            scaler = Scaler(z["scaler/x_mean"], z["scaler/x_sd"], float(y[0]), float(y[1]))
    spec = ModelSpec.from_dict(header["spec"])
    return TrainedModel(spec, TargetMode(header["target_mode"]), header["n_lags"], state,
                        scaler, header["meta"])
