"""Regressors behind one train/predict contract."""
from .base import (DivergedLoss, Family, InvalidHyperparameter, ModelSpec, ShapeMismatch,
                   TrainedModel, family_module, fit, load, predict, save)

__all__ = ["DivergedLoss", "Family", "InvalidHyperparameter", "ModelSpec", "ShapeMismatch",
           "TrainedModel", "family_module", "fit", "load", "predict", "save"]
