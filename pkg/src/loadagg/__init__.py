"""Short-term load forecasting and predictability across smart-meter aggregation levels."""
__version__ = "0.1.0"

from ._kernels import BACKEND
from .core import HorizonSpec, LoadAggError, LoadClass, MeterSeries, SlotIndex, validate_series

__all__ = ["BACKEND", "HorizonSpec", "LoadAggError", "LoadClass", "MeterSeries", "SlotIndex",
           "__version__", "validate_series"]
