"""Cycle-aware time series forecasting with segmented frequency-domain
pattern learning, on a self-contained reverse-mode differentiation core."""

from .autodiff import Parameter, Tape, finite_difference_grad
from .data import Dataset, Scaler, SplitSpec, load_csv, sample_windows, split
from .estimators import FreqCycleForecaster, MFreqCycleForecaster
from .model import FreqCycleNet, MFreqCycleNet, ModelConfig, MultiScaleConfig
from .sfpl import SegmentConfig
from .train import Adam, Metrics, TrainConfig, evaluate, train

__version__ = "0.1.0"

__all__ = [
    "Adam",
    "Dataset",
    "FreqCycleForecaster",
    "FreqCycleNet",
    "MFreqCycleForecaster",
    "MFreqCycleNet",
    "Metrics",
    "ModelConfig",
    "MultiScaleConfig",
    "Parameter",
    "Scaler",
    "SegmentConfig",
    "SplitSpec",
    "Tape",
    "TrainConfig",
    "evaluate",
    "finite_difference_grad",
    "load_csv",
    "sample_windows",
    "split",
    "train",
]
