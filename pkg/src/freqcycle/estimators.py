"""Scikit-learn style forecaster facades over the tape-based networks.

``fit`` consumes a standardized (T, D) training series (optionally with a
validation series), ``predict`` maps lookback windows to horizon forecasts.
Hyperparameters follow the sklearn convention: stored verbatim in
``__init__`` and introspectable through ``get_params``.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator

from .data import WindowBatch, sample_windows
from .model import FreqCycleNet, MFreqCycleNet, ModelConfig, MultiScaleConfig
from .multiscale import BranchConfig
from .sfpl import SegmentConfig
from .train import TrainConfig, evaluate, train


def _check_series(x, lookback, horizon) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError(f"expected a (T, D) series, got shape {x.shape}")
    if x.shape[0] < lookback + horizon:
        raise ValueError(
            f"series of length {x.shape[0]} too short for lookback {lookback} "
            f"+ horizon {horizon}"
        )
    return x


class _ForecasterBase(BaseEstimator):
    net_ = None  # set by fit

    def _windows(self, series: np.ndarray, origin: int, lookback: int) -> WindowBatch:
        return sample_windows(series, (0, series.shape[0]),
                              lookback, self.horizon, origin_index=origin)

    def fit(self, X, y=None, X_val=None, origin_index=0, val_origin_index=None):
        lookback = self._input_lookback()
        X = _check_series(X, lookback, self.horizon)
        self.net_ = self._build_net(X.shape[1])
        train_w = self._windows(X, origin_index, lookback)
        if X_val is None:
            val_w = train_w
        else:
            X_val = _check_series(X_val, lookback, self.horizon)
            if val_origin_index is None:
                val_origin_index = origin_index + X.shape[0]
            val_w = self._windows(X_val, val_origin_index, lookback)
        cfg = TrainConfig(lr=self.lr, batch_size=self.batch_size,
                          epochs=self.epochs, seed=self.seed)
        self.history_ = train(self.net_, train_w, val_w, cfg)
        return self

    def predict(self, X, start_index=0):
        """Forecast from one (L, D) lookback or a batch (B, L, D).

        ``start_index`` is the absolute sample index of the first lookback
        step (an array for batched input); it anchors the cycle phase.
        """
        if self.net_ is None:
            raise RuntimeError("call fit() before predict()")
        X = np.asarray(X, dtype=np.float64)
        single = X.ndim == 2
        if single:
            X = X[None]
        starts = np.broadcast_to(np.asarray(start_index), (X.shape[0],))
        pred = self.net_.predict(X, starts)
        return pred[0] if single else pred

    def score(self, X, y, start_index=0):
        """Negative MSE, for ecosystem compatibility."""
        pred = self.predict(X, start_index=start_index)
        return -float(np.mean((pred - np.asarray(y)) ** 2))


class FreqCycleForecaster(_ForecasterBase):
    """Single-scale forecaster: learnable cycle decomposition plus segmented
    frequency-domain residual learning."""

    def __init__(self, lookback=96, horizon=96, cycle_len=24, seg_len=6,
                 seg_stride=6, seg_window="rect", ffn_hidden=512,
                 ffn_linear_only=False, inst_norm=True, variant="full",
                 lpf_cutoff=None, mov_kernel=25, seg_scalar_weights=False,
                 lr=0.01, batch_size=256, epochs=30, seed=1):
        self.lookback = lookback
        self.horizon = horizon
        self.cycle_len = cycle_len
        self.seg_len = seg_len
        self.seg_stride = seg_stride
        self.seg_window = seg_window
        self.ffn_hidden = ffn_hidden
        self.ffn_linear_only = ffn_linear_only
        self.inst_norm = inst_norm
        self.variant = variant
        self.lpf_cutoff = lpf_cutoff
        self.mov_kernel = mov_kernel
        self.seg_scalar_weights = seg_scalar_weights
        self.lr = lr
        self.batch_size = batch_size
        self.epochs = epochs
        self.seed = seed

    def _input_lookback(self) -> int:
        return self.lookback

    def model_config(self, channels: int) -> ModelConfig:
        return ModelConfig(
            lookback=self.lookback, horizon=self.horizon, channels=channels,
            cycle_len=self.cycle_len, seg_len=self.seg_len,
            seg_stride=self.seg_stride, seg_window=self.seg_window,
            ffn_hidden=self.ffn_hidden, ffn_linear_only=self.ffn_linear_only,
            inst_norm=self.inst_norm, variant=self.variant,
            lpf_cutoff=self.lpf_cutoff, mov_kernel=self.mov_kernel,
            seg_scalar_weights=self.seg_scalar_weights,
        )

    def _build_net(self, channels: int) -> FreqCycleNet:
        return FreqCycleNet(self.model_config(channels), seed=self.seed)


class MFreqCycleForecaster(_ForecasterBase):
    """Two-scale forecaster: the base model on the recent lookback fused with
    a pooled long-lookback branch."""

    def __init__(self, lookback=96, horizon=96, cycle_len=24,
                 weekly_lookback=168, pool_kernel=24, weekly_cycle_len=7,
                 weekly_seg_len=None, weekly_seg_stride=None,
                 seg_len=6, seg_stride=6, seg_window="rect", ffn_hidden=512,
                 ffn_linear_only=False, inst_norm=True,
                 lr=0.01, batch_size=256, epochs=30, seed=1):
        self.lookback = lookback
        self.horizon = horizon
        self.cycle_len = cycle_len
        self.weekly_lookback = weekly_lookback
        self.pool_kernel = pool_kernel
        self.weekly_cycle_len = weekly_cycle_len
        self.weekly_seg_len = weekly_seg_len
        self.weekly_seg_stride = weekly_seg_stride
        self.seg_len = seg_len
        self.seg_stride = seg_stride
        self.seg_window = seg_window
        self.ffn_hidden = ffn_hidden
        self.ffn_linear_only = ffn_linear_only
        self.inst_norm = inst_norm
        self.lr = lr
        self.batch_size = batch_size
        self.epochs = epochs
        self.seed = seed

    def _input_lookback(self) -> int:
        return self.weekly_lookback

    def model_config(self, channels: int) -> MultiScaleConfig:
        base = ModelConfig(
            lookback=self.lookback, horizon=self.horizon, channels=channels,
            cycle_len=self.cycle_len, seg_len=self.seg_len,
            seg_stride=self.seg_stride, seg_window=self.seg_window,
            ffn_hidden=self.ffn_hidden, ffn_linear_only=self.ffn_linear_only,
            inst_norm=self.inst_norm, variant="full",
        )
        pooled = self.weekly_lookback // self.pool_kernel
        # Default to one full-length segment at the coarse scale.
        wl = self.weekly_seg_len if self.weekly_seg_len is not None else pooled
        ws = self.weekly_seg_stride if self.weekly_seg_stride is not None else wl
        weekly = BranchConfig(
            lookback=self.weekly_lookback, cycle_len=self.weekly_cycle_len,
            pool_kernel=self.pool_kernel, seg=SegmentConfig(wl, ws, "rect"),
        )
        return MultiScaleConfig(base=base, weekly=weekly,
                                weekly_ffn_hidden=self.ffn_hidden,
                                weekly_ffn_linear_only=self.ffn_linear_only)

    def _build_net(self, channels: int) -> MFreqCycleNet:
        return MFreqCycleNet(self.model_config(channels), seed=self.seed)
