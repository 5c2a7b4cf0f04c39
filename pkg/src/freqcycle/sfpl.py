"""Segmented frequency-domain pattern learning.

The lookback residual is cut into windowed sub-segments that stay at their
original temporal offsets inside a zero-padded length-L frame, each segment
is transformed, the per-segment spectra are softmax-reweighted and summed,
and the merged signal is inverted and projected to the horizon by a shared
feed-forward layer.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .autodiff import Parameter
from .spectral import make_window


@dataclass
class SegmentConfig:
    win_len: int
    stride: int
    window: str = "rect"

    def validate(self, lookback: int) -> None:
        if not 1 <= self.win_len <= lookback:
            raise ValueError(f"segment length {self.win_len} not in [1, {lookback}]")
        if self.stride < 1:
            raise ValueError("segment stride must be >= 1")
        if (lookback - self.win_len) % self.stride != 0:
            raise ValueError(
                f"segments do not tile the lookback: L={lookback}, "
                f"w_L={self.win_len}, w_S={self.stride}"
            )
        if self.window != "rect" and self.win_len < 3:
            # The N-1 denominator in the window formulas degenerates below 3.
            raise ValueError(f"{self.window} window needs segment length >= 3")

    def segment_count(self, lookback: int) -> int:
        return (lookback - self.win_len) // self.stride + 1


def segment_mask(lookback: int, cfg: SegmentConfig) -> np.ndarray:
    """(s, L) matrix of window coefficients placed at each segment's offset;
    multiplying the residual by row i yields the i-th padded segment."""
    cfg.validate(lookback)
    s = cfg.segment_count(lookback)
    coeff = make_window(cfg.window, cfg.win_len)
    mask = np.zeros((s, lookback))
    for i in range(s):
        mask[i, i * cfg.stride : i * cfg.stride + cfg.win_len] = coeff
    return mask


def segment_and_pad(r: np.ndarray, cfg: SegmentConfig) -> np.ndarray:
    """Stack windowed segments into (s, L, D); zeros pad both ends of each."""
    mask = segment_mask(r.shape[0], cfg)
    return mask[:, :, None] * r[None, :, :]


def segment_spectra(segments: np.ndarray) -> np.ndarray:
    """Per-segment half spectra along the temporal axis: (s, L//2+1, D)."""
    return np.fft.rfft(segments, axis=1)


def make_segment_weights(
    segments: int, bins: int, scalar: bool = False, per_channel_dims: int | None = None,
    name: str = "segment_weights",
) -> Parameter:
    """Zero-initialized pre-softmax weights: uniform merging at step 0."""
    if scalar:
        shape: tuple = (segments, 1)
    elif per_channel_dims is not None:
        shape = (segments, bins, per_channel_dims)
    else:
        shape = (segments, bins)
    return Parameter(name, np.zeros(shape))


def merge_spectra(f: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """Softmax-weighted sum over the segment axis, per frequency bin."""
    if theta.shape[0] != f.shape[0]:
        raise ValueError(
            f"merge_spectra: {theta.shape[0]} weight rows for {f.shape[0]} segments"
        )
    if theta.ndim == 2 and theta.shape[1] not in (1, f.shape[1]):
        raise ValueError(
            f"merge_spectra: weight shape {theta.shape} does not match spectra {f.shape}"
        )
    e = np.exp(theta - theta.max(axis=0, keepdims=True))
    w = e / e.sum(axis=0, keepdims=True)
    if w.ndim == 2:
        w = w[:, :, None] if w.shape[1] > 1 else w[:, :, None]
    return (f * np.broadcast_to(w, (f.shape[0],) + f.shape[1:])).sum(axis=0)


@dataclass
class FfnParams:
    """Shared-across-channels projection from the lookback to the horizon."""

    w1: Parameter
    b1: Parameter
    w2: Parameter | None
    b2: Parameter | None

    @property
    def linear_only(self) -> bool:
        return self.w2 is None

    @classmethod
    def create(
        cls, lookback: int, horizon: int, hidden: int, rng: np.random.Generator,
        linear_only: bool = False, prefix: str = "ffn",
    ) -> "FfnParams":
        def uniform(shape, fan_in):
            bound = 1.0 / np.sqrt(fan_in)
            return rng.uniform(-bound, bound, size=shape)

        if linear_only:
            w1 = Parameter(f"{prefix}.w", uniform((lookback, horizon), lookback))
            b1 = Parameter(f"{prefix}.b", np.zeros(horizon))
            return cls(w1, b1, None, None)
        w1 = Parameter(f"{prefix}.w1", uniform((lookback, hidden), lookback))
        b1 = Parameter(f"{prefix}.b1", np.zeros(hidden))
        w2 = Parameter(f"{prefix}.w2", uniform((hidden, horizon), hidden))
        b2 = Parameter(f"{prefix}.b2", np.zeros(horizon))
        return cls(w1, b1, w2, b2)

    def parameters(self) -> list[Parameter]:
        out = [self.w1, self.b1]
        if self.w2 is not None:
            out += [self.w2, self.b2]
        return out


def ffn_project(u: np.ndarray, params: FfnParams) -> np.ndarray:
    """(L, D) -> (H, D), channels processed independently with shared weights."""
    if u.shape[0] != params.w1.value.shape[0]:
        raise ValueError(
            f"ffn_project: input length {u.shape[0]} does not match "
            f"weight rows {params.w1.value.shape[0]}"
        )
    h = params.w1.value.T @ u + params.b1.value[:, None]
    if params.linear_only:
        return h
    return params.w2.value.T @ np.maximum(h, 0.0) + params.b2.value[:, None]


def sfpl_forward(
    r: np.ndarray, cfg: SegmentConfig, theta: np.ndarray, ffn: FfnParams
) -> np.ndarray:
    """Reference forward pass: segment, transform, merge, invert, project."""
    lookback = r.shape[0]
    f = merge_spectra(segment_spectra(segment_and_pad(r, cfg)), theta)
    u = np.fft.irfft(f, n=lookback, axis=0)
    return ffn_project(u, ffn)
