"""Filter-enhanced cycle forecasting: a learnable shared periodic basis,
periodic replication, and adaptive spectral filtering of the forecast-side
cycle.

The functions here are the pure (non-differentiable) forms of the
operations; the training graph in :mod:`freqcycle.model` mirrors them with
tape ops and is checked against these references in the tests.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .autodiff import Parameter


@dataclass
class CycleBasis:
    """One full period of the shared cyclical pattern, (W, D), zero-initialized."""

    q: Parameter
    period: int
    channels: int

    @classmethod
    def create(cls, period: int, channels: int, name: str = "cycle_basis") -> "CycleBasis":
        if period < 1:
            raise ValueError("cycle period must be >= 1")
        return cls(Parameter(name, np.zeros((period, channels))), period, channels)


def cycle_indices(phase: int | np.ndarray, n: int, period: int) -> np.ndarray:
    """Modular row indices into the basis for a window of length n."""
    phase = np.asarray(phase)
    return (phase[..., None] + np.arange(n)) % period


def replicate(basis: np.ndarray, phase: int, n: int) -> np.ndarray:
    """Tile the (W, D) basis from the given phase out to length n."""
    if n < 1:
        raise ValueError("replication length must be >= 1")
    period = basis.shape[0]
    return basis[(phase + np.arange(n)) % period]


def make_cycle_filter(horizon: int, channels: int, name: str = "cycle_filter") -> Parameter:
    """Per-bin complex filter for the forecast-side cycle, identity at init."""
    bins = horizon // 2 + 1
    return Parameter(name, np.ones((bins, channels), dtype=np.complex128))


def filter_cycle(c_future: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """Shape the forecast cycle in the frequency domain: IFFT(FFT(c) * theta)."""
    h = c_future.shape[0]
    if theta.shape[0] != h // 2 + 1 or theta.shape[1] != c_future.shape[1]:
        raise ValueError(
            f"filter_cycle: filter shape {theta.shape} does not match cycle shape {c_future.shape}"
        )
    return np.fft.irfft(np.fft.rfft(c_future, axis=0) * theta, n=h, axis=0)


def extract_residual(x: np.ndarray, c_hist: np.ndarray) -> np.ndarray:
    if x.shape != c_hist.shape:
        raise ValueError(f"extract_residual: shape mismatch {x.shape} vs {c_hist.shape}")
    return x - c_hist


def reconstruct(r_pred: np.ndarray, c_filtered: np.ndarray) -> np.ndarray:
    if r_pred.shape != c_filtered.shape:
        raise ValueError(f"reconstruct: shape mismatch {r_pred.shape} vs {c_filtered.shape}")
    return r_pred + c_filtered


def default_cycle_len(sample_interval_minutes: int) -> int:
    """Daily cycle length for common sampling intervals."""
    if 24 * 60 % sample_interval_minutes != 0:
        raise ValueError(f"no daily cycle for a {sample_interval_minutes}-minute interval")
    return 24 * 60 // sample_interval_minutes
