"""Pure FFT kernels, circular convolution, and analysis windows.

Convention: the forward transform is unnormalized and the inverse carries
the 1/N factor.  Real inputs keep only the floor(N/2)+1 nonredundant bins.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

WINDOW_KINDS = ("rect", "hann", "hamming")


@dataclass
class Spectrum:
    """Half-spectrum of a real signal plus the length needed to invert it."""

    bins: np.ndarray
    origin_length: int


def rfft(x: np.ndarray, axis: int = 0) -> Spectrum:
    x = np.asarray(x, dtype=np.float64)
    if x.shape[axis] < 1:
        raise ValueError("rfft: empty input")
    return Spectrum(np.fft.rfft(x, axis=axis), x.shape[axis])


def irfft(spectrum: Spectrum, n: int, axis: int = 0) -> np.ndarray:
    if spectrum.origin_length != n:
        raise ValueError(
            f"irfft: requested length {n} does not match spectrum origin length "
            f"{spectrum.origin_length}"
        )
    if spectrum.bins.shape[axis] != n // 2 + 1:
        raise ValueError(
            f"irfft: {spectrum.bins.shape[axis]} bins inconsistent with length {n}"
        )
    return np.fft.irfft(spectrum.bins, n=n, axis=axis)


def circular_convolve(x: np.ndarray, h: np.ndarray) -> np.ndarray:
    """y[n] = sum_m x[m] * h[(n - m) mod N], computed through the spectrum."""
    x = np.asarray(x, dtype=np.float64)
    h = np.asarray(h, dtype=np.float64)
    if x.shape != h.shape:
        raise ValueError(f"circular_convolve: length mismatch {x.shape} vs {h.shape}")
    n = x.shape[0]
    return np.fft.irfft(np.fft.rfft(x) * np.fft.rfft(h), n=n)


def make_window(kind: str, length: int) -> np.ndarray:
    """Analysis window coefficients; all kinds return [1] for length 1."""
    if kind not in WINDOW_KINDS:
        raise ValueError(f"unknown window kind {kind!r}; expected one of {WINDOW_KINDS}")
    if length < 1:
        raise ValueError("window length must be >= 1")
    if kind == "rect":
        return np.ones(length)
    if length == 1:
        return np.ones(1)
    n = np.arange(length)
    phase = 2 * np.pi * n / (length - 1)
    if kind == "hann":
        return 0.5 * (1 - np.cos(phase))
    return 0.54 - 0.46 * np.cos(phase)
