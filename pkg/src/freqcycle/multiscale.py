"""Two-branch multi-scale extension: a base-cycle branch on the recent
lookback and a pooled weekly-cycle branch on the long lookback, joined by a
softmax prediction fusion."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .autodiff import Parameter
from .sfpl import SegmentConfig


def avg_pool(x: np.ndarray, k: int) -> np.ndarray:
    """Non-overlapping averages along the leading axis."""
    n = x.shape[0]
    if k < 1 or n % k != 0:
        raise ValueError(f"avg_pool: kernel {k} does not divide length {n}")
    return x.reshape(n // k, k, *x.shape[1:]).mean(axis=1)


@dataclass
class BranchConfig:
    """Shape of one scale of the multi-scale model."""

    lookback: int
    cycle_len: int
    pool_kernel: int = 1
    seg: SegmentConfig = field(default_factory=lambda: SegmentConfig(6, 6, "rect"))

    def validate(self) -> None:
        if self.pool_kernel < 1 or self.lookback % self.pool_kernel != 0:
            raise ValueError(
                f"pool kernel {self.pool_kernel} does not divide lookback {self.lookback}"
            )
        self.seg.validate(self.lookback // self.pool_kernel)

    @property
    def pooled_lookback(self) -> int:
        return self.lookback // self.pool_kernel

    def pooled_horizon(self, horizon: int) -> int:
        return -(-horizon // self.pool_kernel)  # ceil


def make_fusion_weights(name: str = "fusion") -> Parameter:
    """Two scalars, zero-initialized: an even split at step 0."""
    return Parameter(name, np.zeros(2))


def fusion_coefficients(theta: np.ndarray) -> np.ndarray:
    e = np.exp(theta - theta.max())
    return e / e.sum()


def fuse(pred0: np.ndarray, pred1: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """Convex combination of the two branch predictions."""
    if pred0.shape != pred1.shape:
        raise ValueError(f"fuse: shape mismatch {pred0.shape} vs {pred1.shape}")
    w = fusion_coefficients(theta)
    return w[0] * pred0 + w[1] * pred1


def upsample_init(coarse_steps: int, fine_steps: int, kernel: int) -> np.ndarray:
    """(Hc, H) linear map initialized to nearest-neighbor repetition: each
    coarse step is copied to the k fine steps it covers."""
    u = np.zeros((coarse_steps, fine_steps))
    for t in range(fine_steps):
        u[min(t // kernel, coarse_steps - 1), t] = 1.0
    return u
