"""Dataset ingestion, chronological splitting, standardization, and sliding
window sampling for benchmark CSV files."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np


@dataclass
class Dataset:
    name: str
    values: np.ndarray  # (T, D)
    sample_interval: int = 60  # minutes
    origin_index: int = 0

    @property
    def length(self) -> int:
        return self.values.shape[0]

    @property
    def channels(self) -> int:
        return self.values.shape[1]


# Split ratios per benchmark family; ETT and Traffic use 6:2:2, the rest 7:1:2.
RATIO_622 = ("etth1", "etth2", "ettm1", "ettm2", "traffic")


def default_ratios(name: str) -> tuple[float, float, float]:
    return (0.6, 0.2, 0.2) if name.lower() in RATIO_622 else (0.7, 0.1, 0.2)


def default_interval(name: str) -> int:
    n = name.lower()
    if n.startswith("ettm"):
        return 15
    if n == "weather":
        return 10
    return 60


def load_csv(path: str | Path, name: str | None = None) -> Dataset:
    """Read a benchmark CSV: header row, timestamp first column, numeric
    channels after it."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"dataset file not found: {path}")
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or len(header) < 2:
            raise ValueError(f"{path}: need a header with a timestamp and >= 1 channel")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                rows.append([float(cell) for cell in row[1:]])
            except ValueError as exc:
                bad = next(i for i, c in enumerate(row[1:], 2) if not _is_float(c))
                raise ValueError(f"{path}: non-numeric cell at row {lineno}, column {bad}") from exc
            if len(row) != len(header):
                raise ValueError(f"{path}: row {lineno} has {len(row)} cells, expected {len(header)}")
    if not rows:
        raise ValueError(f"{path}: no data rows")
    values = np.asarray(rows, dtype=np.float64)
    if not np.all(np.isfinite(values)):
        bad_rows = np.unique(np.nonzero(~np.isfinite(values))[0]) + 2
        raise ValueError(f"{path}: non-finite values at rows {bad_rows[:10].tolist()}")
    name = name or path.stem
    return Dataset(name=name, values=values, sample_interval=default_interval(name))


def _is_float(cell: str) -> bool:
    try:
        float(cell)
        return True
    except ValueError:
        return False


@dataclass
class SplitSpec:
    train: float
    val: float
    test: float

    def __post_init__(self):
        if abs(self.train + self.val + self.test - 1.0) > 1e-9:
            raise ValueError("split ratios must sum to 1")


def split(total: int, spec: SplitSpec, lookback: int,
          horizon: int | None = None) -> dict[str, tuple[int, int]]:
    """Chronological (start, end) row ranges.  Val and test are extended
    backward by the lookback so every window whose target lies in the split
    has its history available.  Passing ``horizon`` additionally checks that
    every range can hold at least one full window."""
    n_train = int(total * spec.train)
    n_val = int(total * spec.val)
    ranges = {
        "train": (0, n_train),
        "val": (n_train - lookback, n_train + n_val),
        "test": (n_train + n_val - lookback, total),
    }
    ranges = {k: (max(0, a), b) for k, (a, b) in ranges.items()}
    if horizon is not None:
        for key, (lo, hi) in ranges.items():
            if hi - lo < lookback + horizon:
                raise ValueError(
                    f"{key} split of {hi - lo} rows too short for lookback "
                    f"{lookback} + horizon {horizon}"
                )
    return ranges


class Scaler:
    """Per-channel standardization fit on the train split only."""

    def __init__(self):
        self.mean: np.ndarray | None = None
        self.std: np.ndarray | None = None

    def fit(self, values: np.ndarray) -> "Scaler":
        self.mean = values.mean(axis=0)
        self.std = values.std(axis=0)
        flat = np.nonzero(self.std <= 0)[0]
        if flat.size:
            raise ValueError(f"constant channel(s) {flat.tolist()}: cannot standardize")
        return self

    def transform(self, values: np.ndarray) -> np.ndarray:
        return (values - self.mean) / self.std

    def inverse(self, values: np.ndarray) -> np.ndarray:
        return values * self.std + self.mean


@dataclass
class WindowBatch:
    """Sliding windows over one split: lookbacks, adjacent targets, and the
    absolute index of each window's first lookback step."""

    lookback: np.ndarray  # (n, L, D)
    target: np.ndarray  # (n, H, D)
    start: np.ndarray  # (n,) absolute sample index of the first lookback row

    def __len__(self) -> int:
        return self.lookback.shape[0]

    def phases(self, period: int) -> np.ndarray:
        return self.start % period


def sample_windows(
    values: np.ndarray,
    row_range: tuple[int, int],
    lookback: int,
    horizon: int,
    stride: int = 1,
    origin_index: int = 0,
) -> WindowBatch:
    lo, hi = row_range
    n = hi - lo - lookback - horizon + 1
    if n < 1:
        raise ValueError(
            f"range of {hi - lo} rows too short for lookback {lookback} + horizon {horizon}"
        )
    starts = np.arange(0, n, stride) + lo
    look = np.stack([values[s : s + lookback] for s in starts])
    targ = np.stack([values[s + lookback : s + lookback + horizon] for s in starts])
    return WindowBatch(look, targ, starts + origin_index)


def instance_norm(window: np.ndarray, eps: float = 1e-8):
    """Normalize a lookback by its own per-channel statistics; returns the
    normalized window and the stats needed to undo it on a prediction.

    Accepts (L, D) or a batch (B, L, D); stats are taken over the time axis.
    """
    axis = window.ndim - 2
    mean = window.mean(axis=axis, keepdims=True)
    std = window.std(axis=axis, keepdims=True)
    std = np.maximum(std, eps)
    return (window - mean) / std, (mean, std)


def instance_denorm(pred: np.ndarray, stats) -> np.ndarray:
    mean, std = stats
    return pred * std + mean
