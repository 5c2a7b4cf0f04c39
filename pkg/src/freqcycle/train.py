"""Adam optimization, the training loop with best-validation checkpointing,
metric evaluation, and the spectrum / efficiency reports."""

from __future__ import annotations

import time
import tracemalloc
from dataclasses import dataclass, field

import numpy as np

from .autodiff import Parameter, Tape
from . import autodiff as ad
from .data import WindowBatch
from .fecf import replicate
from .model import FreqCycleNet, MFreqCycleNet, parameter_count
from .sfpl import segment_mask


class Adam:
    """Standard bias-corrected Adam over the engine's parameters."""

    def __init__(self, params: list[Parameter], lr: float,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.params = params
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.step_count = 0
        # Complex parameters are optimized as independent real component
        # pairs through float views.
        self.m = [np.zeros_like(self._view(p.value)) for p in params]
        self.v = [np.zeros_like(self._view(p.value)) for p in params]

    @staticmethod
    def _view(a: np.ndarray) -> np.ndarray:
        return a.view(np.float64) if a.dtype.kind == "c" else a

    def step(self) -> None:
        self.step_count += 1
        t = self.step_count
        for i, p in enumerate(self.params):
            g = self._view(np.ascontiguousarray(p.grad))
            if not np.all(np.isfinite(g)):
                raise FloatingPointError(f"non-finite gradient for parameter {p.name!r}")
            self.m[i] = self.beta1 * self.m[i] + (1 - self.beta1) * g
            self.v[i] = self.beta2 * self.v[i] + (1 - self.beta2) * g * g
            m_hat = self.m[i] / (1 - self.beta1**t)
            v_hat = self.v[i] / (1 - self.beta2**t)
            self._view(p.value)[...] -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)

    def zero_grad(self) -> None:
        for p in self.params:
            p.zero_grad()


@dataclass
class Metrics:
    mse: float
    mae: float

    def to_dict(self) -> dict:
        return {"mse": self.mse, "mae": self.mae}


@dataclass
class TrainConfig:
    lr: float = 0.01
    batch_size: int = 256
    epochs: int = 30
    seed: int = 1


@dataclass
class History:
    train_mse: list[float] = field(default_factory=list)
    val_mse: list[float] = field(default_factory=list)
    best_epoch: int = -1


def _batches(n: int, batch_size: int, rng: np.random.Generator):
    order = rng.permutation(n)
    for lo in range(0, n, batch_size):
        yield order[lo : lo + batch_size]


def _loss_batch(net, x, y, starts) -> tuple[Tape, "ad.Var"]:
    tape = Tape()
    pred = net.forward(tape, x, starts)
    loss = ad.mean(ad.square(ad.sub(pred, tape.constant(y))))
    return tape, loss


def _snapshot(net) -> list[np.ndarray]:
    return [p.value.copy() for p in net.parameters()]


def _restore(net, snapshot: list[np.ndarray]) -> None:
    for p, v in zip(net.parameters(), snapshot):
        p.value = v.copy()


def evaluate(net, windows: WindowBatch, batch_size: int = 512) -> Metrics:
    """MSE/MAE over every (window, step, channel) triple of a split."""
    if len(windows) == 0:
        raise ValueError("evaluate: empty window set")
    se = 0.0
    ae = 0.0
    count = 0
    for lo in range(0, len(windows), batch_size):
        x = windows.lookback[lo : lo + batch_size]
        y = windows.target[lo : lo + batch_size]
        s = windows.start[lo : lo + batch_size]
        pred = net.predict(x, s)
        err = pred - y
        se += float(np.sum(err * err))
        ae += float(np.sum(np.abs(err)))
        count += err.size
    return Metrics(mse=se / count, mae=ae / count)


def train(net, train_windows: WindowBatch, val_windows: WindowBatch,
          cfg: TrainConfig) -> History:
    """Optimize with Adam for a fixed number of epochs and restore the
    checkpoint with the lowest validation MSE."""
    opt = Adam(net.parameters(), lr=cfg.lr)
    rng = np.random.default_rng(cfg.seed)
    history = History()
    best_val = np.inf
    best_state = _snapshot(net)
    n = len(train_windows)
    for epoch in range(cfg.epochs):
        epoch_se = 0.0
        epoch_count = 0
        for idx in _batches(n, cfg.batch_size, rng):
            x = train_windows.lookback[idx]
            y = train_windows.target[idx]
            s = train_windows.start[idx]
            opt.zero_grad()
            tape, loss = _loss_batch(net, x, y, s)
            if not np.isfinite(loss.value):
                raise FloatingPointError(
                    f"non-finite training loss at epoch {epoch}, batch offset {epoch_count}"
                )
            tape.backward(loss)
            opt.step()
            epoch_se += float(loss.value) * y.size
            epoch_count += y.size
        history.train_mse.append(epoch_se / epoch_count)
        val = evaluate(net, val_windows)
        history.val_mse.append(val.mse)
        if val.mse < best_val:
            best_val = val.mse
            best_state = _snapshot(net)
            history.best_epoch = epoch
    _restore(net, best_state)
    return history


def spectrum_report(net: FreqCycleNet, windows: WindowBatch) -> np.ndarray:
    """Mean amplitude per frequency bin of the residual spectrum before and
    after the segmented merge, averaged over windows and channels.

    Returns rows of (bin, mean_amp_before, mean_amp_after, ratio).
    """
    cfg = net.cfg
    if net.sfpl is None:
        raise ValueError("spectrum report requires a variant with the segmented pipeline")
    mask = segment_mask(cfg.lookback, cfg.segment_config())
    theta = net.sfpl.theta.value
    e = np.exp(theta - theta.max(axis=0, keepdims=True))
    w = e / e.sum(axis=0, keepdims=True)
    if w.ndim == 2:
        w = w[:, :, None] if w.shape[1] > 1 else np.broadcast_to(w[:, :, None], (w.shape[0], cfg.bins, 1))

    before = np.zeros(cfg.bins)
    after = np.zeros(cfg.bins)
    total = 0
    for lo in range(0, len(windows), 512):
        x = windows.lookback[lo : lo + 512]
        s = windows.start[lo : lo + 512]
        if cfg.inst_norm:
            from .data import instance_norm

            x, _ = instance_norm(x)
        if net.cycle is not None:
            phases = s % cfg.cycle_len
            c = np.stack([replicate(net.cycle.value, int(p), cfg.lookback) for p in phases])
            r = x - c
        else:
            r = x
        before += np.abs(np.fft.rfft(r, axis=1)).sum(axis=(0, 2))
        spectra = np.fft.rfft(mask[None, :, :, None] * r[:, None, :, :], axis=2)
        f = (spectra * w[None]).sum(axis=1)
        after += np.abs(f).sum(axis=(0, 2))
        total += x.shape[0] * cfg.channels
    before /= total
    after /= total
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(before > 0, after / np.maximum(before, 1e-300), 0.0)
    return np.column_stack([np.arange(cfg.bins), before, after, ratio])


def bench(net, windows: WindowBatch, cfg: TrainConfig | None = None) -> dict:
    """Parameter count plus measured peak allocation and wall-clock for one
    training epoch; the measurements are machine-relative."""
    cfg = cfg or TrainConfig(epochs=1)
    opt = Adam(net.parameters(), lr=cfg.lr)
    rng = np.random.default_rng(cfg.seed)
    tracemalloc.start()
    t0 = time.perf_counter()
    for idx in _batches(len(windows), cfg.batch_size, rng):
        opt.zero_grad()
        tape, loss = _loss_batch(
            net, windows.lookback[idx], windows.target[idx], windows.start[idx]
        )
        tape.backward(loss)
        opt.step()
    secs = time.perf_counter() - t0
    _, peak = tracemalloc.get_traced_memory()
    tracemalloc.stop()
    return {
        "params_count": parameter_count(net),
        "peak_bytes": int(peak),
        "secs_per_epoch": secs,
    }
