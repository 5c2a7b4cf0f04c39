"""The forecasting networks: the single-scale cycle+spectral model, its
ablation variants, and the two-branch multi-scale extension.

Forward passes are built on the reverse-mode tape so the training loop gets
exact gradients for every learnable parameter.
"""

from __future__ import annotations

from dataclasses import dataclass, field, asdict

import numpy as np

from . import autodiff as ad
from .autodiff import Parameter, Tape, Var
from .data import instance_norm
from .fecf import cycle_indices, make_cycle_filter
from .multiscale import BranchConfig, upsample_init
from .sfpl import FfnParams, SegmentConfig, make_segment_weights, segment_mask

VARIANTS = ("full", "no_fecf", "two_mlp", "lpf", "plain_filter", "mov_std")


@dataclass
class ModelConfig:
    lookback: int
    horizon: int
    channels: int
    cycle_len: int = 24
    seg_len: int = 6
    seg_stride: int = 6
    seg_window: str = "rect"
    ffn_hidden: int = 512
    ffn_linear_only: bool = False
    inst_norm: bool = True
    variant: str = "full"
    lpf_cutoff: int | None = None
    mov_kernel: int = 25
    seg_scalar_weights: bool = False
    seg_per_channel: bool = False
    post_merge_filter: bool = False

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}; expected one of {VARIANTS}")
        bins = self.lookback // 2 + 1
        if self.variant == "lpf":
            cutoff = self.lpf_cutoff if self.lpf_cutoff is not None else bins // 4
            if not 1 <= cutoff <= bins:
                raise ValueError(f"lpf cutoff {cutoff} not in [1, {bins}]")
            self.lpf_cutoff = cutoff
        if self.variant == "mov_std" and self.mov_kernel % 2 == 0:
            raise ValueError(f"moving-average kernel must be odd, got {self.mov_kernel}")
        if self.variant in ("full", "no_fecf", "mov_std"):
            self.segment_config().validate(self.lookback)

    def segment_config(self) -> SegmentConfig:
        return SegmentConfig(self.seg_len, self.seg_stride, self.seg_window)

    @property
    def bins(self) -> int:
        return self.lookback // 2 + 1

    def to_dict(self) -> dict:
        return asdict(self)


def moving_average(x: np.ndarray, kernel: int) -> np.ndarray:
    """Centered moving average along the time axis with reflective padding;
    x is (..., T, D)."""
    pad = kernel // 2
    axis = x.ndim - 2
    pad_width = [(0, 0)] * x.ndim
    pad_width[axis] = (pad, pad)
    padded = np.pad(x, pad_width, mode="reflect")
    c = np.cumsum(padded, axis=axis)
    zero = np.zeros_like(np.take(c, [0], axis=axis))
    c = np.concatenate([zero, c], axis=axis)
    hi = np.take(c, np.arange(kernel, kernel + x.shape[axis]), axis=axis)
    lo = np.take(c, np.arange(0, x.shape[axis]), axis=axis)
    return (hi - lo) / kernel


def _bias(tape: Tape, p: Parameter) -> Var:
    # (M,) bias broadcast over batch and channel axes of a (B, M, D) tensor.
    return ad.reshape(tape.leaf(p), (1, p.value.shape[0], 1))


class _SfplBlock:
    """Spectral merge + feed-forward projection, shared by all variants that
    keep the segmentation pipeline."""

    def __init__(self, cfg: ModelConfig, horizon: int, rng: np.random.Generator,
                 prefix: str = ""):
        self.cfg = cfg
        self.horizon = horizon
        self.mask = segment_mask(cfg.lookback, cfg.segment_config())
        self.segments = self.mask.shape[0]
        self.theta = make_segment_weights(
            self.segments, cfg.bins, scalar=cfg.seg_scalar_weights,
            per_channel_dims=cfg.channels if cfg.seg_per_channel else None,
            name=f"{prefix}segment_weights",
        )
        self.post_filter = None
        if cfg.post_merge_filter:
            self.post_filter = Parameter(
                f"{prefix}post_merge_filter",
                np.ones((cfg.bins, cfg.channels), dtype=np.complex128),
            )
        self.ffn = FfnParams.create(
            cfg.lookback, horizon, cfg.ffn_hidden, rng,
            linear_only=cfg.ffn_linear_only, prefix=f"{prefix}ffn",
        )
        # Exact identity: a single full-length rect segment makes the
        # transform pair a no-op, so it is skipped (this also makes the
        # two_mlp collapse bit-exact).
        self._identity = (
            self.segments == 1
            and cfg.seg_window == "rect"
            and cfg.seg_len == cfg.lookback
            and not cfg.post_merge_filter
        )

    def parameters(self) -> list[Parameter]:
        out = [self.theta]
        if self.post_filter is not None:
            out.append(self.post_filter)
        return out + self.ffn.parameters()

    def merged_spectrum(self, tape: Tape, r: Var) -> Var:
        """Softmax-weighted sum of per-segment spectra, (B, K, D) complex."""
        b = r.value.shape[0]
        r4 = ad.reshape(r, (b, 1, self.cfg.lookback, self.cfg.channels))
        segs = ad.mul(r4, tape.constant(self.mask[None, :, :, None]))
        spectra = ad.rfft(segs, axis=2)
        theta = tape.leaf(self.theta)
        weights = ad.softmax(theta, axis=0)
        if self.theta.value.ndim == 2:
            shape = (1, self.segments, self.theta.value.shape[1], 1)
        else:
            shape = (1,) + self.theta.value.shape
        weighted = ad.mul(spectra, ad.reshape(weights, shape))
        f = ad.sum_axis(weighted, axis=1)
        if self.post_filter is not None:
            f = ad.mul(f, ad.reshape(tape.leaf(self.post_filter),
                                     (1, self.cfg.bins, self.cfg.channels)))
        return f

    def project(self, tape: Tape, u: Var) -> Var:
        h = ad.add(ad.project_time(u, tape.leaf(self.ffn.w1)), _bias(tape, self.ffn.b1))
        if self.ffn.linear_only:
            return h
        return ad.add(ad.project_time(ad.relu(h), tape.leaf(self.ffn.w2)),
                      _bias(tape, self.ffn.b2))

    def forward(self, tape: Tape, r: Var) -> Var:
        if self._identity:
            return self.project(tape, r)
        f = self.merged_spectrum(tape, r)
        u = ad.irfft(f, n=self.cfg.lookback, axis=1)
        return self.project(tape, u)


class FreqCycleNet:
    """Single-scale model: learnable cycle decomposition plus segmented
    spectral residual learning, with the benchmark ablations selectable
    through ``cfg.variant``."""

    def __init__(self, cfg: ModelConfig, seed: int = 1, prefix: str = ""):
        self.cfg = cfg
        self.rng = np.random.default_rng(seed)
        v = cfg.variant
        self.cycle = None
        self.cycle_filter = None
        self.trend_linear = None
        self.trend_bias = None
        self.plain_filter = None
        self.sfpl = None
        self.ffn_direct = None

        if v in ("full", "no_fecf", "mov_std"):
            self.sfpl = _SfplBlock(cfg, cfg.horizon, self.rng, prefix=prefix)
        else:
            # two_mlp / lpf / plain_filter keep the projection head only.
            self.ffn_direct = FfnParams.create(
                cfg.lookback, cfg.horizon, cfg.ffn_hidden, self.rng,
                linear_only=cfg.ffn_linear_only, prefix=f"{prefix}ffn",
            )
        if v in ("full", "two_mlp", "lpf", "plain_filter"):
            self.cycle = Parameter(f"{prefix}cycle_basis",
                                   np.zeros((cfg.cycle_len, cfg.channels)))
            self.cycle_filter = make_cycle_filter(cfg.horizon, cfg.channels,
                                                  name=f"{prefix}cycle_filter")
        if v == "plain_filter":
            self.plain_filter = Parameter(
                f"{prefix}plain_filter",
                np.ones((cfg.bins, cfg.channels), dtype=np.complex128),
            )
        if v == "mov_std":
            bound = 1.0 / np.sqrt(cfg.lookback)
            self.trend_linear = Parameter(
                f"{prefix}trend_linear",
                self.rng.uniform(-bound, bound, size=(cfg.lookback, cfg.horizon)),
            )
            self.trend_bias = Parameter(f"{prefix}trend_bias", np.zeros(cfg.horizon))

    def parameters(self) -> list[Parameter]:
        out: list[Parameter] = []
        for p in (self.cycle, self.cycle_filter, self.plain_filter,
                  self.trend_linear, self.trend_bias):
            if p is not None:
                out.append(p)
        if self.sfpl is not None:
            out += self.sfpl.parameters()
        if self.ffn_direct is not None:
            out += self.ffn_direct.parameters()
        return out

    # -- forward -----------------------------------------------------------

    def _ffn_direct_forward(self, tape: Tape, u: Var) -> Var:
        ffn = self.ffn_direct
        h = ad.add(ad.project_time(u, tape.leaf(ffn.w1)), _bias(tape, ffn.b1))
        if ffn.linear_only:
            return h
        return ad.add(ad.project_time(ad.relu(h), tape.leaf(ffn.w2)),
                      _bias(tape, ffn.b2))

    def _cycle_components(self, tape: Tape, phases: np.ndarray) -> tuple[Var, Var]:
        cfg = self.cfg
        q = tape.leaf(self.cycle)
        idx_hist = cycle_indices(phases, cfg.lookback, cfg.cycle_len)
        idx_fut = cycle_indices((phases + cfg.lookback) % cfg.cycle_len,
                                cfg.horizon, cfg.cycle_len)
        return ad.gather_rows(q, idx_hist), ad.gather_rows(q, idx_fut)

    def _filtered_cycle(self, tape: Tape, c_fut: Var) -> Var:
        cfg = self.cfg
        spec = ad.rfft(c_fut, axis=1)
        theta = ad.reshape(tape.leaf(self.cycle_filter),
                           (1, cfg.horizon // 2 + 1, cfg.channels))
        return ad.irfft(ad.mul(spec, theta), n=cfg.horizon, axis=1)

    def forward(self, tape: Tape, x: np.ndarray, starts: np.ndarray) -> Var:
        """Predict (B, H, D) from a standardized batch (B, L, D); ``starts``
        are the absolute sample indices of the first lookback steps."""
        cfg = self.cfg
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 3 or x.shape[1] != cfg.lookback or x.shape[2] != cfg.channels:
            raise ValueError(
                f"forward: expected (B, {cfg.lookback}, {cfg.channels}), got {x.shape}"
            )
        if cfg.inst_norm:
            xn, stats = instance_norm(x)
        else:
            xn, stats = x, None
        pred = self._forward_normalized(tape, xn, np.asarray(starts) % cfg.cycle_len)
        if stats is not None:
            pred = ad.add(ad.mul(pred, tape.constant(stats[1])), tape.constant(stats[0]))
        return pred

    def _forward_normalized(self, tape: Tape, xn: np.ndarray, phases: np.ndarray) -> Var:
        cfg = self.cfg
        v = cfg.variant
        xv = tape.constant(xn)

        if v == "no_fecf":
            return self.sfpl.forward(tape, xv)

        if v == "mov_std":
            trend = moving_average(xn, cfg.mov_kernel)
            residual = tape.constant(xn - trend)
            trend_pred = ad.add(
                ad.project_time(tape.constant(trend), tape.leaf(self.trend_linear)),
                _bias(tape, self.trend_bias),
            )
            return ad.add(self.sfpl.forward(tape, residual), trend_pred)

        c_hist, c_fut = self._cycle_components(tape, phases)
        r = ad.sub(xv, c_hist)

        if v == "full":
            r_pred = self.sfpl.forward(tape, r)
        elif v == "two_mlp":
            r_pred = self._ffn_direct_forward(tape, r)
        elif v == "lpf":
            spec = ad.rfft(r, axis=1)
            keep = np.zeros((1, cfg.bins, 1))
            keep[0, : cfg.lpf_cutoff, 0] = 1.0
            u = ad.irfft(ad.mul(spec, tape.constant(keep)), n=cfg.lookback, axis=1)
            r_pred = self._ffn_direct_forward(tape, u)
        else:  # plain_filter
            spec = ad.rfft(r, axis=1)
            theta = ad.reshape(tape.leaf(self.plain_filter), (1, cfg.bins, cfg.channels))
            u = ad.irfft(ad.mul(spec, theta), n=cfg.lookback, axis=1)
            r_pred = self._ffn_direct_forward(tape, u)

        return ad.add(r_pred, self._filtered_cycle(tape, c_fut))

    def predict(self, x: np.ndarray, starts: np.ndarray) -> np.ndarray:
        tape = Tape()
        return self.forward(tape, x, starts).value


@dataclass
class MultiScaleConfig:
    base: ModelConfig
    weekly: BranchConfig
    weekly_ffn_hidden: int = 512
    weekly_ffn_linear_only: bool = False

    def __post_init__(self):
        self.weekly.validate()
        if self.weekly.lookback < self.base.lookback:
            raise ValueError(
                f"long lookback {self.weekly.lookback} shorter than base "
                f"lookback {self.base.lookback}"
            )


class MFreqCycleNet:
    """Base branch on the most recent samples plus a pooled long-lookback
    branch, fused by a two-way softmax."""

    def __init__(self, cfg: MultiScaleConfig, seed: int = 1):
        self.cfg = cfg
        base_cfg = cfg.base
        self.base = FreqCycleNet(base_cfg, seed=seed, prefix="base.")
        rng = np.random.default_rng(seed + 1)

        w = cfg.weekly
        d = base_cfg.channels
        self.pooled_lookback = w.pooled_lookback
        self.coarse_horizon = w.pooled_horizon(base_cfg.horizon)
        weekly_cfg = ModelConfig(
            lookback=self.pooled_lookback,
            horizon=self.coarse_horizon,
            channels=d,
            cycle_len=w.cycle_len,
            seg_len=w.seg.win_len,
            seg_stride=w.seg.stride,
            seg_window=w.seg.window,
            ffn_hidden=cfg.weekly_ffn_hidden,
            ffn_linear_only=cfg.weekly_ffn_linear_only,
            inst_norm=False,  # normalization is applied once, outermost
            variant="full",
        )
        self.weekly_cfg = weekly_cfg
        self.weekly_cycle = Parameter("weekly.cycle_basis", np.zeros((w.cycle_len, d)))
        self.weekly_filter = make_cycle_filter(self.coarse_horizon, d, name="weekly.cycle_filter")
        self.weekly_sfpl = _SfplBlock(weekly_cfg, self.coarse_horizon, rng, prefix="weekly.")
        self.upsample = Parameter(
            "weekly.upsample",
            upsample_init(self.coarse_horizon, base_cfg.horizon, w.pool_kernel),
        )
        self.upsample_bias = Parameter("weekly.upsample_bias", np.zeros(base_cfg.horizon))
        self.fusion = Parameter("fusion", np.zeros(2))

    def parameters(self) -> list[Parameter]:
        return (
            self.base.parameters()
            + [self.weekly_cycle, self.weekly_filter]
            + self.weekly_sfpl.parameters()
            + [self.upsample, self.upsample_bias, self.fusion]
        )

    def _weekly_branch(self, tape: Tape, xn: np.ndarray, starts: np.ndarray) -> Var:
        cfg = self.cfg
        w = cfg.weekly
        k = w.pool_kernel
        b = xn.shape[0]
        d = cfg.base.channels
        lp = self.pooled_lookback
        hc = self.coarse_horizon

        pooled = xn.reshape(b, lp, k, d).mean(axis=2)
        phases = (starts // k) % w.cycle_len

        q = tape.leaf(self.weekly_cycle)
        idx_hist = cycle_indices(phases, lp, w.cycle_len)
        idx_fut = cycle_indices((phases + lp) % w.cycle_len, hc, w.cycle_len)
        c_hist = ad.gather_rows(q, idx_hist)
        c_fut = ad.gather_rows(q, idx_fut)

        r = ad.sub(tape.constant(pooled), c_hist)
        r_pred = self.weekly_sfpl.forward(tape, r)

        spec = ad.rfft(c_fut, axis=1)
        theta = ad.reshape(tape.leaf(self.weekly_filter), (1, hc // 2 + 1, d))
        c_filtered = ad.irfft(ad.mul(spec, theta), n=hc, axis=1)

        coarse = ad.add(r_pred, c_filtered)
        return ad.add(ad.project_time(coarse, tape.leaf(self.upsample)),
                      _bias(tape, self.upsample_bias))

    def forward(self, tape: Tape, x_long: np.ndarray, starts: np.ndarray) -> Var:
        cfg = self.cfg
        lw = cfg.weekly.lookback
        l0 = cfg.base.lookback
        x_long = np.asarray(x_long, dtype=np.float64)
        if x_long.ndim != 3 or x_long.shape[1] != lw:
            raise ValueError(f"forward: expected (B, {lw}, D), got {x_long.shape}")
        starts = np.asarray(starts)

        if cfg.base.inst_norm:
            xn, stats = instance_norm(x_long)
        else:
            xn, stats = x_long, None

        base_phase = (starts + lw - l0) % cfg.base.cycle_len
        base_pred = self.base._forward_normalized(tape, xn[:, -l0:], base_phase)
        week_pred = self._weekly_branch(tape, xn, starts)

        weights = ad.softmax(tape.leaf(self.fusion), axis=0)
        w0 = ad.reshape(ad.narrow(weights, 0, 0, 1), (1, 1, 1))
        w1 = ad.reshape(ad.narrow(weights, 0, 1, 1), (1, 1, 1))
        pred = ad.add(ad.mul(base_pred, w0), ad.mul(week_pred, w1))

        if stats is not None:
            pred = ad.add(ad.mul(pred, tape.constant(stats[1])), tape.constant(stats[0]))
        return pred

    def predict(self, x_long: np.ndarray, starts: np.ndarray) -> np.ndarray:
        tape = Tape()
        return self.forward(tape, x_long, starts).value


def parameter_count(net) -> int:
    """Number of learnable real scalars; complex entries count twice."""
    total = 0
    for p in net.parameters():
        total += p.value.size * (2 if p.is_complex else 1)
    return total
