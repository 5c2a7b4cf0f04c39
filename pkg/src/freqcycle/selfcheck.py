"""Built-in verification suites: gradient oracle agreement for every op
kind, spectral identities, segmentation reconstruction, and determinism.

Each suite reports its worst observed error against a fixed budget, so a
single run both validates the build and shows how much margin it has.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import Parameter, Tape, finite_difference_grad, relative_error
from .model import FreqCycleNet, ModelConfig
from .sfpl import SegmentConfig, segment_and_pad, segment_spectra
from .spectral import circular_convolve, make_window


@dataclass
class SuiteResult:
    name: str
    max_error: float
    budget: float

    @property
    def passed(self) -> bool:
        return self.max_error <= self.budget


def _grad_case(build, p: Parameter) -> float:
    """Relative error between tape gradients and finite differences for a
    scalar-valued graph builder."""

    def scalar():
        t = Tape()
        return float(build(t).value)

    t = Tape()
    loss = build(t)
    p.zero_grad()
    t.backward(loss)
    fd = finite_difference_grad(scalar, p)
    return relative_error(p.grad, fd)


def check_op_gradients(trials: int = 20, seed: int = 0) -> SuiteResult:
    """Every differentiable op kind against central finite differences."""
    rng = np.random.default_rng(seed)
    worst = 0.0

    def rand(shape, complex_=False):
        r = rng.normal(size=shape)
        return r + 1j * rng.normal(size=shape) if complex_ else r

    for _ in range(trials):
        n = int(rng.integers(2, 17))
        x = rand(n)
        pr = Parameter("p", rand(n))
        pc = Parameter("pc", rand(n // 2 + 1, complex_=True))
        pm = Parameter("pm", rand((n, 3)))

        cases = [
            (lambda t: ad.mean(ad.square(ad.add(t.leaf(pr), t.constant(x)))), pr),
            (lambda t: ad.mean(ad.square(ad.sub(t.constant(x), t.leaf(pr)))), pr),
            (lambda t: ad.mean(ad.square(ad.mul(t.leaf(pr), t.constant(x)))), pr),
            (lambda t: ad.mean(ad.relu(t.leaf(pr))), pr),
            (lambda t: ad.mean(ad.square(ad.softmax(t.leaf(pr), axis=0))), pr),
            (lambda t: ad.mean(ad.square(ad.matmul(ad.reshape(t.leaf(pr), (1, n)), t.leaf(pm)))), pr),
            (lambda t: ad.mean(ad.square(ad.irfft(ad.rfft(t.leaf(pr), axis=0), n=n, axis=0))), pr),
            (lambda t: ad.mean(
                ad.square(ad.irfft(ad.mul(ad.rfft(t.constant(x), axis=0), t.leaf(pc)), n=n, axis=0))
            ), pc),
            (lambda t: ad.mean(ad.square(ad.concat(
                [ad.narrow(t.leaf(pr), 0, 0, n // 2), ad.narrow(t.leaf(pr), 0, n // 2, n - n // 2)],
                axis=0,
            ))), pr),
            (lambda t: ad.mean(ad.square(ad.avg_pool(t.leaf(pr), 1, axis=0))), pr),
            (lambda t: ad.mean(ad.square(ad.sum_axis(t.leaf(pm), axis=1))), pm),
            (lambda t: ad.mean(ad.square(ad.gather_rows(t.leaf(pm), np.arange(2 * n) % n))), pm),
        ]
        if n % 2 == 0:
            cases.append((lambda t: ad.mean(ad.square(ad.avg_pool(t.leaf(pr), 2, axis=0))), pr))
        for build, param in cases:
            worst = max(worst, _grad_case(build, param))
    return SuiteResult("op gradients vs finite differences", worst, 1e-5)


def check_model_gradients(trials: int = 8, seed: int = 3) -> SuiteResult:
    """End-to-end gradient check of the full variant on random toys."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        cfg = ModelConfig(lookback=8, horizon=4, channels=2, cycle_len=3,
                          seg_len=4, seg_stride=4, ffn_hidden=4)
        net = FreqCycleNet(cfg, seed=int(rng.integers(1 << 30)))
        for p in net.parameters():
            noise = rng.normal(size=p.value.shape) * 0.2
            if p.is_complex:
                noise = noise + 1j * rng.normal(size=p.value.shape) * 0.2
            p.value = p.value + noise
        x = rng.normal(size=(2, 8, 2))
        y = rng.normal(size=(2, 4, 2))
        s = rng.integers(0, 9, size=2)

        def build(t):
            pred = net.forward(t, x, s)
            return ad.mean(ad.square(ad.sub(pred, t.constant(y))))

        for p in net.parameters():
            worst = max(worst, _grad_case(build, p))
    return SuiteResult("model gradients vs finite differences", worst, 1e-5)


def check_rfft_adjoint(trials: int = 50, seed: int = 1, corrupt: bool = False) -> SuiteResult:
    """Inner-product test <J u, v> = <u, J^T v> on the real pair inner
    product, with the half spectrum's shared-bin duplication accounted for
    by the adjoint itself."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        n = int(rng.integers(2, 33))
        u = rng.normal(size=n)
        v = rng.normal(size=n // 2 + 1) + 1j * rng.normal(size=n // 2 + 1)
        ju = np.fft.rfft(u)
        lhs = float(np.sum(ju.real * v.real + ju.imag * v.imag))
        # Seed the cotangent v directly on the spectrum node and run the
        # op's backward closure to obtain J^T v.
        p = Parameter("u", u)
        t = Tape()
        x = t.leaf(p)
        spec = ad.rfft(x, axis=0)
        x.grad = np.zeros_like(x.value)
        spec._backward(v.copy())
        rhs = float(np.dot(u, x.grad))
        if corrupt:
            rhs *= 1.0 + 1e-6
        worst = max(worst, abs(lhs - rhs) / max(1.0, abs(lhs)))
    return SuiteResult("rfft adjoint inner-product", worst, 1e-10)


def check_spectral_identities(seed: int = 2) -> SuiteResult:
    """Round trip, Parseval, linearity, and the convolution theorem."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for n in range(2, 33):
        x = rng.normal(size=n)
        h = rng.normal(size=n)
        worst = max(worst, float(np.max(np.abs(np.fft.irfft(np.fft.rfft(x), n=n) - x))))
        spec = np.fft.rfft(x)
        energy = np.abs(spec[0]) ** 2 + 2 * np.sum(np.abs(spec[1:-1]) ** 2) + (
            np.abs(spec[-1]) ** 2 if n % 2 == 0 else 2 * np.abs(spec[-1]) ** 2
        )
        worst = max(worst, abs(np.sum(x * x) - energy / n))
        a, b = rng.normal(size=2)
        worst = max(worst, float(np.max(np.abs(
            np.fft.rfft(a * x + b * h) - (a * np.fft.rfft(x) + b * np.fft.rfft(h))
        ))))
        direct = np.array([sum(x[m] * h[(i - m) % n] for m in range(n)) for i in range(n)])
        worst = max(worst, float(np.max(np.abs(circular_convolve(x, h) - direct))))
    return SuiteResult("spectral identities", worst, 1e-9)


def check_softmax_normalization(seed: int = 4) -> SuiteResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(30):
        x = rng.normal(size=(5, 7)) * 10
        p = Parameter("x", x)
        t = Tape()
        y = ad.softmax(t.leaf(p), axis=0).value
        worst = max(worst, float(np.max(np.abs(y.sum(axis=0) - 1.0))))
        if y.min() < 0:
            worst = max(worst, float(-y.min()))
    return SuiteResult("softmax normalization", worst, 1e-12)


def check_segmentation(seed: int = 5) -> SuiteResult:
    """Rect tiling: segments sum back to the input, spectra sum to the full
    spectrum."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for lookback, wl in [(8, 2), (8, 4), (12, 3), (16, 4), (96, 6)]:
        r = rng.normal(size=(lookback, 2))
        cfg = SegmentConfig(wl, wl, "rect")
        segs = segment_and_pad(r, cfg)
        worst = max(worst, float(np.max(np.abs(segs.sum(axis=0) - r))))
        worst = max(worst, float(np.max(np.abs(
            segment_spectra(segs).sum(axis=0) - np.fft.rfft(r, axis=0)
        ))))
    return SuiteResult("segmentation reconstruction", worst, 1e-9)


def check_window_symmetry() -> SuiteResult:
    worst = 0.0
    for kind in ("rect", "hann", "hamming"):
        for n in (1, 3, 6, 7, 96):
            w = make_window(kind, n)
            worst = max(worst, float(np.max(np.abs(w - w[::-1]))))
            if w.min() < 0 or w.max() > 1:
                worst = max(worst, 1.0)
    return SuiteResult("window symmetry", worst, 1e-12)


def check_determinism() -> SuiteResult:
    """Same seed, same data: bit-identical gradients."""
    def run():
        rng = np.random.default_rng(11)
        cfg = ModelConfig(lookback=8, horizon=4, channels=1, cycle_len=4,
                          seg_len=4, seg_stride=4, ffn_hidden=4)
        net = FreqCycleNet(cfg, seed=11)
        x = rng.normal(size=(3, 8, 1))
        y = rng.normal(size=(3, 4, 1))
        t = Tape()
        loss = ad.mean(ad.square(ad.sub(net.forward(t, x, np.arange(3)), t.constant(y))))
        t.backward(loss)
        return np.concatenate([np.atleast_1d(p.grad).ravel().view(np.float64)
                               for p in net.parameters()])

    a, b = run(), run()
    return SuiteResult("seeded determinism", 0.0 if np.array_equal(a, b) else 1.0, 0.0)


def run_all(corrupt: str | None = None) -> list[SuiteResult]:
    """All property suites; ``corrupt`` injects a failure into the named
    suite (testing hook)."""
    return [
        check_op_gradients(),
        check_model_gradients(),
        check_rfft_adjoint(corrupt=(corrupt == "rfft adjoint")),
        check_spectral_identities(),
        check_softmax_normalization(),
        check_segmentation(),
        check_window_symmetry(),
        check_determinism(),
    ]
