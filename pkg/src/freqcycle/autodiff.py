"""Minimal reverse-mode differentiation over real and complex numpy arrays.

The op set is exactly what the forecaster's forward pass needs: elementwise
arithmetic (real/complex), matrix products, ReLU, softmax, reductions,
real-input FFT and its inverse, reshaping/indexing, and average pooling.

Complex quantities are differentiated as pairs of independent real numbers:
for a complex value z the stored gradient is dL/dRe(z) + j*dL/dIm(z).  All
losses are real scalars, so this treatment is exact and directly checkable
with central finite differences.
"""

from __future__ import annotations

import numpy as np


class Parameter:
    """A named learnable array with a persistent gradient buffer."""

    def __init__(self, name: str, value: np.ndarray):
        value = np.asarray(value)
        if value.dtype.kind == "c":
            value = value.astype(np.complex128)
        else:
            value = value.astype(np.float64)
        if not np.all(np.isfinite(value.view(np.float64) if value.dtype.kind == "c" else value)):
            raise ValueError(f"parameter {name!r}: non-finite initial value")
        self.name = name
        self.value = value
        self.grad = np.zeros_like(value)

    @property
    def is_complex(self) -> bool:
        return self.value.dtype.kind == "c"

    def zero_grad(self) -> None:
        self.grad[...] = 0

    def __repr__(self) -> str:
        return f"Parameter({self.name!r}, shape={self.value.shape}, dtype={self.value.dtype})"


class Var:
    """A node on the tape: an array value plus the closure that routes its
    cotangent to its inputs."""

    __slots__ = ("value", "grad", "_backward", "_param", "tape")

    def __init__(self, value, tape, backward=None, param=None):
        self.value = value
        self.grad = None
        self._backward = backward
        self._param = param
        self.tape = tape

    @property
    def shape(self):
        return self.value.shape


def _unbroadcast(g: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum a gradient down to ``shape`` after numpy broadcasting."""
    if g.shape == shape:
        return g
    extra = g.ndim - len(shape)
    if extra > 0:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g


def _cast_like(g: np.ndarray, value: np.ndarray) -> np.ndarray:
    # Gradient of a real input through a complex op keeps only the real part.
    if value.dtype.kind != "c" and g.dtype.kind == "c":
        return g.real.copy()
    return g


class Tape:
    """An ordered record of operations; creation order is topological, so a
    single reverse sweep propagates gradients."""

    def __init__(self):
        self._nodes: list[Var] = []
        self._params: list[tuple[Parameter, Var]] = []
        self._consumed = False

    # -- node construction -------------------------------------------------

    def _record(self, value, backward=None, param=None) -> Var:
        if self._consumed:
            raise RuntimeError("tape already consumed by backward(); build a new tape")
        v = Var(np.asarray(value), self, backward, param)
        self._nodes.append(v)
        return v

    def leaf(self, p: Parameter) -> Var:
        v = self._record(p.value, param=p)
        self._params.append((p, v))
        return v

    def constant(self, value) -> Var:
        return self._record(np.asarray(value, dtype=None))

    def _wrap(self, x) -> Var:
        if isinstance(x, Var):
            if x.tape is not self:
                raise ValueError("mixing Vars from different tapes")
            return x
        return self.constant(x)

    # -- backward ----------------------------------------------------------

    def backward(self, loss: Var) -> None:
        """Populate ``grad`` on every reachable Parameter from a scalar loss."""
        if self._consumed:
            raise RuntimeError("backward() called twice on the same tape")
        if loss.tape is not self:
            raise ValueError("loss does not belong to this tape")
        if np.ndim(loss.value) != 0 and np.size(loss.value) != 1:
            raise ValueError(f"backward() needs a scalar loss, got shape {np.shape(loss.value)}")
        self._consumed = True
        for node in self._nodes:
            node.grad = np.zeros_like(node.value)
        loss.grad = np.ones_like(loss.value)
        for node in reversed(self._nodes):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)
        for p, v in self._params:
            p.grad += _cast_like(v.grad, p.value)
        # Drop references so activations can be collected.
        self._nodes = []
        self._params = []


# -- ops -------------------------------------------------------------------


def _shapes_broadcastable(a, b) -> bool:
    try:
        np.broadcast_shapes(np.shape(a), np.shape(b))
        return True
    except ValueError:
        return False


def _binary_guard(op: str, a: Var, b: Var) -> None:
    if not _shapes_broadcastable(a.value, b.value):
        raise ValueError(f"{op}: incompatible shapes {a.value.shape} and {b.value.shape}")


def add(a, b):
    tape = a.tape if isinstance(a, Var) else b.tape
    a, b = tape._wrap(a), tape._wrap(b)
    _binary_guard("add", a, b)

    def backward(g):
        a.grad += _cast_like(_unbroadcast(g, a.value.shape), a.value)
        b.grad += _cast_like(_unbroadcast(g, b.value.shape), b.value)

    return tape._record(a.value + b.value, backward)


def sub(a, b):
    tape = a.tape if isinstance(a, Var) else b.tape
    a, b = tape._wrap(a), tape._wrap(b)
    _binary_guard("sub", a, b)

    def backward(g):
        a.grad += _cast_like(_unbroadcast(g, a.value.shape), a.value)
        b.grad -= _cast_like(_unbroadcast(g, b.value.shape), b.value)

    return tape._record(a.value - b.value, backward)


def mul(a, b):
    """Elementwise product; exact for any mix of real and complex factors."""
    tape = a.tape if isinstance(a, Var) else b.tape
    a, b = tape._wrap(a), tape._wrap(b)
    _binary_guard("mul", a, b)
    av, bv = a.value, b.value

    def backward(g):
        a.grad += _cast_like(_unbroadcast(g * np.conj(bv), av.shape), av)
        b.grad += _cast_like(_unbroadcast(g * np.conj(av), bv.shape), bv)

    return tape._record(av * bv, backward)


def neg(a):
    def backward(g):
        a.grad -= g

    return a.tape._record(-a.value, backward)


def square(a):
    if a.value.dtype.kind == "c":
        raise TypeError("square: real input required")

    def backward(g):
        a.grad += 2.0 * a.value * g

    return a.tape._record(a.value * a.value, backward)


def relu(a):
    if a.value.dtype.kind == "c":
        raise TypeError("relu: real input required")
    mask = a.value > 0

    def backward(g):
        a.grad += g * mask

    return a.tape._record(np.where(mask, a.value, 0.0), backward)


def softmax(a, axis: int):
    if a.value.dtype.kind == "c":
        raise TypeError("softmax: real input required")
    shifted = a.value - a.value.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    y = e / e.sum(axis=axis, keepdims=True)

    def backward(g):
        a.grad += y * (g - (g * y).sum(axis=axis, keepdims=True))

    return a.tape._record(y, backward)


def mean(a):
    n = a.value.size

    def backward(g):
        a.grad += np.full_like(a.value, float(g) / n)

    return a.tape._record(np.asarray(a.value.mean()), backward)


def sum_axis(a, axis: int):
    def backward(g):
        a.grad += np.expand_dims(g, axis)

    return a.tape._record(a.value.sum(axis=axis), backward)


def reshape(a, shape):
    orig = a.value.shape

    def backward(g):
        a.grad += g.reshape(orig)

    return a.tape._record(a.value.reshape(shape), backward)


def narrow(a, axis: int, start: int, length: int):
    idx = [slice(None)] * a.value.ndim
    idx[axis] = slice(start, start + length)
    idx = tuple(idx)

    def backward(g):
        a.grad[idx] += g

    return a.tape._record(a.value[idx].copy(), backward)


def concat(parts, axis: int):
    tape = parts[0].tape
    sizes = [p.value.shape[axis] for p in parts]
    offsets = np.cumsum([0] + sizes)

    def backward(g):
        for p, lo, hi in zip(parts, offsets[:-1], offsets[1:]):
            idx = [slice(None)] * g.ndim
            idx[axis] = slice(lo, hi)
            p.grad += _cast_like(g[tuple(idx)], p.value)

    return tape._record(np.concatenate([p.value for p in parts], axis=axis), backward)


def matmul(a, b):
    if a.value.dtype.kind == "c" or b.value.dtype.kind == "c":
        raise TypeError("matmul: real inputs required")
    if a.value.shape[-1] != b.value.shape[0]:
        raise ValueError(f"matmul: incompatible shapes {a.value.shape} and {b.value.shape}")
    av, bv = a.value, b.value

    def backward(g):
        a.grad += g @ bv.T
        b.grad += _unbroadcast(np.swapaxes(av, -1, -2) @ g, bv.shape)

    return a.tape._record(av @ bv, backward)


def project_time(u, w):
    """Map (B, L, D) along the temporal axis with a shared (L, M) matrix,
    producing (B, M, D); channels share the same weights."""
    if u.value.shape[1] != w.value.shape[0]:
        raise ValueError(
            f"project_time: temporal dim {u.value.shape[1]} does not match weight rows {w.value.shape[0]}"
        )
    uv, wv = u.value, w.value

    def backward(g):
        u.grad += np.einsum("bmd,lm->bld", g, wv)
        w.grad += np.einsum("bld,bmd->lm", uv, g)

    return u.tape._record(np.einsum("bld,lm->bmd", uv, wv), backward)


def gather_rows(q, idx: np.ndarray):
    """Index the (W, D) cycle basis with an integer matrix (..., N) to get
    (..., N, D); the adjoint scatter-adds back into the basis."""
    idx = np.asarray(idx)
    d = q.value.shape[1]

    def backward(g):
        np.add.at(q.grad, idx.reshape(-1), g.reshape(-1, d))

    return q.tape._record(q.value[idx], backward)


def avg_pool(a, k: int, axis: int = 0):
    n = a.value.shape[axis]
    if n % k != 0:
        raise ValueError(f"avg_pool: kernel {k} does not divide length {n}")
    moved = np.moveaxis(a.value, axis, 0)
    pooled = moved.reshape(n // k, k, *moved.shape[1:]).mean(axis=1)

    def backward(g):
        gm = np.moveaxis(g, axis, 0)
        expanded = np.repeat(gm, k, axis=0) / k
        a.grad += np.moveaxis(expanded, 0, axis)

    return a.tape._record(np.moveaxis(pooled, 0, axis), backward)


def rfft(a, axis: int = 0):
    """Unnormalized forward transform of a real signal; keeps floor(N/2)+1 bins."""
    if a.value.dtype.kind == "c":
        raise TypeError("rfft: real input required")
    if a.value.shape[axis] < 1:
        raise ValueError("rfft: empty input")
    n = a.value.shape[axis]

    def backward(g):
        # dL/dx[m] = Re( sum_k conj(g_k) e^{-j 2pi k m / N} ): a forward DFT
        # of conj(g) zero-padded to the full bin count.
        pad_width = [(0, 0)] * g.ndim
        pad_width[axis] = (0, n - g.shape[axis])
        full = np.pad(np.conj(g), pad_width)
        a.grad += np.real(np.fft.fft(full, axis=axis))

    return a.tape._record(np.fft.rfft(a.value, axis=axis), backward)


def irfft(a, n: int, axis: int = 0):
    """Inverse transform carrying the 1/N factor; ``n`` is the original length."""
    bins = a.value.shape[axis]
    if bins != n // 2 + 1:
        raise ValueError(f"irfft: {bins} bins inconsistent with target length {n}")

    def backward(g):
        gf = np.fft.rfft(g, axis=axis) / n
        # Interior bins appear twice in the conjugate-symmetric extension.
        weight = np.full(bins, 2.0)
        weight[0] = 1.0
        if n % 2 == 0:
            weight[-1] = 1.0
        shape = [1] * gf.ndim
        shape[axis] = bins
        a.grad += gf * weight.reshape(shape)

    return a.tape._record(np.fft.irfft(a.value, n=n, axis=axis), backward)


# -- gradient oracle -------------------------------------------------------


def finite_difference_grad(f, p: Parameter, h: float = 1e-6) -> np.ndarray:
    """Central-difference gradient of a scalar function of one Parameter.

    Complex parameters are perturbed independently in their real and
    imaginary parts, matching the engine's pairs-of-reals convention.
    """
    base = p.value.copy()
    grad = np.zeros_like(base)
    it = np.nditer(np.zeros(base.shape), flags=["multi_index"])
    steps = (1.0, 1j) if p.is_complex else (1.0,)
    for _ in it:
        i = it.multi_index
        acc = 0.0 + 0.0j if p.is_complex else 0.0
        for step in steps:
            p.value = base.copy()
            p.value[i] += h * step
            hi = f()
            p.value = base.copy()
            p.value[i] -= h * step
            lo = f()
            if not (np.isfinite(hi) and np.isfinite(lo)):
                p.value = base
                raise ValueError("finite_difference_grad: non-finite function output")
            acc = acc + step * (hi - lo) / (2 * h)
        grad[i] = acc
    p.value = base
    return grad


def relative_error(a: np.ndarray, b: np.ndarray) -> float:
    """max over elements of |a-b| / max(1, |a|, |b|)."""
    a = np.asarray(a)
    b = np.asarray(b)
    denom = np.maximum(1.0, np.maximum(np.abs(a), np.abs(b)))
    return float(np.max(np.abs(a - b) / denom)) if a.size else 0.0
