"""The differentiation core against central finite differences and
hand-written adjoint oracles."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from freqcycle import autodiff as ad
from freqcycle.autodiff import (
    Parameter,
    Tape,
    finite_difference_grad,
    relative_error,
)

TOL = 1e-6


def grad_of(build, p):
    """Tape gradient and finite-difference gradient of a scalar builder."""
    def scalar():
        return float(build(Tape()).value)

    t = Tape()
    loss = build(t)
    p.zero_grad()
    t.backward(loss)
    fd = finite_difference_grad(scalar, p)
    return p.grad.copy(), fd


def assert_matches_fd(build, p, tol=TOL):
    g, fd = grad_of(build, p)
    assert relative_error(g, fd) < tol


class TestElementwise:
    def test_add_broadcast(self, rng):
        p = Parameter("p", rng.normal(size=(3, 1)))
        c = rng.normal(size=(3, 4))
        assert_matches_fd(lambda t: ad.mean(ad.square(ad.add(t.leaf(p), t.constant(c)))), p)

    def test_sub(self, rng):
        p = Parameter("p", rng.normal(size=5))
        c = rng.normal(size=5)
        assert_matches_fd(lambda t: ad.mean(ad.square(ad.sub(t.constant(c), t.leaf(p)))), p)

    def test_mul_real(self, rng):
        p = Parameter("p", rng.normal(size=6))
        c = rng.normal(size=6)
        assert_matches_fd(lambda t: ad.mean(ad.square(ad.mul(t.leaf(p), t.constant(c)))), p)

    def test_mul_complex_param(self, rng):
        n = 8
        x = rng.normal(size=n)
        p = Parameter("pc", rng.normal(size=n // 2 + 1) + 1j * rng.normal(size=n // 2 + 1))

        def build(t):
            spec = ad.rfft(t.constant(x), axis=0)
            return ad.mean(ad.square(ad.irfft(ad.mul(spec, t.leaf(p)), n=n, axis=0)))

        assert_matches_fd(build, p)

    def test_neg(self, rng):
        p = Parameter("p", rng.normal(size=4))
        assert_matches_fd(lambda t: ad.mean(ad.square(ad.neg(t.leaf(p)))), p)

    def test_square_rejects_complex(self):
        p = Parameter("p", np.ones(3, dtype=np.complex128))
        t = Tape()
        with pytest.raises(TypeError):
            ad.square(t.leaf(p))

    def test_relu(self, rng):
        p = Parameter("p", rng.normal(size=20))
        assert_matches_fd(lambda t: ad.mean(ad.relu(t.leaf(p))), p)

    def test_relu_gradient_mask(self):
        p = Parameter("p", np.array([-2.0, -0.5, 0.5, 3.0]))
        t = Tape()
        loss = ad.mean(ad.relu(t.leaf(p)))
        t.backward(loss)
        np.testing.assert_allclose(p.grad, [0, 0, 0.25, 0.25])

    def test_incompatible_shapes_rejected(self, rng):
        p = Parameter("p", rng.normal(size=3))
        t = Tape()
        with pytest.raises(ValueError, match="shapes"):
            ad.add(t.leaf(p), t.constant(np.zeros(4)))


class TestSoftmaxReductions:
    def test_softmax_grad(self, rng):
        p = Parameter("p", rng.normal(size=(4, 3)))
        assert_matches_fd(lambda t: ad.mean(ad.square(ad.softmax(t.leaf(p), axis=0))), p)

    @given(st.integers(2, 8), st.integers(0, 1000))
    @settings(max_examples=25, deadline=None)
    def test_softmax_rows_sum_to_one(self, n, seed):
        x = np.random.default_rng(seed).normal(size=(n, 3)) * 5
        t = Tape()
        y = ad.softmax(t.constant(x), axis=0).value
        np.testing.assert_allclose(y.sum(axis=0), 1.0, atol=1e-12)
        assert np.all(y >= 0)

    def test_mean_sum_axis(self, rng):
        p = Parameter("p", rng.normal(size=(3, 5)))
        assert_matches_fd(lambda t: ad.mean(ad.square(ad.sum_axis(t.leaf(p), axis=1))), p)


class TestShapeOps:
    def test_reshape_narrow_concat(self, rng):
        p = Parameter("p", rng.normal(size=12))

        def build(t):
            v = ad.reshape(t.leaf(p), (3, 4))
            a = ad.narrow(v, 1, 0, 2)
            b = ad.narrow(v, 1, 2, 2)
            return ad.mean(ad.square(ad.concat([b, a], axis=1)))

        assert_matches_fd(build, p)

    def test_matmul(self, rng):
        p = Parameter("p", rng.normal(size=(4, 3)))
        c = rng.normal(size=(2, 4))
        assert_matches_fd(lambda t: ad.mean(ad.square(ad.matmul(t.constant(c), t.leaf(p)))), p)

    def test_project_time_oracle(self, rng):
        u = rng.normal(size=(2, 5, 3))
        w = rng.normal(size=(5, 4))
        t = Tape()
        out = ad.project_time(t.constant(u), t.constant(w)).value
        expect = np.einsum("bld,lm->bmd", u, w)
        np.testing.assert_allclose(out, expect)

    def test_project_time_grad(self, rng):
        p = Parameter("w", rng.normal(size=(5, 4)))
        u = rng.normal(size=(2, 5, 3))
        assert_matches_fd(lambda t: ad.mean(ad.square(ad.project_time(t.constant(u), t.leaf(p)))), p)

    def test_gather_rows_scatter_adds_duplicates(self, rng):
        q = Parameter("q", rng.normal(size=(3, 2)))
        idx = np.array([[0, 1, 2, 0, 0]])
        t = Tape()
        loss = ad.mean(ad.gather_rows(t.leaf(q), idx))
        t.backward(loss)
        # Row 0 is used three times: its gradient is 3x that of row 2.
        np.testing.assert_allclose(q.grad[0], 3 * q.grad[2])
        assert_matches_fd(lambda t: ad.mean(ad.square(ad.gather_rows(t.leaf(q), idx))), q)

    def test_avg_pool_matches_reshape_mean(self, rng):
        x = rng.normal(size=(8, 3))
        t = Tape()
        out = ad.avg_pool(t.constant(x), 2, axis=0).value
        np.testing.assert_allclose(out, x.reshape(4, 2, 3).mean(axis=1))

    def test_avg_pool_grad(self, rng):
        p = Parameter("p", rng.normal(size=(6, 2)))
        assert_matches_fd(lambda t: ad.mean(ad.square(ad.avg_pool(t.leaf(p), 3, axis=0))), p)

    def test_avg_pool_indivisible(self, rng):
        t = Tape()
        with pytest.raises(ValueError, match="does not divide"):
            ad.avg_pool(t.constant(np.zeros(7)), 2)


class TestFourierOps:
    @pytest.mark.parametrize("n", [2, 3, 8, 15, 16])
    def test_rfft_irfft_roundtrip_grad(self, n, rng):
        p = Parameter("p", rng.normal(size=n))
        assert_matches_fd(
            lambda t: ad.mean(ad.square(ad.irfft(ad.rfft(t.leaf(p), axis=0), n=n, axis=0))), p
        )

    @pytest.mark.parametrize("n", [4, 7, 12])
    def test_filtered_path_grad(self, n, rng):
        bins = n // 2 + 1
        p = Parameter("theta", rng.normal(size=bins) + 1j * rng.normal(size=bins))
        x = rng.normal(size=n)

        def build(t):
            spec = ad.rfft(t.constant(x), axis=0)
            return ad.mean(ad.square(ad.irfft(ad.mul(spec, t.leaf(p)), n=n, axis=0)))

        assert_matches_fd(build, p)

    def test_rfft_rejects_complex(self):
        t = Tape()
        with pytest.raises(TypeError):
            ad.rfft(t.constant(np.ones(4, dtype=np.complex128)))

    def test_irfft_bin_mismatch(self):
        t = Tape()
        with pytest.raises(ValueError, match="inconsistent"):
            ad.irfft(t.constant(np.ones(4, dtype=np.complex128)), n=4)

    @given(st.integers(2, 32), st.integers(0, 100))
    @settings(max_examples=30, deadline=None)
    def test_rfft_adjoint_inner_product(self, n, seed):
        r = np.random.default_rng(seed)
        u = r.normal(size=n)
        v = r.normal(size=n // 2 + 1) + 1j * r.normal(size=n // 2 + 1)
        ju = np.fft.rfft(u)
        lhs = float(np.sum(ju.real * v.real + ju.imag * v.imag))
        p = Parameter("u", u)
        t = Tape()
        x = t.leaf(p)
        spec = ad.rfft(x, axis=0)
        x.grad = np.zeros_like(x.value)
        spec._backward(v.copy())
        rhs = float(np.dot(u, x.grad))
        assert abs(lhs - rhs) / max(1.0, abs(lhs)) < 1e-10


class TestTapeSemantics:
    def test_backward_requires_scalar(self, rng):
        p = Parameter("p", rng.normal(size=3))
        t = Tape()
        v = ad.square(t.leaf(p))
        with pytest.raises(ValueError, match="scalar"):
            t.backward(v)

    def test_double_backward_rejected(self, rng):
        p = Parameter("p", rng.normal(size=3))
        t = Tape()
        loss = ad.mean(ad.square(t.leaf(p)))
        t.backward(loss)
        with pytest.raises(RuntimeError, match="twice"):
            t.backward(loss)

    def test_mixing_tapes_rejected(self, rng):
        p = Parameter("p", rng.normal(size=3))
        t1, t2 = Tape(), Tape()
        a = t1.leaf(p)
        b = t2.constant(np.ones(3))
        with pytest.raises(ValueError, match="tapes"):
            t1._wrap(b)

    def test_grad_accumulates_across_tapes(self, rng):
        p = Parameter("p", rng.normal(size=3))
        for _ in range(2):
            t = Tape()
            t.backward(ad.mean(t.leaf(p)))
        np.testing.assert_allclose(p.grad, 2.0 / 3.0)

    def test_param_used_twice_in_one_graph(self, rng):
        p = Parameter("p", rng.normal(size=4))
        assert_matches_fd(lambda t: ad.mean(ad.mul(t.leaf(p), t.leaf(p))), p)

    def test_parameter_rejects_nonfinite(self):
        with pytest.raises(ValueError, match="non-finite"):
            Parameter("bad", np.array([1.0, np.nan]))


class TestFiniteDifferenceOracle:
    def test_quadratic_exact(self):
        p = Parameter("p", np.array([1.0, -2.0, 3.0]))

        def f():
            return float(np.sum(p.value**2))

        fd = finite_difference_grad(f, p)
        np.testing.assert_allclose(fd, 2 * p.value, rtol=1e-7, atol=1e-7)

    def test_complex_pairs_of_reals(self):
        p = Parameter("p", np.array([1.0 + 2.0j]))

        def f():
            return float(np.abs(p.value[0]) ** 2)

        fd = finite_difference_grad(f, p)
        np.testing.assert_allclose(fd, [2.0 + 4.0j], rtol=1e-6, atol=1e-6)
