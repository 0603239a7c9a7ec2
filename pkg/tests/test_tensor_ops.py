"""Tensor kernel tests against naive oracles and closed-form values."""

import math

import numpy as np
import pytest

from tinylic import tensor_ops as T
from tinylic.errors import ConfigError, InputError, ShapeError

from oracles import conv2d_naive, gelu_naive, softmax_naive


def rand_kernel(rng, k, cin, cout, stride, zero_bias=False):
    w = rng.normal(size=(k, k, cin, cout))
    b = np.zeros(cout) if zero_bias else rng.normal(size=cout)
    return T.ConvKernel(w, b, stride)


class TestConv2d:
    def test_identity_kernel(self):
        k = T.ConvKernel(np.ones((1, 1, 1, 1)), np.zeros(1), 1)
        out = T.conv2d(np.array([[[5.0]]]), k)
        assert out.shape == (1, 1, 1)
        assert out[0, 0, 0] == 5.0

    def test_constant_field_replicate_pad(self):
        k = T.ConvKernel(np.ones((3, 3, 1, 1)), np.zeros(1), 2)
        out = T.conv2d(np.ones((4, 4, 1)), k)
        assert out.shape == (2, 2, 1)
        assert np.all(out == 9.0)

    def test_matches_naive_oracle(self):
        rng = np.random.default_rng(703)
        x = rng.normal(size=(5, 5, 2))
        k = rand_kernel(rng, 3, 2, 3, 2)
        got = T.conv2d(x, k)
        want = conv2d_naive(x, k.weights, k.bias, 2)
        assert got.shape == want.shape
        np.testing.assert_allclose(got, want, rtol=0, atol=1e-12)

    @pytest.mark.parametrize("case", range(20))
    def test_random_cases_vs_oracle(self, case):
        rng = np.random.default_rng(1000 + case)
        h, w = rng.integers(1, 8, size=2)
        cin, cout = rng.integers(1, 4, size=2)
        k = int(rng.choice([1, 3, 5]))
        s = int(rng.choice([1, 2]))
        x = rng.normal(size=(h, w, cin))
        kern = rand_kernel(rng, k, cin, cout, s)
        np.testing.assert_allclose(
            T.conv2d(x, kern), conv2d_naive(x, kern.weights, kern.bias, s), atol=1e-12
        )

    def test_stride2_output_dims_exhaustive(self):
        k = T.ConvKernel(np.zeros((3, 3, 1, 1)), np.zeros(1), 2)
        for h in range(1, 18):
            for w in range(1, 18):
                out = T.conv2d(np.zeros((h, w, 1)), k)
                assert out.shape == ((h + 1) // 2, (w + 1) // 2, 1)

    def test_channel_mismatch(self):
        k = T.ConvKernel(np.zeros((3, 3, 2, 1)), np.zeros(1), 1)
        with pytest.raises(ShapeError):
            T.conv2d(np.zeros((4, 4, 3)), k)

    def test_even_kernel_rejected(self):
        with pytest.raises(ConfigError):
            T.ConvKernel(np.zeros((2, 2, 1, 1)), np.zeros(1), 1)

    def test_bad_stride_rejected(self):
        with pytest.raises(ConfigError):
            T.ConvKernel(np.zeros((3, 3, 1, 1)), np.zeros(1), 3)

    def test_nonfinite_rejected(self):
        k = T.ConvKernel(np.zeros((1, 1, 1, 1)), np.zeros(1), 1)
        bad = np.full((2, 2, 1), np.nan)
        with pytest.raises(InputError):
            T.conv2d(bad, k)

    def test_purity(self):
        rng = np.random.default_rng(7)
        x = rng.normal(size=(6, 5, 2))
        k = rand_kernel(rng, 3, 2, 2, 2)
        a = T.conv2d(x, k)
        b = T.conv2d(x, k)
        assert a.tobytes() == b.tobytes()


class TestTconv2d:
    def test_shape_contract(self):
        k = T.ConvKernel(np.zeros((3, 3, 1, 2)), np.zeros(2), 2)
        out = T.tconv2d(np.zeros((2, 2, 1)), k)
        assert out.shape == (4, 4, 2)

    def test_impulse_response(self):
        rng = np.random.default_rng(3)
        w = rng.normal(size=(3, 3, 1, 2))
        k = T.ConvKernel(w, np.zeros(2), 2)
        x = np.zeros((4, 4, 1))
        x[2, 2, 0] = 1.0
        out = T.tconv2d(x, k)
        # interior impulse: kernel stamped at (2*2+ky-1, 2*2+kx-1)
        for ky in range(3):
            for kx in range(3):
                np.testing.assert_array_equal(out[3 + ky, 3 + kx], w[ky, kx, 0])

    @pytest.mark.parametrize("trial", range(20))
    def test_adjoint_identity(self, trial):
        rng = np.random.default_rng(4200 + trial)
        a, b = rng.integers(1, 5, size=2)
        cin, cout = rng.integers(1, 4, size=2)
        k = int(rng.choice([3, 5]))
        x = rng.normal(size=(2 * a, 2 * b, cin))
        kc = rand_kernel(rng, k, cin, cout, 2, zero_bias=True)
        y = rng.normal(size=(a, b, cout))
        lhs = float(np.sum(T.conv2d(x, kc) * y))
        rhs = float(np.sum(x * T.tconv2d(y, kc.transposed())))
        assert abs(lhs - rhs) <= 1e-9 * max(1.0, abs(lhs))

    def test_channel_mismatch(self):
        k = T.ConvKernel(np.zeros((3, 3, 2, 1)), np.zeros(1), 2)
        with pytest.raises(ShapeError):
            T.tconv2d(np.zeros((2, 2, 1)), k)


class TestLayerNorm:
    def test_constant_collapses_to_beta(self):
        x = np.full((2, 2, 4), 3.7)
        out = T.layer_norm(x, np.ones(4), np.zeros(4))
        np.testing.assert_array_equal(out, np.zeros_like(x))

    def test_two_channel_closed_form(self):
        x = np.array([[[1.0, 3.0]]])
        out = T.layer_norm(x, np.ones(2), np.zeros(2), eps=1e-5)
        expect = 1.0 / math.sqrt(1.0 + 1e-5)
        np.testing.assert_allclose(out[0, 0], [-expect, expect], atol=1e-15)

    def test_statistics(self):
        rng = np.random.default_rng(11)
        x = rng.normal(2.0, 5.0, size=(4, 5, 16))
        out = T.layer_norm(x, np.ones(16), np.zeros(16), eps=0.0)
        assert np.abs(out.mean(axis=2)).max() < 1e-9
        assert np.abs(out.var(axis=2) - 1.0).max() < 1e-6

    def test_shift_invariance(self):
        rng = np.random.default_rng(12)
        x = rng.normal(size=(3, 3, 8))
        shift = rng.normal(size=(3, 3, 1))
        a = T.layer_norm(x, np.ones(8), np.zeros(8))
        b = T.layer_norm(x + shift, np.ones(8), np.zeros(8))
        np.testing.assert_allclose(a, b, atol=1e-6)

    def test_length_mismatch(self):
        with pytest.raises(ShapeError):
            T.layer_norm(np.zeros((2, 2, 3)), np.ones(4), np.zeros(4))


class TestGelu:
    def test_zero(self):
        assert T.gelu(np.array([0.0]))[0] == 0.0

    def test_asymptote(self):
        assert abs(T.gelu(np.array([10.0]))[0] - 10.0) < 1e-9

    def test_unit_value(self):
        got = T.gelu(np.array([1.0]))[0]
        want = 1.0 * 0.5 * (1.0 + math.erf(1.0 / math.sqrt(2.0)))
        assert abs(got - want) < 1e-15
        assert abs(got - 0.841344746) < 1e-9

    def test_matches_erf_oracle(self):
        rng = np.random.default_rng(13)
        x = rng.normal(0, 3, size=200)
        np.testing.assert_allclose(T.gelu(x), gelu_naive(x), atol=1e-12)


class TestSoftmax:
    def test_uniform_logits(self):
        np.testing.assert_allclose(
            T.softmax_last(np.full(4, 2.5)), np.full(4, 0.25), atol=1e-15
        )

    def test_dominance(self):
        out = T.softmax_last(np.array([1000.0, 0.0]))
        assert abs(out[0] - 1.0) < 1e-12 and abs(out[1]) < 1e-12

    def test_matches_oracle(self):
        rng = np.random.default_rng(14)
        for _ in range(20):
            v = rng.normal(0, 4, size=rng.integers(1, 12))
            got = T.softmax_last(v)
            np.testing.assert_allclose(got, softmax_naive(v), atol=1e-12)
            assert abs(got.sum() - 1.0) < 1e-9
            assert np.all(got > 0)

    def test_permutation_equivariance(self):
        rng = np.random.default_rng(15)
        v = rng.normal(size=9)
        perm = rng.permutation(9)
        np.testing.assert_allclose(
            T.softmax_last(v[perm]), T.softmax_last(v)[perm], atol=1e-15
        )


class TestLinear:
    def test_identity(self):
        x = np.arange(4.0)
        out = T.linear(x, np.eye(4), np.zeros(4))
        np.testing.assert_array_equal(out, x)

    def test_zero_weight_gives_bias(self):
        b = np.array([1.0, -2.0])
        out = T.linear(np.ones(3), np.zeros((3, 2)), b)
        np.testing.assert_array_equal(out, b)

    def test_matches_dot_oracle(self):
        rng = np.random.default_rng(16)
        for _ in range(20):
            cin, cout = rng.integers(1, 10, size=2)
            x = rng.normal(size=(5, cin))
            w = rng.normal(size=(cin, cout))
            b = rng.normal(size=cout)
            np.testing.assert_allclose(T.linear(x, w, b), x @ w + b, atol=1e-12)

    def test_dim_mismatch(self):
        with pytest.raises(ShapeError):
            T.linear(np.ones(3), np.zeros((4, 2)), np.zeros(2))
