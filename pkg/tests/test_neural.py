import numpy as np
import pytest

from snbeam.neural import (
    NetworkSpec,
    concat_skip,
    conv3x3_backward,
    conv3x3_forward,
    he_normal_init,
    init_params,
    maxpool_backward,
    maxpool_forward,
    prelu_backward,
    prelu_forward,
    split_skip_grad,
    sum_reduce,
    unet_backward,
    unet_forward,
    upsample,
    upsample_backward,
)


def numgrad(f, x, h=1e-5):
    """Central finite differences of a scalar function of an array."""
    g = np.zeros_like(x)
    flat, gf = x.ravel(), g.ravel()
    for i in range(flat.size):
        old = flat[i]
        flat[i] = old + h
        fp = f()
        flat[i] = old - h
        fm = f()
        flat[i] = old
        gf[i] = (fp - fm) / (2 * h)
    return g


def rel_err(a, b):
    scale = max(np.abs(a).max(), np.abs(b).max(), 1e-10)
    return np.abs(a - b).max() / scale


class TestConv3x3:
    def test_identity_kernel(self):
        rng = np.random.default_rng(0)
        x = rng.standard_normal((7, 5, 3))
        k = np.zeros((3, 3, 3, 3))
        for c in range(3):
            k[1, 1, c, c] = 1.0
        y = conv3x3_forward(x, k, np.zeros(3))
        assert np.array_equal(y, x)

    def test_zero_kernel_broadcasts_bias(self):
        x = np.random.default_rng(1).standard_normal((6, 4, 2))
        b = np.array([0.3, -1.2])
        y = conv3x3_forward(x, np.zeros((3, 3, 2, 2)), b)
        assert np.allclose(y, np.broadcast_to(b, y.shape))

    def test_channel_mismatch(self):
        with pytest.raises(ValueError):
            conv3x3_forward(np.zeros((4, 4, 2)), np.zeros((3, 3, 3, 1)), np.zeros(1))

    def test_gradients_vs_finite_differences(self):
        rng = np.random.default_rng(2)
        x = rng.standard_normal((7, 5, 2))
        k = rng.standard_normal((3, 3, 2, 3)) * 0.5
        b = rng.standard_normal(3) * 0.1
        proj = rng.standard_normal((7, 5, 3))

        def loss():
            return float(np.sum(conv3x3_forward(x, k, b) * proj))

        dx, dk, db = conv3x3_backward(x, k, proj)
        assert rel_err(dx, numgrad(loss, x)) < 1e-6
        assert rel_err(dk, numgrad(loss, k)) < 1e-6
        assert rel_err(db, numgrad(loss, b)) < 1e-6


class TestPReLU:
    def test_slope_one_is_identity(self):
        x = np.random.default_rng(3).standard_normal((5, 4, 2))
        assert np.array_equal(prelu_forward(x, np.ones(2)), x)

    def test_slope_zero_is_relu(self):
        x = np.random.default_rng(4).standard_normal((5, 4, 2))
        assert np.array_equal(prelu_forward(x, np.zeros(2)), np.maximum(x, 0))

    def test_gradients(self):
        rng = np.random.default_rng(5)
        x = rng.standard_normal((6, 3, 2))
        a = rng.uniform(0.1, 0.5, 2)
        proj = rng.standard_normal(x.shape)

        def loss():
            return float(np.sum(prelu_forward(x, a) * proj))

        dx, da = prelu_backward(x, a, proj)
        assert rel_err(dx, numgrad(loss, x)) < 1e-6
        assert rel_err(da, numgrad(loss, a)) < 1e-6


class TestPoolUpsample:
    def test_pool_values(self):
        x = np.array([1.0, 3.0, 2.0, 0.0]).reshape(4, 1, 1)
        y, _ = maxpool_forward(x, pool_d2=False)
        assert y.ravel().tolist() == [3.0, 2.0]

    def test_upsample_values(self):
        x = np.array([[1.0], [2.0]])[:, None, :]  # [2,1,1] = [a, b]
        y = upsample(x, pool_d2=False)
        assert y.ravel().tolist() == [1.0, 1.0, 2.0, 2.0]

    def test_pool_of_upsample_identity(self):
        rng = np.random.default_rng(6)
        for pool_d2 in (False, True):
            x = rng.standard_normal((4, 4, 3))
            up = upsample(x, pool_d2)
            down, _ = maxpool_forward(up, pool_d2)
            assert np.array_equal(down, x)

    def test_pool_backward_routes_to_argmax(self):
        rng = np.random.default_rng(7)
        x = rng.standard_normal((8, 6, 2))
        proj = rng.standard_normal((4, 3, 2))
        y, arg = maxpool_forward(x, pool_d2=True)

        def loss():
            return float(np.sum(maxpool_forward(x, True)[0] * proj))

        dx = maxpool_backward(x.shape, arg, proj, pool_d2=True)
        assert rel_err(dx, numgrad(loss, x)) < 1e-6

    def test_upsample_backward_adjoint(self):
        # <upsample(x), y> == <x, upsample_backward(y)> for all x, y
        rng = np.random.default_rng(8)
        x = rng.standard_normal((3, 4, 2))
        y = rng.standard_normal((6, 8, 2))
        lhs = np.sum(upsample(x, True) * y)
        rhs = np.sum(x * upsample_backward(y, True))
        assert lhs == pytest.approx(rhs, rel=1e-12)

    def test_odd_d1_rejected(self):
        with pytest.raises(ValueError):
            maxpool_forward(np.zeros((5, 4, 1)), pool_d2=False)


class TestConcatSum:
    def test_concat_shapes_and_order(self):
        a = np.ones((8, 4, 16))
        b = 2 * np.ones((8, 4, 16))
        y = concat_skip(a, b)
        assert y.shape == (8, 4, 32)
        assert np.all(y[..., :16] == 1) and np.all(y[..., 16:] == 2)

    def test_concat_mismatch(self):
        with pytest.raises(ValueError):
            concat_skip(np.zeros((8, 4, 2)), np.zeros((8, 5, 2)))

    def test_split_grad(self):
        dy = np.random.default_rng(9).standard_normal((4, 4, 6))
        da, db = split_skip_grad(dy, 2)
        assert np.array_equal(np.concatenate([da, db], axis=2), dy)

    def test_sum_reduce(self):
        x = np.ones((12, 64, 1))
        assert np.array_equal(sum_reduce(x), np.full(12, 64.0))
        assert not sum_reduce(np.zeros((5, 3, 1))).any()
        with pytest.raises(ValueError):
            sum_reduce(np.zeros((5, 3, 2)))


class TestHeInit:
    def test_seed_determinism(self):
        a = he_normal_init((3, 3, 8, 16), seed=42)
        b = he_normal_init((3, 3, 8, 16), seed=42)
        assert np.array_equal(a, b)

    def test_std_matches_fan_in(self):
        fan_in = 9 * 4
        draws = he_normal_init((100000,), seed=0, fan_in=fan_in)
        expect = np.sqrt(2.0 / fan_in)
        assert draws.std() == pytest.approx(expect, rel=0.05)
        assert abs(draws.mean()) < 3 * expect / np.sqrt(draws.size)


class TestUNet:
    def _tiny(self, in_channels=3):
        spec = NetworkSpec(in_channels=in_channels, widths=(2, 2, 2), pool_d2=True,
                           dtype="float64")
        return spec, init_params(spec, seed=1)

    def test_zero_input_zero_output(self):
        spec, params = self._tiny()
        y = unet_forward(np.zeros((32, 8, 3)), params, spec)
        assert not y.any()

    @pytest.mark.parametrize("n", [400, 1918])
    def test_output_length_contract(self, n):
        spec, params = self._tiny()
        x = np.random.default_rng(10).standard_normal((n, 8, 3))
        assert unet_forward(x, params, spec).shape == (n,)

    def test_network_gradients_vs_finite_differences(self):
        # full-network check on a tiny instance, double precision; biases
        # are randomized so no activation sits exactly on the PReLU kink
        spec, params = self._tiny()
        rng = np.random.default_rng(11)
        for p in params.values():
            p += 0.05 * rng.standard_normal(p.shape)
        x = rng.standard_normal((16, 4, 3))
        proj = rng.standard_normal(16)

        def loss():
            return float(np.sum(unet_forward(x, params, spec) * proj))

        _, cache = unet_forward(x, params, spec, want_cache=True)
        grads = unet_backward(proj, params, spec, cache)
        worst = 0.0
        for name in params:
            worst = max(worst, rel_err(grads[name], numgrad(loss, params[name])))
        assert worst < 1e-5

    def test_angles_d2_variant(self):
        # permuted layout: d2 = 3 angles, pooling on depth only
        spec = NetworkSpec(in_channels=8, widths=(2, 2, 2), pool_d2=False, dtype="float64")
        params = init_params(spec, seed=2)
        rng0 = np.random.default_rng(20)
        for p in params.values():
            p += 0.05 * rng0.standard_normal(p.shape)
        x = np.random.default_rng(12).standard_normal((24, 3, 8))
        y = unet_forward(x, params, spec)
        assert y.shape == (24,)
        rng = np.random.default_rng(13)
        proj = rng.standard_normal(24)

        def loss():
            return float(np.sum(unet_forward(x, params, spec) * proj))

        _, cache = unet_forward(x, params, spec, want_cache=True)
        grads = unet_backward(proj, params, spec, cache)
        checked = ["enc0.conv0.kernel", "bot.conv1.slope", "dec2.conv0.bias", "proj.kernel"]
        for name in checked:
            assert rel_err(grads[name], numgrad(loss, params[name])) < 1e-5
