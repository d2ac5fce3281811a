"""Central finite-difference checks for every layer and loss variant."""

import numpy as np
import pytest

from cyclebench.methods import one_hot, smooth_labels
from cyclebench.nn import (
    BlurPoolDown,
    Conv,
    Dense,
    GlobalAvgPool,
    ReLU,
    build_mlp,
    build_tiny_cnn,
    forward_backward,
    softmax_cross_entropy,
)
from cyclebench.rng import substream
from cyclebench.tensor import Layout, Tensor4, to_layout

EPS = 1e-6
REL_TOL = 1e-6


def _as_float(x):
    return x.data if isinstance(x, Tensor4) else x


def fd_model_check(model, x, targets, samples_per_param=None):
    """Compare analytic grads against central differences.

    Returns the worst per-tensor relative error, measured in vector norm
    over the probed entries: per-entry ratios are not certifiable at 1e-6
    because roundoff in the two loss evaluations (~1e-10 absolute) swamps
    entries whose true gradient is itself ~1e-5.
    """
    _, grads = forward_backward(model, x, targets)
    analytic = model.grad_arrays(grads)
    worst = 0.0
    for p, g in zip(model.param_arrays(), analytic):
        flat_p, flat_g = p.ravel(), g.ravel()
        idx = np.arange(flat_p.size)
        if samples_per_param and flat_p.size > samples_per_param:
            idx = np.linspace(0, flat_p.size - 1, samples_per_param).astype(int)
        fd_vec, an_vec = [], []
        for i in idx:
            orig = flat_p[i]
            flat_p[i] = orig + EPS
            up, _ = forward_backward(model, x, targets)
            flat_p[i] = orig - EPS
            down, _ = forward_backward(model, x, targets)
            flat_p[i] = orig
            fd_vec.append((up - down) / (2 * EPS))
            an_vec.append(flat_g[i])
        fd_vec, an_vec = np.array(fd_vec), np.array(an_vec)
        denom = max(np.linalg.norm(fd_vec), np.linalg.norm(an_vec), 1e-8)
        worst = max(worst, np.linalg.norm(fd_vec - an_vec) / denom)
    return worst


def fd_input_check(layer, x, rng):
    """Check a single layer's input gradient against central differences
    through a random linear readout.  Error is measured in vector norm
    over the whole input (see fd_model_check for why)."""
    y, cache = layer.forward(x)
    probe = rng.standard_normal(_as_float(y).shape)
    dy = Tensor4(probe, y.layout) if isinstance(y, Tensor4) else probe
    dx, _ = layer.backward(cache, dy)
    dx_arr = _as_float(dx)
    x_arr = _as_float(x)
    fd = np.zeros_like(x_arr)
    for i in np.ndindex(x_arr.shape):
        orig = x_arr[i]
        x_arr[i] = orig + EPS
        up = float((_as_float(layer.forward(x)[0]) * probe).sum())
        x_arr[i] = orig - EPS
        down = float((_as_float(layer.forward(x)[0]) * probe).sum())
        x_arr[i] = orig
        fd[i] = (up - down) / (2 * EPS)
    denom = max(np.linalg.norm(fd), np.linalg.norm(dx_arr), 1e-8)
    return np.linalg.norm(fd - dx_arr) / denom


@pytest.fixture
def grad_rng():
    return substream(99, "gradcheck")


class TestLayerInputGrads:
    def test_dense(self, grad_rng):
        layer = Dense(grad_rng.standard_normal((5, 4)), grad_rng.standard_normal(4))
        x = grad_rng.standard_normal((3, 5))
        assert fd_input_check(layer, x, grad_rng) < REL_TOL

    def test_relu(self, grad_rng):
        x = grad_rng.standard_normal((4, 6)) + 0.05  # keep clear of the kink
        assert fd_input_check(ReLU(), x, grad_rng) < REL_TOL

    @pytest.mark.parametrize("layout", [Layout.CHANNELS_FIRST, Layout.CHANNELS_LAST])
    @pytest.mark.parametrize("stride,padding", [(1, 0), (1, 1), (2, 1)])
    def test_conv(self, grad_rng, layout, stride, padding):
        layer = Conv(grad_rng.standard_normal((3, 2, 3, 3)),
                     grad_rng.standard_normal(3), stride=stride, padding=padding)
        x = to_layout(
            Tensor4(grad_rng.standard_normal((2, 2, 6, 6)), Layout.CHANNELS_FIRST), layout
        )
        assert fd_input_check(layer, x, grad_rng) < REL_TOL

    @pytest.mark.parametrize("layout", [Layout.CHANNELS_FIRST, Layout.CHANNELS_LAST])
    def test_blurpool(self, grad_rng, layout):
        x = to_layout(
            Tensor4(grad_rng.standard_normal((2, 2, 6, 6)), Layout.CHANNELS_FIRST), layout
        )
        assert fd_input_check(BlurPoolDown(), x, grad_rng) < REL_TOL

    def test_global_avg_pool(self, grad_rng):
        x = Tensor4(grad_rng.standard_normal((2, 3, 4, 4)), Layout.CHANNELS_FIRST)
        assert fd_input_check(GlobalAvgPool(), x, grad_rng) < REL_TOL


def healthy_head(model, rng):
    """Re-randomize the classifier head at unit-ish scale: the production
    builders start it near zero, which makes upstream gradients too small
    for finite differences to resolve at 1e-6 relative."""
    head = model.layers[-1]
    head.w[:] = rng.standard_normal(head.w.shape) * 0.5
    head.b[:] = rng.standard_normal(head.b.shape) * 0.1
    return model


def _loss_variants(rng, n, k):
    labels = rng.integers(0, k, n)
    plain = one_hot(labels, k)
    smoothed = smooth_labels(labels, k, 0.1)
    yield "plain", plain
    yield "smoothed", smoothed
    for name, base in (("mixed", plain), ("smoothed+mixed", smoothed)):
        lam = float(rng.beta(0.2, 0.2))
        perm = rng.permutation(n)
        yield name, lam * base + (1 - lam) * base[perm]


class TestModelGrads:
    def test_mlp_all_loss_variants(self, grad_rng):
        for name, targets in _loss_variants(grad_rng, 4, 3):
            model = healthy_head(build_mlp([5, 6, 3], grad_rng), grad_rng)
            x = grad_rng.standard_normal((4, 5))
            worst = fd_model_check(model, x, targets)
            assert worst < REL_TOL, f"{name}: {worst}"

    @pytest.mark.parametrize("downsample", ["stride", "blurpool"])
    def test_cnn_all_loss_variants(self, grad_rng, downsample):
        for name, targets in _loss_variants(grad_rng, 2, 3):
            model = healthy_head(build_tiny_cnn(2, [3], 3, downsample, grad_rng), grad_rng)
            x = Tensor4(grad_rng.standard_normal((2, 2, 6, 6)), Layout.CHANNELS_FIRST)
            worst = fd_model_check(model, x, targets, samples_per_param=12)
            assert worst < REL_TOL, f"{downsample}/{name}: {worst}"


class TestForwardBackwardContract:
    def test_zero_weight_mlp_loss_is_log_k(self, grad_rng):
        model = build_mlp([4, 5, 6], grad_rng)
        for p in model.param_arrays():
            p[:] = 0.0
        x = grad_rng.standard_normal((8, 4))
        loss, _ = forward_backward(model, x, grad_rng.integers(0, 6, 8))
        assert loss == pytest.approx(np.log(6), abs=1e-12)

    def test_duplicating_batch_leaves_loss_and_grads_unchanged(self, grad_rng):
        model = build_mlp([4, 5, 3], grad_rng)
        x = grad_rng.standard_normal((3, 4))
        y = grad_rng.integers(0, 3, 3)
        loss1, grads1 = forward_backward(model, x, y)
        loss2, grads2 = forward_backward(model, np.vstack([x, x]), np.concatenate([y, y]))
        assert loss2 == pytest.approx(loss1, abs=1e-12)
        for a, b in zip(model.grad_arrays(grads1), model.grad_arrays(grads2)):
            assert np.allclose(a, b, atol=1e-12)

    def test_shape_mismatch_raises(self, grad_rng):
        model = build_mlp([4, 5, 3], grad_rng)
        with pytest.raises(Exception, match="target rows"):
            forward_backward(model, grad_rng.standard_normal((3, 4)), np.array([0]))

    def test_softmax_ce_gradient_direction(self):
        logits = np.array([[2.0, 0.0, -1.0]])
        targets = np.array([[1.0, 0.0, 0.0]])
        loss, dlogits = softmax_cross_entropy(logits, targets)
        assert dlogits[0, 0] < 0  # pushing the true logit up lowers loss
        assert dlogits[0, 1] > 0 and dlogits[0, 2] > 0
        assert abs(dlogits.sum()) < 1e-12


class TestLayoutInvariance:
    @pytest.mark.parametrize("downsample", ["stride", "blurpool"])
    def test_model_forward_matches_across_layouts(self, grad_rng, downsample):
        model = build_tiny_cnn(2, [4, 6], 5, downsample, grad_rng)
        x = Tensor4(grad_rng.standard_normal((3, 2, 8, 8)), Layout.CHANNELS_FIRST)
        first, _ = model.forward(x)
        last, _ = model.forward(to_layout(x, Layout.CHANNELS_LAST))
        rel = np.max(np.abs(first - last) / (np.abs(first) + 1e-12))
        assert rel <= 1e-10
