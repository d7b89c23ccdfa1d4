"""Named gradient-check scopes for the CLI and the test suite.

Every scope builds small float64 inputs, a deterministic scalar-valued
closure, and runs the finite-difference comparison. The "model-mini"
scope checks every parameter group of a miniature end-to-end model.
"""

import numpy as np

from . import ops
from .attention import AttentionParams, msca_forward, multiscale_pool, topk_softmax
from .autodiff import Tensor, precision
from .config import AttentionConfig, ModelConfig, TcnConfig
from .gradcheck import grad_check
from .model import CsanetModel


def mini_model_config() -> ModelConfig:
    """A miniature config (C=3, T=64, B=2, L=2 scale) for end-to-end checks.

    Dropout is zero so the closures stay deterministic under perturbation.
    """
    return ModelConfig(
        channels=3,
        time_steps=64,
        n_classes=2,
        temporal_kernels=(8, 6, 4, 3),
        temporal_filters=(2, 2, 2, 2),
        depth_multiplier=2,
        pools=(4, 4),
        spa_filters=4,
        spa_kernel=4,
        conv_dropout=0.0,
        attention=AttentionConfig(embed_dim=4, heads=2),
        tcn=TcnConfig(dilations=(1, 2), kernel=2, filters=4, dropout=0.0),
    )


def _proj_loss(out, rng):
    """Project to a scalar with fixed random weights (breaks symmetry)."""
    c = Tensor(rng.standard_normal(out.shape))
    return (out * c).sum()


def _rng(seed=7):
    return np.random.Generator(np.random.PCG64(seed))


def _check_conv2d():
    rng = _rng(1)
    x = Tensor(rng.standard_normal((2, 3, 5, 6)))
    w = Tensor(rng.standard_normal((4, 3, 3, 3)) * 0.5)
    b = Tensor(rng.standard_normal(4))
    return grad_check(
        lambda x_, w_, b_: _proj_loss(ops.conv2d(x_, w_, b_, padding=(1, 1)), _rng(100)),
        [x, w, b],
    )


def _check_depthwise():
    rng = _rng(2)
    x = Tensor(rng.standard_normal((2, 4, 5, 6)))
    w = Tensor(rng.standard_normal((8, 1, 3, 3)) * 0.5)
    return grad_check(
        lambda x_, w_: _proj_loss(ops.conv2d(x_, w_, groups=4, padding=(1, 1)), _rng(101)),
        [x, w],
    )


def _check_linear():
    rng = _rng(3)
    x = Tensor(rng.standard_normal((3, 7)))
    w = Tensor(rng.standard_normal((4, 7)) * 0.5)
    b = Tensor(rng.standard_normal(4))
    return grad_check(
        lambda x_, w_, b_: _proj_loss(ops.linear(x_, w_, b_), _rng(102)),
        [x, w, b],
    )


def _check_batch_norm():
    rng = _rng(4)
    x = Tensor(rng.standard_normal((4, 3, 5)))
    gamma = Tensor(1.0 + 0.1 * rng.standard_normal(3))
    beta = Tensor(rng.standard_normal(3))
    rm = np.zeros(3)
    rv = np.ones(3)
    return grad_check(
        lambda x_, g_, b_: _proj_loss(ops.batch_norm(x_, g_, b_, rm, rv, training=True), _rng(103)),
        [x, gamma, beta],
    )


def _check_elu():
    rng = _rng(5)
    x = Tensor(rng.standard_normal((4, 5)) * 2.0)
    return grad_check(lambda x_: _proj_loss(ops.elu(x_), _rng(104)), [x])


def _check_softmax():
    rng = _rng(6)
    x = Tensor(rng.standard_normal((3, 7)))
    return grad_check(lambda x_: _proj_loss(ops.softmax(x_, axis=-1), _rng(105)), [x])


def _check_cross_entropy():
    rng = _rng(7)
    logits = Tensor(rng.standard_normal((4, 5)))
    targets = np.array([0, 2, 4, 1])
    return grad_check(lambda l_: ops.cross_entropy(l_, targets), [logits])


def _check_avg_pool():
    rng = _rng(8)
    x = Tensor(rng.standard_normal((2, 3, 6, 7)))
    return grad_check(
        lambda x_: _proj_loss(
            ops.avg_pool2d(x_, kernel=(2, 3), stride=(2, 2), padding=(1, 1), include_pad=True),
            _rng(106),
        ),
        [x],
    )


def _check_topk_softmax():
    rng = _rng(9)
    scores = Tensor(rng.standard_normal((3, 4, 7)))
    return grad_check(lambda s_: _proj_loss(topk_softmax(s_, 3), _rng(107)), [scores])


def _check_multiscale_pool():
    rng = _rng(10)
    y = Tensor(rng.standard_normal((2, 4, 9)))
    cfg = AttentionConfig(embed_dim=4, heads=2)
    return grad_check(lambda y_: _proj_loss(multiscale_pool(y_, cfg), _rng(108)), [y])


def _check_msca():
    rng = _rng(11)
    cfg = AttentionConfig(embed_dim=4, heads=2)
    with precision("float64"):
        params = AttentionParams(4, _rng(12))
    x = Tensor(rng.standard_normal((2, 4, 6)))
    y = Tensor(rng.standard_normal((2, 4, 6)))
    inputs = [x, y, params.w_q, params.w_k, params.w_v, params.alpha, params.beta]
    return grad_check(
        lambda *_: _proj_loss(msca_forward(x, y, params, cfg), _rng(109)),
        inputs,
    )


def _check_tcn():
    rng = _rng(13)
    x = Tensor(rng.standard_normal((2, 3, 8)))
    w = Tensor(rng.standard_normal((3, 3, 2)) * 0.5)
    b = Tensor(rng.standard_normal(3))
    return grad_check(
        lambda x_, w_, b_: _proj_loss(
            ops.conv1d_dilated(x_, w_, b_, dilation=2, left_pad=2), _rng(110)
        ),
        [x, w, b],
    )


def _check_model_mini():
    cfg = mini_model_config()
    with precision("float64"):
        model = CsanetModel(cfg, rng=_rng(14))
    rng = _rng(15)
    x = Tensor(rng.standard_normal((2, 1, cfg.channels, cfg.time_steps)))
    y = np.array([0, 1])
    params = list(model.parameters())

    report = grad_check(
        lambda *_: ops.cross_entropy(model(x, training=True), y),
        params,
    )
    report.labels = [p.name for p in params]
    return report


GRADCHECK_SCOPES = {
    "conv2d": _check_conv2d,
    "depthwise": _check_depthwise,
    "linear": _check_linear,
    "batch_norm": _check_batch_norm,
    "elu": _check_elu,
    "softmax": _check_softmax,
    "cross_entropy": _check_cross_entropy,
    "avg_pool": _check_avg_pool,
    "topk_softmax": _check_topk_softmax,
    "multiscale_pool": _check_multiscale_pool,
    "msca": _check_msca,
    "tcn": _check_tcn,
    "model-mini": _check_model_mini,
}


def run_scope(name):
    if name not in GRADCHECK_SCOPES:
        raise KeyError(name)
    return GRADCHECK_SCOPES[name]()
