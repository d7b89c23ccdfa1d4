"""Neural-network primitives on Tensors, with hand-derived backward passes.

Convolutions and pooling are im2col/col2im over BLAS matmuls; everything
here is deterministic given its inputs (dropout takes an explicit
Generator). All convs in the network use stride 1; pooling carries the
stride.
"""

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .autodiff import Tensor, _accumulate, _make, _wrap, matmul, transpose, pad
from .errors import ConfigurationError, DataError, DimensionError


def _pair(v):
    if isinstance(v, (tuple, list)):
        if len(v) != 2:
            raise ConfigurationError(f"expected a pair, got {v!r}")
        return int(v[0]), int(v[1])
    return int(v), int(v)


def _windows(xp, kh, kw, sh, sw):
    """Strided view (B, C, Ho, Wo, kh, kw) over a padded array."""
    v = sliding_window_view(xp, (kh, kw), axis=(2, 3))
    return v[:, :, ::sh, ::sw]


def _col2im_add(gxp, gpatch, sh, sw):
    """Scatter-add window gradients (B, C, Ho, Wo, kh, kw) back into gxp."""
    _, _, ho, wo, kh, kw = gpatch.shape
    for u in range(kh):
        for v in range(kw):
            gxp[:, :, u : u + sh * ho : sh, v : v + sw * wo : sw] += gpatch[:, :, :, :, u, v]


def conv2d(x, weight, bias=None, stride=(1, 1), padding=(0, 0), groups=1):
    """Grouped 2-d cross-correlation.

    x: (B, Cin, H, W); weight: (Cout, Cin/groups, kh, kw); symmetric zero
    padding. Output extent: floor((H + 2*pad - kh)/stride) + 1 per axis.
    """
    x, weight = _wrap(x), _wrap(weight)
    if x.ndim != 4 or weight.ndim != 4:
        raise DimensionError(f"conv2d expects 4-d input and weight, got {x.shape} and {weight.shape}")
    sh, sw = _pair(stride)
    ph, pw = _pair(padding)
    B, cin, H, W = x.shape
    cout, cing, kh, kw = weight.shape
    if groups < 1 or cin % groups or cout % groups:
        raise ConfigurationError(f"groups={groups} must divide Cin={cin} and Cout={cout}")
    if cing != cin // groups:
        raise DimensionError(f"weight expects {cing * groups} input channels, input has {cin}")
    if H + 2 * ph < kh or W + 2 * pw < kw:
        raise DimensionError("kernel larger than padded input")
    if sh < 1 or sw < 1:
        raise ConfigurationError("stride must be positive")
    ho = (H + 2 * ph - kh) // sh + 1
    wo = (W + 2 * pw - kw) // sw + 1
    coutg = cout // groups

    xp = np.pad(x.data, ((0, 0), (0, 0), (ph, ph), (pw, pw)))
    w2 = weight.data.reshape(groups, coutg, cing * kh * kw)
    out = np.empty((B, cout, ho, wo), dtype=x.dtype)
    for g in range(groups):
        win = _windows(xp[:, g * cing : (g + 1) * cing], kh, kw, sh, sw)
        cols = win.transpose(0, 2, 3, 1, 4, 5).reshape(B * ho * wo, cing * kh * kw)
        og = cols @ w2[g].T
        out[:, g * coutg : (g + 1) * coutg] = og.reshape(B, ho, wo, coutg).transpose(0, 3, 1, 2)
    if bias is not None:
        bias = _wrap(bias)
        if bias.shape != (cout,):
            raise DimensionError(f"bias must have shape ({cout},)")
        out += bias.data.reshape(1, cout, 1, 1)

    parents = (x, weight) if bias is None else (x, weight, bias)

    def backward(gout):
        gxp = np.zeros_like(xp) if x.requires_grad else None
        gw = np.zeros_like(weight.data) if weight.requires_grad else None
        for g in range(groups):
            gog = gout[:, g * coutg : (g + 1) * coutg].transpose(0, 2, 3, 1).reshape(B * ho * wo, coutg)
            if weight.requires_grad:
                win = _windows(xp[:, g * cing : (g + 1) * cing], kh, kw, sh, sw)
                cols = win.transpose(0, 2, 3, 1, 4, 5).reshape(B * ho * wo, cing * kh * kw)
                gw[g * coutg : (g + 1) * coutg] = (gog.T @ cols).reshape(coutg, cing, kh, kw)
            if x.requires_grad:
                gcols = gog @ w2[g]
                gpatch = gcols.reshape(B, ho, wo, cing, kh, kw).transpose(0, 3, 1, 2, 4, 5)
                _col2im_add(gxp[:, g * cing : (g + 1) * cing], gpatch, sh, sw)
        if x.requires_grad:
            _accumulate(x, gxp[:, :, ph : ph + H, pw : pw + W])
        if weight.requires_grad:
            _accumulate(weight, gw)
        if bias is not None and bias.requires_grad:
            _accumulate(bias, gout.sum(axis=(0, 2, 3)))

    return _make(out, parents, backward)


def avg_pool2d(x, kernel, stride=None, padding=(0, 0), include_pad=True):
    """Mean pooling; include_pad=True divides by the full window size."""
    x = _wrap(x)
    if x.ndim != 4:
        raise DimensionError("avg_pool2d expects a 4-d input")
    kh, kw = _pair(kernel)
    sh, sw = _pair(stride if stride is not None else kernel)
    ph, pw = _pair(padding)
    if kh < 1 or kw < 1:
        raise ConfigurationError("pooling kernel extents must be positive")
    if ph >= kh or pw >= kw:
        raise ConfigurationError("pooling padding must be smaller than the kernel")
    B, C, H, W = x.shape
    if H + 2 * ph < kh or W + 2 * pw < kw:
        raise DimensionError("pooling window larger than padded input")
    ho = (H + 2 * ph - kh) // sh + 1
    wo = (W + 2 * pw - kw) // sw + 1

    xp = np.pad(x.data, ((0, 0), (0, 0), (ph, ph), (pw, pw)))
    winsum = _windows(xp, kh, kw, sh, sw).sum(axis=(-2, -1))
    if include_pad:
        div = np.array(kh * kw, dtype=x.dtype)
    else:
        ones = np.pad(np.ones((1, 1, H, W), dtype=x.dtype), ((0, 0), (0, 0), (ph, ph), (pw, pw)))
        div = _windows(ones, kh, kw, sh, sw).sum(axis=(-2, -1))  # valid cells per window
    out = winsum / div

    def backward(gout):
        if not x.requires_grad:
            return
        gdiv = gout / div
        gxp = np.zeros_like(xp)
        gpatch = np.broadcast_to(gdiv[..., None, None], (B, C, ho, wo, kh, kw))
        _col2im_add(gxp, gpatch, sh, sw)
        _accumulate(x, gxp[:, :, ph : ph + H, pw : pw + W])

    return _make(out, (x,), backward)


def linear(x, weight, bias=None):
    """Affine map over the trailing axis: x @ weight.T + bias."""
    x, weight = _wrap(x), _wrap(weight)
    if weight.ndim != 2:
        raise DimensionError("linear weight must be 2-d (Dout, Din)")
    if x.shape[-1] != weight.shape[1]:
        raise DimensionError(f"linear expects trailing dim {weight.shape[1]}, got {x.shape[-1]}")
    out = matmul(x, transpose(weight, (1, 0)))
    if bias is not None:
        bias = _wrap(bias)
        if bias.shape != (weight.shape[0],):
            raise DimensionError(f"bias must have shape ({weight.shape[0]},)")
        out = out + bias
    return out


def batch_norm(x, gamma, beta, running_mean, running_var, training, momentum=0.1, eps=1e-5):
    """Per-channel normalization over axis 1.

    Training mode normalizes by biased batch statistics and updates the
    running buffers in place (running variance uses the unbiased
    estimate); eval mode normalizes by the running buffers. B >= 2 is
    required in training mode.
    """
    x, gamma, beta = _wrap(x), _wrap(gamma), _wrap(beta)
    if x.ndim < 2:
        raise DimensionError("batch_norm expects at least a 2-d input (B, C, ...)")
    C = x.shape[1]
    if gamma.shape != (C,) or beta.shape != (C,):
        raise DimensionError("gamma/beta must have one entry per channel")
    axes = (0,) + tuple(range(2, x.ndim))
    shape = (1, C) + (1,) * (x.ndim - 2)
    n = int(np.prod([x.shape[a] for a in axes]))

    if training:
        if x.shape[0] < 2:
            raise ConfigurationError("batch_norm in training mode needs a batch of at least 2")
        mean = x.data.mean(axis=axes)
        var = x.data.var(axis=axes)
        running_mean *= 1.0 - momentum
        running_mean += momentum * mean
        running_var *= 1.0 - momentum
        running_var += momentum * var * (n / (n - 1.0))
    else:
        mean = running_mean.astype(x.dtype)
        var = running_var.astype(x.dtype)

    inv = (1.0 / np.sqrt(var + eps)).astype(x.dtype).reshape(shape)
    xhat = (x.data - mean.astype(x.dtype).reshape(shape)) * inv
    out = gamma.data.reshape(shape) * xhat + beta.data.reshape(shape)

    def backward(gout):
        if gamma.requires_grad:
            _accumulate(gamma, (gout * xhat).sum(axis=axes))
        if beta.requires_grad:
            _accumulate(beta, gout.sum(axis=axes))
        if not x.requires_grad:
            return
        gs = gamma.data.reshape(shape) * inv
        if training:
            gm = gout.mean(axis=axes).reshape(shape)
            gxm = (gout * xhat).mean(axis=axes).reshape(shape)
            _accumulate(x, gs * (gout - gm - xhat * gxm))
        else:
            _accumulate(x, gs * gout)

    return _make(out, (x, gamma, beta), backward)


def elu(x):
    """x for x > 0, exp(x) - 1 otherwise."""
    x = _wrap(x)
    neg = np.expm1(np.minimum(x.data, 0.0))
    pos_mask = x.data > 0
    out = np.where(pos_mask, x.data, neg)

    def backward(g):
        if x.requires_grad:
            _accumulate(x, g * np.where(pos_mask, np.ones((), dtype=x.dtype), neg + 1.0))

    return _make(out, (x,), backward)


def dropout(x, p, training, rng=None):
    """Zero entries with probability p and rescale survivors by 1/(1-p)."""
    x = _wrap(x)
    if not 0.0 <= p < 1.0:
        raise ConfigurationError(f"dropout probability must lie in [0, 1), got {p}")
    if not training or p == 0.0:
        return x
    if rng is None:
        raise ConfigurationError("dropout in training mode needs an explicit rng stream")
    keep = (rng.random(x.shape) >= p).astype(x.dtype) / np.asarray(1.0 - p, dtype=x.dtype)
    out = x.data * keep

    def backward(g):
        if x.requires_grad:
            _accumulate(x, g * keep)

    return _make(out, (x,), backward)


def softmax(x, axis=-1):
    """Numerically stable softmax along one axis; -inf scores map to 0."""
    x = _wrap(x)
    shifted = x.data - np.max(x.data, axis=axis, keepdims=True)
    e = np.exp(shifted)
    out = e / e.sum(axis=axis, keepdims=True)

    def backward(g):
        if x.requires_grad:
            dot = (g * out).sum(axis=axis, keepdims=True)
            _accumulate(x, out * (g - dot))

    return _make(out, (x,), backward)


def masked_fill(x, keep_mask, value):
    """Replace entries where keep_mask is False by a constant.

    The mask is data, not a differentiable input: gradients flow only
    through kept entries.
    """
    x = _wrap(x)
    keep_mask = np.asarray(keep_mask, dtype=bool)
    if keep_mask.shape != x.shape:
        raise DimensionError("mask shape must match input shape")
    out = np.where(keep_mask, x.data, np.asarray(value, dtype=x.dtype))

    def backward(g):
        if x.requires_grad:
            _accumulate(x, np.where(keep_mask, g, np.zeros((), dtype=x.dtype)))

    return _make(out, (x,), backward)


def cross_entropy(logits, targets):
    """Mean negative log-likelihood of integer class targets.

    logits: (B, L); targets: (B,) ints in [0, L).
    """
    logits = _wrap(logits)
    if logits.ndim != 2:
        raise DimensionError("cross_entropy expects (B, L) logits")
    t = np.asarray(targets)
    if t.ndim != 1 or t.shape[0] != logits.shape[0]:
        raise DimensionError("targets must be a vector matching the batch size")
    B, L = logits.shape
    if t.size and (t.min() < 0 or t.max() >= L):
        raise DataError(f"target out of range [0, {L})")
    t = t.astype(np.int64)

    shifted = logits.data - logits.data.max(axis=1, keepdims=True)
    lse = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    logp = shifted - lse
    out = np.asarray(-logp[np.arange(B), t].mean(), dtype=logits.dtype)

    def backward(g):
        if logits.requires_grad:
            grad = np.exp(logp)
            grad[np.arange(B), t] -= 1.0
            _accumulate(logits, grad * (g / B))

    return _make(out, (logits,), backward)


def conv1d_dilated(x, weight, bias=None, dilation=1, left_pad=0):
    """1-d dilated cross-correlation over (B, C, T) with left-only padding.

    With left_pad = (K-1)*dilation the op is causal and length-preserving:
    output t sees inputs t, t-d, ..., t-(K-1)*d only.
    """
    x, weight = _wrap(x), _wrap(weight)
    if x.ndim != 3 or weight.ndim != 3:
        raise DimensionError("conv1d_dilated expects (B, C, T) input and (Cout, Cin, K) weight")
    B, cin, T = x.shape
    cout, cinw, K = weight.shape
    if cinw != cin:
        raise DimensionError(f"weight expects {cinw} input channels, input has {cin}")
    span = (K - 1) * dilation + 1
    if T + left_pad < span:
        raise DimensionError("dilated kernel span exceeds padded input")
    to = T + left_pad - span + 1

    xp = np.pad(x.data, ((0, 0), (0, 0), (left_pad, 0)))
    out = np.zeros((B, cout, to), dtype=x.dtype)
    for k in range(K):
        xs = xp[:, :, k * dilation : k * dilation + to]
        out += np.einsum("oi,bit->bot", weight.data[:, :, k], xs, optimize=True)
    if bias is not None:
        bias = _wrap(bias)
        if bias.shape != (cout,):
            raise DimensionError(f"bias must have shape ({cout},)")
        out += bias.data.reshape(1, cout, 1)

    parents = (x, weight) if bias is None else (x, weight, bias)

    def backward(gout):
        if weight.requires_grad:
            gw = np.empty_like(weight.data)
            for k in range(K):
                xs = xp[:, :, k * dilation : k * dilation + to]
                gw[:, :, k] = np.einsum("bot,bit->oi", gout, xs, optimize=True)
            _accumulate(weight, gw)
        if x.requires_grad:
            gxp = np.zeros_like(xp)
            for k in range(K):
                gxp[:, :, k * dilation : k * dilation + to] += np.einsum(
                    "oi,bot->bit", weight.data[:, :, k], gout, optimize=True
                )
            _accumulate(x, gxp[:, :, left_pad:])
        if bias is not None and bias.requires_grad:
            _accumulate(bias, gout.sum(axis=(0, 2)))

    return _make(out, parents, backward)


def same_pad_time(x, kernel_w):
    """Asymmetric zero-pad along the last axis so stride-1 conv keeps length.

    Pads (k-1)//2 on the left and k//2 on the right; for odd kernels both
    sides get (k-1)/2.
    """
    left = (kernel_w - 1) // 2
    right = kernel_w // 2
    if left == 0 and right == 0:
        return _wrap(x)
    width = [(0, 0)] * (np.ndim(x.data if isinstance(x, Tensor) else x) - 1) + [(left, right)]
    return pad(x, width)
