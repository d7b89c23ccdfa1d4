"""The assembled network: four conv branches, attention fusion, TCNs, head.

Each branch pairs one temporal kernel scale with its own spatial feature
extractor (temporal conv -> depthwise channel conv -> pooled
spatial-refinement conv). Branch outputs are fused by attention (the
first branch attends to itself densely; the others run sparse
cross-attention), passed through per-branch temporal convolutional
networks, and classified from the concatenated readouts.
"""

import dataclasses

import numpy as np

from . import ops
from .attention import AttentionParams, msca_forward, residual_fuse
from .autodiff import Tensor, concat, narrow
from .config import ModelConfig
from .errors import DimensionError
from .layers import BatchNorm, Conv1dDilated, Conv2d, Layer, LayerList, Linear


class TcnBlock(Layer):
    """One residual block: two causal dilated convs with BN/ELU/dropout."""

    def __init__(self, channels, kernel, dilation, dropout, rng):
        super().__init__()
        self.dropout = dropout
        self.conv1 = Conv1dDilated(channels, channels, kernel, dilation, rng)
        self.bn1 = BatchNorm(channels)
        self.conv2 = Conv1dDilated(channels, channels, kernel, dilation, rng)
        self.bn2 = BatchNorm(channels)

    def __call__(self, x, training, rng=None):
        h = ops.dropout(ops.elu(self.bn1(self.conv1.causal(x), training)), self.dropout, training, rng)
        h = ops.dropout(ops.elu(self.bn2(self.conv2.causal(h), training)), self.dropout, training, rng)
        return x + h


class TcnStack(Layer):
    """Residual blocks at increasing dilation; length-preserving."""

    def __init__(self, cfg: ModelConfig, rng):
        super().__init__()
        blocks = []
        for d in cfg.tcn.dilations:
            blocks.append(TcnBlock(cfg.tcn.filters, cfg.tcn.kernel, d, cfg.tcn.dropout, rng))
        self.blocks = LayerList(blocks)

    def __call__(self, x, training, rng=None):
        for block in self.blocks:
            x = block(x, training, rng)
        return x


class Branch(Layer):
    """One temporal-scale pipeline plus its fusion/TCN parameters."""

    def __init__(self, cfg: ModelConfig, index, rng):
        super().__init__()
        self.index = index
        self.temporal_kernel = cfg.temporal_kernels[index]
        self.spa_kernel = cfg.spa_kernel
        self.pools = cfg.pools
        self.p_drop = cfg.conv_dropout
        filters = cfg.temporal_filters[index]
        width = cfg.branch_width(index)

        self.temporal_conv = Conv2d(1, filters, (1, self.temporal_kernel), rng)
        self.bn_temporal = BatchNorm(filters)
        self.depthwise_conv = Conv2d(filters, width, (cfg.channels, 1), rng, groups=filters)
        self.bn_depthwise = BatchNorm(width)
        self.spa_conv = Conv2d(width, cfg.spa_filters, (1, self.spa_kernel), rng)
        self.bn_spa = BatchNorm(cfg.spa_filters)
        self.attention = AttentionParams(cfg.attention.embed_dim, rng)
        if cfg.tcn_enabled:
            self.tcn = TcnStack(cfg, rng)
        else:
            self.tcn = None

    def temporal_out(self, x):
        """Temporal conv output alone (used by the PSD inspection report)."""
        return self.temporal_conv(ops.same_pad_time(x, self.temporal_kernel))

    def __call__(self, x, training, rng=None):
        p1, p2 = self.pools
        h = self.temporal_out(x)
        h = self.bn_temporal(h, training)
        h = self.depthwise_conv(h)  # valid over channels: (B, width, 1, T)
        h = ops.elu(self.bn_depthwise(h, training))
        h = ops.avg_pool2d(h, kernel=(1, p1), stride=(1, p1))
        h = ops.dropout(h, self.p_drop, training, rng)
        h = self.spa_conv(ops.same_pad_time(h, self.spa_kernel))
        h = ops.elu(self.bn_spa(h, training))
        h = ops.avg_pool2d(h, kernel=(1, p2), stride=(1, p2))
        h = ops.dropout(h, self.p_drop, training, rng)
        b, u, _, t0 = h.shape
        return h.reshape((b, u, t0))


class CsanetModel(Layer):
    """Full network; construction order fixes the init draw order."""

    def __init__(self, cfg: ModelConfig, rng):
        super().__init__()
        cfg.validate()
        self.config = cfg
        self.branch1 = Branch(cfg, 0, rng)
        self.branch2 = Branch(cfg, 1, rng)
        self.branch3 = Branch(cfg, 2, rng)
        self.branch4 = Branch(cfg, 3, rng)
        width = cfg.tcn.filters if cfg.tcn_enabled else cfg.spa_filters
        per_branch = width if cfg.readout == "last_step" else width * cfg.t0
        self.classifier = Linear(4 * per_branch, cfg.n_classes, rng)
        self.assign_parameter_names()

    @property
    def branches(self):
        return [self.branch1, self.branch2, self.branch3, self.branch4]

    def fuse_branches(self, zs, training):
        """Attention fusion of the four branch outputs.

        main_auxiliary: branch 1 self-attends densely; branches 2-4 query
        branch 1's pooled keys/values with sparse cross-attention.
        hierarchical: branch 1 self-attends; each later branch's query is
        the previous branch's fused output, keys/values its own features.
        """
        cfg = self.config
        shapes = {tuple(z.shape) for z in zs}
        if len(zs) != 4 or len(shapes) != 1:
            raise DimensionError("fusion expects four equal-shape branch outputs")
        acfg = cfg.attention
        dense_cfg = dataclasses.replace(acfg, topk_enabled=False)

        def fused(z, att_out):
            return residual_fuse(z, att_out) if cfg.residual_enabled else att_out

        outputs = [fused(zs[0], msca_forward(zs[0], zs[0], self.branch1.attention, dense_cfg))]
        if cfg.fusion_mode == "main_auxiliary":
            for i in (1, 2, 3):
                att = msca_forward(zs[i], zs[0], self.branches[i].attention, acfg)
                outputs.append(fused(zs[i], att))
        else:  # hierarchical: chain queries branch to branch
            query = zs[0]
            for i in (1, 2, 3):
                att = msca_forward(query, zs[i], self.branches[i].attention, acfg)
                m = fused(zs[i], att)
                outputs.append(m)
                query = m
        return outputs

    def tcn_forward(self, m, branch, training, rng=None):
        """Per-branch temporal network plus the configured readout."""
        cfg = self.config
        h = branch.tcn(m, training, rng) if cfg.tcn_enabled else m
        b, u, t0 = h.shape
        if cfg.readout == "last_step":
            return narrow(h, 2, t0 - 1, 1).reshape((b, u))
        return h.reshape((b, u * t0))

    def __call__(self, x, training=False, rng=None):
        cfg = self.config
        x = x if isinstance(x, Tensor) else Tensor(x)
        if x.ndim != 4 or x.shape[1] != 1 or x.shape[2] != cfg.channels or x.shape[3] != cfg.time_steps:
            raise DimensionError(
                f"expected input (B, 1, {cfg.channels}, {cfg.time_steps}), got {x.shape}"
            )
        zs = [branch(x, training, rng) for branch in self.branches]
        ms = self.fuse_branches(zs, training)
        feats = concat(
            [self.tcn_forward(m, branch, training, rng) for m, branch in zip(ms, self.branches)],
            axis=1,
        )
        return self.classifier(feats)

    def predict(self, x):
        """Class indices for a (B, 1, C, T) array, eval mode, no tape."""
        from .autodiff import no_grad

        with no_grad():
            logits = self(x, training=False)
        return np.argmax(logits.data, axis=1)


def count_parameters(cfg: ModelConfig):
    """Exact per-group parameter counts implied by a config, plus "total".

    Groups mirror the parameter name prefixes of the built model, so the
    counts can be checked against Layer.named_parameters().
    """
    cfg.validate()
    groups = {}
    u = cfg.attention.embed_dim
    for i in range(4):
        b = f"branch{i + 1}"
        f = cfg.temporal_filters[i]
        width = cfg.branch_width(i)
        groups[f"{b}.temporal_conv"] = f * cfg.temporal_kernels[i]
        groups[f"{b}.bn_temporal"] = 2 * f
        groups[f"{b}.depthwise_conv"] = width * cfg.channels
        groups[f"{b}.bn_depthwise"] = 2 * width
        groups[f"{b}.spa_conv"] = cfg.spa_filters * width * cfg.spa_kernel
        groups[f"{b}.bn_spa"] = 2 * cfg.spa_filters
        groups[f"{b}.attention"] = 3 * u * u + 2
        if cfg.tcn_enabled:
            per_block = 2 * cfg.tcn.filters * cfg.tcn.filters * cfg.tcn.kernel + 2 * 2 * cfg.tcn.filters
            groups[f"{b}.tcn"] = len(cfg.tcn.dilations) * per_block
    width = cfg.tcn.filters if cfg.tcn_enabled else cfg.spa_filters
    per_branch = width if cfg.readout == "last_step" else width * cfg.t0
    groups["classifier"] = cfg.n_classes * 4 * per_branch + cfg.n_classes
    groups["total"] = sum(groups.values())
    return groups
