"""Multi-branch EEG decoder with multiscale sparse cross-attention fusion.

The numerical core is a small reverse-mode autodiff engine over numpy;
everything above it (branches, attention fusion, TCNs, training harness)
is deterministic given a run seed.
"""

from .autodiff import Tensor, no_grad, precision, set_default_dtype
from .config import (
    AttentionConfig,
    ModelConfig,
    RunConfig,
    SplitSpec,
    SrConfig,
    SynthSpec,
    TcnConfig,
    TrainConfig,
)
from .data import EEGTrial, TrialSet, read_eegd, split, synth_generate, write_eegd
from .gradcheck import grad_check
from .layers import Parameter
from .model import CsanetModel, count_parameters
from .optim import AdamState, adam_step

__all__ = [
    "AdamState",
    "AttentionConfig",
    "CsanetModel",
    "EEGTrial",
    "ModelConfig",
    "Parameter",
    "RunConfig",
    "SplitSpec",
    "SrConfig",
    "SynthSpec",
    "TcnConfig",
    "TrainConfig",
    "Tensor",
    "TrialSet",
    "adam_step",
    "count_parameters",
    "grad_check",
    "no_grad",
    "precision",
    "read_eegd",
    "set_default_dtype",
    "split",
    "synth_generate",
    "write_eegd",
]
