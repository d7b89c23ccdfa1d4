"""Versioned binary model checkpoints.

Layout (all integers little-endian u32, floats little-endian f32):

    magic "CSAN" | version=1 | config_len | config text (flat key=value,
    UTF-8, ModelConfig fields only) | n_blobs | per blob:
    name_len | name UTF-8 | ndim | dims... | values f32

Blobs cover every named parameter followed by every named buffer
(batch-norm running statistics), in model iteration order. Reload is
bit-exact at the stored 32-bit precision.
"""

import os
import struct

import numpy as np

from .autodiff import default_dtype
from .config import ModelConfig, config_from_text, config_to_text
from .errors import FormatError
from .model import CsanetModel

CHECKPOINT_MAGIC = b"CSAN"
CHECKPOINT_VERSION = 1


def _blob_items(model):
    yield from model.named_parameters()
    yield from model.named_buffers()


def checkpoint_bytes(model) -> bytes:
    cfg_text = config_to_text(model.config).encode("utf-8")
    chunks = [CHECKPOINT_MAGIC, struct.pack("<II", CHECKPOINT_VERSION, len(cfg_text)), cfg_text]
    items = list(_blob_items(model))
    chunks.append(struct.pack("<I", len(items)))
    for name, value in items:
        arr = value if isinstance(value, np.ndarray) else value.data
        arr = np.asarray(arr, dtype="<f4")  # keeps 0-d shapes; tobytes() is C-order
        encoded = name.encode("utf-8")
        chunks.append(struct.pack("<I", len(encoded)))
        chunks.append(encoded)
        chunks.append(struct.pack("<I", arr.ndim))
        chunks.append(struct.pack(f"<{arr.ndim}I", *arr.shape))
        chunks.append(arr.tobytes())
    return b"".join(chunks)


def save_checkpoint(model, path):
    """Write atomically: a failed save never leaves a partial file."""
    blob = checkpoint_bytes(model)
    tmp = f"{path}.tmp"
    with open(tmp, "wb") as fh:
        fh.write(blob)
    os.replace(tmp, path)


def load_checkpoint(path):
    """Read a checkpoint; returns (ModelConfig, CsanetModel)."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:4] != CHECKPOINT_MAGIC:
        raise FormatError(f"bad magic {blob[:4]!r}, expected {CHECKPOINT_MAGIC!r}", offset=0)
    if len(blob) < 12:
        raise FormatError("truncated header", offset=len(blob))
    version, cfg_len = struct.unpack_from("<II", blob, 4)
    if version != CHECKPOINT_VERSION:
        raise FormatError(f"unsupported checkpoint version {version}", offset=4)
    offset = 12
    if len(blob) < offset + cfg_len + 4:
        raise FormatError("truncated config block", offset=len(blob))
    cfg = config_from_text(blob[offset : offset + cfg_len].decode("utf-8"), cls=ModelConfig)
    offset += cfg_len
    (n_blobs,) = struct.unpack_from("<I", blob, offset)
    offset += 4

    model = CsanetModel(cfg, rng=np.random.Generator(np.random.PCG64(0)))
    params = dict(model.named_parameters())
    buffers = dict(model.named_buffers())
    seen = set()
    for _ in range(n_blobs):
        if len(blob) < offset + 4:
            raise FormatError("truncated blob header", offset=len(blob))
        (name_len,) = struct.unpack_from("<I", blob, offset)
        offset += 4
        if len(blob) < offset + name_len + 4:
            raise FormatError("truncated blob name", offset=len(blob))
        name = blob[offset : offset + name_len].decode("utf-8")
        offset += name_len
        (ndim,) = struct.unpack_from("<I", blob, offset)
        offset += 4
        if len(blob) < offset + 4 * ndim:
            raise FormatError(f"truncated shape for blob {name!r}", offset=len(blob))
        dims = struct.unpack_from(f"<{ndim}I", blob, offset)
        offset += 4 * ndim
        count = int(np.prod(dims, dtype=np.int64)) if ndim else 1
        if len(blob) < offset + 4 * count:
            raise FormatError(f"truncated values for blob {name!r}", offset=len(blob))
        values = np.frombuffer(blob, dtype="<f4", count=count, offset=offset).reshape(dims)
        offset += 4 * count
        if name in params:
            target = params[name]
            if target.data.shape != values.shape:
                raise FormatError(f"blob {name!r} shape {values.shape} != expected {target.data.shape}")
            target.data = values.astype(default_dtype())
        elif name in buffers:
            if buffers[name].shape != values.shape:
                raise FormatError(f"blob {name!r} shape {values.shape} != expected {buffers[name].shape}")
            buffers[name][...] = values.astype(buffers[name].dtype)
        else:
            raise FormatError(f"unknown blob name {name!r}")
        seen.add(name)
    if len(blob) != offset:
        raise FormatError("trailing bytes after final blob", offset=offset)
    missing = (set(params) | set(buffers)) - seen
    if missing:
        raise FormatError(f"checkpoint is missing blobs: {sorted(missing)}")
    return cfg, model
