"""Minimal SCVF stream writer and reader.

Kept independent of the detector package on purpose: the stream file is
the only interface between the two, and this module is the extractor's
own implementation of it.

Format (little-endian): magic ``SCVF``, u16 version=1, u32 frame_count,
u32 dim, u32 spatial_dim, then frame_count x dim float32 rows. Metadata
goes in a ``<name>.meta.json`` sidecar; readers ignore keys they do not
know.
"""

import json
import struct
from pathlib import Path

import numpy as np

MAGIC = b"SCVF"
VERSION = 1
HEADER = struct.Struct("<4sHIII")


class StreamError(ValueError):
    pass


def sidecar_path(path):
    path = Path(path)
    return path.with_name(path.name + ".meta.json")


def write_stream(values, spatial_dim, destination, meta=None):
    """Write a (frames x dim) float array as an SCVF file.

    ``meta`` is merged into the sidecar; the sidecar is written whenever
    meta is non-empty.
    """
    destination = Path(destination)
    values = np.ascontiguousarray(values, dtype="<f4")
    if values.ndim != 2:
        raise StreamError(f"expected a 2-D frame matrix, got shape {values.shape}")
    frames, dim = values.shape
    if not 0 <= spatial_dim <= dim:
        raise StreamError(f"spatial_dim {spatial_dim} outside [0, {dim}]")
    if not np.all(np.isfinite(values)):
        raise StreamError("refusing to write non-finite feature values")
    header = HEADER.pack(MAGIC, VERSION, frames, dim, spatial_dim)
    destination.write_bytes(header + values.tobytes())
    if meta:
        sidecar_path(destination).write_text(json.dumps(meta))
    return destination


def read_stream(source):
    """Read an SCVF file back as (values, spatial_dim, meta)."""
    source = Path(source)
    raw = source.read_bytes()
    if len(raw) < HEADER.size:
        raise StreamError(f"{source}: truncated header")
    magic, version, frames, dim, spatial_dim = HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise StreamError(f"{source}: bad magic {magic!r}")
    if version != VERSION:
        raise StreamError(f"{source}: unsupported version {version}")
    expected = HEADER.size + 4 * frames * dim
    if len(raw) != expected:
        raise StreamError(f"{source}: size {len(raw)}, expected {expected}")
    values = np.frombuffer(raw, dtype="<f4", offset=HEADER.size).reshape(frames, dim)
    meta = {}
    side = sidecar_path(source)
    if side.exists():
        meta = json.loads(side.read_text())
    return values, spatial_dim, meta
