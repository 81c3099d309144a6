"""Feature-stream data model, on-disk format, and synthetic generator.

A stream is an ordered sequence of per-frame feature vectors (spatial
prefix + temporal suffix) with optional binary ground-truth labels.

File format (little-endian): magic ``SCVF``, u16 version=1, u32
frame_count, u32 dim, u32 spatial_dim, then frame_count x dim float32,
row-major. Labels and provenance live in a ``<name>.meta.json`` sidecar:
``{"labels": [0|1, ...], "source": str, "fps": number|null}``; unknown
sidecar keys are ignored.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

MAGIC = b"SCVF"
VERSION = 1
_HEADER = struct.Struct("<4sHIII")


class StreamFormatError(ValueError):
    """Malformed stream file or sidecar."""


class StreamValidationError(ValueError):
    """Stream contents violate the data-model invariants."""


@dataclass(frozen=True)
class FrameFeature:
    """One frame's concatenated feature vector. ``index`` is 1-based."""

    index: int
    values: np.ndarray

    def __post_init__(self):
        if self.index < 1:
            raise StreamValidationError(f"frame index must be >= 1, got {self.index}")
        if not np.all(np.isfinite(self.values)):
            bad = int(np.flatnonzero(~np.isfinite(np.asarray(self.values)))[0])
            raise StreamValidationError(f"non-finite feature value at position {bad}")


class FeatureStream:
    """Immutable, dimension-consistent sequence of frame features."""

    def __init__(self, dim, spatial_dim, frames, labels=None):
        if dim < 1:
            raise StreamValidationError("dim must be positive")
        if not 0 <= spatial_dim <= dim:
            raise StreamValidationError(f"spatial_dim {spatial_dim} outside [0, dim={dim}]")
        for i, f in enumerate(frames):
            if f.index != i + 1:
                raise StreamValidationError(
                    f"frame indices must be consecutive from 1; position {i} has index {f.index}"
                )
            if len(f.values) != dim:
                raise StreamValidationError(
                    f"frame {f.index} has {len(f.values)} values, expected dim {dim}"
                )
        if labels is not None and len(labels) != len(frames):
            raise StreamValidationError(
                f"{len(labels)} labels for {len(frames)} frames"
            )
        self.dim = dim
        self.spatial_dim = spatial_dim
        self.frames = tuple(frames)
        self.labels = None if labels is None else tuple(int(x) for x in labels)

    def __len__(self):
        return len(self.frames)

    def matrix(self, dtype=np.float64):
        """All frame values as a (frames x dim) array."""
        return np.array([f.values for f in self.frames], dtype=dtype)

    @classmethod
    def from_matrix(cls, values, spatial_dim, labels=None):
        values = np.asarray(values)
        frames = [FrameFeature(i + 1, values[i].copy()) for i in range(values.shape[0])]
        return cls(values.shape[1], spatial_dim, frames, labels)


@dataclass
class SynthConfig:
    """Recipe for a deterministic synthetic stream."""

    dim: int
    length: int
    anomaly_spans: list = field(default_factory=list)
    anomaly_magnitude: float = 1.0
    seed: int = 0
    spatial_dim: int | None = None  # default: dim // 2
    noise: float = 0.02
    period: float = 16.0
    spike_prob: float = 0.08
    spike_scale: float = 6.0

    def __post_init__(self):
        if self.dim < 1 or self.length < 1:
            raise StreamValidationError("dim and length must be positive")
        if self.anomaly_magnitude <= 0:
            raise StreamValidationError("anomaly_magnitude must be positive")
        spans = sorted((int(a), int(b)) for a, b in self.anomaly_spans)
        for start, end in spans:
            if not (1 <= start <= end <= self.length):
                raise StreamValidationError(f"anomaly span ({start},{end}) outside [1,{self.length}]")
        for (_, e0), (s1, _) in zip(spans, spans[1:]):
            if s1 <= e0:
                raise StreamValidationError("anomaly spans overlap")
        self.anomaly_spans = spans


def concat_features(spatial, temporal):
    """Concatenate spatial and temporal feature vectors, spatial first."""
    spatial = np.asarray(spatial, dtype=np.float64)
    temporal = np.asarray(temporal, dtype=np.float64)
    for name, vec, offset in (("spatial", spatial, 0), ("temporal", temporal, len(spatial))):
        bad = np.flatnonzero(~np.isfinite(vec))
        if bad.size:
            raise StreamValidationError(
                f"non-finite {name} feature at position {offset + int(bad[0])}"
            )
    return np.concatenate([spatial, temporal])


def write_stream(stream, destination):
    """Write a stream (and its sidecar, if there is anything to record).

    Returns the number of bytes written to the main file.
    """
    destination = Path(destination)
    payload = stream.matrix(dtype=np.float32)
    if not payload.flags.c_contiguous:
        payload = np.ascontiguousarray(payload)
    header = _HEADER.pack(MAGIC, VERSION, len(stream), stream.dim, stream.spatial_dim)
    data = header + payload.tobytes()
    destination.write_bytes(data)
    if stream.labels is not None:
        sidecar = {"labels": list(stream.labels), "source": "scvad", "fps": None}
        _sidecar_path(destination).write_text(json.dumps(sidecar))
    return len(data)


def read_stream(source):
    source = Path(source)
    raw = source.read_bytes()
    if len(raw) < _HEADER.size:
        raise StreamFormatError(f"{source}: truncated header")
    magic, version, frame_count, dim, spatial_dim = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise StreamFormatError(f"{source}: bad magic {magic!r}")
    if version != VERSION:
        raise StreamFormatError(f"{source}: unsupported version {version}")
    expected = _HEADER.size + 4 * frame_count * dim
    if len(raw) != expected:
        raise StreamFormatError(
            f"{source}: payload is {len(raw) - _HEADER.size} bytes, expected {expected - _HEADER.size}"
        )
    values = np.frombuffer(raw, dtype="<f4", offset=_HEADER.size).reshape(frame_count, dim)
    labels = None
    sidecar = _sidecar_path(source)
    if sidecar.exists():
        try:
            meta = json.loads(sidecar.read_text())
        except json.JSONDecodeError as exc:
            raise StreamFormatError(f"{sidecar}: invalid JSON ({exc})") from exc
        labels = meta.get("labels")
        if labels is not None and len(labels) != frame_count:
            raise StreamFormatError(
                f"{sidecar}: {len(labels)} labels for {frame_count} frames"
            )
    return FeatureStream.from_matrix(values, spatial_dim, labels)


def _sidecar_path(path):
    return path.with_name(path.name + ".meta.json")


def generate_synthetic(config):
    """Deterministic sinusoid-plus-noise stream with optional anomaly spans.

    Normal frames follow a smooth per-coordinate sum of sinusoids whose
    periods divide ``period`` frames, so a training prefix covering a few
    periods sees every phase and a short context window suffices to
    predict the rest. The per-frame noise is a spike mixture (rare frames
    get ``spike_scale`` x the base noise), which right-skews prediction
    losses the way real feature streams do. Frames inside anomaly spans
    get a span-specific offset scaled by ``anomaly_magnitude``; labels
    mark exactly the spans.
    """
    rng = np.random.default_rng(config.seed)
    dim, length = config.dim, config.length
    t = np.arange(1, length + 1, dtype=np.float64)[:, None]

    n_waves = 3
    amp = rng.uniform(0.3, 1.0, size=(n_waves, dim))
    cycles = rng.integers(1, 4, size=(n_waves, dim)).astype(np.float64)
    freq = cycles * (2 * np.pi / config.period)
    phase = rng.uniform(0.0, 2 * np.pi, size=(n_waves, dim))
    values = np.zeros((length, dim))
    for w in range(n_waves):
        values += amp[w] * np.sin(t * freq[w] + phase[w])
    spikes = np.where(rng.random(length) < config.spike_prob, config.spike_scale, 1.0)
    values += config.noise * spikes[:, None] * rng.standard_normal((length, dim))

    labels = np.zeros(length, dtype=np.int64)
    for start, end in config.anomaly_spans:
        direction = rng.standard_normal(dim)
        direction /= np.linalg.norm(direction)
        span_len = end - start + 1
        jitter = 0.2 * rng.standard_normal((span_len, dim))
        values[start - 1 : end] += config.anomaly_magnitude * (direction + jitter)
        labels[start - 1 : end] = 1

    spatial_dim = config.spatial_dim if config.spatial_dim is not None else dim // 2
    # float32 here so generate -> write -> read is the identity
    return FeatureStream.from_matrix(values.astype(np.float32), spatial_dim, labels)
