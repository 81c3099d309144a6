"""Extraction pipeline: video (or frame directory) -> SCVF stream."""

import logging
from dataclasses import dataclass, field
from pathlib import Path

import cv2
import numpy as np

from .backbones import SPATIAL_DIM, FlowBackbone, SpatialBackbone
from .stream import write_stream

log = logging.getLogger("scvad_extractor")

_IMAGE_SUFFIXES = {".png", ".jpg", ".jpeg", ".bmp", ".tif", ".tiff"}


class ExtractionError(RuntimeError):
    pass


@dataclass
class ExtractorConfig:
    video: str
    output: str
    spatial_backbone: str = "resnet18"
    flow_backbone: str = "farneback"
    flow_grid: tuple = (8, 8)
    stride: int = 1
    input_size: int = 160
    seed: int = 0
    # standardization uses only the first norm_frames extracted frames
    norm_frames: int = 50
    normalize: bool = True
    skip_bad_frames: bool = False

    def __post_init__(self):
        h, w = self.flow_grid
        if h * w < 1:
            raise ExtractionError(f"flow grid {self.flow_grid} has no cells")
        if self.stride < 1:
            raise ExtractionError(f"stride must be >= 1, got {self.stride}")
        if self.norm_frames < 1:
            raise ExtractionError("norm_frames must be >= 1")


def iter_frames(source):
    """Yield BGR frames from a video file or a directory of images.

    Directory frames are taken in sorted filename order. Yields
    (position, frame_or_None); None marks a frame that failed to decode.
    """
    source = Path(source)
    if source.is_dir():
        paths = sorted(
            p for p in source.iterdir() if p.suffix.lower() in _IMAGE_SUFFIXES
        )
        if not paths:
            raise ExtractionError(f"{source}: no image frames found")
        for pos, path in enumerate(paths):
            yield pos, cv2.imread(str(path))
        return
    capture = cv2.VideoCapture(str(source))
    if not capture.isOpened():
        raise ExtractionError(f"{source}: cannot open video")
    try:
        pos = 0
        while True:
            ok, frame = capture.read()
            if not ok:
                break
            yield pos, frame
            pos += 1
    finally:
        capture.release()


def source_fps(source):
    source = Path(source)
    if source.is_dir():
        return None
    capture = cv2.VideoCapture(str(source))
    try:
        fps = capture.get(cv2.CAP_PROP_FPS)
    finally:
        capture.release()
    return fps if fps and fps > 0 else None


def extract(config):
    """Run the full pipeline and write the stream. Returns the output path.

    Each kept frame's vector is the 512-dim spatial feature followed by
    K = grid-area flow magnitudes. Flow is computed against the previous
    *kept* frame, so striding coarsens the temporal signal rather than
    leaving gaps.
    """
    spatial = SpatialBackbone(config.spatial_backbone, config.input_size, config.seed)
    flow = FlowBackbone(config.flow_backbone, config.flow_grid, config.input_size)

    rows = []
    for pos, frame in iter_frames(config.video):
        if pos % config.stride:
            continue
        if frame is None:
            if config.skip_bad_frames:
                log.warning("frame %d failed to decode, skipping", pos)
                continue
            raise ExtractionError(f"frame {pos} failed to decode")
        rows.append(np.concatenate([spatial(frame), flow(frame)]))
    if not rows:
        raise ExtractionError(f"{config.video}: no frames extracted")

    values = np.array(rows, dtype=np.float64)
    meta = {
        "source": str(config.video),
        "fps": source_fps(config.video),
        "extractor": {
            "spatial_backbone": config.spatial_backbone,
            "flow_backbone": config.flow_backbone,
            "flow_grid": list(config.flow_grid),
            "stride": config.stride,
            "seed": config.seed,
        },
    }
    if config.normalize:
        head = values[: config.norm_frames]
        mean = head.mean(axis=0)
        std = np.maximum(head.std(axis=0), 1e-6)
        values = (values - mean) / std
        meta["norm"] = {
            "frames": int(min(config.norm_frames, len(values))),
            "mean": mean.tolist(),
            "std": std.tolist(),
        }
    return write_stream(values, SPATIAL_DIM, config.output, meta)
