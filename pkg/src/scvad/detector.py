"""Sequential anomaly scoring with predicted-feature substitution.

Frames after the training prefix are scored one at a time: predict the
frame's feature vector from the previous T buffered vectors, score it by
MSE against the actual, and raw-flag it when the score reaches the
threshold. A flagged frame enters the rolling buffer as its prediction
rather than its (presumed contaminated) actual, keeping the input history
non-anomalous. A temporal-consistency pass then suppresses raw flags that
lack flagged neighbors.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .trainer import mse_loss
from .transformer import predict_next_values


@dataclass
class Verdict:
    frame_index: int
    score: float
    raw_flag: bool
    final_flag: bool = False
    used_substitute: bool = False


@dataclass
class ConsistencyConfig:
    half_window: int = 2
    min_neighbors: int = 2

    def __post_init__(self):
        if self.half_window < 0:
            raise ValueError("half_window must be >= 0")
        if self.min_neighbors < 1:
            raise ValueError("min_neighbors must be >= 1")
        if self.min_neighbors > 2 * self.half_window:
            raise ValueError(
                f"min_neighbors ({self.min_neighbors}) exceeds neighborhood size "
                f"(2 x {self.half_window})"
            )


def score_stream(artifact, stream, start_index=None, self_context=True, buffer_probe=None):
    """Raw per-frame verdicts for frames start_index..end, in order.

    Frames before start_index are taken as non-anomalous actuals. The
    optional ``buffer_probe(frame_index, buffer)`` callback sees the T-row
    input buffer used for each frame (test instrumentation).
    """
    cfg = artifact.params.config
    window = cfg.window
    if start_index is None:
        start_index = (artifact.train_config.n_shots if artifact.train_config else window) + 1
    if start_index <= window:
        raise ValueError(f"start_index ({start_index}) must exceed window ({window})")
    if len(stream) + 1 < start_index:
        raise ValueError(f"start_index {start_index} beyond stream end {len(stream)}")
    if stream.dim != cfg.feature_dim:
        raise ValueError(f"stream dim {stream.dim} vs model feature_dim {cfg.feature_dim}")

    values = artifact.normalize(stream.matrix())
    buffer = [values[i] for i in range(start_index - 1 - window, start_index - 1)]
    verdicts = []
    for t in range(start_index, len(stream) + 1):
        inputs = np.stack(buffer)
        if buffer_probe is not None:
            buffer_probe(t, inputs)
        pred = predict_next_values(inputs, artifact.params, self_context)
        actual = values[t - 1]
        score = mse_loss(pred, actual)
        raw = score >= artifact.threshold
        verdicts.append(
            Verdict(frame_index=t, score=score, raw_flag=raw, used_substitute=raw)
        )
        buffer.pop(0)
        buffer.append(pred if raw else actual)
    return verdicts


def temporal_consistency(raw_flags, config):
    """Keep a raw flag only when enough neighbors within half_window are
    also raw-flagged. At the boundaries the requirement is capped at the
    truncated neighborhood's size."""
    if len(raw_flags) == 0:
        raise ValueError("temporal_consistency: empty flag list")
    n = len(raw_flags)
    k, q = config.half_window, config.min_neighbors
    final = []
    for i in range(n):
        lo, hi = max(0, i - k), min(n - 1, i + k)
        neighbors = (hi - lo + 1) - 1
        count = sum(raw_flags[j] for j in range(lo, hi + 1) if j != i)
        final.append(bool(raw_flags[i]) and count >= min(q, neighbors))
    return final


def detect(artifact, stream, consistency=None, start_index=None, self_context=True):
    """Score the stream, then apply the consistency filter. Returns the
    full verdict list with final flags filled in."""
    consistency = consistency or ConsistencyConfig()
    verdicts = score_stream(artifact, stream, start_index, self_context)
    if not verdicts:
        return verdicts
    final = temporal_consistency([v.raw_flag for v in verdicts], consistency)
    for v, f in zip(verdicts, final):
        v.final_flag = f
    return verdicts


def write_verdicts_csv(verdicts, threshold, destination):
    with open(destination, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["frame", "score", "threshold", "raw_flag", "final_flag", "used_substitute"])
        for v in verdicts:
            writer.writerow(
                [
                    v.frame_index,
                    repr(v.score),
                    repr(threshold),
                    int(v.raw_flag),
                    int(v.final_flag),
                    int(v.used_substitute),
                ]
            )


def read_verdicts_csv(source):
    verdicts = []
    threshold = None
    with open(source, newline="") as fh:
        for row in csv.DictReader(fh):
            threshold = float(row["threshold"])
            verdicts.append(
                Verdict(
                    frame_index=int(row["frame"]),
                    score=float(row["score"]),
                    raw_flag=bool(int(row["raw_flag"])),
                    final_flag=bool(int(row["final_flag"])),
                    used_substitute=bool(int(row["used_substitute"])),
                )
            )
    return verdicts, threshold
