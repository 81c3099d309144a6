"""Frame-level AUC/ROC, CSV emitters, and the feature/self-context
ablation runner."""

from __future__ import annotations

import csv
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .detector import ConsistencyConfig, detect
from .feature_io import FeatureStream
from .trainer import train_few_shot


class UndefinedAucError(ValueError):
    """AUC requested with only one class present in the labels."""


@dataclass(frozen=True)
class RocPoint:
    threshold: float
    tpr: float
    fpr: float


@dataclass(frozen=True)
class AblationSpec:
    use_spatial: bool = True
    use_temporal: bool = True
    self_context: bool = True

    def __post_init__(self):
        if not (self.use_spatial or self.use_temporal):
            raise ValueError("at least one feature family must be enabled")

    @property
    def name(self):
        families = {
            (True, True): "spatial+temporal",
            (True, False): "spatial-only",
            (False, True): "temporal-only",
        }[(self.use_spatial, self.use_temporal)]
        return f"{families}/{'ctx' if self.self_context else 'no-ctx'}"


def _check_classes(labels):
    labels = np.asarray(labels)
    pos = int(labels.sum())
    if pos == 0 or pos == labels.size:
        raise UndefinedAucError("labels contain a single class; AUC is undefined")
    return labels


def frame_auc(scores, labels):
    """P(random anomalous frame outscores random normal frame), ties
    counted half. Rank-based, so it matches trapezoidal ROC integration
    exactly."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = _check_classes(labels)
    if scores.size != labels.size:
        raise ValueError(f"{scores.size} scores vs {labels.size} labels")
    order = np.argsort(scores, kind="stable")
    ranks = np.empty(scores.size)
    sorted_scores = scores[order]
    i = 0
    while i < scores.size:
        j = i
        while j + 1 < scores.size and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0  # mid-rank, 1-based
        i = j + 1
    n_pos = int(labels.sum())
    n_neg = labels.size - n_pos
    rank_sum = ranks[labels == 1].sum()
    u = rank_sum - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def roc_points(scores, labels):
    """One point per distinct score threshold (swept high to low), plus
    the (0,0) and (1,1) endpoints."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = _check_classes(labels)
    n_pos = int(labels.sum())
    n_neg = labels.size - n_pos
    order = np.argsort(-scores, kind="stable")
    points = [RocPoint(threshold=float("inf"), tpr=0.0, fpr=0.0)]
    tp = fp = 0
    i = 0
    while i < scores.size:
        thr = scores[order[i]]
        while i < scores.size and scores[order[i]] == thr:
            if labels[order[i]] == 1:
                tp += 1
            else:
                fp += 1
            i += 1
        points.append(RocPoint(threshold=float(thr), tpr=tp / n_pos, fpr=fp / n_neg))
    if points[-1].fpr != 1.0 or points[-1].tpr != 1.0:
        points.append(RocPoint(threshold=float("-inf"), tpr=1.0, fpr=1.0))
    return points


def roc_area(points):
    area = 0.0
    for a, b in zip(points, points[1:]):
        area += (b.fpr - a.fpr) * (a.tpr + b.tpr) / 2.0
    return area


def _mask_stream(stream, spec):
    if spec.use_spatial and spec.use_temporal:
        return stream
    values = stream.matrix(dtype=np.float32)
    s = stream.spatial_dim
    if spec.use_spatial:
        return FeatureStream.from_matrix(values[:, :s], s, stream.labels)
    return FeatureStream.from_matrix(values[:, s:], 0, stream.labels)


@dataclass
class AblationCell:
    spec: AblationSpec
    auc: float
    threshold: float
    seed: int


def run_ablation(stream, specs, model_config, train_config, consistency=None,
                 start_index=None, root_seed=0):
    """Full train+detect+AUC for each spec. Cell seeds derive from the
    root seed by cell index; cells may run in parallel (SCVAD_THREADS)."""
    if stream.labels is None:
        raise ValueError("ablation needs a labeled stream")
    consistency = consistency or ConsistencyConfig()
    children = np.random.SeedSequence(root_seed).spawn(len(specs))
    seeds = [int(c.generate_state(1)[0]) for c in children]

    def run_cell(i):
        spec = specs[i]
        masked = _mask_stream(stream, spec)
        mcfg = type(model_config)(
            **{**model_config.__dict__, "feature_dim": masked.dim, "seed": seeds[i]}
        )
        tcfg = type(train_config)(**{**train_config.__dict__, "seed": seeds[i]})
        artifact = train_few_shot(masked, mcfg, tcfg, self_context=spec.self_context)
        verdicts = detect(artifact, masked, consistency, start_index, spec.self_context)
        scores = [v.score for v in verdicts]
        labels = [masked.labels[v.frame_index - 1] for v in verdicts]
        return AblationCell(spec=spec, auc=frame_auc(scores, labels),
                            threshold=artifact.threshold, seed=seeds[i])

    workers = int(os.environ.get("SCVAD_THREADS", "1") or "1")
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(run_cell, range(len(specs))))
    return [run_cell(i) for i in range(len(specs))]


def write_roc_csv(points, destination):
    with open(destination, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["threshold", "fpr", "tpr"])
        for p in points:
            writer.writerow([repr(p.threshold), repr(p.fpr), repr(p.tpr)])


def write_score_trace_csv(verdicts, destination):
    with open(destination, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["frame", "score"])
        for v in verdicts:
            writer.writerow([v.frame_index, repr(v.score)])


def write_loss_curve_csv(loss_curve, destination):
    with open(destination, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "mean_loss"])
        for epoch, value in enumerate(loss_curve, start=1):
            writer.writerow([epoch, repr(value)])


def emit_curves(artifact, verdicts, labels, out_dir):
    """Score-trace, loss-curve, and ROC CSVs for one detect run.
    Returns the written paths."""
    out_dir = os.fspath(out_dir)
    os.makedirs(out_dir, exist_ok=True)
    paths = {
        "scores": os.path.join(out_dir, "scores.csv"),
        "loss_curve": os.path.join(out_dir, "loss_curve.csv"),
    }
    write_score_trace_csv(verdicts, paths["scores"])
    write_loss_curve_csv(artifact.loss_curve, paths["loss_curve"])
    if labels is not None:
        points = roc_points([v.score for v in verdicts], labels)
        paths["roc"] = os.path.join(out_dir, "roc.csv")
        write_roc_csv(points, paths["roc"])
    return paths


def write_ablation_table(cells, csv_path, text_path):
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["model", "use_spatial", "use_temporal", "self_context", "auc", "threshold", "seed"])
        for c in cells:
            writer.writerow(
                [c.spec.name, int(c.spec.use_spatial), int(c.spec.use_temporal),
                 int(c.spec.self_context), repr(c.auc), repr(c.threshold), c.seed]
            )
    width = max(len(c.spec.name) for c in cells) + 2
    lines = [f"{'model'.ljust(width)}{'AUC':>8}"]
    for c in cells:
        lines.append(f"{c.spec.name.ljust(width)}{c.auc:8.4f}")
    with open(text_path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
