"""One-class few-shot training on the first N frames of a stream.

Every run of T+1 consecutive frames inside the first N yields one
(window, target) pair; each epoch visits all N-T pairs in a fresh seeded
shuffle, one Adam update per pair. The detection threshold is the mean
prediction loss over all pairs, recomputed with the final frozen weights.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from . import numerics as nm
from .numerics import Tensor2
from .transformer import ModelParams, load_checkpoint, predict_next, save_checkpoint


class TrainingDivergence(RuntimeError):
    """Loss became non-finite during training."""

    def __init__(self, epoch, iteration):
        super().__init__(f"non-finite loss at epoch {epoch}, iteration {iteration}")
        self.epoch = epoch
        self.iteration = iteration


@dataclass
class TrainConfig:
    n_shots: int = 50
    window: int = 10
    epochs: int = 100
    lr: float = 0.01
    beta1: float = 0.9
    beta2: float = 0.98
    seed: int = 0
    normalize_input: bool = False

    def __post_init__(self):
        if self.n_shots < self.window + 1:
            raise ValueError(
                f"n_shots ({self.n_shots}) must be >= window + 1 ({self.window + 1})"
            )
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")


@dataclass
class TrainArtifact:
    params: ModelParams
    threshold: float
    loss_curve: list = field(default_factory=list)
    per_window_final_losses: list = field(default_factory=list)
    last_epoch_mean: float = 0.0
    train_config: TrainConfig | None = None
    input_mean: np.ndarray | None = None
    input_std: np.ndarray | None = None

    def normalize(self, values):
        if self.input_mean is None:
            return values
        return (values - self.input_mean) / self.input_std


def mse_loss(pred, actual):
    pred = np.asarray(pred, dtype=np.float64).ravel()
    actual = np.asarray(actual, dtype=np.float64).ravel()
    if pred.shape != actual.shape:
        raise ValueError(f"mse_loss: lengths {pred.size} vs {actual.size}")
    diff = pred - actual
    return float(diff @ diff / pred.size)


def make_windows(stream, n_shots, window):
    """All (T x D input, D target) pairs from the first n_shots frames."""
    if n_shots < window + 1:
        raise ValueError(f"n_shots ({n_shots}) must be >= window + 1 ({window + 1})")
    if len(stream) < n_shots:
        raise ValueError(f"stream has {len(stream)} frames, need {n_shots}")
    values = stream.matrix()[:n_shots]
    return [
        (values[i : i + window], values[i + window])
        for i in range(n_shots - window)
    ]


def _loss_node(params, inputs, target, self_context):
    pred = predict_next(inputs, params, self_context)
    diff = nm.add(pred, nm.scale(Tensor2(target), -1.0))
    return nm.scale(nm.sum_all(nm.mul(diff, diff)), 1.0 / target.size)


def compute_threshold(params, windows, self_context=True):
    """Mean frozen-weight prediction loss over the given windows."""
    if not windows:
        raise ValueError("compute_threshold: empty window list")
    losses = per_window_losses(params, windows, self_context)
    return float(np.mean(losses)), losses


def per_window_losses(params, windows, self_context=True):
    return [
        mse_loss(predict_next(inputs, params, self_context).value[0], target)
        for inputs, target in windows
    ]


def train_few_shot(stream, model_config, train_config, self_context=True):
    cfg = train_config
    if model_config.window != cfg.window:
        raise ValueError("model window and train window disagree")
    windows = make_windows(stream, cfg.n_shots, cfg.window)

    input_mean = input_std = None
    if cfg.normalize_input:
        head = stream.matrix()[: cfg.n_shots]
        input_mean = head.mean(axis=0)
        input_std = head.std(axis=0)
        input_std[input_std < 1e-12] = 1.0
        windows = [((w - input_mean) / input_std, (t - input_mean) / input_std)
                   for w, t in windows]

    params = ModelParams.init(model_config)
    tensors = dict(params.items())
    state = nm.AdamState(tensors, lr=cfg.lr, beta1=cfg.beta1, beta2=cfg.beta2)
    rng = np.random.default_rng(cfg.seed)

    loss_curve = []
    for epoch in range(cfg.epochs):
        epoch_losses = np.empty(len(windows))
        for it, idx in enumerate(rng.permutation(len(windows))):
            inputs, target = windows[idx]
            params.zero_grads()
            loss = _loss_node(params, inputs, target, self_context)
            value = loss.value[0, 0]
            if not np.isfinite(value):
                raise TrainingDivergence(epoch + 1, it + 1)
            nm.backward(loss)
            nm.adam_step(tensors, params.grads(), state)
            epoch_losses[it] = value
        loss_curve.append(float(epoch_losses.mean()))

    threshold, final_losses = compute_threshold(params, windows, self_context)
    return TrainArtifact(
        params=params,
        threshold=threshold,
        loss_curve=loss_curve,
        per_window_final_losses=final_losses,
        last_epoch_mean=loss_curve[-1],
        train_config=cfg,
        input_mean=input_mean,
        input_std=input_std,
    )


def save_artifact(artifact, checkpoint_path, report_path):
    """Checkpoint + JSON report. The report also carries the alternative
    last-epoch-running-mean figure for comparison; Th itself is always
    the frozen-weight mean."""
    save_checkpoint(artifact.params, checkpoint_path)
    report = {
        "threshold": artifact.threshold,
        "last_epoch_running_mean": artifact.last_epoch_mean,
        "loss_curve": artifact.loss_curve,
        "per_window_final_losses": artifact.per_window_final_losses,
        "model_config": asdict(artifact.params.config),
        "train_config": asdict(artifact.train_config) if artifact.train_config else None,
        "input_mean": None if artifact.input_mean is None else artifact.input_mean.tolist(),
        "input_std": None if artifact.input_std is None else artifact.input_std.tolist(),
    }
    with open(report_path, "w") as fh:
        json.dump(report, fh, indent=2)


def load_artifact(checkpoint_path, report_path):
    params = load_checkpoint(checkpoint_path)
    with open(report_path) as fh:
        report = json.load(fh)
    cfg = TrainConfig(**report["train_config"]) if report.get("train_config") else None
    mean = report.get("input_mean")
    std = report.get("input_std")
    return TrainArtifact(
        params=params,
        threshold=report["threshold"],
        loss_curve=report.get("loss_curve", []),
        per_window_final_losses=report.get("per_window_final_losses", []),
        last_epoch_mean=report.get("last_epoch_running_mean", 0.0),
        train_config=cfg,
        input_mean=None if mean is None else np.asarray(mean),
        input_std=None if std is None else np.asarray(std),
    )
