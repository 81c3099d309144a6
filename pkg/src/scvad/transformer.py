"""Encoder-decoder predictor for the next frame's feature vector.

The same embedded window feeds both the encoder and the decoder; the
decoder's cross-attention queries its own representation of the window
against the encoder's (the "self-context"). No causal mask and no
autoregressive recursion: the target frame is never an input, so there is
nothing to hide. With self-context disabled the decoder stack is skipped
entirely and the encoder output is read out directly (single-pipeline
ablation).
"""

from __future__ import annotations

import json
import math
import struct
from dataclasses import asdict, dataclass

import numpy as np

from . import numerics as nm
from .numerics import Tensor2

CKPT_MAGIC = b"SCVM"
CKPT_VERSION = 1


class CheckpointError(ValueError):
    """Malformed checkpoint file or config mismatch on load."""


@dataclass
class ModelConfig:
    feature_dim: int
    model_dim: int = 512
    heads: int = 2
    layers: int = 2
    mlp_hidden: int | None = None  # default 2 * model_dim
    window: int = 10
    seed: int = 0
    readout: str = "last"  # which decoder position feeds the output head

    def __post_init__(self):
        if self.feature_dim < 1 or self.model_dim < 1 or self.layers < 1 or self.heads < 1:
            raise ValueError("feature_dim, model_dim, layers, heads must be positive")
        if self.model_dim % self.heads != 0:
            raise ValueError(f"model_dim {self.model_dim} not divisible by heads {self.heads}")
        if self.window < 1:
            raise ValueError("window must be >= 1")
        if self.readout not in ("last", "mean"):
            raise ValueError(f"readout must be 'last' or 'mean', got {self.readout!r}")

    @property
    def hidden(self):
        return self.mlp_hidden if self.mlp_hidden is not None else 2 * self.model_dim


def param_shapes(config):
    """Checkpoint-order list of (name, (rows, cols)) for every parameter."""
    d, m, h = config.feature_dim, config.model_dim, config.hidden
    shapes = [("omega.w", (d, m)), ("omega.b", (1, m))]

    def block(prefix, with_cross):
        out = []
        for part in ("msa",) + (("mca",) if with_cross else ()):
            out += [(f"{prefix}.{part}.{w}", (m, m)) for w in ("wq", "wk", "wv", "wo")]
        n_ln = 3 if with_cross else 2
        for i in range(1, n_ln + 1):
            out += [(f"{prefix}.ln{i}.g", (1, m)), (f"{prefix}.ln{i}.b", (1, m))]
        out += [
            (f"{prefix}.mlp.w1", (m, h)),
            (f"{prefix}.mlp.b1", (1, h)),
            (f"{prefix}.mlp.w2", (h, m)),
            (f"{prefix}.mlp.b2", (1, m)),
        ]
        return out

    for layer in range(config.layers):
        shapes += block(f"enc.{layer}", with_cross=False)
    for layer in range(config.layers):
        shapes += block(f"dec.{layer}", with_cross=True)
    shapes += [("phi.w", (m, d)), ("phi.b", (1, d))]
    return shapes


class ModelParams:
    """Named parameter tensors; iteration order is the checkpoint order."""

    def __init__(self, config, tensors):
        self.config = config
        self.tensors = dict(tensors)
        for name, shape in param_shapes(config):
            if name not in self.tensors:
                raise ValueError(f"missing parameter {name}")
            if self.tensors[name].shape != shape:
                raise ValueError(
                    f"parameter {name}: shape {self.tensors[name].shape}, expected {shape}"
                )

    @classmethod
    def init(cls, config):
        rng = np.random.default_rng(config.seed)
        tensors = {}
        for name, (rows, cols) in param_shapes(config):
            leaf = name.rsplit(".", 1)[1]
            if leaf in ("b", "b1", "b2"):
                value = np.zeros((rows, cols))
            elif leaf == "g":
                value = np.ones((rows, cols))
            else:
                value = nm.uniform_init(rng, rows, cols)
            tensors[name] = Tensor2(value, requires_grad=True)
        return cls(config, tensors)

    def __getitem__(self, name):
        return self.tensors[name]

    def items(self):
        for name, _ in param_shapes(self.config):
            yield name, self.tensors[name]

    def count(self):
        return sum(t.value.size for _, t in self.items())

    def grads(self):
        """name -> accumulated gradient, for parameters that have one."""
        return {name: t.grad for name, t in self.items() if t.grad is not None}

    def zero_grads(self):
        for _, t in self.items():
            t.grad = None


def positional_code(t, model_dim):
    """Sinusoidal code for 1-based position t: pairs (sin, cos) of
    t / 10000^(2i/model_dim)."""
    if t < 1:
        raise ValueError(f"position must be >= 1, got {t}")
    code = np.zeros(model_dim)
    i = np.arange(0, model_dim, 2, dtype=np.float64)
    angle = t / np.power(10000.0, i / model_dim)
    code[0::2] = np.sin(angle)
    code[1::2] = np.cos(angle)[: model_dim // 2]
    return code


def positional_matrix(window, model_dim):
    return np.stack([positional_code(t, model_dim) for t in range(1, window + 1)])


def _as_tensor(x):
    return x if isinstance(x, Tensor2) else Tensor2(x)


def embed(features, params, positions=True):
    """Linear map of each frame feature plus its positional code."""
    cfg = params.config
    features = _as_tensor(features)
    if features.shape != (cfg.window, cfg.feature_dim):
        raise nm.DimensionError(
            f"embed: input {features.shape}, expected {(cfg.window, cfg.feature_dim)}"
        )
    z = nm.add(nm.matmul(features, params["omega.w"]), params["omega.b"])
    if positions:
        z = nm.add(z, Tensor2(positional_matrix(cfg.window, cfg.model_dim)))
    return z


def _attention(query_in, kv_in, params, prefix, heads):
    q = nm.matmul(query_in, params[f"{prefix}.wq"])
    k = nm.matmul(kv_in, params[f"{prefix}.wk"])
    v = nm.matmul(kv_in, params[f"{prefix}.wv"])
    dk = q.cols // heads
    ctx = []
    for h in range(heads):
        j0, j1 = h * dk, (h + 1) * dk
        qh, kh, vh = (nm.slice_cols(x, j0, j1) for x in (q, k, v))
        logits = nm.scale(nm.matmul(qh, nm.transpose(kh)), 1.0 / math.sqrt(dk))
        ctx.append(nm.matmul(nm.softmax_rows(logits), vh))
    merged = ctx[0] if heads == 1 else nm.concat_cols(ctx)
    return nm.matmul(merged, params[f"{prefix}.wo"])


def _mlp(x, params, prefix):
    h = nm.relu(nm.add(nm.matmul(x, params[f"{prefix}.w1"]), params[f"{prefix}.b1"]))
    return nm.add(nm.matmul(h, params[f"{prefix}.w2"]), params[f"{prefix}.b2"])


def _post_ln(x, sublayer_out, params, prefix):
    # post-LN residual wiring: x <- LN(x + Sublayer(x))
    return nm.layer_norm_rows(nm.add(x, sublayer_out), params[f"{prefix}.g"], params[f"{prefix}.b"])


def encode(z, params):
    cfg = params.config
    x = z
    for layer in range(cfg.layers):
        p = f"enc.{layer}"
        x = _post_ln(x, _attention(x, x, params, f"{p}.msa", cfg.heads), params, f"{p}.ln1")
        x = _post_ln(x, _mlp(x, params, f"{p}.mlp"), params, f"{p}.ln2")
    return x


def decode(z, u, params, self_context=True):
    """Decoder stack over the embedded window, cross-attending to the
    encoder latent. With self_context off this is the identity on ``u``."""
    if not self_context:
        return u
    cfg = params.config
    x = z
    for layer in range(cfg.layers):
        p = f"dec.{layer}"
        x = _post_ln(x, _attention(x, x, params, f"{p}.msa", cfg.heads), params, f"{p}.ln1")
        x = _post_ln(x, _attention(x, u, params, f"{p}.mca", cfg.heads), params, f"{p}.ln2")
        x = _post_ln(x, _mlp(x, params, f"{p}.mlp"), params, f"{p}.ln3")
    return x


def predict_next(features, params, self_context=True):
    """Graph node (1 x D) predicting the feature vector one past the window."""
    cfg = params.config
    z = embed(features, params)
    u = encode(z, params)
    d = decode(z, u, params, self_context)
    row = nm.take_row(d, cfg.window - 1) if cfg.readout == "last" else nm.mean_rows(d)
    return nm.add(nm.matmul(row, params["phi.w"]), params["phi.b"])


def predict_next_values(features, params, self_context=True):
    """Convenience: the predicted D-vector as a plain array."""
    return predict_next(features, params, self_context).value[0]


_CKPT_HEADER = struct.Struct("<4sHI")


def save_checkpoint(params, path):
    cfg_json = json.dumps(asdict(params.config)).encode()
    with open(path, "wb") as fh:
        fh.write(_CKPT_HEADER.pack(CKPT_MAGIC, CKPT_VERSION, len(cfg_json)))
        fh.write(cfg_json)
        for _, t in params.items():
            fh.write(np.ascontiguousarray(t.value, dtype="<f4").tobytes())


def load_checkpoint(path):
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _CKPT_HEADER.size:
        raise CheckpointError(f"{path}: truncated header")
    magic, version, cfg_len = _CKPT_HEADER.unpack_from(raw)
    if magic != CKPT_MAGIC:
        raise CheckpointError(f"{path}: bad magic {magic!r}")
    if version != CKPT_VERSION:
        raise CheckpointError(f"{path}: unsupported version {version}")
    try:
        config = ModelConfig(**json.loads(raw[_CKPT_HEADER.size : _CKPT_HEADER.size + cfg_len]))
    except (json.JSONDecodeError, TypeError, ValueError) as exc:
        raise CheckpointError(f"{path}: invalid config block ({exc})") from exc
    offset = _CKPT_HEADER.size + cfg_len
    tensors = {}
    for name, (rows, cols) in param_shapes(config):
        nbytes = 4 * rows * cols
        if offset + nbytes > len(raw):
            raise CheckpointError(f"{path}: truncated at parameter {name}")
        value = np.frombuffer(raw, dtype="<f4", count=rows * cols, offset=offset)
        tensors[name] = Tensor2(value.astype(np.float64).reshape(rows, cols), requires_grad=True)
        offset += nbytes
    if offset != len(raw):
        raise CheckpointError(f"{path}: {len(raw) - offset} trailing bytes")
    return ModelParams(config, tensors)
