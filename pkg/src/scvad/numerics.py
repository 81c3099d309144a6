"""Dense 2-D tensors with reverse-mode differentiation, plus Adam.

A Tensor2 is a float64 matrix node. Ops are free functions that wire
parent links and a backward closure into the result; calling
:func:`backward` on a scalar (1x1) loss walks the recorded graph once in
reverse topological order and accumulates ``.grad`` on every tensor that
requires it. Accumulation is always float64 regardless of what the caller
fed in.
"""

from __future__ import annotations

import math

import numpy as np

from . import backend


class DimensionError(ValueError):
    """Shape mismatch in a forward op; message names the op."""


class Tensor2:
    """A rows x cols float64 matrix, optionally tracked for gradients."""

    __slots__ = ("value", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, value, requires_grad=False):
        arr = np.asarray(value, dtype=np.float64)
        if arr.ndim == 1:
            arr = arr.reshape(1, -1)
        if arr.ndim != 2:
            raise DimensionError(f"Tensor2 expects a 1-D or 2-D array, got ndim={arr.ndim}")
        self.value = arr
        self.grad = None
        self.requires_grad = requires_grad
        self._parents = ()
        self._backward = None

    @property
    def rows(self):
        return self.value.shape[0]

    @property
    def cols(self):
        return self.value.shape[1]

    @property
    def shape(self):
        return self.value.shape

    def __repr__(self):
        return f"Tensor2(shape={self.value.shape}, requires_grad={self.requires_grad})"


def _result(value, parents, backward_fn):
    parents = tuple(p for p in parents if p.requires_grad)
    out = Tensor2(value, requires_grad=bool(parents))
    if parents:
        out._parents = parents
        out._backward = backward_fn
    return out


def _accum(t, g):
    if t.grad is None:
        t.grad = np.zeros_like(t.value)
    t.grad += g


def matmul(a, b):
    if a.cols != b.rows:
        raise DimensionError(f"matmul: {a.shape} x {b.shape}")
    out = _result(a.value @ b.value, (a, b), None)

    def back():
        if a.requires_grad:
            _accum(a, out.grad @ b.value.T)
        if b.requires_grad:
            _accum(b, a.value.T @ out.grad)

    out._backward = back
    return out


def add(a, b):
    """Elementwise add; b may also be a single row broadcast over a's rows."""
    if a.shape != b.shape and not (b.rows == 1 and b.cols == a.cols):
        raise DimensionError(f"add: {a.shape} + {b.shape}")
    broadcast = a.shape != b.shape
    out = _result(a.value + b.value, (a, b), None)

    def back():
        if a.requires_grad:
            _accum(a, out.grad)
        if b.requires_grad:
            _accum(b, out.grad.sum(axis=0, keepdims=True) if broadcast else out.grad)

    out._backward = back
    return out


def scale(a, c):
    c = float(c)
    out = _result(a.value * c, (a,), None)
    out._backward = lambda: _accum(a, out.grad * c)
    return out


def mul(a, b):
    if a.shape != b.shape:
        raise DimensionError(f"mul: {a.shape} * {b.shape}")
    out = _result(a.value * b.value, (a, b), None)

    def back():
        if a.requires_grad:
            _accum(a, out.grad * b.value)
        if b.requires_grad:
            _accum(b, out.grad * a.value)

    out._backward = back
    return out


def relu(a):
    out = _result(np.maximum(a.value, 0.0), (a,), None)
    out._backward = lambda: _accum(a, out.grad * (a.value > 0.0))
    return out


def transpose(a):
    out = _result(a.value.T.copy(), (a,), None)
    out._backward = lambda: _accum(a, out.grad.T)
    return out


def softmax_rows(a):
    y = backend.softmax_rows(a.value)
    out = _result(y, (a,), None)
    out._backward = lambda: _accum(a, backend.softmax_rows_backward(y, out.grad))
    return out


def layer_norm_rows(a, gain, bias, eps=1e-5):
    """Row-wise layer norm with affine gain/bias (each 1 x cols)."""
    if gain.shape != (1, a.cols) or bias.shape != (1, a.cols):
        raise DimensionError(
            f"layer_norm_rows: gain {gain.shape} / bias {bias.shape} vs input {a.shape}"
        )
    y, xhat, invstd = backend.layer_norm_rows(a.value, gain.value, bias.value, eps)
    out = _result(y, (a, gain, bias), None)

    def back():
        dx, dgain, dbias = backend.layer_norm_rows_backward(out.grad, xhat, invstd, gain.value)
        if a.requires_grad:
            _accum(a, dx)
        if gain.requires_grad:
            _accum(gain, dgain)
        if bias.requires_grad:
            _accum(bias, dbias)

    out._backward = back
    return out


def sum_all(a):
    out = _result([[a.value.sum()]], (a,), None)
    out._backward = lambda: _accum(a, np.full_like(a.value, out.grad[0, 0]))
    return out


def take_row(a, i):
    out = _result(a.value[i : i + 1, :], (a,), None)

    def back():
        g = np.zeros_like(a.value)
        g[i, :] = out.grad[0, :]
        _accum(a, g)

    out._backward = back
    return out


def mean_rows(a):
    out = _result(a.value.mean(axis=0, keepdims=True), (a,), None)
    out._backward = lambda: _accum(a, np.repeat(out.grad, a.rows, axis=0) / a.rows)
    return out


def slice_cols(a, j0, j1):
    out = _result(a.value[:, j0:j1].copy(), (a,), None)

    def back():
        g = np.zeros_like(a.value)
        g[:, j0:j1] = out.grad
        _accum(a, g)

    out._backward = back
    return out


def concat_cols(parts):
    parts = tuple(parts)
    out = _result(np.concatenate([p.value for p in parts], axis=1), parts, None)

    def back():
        j = 0
        for p in parts:
            if p.requires_grad:
                _accum(p, out.grad[:, j : j + p.cols])
            j += p.cols

    out._backward = back
    return out


def backward(loss):
    """Accumulate gradients of a scalar loss into every reachable tensor
    with requires_grad. Each node's backward runs exactly once."""
    if loss.value.shape != (1, 1):
        raise DimensionError(f"backward: loss must be 1x1, got {loss.value.shape}")
    topo = []
    seen = set()
    stack = [(loss, False)]
    while stack:
        node, done = stack.pop()
        if done:
            topo.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            stack.append((p, False))
    loss.grad = np.ones((1, 1))
    for node in reversed(topo):
        if node._backward is not None:
            node._backward()


def zero_grads(tensors):
    for t in tensors:
        t.grad = None


def uniform_init(rng, rows, cols):
    """Glorot-style uniform init in +/- sqrt(6/(fan_in+fan_out))."""
    limit = math.sqrt(6.0 / (rows + cols))
    return rng.uniform(-limit, limit, size=(rows, cols))


class AdamState:
    """Moment buffers and step counter for Adam over a named parameter set."""

    def __init__(self, params, lr=0.01, beta1=0.9, beta2=0.98, epsilon=1e-8):
        if not (0.0 < beta1 < 1.0 and 0.0 < beta2 < 1.0):
            raise ValueError("Adam betas must lie in (0, 1)")
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.epsilon = epsilon
        self.step = 0
        self.m = {name: np.zeros_like(t.value) for name, t in params.items()}
        self.v = {name: np.zeros_like(t.value) for name, t in params.items()}


def adam_step(params, grads, state):
    """One bias-corrected Adam update, in place on ``params``.

    ``grads`` maps name -> gradient array; parameters absent from it are
    left untouched (their moments still exist but do not advance).
    """
    state.step += 1
    b1, b2 = state.beta1, state.beta2
    bc1 = 1.0 - b1**state.step
    bc2 = 1.0 - b2**state.step
    for name, g in grads.items():
        t = params[name]
        if g.shape != t.value.shape:
            raise DimensionError(f"adam_step: grad {g.shape} vs param {t.value.shape} for {name}")
        m = state.m[name]
        v = state.v[name]
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        t.value -= state.lr * (m / bc1) / (np.sqrt(v / bc2) + state.epsilon)
    return params, state
