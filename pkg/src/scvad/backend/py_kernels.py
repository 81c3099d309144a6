"""Pure-numpy reference kernels for the row-wise hot ops.

The compiled extension (`_ckernels`) mirrors these signatures exactly;
whichever is active is decided once at import time in ``backend.__init__``.
Matrix products are not duplicated here: BLAS already is the compiled path
for those, in both backends.
"""

import numpy as np

NAME = "python"


def softmax_rows(x):
    shifted = x - x.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def softmax_rows_backward(y, dy):
    # dX = Y * (dY - <Y, dY>_row)
    dot = (y * dy).sum(axis=1, keepdims=True)
    return y * (dy - dot)


def layer_norm_rows(x, gain, bias, eps):
    """Row-wise layer norm. Returns (out, xhat, invstd); the latter two are
    cached for the backward pass."""
    mean = x.mean(axis=1, keepdims=True)
    var = x.var(axis=1, keepdims=True)
    invstd = 1.0 / np.sqrt(var + eps)
    xhat = (x - mean) * invstd
    return xhat * gain + bias, xhat, invstd


def layer_norm_rows_backward(dy, xhat, invstd, gain):
    """Gradients for layer_norm_rows. Returns (dx, dgain, dbias)."""
    dxhat = dy * gain
    m1 = dxhat.mean(axis=1, keepdims=True)
    m2 = (dxhat * xhat).mean(axis=1, keepdims=True)
    dx = (dxhat - m1 - xhat * m2) * invstd
    dgain = (dy * xhat).sum(axis=0, keepdims=True)
    dbias = dy.sum(axis=0, keepdims=True)
    return dx, dgain, dbias
