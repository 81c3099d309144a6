"""Kernel backend selection.

Two implementations of the row-wise hot kernels exist: a pure-numpy
reference (`py_kernels`) and a Cython extension (`_ckernels`). One is
picked at import time and exposed as module-level functions here.

Selection is controlled by the SCVAD_BACKEND environment variable:
``auto`` (default, compiled if built), ``python``, or ``compiled``
(fails loudly if the extension is missing).
"""

import os

from . import py_kernels

_choice = os.environ.get("SCVAD_BACKEND", "auto")
if _choice not in ("auto", "python", "compiled"):
    raise RuntimeError(f"SCVAD_BACKEND must be auto|python|compiled, got {_choice!r}")

_impl = py_kernels
if _choice in ("auto", "compiled"):
    try:
        from . import _ckernels

        _impl = _ckernels
    except ImportError:
        if _choice == "compiled":
            raise

BACKEND = _impl.NAME

softmax_rows = _impl.softmax_rows
softmax_rows_backward = _impl.softmax_rows_backward
layer_norm_rows = _impl.layer_norm_rows
layer_norm_rows_backward = _impl.layer_norm_rows_backward
