"""Self-context transformer predictor for per-stream anomaly detection."""

from .backend import BACKEND

__version__ = "0.1.0"

__all__ = ["BACKEND", "__version__"]
