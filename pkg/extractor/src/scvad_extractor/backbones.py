"""Spatial and temporal (flow) feature backbones.

Spatial: a torchvision ResNet-18 trunk whose global-average-pooled
penultimate activation gives a 512-dim vector per frame. By default the
trunk is initialized from a fixed seed (no network access); a local
state-dict path can be supplied instead to use pretrained weights.

Temporal: dense optical flow between consecutive frames, reduced to a
fixed (h, w) grid of flow magnitudes, K = h*w values per frame. The
first frame has no predecessor and gets a zero temporal vector.
"""

import os
from pathlib import Path

import cv2
import numpy as np
import torch
from torchvision.models import resnet18

SPATIAL_DIM = 512
_IMAGENET_MEAN = np.array([0.485, 0.456, 0.406], dtype=np.float32)
_IMAGENET_STD = np.array([0.229, 0.224, 0.225], dtype=np.float32)


class BackboneError(RuntimeError):
    pass


class SpatialBackbone:
    """512-dim per-frame embedding from a ResNet-18 trunk."""

    def __init__(self, backbone_id="resnet18", input_size=160, seed=0):
        if backbone_id != "resnet18" and not os.path.exists(backbone_id):
            raise BackboneError(f"unknown spatial backbone {backbone_id!r}")
        torch.manual_seed(seed)
        model = resnet18(weights=None)
        if backbone_id != "resnet18":
            try:
                state = torch.load(backbone_id, map_location="cpu", weights_only=True)
                model.load_state_dict(state)
            except Exception as exc:
                raise BackboneError(f"cannot load weights from {backbone_id}: {exc}") from exc
        model.fc = torch.nn.Identity()  # expose the 512-dim pooled feature
        model.eval()
        self.model = model
        self.input_size = input_size

    @torch.inference_mode()
    def __call__(self, frame_bgr):
        rgb = cv2.cvtColor(frame_bgr, cv2.COLOR_BGR2RGB)
        rgb = cv2.resize(rgb, (self.input_size, self.input_size), interpolation=cv2.INTER_AREA)
        x = rgb.astype(np.float32) / 255.0
        x = (x - _IMAGENET_MEAN) / _IMAGENET_STD
        tensor = torch.from_numpy(x.transpose(2, 0, 1)).unsqueeze(0)
        feat = self.model(tensor).squeeze(0).numpy()
        if feat.shape != (SPATIAL_DIM,):
            raise BackboneError(f"spatial backbone produced shape {feat.shape}")
        return feat.astype(np.float64)


class FlowBackbone:
    """Grid-pooled dense-flow magnitudes between consecutive frames."""

    def __init__(self, backbone_id="farneback", flow_grid=(8, 8), work_size=160):
        if backbone_id != "farneback":
            raise BackboneError(f"unknown flow backbone {backbone_id!r}")
        h, w = flow_grid
        if h < 1 or w < 1:
            raise BackboneError(f"flow grid must be positive, got {flow_grid}")
        self.flow_grid = (h, w)
        self.work_size = work_size
        self._prev = None

    @property
    def dim(self):
        return self.flow_grid[0] * self.flow_grid[1]

    def reset(self):
        self._prev = None

    def __call__(self, frame_bgr):
        gray = cv2.cvtColor(frame_bgr, cv2.COLOR_BGR2GRAY)
        gray = cv2.resize(gray, (self.work_size, self.work_size), interpolation=cv2.INTER_AREA)
        if self._prev is None:
            self._prev = gray
            return np.zeros(self.dim, dtype=np.float64)
        flow = cv2.calcOpticalFlowFarneback(
            self._prev, gray, None,
            pyr_scale=0.5, levels=3, winsize=15,
            iterations=3, poly_n=5, poly_sigma=1.2, flags=0,
        )
        self._prev = gray
        magnitude = np.linalg.norm(flow, axis=2).astype(np.float32)
        h, w = self.flow_grid
        pooled = cv2.resize(magnitude, (w, h), interpolation=cv2.INTER_AREA)
        return pooled.reshape(-1).astype(np.float64)
