"""Shared sample footage: a deterministic 110-frame clip rendered as a
frame directory (a bright square orbiting a gradient background, with a
sudden scene change near the end)."""

import cv2
import numpy as np
import pytest

FRAME_COUNT = 110
SIZE = 96


def render_frame(t):
    y, x = np.mgrid[0:SIZE, 0:SIZE]
    frame = ((x + y) * (255 / (2 * SIZE))).astype(np.uint8)
    frame = cv2.merge([frame, frame[::-1], frame])
    if t >= 95:  # abrupt scene change: inverted background, square gone
        return 255 - frame
    cx = int(SIZE / 2 + 30 * np.cos(2 * np.pi * t / 24))
    cy = int(SIZE / 2 + 30 * np.sin(2 * np.pi * t / 24))
    cv2.rectangle(frame, (cx - 8, cy - 8), (cx + 8, cy + 8), (255, 255, 255), -1)
    return frame


@pytest.fixture(scope="session")
def frame_dir(tmp_path_factory):
    root = tmp_path_factory.mktemp("clip")
    for t in range(FRAME_COUNT):
        cv2.imwrite(str(root / f"frame_{t:04d}.png"), render_frame(t))
    return root
