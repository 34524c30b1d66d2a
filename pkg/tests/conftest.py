import sys
from pathlib import Path

import numpy as np
import pytest
from PIL import Image

sys.path.insert(0, str(Path(__file__).parent))  # for the oracles module

from reconeval.scene import (
    CameraIntrinsics,
    CameraModel,
    CameraPose,
    FrameRecord,
    ReconstructionScene,
    ScenePoint,
)


@pytest.fixture
def simple_intrinsics():
    return CameraIntrinsics.from_params(CameraModel.PINHOLE, 100, 100, (100.0, 100.0, 50.0, 50.0))


def make_single_frame_scene(points, intrinsics=None, width=101, height=101):
    """A scene with one identity-pose frame and the given (id, xyz, rgb) points.

    The principal point sits on the integer lattice at ((w-1)/2, (h-1)/2).
    """
    intr = intrinsics or CameraIntrinsics.from_params(
        CameraModel.SIMPLE_PINHOLE, width, height,
        (100.0, (width - 1) / 2.0, (height - 1) / 2.0),
    )
    frame = FrameRecord(1, "frame.png", 1, CameraPose((1, 0, 0, 0), (0, 0, 0)))
    pts = {pid: ScenePoint(pid, xyz, rgb) for pid, xyz, rgb in points}
    return ReconstructionScene({1: intr}, {1: frame}, pts)


def write_rgb(path, array):
    Image.fromarray(np.asarray(array, dtype=np.uint8), mode="RGB").save(path, format="PNG")


def read_rgb(path):
    with Image.open(path) as img:
        return np.asarray(img.convert("RGB"))
