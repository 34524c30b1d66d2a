"""Ingestion of dense-network outputs: a PLY point cloud plus a poses JSON file.

Poses file schema::

    {
      "input_frame_total": int,
      "cameras": [{"camera_id": int, "model": str|int, "width": int,
                   "height": int, "params": [float, ...]}, ...],
      "frames": [{"frame_id": int, "name": str, "camera_id": int,
                  "qvec": [w, x, y, z], "tvec": [x, y, z],
                  "native_reprojection_error": float (optional)}, ...]
    }

Dense outputs carry no tracks, so recomputed reprojection error is undefined
for them; only producer-native errors (when present) are reported downstream.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Dict, Optional

from ..errors import PosesFileError
from ..scene import (
    CameraIntrinsics,
    CameraModel,
    CameraPose,
    FrameRecord,
    ReconstructionScene,
    ScenePoint,
)
from .ply import read_ply
from .sparse import ModelBundle, SourceKind

__all__ = ["parse_generic_dense", "save_generic_poses"]

_DEFAULT_COLOR = (128, 128, 128)  # clouds without rgb render mid-gray


def _require(doc: dict, key: str, path) -> object:
    if key not in doc:
        raise PosesFileError(f"{path}: missing required key {key!r}")
    return doc[key]


def _camera_model(token, path) -> CameraModel:
    if isinstance(token, int):
        try:
            return CameraModel(token)
        except ValueError:
            raise PosesFileError(f"{path}: unknown camera model id {token}") from None
    try:
        return CameraModel.from_name(str(token))
    except Exception:
        raise PosesFileError(f"{path}: unknown camera model {token!r}") from None


def _load_poses(path: Path):
    try:
        doc = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise PosesFileError(f"{path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise PosesFileError(f"{path}: top level must be a JSON object")

    input_frame_total = _require(doc, "input_frame_total", path)
    if not isinstance(input_frame_total, int) or input_frame_total < 0:
        raise PosesFileError(f"{path}: input_frame_total must be a non-negative integer")

    cameras: Dict[int, CameraIntrinsics] = {}
    for entry in _require(doc, "cameras", path):
        cid = int(_require(entry, "camera_id", path))
        model = _camera_model(_require(entry, "model", path), path)
        cameras[cid] = CameraIntrinsics.from_params(
            model,
            int(_require(entry, "width", path)),
            int(_require(entry, "height", path)),
            _require(entry, "params", path),
        )

    frames: Dict[int, FrameRecord] = {}
    native: Dict[int, float] = {}
    for entry in _require(doc, "frames", path):
        fid = int(_require(entry, "frame_id", path))
        cid = int(_require(entry, "camera_id", path))
        if cid not in cameras:
            raise PosesFileError(f"{path}: frame {fid} references unknown camera {cid}")
        if fid in frames:
            raise PosesFileError(f"{path}: duplicate frame id {fid}")
        pose = CameraPose(tuple(_require(entry, "qvec", path)), tuple(_require(entry, "tvec", path)))
        frames[fid] = FrameRecord(fid, str(_require(entry, "name", path)), cid, pose)
        if "native_reprojection_error" in entry:
            value = float(entry["native_reprojection_error"])
            if value < 0:
                raise PosesFileError(f"{path}: native error for frame {fid} is negative")
            native[fid] = value
    return input_frame_total, cameras, frames, (native or None)


def parse_generic_dense(point_cloud_path, poses_path) -> ModelBundle:
    """Load a dense reconstruction (PLY cloud + poses JSON) into a ModelBundle."""
    input_frame_total, cameras, frames, native = _load_poses(Path(poses_path))
    positions, colors = read_ply(point_cloud_path)
    points = {}
    for i in range(len(positions)):
        color = tuple(int(c) for c in colors[i]) if colors is not None else _DEFAULT_COLOR
        points[i] = ScenePoint(i, tuple(positions[i]), color)
    scene = ReconstructionScene(cameras, frames, points, input_frame_total)
    return ModelBundle(SourceKind.GENERIC_DENSE, scene, native)


def save_generic_poses(
    scene: ReconstructionScene,
    path,
    native_errors: Optional[Dict[int, float]] = None,
) -> None:
    """Write a scene's cameras and frames in the poses JSON schema."""
    doc = {
        "input_frame_total": scene.input_frame_total,
        "cameras": [
            {
                "camera_id": cid,
                "model": scene.cameras[cid].model.name,
                "width": scene.cameras[cid].width,
                "height": scene.cameras[cid].height,
                "params": list(scene.cameras[cid].params),
            }
            for cid in sorted(scene.cameras)
        ],
        "frames": [],
    }
    for fid in sorted(scene.frames):
        frame = scene.frames[fid]
        entry = {
            "frame_id": fid,
            "name": frame.name,
            "camera_id": frame.camera_id,
            "qvec": list(frame.pose.qvec),
            "tvec": list(frame.pose.tvec),
        }
        if native_errors and fid in native_errors:
            entry["native_reprojection_error"] = native_errors[fid]
        doc["frames"].append(entry)
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
