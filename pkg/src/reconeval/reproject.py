"""Reprojection error: observed keypoints vs. projections of their 3D points.

Errors are reported as the unsquared Euclidean pixel distance. Observations
whose point falls behind the camera are excluded from frame means; a frame
with no usable (point, observation) pair has an undefined error (None), which
is the normal case for dense bundles that carry no tracks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

from .errors import UnknownFrameError
from .scene import ReconstructionScene, project, world_to_camera

__all__ = [
    "ReprojectionRecord",
    "reprojection_error",
    "frame_reprojection_records",
    "frame_reprojection_error",
    "scene_reprojection_errors",
    "mean_reprojection_error",
]


@dataclass(frozen=True)
class ReprojectionRecord:
    """One observation compared against its reprojected point.

    ``projected`` and ``error_px`` are None when the point is behind the camera.
    """

    point_id: int
    frame_id: int
    observed: Tuple[float, float]
    projected: Optional[Tuple[float, float]]
    error_px: Optional[float]


def reprojection_error(observed, projected) -> float:
    """Euclidean pixel distance between an observed and a projected point."""
    dx = float(observed[0]) - float(projected[0])
    dy = float(observed[1]) - float(projected[1])
    if not (math.isfinite(dx) and math.isfinite(dy)):
        raise ValueError("reprojection error requires finite pixel coordinates")
    return math.hypot(dx, dy)


def frame_reprojection_records(
    scene: ReconstructionScene, frame_id: int
) -> List[ReprojectionRecord]:
    """Per-observation records for every tracked point seen by one frame."""
    if frame_id not in scene.frames:
        raise UnknownFrameError(f"unknown frame id {frame_id}")
    frame = scene.frames[frame_id]
    intr = scene.cameras[frame.camera_id]
    records = []
    for point, obs in scene.frame_observations(frame_id):
        uv = project(intr, world_to_camera(frame.pose, point.position))
        err = None if uv is None else reprojection_error(obs.pixel, uv)
        records.append(ReprojectionRecord(point.id, frame_id, obs.pixel, uv, err))
    return records


def frame_reprojection_error(scene: ReconstructionScene, frame_id: int) -> Optional[float]:
    """Mean pixel error over the frame's tracked observations; None if there are none."""
    errors = [r.error_px for r in frame_reprojection_records(scene, frame_id) if r.error_px is not None]
    if not errors:
        return None
    return sum(errors) / len(errors)


def scene_reprojection_errors(scene: ReconstructionScene) -> Dict[int, Optional[float]]:
    """Per-frame mean errors for every registered frame (single pass over tracks)."""
    sums: Dict[int, float] = {fid: 0.0 for fid in scene.frames}
    counts: Dict[int, int] = {fid: 0 for fid in scene.frames}
    for point in scene.points.values():
        for obs in point.track:
            frame = scene.frames[obs.frame_id]
            intr = scene.cameras[frame.camera_id]
            uv = project(intr, world_to_camera(frame.pose, point.position))
            if uv is None:
                continue
            sums[obs.frame_id] += reprojection_error(obs.pixel, uv)
            counts[obs.frame_id] += 1
    return {
        fid: (sums[fid] / counts[fid] if counts[fid] else None) for fid in scene.frames
    }


def mean_reprojection_error(scene: ReconstructionScene) -> Optional[float]:
    """Unweighted mean of the defined per-frame errors; None when all are undefined."""
    per_frame = [v for v in scene_reprojection_errors(scene).values() if v is not None]
    if not per_frame:
        return None
    return sum(per_frame) / len(per_frame)
