"""Seeded synthetic scenes with exact ground-truth observations.

Cameras are placed on a sphere around a box of random points, looking at the
box center, so every point sits in front of every camera (and, with the
default distance and focal ranges, projects inside the image bounds).
Observations are the exact projections (optionally perturbed), so
noise-free scenes have zero reprojection error by construction and fixed
offsets move every frame's mean by exactly the offset norm.

Generation is deterministic for a fixed spec (the seed is part of the spec).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Dict, Optional, Tuple

import numpy as np

from .errors import InvalidInputError
from .scene import (
    CameraIntrinsics,
    CameraModel,
    CameraPose,
    FrameRecord,
    Observation,
    ReconstructionScene,
    ScenePoint,
    matrix_to_quat,
    project,
    world_to_camera,
)
from .io.sparse import ModelBundle, SourceKind

__all__ = ["SynthSpec", "generate_scene", "generate_bundle", "perturb_observations"]


@dataclass(frozen=True)
class SynthSpec:
    num_points: int = 100
    num_cameras: int = 3
    model: CameraModel = CameraModel.PINHOLE
    width_range: Tuple[int, int] = (320, 640)
    height_range: Tuple[int, int] = (240, 480)
    focal_factor_range: Tuple[float, float] = (0.8, 1.2)  # focal = factor * min(w, h)
    distortion_range: Tuple[float, float] = (-0.05, 0.05)
    box_half_extent: float = 1.0
    camera_distance_factor: float = 4.0  # sphere radius in box-diagonal units
    noise_offset: Optional[Tuple[float, float]] = None
    noise_sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.num_points < 0 or self.num_cameras < 0:
            raise InvalidInputError("point and camera counts must be >= 0")
        if self.noise_sigma < 0:
            raise InvalidInputError(f"noise sigma must be >= 0, got {self.noise_sigma}")
        if self.noise_offset is not None and self.noise_sigma > 0:
            raise InvalidInputError("choose either a fixed offset or Gaussian noise, not both")
        if self.box_half_extent <= 0 or self.camera_distance_factor <= 1.5:
            raise InvalidInputError("camera sphere must clear the point box")


def _look_at(center: np.ndarray, target: np.ndarray) -> np.ndarray:
    """World-to-camera rotation with +z toward the target (rows are camera axes)."""
    z = target - center
    z = z / np.linalg.norm(z)
    up = np.array([0.0, 0.0, 1.0])
    if abs(float(np.dot(z, up))) > 0.99:
        up = np.array([0.0, 1.0, 0.0])
    x = np.cross(up, z)
    x = x / np.linalg.norm(x)
    y = np.cross(z, x)
    return np.stack([x, y, z])


def generate_scene(spec: SynthSpec) -> ReconstructionScene:
    """Build a scene per the spec; observations equal exact projections plus noise."""
    if spec.num_points > 0 and spec.num_cameras == 0:
        raise InvalidInputError("points need at least one camera to be observed from")
    rng = np.random.default_rng(spec.seed)

    cameras: Dict[int, CameraIntrinsics] = {}
    frames: Dict[int, FrameRecord] = {}
    radius = spec.camera_distance_factor * spec.box_half_extent * math.sqrt(3.0)
    for k in range(spec.num_cameras):
        frame_id = k + 1
        width = int(rng.integers(spec.width_range[0], spec.width_range[1] + 1))
        height = int(rng.integers(spec.height_range[0], spec.height_range[1] + 1))
        focal = float(rng.uniform(*spec.focal_factor_range)) * min(width, height)
        cx = width / 2.0 + float(rng.uniform(-0.02, 0.02)) * width
        cy = height / 2.0 + float(rng.uniform(-0.02, 0.02)) * height
        if spec.model is CameraModel.SIMPLE_PINHOLE:
            params = (focal, cx, cy)
        elif spec.model is CameraModel.PINHOLE:
            fy = focal * float(rng.uniform(0.95, 1.05))
            params = (focal, fy, cx, cy)
        elif spec.model is CameraModel.SIMPLE_RADIAL:
            params = (focal, cx, cy, float(rng.uniform(*spec.distortion_range)))
        else:
            params = (
                focal, cx, cy,
                float(rng.uniform(*spec.distortion_range)),
                float(rng.uniform(*spec.distortion_range)),
            )
        cameras[frame_id] = CameraIntrinsics.from_params(spec.model, width, height, params)

        azimuth = 2.0 * math.pi * (k + float(rng.uniform(0.0, 0.5))) / max(spec.num_cameras, 1)
        elevation = float(rng.uniform(-0.9, 0.9))
        center = radius * np.array(
            [
                math.cos(elevation) * math.cos(azimuth),
                math.cos(elevation) * math.sin(azimuth),
                math.sin(elevation),
            ]
        )
        rot = _look_at(center, np.zeros(3))
        qvec = matrix_to_quat(rot)
        tvec = tuple(-(rot @ center))
        frames[frame_id] = FrameRecord(
            frame_id, f"synth_{frame_id:04d}.png", frame_id, CameraPose(qvec, tvec)
        )

    positions = rng.uniform(
        -spec.box_half_extent, spec.box_half_extent, size=(spec.num_points, 3)
    )
    colors = rng.integers(0, 256, size=(spec.num_points, 3))

    points: Dict[int, ScenePoint] = {}
    for i in range(spec.num_points):
        pid = i + 1
        track = []
        for frame_id, frame in frames.items():
            cam_point = world_to_camera(frame.pose, positions[i])
            if cam_point[2] <= 0:
                raise InvalidInputError(
                    f"generated point {pid} fell behind camera {frame_id}; "
                    f"increase camera_distance_factor"
                )
            uv = project(cameras[frame.camera_id], cam_point)
            noise = (0.0, 0.0)
            if spec.noise_offset is not None:
                noise = spec.noise_offset
            elif spec.noise_sigma > 0:
                noise = tuple(rng.normal(0.0, spec.noise_sigma, size=2))
            track.append(Observation(frame_id, (uv[0] + noise[0], uv[1] + noise[1])))
        points[pid] = ScenePoint(
            pid, tuple(positions[i]), tuple(int(c) for c in colors[i]), -1.0, tuple(track)
        )

    return ReconstructionScene(cameras, frames, points, spec.num_cameras)


def generate_bundle(spec: SynthSpec) -> ModelBundle:
    """Convenience wrapper: a synthetic scene packaged as a sparse-SfM bundle."""
    return ModelBundle(SourceKind.SPARSE_SFM, generate_scene(spec))


def perturb_observations(
    scene: ReconstructionScene,
    offset: Optional[Tuple[float, float]] = None,
    sigma: Optional[float] = None,
    seed: int = 0,
) -> ReconstructionScene:
    """Shift every observation by a fixed offset or seeded Gaussian noise."""
    if (offset is None) == (sigma is None):
        raise InvalidInputError("pass exactly one of offset or sigma")
    rng = np.random.default_rng(seed)
    points = {}
    for pid, point in scene.points.items():
        track = []
        for obs in point.track:
            if offset is not None:
                dx, dy = offset
            else:
                dx, dy = rng.normal(0.0, sigma, size=2)
            track.append(Observation(obs.frame_id, (obs.pixel[0] + dx, obs.pixel[1] + dy)))
        points[pid] = replace(point, track=tuple(track))
    return ReconstructionScene(
        scene.cameras, scene.frames, points, scene.input_frame_total
    )
