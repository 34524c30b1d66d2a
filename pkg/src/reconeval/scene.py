"""Domain types for reconstructions and the camera/projection math built on them.

Conventions (shared by every module in the package):

* Quaternions are scalar-first ``(w, x, y, z)`` and encode the world-to-camera
  rotation, matching the sparse-model format produced by the usual SfM tools.
* Poses transform world points into the camera frame: ``Xc = R(q) @ X + t``.
* The camera looks along +z; pixel ``u`` grows right, ``v`` grows down, and the
  projected coordinates live on the integer pixel lattice (a point landing
  exactly on the principal point projects to ``(cx, cy)``).
* All geometry is float64.

Types are frozen dataclasses; scenes are immutable after construction and safe
to share across threads.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from types import MappingProxyType
from typing import Mapping, Optional, Tuple

import numpy as np

from .errors import InvalidInputError, SceneIntegrityError, UnknownFrameError

__all__ = [
    "CameraModel",
    "CameraIntrinsics",
    "CameraPose",
    "Observation",
    "ScenePoint",
    "FrameRecord",
    "ReconstructionScene",
    "quat_to_matrix",
    "matrix_to_quat",
    "world_to_camera",
    "project",
    "project_points",
    "back_project",
]

_QUAT_KEEP_TOL = 1e-9  # unit quaternions within this are stored verbatim


class CameraModel(enum.IntEnum):
    """Supported camera models; values are the sparse-model format ids."""

    SIMPLE_PINHOLE = 0  # f, cx, cy
    PINHOLE = 1         # fx, fy, cx, cy
    SIMPLE_RADIAL = 2   # f, cx, cy, k
    RADIAL = 3          # f, cx, cy, k1, k2

    @property
    def param_count(self) -> int:
        return {0: 3, 1: 4, 2: 4, 3: 5}[int(self)]

    @property
    def distortion_count(self) -> int:
        return {0: 0, 1: 0, 2: 1, 3: 2}[int(self)]

    @property
    def shared_focal(self) -> bool:
        return self is not CameraModel.PINHOLE

    @classmethod
    def from_name(cls, name: str) -> "CameraModel":
        key = name.strip().upper().replace("-", "_")
        # accept both SIMPLE_PINHOLE and SimplePinhole spellings
        compact = {m.name.replace("_", ""): m for m in cls}
        if key in cls.__members__:
            return cls[key]
        if key.replace("_", "") in compact:
            return compact[key.replace("_", "")]
        raise InvalidInputError(f"unknown camera model name {name!r}")


@dataclass(frozen=True)
class CameraIntrinsics:
    """Pinhole(+radial) projection parameters for one physical camera."""

    model: CameraModel
    width: int
    height: int
    fx: float
    fy: float
    cx: float
    cy: float
    distortion: Tuple[float, ...] = ()

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise InvalidInputError(
                f"image size must be positive, got {self.width}x{self.height}"
            )
        if not (self.fx > 0 and self.fy > 0):
            raise InvalidInputError(f"focal lengths must be positive, got ({self.fx}, {self.fy})")
        if len(self.distortion) != self.model.distortion_count:
            raise InvalidInputError(
                f"{self.model.name} expects {self.model.distortion_count} distortion "
                f"coefficients, got {len(self.distortion)}"
            )
        if self.model.shared_focal and self.fx != self.fy:
            raise InvalidInputError(f"{self.model.name} requires fx == fy")
        vals = (self.fx, self.fy, self.cx, self.cy, *self.distortion)
        if not all(math.isfinite(v) for v in vals):
            raise InvalidInputError("non-finite intrinsics")

    @classmethod
    def from_params(
        cls, model: CameraModel, width: int, height: int, params
    ) -> "CameraIntrinsics":
        """Build from the flat parameter list used by the model file formats."""
        params = tuple(float(p) for p in params)
        if len(params) != model.param_count:
            raise InvalidInputError(
                f"{model.name} expects {model.param_count} params, got {len(params)}"
            )
        if model is CameraModel.PINHOLE:
            fx, fy, cx, cy = params
            dist: Tuple[float, ...] = ()
        else:
            f, cx, cy = params[:3]
            fx = fy = f
            dist = params[3:]
        return cls(model, int(width), int(height), fx, fy, cx, cy, dist)

    @property
    def params(self) -> Tuple[float, ...]:
        """Flat parameter list in the model-file order."""
        if self.model is CameraModel.PINHOLE:
            return (self.fx, self.fy, self.cx, self.cy)
        return (self.fx, self.cx, self.cy, *self.distortion)


def _normalize_quat(q) -> Tuple[float, float, float, float]:
    q = tuple(float(v) for v in q)
    if len(q) != 4:
        raise InvalidInputError(f"quaternion must have 4 components, got {len(q)}")
    if not all(math.isfinite(v) for v in q):
        raise InvalidInputError(f"non-finite quaternion {q}")
    norm = math.sqrt(sum(v * v for v in q))
    if norm == 0.0:
        raise InvalidInputError("zero quaternion")
    if abs(norm - 1.0) <= _QUAT_KEEP_TOL:
        return q  # keep file bytes stable for already-normalized inputs
    return tuple(v / norm for v in q)


@dataclass(frozen=True)
class CameraPose:
    """World-to-camera rigid transform: rotation quaternion (w,x,y,z) + translation."""

    qvec: Tuple[float, float, float, float]
    tvec: Tuple[float, float, float]

    def __post_init__(self):
        object.__setattr__(self, "qvec", _normalize_quat(self.qvec))
        tvec = tuple(float(v) for v in self.tvec)
        if len(tvec) != 3 or not all(math.isfinite(v) for v in tvec):
            raise InvalidInputError(f"bad translation {self.tvec}")
        object.__setattr__(self, "tvec", tvec)

    def rotation_matrix(self) -> np.ndarray:
        return quat_to_matrix(self.qvec)

    def inverse(self) -> "CameraPose":
        """Camera-to-world transform of this pose."""
        w, x, y, z = self.qvec
        q_inv = (w, -x, -y, -z)
        r_inv = quat_to_matrix(q_inv)
        t_inv = -r_inv @ np.asarray(self.tvec, dtype=np.float64)
        return CameraPose(q_inv, tuple(t_inv))


@dataclass(frozen=True)
class Observation:
    """One 2D detection of a 3D point: owning frame id plus pixel coordinates."""

    frame_id: int
    pixel: Tuple[float, float]

    def __post_init__(self):
        px = tuple(float(v) for v in self.pixel)
        if len(px) != 2 or not all(math.isfinite(v) for v in px):
            raise InvalidInputError(f"non-finite observation pixel {self.pixel}")
        object.__setattr__(self, "pixel", px)


@dataclass(frozen=True)
class ScenePoint:
    """A reconstructed 3D point with color, producer-reported error, and its track.

    ``error`` is the per-point reprojection error written by the producing tool;
    negative means "not reported".
    """

    id: int
    position: Tuple[float, float, float]
    color: Tuple[int, int, int] = (128, 128, 128)
    error: float = -1.0
    track: Tuple[Observation, ...] = ()

    def __post_init__(self):
        pos = tuple(float(v) for v in self.position)
        if len(pos) != 3 or not all(math.isfinite(v) for v in pos):
            raise InvalidInputError(f"non-finite point position {self.position}")
        object.__setattr__(self, "position", pos)
        color = tuple(int(c) for c in self.color)
        if len(color) != 3 or not all(0 <= c <= 255 for c in color):
            raise InvalidInputError(f"color out of range {self.color}")
        object.__setattr__(self, "color", color)
        object.__setattr__(self, "track", tuple(self.track))


@dataclass(frozen=True)
class FrameRecord:
    """A registered image: name, the camera it was taken with, and its pose."""

    frame_id: int
    name: str
    camera_id: int
    pose: CameraPose


@dataclass(frozen=True)
class ReconstructionScene:
    """Immutable evaluation input: cameras, registered frames, and 3D points.

    ``input_frame_total`` counts the frames offered to the reconstructor and
    feeds the throughput metric; it is at least the number of registered frames.
    """

    cameras: Mapping[int, CameraIntrinsics]
    frames: Mapping[int, FrameRecord]
    points: Mapping[int, ScenePoint]
    input_frame_total: int = 0

    def __post_init__(self):
        cameras = MappingProxyType(dict(self.cameras))
        frames = MappingProxyType(dict(self.frames))
        points = MappingProxyType(dict(self.points))
        object.__setattr__(self, "cameras", cameras)
        object.__setattr__(self, "frames", frames)
        object.__setattr__(self, "points", points)
        total = max(int(self.input_frame_total), len(frames))
        object.__setattr__(self, "input_frame_total", total)
        self._validate()

    def _validate(self):
        for fid, frame in self.frames.items():
            if frame.frame_id != fid:
                raise SceneIntegrityError(f"frame map key {fid} != record id {frame.frame_id}")
            if frame.camera_id not in self.cameras:
                raise SceneIntegrityError(
                    f"frame {fid} ({frame.name!r}) references missing camera {frame.camera_id}"
                )
        for pid, point in self.points.items():
            if point.id != pid:
                raise SceneIntegrityError(f"point map key {pid} != point id {point.id}")
            seen = set()
            for obs in point.track:
                if obs.frame_id not in self.frames:
                    raise SceneIntegrityError(
                        f"point {pid} track references unregistered frame {obs.frame_id}"
                    )
                if obs.frame_id in seen:
                    raise SceneIntegrityError(
                        f"point {pid} track references frame {obs.frame_id} twice"
                    )
                seen.add(obs.frame_id)

    def frame_observations(self, frame_id: int):
        """All (point, observation) pairs whose track includes ``frame_id``."""
        if frame_id not in self.frames:
            raise UnknownFrameError(f"unknown frame id {frame_id}")
        out = []
        for point in self.points.values():
            for obs in point.track:
                if obs.frame_id == frame_id:
                    out.append((point, obs))
                    break
        return out


def quat_to_matrix(q) -> np.ndarray:
    """Rotation matrix of a (w,x,y,z) quaternion.

    The input is renormalized so the result is orthonormal to machine
    precision even when the quaternion is only unit within 1e-6.
    """
    w, x, y, z = _normalize_quat(q)
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ],
        dtype=np.float64,
    )


def matrix_to_quat(R) -> Tuple[float, float, float, float]:
    """Unit (w,x,y,z) quaternion of a rotation matrix, canonicalized to w >= 0."""
    R = np.asarray(R, dtype=np.float64)
    if R.shape != (3, 3) or not np.all(np.isfinite(R)):
        raise InvalidInputError("rotation matrix must be a finite 3x3 array")
    # eigenvector method: robust for all rotations, unlike the trace shortcut
    Rxx, Ryx, Rzx, Rxy, Ryy, Rzy, Rxz, Ryz, Rzz = R.flat
    K = np.array(
        [
            [Rxx - Ryy - Rzz, 0, 0, 0],
            [Ryx + Rxy, Ryy - Rxx - Rzz, 0, 0],
            [Rzx + Rxz, Rzy + Ryz, Rzz - Rxx - Ryy, 0],
            [Ryz - Rzy, Rzx - Rxz, Rxy - Ryx, Rxx + Ryy + Rzz],
        ]
    ) / 3.0
    eigvals, eigvecs = np.linalg.eigh(K)
    q = eigvecs[[3, 0, 1, 2], np.argmax(eigvals)]
    if q[0] < 0:
        q = -q
    return tuple(float(v) for v in q)


def world_to_camera(pose: CameraPose, X) -> np.ndarray:
    """Map a world point into the camera frame: R(q) @ X + t."""
    X = np.asarray(X, dtype=np.float64)
    if X.shape != (3,) or not np.all(np.isfinite(X)):
        raise InvalidInputError(f"world point must be a finite 3-vector, got {X!r}")
    return pose.rotation_matrix() @ X + np.asarray(pose.tvec, dtype=np.float64)


def _distort(intr: CameraIntrinsics, xh, yh):
    """Apply the radial model to normalized coordinates (vector-safe)."""
    if not intr.distortion:
        return xh, yh
    r2 = xh * xh + yh * yh
    factor = 1.0 + intr.distortion[0] * r2
    if len(intr.distortion) == 2:
        factor = factor + intr.distortion[1] * r2 * r2
    return xh * factor, yh * factor


def project(intr: CameraIntrinsics, Xc) -> Optional[Tuple[float, float]]:
    """Project a camera-frame point to pixels; None flags a behind-camera point."""
    Xc = np.asarray(Xc, dtype=np.float64)
    if Xc.shape != (3,) or not np.all(np.isfinite(Xc)):
        raise InvalidInputError(f"camera point must be a finite 3-vector, got {Xc!r}")
    if Xc[2] <= 0.0:
        return None
    xh = Xc[0] / Xc[2]
    yh = Xc[1] / Xc[2]
    xd, yd = _distort(intr, xh, yh)
    return (intr.fx * xd + intr.cx, intr.fy * yd + intr.cy)

def project_points(intr: CameraIntrinsics, Xc: np.ndarray):
    """Vectorized projection of (N,3) camera-frame points.

    Returns ``(uv, front)`` where ``uv`` is (N,2) float64 (valid only where
    ``front``) and ``front`` marks points with z > 0.
    """
    Xc = np.asarray(Xc, dtype=np.float64)
    if Xc.ndim != 2 or Xc.shape[1] != 3:
        raise InvalidInputError("expected an (N, 3) array of camera-frame points")
    n = Xc.shape[0]
    front = Xc[:, 2] > 0.0
    uv = np.full((n, 2), np.nan, dtype=np.float64)
    if np.any(front):
        z = Xc[front, 2]
        xh = Xc[front, 0] / z
        yh = Xc[front, 1] / z
        xd, yd = _distort(intr, xh, yh)
        uv[front, 0] = intr.fx * xd + intr.cx
        uv[front, 1] = intr.fy * yd + intr.cy
    return uv, front


def back_project(intr: CameraIntrinsics, uv, depth: float) -> np.ndarray:
    """Invert a distortion-free projection at the given camera-space depth."""
    if intr.distortion:
        raise InvalidInputError("back-projection is only defined for distortion-free models")
    if depth <= 0:
        raise InvalidInputError(f"depth must be positive, got {depth}")
    u, v = float(uv[0]), float(uv[1])
    return np.array(
        [(u - intr.cx) / intr.fx * depth, (v - intr.cy) / intr.fy * depth, depth],
        dtype=np.float64,
    )
