"""Point-cloud reprojection rendering with disk splats and depth priority.

Every point with positive camera-space depth whose (unrounded) projected
center lands inside the image is splatted as a filled disk: pixel (i, j) is
painted iff (i-u)^2 + (j-v)^2 <= radius^2. Where disks overlap, the point with
the smallest camera-space depth wins; exact depth ties go to the smaller point
id, so renders are byte-reproducible regardless of iteration order or worker
count.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Optional, Tuple

import numpy as np
from PIL import Image

from .errors import InvalidInputError, RenderError, UnknownFrameError
from .scene import ReconstructionScene, project_points, quat_to_matrix

__all__ = [
    "RenderedImage",
    "render_reprojection",
    "render_frames",
    "render_all",
    "save_render_png",
    "save_render_sidecar",
]

DEFAULT_SPLAT_RADIUS = 3.0
DEFAULT_BACKGROUND = (0, 0, 0)


@dataclass(frozen=True)
class RenderedImage:
    """RGB raster plus coverage and depth buffers for one reprojected frame."""

    frame_id: int
    pixels: np.ndarray  # (H, W, 3) uint8
    depth: np.ndarray   # (H, W) float64, +inf where uncovered
    splat_radius: float
    background: Tuple[int, int, int]
    points_rendered: int
    points_behind_camera: int

    def __post_init__(self):
        for arr in (self.pixels, self.depth):
            arr.setflags(write=False)

    @property
    def coverage(self) -> np.ndarray:
        return np.isfinite(self.depth)

    @property
    def coverage_fraction(self) -> float:
        return float(np.count_nonzero(self.coverage)) / self.depth.size


class _SceneArrays:
    """Point data gathered once per scene so multi-frame renders share it."""

    def __init__(self, scene: ReconstructionScene):
        n = len(scene.points)
        self.ids = np.empty(n, dtype=np.int64)
        self.positions = np.empty((n, 3), dtype=np.float64)
        self.colors = np.empty((n, 3), dtype=np.uint8)
        for row, pid in enumerate(sorted(scene.points)):
            point = scene.points[pid]
            self.ids[row] = pid
            self.positions[row] = point.position
            self.colors[row] = point.color


def _render_frame(
    scene: ReconstructionScene,
    arrays: _SceneArrays,
    frame_id: int,
    splat_radius: float,
    background: Tuple[int, int, int],
) -> RenderedImage:
    frame = scene.frames[frame_id]
    intr = scene.cameras[frame.camera_id]
    width, height = intr.width, intr.height

    pixels = np.empty((height, width, 3), dtype=np.uint8)
    pixels[:] = np.asarray(background, dtype=np.uint8)
    depth = np.full((height, width), np.inf, dtype=np.float64)
    idbuf = np.full((height, width), np.iinfo(np.int64).max, dtype=np.int64)

    n = len(arrays.ids)
    if n == 0:
        return RenderedImage(frame_id, pixels, depth, splat_radius, tuple(background), 0, 0)

    # explicit per-column transform: fixed left-to-right summation keeps the
    # result bit-identical across BLAS builds and worker counts
    rot = quat_to_matrix(frame.pose.qvec)
    tvec = frame.pose.tvec
    px, py, pz = arrays.positions[:, 0], arrays.positions[:, 1], arrays.positions[:, 2]
    cam = np.empty((n, 3), dtype=np.float64)
    for k in range(3):
        cam[:, k] = px * rot[k, 0] + py * rot[k, 1] + pz * rot[k, 2] + tvec[k]
    uv, front = project_points(intr, cam)
    behind = int(n - np.count_nonzero(front))

    inside = front.copy()
    inside[front] &= (
        (uv[front, 0] >= 0.0)
        & (uv[front, 0] < width)
        & (uv[front, 1] >= 0.0)
        & (uv[front, 1] < height)
    )
    candidates = np.nonzero(inside)[0]
    rendered = int(candidates.size)

    r = float(splat_radius)
    r2 = r * r
    for k in candidates:
        u, v = uv[k, 0], uv[k, 1]
        z = cam[k, 2]
        pid = arrays.ids[k]
        i0 = max(0, int(math.ceil(u - r)))
        i1 = min(width - 1, int(math.floor(u + r)))
        j0 = max(0, int(math.ceil(v - r)))
        j1 = min(height - 1, int(math.floor(v + r)))
        if i0 > i1 or j0 > j1:
            continue
        di = np.arange(i0, i1 + 1, dtype=np.float64) - u
        dj = np.arange(j0, j1 + 1, dtype=np.float64) - v
        mask = (dj[:, None] ** 2 + di[None, :] ** 2) <= r2
        zwin = depth[j0 : j1 + 1, i0 : i1 + 1]
        iwin = idbuf[j0 : j1 + 1, i0 : i1 + 1]
        win = mask & ((z < zwin) | ((z == zwin) & (pid < iwin)))
        if not win.any():
            continue
        zwin[win] = z
        iwin[win] = pid
        pixels[j0 : j1 + 1, i0 : i1 + 1][win] = arrays.colors[k]

    return RenderedImage(
        frame_id, pixels, depth, splat_radius, tuple(background), rendered, behind
    )


def render_reprojection(
    scene: ReconstructionScene,
    frame_id: int,
    splat_radius: float = DEFAULT_SPLAT_RADIUS,
    background: Tuple[int, int, int] = DEFAULT_BACKGROUND,
) -> RenderedImage:
    """Render the scene's points into one registered frame."""
    if frame_id not in scene.frames:
        raise UnknownFrameError(f"unknown frame id {frame_id}")
    if splat_radius < 0:
        raise InvalidInputError(f"splat radius must be >= 0, got {splat_radius}")
    return _render_frame(scene, _SceneArrays(scene), frame_id, splat_radius, background)


def render_frames(
    scene: ReconstructionScene,
    frame_ids=None,
    splat_radius: float = DEFAULT_SPLAT_RADIUS,
    background: Tuple[int, int, int] = DEFAULT_BACKGROUND,
    workers: int = 1,
) -> Dict[int, "RenderedImage | RenderError"]:
    """Error-collecting render over frames; failures map to RenderError values."""
    if splat_radius < 0:
        raise InvalidInputError(f"splat radius must be >= 0, got {splat_radius}")
    arrays = _SceneArrays(scene)
    frame_ids = sorted(scene.frames) if frame_ids is None else list(frame_ids)

    def run(fid: int):
        try:
            if fid not in scene.frames:
                raise UnknownFrameError(f"unknown frame id {fid}")
            return _render_frame(scene, arrays, fid, splat_radius, background)
        except Exception as exc:
            return RenderError(fid, str(exc))

    if workers > 1 and len(frame_ids) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, frame_ids))
    else:
        results = [run(fid) for fid in frame_ids]
    return dict(zip(frame_ids, results))


def render_all(
    scene: ReconstructionScene,
    splat_radius: float = DEFAULT_SPLAT_RADIUS,
    background: Tuple[int, int, int] = DEFAULT_BACKGROUND,
    workers: int = 1,
) -> Dict[int, RenderedImage]:
    """Render every registered frame; output does not depend on worker count."""
    results = render_frames(scene, None, splat_radius, background, workers)
    for result in results.values():
        if isinstance(result, RenderError):
            raise result
    return results


def save_render_png(rendered: RenderedImage, path) -> None:
    Image.fromarray(rendered.pixels, mode="RGB").save(Path(path), format="PNG")


def save_render_sidecar(rendered: RenderedImage, path) -> None:
    """Write the per-render metadata JSON next to the image."""
    doc = {
        "frame_id": rendered.frame_id,
        "splat_radius": rendered.splat_radius,
        "background": list(rendered.background),
        "points_rendered": rendered.points_rendered,
        "points_behind_camera": rendered.points_behind_camera,
        "coverage_fraction": rendered.coverage_fraction,
    }
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
