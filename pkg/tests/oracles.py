"""Independent reference implementations used to check the package.

Everything here is written from the math down (hand-expanded quaternion
rotation, explicit pinhole + radial projection, exhaustive per-pixel scans)
and deliberately shares no code with the rendering / reprojection paths it
verifies.
"""

import math

import numpy as np


def quat_matrix_ref(qvec):
    """The standard (w,x,y,z) quaternion rotation matrix, written out by hand.

    Parenthesization matches the documented projection convention so reference
    depths are bit-comparable with the implementation under test.
    """
    w, x, y, z = qvec
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


def project_ref(intr, pose_qvec, pose_tvec, X_world):
    """World point -> (u, v, depth); u/v are None when the point is behind.

    Left-to-right summation throughout, mirroring the documented convention.
    """
    m = quat_matrix_ref(pose_qvec)
    px, py, pz = float(X_world[0]), float(X_world[1]), float(X_world[2])
    Xc = [m[k, 0] * px + m[k, 1] * py + m[k, 2] * pz + pose_tvec[k] for k in range(3)]
    if Xc[2] <= 0:
        return None, None, Xc[2]
    xh, yh = Xc[0] / Xc[2], Xc[1] / Xc[2]
    ks = list(intr.distortion)
    factor = 1.0
    if ks:
        r2 = xh * xh + yh * yh
        factor = 1.0 + ks[0] * r2
        if len(ks) >= 2:
            factor = factor + ks[1] * r2 * r2
    xd, yd = xh * factor, yh * factor
    u = intr.fx * xd + intr.cx
    v = intr.fy * yd + intr.cy
    return u, v, Xc[2]


def frame_error_ref(scene, frame_id):
    """Mean reprojection error of one frame via direct per-observation recompute."""
    frame = scene.frames[frame_id]
    intr = scene.cameras[frame.camera_id]
    errors = []
    for point in scene.points.values():
        for obs in point.track:
            if obs.frame_id != frame_id:
                continue
            u, v, _ = project_ref(intr, frame.pose.qvec, frame.pose.tvec, point.position)
            if u is None:
                continue
            errors.append(math.hypot(obs.pixel[0] - u, obs.pixel[1] - v))
    if not errors:
        return None
    return sum(errors) / len(errors)


def disk_lattice_pixels(center_u, center_v, radius, width, height):
    """All lattice pixels (i, j) with (i-u)^2 + (j-v)^2 <= r^2, clipped to the image."""
    pixels = set()
    for j in range(height):
        for i in range(width):
            if (i - center_u) ** 2 + (j - center_v) ** 2 <= radius * radius:
                pixels.add((i, j))
    return pixels


def brute_force_render(scene, frame_id, splat_radius, background):
    """Exhaustive per-pixel nearest-depth scan over every point.

    Every pixel is tested against every participating point (positive depth,
    projected center inside the image); the smallest depth wins and exact depth
    ties go to the smaller point id. Returns (pixels, depth) arrays.
    """
    frame = scene.frames[frame_id]
    intr = scene.cameras[frame.camera_id]
    width, height = intr.width, intr.height
    img = np.empty((height, width, 3), dtype=np.uint8)
    img[:] = np.asarray(background, dtype=np.uint8)
    depth = np.full((height, width), np.inf)
    ii = np.arange(width, dtype=np.float64)[None, :]
    jj = np.arange(height, dtype=np.float64)[:, None]
    r2 = float(splat_radius) * float(splat_radius)

    for pid in sorted(scene.points):
        point = scene.points[pid]
        u, v, z = project_ref(intr, frame.pose.qvec, frame.pose.tvec, point.position)
        if u is None:
            continue
        if not (0.0 <= u < width and 0.0 <= v < height):
            continue
        covers = (ii - u) ** 2 + (jj - v) ** 2 <= r2
        # ascending pid order makes a strict depth test implement the tie rule
        better = covers & (z < depth)
        depth[better] = z
        img[better] = point.color
    return img, depth
