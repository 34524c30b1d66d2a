"""Bit-exact reader/writer for sparse SfM models (binary and text form).

Directory layout and binary encoding follow the de-facto public sparse model
format, little-endian throughout:

``cameras.bin``
    u64 camera_count, then per camera: u32 camera_id, i32 model_id,
    u64 width, u64 height, f64 x param_count.

``images.bin``
    u64 image_count, then per image: u32 image_id, f64 x 4 quaternion
    (w, x, y, z), f64 x 3 translation, u32 camera_id, null-terminated name,
    u64 num_points2D, then per observation f64 x, f64 y, u64 point3D_id
    (0xFFFFFFFFFFFFFFFF marks an untracked observation).

``points3D.bin``
    u64 point_count, then per point: u64 point3D_id, f64 x 3 xyz, u8 x 3 rgb,
    f64 error, u64 track_length, then per track element u32 image_id,
    u32 point2D_idx.

The text variant (``cameras.txt`` etc.) holds one record per line with
'#'-comment support, fields space-separated in the same order. Image names
containing whitespace are only representable in binary form. Untracked
observations are written as ``-1`` in text (the u64 sentinel is also accepted).

Serialization is canonical: ids ascending everywhere, per-image observations
ordered tracked-by-point-id first then untracked-by-pixel, track elements
ordered by image id. Re-serializing a parsed canonical model is byte-identical.
"""

from __future__ import annotations

import enum
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Tuple

from ..errors import (
    SceneIntegrityError,
    SparseModelError,
    UnsupportedCameraModelError,
)
from ..scene import (
    CameraIntrinsics,
    CameraModel,
    CameraPose,
    FrameRecord,
    Observation,
    ReconstructionScene,
    ScenePoint,
)

__all__ = ["SourceKind", "ModelBundle", "parse_sparse_model", "serialize_sparse_model"]

UNTRACKED = 0xFFFFFFFFFFFFFFFF

_CAMERA_FILES = ("cameras", "images", "points3D")


class SourceKind(enum.Enum):
    SPARSE_SFM = "sparse_sfm"
    GENERIC_DENSE = "generic_dense"


@dataclass(frozen=True)
class ModelBundle:
    """A parsed reconstruction plus producer-reported metadata.

    ``native_reprojection_errors`` carries per-frame error values attributed to
    the producing tool so reports can quote them alongside recomputed ones.
    ``untracked_observations`` preserves per-image 2D detections that have no
    associated 3D point, keeping binary round trips lossless.
    """

    source_kind: SourceKind
    scene: ReconstructionScene
    native_reprojection_errors: Optional[Mapping[int, float]] = None
    untracked_observations: Mapping[int, Tuple[Tuple[float, float], ...]] = field(
        default_factory=dict
    )

    def __post_init__(self):
        if self.native_reprojection_errors is not None:
            errs = dict(self.native_reprojection_errors)
            for fid, val in errs.items():
                if fid not in self.scene.frames:
                    raise SceneIntegrityError(
                        f"native error refers to unregistered frame {fid}"
                    )
                if not val >= 0:
                    raise SceneIntegrityError(f"native error for frame {fid} is negative")
            object.__setattr__(self, "native_reprojection_errors", errs)
        extra = {
            int(fid): tuple((float(x), float(y)) for x, y in obs)
            for fid, obs in dict(self.untracked_observations).items()
        }
        for fid in extra:
            if fid not in self.scene.frames:
                raise SceneIntegrityError(
                    f"untracked observations refer to unregistered frame {fid}"
                )
        object.__setattr__(self, "untracked_observations", extra)


class _BinaryReader:
    """Sequential little-endian reader that reports byte offsets on truncation."""

    def __init__(self, path: Path):
        self.path = path
        self.data = path.read_bytes()
        self.offset = 0

    def read(self, fmt: str) -> tuple:
        size = struct.calcsize("<" + fmt)
        if self.offset + size > len(self.data):
            raise SparseModelError(
                f"{self.path}: truncated at byte offset {self.offset} "
                f"(needed {size} more bytes)"
            )
        values = struct.unpack_from("<" + fmt, self.data, self.offset)
        self.offset += size
        return values

    def read_cstring(self) -> str:
        end = self.data.find(b"\x00", self.offset)
        if end < 0:
            raise SparseModelError(
                f"{self.path}: unterminated string at byte offset {self.offset}"
            )
        raw = self.data[self.offset : end]
        self.offset = end + 1
        return raw.decode("utf-8")

    def expect_eof(self):
        if self.offset != len(self.data):
            raise SparseModelError(
                f"{self.path}: {len(self.data) - self.offset} trailing bytes "
                f"after record data (offset {self.offset})"
            )


def _camera_model_from_id(model_id: int) -> CameraModel:
    try:
        return CameraModel(model_id)
    except ValueError:
        raise UnsupportedCameraModelError(model_id) from None


def _read_cameras_binary(path: Path) -> Dict[int, CameraIntrinsics]:
    reader = _BinaryReader(path)
    (count,) = reader.read("Q")
    cameras: Dict[int, CameraIntrinsics] = {}
    for _ in range(count):
        camera_id, model_id, width, height = reader.read("IiQQ")
        model = _camera_model_from_id(model_id)
        params = reader.read(f"{model.param_count}d")
        cameras[camera_id] = CameraIntrinsics.from_params(model, width, height, params)
    reader.expect_eof()
    return cameras


# raw per-image observation: (x, y, point3D_id or None)
_RawObs = Tuple[float, float, Optional[int]]


def _read_images_binary(path: Path):
    reader = _BinaryReader(path)
    (count,) = reader.read("Q")
    frames: Dict[int, FrameRecord] = {}
    image_obs: Dict[int, List[_RawObs]] = {}
    for _ in range(count):
        (image_id,) = reader.read("I")
        qvec = reader.read("4d")
        tvec = reader.read("3d")
        (camera_id,) = reader.read("I")
        name = reader.read_cstring()
        (num_points,) = reader.read("Q")
        obs: List[_RawObs] = []
        for _ in range(num_points):
            x, y, pid = reader.read("ddQ")
            obs.append((x, y, None if pid == UNTRACKED else pid))
        if image_id in frames:
            raise SparseModelError(f"{path}: duplicate image id {image_id}")
        frames[image_id] = FrameRecord(image_id, name, camera_id, CameraPose(qvec, tvec))
        image_obs[image_id] = obs
    reader.expect_eof()
    return frames, image_obs


_RawPoint = Tuple[Tuple[float, float, float], Tuple[int, int, int], float, List[Tuple[int, int]]]


def _read_points_binary(path: Path) -> Dict[int, _RawPoint]:
    reader = _BinaryReader(path)
    (count,) = reader.read("Q")
    points: Dict[int, _RawPoint] = {}
    for _ in range(count):
        (point_id,) = reader.read("Q")
        xyz = reader.read("3d")
        rgb = reader.read("3B")
        (error,) = reader.read("d")
        (track_len,) = reader.read("Q")
        track = [reader.read("II") for _ in range(track_len)]
        if point_id in points:
            raise SparseModelError(f"{path}: duplicate point id {point_id}")
        points[point_id] = (xyz, rgb, error, track)
    reader.expect_eof()
    return points


def _strip_comment_lines(path: Path) -> List[Tuple[int, List[str]]]:
    rows = []
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        rows.append((lineno, line.split()))
    return rows


def _text_error(path: Path, lineno: int, msg: str) -> SparseModelError:
    return SparseModelError(f"{path}:{lineno}: {msg}")


def _parse_model_token(path: Path, lineno: int, token: str) -> CameraModel:
    try:
        return _camera_model_from_id(int(token))
    except ValueError:
        pass
    try:
        return CameraModel.from_name(token)
    except Exception:
        raise _text_error(path, lineno, f"unknown camera model {token!r}") from None


def _read_cameras_text(path: Path) -> Dict[int, CameraIntrinsics]:
    cameras: Dict[int, CameraIntrinsics] = {}
    for lineno, tokens in _strip_comment_lines(path):
        if len(tokens) < 4:
            raise _text_error(path, lineno, "camera record needs at least 4 fields")
        camera_id = int(tokens[0])
        model = _parse_model_token(path, lineno, tokens[1])
        width, height = int(tokens[2]), int(tokens[3])
        params = [float(t) for t in tokens[4:]]
        if len(params) != model.param_count:
            raise _text_error(
                path, lineno,
                f"{model.name} expects {model.param_count} params, got {len(params)}",
            )
        cameras[camera_id] = CameraIntrinsics.from_params(model, width, height, params)
    return cameras


def _parse_pid_token(token: str) -> Optional[int]:
    value = int(token)
    if value == -1 or value == UNTRACKED:
        return None
    if value < 0:
        raise ValueError(f"bad point id {value}")
    return value


def _read_images_text(path: Path):
    frames: Dict[int, FrameRecord] = {}
    image_obs: Dict[int, List[_RawObs]] = {}
    for lineno, tokens in _strip_comment_lines(path):
        if len(tokens) < 11:
            raise _text_error(path, lineno, "image record needs at least 11 fields")
        image_id = int(tokens[0])
        qvec = tuple(float(t) for t in tokens[1:5])
        tvec = tuple(float(t) for t in tokens[5:8])
        camera_id = int(tokens[8])
        name = tokens[9]
        num_points = int(tokens[10])
        rest = tokens[11:]
        if len(rest) != 3 * num_points:
            raise _text_error(
                path, lineno,
                f"expected {3 * num_points} observation fields, got {len(rest)}",
            )
        obs: List[_RawObs] = []
        for k in range(num_points):
            x, y = float(rest[3 * k]), float(rest[3 * k + 1])
            try:
                pid = _parse_pid_token(rest[3 * k + 2])
            except ValueError as exc:
                raise _text_error(path, lineno, str(exc)) from None
            obs.append((x, y, pid))
        if image_id in frames:
            raise _text_error(path, lineno, f"duplicate image id {image_id}")
        frames[image_id] = FrameRecord(image_id, name, camera_id, CameraPose(qvec, tvec))
        image_obs[image_id] = obs
    return frames, image_obs


def _read_points_text(path: Path) -> Dict[int, _RawPoint]:
    points: Dict[int, _RawPoint] = {}
    for lineno, tokens in _strip_comment_lines(path):
        if len(tokens) < 9:
            raise _text_error(path, lineno, "point record needs at least 9 fields")
        point_id = int(tokens[0])
        xyz = tuple(float(t) for t in tokens[1:4])
        rgb = tuple(int(t) for t in tokens[4:7])
        error = float(tokens[7])
        track_len = int(tokens[8])
        rest = tokens[9:]
        if len(rest) != 2 * track_len:
            raise _text_error(
                path, lineno, f"expected {2 * track_len} track fields, got {len(rest)}"
            )
        track = [(int(rest[2 * k]), int(rest[2 * k + 1])) for k in range(track_len)]
        if point_id in points:
            raise _text_error(path, lineno, f"duplicate point id {point_id}")
        points[point_id] = (xyz, rgb, error, track)
    return points


def _assemble_bundle(
    cameras: Dict[int, CameraIntrinsics],
    frames: Dict[int, FrameRecord],
    image_obs: Dict[int, List[_RawObs]],
    raw_points: Dict[int, _RawPoint],
    input_frame_total: int = 0,
) -> ModelBundle:
    # cross-link point tracks against per-image observation arrays
    used: Dict[Tuple[int, int], int] = {}
    points: Dict[int, ScenePoint] = {}
    for pid, (xyz, rgb, error, raw_track) in raw_points.items():
        track: List[Observation] = []
        seen_frames = set()
        for image_id, idx in raw_track:
            if image_id not in frames:
                raise SceneIntegrityError(
                    f"point {pid} track references missing image {image_id}"
                )
            obs_list = image_obs[image_id]
            if idx >= len(obs_list):
                raise SceneIntegrityError(
                    f"point {pid} track references observation {idx} of image "
                    f"{image_id}, which has only {len(obs_list)}"
                )
            x, y, obs_pid = obs_list[idx]
            if obs_pid != pid:
                raise SceneIntegrityError(
                    f"point {pid} track points at image {image_id} observation {idx}, "
                    f"but that observation is tagged with point {obs_pid}"
                )
            if image_id in seen_frames:
                raise SceneIntegrityError(
                    f"point {pid} track references image {image_id} twice"
                )
            seen_frames.add(image_id)
            used[(image_id, idx)] = pid
            track.append(Observation(image_id, (x, y)))
        points[pid] = ScenePoint(pid, xyz, rgb, error, tuple(track))

    untracked: Dict[int, Tuple[Tuple[float, float], ...]] = {}
    for image_id, obs_list in image_obs.items():
        loose = []
        for idx, (x, y, obs_pid) in enumerate(obs_list):
            if obs_pid is None:
                loose.append((x, y))
            elif used.get((image_id, idx)) != obs_pid:
                if obs_pid not in raw_points:
                    raise SceneIntegrityError(
                        f"image {image_id} observation {idx} references missing "
                        f"point {obs_pid}"
                    )
                raise SceneIntegrityError(
                    f"image {image_id} observation {idx} claims point {obs_pid}, "
                    f"but that point's track does not reference it back"
                )
        if loose:
            untracked[image_id] = tuple(loose)

    scene = ReconstructionScene(cameras, frames, points, input_frame_total)
    native = _native_frame_errors(scene)
    return ModelBundle(SourceKind.SPARSE_SFM, scene, native, untracked)


def _native_frame_errors(scene: ReconstructionScene) -> Optional[Dict[int, float]]:
    """Per-frame mean of producer-reported point errors (negative = unreported)."""
    sums: Dict[int, float] = {}
    counts: Dict[int, int] = {}
    for point in scene.points.values():
        if point.error < 0:
            continue
        for obs in point.track:
            sums[obs.frame_id] = sums.get(obs.frame_id, 0.0) + point.error
            counts[obs.frame_id] = counts.get(obs.frame_id, 0) + 1
    if not sums:
        return None
    return {fid: sums[fid] / counts[fid] for fid in sums}


def _locate_model_files(directory: Path):
    directory = Path(directory)
    for ext in (".bin", ".txt"):
        paths = [directory / (stem + ext) for stem in _CAMERA_FILES]
        if all(p.is_file() for p in paths):
            return ext, paths
    raise SparseModelError(
        f"{directory}: expected cameras/images/points3D as .bin or .txt "
        f"(found: {sorted(p.name for p in directory.glob('*')) if directory.is_dir() else 'no such directory'})"
    )


def parse_sparse_model(directory) -> ModelBundle:
    """Parse a sparse model directory (binary or text) into a ModelBundle."""
    ext, (cameras_path, images_path, points_path) = _locate_model_files(Path(directory))
    if ext == ".bin":
        cameras = _read_cameras_binary(cameras_path)
        frames, image_obs = _read_images_binary(images_path)
        raw_points = _read_points_binary(points_path)
    else:
        cameras = _read_cameras_text(cameras_path)
        frames, image_obs = _read_images_text(images_path)
        raw_points = _read_points_text(points_path)
    return _assemble_bundle(cameras, frames, image_obs, raw_points)


def _canonical_image_observations(bundle: ModelBundle):
    """Rebuild per-image observation arrays in canonical order.

    Tracked observations come first, ordered by point id; untracked ones follow,
    ordered by pixel. Returns (per-image obs lists, (image_id, point_id) -> idx).
    """
    scene = bundle.scene
    per_image: Dict[int, List[_RawObs]] = {fid: [] for fid in scene.frames}
    index_of: Dict[Tuple[int, int], int] = {}
    for pid in sorted(scene.points):
        for obs in scene.points[pid].track:
            lst = per_image[obs.frame_id]
            index_of[(obs.frame_id, pid)] = len(lst)
            lst.append((obs.pixel[0], obs.pixel[1], pid))
    for fid, loose in bundle.untracked_observations.items():
        for x, y in sorted(loose):
            per_image[fid].append((x, y, None))
    return per_image, index_of


def _write_cameras_binary(scene: ReconstructionScene, path: Path):
    chunks = [struct.pack("<Q", len(scene.cameras))]
    for cid in sorted(scene.cameras):
        intr = scene.cameras[cid]
        chunks.append(
            struct.pack("<IiQQ", cid, int(intr.model), intr.width, intr.height)
        )
        chunks.append(struct.pack(f"<{len(intr.params)}d", *intr.params))
    path.write_bytes(b"".join(chunks))


def _write_images_binary(scene, per_image, path: Path):
    chunks = [struct.pack("<Q", len(scene.frames))]
    for fid in sorted(scene.frames):
        frame = scene.frames[fid]
        chunks.append(struct.pack("<I", fid))
        chunks.append(struct.pack("<4d", *frame.pose.qvec))
        chunks.append(struct.pack("<3d", *frame.pose.tvec))
        chunks.append(struct.pack("<I", frame.camera_id))
        chunks.append(frame.name.encode("utf-8") + b"\x00")
        obs = per_image[fid]
        chunks.append(struct.pack("<Q", len(obs)))
        for x, y, pid in obs:
            chunks.append(struct.pack("<ddQ", x, y, UNTRACKED if pid is None else pid))
    path.write_bytes(b"".join(chunks))


def _write_points_binary(scene, index_of, path: Path):
    chunks = [struct.pack("<Q", len(scene.points))]
    for pid in sorted(scene.points):
        point = scene.points[pid]
        chunks.append(struct.pack("<Q", pid))
        chunks.append(struct.pack("<3d", *point.position))
        chunks.append(struct.pack("<3B", *point.color))
        chunks.append(struct.pack("<d", point.error))
        track = sorted(point.track, key=lambda o: o.frame_id)
        chunks.append(struct.pack("<Q", len(track)))
        for obs in track:
            chunks.append(struct.pack("<II", obs.frame_id, index_of[(obs.frame_id, pid)]))
    path.write_bytes(b"".join(chunks))


def _fmt_float(value: float) -> str:
    return repr(float(value))


def _write_cameras_text(scene, path: Path):
    lines = ["# camera_id model_id width height params..."]
    for cid in sorted(scene.cameras):
        intr = scene.cameras[cid]
        fields = [str(cid), str(int(intr.model)), str(intr.width), str(intr.height)]
        fields += [_fmt_float(p) for p in intr.params]
        lines.append(" ".join(fields))
    path.write_text("\n".join(lines) + "\n")


def _write_images_text(scene, per_image, path: Path):
    lines = ["# image_id qw qx qy qz tx ty tz camera_id name num_points2d (x y point3d_id)..."]
    for fid in sorted(scene.frames):
        frame = scene.frames[fid]
        if any(ch.isspace() for ch in frame.name):
            raise SparseModelError(
                f"image name {frame.name!r} contains whitespace; "
                f"text form cannot represent it (serialize as binary)"
            )
        fields = [str(fid)]
        fields += [_fmt_float(v) for v in frame.pose.qvec]
        fields += [_fmt_float(v) for v in frame.pose.tvec]
        fields += [str(frame.camera_id), frame.name]
        obs = per_image[fid]
        fields.append(str(len(obs)))
        for x, y, pid in obs:
            fields += [_fmt_float(x), _fmt_float(y), "-1" if pid is None else str(pid)]
        lines.append(" ".join(fields))
    path.write_text("\n".join(lines) + "\n")


def _write_points_text(scene, index_of, path: Path):
    lines = ["# point3d_id x y z r g b error track_length (image_id point2d_idx)..."]
    for pid in sorted(scene.points):
        point = scene.points[pid]
        fields = [str(pid)]
        fields += [_fmt_float(v) for v in point.position]
        fields += [str(c) for c in point.color]
        fields.append(_fmt_float(point.error))
        track = sorted(point.track, key=lambda o: o.frame_id)
        fields.append(str(len(track)))
        for obs in track:
            fields += [str(obs.frame_id), str(index_of[(obs.frame_id, pid)])]
        lines.append(" ".join(fields))
    path.write_text("\n".join(lines) + "\n")


def serialize_sparse_model(bundle: ModelBundle, directory, text: bool = False) -> None:
    """Write a bundle as a sparse model directory in canonical ascending-id order."""
    directory = Path(directory)
    try:
        directory.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise SparseModelError(f"cannot create model directory {directory}: {exc}") from exc
    per_image, index_of = _canonical_image_observations(bundle)
    scene = bundle.scene
    try:
        if text:
            _write_cameras_text(scene, directory / "cameras.txt")
            _write_images_text(scene, per_image, directory / "images.txt")
            _write_points_text(scene, index_of, directory / "points3D.txt")
        else:
            _write_cameras_binary(scene, directory / "cameras.bin")
            _write_images_binary(scene, per_image, directory / "images.bin")
            _write_points_binary(scene, index_of, directory / "points3D.bin")
    except OSError as exc:
        raise SparseModelError(f"cannot write model files under {directory}: {exc}") from exc
