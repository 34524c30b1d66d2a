"""Command line interface orchestrating the evaluation pipeline.

Subcommands: extract-frames, preprocess, evaluate, synth, report. Exit codes:
0 success, 2 input error, 3 stage failure (per-frame or per-module failures,
itemized in the machine-readable error log).

Options resolve as flags > config file > defaults. The config file is a flat
``key = value`` text file ('#' starts a comment); keys are the long flag names
with dashes replaced by underscores. The effective configuration is echoed
into every output directory. An output directory is owned by a single run at
a time (lockfile).
"""

from __future__ import annotations

import argparse
import json
import os
import shutil
import sys
from dataclasses import replace
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from PIL import Image

from . import __version__
from .errors import ReconEvalError
from .io.dense import parse_generic_dense, save_generic_poses
from .io.manifest import DatasetManifest, ManifestEntry, load_manifest, save_manifest
from .io.ply import write_ply
from .io.sparse import ModelBundle, parse_sparse_model, serialize_sparse_model
from .metrics import (
    FeatureStore,
    difps_for_scene,
    image_throughput,
    ingest_lpips,
    point_count_per_image,
)
from .preprocess import (
    DEFAULT_CONTRAST_ALPHA,
    MaskedFrame,
    Region,
    colmap_filter,
    contrast_adjust,
    load_region_masks,
    white_balance,
)
from .render import DEFAULT_SPLAT_RADIUS, RenderError, render_frames, save_render_png, save_render_sidecar
from .report import VideoMetrics, build_report, load_report_rows, write_report_bundle
from .reproject import mean_reprojection_error, scene_reprojection_errors
from .scene import CameraModel
from .synth import SynthSpec, generate_bundle

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_STAGE = 3

_IMAGE_EXTS = (".png", ".jpg", ".jpeg", ".bmp", ".tif", ".tiff")
_LOCK_NAME = ".reconeval.lock"


class CliInputError(ReconEvalError):
    """Bad command usage or unreadable inputs (exit code 2)."""


# ---------------------------------------------------------------------------
# config file + option resolution


def load_config_file(path) -> Dict[str, str]:
    values: Dict[str, str] = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise CliInputError(f"cannot read config file {path}: {exc}") from exc
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise CliInputError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
        key, value = line.split("=", 1)
        values[key.strip()] = value.strip()
    return values


class Options:
    """Flag > config > default resolution with type coercion."""

    def __init__(self, args: argparse.Namespace):
        self.args = args
        self.config = load_config_file(args.config) if getattr(args, "config", None) else {}
        self.effective: Dict[str, object] = {}

    def get(self, name: str, default=None, cast=None):
        value = getattr(self.args, name, None)
        if value is None and name in self.config:
            raw = self.config[name]
            if cast is bool:
                value = raw.lower() in ("1", "true", "yes", "on")
            elif cast is not None:
                try:
                    value = cast(raw)
                except ValueError as exc:
                    raise CliInputError(f"config key {name}: {exc}") from exc
            else:
                value = raw
        if value is None:
            value = default
        self.effective[name] = value
        return value

    def echo(self, out_dir: Path):
        doc = {k: _jsonable(v) for k, v in sorted(self.effective.items())}
        doc["version"] = __version__
        (out_dir / "effective_config.json").write_text(
            json.dumps(doc, indent=2, sort_keys=True) + "\n"
        )


def _jsonable(value):
    if isinstance(value, Path):
        return str(value)
    if isinstance(value, tuple):
        return list(value)
    return value


class OutputLock:
    """Exclusive ownership of an output directory for the duration of a run."""

    def __init__(self, out_dir: Path):
        self.path = out_dir / _LOCK_NAME
        self.fd: Optional[int] = None

    def __enter__(self):
        self.path.parent.mkdir(parents=True, exist_ok=True)
        try:
            self.fd = os.open(self.path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
        except FileExistsError:
            raise CliInputError(
                f"output directory {self.path.parent} is locked by another run "
                f"(remove {self.path} if that run is dead)"
            ) from None
        os.write(self.fd, str(os.getpid()).encode())
        return self

    def __exit__(self, *exc_info):
        if self.fd is not None:
            os.close(self.fd)
            self.path.unlink(missing_ok=True)
        return False


# ---------------------------------------------------------------------------
# shared helpers


def _parse_background(text: str) -> Tuple[int, int, int]:
    try:
        parts = [int(p) for p in text.split(",")]
        if len(parts) != 3 or not all(0 <= p <= 255 for p in parts):
            raise ValueError
        return tuple(parts)
    except ValueError:
        raise CliInputError(f"background must be 'R,G,B' with 0-255 values, got {text!r}") from None


def _parse_offset(text: str) -> Tuple[float, float]:
    try:
        dx, dy = (float(p) for p in text.split(","))
        return (dx, dy)
    except ValueError:
        raise CliInputError(f"offset must be 'dx,dy', got {text!r}") from None


def _parse_ranges(specs: Sequence[str]) -> List[Tuple[int, int]]:
    ranges = []
    for spec in specs:
        try:
            lo, hi = spec.split(":")
            lo_i, hi_i = int(lo), int(hi)
            if hi_i < lo_i:
                raise ValueError
            ranges.append((lo_i, hi_i))
        except ValueError:
            raise CliInputError(f"exclusion range must be 'start:stop', got {spec!r}") from None
    return ranges


def _list_image_files(directory: Path) -> List[Path]:
    if not directory.is_dir():
        raise CliInputError(f"not a directory: {directory}")
    files = sorted(
        p for p in directory.iterdir() if p.suffix.lower() in _IMAGE_EXTS and p.is_file()
    )
    if not files:
        raise CliInputError(f"no image files found in {directory}")
    return files


def _load_image(path: Path) -> np.ndarray:
    try:
        with Image.open(path) as img:
            return np.asarray(img.convert("RGB"))
    except OSError as exc:
        raise CliInputError(f"cannot read image {path}: {exc}") from exc


def _save_image(array: np.ndarray, path: Path) -> None:
    Image.fromarray(array, mode="RGB").save(path, format="PNG")


def _load_bundle(opts: Options) -> ModelBundle:
    model_dir = opts.get("model_dir")
    ply = opts.get("ply")
    poses = opts.get("poses")
    if model_dir and (ply or poses):
        raise CliInputError("pass either --model-dir or --ply/--poses, not both")
    if model_dir:
        return parse_sparse_model(model_dir)
    if ply and poses:
        return parse_generic_dense(ply, poses)
    raise CliInputError("a model is required: --model-dir DIR, or --ply FILE with --poses FILE")


# ---------------------------------------------------------------------------
# extract-frames


def cmd_extract_frames(args: argparse.Namespace) -> int:
    opts = Options(args)
    out_dir = Path(opts.get("out"))
    stride = opts.get("stride", 1, int)
    if stride < 1:
        raise CliInputError(f"stride must be >= 1, got {stride}")
    excludes = _parse_ranges(args.exclude or [])
    source = Path(args.input)
    video_id = opts.get("video_id", source.stem)

    def excluded(idx: int) -> bool:
        return any(lo <= idx < hi for lo, hi in excludes)

    with OutputLock(out_dir):
        frames_dir = out_dir / "frames"
        frames_dir.mkdir(parents=True, exist_ok=True)
        entries: List[ManifestEntry] = []

        if source.is_dir():
            files = _list_image_files(source)
            for idx, path in enumerate(files):
                if idx % stride != 0:
                    continue
                keep = not excluded(idx)
                entries.append(ManifestEntry(idx, path.name, keep))
                if keep:
                    shutil.copyfile(path, frames_dir / path.name)
        else:
            for idx, frame in _iter_video_frames(source):
                if idx % stride != 0:
                    continue
                keep = not excluded(idx)
                name = f"frame_{idx:06d}.png"
                entries.append(ManifestEntry(idx, name, keep))
                if keep:
                    _save_image(frame, frames_dir / name)

        manifest = DatasetManifest(video_id, stride, tuple(entries))
        save_manifest(manifest, out_dir / "manifest.json")
        opts.echo(out_dir)
        print(f"saved {manifest.included_count} of {len(entries)} frames to {frames_dir}")
    return EXIT_OK


def _iter_video_frames(path: Path):
    """Decode a video lazily; requires the optional OpenCV backend."""
    if not path.is_file():
        raise CliInputError(f"no such video file or frame directory: {path}")
    try:
        import cv2
    except ImportError:
        raise CliInputError(
            "video decoding needs the optional 'video' extra (opencv); "
            "pre-extracted frame directories work without it"
        ) from None
    capture = cv2.VideoCapture(str(path))
    if not capture.isOpened():
        raise CliInputError(f"cannot open video {path}")
    idx = 0
    try:
        while True:
            ok, frame = capture.read()
            if not ok:
                break
            yield idx, frame[:, :, ::-1]  # BGR -> RGB
            idx += 1
    finally:
        capture.release()


# ---------------------------------------------------------------------------
# preprocess


def cmd_preprocess(args: argparse.Namespace) -> int:
    opts = Options(args)
    method = args.method
    out_dir = Path(opts.get("out"))
    frames_dir = Path(opts.get("frames"))
    manifest_path = opts.get("manifest")
    manifest = load_manifest(manifest_path) if manifest_path else None

    with OutputLock(out_dir):
        out_frames = out_dir / "frames"
        out_frames.mkdir(parents=True, exist_ok=True)
        if method == "colmap-filter":
            log = _preprocess_colmap_filter(opts, frames_dir, manifest, out_dir, out_frames)
        elif method == "contrast":
            log = _preprocess_contrast(opts, frames_dir, manifest, out_dir, out_frames)
        elif method in ("wb-sky", "wb-water"):
            region = Region.SKY if method == "wb-sky" else Region.WATER
            log = _preprocess_white_balance(opts, frames_dir, manifest, region, out_dir, out_frames)
        else:  # pragma: no cover - argparse restricts choices
            raise CliInputError(f"unknown method {method!r}")
        log["method"] = method
        (out_dir / "processing_log.json").write_text(
            json.dumps(log, indent=2, sort_keys=True) + "\n"
        )
        opts.echo(out_dir)
    return EXIT_OK


def _selected_frames(frames_dir: Path, manifest: Optional[DatasetManifest]) -> List[Path]:
    if manifest is None:
        return _list_image_files(frames_dir)
    paths = []
    for name in manifest.included_names():
        path = frames_dir / name
        if not path.is_file():
            raise CliInputError(f"manifest names {name!r} but {path} does not exist")
        paths.append(path)
    if not paths:
        raise CliInputError("manifest has no included frames")
    return paths


def _preprocess_colmap_filter(opts, frames_dir, manifest, out_dir, out_frames):
    model_dir = opts.get("model_dir")
    if manifest is None or model_dir is None:
        raise CliInputError("colmap-filter needs both --manifest and --model-dir")
    bundle = parse_sparse_model(model_dir)
    filtered = colmap_filter(manifest, bundle)
    save_manifest(filtered, out_dir / "manifest.json")
    for name in filtered.included_names():
        src = frames_dir / name
        if not src.is_file():
            raise CliInputError(f"registered frame {name!r} not found under {frames_dir}")
        shutil.copyfile(src, out_frames / name)
    registered = {f.name for f in bundle.scene.frames.values()}
    manifest_names = {e.name for e in manifest.frames}
    return {
        "included": filtered.included_count,
        "excluded": len(filtered.frames) - filtered.included_count,
        "unknown_registered_names": sorted(registered - manifest_names),
        "discarded": [e.name for e in filtered.frames if not e.included],
    }


def _renamed_manifest(manifest: DatasetManifest, processed: set) -> DatasetManifest:
    """Processed frames are written as PNG; rename surviving entries to match."""
    entries = []
    for e in manifest.frames:
        if e.included and e.name in processed:
            entries.append(replace(e, name=Path(e.name).stem + ".png"))
        else:
            entries.append(replace(e, included=False))
    return DatasetManifest(manifest.video_id, manifest.sampling_stride, tuple(entries))


def _preprocess_contrast(opts, frames_dir, manifest, out_dir, out_frames):
    alpha = opts.get("alpha", DEFAULT_CONTRAST_ALPHA, float)
    names = []
    for path in _selected_frames(frames_dir, manifest):
        image = _load_image(path)
        _save_image(contrast_adjust(image, alpha), out_frames / (path.stem + ".png"))
        names.append(path.name)
    if manifest is not None:
        save_manifest(_renamed_manifest(manifest, set(names)), out_dir / "manifest.json")
    return {"alpha": alpha, "frames": names, "discarded": []}


def _preprocess_white_balance(opts, frames_dir, manifest, region, out_dir, out_frames):
    masks_path = opts.get("masks")
    if masks_path is None:
        raise CliInputError(f"wb-{region.value} needs --masks MASK_MANIFEST")
    masks = load_region_masks(masks_path, region)
    frames = []
    for path in _selected_frames(frames_dir, manifest):
        frames.append(MaskedFrame(path.name, _load_image(path), masks.get(path.name)))
    result = white_balance(frames, region)
    for name, image in result.images.items():
        _save_image(image, out_frames / (Path(name).stem + ".png"))
    if manifest is not None:
        save_manifest(_renamed_manifest(manifest, set(result.images)), out_dir / "manifest.json")
    return {
        "region": region.value,
        "target_means": list(result.target_means),
        "frames": [
            {
                "name": name,
                "scales": list(result.scales[name]),
                "region_means": list(result.frame_means[name]),
            }
            for name in result.images
        ],
        "discarded": list(result.discarded),
    }


# ---------------------------------------------------------------------------
# evaluate


def cmd_evaluate(args: argparse.Namespace) -> int:
    opts = Options(args)
    out_dir = Path(opts.get("out"))
    splat_radius = opts.get("splat_radius", DEFAULT_SPLAT_RADIUS, float)
    background = _parse_background(opts.get("background", "0,0,0"))
    workers = args.workers or 1
    video_id = opts.get("video_id", "video")
    frames_dir = opts.get("frames")
    manifest_path = opts.get("manifest")
    skip_difps = bool(opts.get("skip_difps", False, bool))
    skip_lpips = bool(opts.get("skip_lpips", False, bool))

    errors: List[dict] = []

    def stage_error(stage: str, message: str, frame_id=None, frame=None):
        errors.append(
            {"stage": stage, "frame_id": frame_id, "frame": frame, "error": message}
        )

    with OutputLock(out_dir):
        out_dir.mkdir(parents=True, exist_ok=True)
        opts.echo(out_dir)
        bundle = _load_bundle(opts)
        scene = bundle.scene
        manifest = load_manifest(manifest_path) if manifest_path else None

        # renders
        renders_dir = out_dir / "renders"
        renders_dir.mkdir(parents=True, exist_ok=True)
        results = render_frames(
            scene, None, splat_radius=splat_radius, background=background, workers=workers
        )
        rendered = {}
        for fid in sorted(results):
            frame = scene.frames[fid]
            result = results[fid]
            if isinstance(result, RenderError):
                stage_error("render", str(result), fid, frame.name)
                continue
            save_render_png(result, renders_dir / frame.name)
            save_render_sidecar(result, renders_dir / (frame.name + ".json"))
            rendered[fid] = result

        # geometric metrics
        recomputed = scene_reprojection_errors(scene)
        native = dict(bundle.native_reprojection_errors or {})
        video_recomputed = mean_reprojection_error(scene)
        video_native = (sum(native.values()) / len(native)) if native else None

        offered = manifest.included_count if manifest else scene.input_frame_total
        throughput = None
        try:
            throughput = image_throughput(len(scene.frames), offered)
        except ReconEvalError as exc:
            stage_error("metrics", f"throughput: {exc}")
        density = None
        if scene.frames:
            density = point_count_per_image(scene)

        # perception metrics
        difps_result = None
        if not skip_difps:
            difps_result = _run_difps(opts, scene, stage_error)
        lpips_result = None
        if not skip_lpips:
            lpips_path = opts.get("lpips")
            if lpips_path is None:
                stage_error("lpips", "no scores file given; pass --lpips FILE or --skip-lpips")
            else:
                try:
                    lpips_result = ingest_lpips(lpips_path)
                except ReconEvalError as exc:
                    stage_error("lpips", str(exc))

        per_frame = _per_frame_rows(scene, rendered, recomputed, native, difps_result, lpips_result)
        metrics_dir = out_dir / "metrics"
        metrics_dir.mkdir(parents=True, exist_ok=True)
        (metrics_dir / "per_frame.json").write_text(
            json.dumps(per_frame, indent=2, sort_keys=True) + "\n"
        )

        row = VideoMetrics(
            video_id=video_id,
            image_throughput_pct=throughput,
            reprojection_error_recomputed_px=video_recomputed,
            reprojection_error_native_px=video_native,
            point_count_per_image=density,
            lpips=lpips_result.mean if lpips_result else None,
            difps=difps_result.mean if difps_result else None,
            frame_count=len(scene.frames),
        )
        write_report_bundle(build_report([row]), out_dir)

        if frames_dir:
            _write_lpips_pairs(scene, renders_dir, Path(frames_dir), out_dir)

        (out_dir / "errors.json").write_text(json.dumps(errors, indent=2) + "\n")
    if errors:
        print(f"evaluation finished with {len(errors)} stage failure(s); see errors.json", file=sys.stderr)
        return EXIT_STAGE
    print(f"evaluated {len(scene.frames)} frames; report under {out_dir}")
    return EXIT_OK


def _run_difps(opts: Options, scene, stage_error):
    render_index = opts.get("render_features")
    original_index = opts.get("original_features")
    if render_index is None or original_index is None:
        stage_error(
            "difps",
            "feature indexes missing; pass --render-features and --original-features "
            "(or --skip-difps)",
        )
        return None
    try:
        render_store = FeatureStore.from_index(render_index)
        original_store = FeatureStore.from_index(original_index)
        names = {fid: frame.name for fid, frame in scene.frames.items()}
        result = difps_for_scene(names, names, render_store, original_store)
    except ReconEvalError as exc:
        stage_error("difps", str(exc))
        return None
    for fid in result.missing:
        stage_error("difps", "feature missing for frame", fid, scene.frames[fid].name)
    return result


def _per_frame_rows(scene, rendered, recomputed, native, difps_result, lpips_result):
    rows = []
    for fid in sorted(scene.frames):
        frame = scene.frames[fid]
        render = rendered.get(fid)
        rows.append(
            {
                "frame_id": fid,
                "name": frame.name,
                "reprojection_error_recomputed_px": recomputed.get(fid),
                "reprojection_error_native_px": native.get(fid),
                "difps": difps_result.per_frame.get(fid) if difps_result else None,
                "lpips": lpips_result.per_render.get(frame.name) if lpips_result else None,
                "points_rendered": render.points_rendered if render else None,
                "points_behind_camera": render.points_behind_camera if render else None,
                "coverage_fraction": render.coverage_fraction if render else None,
            }
        )
    return rows


def _write_lpips_pairs(scene, renders_dir: Path, frames_dir: Path, out_dir: Path):
    """Template pairing renders with originals for the external LPIPS scorer.

    Render paths are relative to the pairs file's directory; original paths are
    written as given on the command line.
    """
    pairs = []
    for fid in sorted(scene.frames):
        name = scene.frames[fid].name
        render_path = renders_dir / name
        original_path = frames_dir / name
        if render_path.is_file() and original_path.is_file():
            pairs.append(
                {
                    "render": render_path.relative_to(out_dir).as_posix(),
                    "original": str(original_path),
                }
            )
    (out_dir / "lpips_pairs.json").write_text(
        json.dumps({"pairs": pairs}, indent=2) + "\n"
    )


# ---------------------------------------------------------------------------
# synth


def cmd_synth(args: argparse.Namespace) -> int:
    opts = Options(args)
    out_dir = Path(opts.get("out"))
    model = CameraModel.from_name(opts.get("camera_model", "pinhole"))
    offset = opts.get("offset")
    spec = SynthSpec(
        num_points=opts.get("points", 100, int),
        num_cameras=opts.get("cameras", 3, int),
        model=model,
        noise_sigma=opts.get("noise_sigma", 0.0, float),
        noise_offset=_parse_offset(offset) if offset else None,
        seed=opts.get("seed", 0, int),
    )
    text = opts.get("model_format", "binary") == "text"

    with OutputLock(out_dir):
        bundle = generate_bundle(spec)
        scene = bundle.scene
        serialize_sparse_model(bundle, out_dir / "sparse", text=text)
        entries = tuple(
            ManifestEntry(fid - 1, scene.frames[fid].name, True) for fid in sorted(scene.frames)
        )
        save_manifest(
            DatasetManifest(f"synth-{spec.seed}", 1, entries), out_dir / "manifest.json"
        )
        if args.render_originals:
            frames_dir = out_dir / "frames"
            frames_dir.mkdir(parents=True, exist_ok=True)
            for fid, result in render_frames(scene).items():
                if isinstance(result, RenderError):
                    raise result
                save_render_png(result, frames_dir / scene.frames[fid].name)
        if args.emit_dense:
            dense_dir = out_dir / "dense"
            dense_dir.mkdir(parents=True, exist_ok=True)
            positions = np.array([p.position for p in scene.points.values()], dtype=np.float64)
            colors = np.array([p.color for p in scene.points.values()], dtype=np.uint8)
            write_ply(dense_dir / "points.ply", positions.reshape(-1, 3), colors.reshape(-1, 3))
            save_generic_poses(scene, dense_dir / "poses.json")
        opts.echo(out_dir)
        print(f"synthetic scene ({len(scene.points)} points, {len(scene.frames)} frames) -> {out_dir}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# report


def cmd_report(args: argparse.Namespace) -> int:
    opts = Options(args)
    out_dir = Path(opts.get("out"))
    rows = []
    for path in args.inputs:
        rows.extend(load_report_rows(path))
    with OutputLock(out_dir):
        report = build_report(rows, weight_by_frames=bool(args.weight_by_frames))
        write_report_bundle(report, out_dir)
        opts.echo(out_dir)
        print(f"aggregated {len(rows)} row(s) -> {out_dir}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="reconeval",
        description="Evaluate 3D reconstructions of fly-over maritime video",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract-frames", help="sample frames from a video or frame directory")
    p.add_argument("input", help="video file or directory of pre-extracted frames")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--stride", type=int, default=None, help="keep every Nth frame (default 1)")
    p.add_argument(
        "--exclude", action="append", metavar="START:STOP",
        help="half-open source index range to mark excluded (repeatable)",
    )
    p.add_argument("--video-id", dest="video_id", default=None)
    p.add_argument("--config", default=None)
    p.set_defaults(func=cmd_extract_frames)

    p = sub.add_parser("preprocess", help="apply a pre-processing method to a frame set")
    p.add_argument(
        "method", choices=["colmap-filter", "contrast", "wb-sky", "wb-water"],
    )
    p.add_argument("--frames", required=True, help="directory of input frames")
    p.add_argument("--out", required=True)
    p.add_argument("--manifest", default=None, help="dataset manifest of the frame set")
    p.add_argument("--model-dir", dest="model_dir", default=None, help="sparse model (colmap-filter)")
    p.add_argument("--masks", default=None, help="mask manifest JSON (wb-sky / wb-water)")
    p.add_argument("--alpha", type=float, default=None, help="contrast gain (default 1.8)")
    p.add_argument("--config", default=None)
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("evaluate", help="render reprojections and compute the metric report")
    p.add_argument("--model-dir", dest="model_dir", default=None, help="sparse model directory")
    p.add_argument("--ply", default=None, help="dense point cloud (PLY)")
    p.add_argument("--poses", default=None, help="poses JSON for the dense cloud")
    p.add_argument("--frames", default=None, help="directory of original frames")
    p.add_argument("--manifest", default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--video-id", dest="video_id", default=None)
    p.add_argument("--splat-radius", dest="splat_radius", type=float, default=None)
    p.add_argument("--background", default=None, metavar="R,G,B")
    p.add_argument("--workers", type=int, default=None, help="render parallelism")
    p.add_argument("--render-features", dest="render_features", default=None,
                   help="feature index JSON for rendered images")
    p.add_argument("--original-features", dest="original_features", default=None,
                   help="feature index JSON for original frames")
    p.add_argument("--lpips", default=None, help="LPIPS scores JSON")
    p.add_argument("--skip-difps", dest="skip_difps", action="store_const", const=True, default=None)
    p.add_argument("--skip-lpips", dest="skip_lpips", action="store_const", const=True, default=None)
    p.add_argument("--config", default=None)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("synth", help="generate a synthetic ground-truth scene")
    p.add_argument("--out", required=True)
    p.add_argument("--points", type=int, default=None)
    p.add_argument("--cameras", type=int, default=None)
    p.add_argument("--camera-model", dest="camera_model", default=None,
                   choices=["simple_pinhole", "pinhole", "simple_radial", "radial"])
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--noise-sigma", dest="noise_sigma", type=float, default=None)
    p.add_argument("--offset", default=None, metavar="DX,DY")
    p.add_argument("--model-format", dest="model_format", default=None, choices=["binary", "text"])
    p.add_argument("--render-originals", action="store_true",
                   help="also render each frame as a pseudo-original image")
    p.add_argument("--emit-dense", action="store_true",
                   help="also write the scene as a PLY cloud + poses JSON")
    p.add_argument("--config", default=None)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("report", help="re-aggregate per-video report JSON files")
    p.add_argument("inputs", nargs="+", help="report.json files from evaluate runs")
    p.add_argument("--out", required=True)
    p.add_argument("--weight-by-frames", dest="weight_by_frames", action="store_true")
    p.add_argument("--config", default=None)
    p.set_defaults(func=cmd_report)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ReconEvalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
