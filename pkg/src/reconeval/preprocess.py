"""Pre-processing of extracted frame sets before reconstruction.

Three strategies are implemented:

* ``colmap_filter``: keep only frames that a sparse SfM run registered.
* ``contrast_adjust``: fixed per-pixel gain, out = clamp(round(alpha * in)).
* ``white_balance``: per-channel gain aligning each frame's sky or water
  region mean to the cross-frame mean of those region means. Frames without
  the requested region are discarded.

Gains are applied in floating point with a final round-half-up and clamp to
[0, 255] so repeated application stays a near-identity.
"""

from __future__ import annotations

import enum
import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from PIL import Image

from .errors import EmptyResultError, InvalidInputError, MaskError
from .io.manifest import DatasetManifest
from .io.sparse import ModelBundle, SourceKind

__all__ = [
    "Region",
    "RegionMask",
    "RegionStats",
    "MaskedFrame",
    "WhiteBalanceResult",
    "load_mask_png",
    "save_mask_png",
    "load_mask_manifest",
    "save_mask_manifest",
    "region_stats",
    "contrast_adjust",
    "white_balance",
    "colmap_filter",
]

logger = logging.getLogger(__name__)

DEFAULT_CONTRAST_ALPHA = 1.8


class Region(enum.Enum):
    SKY = "sky"
    WATER = "water"


@dataclass(frozen=True)
class RegionMask:
    """Binary raster marking one background region of one frame."""

    frame: str
    region: Region
    mask: np.ndarray  # (H, W) bool
    score: Optional[float] = None

    def __post_init__(self):
        mask = np.asarray(self.mask, dtype=bool)
        if mask.ndim != 2:
            raise MaskError(f"mask for {self.frame!r} must be 2-D, got shape {mask.shape}")
        if not mask.any():
            raise MaskError(f"mask for {self.frame!r} is empty")
        mask.setflags(write=False)
        object.__setattr__(self, "mask", mask)


@dataclass(frozen=True)
class RegionStats:
    """Per-channel region means of one frame plus the region pixel count."""

    means: Tuple[float, float, float]
    pixel_count: int


@dataclass(frozen=True)
class MaskedFrame:
    """An image paired with the region mask found for it (None if not found)."""

    name: str
    image: np.ndarray  # (H, W, 3) uint8
    mask: Optional[RegionMask] = None


@dataclass(frozen=True)
class WhiteBalanceResult:
    region: Region
    target_means: Tuple[float, float, float]
    images: Dict[str, np.ndarray]          # name -> normalized (H, W, 3) uint8
    scales: Dict[str, Tuple[float, float, float]]
    frame_means: Dict[str, Tuple[float, float, float]]
    discarded: Tuple[str, ...]


def load_mask_png(path, frame: str, region: Region, score: Optional[float] = None) -> RegionMask:
    """Load an 8-bit mask PNG (255 = region, 0 = background)."""
    with Image.open(path) as img:
        raw = np.asarray(img.convert("L"))
    values = np.unique(raw)
    if not np.isin(values, (0, 255)).all():
        raise MaskError(
            f"{path}: mask must contain only 0 and 255, found values {values[:8].tolist()}"
        )
    return RegionMask(frame, region, raw == 255, score)


def save_mask_png(mask: RegionMask, path) -> None:
    raw = np.where(mask.mask, 255, 0).astype(np.uint8)
    Image.fromarray(raw, mode="L").save(Path(path), format="PNG")


def load_mask_manifest(path) -> List[dict]:
    """Read the mask manifest JSON; paths stay relative to the manifest file."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise MaskError(f"{path}: {exc}") from exc
    if not isinstance(doc, list):
        raise MaskError(f"{path}: mask manifest must be a JSON array")
    entries = []
    for item in doc:
        try:
            entry = {
                "frame": str(item["frame"]),
                "region": Region(item["region"]),
                "mask_path": str(item["mask_path"]),
            }
        except (KeyError, TypeError, ValueError) as exc:
            raise MaskError(f"{path}: malformed mask entry {item!r} ({exc})") from exc
        entry["score"] = float(item["score"]) if "score" in item and item["score"] is not None else None
        entries.append(entry)
    return entries


def save_mask_manifest(entries: Sequence[dict], path) -> None:
    doc = []
    for e in entries:
        item = {
            "frame": e["frame"],
            "region": e["region"].value if isinstance(e["region"], Region) else str(e["region"]),
            "mask_path": e["mask_path"],
        }
        if e.get("score") is not None:
            item["score"] = e["score"]
        doc.append(item)
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")


def load_region_masks(manifest_path, region: Region) -> Dict[str, RegionMask]:
    """Load every mask of one region listed by a mask manifest, keyed by frame name."""
    manifest_path = Path(manifest_path)
    masks: Dict[str, RegionMask] = {}
    for entry in load_mask_manifest(manifest_path):
        if entry["region"] is not region:
            continue
        mask_path = Path(entry["mask_path"])
        if not mask_path.is_absolute():
            mask_path = manifest_path.parent / mask_path
        masks[entry["frame"]] = load_mask_png(mask_path, entry["frame"], region, entry["score"])
    return masks


def _check_image(image: np.ndarray) -> np.ndarray:
    image = np.asarray(image)
    if image.ndim != 3 or image.shape[2] != 3 or image.dtype != np.uint8:
        raise InvalidInputError(
            f"expected an (H, W, 3) uint8 image, got shape {image.shape} dtype {image.dtype}"
        )
    return image


def region_stats(image: np.ndarray, mask: RegionMask) -> RegionStats:
    """Arithmetic per-channel mean over the mask's region pixels."""
    image = _check_image(image)
    if mask.mask.shape != image.shape[:2]:
        raise MaskError(
            f"mask shape {mask.mask.shape} does not match image shape {image.shape[:2]}"
        )
    selected = image[mask.mask].astype(np.float64)
    means = selected.mean(axis=0)
    return RegionStats(tuple(float(m) for m in means), int(selected.shape[0]))


def _quantize(values: np.ndarray) -> np.ndarray:
    """Round half up and clamp to 8-bit range."""
    return np.clip(np.floor(values + 0.5), 0, 255).astype(np.uint8)


def contrast_adjust(image: np.ndarray, alpha: float = DEFAULT_CONTRAST_ALPHA) -> np.ndarray:
    """Scale every channel value by ``alpha`` with rounding and clamping."""
    if not alpha > 0:
        raise InvalidInputError(f"alpha must be positive, got {alpha}")
    image = _check_image(image)
    return _quantize(image.astype(np.float64) * alpha)


def white_balance(frames: Sequence[MaskedFrame], region: Region) -> WhiteBalanceResult:
    """Normalize each frame so its region mean matches the cross-frame mean.

    The target mean per channel is the unweighted mean of the surviving frames'
    region means. Frames lacking a mask of the requested region are discarded
    and do not contribute to the target.
    """
    survivors: List[Tuple[MaskedFrame, RegionStats]] = []
    discarded: List[str] = []
    for frame in frames:
        if frame.mask is None or frame.mask.region is not region:
            discarded.append(frame.name)
            continue
        survivors.append((frame, region_stats(frame.image, frame.mask)))
    if not survivors:
        raise EmptyResultError(
            f"no frame carries a {region.value!r} mask; nothing to normalize"
        )

    per_frame = np.array([stats.means for _, stats in survivors], dtype=np.float64)
    target = per_frame.mean(axis=0)

    images: Dict[str, np.ndarray] = {}
    scales: Dict[str, Tuple[float, float, float]] = {}
    frame_means: Dict[str, Tuple[float, float, float]] = {}
    for (frame, stats), means in zip(survivors, per_frame):
        scale = np.empty(3, dtype=np.float64)
        for c in range(3):
            if means[c] > 0:
                scale[c] = target[c] / means[c]
            elif target[c] == 0:
                scale[c] = 1.0
            else:
                raise InvalidInputError(
                    f"frame {frame.name!r} has zero {region.value} mean in channel {c} "
                    f"but the target is nonzero; gain is undefined"
                )
        images[frame.name] = _quantize(frame.image.astype(np.float64) * scale)
        scales[frame.name] = tuple(float(s) for s in scale)
        frame_means[frame.name] = tuple(float(m) for m in means)

    return WhiteBalanceResult(
        region, tuple(float(t) for t in target), images, scales, frame_means, tuple(discarded)
    )


def colmap_filter(manifest: DatasetManifest, sparse_bundle: ModelBundle) -> DatasetManifest:
    """Mark included exactly the manifest frames the sparse reconstruction registered."""
    if sparse_bundle.source_kind is not SourceKind.SPARSE_SFM:
        raise InvalidInputError(
            f"registration filtering needs a sparse SfM bundle, got {sparse_bundle.source_kind.value}"
        )
    registered = {frame.name for frame in sparse_bundle.scene.frames.values()}
    manifest_names = {entry.name for entry in manifest.frames}
    for name in sorted(registered - manifest_names):
        logger.warning("registered image %r does not appear in the manifest", name)
    return manifest.with_included(registered)
