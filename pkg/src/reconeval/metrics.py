"""Perception and bookkeeping metrics plus their file contracts.

DiFPS is the cosine similarity of per-image global feature vectors between a
reprojected render and its original frame; features are produced externally
and ingested from "DFV1" files. LPIPS scores are likewise computed externally
and ingested from a JSON scores file. Throughput and point density are plain
arithmetic over the scene.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Tuple

import numpy as np

from .errors import DegenerateFeatureError, MetricsError
from .scene import ReconstructionScene

__all__ = [
    "FeatureVector",
    "FeatureStore",
    "DifpsResult",
    "LpipsResult",
    "difps",
    "difps_for_scene",
    "image_throughput",
    "point_count_per_image",
    "ingest_lpips",
    "read_feature_file",
    "write_feature_file",
    "write_feature_index",
]

FEATURE_MAGIC = b"DFV1"


@dataclass(frozen=True)
class FeatureVector:
    """A per-image global embedding."""

    name: str
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 1 or values.size < 1:
            raise MetricsError(f"feature for {self.name!r} must be a non-empty 1-D vector")
        if not np.all(np.isfinite(values)):
            raise MetricsError(f"feature for {self.name!r} contains non-finite values")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def dim(self) -> int:
        return int(self.values.size)


def difps(f1: FeatureVector, f2: FeatureVector) -> float:
    """Cosine similarity of two image feature vectors, in [-1, 1]."""
    if f1.dim != f2.dim:
        raise MetricsError(f"feature dims differ: {f1.dim} vs {f2.dim}")
    n1 = float(np.linalg.norm(f1.values))
    n2 = float(np.linalg.norm(f2.values))
    if n1 == 0.0 or n2 == 0.0:
        which = f1.name if n1 == 0.0 else f2.name
        raise DegenerateFeatureError(f"feature for {which!r} has zero norm")
    return float(np.dot(f1.values, f2.values) / (n1 * n2))


def image_throughput(included: int, offered: int) -> float:
    """Percentage of offered frames the reconstruction actually used."""
    if offered < 1:
        raise MetricsError(f"offered frame count must be >= 1, got {offered}")
    if not 0 <= included <= offered:
        raise MetricsError(f"included count {included} outside [0, {offered}]")
    return 100.0 * included / offered


def point_count_per_image(scene: ReconstructionScene) -> float:
    """Reconstructed points divided by registered frames."""
    if not scene.frames:
        raise MetricsError("scene has no registered frames")
    return len(scene.points) / len(scene.frames)


# ---------------------------------------------------------------------------
# feature files: 4-byte magic, u32 LE dim, dim x f32 LE


def read_feature_file(path) -> np.ndarray:
    path = Path(path)
    data = path.read_bytes()
    if len(data) < 8 or data[:4] != FEATURE_MAGIC:
        raise MetricsError(f"{path}: not a DFV1 feature file")
    (dim,) = struct.unpack_from("<I", data, 4)
    expected = 8 + 4 * dim
    if dim < 1 or len(data) != expected:
        raise MetricsError(
            f"{path}: declared dim {dim} does not match file size {len(data)}"
        )
    return np.frombuffer(data, dtype="<f4", count=dim, offset=8).astype(np.float32)


def write_feature_file(path, values) -> None:
    values = np.asarray(values, dtype="<f4").reshape(-1)
    if values.size < 1:
        raise MetricsError("feature vector must be non-empty")
    Path(path).write_bytes(FEATURE_MAGIC + struct.pack("<I", values.size) + values.tobytes())


def write_feature_index(path, extractor: dict, features: Mapping[str, str]) -> None:
    """Write the sidecar index: extractor identity plus name -> feature path."""
    doc = {"extractor": dict(extractor), "features": dict(sorted(features.items()))}
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


class FeatureStore:
    """Feature vectors loaded from one index JSON, keyed by image name."""

    def __init__(self, extractor: dict, vectors: Dict[str, FeatureVector]):
        self.extractor = dict(extractor)
        self._vectors = dict(vectors)

    @classmethod
    def from_index(cls, index_path) -> "FeatureStore":
        index_path = Path(index_path)
        try:
            doc = json.loads(index_path.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise MetricsError(f"{index_path}: {exc}") from exc
        if not isinstance(doc, dict) or "features" not in doc:
            raise MetricsError(f"{index_path}: index must be an object with a 'features' map")
        extractor = doc.get("extractor", {})
        declared_dim = extractor.get("dim")
        vectors: Dict[str, FeatureVector] = {}
        for name, rel in doc["features"].items():
            fpath = Path(rel)
            if not fpath.is_absolute():
                fpath = index_path.parent / fpath
            values = read_feature_file(fpath)
            if declared_dim is not None and values.size != int(declared_dim):
                raise MetricsError(
                    f"{fpath}: dim {values.size} does not match index dim {declared_dim}"
                )
            vectors[name] = FeatureVector(name, values)
        return cls(extractor, vectors)

    def get(self, name: str) -> Optional[FeatureVector]:
        return self._vectors.get(name)

    def __len__(self) -> int:
        return len(self._vectors)

    def names(self) -> Tuple[str, ...]:
        return tuple(self._vectors)


@dataclass(frozen=True)
class DifpsResult:
    per_frame: Dict[int, float]
    mean: float
    missing: Tuple[int, ...]  # frames skipped because a feature was absent


def difps_for_scene(
    renders: Mapping[int, str],
    originals: Mapping[int, str],
    render_features: FeatureStore,
    original_features: Optional[FeatureStore] = None,
) -> DifpsResult:
    """Per-frame DiFPS between render and original feature vectors, plus the mean.

    ``renders`` and ``originals`` map frame id to the image name under which the
    extractor indexed each file. Frames missing a feature on either side are
    reported in ``missing`` and excluded from the mean.
    """
    if original_features is None:
        original_features = render_features
    common = sorted(set(renders) & set(originals))
    if not common:
        raise MetricsError("no frame appears in both the render and original maps")
    per_frame: Dict[int, float] = {}
    missing: List[int] = []
    for fid in common:
        fr = render_features.get(renders[fid])
        fo = original_features.get(originals[fid])
        if fr is None or fo is None:
            missing.append(fid)
            continue
        per_frame[fid] = difps(fr, fo)
    if not per_frame:
        raise MetricsError(
            f"none of the {len(common)} paired frames has features on both sides"
        )
    mean = sum(per_frame.values()) / len(per_frame)
    return DifpsResult(per_frame, mean, tuple(missing))


@dataclass(frozen=True)
class LpipsResult:
    pairs: Tuple[Tuple[str, str, float], ...]  # (render, original, score)
    per_render: Dict[str, float]
    mean: float


def ingest_lpips(path) -> LpipsResult:
    """Load externally computed LPIPS pair scores; values must lie in [0, 1]."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise MetricsError(f"{path}: {exc}") from exc
    if not isinstance(doc, dict) or not isinstance(doc.get("pairs"), list):
        raise MetricsError(f"{path}: expected an object with a 'pairs' array")
    if not doc["pairs"]:
        raise MetricsError(f"{path}: scores file contains no pairs")
    pairs: List[Tuple[str, str, float]] = []
    per_render: Dict[str, float] = {}
    for item in doc["pairs"]:
        try:
            render = str(item["render"])
            original = str(item["original"])
            score = float(item["lpips"])
        except (KeyError, TypeError, ValueError) as exc:
            raise MetricsError(f"{path}: malformed pair {item!r} ({exc})") from exc
        if not 0.0 <= score <= 1.0:
            raise MetricsError(f"{path}: LPIPS {score} for {render!r} outside [0, 1]")
        pairs.append((render, original, score))
        per_render[render] = score
    mean = sum(p[2] for p in pairs) / len(pairs)
    return LpipsResult(tuple(pairs), per_render, mean)
